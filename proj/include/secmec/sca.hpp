#pragma once

// First-order expansion of the two entropy terms in the secrecy bits around
// the current iterate. The expansion is exact at the expansion point and,
// because the entropy function is positively homogeneous, its tangent plane
// passes through the origin.

#include <vector>

#include "secmec/model.hpp"

namespace secmec {

inline constexpr double kTimeFloor = 1e-9;

struct ExpansionTerms {
  double time = 0.0;         // t0
  double legit = 0.0;        // N0
  double eve = 0.0;          // tau0
  double legit_time = 0.0;   // d/dt of entropy(N, t) at the point
  double eve_time = 0.0;     // d/dt of entropy(tau, t) at the point
  double offset = 0.0;       // entropy(N0, t0) - entropy(tau0, t0)
  double legit_slope = 0.0;  // t0 / (t0 + N0)
  double eve_slope = 0.0;    // t0 / (t0 + tau0)
};

struct LinearizationPoint {
  std::vector<ExpansionTerms> users;
};

/// Expansion of one user's terms at (t0, N0, tau0). Throws ExpansionError when
/// t0 <= time_floor.
ExpansionTerms expand_user(std::size_t user, double t0, double legit0, double eve0,
                           double time_floor = kTimeFloor);

LinearizationPoint make_linearization(const DecisionPoint& point, double time_floor = kTimeFloor);

/// Both entropy terms replaced by their tangent planes (scaled by bandwidth).
double linearized_secrecy_bits(double time, double legit, double eve, const ExpansionTerms& lin,
                               double bandwidth);

/// Convex-concave split: entropy(N, t) kept exact, only entropy(tau, t)
/// replaced by its tangent plane. Never exceeds the exact secrecy bits at
/// the same (t, N, tau).
double split_secrecy_bits(double time, double legit, double eve, const ExpansionTerms& lin,
                          double bandwidth);

}  // namespace secmec
