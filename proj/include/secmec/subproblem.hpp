#pragma once

// Convex inner problem for fixed ratio multipliers and a fixed expansion
// point, solved by a logarithmic-barrier method (Phase I for a strictly
// feasible start, damped Newton centering, geometric increase of the
// barrier weight). Variables per user: time, CPU frequency, the two
// SNR-energy auxiliaries and the transmit energy.

#include <string>
#include <vector>

#include "secmec/errors.hpp"
#include "secmec/fractional.hpp"
#include "secmec/model.hpp"
#include "secmec/sca.hpp"

namespace secmec {

/// Which entropy terms of the secrecy bits are replaced by tangent planes.
enum class LinearizationMode {
  Full,   // both terms, exactly as the printed subproblem: purely affine in (t, N, tau, e)
  Split,  // only entropy(tau, t); entropy(N, t) stays concave (convex-concave procedure)
};

/// Objective contribution of one user:
///   time*t + freq*f + legit*N + eve*tau + tx_energy*e - freq_cubed*f^3
///   + legit_entropy*entropy(N, t) + constant
struct UserObjective {
  double time = 0.0;
  double freq = 0.0;
  double legit = 0.0;
  double eve = 0.0;
  double tx_energy = 0.0;
  double freq_cubed = 0.0;
  double legit_entropy = 0.0;
  double constant = 0.0;
};

/// time*t + freq*f + legit*N + eve*tau + legit_entropy*entropy(N, t) + constant >= required
struct UserBitsRow {
  double time = 0.0;
  double freq = 0.0;
  double legit = 0.0;
  double eve = 0.0;
  double legit_entropy = 0.0;
  double constant = 0.0;
  double required = 0.0;
};

struct UserRows {
  UserObjective objective;
  UserBitsRow bits;
  double cubic_energy = 0.0;    // eps * T, energy row: cubic_energy f^3 + e + circuit_power t <= budget
  double circuit_power = 0.0;
  double energy_budget = 1.0;
  double ap_gain = 1.0;         // N <= ap_gain * e
  double eve_gain = 1.0;        // tau >= eve_gain * e
  double max_freq = 1.0;
  bool freq_fixed = false;      // frequency pinned to zero (offloading only)
};

struct SubproblemSpec {
  std::vector<UserRows> users;
  double deadline = 1.0;        // sum_k t_k <= deadline
  double time_floor = kTimeFloor;
};

struct AssembleOptions {
  LinearizationMode mode = LinearizationMode::Split;
  bool freeze_freq = false;
};

/// Builds the subproblem for the (reduced) system whose users are all
/// offloading candidates. Throws DomainError when some lambda <= 0.
SubproblemSpec assemble_p4(const SystemParams& params, const AuxiliaryState& aux,
                           const LinearizationPoint& lin, const AssembleOptions& options = {});

/// Value of the subproblem objective at a point (real units).
double p4_objective(const SubproblemSpec& spec, const DecisionPoint& point);

/// Left side of a user's bits row at a point.
double p4_bits(const UserRows& rows, const UserDecision& d);

struct SolverSettings {
  double tol_kkt = 1e-8;   // relative to the objective scale
  double tol_feas = 1e-9;
  int max_iter = 200;      // Newton steps per phase
};

struct SubproblemSolution {
  DecisionPoint point;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double feas_residual = 0.0;
  int iterations = 0;
  int phase1_iterations = 0;
  double barrier_weight = 0.0;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, SubproblemSolution best)
      : Error(what), best_(std::move(best)) {}
  const SubproblemSolution& best() const noexcept { return best_; }

 private:
  SubproblemSolution best_;
};

/// Solves the subproblem; start (if given) seeds Phase I. Throws
/// SubproblemInfeasible or NoConvergence.
SubproblemSolution solve_p4(const SubproblemSpec& spec, const SolverSettings& settings = {},
                            const DecisionPoint* start = nullptr);

struct KktReport {
  double stationarity = 0.0;       // |grad f - sum mu grad g|_inf, relative
  double primal_infeasibility = 0.0;
  double complementarity = 0.0;    // max mu_i |g_i|, relative
  std::vector<double> multipliers; // one per row, nonnegative
  std::vector<std::string> rows;   // row names, aligned with multipliers
  std::vector<bool> active;        // normalized slack below active_tol (reporting only)

  double worst() const noexcept;
};

/// Independent optimality certificate. Multipliers come from a nonnegative
/// least-squares fit of stationarity and complementarity over every row; the
/// barrier's own multipliers are not consulted.
KktReport verify_kkt(const SubproblemSpec& spec, const SubproblemSolution& sol,
                     double active_tol = 1e-5);

}  // namespace secmec
