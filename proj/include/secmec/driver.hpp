#pragma once

// Alternating solver: an inner successive-linearization loop over the convex
// subproblem for fixed ratio multipliers, and an outer damped Newton update
// of the multipliers. Also hosts the feasible initialization, the local-only
// and offload-only baselines, and an exhaustive grid oracle.

#include <string>
#include <vector>

#include "secmec/fractional.hpp"
#include "secmec/model.hpp"
#include "secmec/subproblem.hpp"

namespace secmec {

struct Tolerances {
  double residual = 1e-6;      // scaled |T| at which the outer loop stops
  double inner_change = 1e-7;  // relative subproblem-objective change ending the inner loop
  int max_outer = 50;
  int max_inner = 50;
};

struct AlgorithmOptions {
  Tolerances tol;
  LinearizationMode mode = LinearizationMode::Split;
  LambdaRow lambda_row = LambdaRow::Weighted;
  bool cheap_backtrack = false;  // score step candidates at the frozen inner solution
  bool offload_only = false;     // CPU frequencies pinned to zero
  // On a stalled line search, take the full step anyway when it raises the
  // weighted CE. The inner solution can jump as beta crosses a breakpoint,
  // which the residual test alone rejects.
  bool stall_restart = true;
  BacktrackSettings backtrack;
  SolverSettings solver;
  double time_floor = kTimeFloor;
};

enum class Termination { ResidualConverged, MaxOuterIters, Infeasible, Stalled };

std::string to_string(Termination t);

struct UserReport {
  double time = 0.0;
  double freq = 0.0;
  double offload_bits = 0.0;
  double tx_energy = 0.0;
  double power = 0.0;      // tx_energy / time, 0 when not offloading
  double ce = 0.0;         // unweighted bits per joule
  bool offloading = false; // false for pinned users and users left at the time floor
  bool pinned_local = false;
};

struct OuterRecord {
  int iteration = 0;
  double residual = 0.0;   // scaled |T|
  double raw_residual = 0.0;
  double step = 0.0;       // accepted theta (0 for the initial record)
  bool restart = false;    // full step taken after a stalled line search
  std::vector<double> lambda;
  std::vector<double> beta;
  double ce = 0.0;         // exact model objective at this iterate
  DecisionPoint point;     // all users
};

struct InnerRecord {
  int iteration = 0;
  double objective = 0.0;
  double displacement = 0.0;
};

struct SolveReport {
  double final_ce = 0.0;
  std::vector<UserReport> per_user;
  DecisionPoint point;
  std::vector<OuterRecord> outer_trace;
  std::vector<std::vector<InnerRecord>> inner_traces;
  Termination termination = Termination::ResidualConverged;
  std::string message;

  int outer_iterations() const noexcept {
    return outer_trace.empty() ? 0 : static_cast<int>(outer_trace.size()) - 1;
  }
};

struct InitialState {
  DecisionPoint point;
  AuxiliaryState aux;
  std::vector<bool> local_only;  // users that cannot offload securely
};

/// Feasible starting point and multipliers. Throws InfeasibleInstance with
/// the best achievable bit count when some user cannot meet its task size.
InitialState initialize(const SystemParams& params, const AlgorithmOptions& options = {});

struct InnerResult {
  DecisionPoint point;
  std::vector<InnerRecord> trace;  // entry 0 is the start point under its own expansion
  bool converged = false;
  int iterations = 0;
};

/// Successive linearization for fixed multipliers. Every user of params must
/// be an offloading candidate with times above the floor in start.
InnerResult inner_sca(const SystemParams& params, const AuxiliaryState& aux, const DecisionPoint& start,
                      const AlgorithmOptions& options = {});

SolveReport run_algorithm1(const SystemParams& params, const AlgorithmOptions& options = {});

struct BaselineResult {
  double total_ce = 0.0;
  std::vector<double> per_user_ce;
  std::vector<bool> feasible;
  DecisionPoint point;
  bool all_feasible() const;
};

/// Closed form: f = C L / T, no offloading.
BaselineResult baseline_local_only(const SystemParams& params);

/// Same machinery with every CPU frequency pinned to zero.
SolveReport baseline_offload_only(const SystemParams& params, AlgorithmOptions options = {});

struct OracleGrid {
  int time_points = 200;
  int freq_points = 200;
  int energy_points = 200;
};

struct OracleResult {
  double ce = 0.0;
  DecisionPoint point;
};

/// Exhaustive search of the exact model over uniform grids of time in
/// [0, T], frequency in [0, min(f_max, (E/(eps T))^(1/3))] and transmit
/// energy in [0, E] per user, with the shared deadline enforced exactly.
OracleResult brute_force_oracle(const SystemParams& params, const OracleGrid& grid = {});

struct BitsCapacity {
  double bits = 0.0;
  UserDecision decision;
};

/// Most bits one user can deliver within its energy budget when its
/// uplink time is capped at time_cap.
BitsCapacity max_achievable_bits(const UserParams& user, const SystemParams& params, double time_cap,
                                 bool allow_local = true);

}  // namespace secmec
