#pragma once

// Outer sum-of-ratios layer. For multipliers (lambda, beta) the inner problem
// maximizes sum_k lambda_k (w_k R_k - beta_k E_k); at the optimum of the
// original ratio problem the multipliers satisfy lambda_k = w_k / E_k and
// beta_k = w_k R_k / E_k. The residual T measures the distance from that
// fixed point and a damped Newton iteration drives it to zero.

#include <cstddef>
#include <functional>
#include <vector>

#include "secmec/model.hpp"

namespace secmec {

struct AuxiliaryState {
  std::vector<double> lambda;  // > 0
  std::vector<double> beta;    // finite

  std::size_t size() const noexcept { return lambda.size(); }
  void validate() const;
};

/// Bits R_k and energy E_k of each user at an inner solution.
struct RatioTerms {
  std::vector<double> bits;
  std::vector<double> energy;
};

/// Form of the lambda rows of T.
enum class LambdaRow {
  Weighted,  // lambda_j E_j - w_j  (consistent with lambda = w / E)
  Unit,      // lambda_j E_j - 1    (printed form; equal to Weighted when w = 1)
};

struct ResidualVector {
  std::vector<double> entries;  // 2K: beta rows first, then lambda rows
  double norm = 0.0;            // Euclidean norm of entries
  double scaled_norm = 0.0;     // beta rows / (w L), lambda rows / w
};

RatioTerms ratio_terms(const DecisionPoint& sol, const SystemParams& params);

ResidualVector residual_from_terms(const RatioTerms& terms, const AuxiliaryState& aux,
                                   const SystemParams& params, LambdaRow form = LambdaRow::Weighted);

/// T evaluated at an inner solution. Throws DomainError for a user with E = 0.
ResidualVector residual_vector(const DecisionPoint& sol, const AuxiliaryState& aux,
                               const SystemParams& params, LambdaRow form = LambdaRow::Weighted);

/// Newton target (w / E, w R / E), or (1 / E, w R / E) for the Unit form.
AuxiliaryState newton_target(const RatioTerms& terms, const SystemParams& params,
                             LambdaRow form = LambdaRow::Weighted);

/// Multipliers at which T vanishes for the given inner solution.
AuxiliaryState fixed_point_aux(const DecisionPoint& sol, const SystemParams& params,
                               LambdaRow form = LambdaRow::Weighted);

struct BacktrackSettings {
  double sufficient_decrease = 1e-4;  // z
  double shrink = 0.5;                // zeta
  int max_halvings = 8;               // l_max
  LambdaRow form = LambdaRow::Weighted;
};

/// Re-solves the inner problem at candidate multipliers and reports its (R, E).
using InnerEvaluator = std::function<RatioTerms(const AuxiliaryState&)>;

struct AuxUpdate {
  AuxiliaryState aux;
  double step = 0.0;  // accepted theta
  RatioTerms terms;   // (R, E) at the accepted candidate
  ResidualVector residual_before;
  ResidualVector residual_after;
  int evaluations = 0;
};

/// Tries theta = 1, zeta, zeta^2, ..., zeta^l_max and accepts the first step
/// whose scaled residual satisfies |T_new| <= (1 - z theta) |T_old|.
/// Throws StallError when none qualifies.
AuxUpdate damped_aux_update(const AuxiliaryState& aux, const RatioTerms& current,
                            const InnerEvaluator& resolve, const SystemParams& params,
                            const BacktrackSettings& settings = {});

}  // namespace secmec
