#include "secmec/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "secmec/errors.hpp"

namespace secmec {

void AuxiliaryState::validate() const {
  if (lambda.size() != beta.size()) throw DomainError("lambda and beta differ in length");
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (!(lambda[k] > 0.0) || !std::isfinite(lambda[k]))
      throw DomainError("lambda[" + std::to_string(k) + "] must be positive and finite");
    if (!std::isfinite(beta[k])) throw DomainError("beta[" + std::to_string(k) + "] is not finite");
  }
}

RatioTerms ratio_terms(const DecisionPoint& sol, const SystemParams& params) {
  if (sol.users.size() != params.users.size()) throw DomainError("point and system disagree on K");
  RatioTerms terms;
  for (std::size_t k = 0; k < sol.users.size(); ++k) {
    terms.bits.push_back(user_bits(sol.users[k], params.users[k], params));
    terms.energy.push_back(user_energy(sol.users[k], params.users[k], params).total);
  }
  return terms;
}

ResidualVector residual_from_terms(const RatioTerms& terms, const AuxiliaryState& aux,
                                   const SystemParams& params, LambdaRow form) {
  const std::size_t K = params.users.size();
  if (terms.bits.size() != K || terms.energy.size() != K || aux.size() != K) {
    throw DomainError("residual: size mismatch between terms, multipliers and system");
  }
  ResidualVector r;
  r.entries.resize(2 * K);
  double sq = 0.0;
  double scaled_sq = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    if (!(terms.energy[j] > 0.0)) {
      throw DomainError("residual: user " + std::to_string(j) + " consumes no energy");
    }
    const double w = params.users[j].weight;
    const double target = form == LambdaRow::Weighted ? w : 1.0;
    const double tb = aux.beta[j] * terms.energy[j] - w * terms.bits[j];
    const double tl = aux.lambda[j] * terms.energy[j] - target;
    r.entries[j] = tb;
    r.entries[j + K] = tl;
    sq += tb * tb + tl * tl;
    const double bit_scale = w * std::max(params.users[j].task_bits, 1.0);
    scaled_sq += (tb / bit_scale) * (tb / bit_scale) + (tl / target) * (tl / target);
  }
  r.norm = std::sqrt(sq);
  r.scaled_norm = std::sqrt(scaled_sq);
  return r;
}

ResidualVector residual_vector(const DecisionPoint& sol, const AuxiliaryState& aux,
                               const SystemParams& params, LambdaRow form) {
  return residual_from_terms(ratio_terms(sol, params), aux, params, form);
}

AuxiliaryState newton_target(const RatioTerms& terms, const SystemParams& params, LambdaRow form) {
  AuxiliaryState aux;
  for (std::size_t k = 0; k < params.users.size(); ++k) {
    if (!(terms.energy[k] > 0.0)) {
      throw DomainError("newton target: user " + std::to_string(k) + " consumes no energy");
    }
    const double w = params.users[k].weight;
    aux.lambda.push_back((form == LambdaRow::Weighted ? w : 1.0) / terms.energy[k]);
    aux.beta.push_back(w * terms.bits[k] / terms.energy[k]);
  }
  return aux;
}

AuxiliaryState fixed_point_aux(const DecisionPoint& sol, const SystemParams& params, LambdaRow form) {
  return newton_target(ratio_terms(sol, params), params, form);
}

AuxUpdate damped_aux_update(const AuxiliaryState& aux, const RatioTerms& current,
                            const InnerEvaluator& resolve, const SystemParams& params,
                            const BacktrackSettings& settings) {
  const double z = settings.sufficient_decrease;
  const double zeta = settings.shrink;
  if (!(z > 0.0 && z < 1.0)) throw DomainError("sufficient decrease z must lie in (0, 1)");
  if (!(zeta > 0.0 && zeta < 1.0)) throw DomainError("shrink factor must lie in (0, 1)");
  aux.validate();

  AuxUpdate out;
  out.residual_before = residual_from_terms(current, aux, params, settings.form);
  const AuxiliaryState target = newton_target(current, params, settings.form);
  const double old_norm = out.residual_before.scaled_norm;

  double best = std::numeric_limits<double>::infinity();
  double theta = 1.0;
  for (int l = 0; l <= settings.max_halvings; ++l, theta *= zeta) {
    AuxiliaryState cand;
    cand.lambda.resize(aux.size());
    cand.beta.resize(aux.size());
    for (std::size_t k = 0; k < aux.size(); ++k) {
      cand.lambda[k] = (1.0 - theta) * aux.lambda[k] + theta * target.lambda[k];
      cand.beta[k] = (1.0 - theta) * aux.beta[k] + theta * target.beta[k];
    }
    RatioTerms terms = resolve(cand);
    ++out.evaluations;
    ResidualVector after = residual_from_terms(terms, cand, params, settings.form);
    best = std::min(best, after.scaled_norm);
    if (after.scaled_norm <= (1.0 - z * theta) * old_norm) {
      out.aux = std::move(cand);
      out.step = theta;
      out.terms = std::move(terms);
      out.residual_after = std::move(after);
      return out;
    }
  }
  throw StallError(old_norm, best);
}

}  // namespace secmec
