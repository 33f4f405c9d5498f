#include "secmec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "secmec/entropy.hpp"
#include "secmec/errors.hpp"

namespace secmec {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " is not finite");
}

}  // namespace

double SystemParams::rate_bandwidth() const noexcept {
  return log2_rates ? bandwidth / std::numbers::ln2 : bandwidth;
}

void SystemParams::validate() const {
  auto fail = [](const std::string& m) { throw DomainError(m); };
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) fail("bandwidth must be positive");
  if (!(deadline > 0.0) || !std::isfinite(deadline)) fail("deadline must be positive");
  if (!(circuit_power >= 0.0) || !std::isfinite(circuit_power)) fail("circuit power must be >= 0");
  if (users.empty()) fail("at least one user is required");
  for (std::size_t k = 0; k < users.size(); ++k) {
    const UserParams& u = users[k];
    const std::string who = "user " + std::to_string(k) + ": ";
    if (!(u.weight > 0.0) || !std::isfinite(u.weight)) fail(who + "weight must be positive");
    if (!(u.task_bits >= 0.0) || !std::isfinite(u.task_bits)) fail(who + "task bits must be >= 0");
    if (!(u.cycles_per_bit > 0.0) || !std::isfinite(u.cycles_per_bit))
      fail(who + "cycles per bit must be positive");
    if (!(u.cpu_coeff > 0.0) || !std::isfinite(u.cpu_coeff)) fail(who + "CPU coefficient must be positive");
    if (!(u.max_freq > 0.0) || !std::isfinite(u.max_freq)) fail(who + "max frequency must be positive");
    if (!(u.energy_budget > 0.0) || !std::isfinite(u.energy_budget))
      fail(who + "energy budget must be positive");
    if (!(u.ap_gain > 0.0) || !std::isfinite(u.ap_gain)) fail(who + "AP gain must be positive");
    if (!(u.eve_gain > 0.0) || !std::isfinite(u.eve_gain)) fail(who + "eavesdropper gain must be positive");
  }
}

double secrecy_bits(double time, double tx_energy, const UserParams& user, double bandwidth) {
  require_finite(time, "offload time");
  require_finite(tx_energy, "transmit energy");
  if (time < 0.0 || tx_energy < 0.0) throw DomainError("secrecy_bits: negative time or energy");
  if (time == 0.0 || tx_energy == 0.0) return 0.0;
  const double diff = entropy(user.ap_gain * tx_energy, time) - entropy(user.eve_gain * tx_energy, time);
  return bandwidth * std::max(diff, 0.0);
}

double local_bits(double freq, double deadline, double cycles_per_bit) {
  if (!(cycles_per_bit > 0.0)) throw DomainError("local_bits: cycles per bit must be positive");
  if (!(deadline > 0.0)) throw DomainError("local_bits: deadline must be positive");
  require_finite(freq, "CPU frequency");
  if (freq < 0.0) throw DomainError("local_bits: negative frequency");
  return deadline * freq / cycles_per_bit;
}

EnergyBreakdown user_energy(const UserDecision& d, const UserParams& user, const SystemParams& params) {
  require_finite(d.freq, "CPU frequency");
  require_finite(d.time, "offload time");
  require_finite(d.tx_energy, "transmit energy");
  EnergyBreakdown e;
  e.offload_tx = d.tx_energy;
  e.offload_circuit = params.circuit_power * d.time;
  e.local = user.cpu_coeff * d.freq * d.freq * d.freq * params.deadline;
  e.total = e.offload_tx + e.offload_circuit + e.local;
  return e;
}

std::vector<EnergyBreakdown> total_energy(const DecisionPoint& point, const SystemParams& params) {
  if (point.users.size() != params.users.size()) throw DomainError("point and system disagree on K");
  std::vector<EnergyBreakdown> out;
  out.reserve(point.users.size());
  for (std::size_t k = 0; k < point.users.size(); ++k) {
    out.push_back(user_energy(point.users[k], params.users[k], params));
  }
  return out;
}

double user_bits(const UserDecision& d, const UserParams& user, const SystemParams& params) {
  return secrecy_bits(d.time, d.tx_energy, user, params.rate_bandwidth()) +
         local_bits(d.freq, params.deadline, user.cycles_per_bit);
}

CeResult ce_objective(const DecisionPoint& point, const SystemParams& params) {
  if (point.users.size() != params.users.size()) throw DomainError("point and system disagree on K");
  CeResult r;
  r.per_user.resize(point.users.size(), 0.0);
  for (std::size_t k = 0; k < point.users.size(); ++k) {
    const double bits = user_bits(point.users[k], params.users[k], params);
    const double energy = user_energy(point.users[k], params.users[k], params).total;
    if (energy == 0.0) {
      if (bits > 0.0) throw Error("user " + std::to_string(k) + " computes bits with zero energy");
      continue;
    }
    r.per_user[k] = bits / energy;
    r.total += params.users[k].weight * r.per_user[k];
  }
  return r;
}

std::vector<Violation> check_feasibility(const DecisionPoint& point, const SystemParams& params,
                                         double tol) {
  std::vector<Violation> out;
  if (point.users.size() != params.users.size()) throw DomainError("point and system disagree on K");
  auto report = [&](const char* row, std::size_t k, double excess, double scale) {
    if (!std::isfinite(excess) || excess > tol * scale) out.push_back({row, k, excess});
  };

  double time_sum = 0.0;
  for (const UserDecision& d : point.users) time_sum += d.time;
  report("C1", kSharedRow, time_sum - params.deadline, params.deadline);

  for (std::size_t k = 0; k < point.users.size(); ++k) {
    const UserDecision& d = point.users[k];
    const UserParams& u = params.users[k];
    const double bit_scale = std::max(u.task_bits, 1.0);

    const bool in_domain = d.time >= 0.0 && d.tx_energy >= 0.0 && d.freq >= 0.0;
    report("C6", k, -std::min({d.time, d.tx_energy, d.freq, d.offload_bits, 0.0}), 1.0);
    report("C6", k, d.freq - u.max_freq, u.max_freq);
    if (!in_domain) continue;

    const double secure = secrecy_bits(d.time, d.tx_energy, u, params.rate_bandwidth());
    report("C2", k, d.offload_bits - secure, bit_scale);

    const double lower = u.task_bits - params.deadline * u.max_freq / u.cycles_per_bit;
    report("C3", k, lower - d.offload_bits, bit_scale);
    report("C3", k, d.offload_bits - u.task_bits, bit_scale);
    // The local share L - m has to be produced by the CPU frequency actually chosen.
    report("C3-local", k, (u.task_bits - d.offload_bits) - local_bits(d.freq, params.deadline, u.cycles_per_bit),
           bit_scale);

    report("C4", k, user_energy(d, u, params).total - u.energy_budget, u.energy_budget);
  }
  return out;
}

double offload_bits_for(double freq, const UserParams& user, double deadline) {
  const double local = local_bits(freq, deadline, user.cycles_per_bit);
  return std::clamp(user.task_bits - local, 0.0, user.task_bits);
}

DecisionPoint round_offload_bits(const DecisionPoint& point) {
  DecisionPoint out = point;
  for (UserDecision& d : out.users) d.offload_bits = std::ceil(d.offload_bits);
  return out;
}

}  // namespace secmec
