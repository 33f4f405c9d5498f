#include "secmec/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "secmec/errors.hpp"
#include "secmec/sca.hpp"

namespace secmec {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::ResidualConverged:
      return "ResidualConverged";
    case Termination::MaxOuterIters:
      return "MaxOuterIters";
    case Termination::Infeasible:
      return "Infeasible";
    case Termination::Stalled:
      return "Stalled";
  }
  return "Unknown";
}

bool BaselineResult::all_feasible() const {
  return std::all_of(feasible.begin(), feasible.end(), [](bool b) { return b; });
}

namespace {

constexpr double kGolden = 0.6180339887498949;
// Relative row tolerance for the final point against the exact model.
constexpr double kFinalFeasTol = 1e-6;

/// Maximizes a concave function on [lo, hi] by golden-section search.
template <class F>
std::pair<double, double> golden_max(const F& fn, double lo, double hi, int iters = 90) {
  if (!(hi > lo)) return {lo, fn(lo)};
  double a = lo;
  double b = hi;
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = fn(x1);
  double f2 = fn(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = fn(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = fn(x1);
    }
  }
  double best_x = f1 > f2 ? x1 : x2;
  double best_f = std::max(f1, f2);
  for (double edge : {lo, hi}) {
    const double fe = fn(edge);
    if (fe > best_f) {
      best_f = fe;
      best_x = edge;
    }
  }
  return {best_x, best_f};
}

bool meets_requirements(const UserDecision& d, const UserParams& u, const SystemParams& params,
                        double margin) {
  const double energy = user_energy(d, u, params).total;
  if (energy > u.energy_budget) return false;
  return user_bits(d, u, params) >= u.task_bits * (1.0 + margin);
}

UserDecision spec_start_point(const UserParams& u, const SystemParams& params, double time,
                              bool offload_only) {
  UserDecision d;
  d.time = time;
  d.freq = offload_only ? 0.0 : std::min(u.max_freq, u.cycles_per_bit * u.task_bits / params.deadline);
  const double local = u.cpu_coeff * d.freq * d.freq * d.freq * params.deadline;
  d.tx_energy = 0.5 * std::max(0.0, u.energy_budget - local - params.circuit_power * time);
  d.legit_snr_energy = u.ap_gain * d.tx_energy;
  d.eve_snr_energy = u.eve_gain * d.tx_energy;
  d.offload_bits = offload_bits_for(d.freq, u, params.deadline);
  return d;
}

AuxiliaryState aux_at(const DecisionPoint& point, const SystemParams& params, LambdaRow form) {
  AuxiliaryState aux;
  for (std::size_t k = 0; k < params.users.size(); ++k) {
    const UserParams& u = params.users[k];
    const double energy = user_energy(point.users[k], u, params).total;
    const double target = form == LambdaRow::Weighted ? u.weight : 1.0;
    if (energy > 0.0) {
      aux.lambda.push_back(target / energy);
      aux.beta.push_back(u.weight * user_bits(point.users[k], u, params) / energy);
    } else {
      aux.lambda.push_back(target);
      aux.beta.push_back(0.0);
    }
  }
  return aux;
}

SystemParams subsystem(const SystemParams& params, const std::vector<std::size_t>& idx) {
  SystemParams sub = params;
  sub.users.clear();
  for (std::size_t k : idx) sub.users.push_back(params.users[k]);
  return sub;
}

double max_displacement(const DecisionPoint& a, const DecisionPoint& b, const SystemParams& params) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.users.size(); ++k) {
    const UserParams& u = params.users[k];
    const UserDecision& x = a.users[k];
    const UserDecision& y = b.users[k];
    d = std::max(d, std::abs(x.time - y.time) / params.deadline);
    d = std::max(d, std::abs(x.legit_snr_energy - y.legit_snr_energy) / (u.ap_gain * u.energy_budget));
    d = std::max(d, std::abs(x.eve_snr_energy - y.eve_snr_energy) / (u.eve_gain * u.energy_budget));
  }
  return d;
}

/// Exact-model value of the inner objective sum_k lambda_k (w_k R_k - beta_k E_k).
double inner_value(const DecisionPoint& p, const AuxiliaryState& aux, const SystemParams& params) {
  double v = 0.0;
  for (std::size_t k = 0; k < params.users.size(); ++k) {
    const UserParams& u = params.users[k];
    v += aux.lambda[k] * (u.weight * user_bits(p.users[k], u, params) -
                          aux.beta[k] * user_energy(p.users[k], u, params).total);
  }
  return v;
}

/// Magnitude of the inner objective terms, the scale of its tolerances.
double reward_scale(const DecisionPoint& p, const AuxiliaryState& aux, const SystemParams& params) {
  double s = 0.0;
  for (std::size_t k = 0; k < params.users.size(); ++k) {
    const UserParams& u = params.users[k];
    s += aux.lambda[k] * (u.weight * user_bits(p.users[k], u, params) +
                          std::abs(aux.beta[k]) * user_energy(p.users[k], u, params).total);
  }
  return std::max(s, std::numeric_limits<double>::min());
}

/// Keeps the incumbent when it is as good an inner solution as the fresh one.
/// Homogeneous users have a whole ray of inner maximizers; without this the
/// solver's arbitrary pick along the ray keeps moving lambda = w / E.
void prefer_incumbent(InnerResult& fresh, const DecisionPoint& incumbent, const AuxiliaryState& aux,
                      const SystemParams& params) {
  constexpr double tol = 1e-10;
  const double scale = reward_scale(fresh.point, aux, params);
  if (inner_value(incumbent, aux, params) >= inner_value(fresh.point, aux, params) - tol * scale) {
    fresh.point = incumbent;
  }
}

double weighted_ce(const DecisionPoint& point, const SystemParams& params) {
  double total = 0.0;
  for (std::size_t k = 0; k < params.users.size(); ++k) {
    const UserParams& u = params.users[k];
    const double energy = user_energy(point.users[k], u, params).total;
    if (energy > 0.0) total += u.weight * user_bits(point.users[k], u, params) / energy;
  }
  return total;
}

}  // namespace

BitsCapacity max_achievable_bits(const UserParams& u, const SystemParams& params, double time_cap,
                                 bool allow_local) {
  const double T = params.deadline;
  const double E = u.energy_budget;
  const double pr = params.circuit_power;
  auto freq_for = [&](double e_loc) {
    return allow_local ? std::min(u.max_freq, std::cbrt(std::max(e_loc, 0.0) / (u.cpu_coeff * T))) : 0.0;
  };
  auto bits_at = [&](double t, double e_loc) {
    const double e_tx = std::max(0.0, E - pr * t - e_loc);
    return local_bits(freq_for(e_loc), T, u.cycles_per_bit) +
           secrecy_bits(t, e_tx, u, params.rate_bandwidth());
  };
  auto best_split = [&](double t) {
    const double room = std::max(0.0, E - pr * t);
    if (!allow_local) return std::pair<double, double>{0.0, bits_at(t, 0.0)};
    // Energy above the f_max level buys no further local bits.
    const double local_cap = std::min(room, u.cpu_coeff * u.max_freq * u.max_freq * u.max_freq * T);
    return golden_max([&](double e) { return bits_at(t, e); }, 0.0, local_cap);
  };

  BitsCapacity out;
  double t_best = 0.0;
  double e_best = 0.0;
  if (u.can_offload() && time_cap > 0.0) {
    double t_hi = time_cap;
    if (pr > 0.0) t_hi = std::min(t_hi, E / pr);
    const auto [t, b] = golden_max([&](double tt) { return best_split(tt).second; }, 0.0, t_hi);
    t_best = t;
    e_best = best_split(t).first;
    out.bits = b;
  } else {
    e_best = allow_local ? std::min(E, u.cpu_coeff * u.max_freq * u.max_freq * u.max_freq * T) : 0.0;
    out.bits = bits_at(0.0, e_best);
  }
  UserDecision& d = out.decision;
  d.time = t_best;
  d.freq = freq_for(e_best);
  d.tx_energy = t_best > 0.0 ? std::max(0.0, E - pr * t_best - e_best) : 0.0;
  d.legit_snr_energy = u.ap_gain * d.tx_energy;
  d.eve_snr_energy = u.eve_gain * d.tx_energy;
  d.offload_bits = offload_bits_for(d.freq, u, T);
  out.bits = user_bits(d, u, params);
  return out;
}

InitialState initialize(const SystemParams& params, const AlgorithmOptions& options) {
  params.validate();
  const std::size_t K = params.users.size();
  const double T = params.deadline;
  const double floor_time = 2.0 * options.time_floor;
  constexpr double kMargin = 1e-6;

  InitialState st;
  st.point.users.resize(K);
  st.local_only.assign(K, false);

  std::vector<std::size_t> offloaders;
  for (std::size_t k = 0; k < K; ++k) {
    const UserParams& u = params.users[k];
    UserDecision& d = st.point.users[k];
    if (u.task_bits == 0.0) {
      d.time = floor_time;
      continue;
    }
    if (!u.can_offload()) {
      st.local_only[k] = true;
      d.freq = options.offload_only ? 0.0 : u.cycles_per_bit * u.task_bits / T;
      d.offload_bits = offload_bits_for(d.freq, u, T);
      if (options.offload_only || !meets_requirements(d, u, params, 0.0) || d.freq > u.max_freq) {
        throw InfeasibleInstance(k, u.task_bits, max_achievable_bits(u, params, 0.0, !options.offload_only).bits);
      }
      continue;
    }
    offloaders.push_back(k);
  }

  if (!offloaders.empty()) {
    const double share = 0.9 * T / static_cast<double>(K);
    std::vector<std::size_t> needy;
    for (std::size_t k : offloaders) {
      const UserParams& u = params.users[k];
      UserDecision d = spec_start_point(u, params, share, options.offload_only);
      if (!meets_requirements(d, u, params, kMargin)) {
        const BitsCapacity cap = max_achievable_bits(u, params, share, !options.offload_only);
        if (cap.bits >= u.task_bits * (1.0 + kMargin)) {
          d = cap.decision;
        } else {
          needy.push_back(k);
        }
      }
      d.time = std::max(d.time, floor_time);
      st.point.users[k] = d;
    }

    if (!needy.empty()) {
      // Uniform shares are not enough: size each offloader's share to what it needs.
      std::vector<double> need(K, 0.0);
      double total_need = 0.0;
      for (std::size_t k : offloaders) {
        const UserParams& u = params.users[k];
        const double goal = u.task_bits * (1.0 + kMargin);
        const BitsCapacity full = max_achievable_bits(u, params, T, !options.offload_only);
        if (full.bits < goal) throw InfeasibleInstance(k, u.task_bits, full.bits);
        double lo = 0.0;
        double hi = T;
        if (max_achievable_bits(u, params, 0.0, !options.offload_only).bits >= goal) hi = 0.0;
        for (int i = 0; i < 60 && hi > lo; ++i) {
          const double mid = 0.5 * (lo + hi);
          (max_achievable_bits(u, params, mid, !options.offload_only).bits >= goal ? hi : lo) = mid;
        }
        need[k] = std::max(hi, floor_time);
        total_need += need[k];
      }
      if (total_need > T) {
        const std::size_t worst = needy.front();
        const UserParams& u = params.users[worst];
        throw InfeasibleInstance(worst, u.task_bits,
                                 max_achievable_bits(u, params, share, !options.offload_only).bits);
      }
      const double spare = (0.99 * T - total_need) / static_cast<double>(offloaders.size());
      for (std::size_t k : offloaders) {
        const UserParams& u = params.users[k];
        const double cap_time = need[k] + std::max(spare, 0.0);
        UserDecision d = spec_start_point(u, params, cap_time, options.offload_only);
        if (!meets_requirements(d, u, params, kMargin)) {
          d = max_achievable_bits(u, params, cap_time, !options.offload_only).decision;
        }
        d.time = std::max(d.time, floor_time);
        st.point.users[k] = d;
      }
    }
  }

  st.aux = aux_at(st.point, params, options.lambda_row);
  return st;
}

InnerResult inner_sca(const SystemParams& params, const AuxiliaryState& aux, const DecisionPoint& start,
                      const AlgorithmOptions& options) {
  const AssembleOptions asm_opts{options.mode, options.offload_only};
  InnerResult res;
  DecisionPoint x = start;
  DecisionPoint last_feasible = start;

  {
    const SubproblemSpec spec0 = assemble_p4(params, aux, make_linearization(x, options.time_floor), asm_opts);
    res.trace.push_back({0, p4_objective(spec0, x), 0.0});
  }
  double previous = res.trace.back().objective;
  bool recentered = false;

  for (int j = 1; j <= options.tol.max_inner; ++j) {
    SubproblemSolution sol;
    try {
      const SubproblemSpec spec = assemble_p4(params, aux, make_linearization(x, options.time_floor), asm_opts);
      sol = solve_p4(spec, options.solver, &x);
    } catch (const SubproblemInfeasible&) {
      if (recentered) throw;
      recentered = true;
      x = last_feasible;
      const SubproblemSpec spec = assemble_p4(params, aux, make_linearization(x, options.time_floor), asm_opts);
      sol = solve_p4(spec, options.solver, &x);
    }
    const double disp = max_displacement(sol.point, x, params);
    res.trace.push_back({j, sol.objective, disp});
    res.iterations = j;
    x = sol.point;

    bool feasible = true;
    for (std::size_t k = 0; k < params.users.size(); ++k) {
      feasible = feasible && meets_requirements(x.users[k], params.users[k], params, 0.0);
    }
    if (feasible) last_feasible = x;

    const double change = std::abs(sol.objective - previous);
    previous = sol.objective;
    if (change <= options.tol.inner_change * reward_scale(x, aux, params) && disp <= std::sqrt(options.tol.inner_change)) {
      res.converged = true;
      break;
    }
  }
  res.point = std::move(x);
  return res;
}

SolveReport run_algorithm1(const SystemParams& params, const AlgorithmOptions& options) {
  params.validate();
  const std::size_t K = params.users.size();
  const double T = params.deadline;

  SolveReport rep;
  rep.point.users.resize(K);
  rep.per_user.resize(K);

  // Users with nothing to offload securely are solved in closed form.
  std::vector<std::size_t> active;
  std::vector<bool> pinned(K, false);
  for (std::size_t k = 0; k < K; ++k) {
    const UserParams& u = params.users[k];
    if (u.task_bits == 0.0) {
      pinned[k] = true;
    } else if (!u.can_offload()) {
      pinned[k] = true;
      UserDecision& d = rep.point.users[k];
      d.freq = options.offload_only ? 0.0 : u.cycles_per_bit * u.task_bits / T;
      d.offload_bits = offload_bits_for(d.freq, u, T);
      if (options.offload_only || d.freq > u.max_freq || !meets_requirements(d, u, params, 0.0)) {
        rep.termination = Termination::Infeasible;
        rep.message = InfeasibleInstance(k, u.task_bits,
                                         max_achievable_bits(u, params, 0.0, !options.offload_only).bits)
                          .what();
      }
    } else {
      active.push_back(k);
    }
  }

  auto expand = [&](const DecisionPoint& sub) {
    DecisionPoint full = rep.point;
    for (std::size_t i = 0; i < active.size(); ++i) full.users[active[i]] = sub.users[i];
    return full;
  };
  auto record = [&](int it, const ResidualVector& r, double step, const AuxiliaryState& aux,
                    const DecisionPoint& sub) {
    OuterRecord o;
    o.iteration = it;
    o.residual = r.scaled_norm;
    o.raw_residual = r.norm;
    o.step = step;
    o.lambda = aux.lambda;
    o.beta = aux.beta;
    o.point = expand(sub);
    o.ce = ce_objective(o.point, params).total;
    rep.outer_trace.push_back(std::move(o));
  };

  if (rep.termination != Termination::Infeasible && !active.empty()) {
    const SystemParams sub = subsystem(params, active);
    try {
      InitialState init = initialize(sub, options);
      AuxiliaryState aux = init.aux;
      InnerResult inner = inner_sca(sub, aux, init.point, options);
      rep.inner_traces.push_back(inner.trace);
      DecisionPoint x = inner.point;
      RatioTerms terms = ratio_terms(x, sub);
      ResidualVector res = residual_from_terms(terms, aux, sub, options.lambda_row);
      record(0, res, 0.0, aux, x);

      BacktrackSettings bt = options.backtrack;
      bt.form = options.lambda_row;
      rep.termination = Termination::MaxOuterIters;
      for (int it = 1; it <= options.tol.max_outer; ++it) {
        if (res.scaled_norm <= options.tol.residual) {
          rep.termination = Termination::ResidualConverged;
          break;
        }
        std::optional<InnerResult> last;
        std::optional<InnerResult> full_step;
        AuxiliaryState full_aux;
        InnerEvaluator evaluate = [&](const AuxiliaryState& cand) {
          if (options.cheap_backtrack) return terms;
          last = inner_sca(sub, cand, x, options);
          prefer_incumbent(*last, x, cand, sub);
          if (!full_step) {
            full_step = last;
            full_aux = cand;
          }
          return ratio_terms(last->point, sub);
        };
        AuxUpdate upd;
        bool restart = false;
        try {
          upd = damped_aux_update(aux, terms, evaluate, sub, bt);
        } catch (const StallError& e) {
          const double now = weighted_ce(x, sub);
          if (options.stall_restart && full_step && weighted_ce(full_step->point, sub) > now * (1.0 + 1e-9)) {
            restart = true;
            upd.aux = full_aux;
            upd.step = 1.0;
            last = full_step;
          } else {
            rep.termination = Termination::Stalled;
            rep.message = e.what();
            break;
          }
        }
        aux = upd.aux;
        if (options.cheap_backtrack) {
          last = inner_sca(sub, aux, x, options);
          prefer_incumbent(*last, x, aux, sub);
        }
        rep.inner_traces.push_back(last->trace);
        x = last->point;
        terms = ratio_terms(x, sub);
        res = residual_from_terms(terms, aux, sub, options.lambda_row);
        record(it, res, upd.step, aux, x);
        rep.outer_trace.back().restart = restart;
      }
      if (rep.termination == Termination::MaxOuterIters && res.scaled_norm <= options.tol.residual) {
        rep.termination = Termination::ResidualConverged;
      }
      rep.point = expand(x);
    } catch (const InfeasibleInstance& e) {
      rep.termination = Termination::Infeasible;
      rep.message = e.what();
    } catch (const SubproblemInfeasible& e) {
      rep.termination = Termination::Infeasible;
      rep.message = e.what();
    } catch (const NoConvergence& e) {
      rep.termination = Termination::Stalled;
      rep.message = e.what();
    }
    if (!rep.outer_trace.empty() && rep.termination != Termination::ResidualConverged &&
        rep.termination != Termination::MaxOuterIters) {
      rep.point = rep.outer_trace.back().point;
    }
  } else if (rep.termination != Termination::Infeasible) {
    AuxiliaryState none;
    record(0, ResidualVector{}, 0.0, none, DecisionPoint{});
  }

  if (rep.termination == Termination::Infeasible && rep.outer_trace.empty()) {
    rep.final_ce = 0.0;
    return rep;
  }

  if (rep.termination != Termination::Infeasible) {
    const std::vector<Violation> bad = check_feasibility(rep.point, params, kFinalFeasTol);
    if (!bad.empty()) {
      rep.termination = Termination::Infeasible;
      rep.message = "final point violates " + bad.front().constraint +
                    (bad.front().user == kSharedRow ? std::string() : " for user " + std::to_string(bad.front().user)) +
                    " by " + std::to_string(bad.front().amount);
    }
  }

  const CeResult ce = ce_objective(rep.point, params);
  rep.final_ce = ce.total;
  for (std::size_t k = 0; k < K; ++k) {
    const UserDecision& d = rep.point.users[k];
    UserReport& u = rep.per_user[k];
    u.time = d.time;
    u.freq = d.freq;
    u.offload_bits = d.offload_bits;
    u.tx_energy = d.tx_energy;
    u.ce = ce.per_user[k];
    u.pinned_local = pinned[k];
    u.offloading = !pinned[k] && d.time > 100.0 * options.time_floor;
    u.power = u.offloading ? d.tx_energy / d.time : 0.0;
  }
  return rep;
}

BaselineResult baseline_local_only(const SystemParams& params) {
  params.validate();
  BaselineResult out;
  const std::size_t K = params.users.size();
  out.point.users.resize(K);
  out.per_user_ce.assign(K, 0.0);
  out.feasible.assign(K, true);
  for (std::size_t k = 0; k < K; ++k) {
    const UserParams& u = params.users[k];
    UserDecision& d = out.point.users[k];
    d.freq = u.cycles_per_bit * u.task_bits / params.deadline;
    const double energy = u.cpu_coeff * d.freq * d.freq * d.freq * params.deadline;
    out.feasible[k] = d.freq <= u.max_freq && energy <= u.energy_budget;
    if (u.task_bits > 0.0 && out.feasible[k]) {
      out.per_user_ce[k] = u.task_bits / energy;
      out.total_ce += u.weight * out.per_user_ce[k];
    }
  }
  return out;
}

SolveReport baseline_offload_only(const SystemParams& params, AlgorithmOptions options) {
  options.offload_only = true;
  return run_algorithm1(params, options);
}

OracleResult brute_force_oracle(const SystemParams& params, const OracleGrid& grid) {
  params.validate();
  if (grid.time_points < 2 || grid.freq_points < 2 || grid.energy_points < 2) {
    throw DomainError("oracle grids need at least two points per axis");
  }
  const std::size_t K = params.users.size();
  const int nt = grid.time_points;
  const int nf = grid.freq_points;
  const int ne = grid.energy_points;
  const double T = params.deadline;
  const double B = params.rate_bandwidth();
  constexpr double kNone = -std::numeric_limits<double>::infinity();

  struct Cell {
    double value = kNone;
    int f = 0;
    int e = 0;
  };
  std::vector<std::vector<Cell>> table(K, std::vector<Cell>(static_cast<std::size_t>(nt)));
  std::vector<double> t_axis(static_cast<std::size_t>(nt));
  for (int i = 0; i < nt; ++i) t_axis[i] = T * i / (nt - 1);

  for (std::size_t k = 0; k < K; ++k) {
    const UserParams& u = params.users[k];
    const double fcap = std::min(u.max_freq, std::cbrt(u.energy_budget / (u.cpu_coeff * T)));
    std::vector<double> f_axis(nf), f_bits(nf), f_energy(nf), e_axis(ne);
    for (int j = 0; j < nf; ++j) {
      f_axis[j] = fcap * j / (nf - 1);
      f_bits[j] = local_bits(f_axis[j], T, u.cycles_per_bit);
      f_energy[j] = u.cpu_coeff * f_axis[j] * f_axis[j] * f_axis[j] * T;
    }
    for (int l = 0; l < ne; ++l) e_axis[l] = u.energy_budget * l / (ne - 1);

    for (int i = 0; i < nt; ++i) {
      const double t = t_axis[i];
      Cell best;
      for (int l = 0; l < ne; ++l) {
        const double e = e_axis[l];
        const double offload_energy = e + params.circuit_power * t;
        if (offload_energy > u.energy_budget) break;
        double sec = 0.0;
        if (t > 0.0 && e > 0.0) {
          sec = B * std::max(0.0, t * std::log1p(u.ap_gain * e / t) - t * std::log1p(u.eve_gain * e / t));
        }
        for (int j = 0; j < nf; ++j) {
          const double energy = offload_energy + f_energy[j];
          if (energy > u.energy_budget) break;
          const double bits = sec + f_bits[j];
          if (bits < u.task_bits) continue;
          const double ce = energy > 0.0 ? u.weight * bits / energy : 0.0;
          if (ce > best.value) best = {ce, j, l};
        }
      }
      table[k][i] = best;
    }

    bool any = false;
    for (const Cell& c : table[k]) any = any || c.value > kNone;
    if (!any) {
      throw InfeasibleInstance(k, u.task_bits, max_achievable_bits(u, params, T).bits);
    }
  }

  // Users couple only through the deadline: knapsack over time-grid indices.
  std::vector<std::vector<double>> dp(K + 1, std::vector<double>(static_cast<std::size_t>(nt), kNone));
  std::vector<std::vector<int>> choice(K + 1, std::vector<int>(static_cast<std::size_t>(nt), -1));
  dp[0][0] = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    for (int used = 0; used < nt; ++used) {
      if (dp[k][used] == kNone) continue;
      for (int i = 0; used + i < nt; ++i) {
        const double v = table[k][i].value;
        if (v == kNone) continue;
        if (dp[k][used] + v > dp[k + 1][used + i]) {
          dp[k + 1][used + i] = dp[k][used] + v;
          choice[k + 1][used + i] = i;
        }
      }
    }
  }
  int end = -1;
  double best = kNone;
  for (int s = 0; s < nt; ++s) {
    if (dp[K][s] > best) {
      best = dp[K][s];
      end = s;
    }
  }
  if (end < 0) throw InfeasibleInstance(0, params.users[0].task_bits, 0.0);

  OracleResult out;
  out.point.users.resize(K);
  for (std::size_t k = K; k-- > 0;) {
    const int i = choice[k + 1][end];
    const Cell& c = table[k][i];
    const UserParams& u = params.users[k];
    const double fcap = std::min(u.max_freq, std::cbrt(u.energy_budget / (u.cpu_coeff * T)));
    UserDecision& d = out.point.users[k];
    d.time = t_axis[i];
    d.freq = fcap * c.f / (nf - 1);
    d.tx_energy = u.energy_budget * c.e / (ne - 1);
    d.legit_snr_energy = u.ap_gain * d.tx_energy;
    d.eve_snr_energy = u.eve_gain * d.tx_energy;
    d.offload_bits = offload_bits_for(d.freq, u, T);
    end -= i;
  }
  out.ce = ce_objective(out.point, params).total;
  return out;
}

}  // namespace secmec
