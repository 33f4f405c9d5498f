#include "secmec/subproblem.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "secmec/entropy.hpp"

namespace secmec {

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

SubproblemSpec assemble_p4(const SystemParams& params, const AuxiliaryState& aux,
                           const LinearizationPoint& lin, const AssembleOptions& options) {
  const std::size_t K = params.users.size();
  if (aux.size() != K || lin.users.size() != K) {
    throw DomainError("assemble_p4: multipliers, expansion and system disagree on K");
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (!(aux.lambda[k] > 0.0)) throw DomainError("assemble_p4: lambda must be positive");
  }
  const double B = params.rate_bandwidth();
  const double T = params.deadline;

  SubproblemSpec spec;
  spec.deadline = T;
  spec.users.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const UserParams& u = params.users[k];
    const ExpansionTerms& e = lin.users[k];
    const double lam = aux.lambda[k];
    const double reward = lam * u.weight;  // lambda_k w_k
    const double cost = lam * aux.beta[k];  // lambda_k beta_k
    UserRows& rows = spec.users[k];

    UserBitsRow& b = rows.bits;
    b.freq = T / u.cycles_per_bit;
    b.required = u.task_bits;
    if (options.mode == LinearizationMode::Full) {
      b.time = B * (e.legit_time - e.eve_time);
      b.legit = B * e.legit_slope;
      b.eve = -B * e.eve_slope;
      // Zero up to rounding: the tangent plane of a 1-homogeneous function passes the origin.
      b.constant = B * (e.offset - (e.legit_time - e.eve_time) * e.time - e.legit_slope * e.legit +
                        e.eve_slope * e.eve);
    } else {
      b.legit_entropy = B;
      b.time = -B * e.eve_time;
      b.eve = -B * e.eve_slope;
      b.constant = -B * (entropy(e.eve, e.time) - e.eve_time * e.time - e.eve_slope * e.eve);
    }

    UserObjective& o = rows.objective;
    o.time = reward * b.time - cost * params.circuit_power;
    o.legit = reward * b.legit;
    o.eve = reward * b.eve;
    o.legit_entropy = reward * b.legit_entropy;
    o.freq = options.freeze_freq ? 0.0 : reward * b.freq;
    o.tx_energy = -cost;
    o.freq_cubed = cost * u.cpu_coeff * T;
    o.constant = reward * b.constant;

    rows.cubic_energy = u.cpu_coeff * T;
    rows.circuit_power = params.circuit_power;
    rows.energy_budget = u.energy_budget;
    rows.ap_gain = u.ap_gain;
    rows.eve_gain = u.eve_gain;
    rows.max_freq = u.max_freq;
    rows.freq_fixed = options.freeze_freq;
  }
  return spec;
}

double p4_bits(const UserRows& rows, const UserDecision& d) {
  const UserBitsRow& b = rows.bits;
  double v = b.time * d.time + b.freq * d.freq + b.legit * d.legit_snr_energy +
             b.eve * d.eve_snr_energy + b.constant;
  if (b.legit_entropy != 0.0) v += b.legit_entropy * entropy(d.legit_snr_energy, d.time);
  return v;
}

double p4_objective(const SubproblemSpec& spec, const DecisionPoint& point) {
  if (point.users.size() != spec.users.size()) throw DomainError("p4_objective: size mismatch");
  double total = 0.0;
  for (std::size_t k = 0; k < spec.users.size(); ++k) {
    const UserObjective& o = spec.users[k].objective;
    const UserDecision& d = point.users[k];
    total += o.time * d.time + o.freq * d.freq + o.legit * d.legit_snr_energy +
             o.eve * d.eve_snr_energy + o.tx_energy * d.tx_energy -
             o.freq_cubed * d.freq * d.freq * d.freq + o.constant;
    if (o.legit_entropy != 0.0) total += o.legit_entropy * entropy(d.legit_snr_energy, d.time);
  }
  return total;
}

double KktReport::worst() const noexcept {
  return std::max({stationarity, primal_infeasibility, complementarity});
}

// ---------------------------------------------------------------------------
// Barrier machinery
// ---------------------------------------------------------------------------

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class RowKind {
  // relaxed in Phase I
  Bits,
  Energy,
  EveLink,
  LegitLink,
  SharedTime,
  // domain rows, kept strict throughout
  TimeFloor,
  FreqLow,
  FreqHigh,
  LegitLow,
  EveLow,
  TxLow,
};

bool relaxed(RowKind k) { return k <= RowKind::SharedTime; }

struct Row {
  RowKind kind;
  int user;
};

struct Slots {
  int time;
  int freq;  // -1 when pinned
  int legit;
  int eve;
  int tx;
};

struct RealUser {
  double t;
  double f;
  double legit;
  double eve;
  double tx;
};

double safe_entropy(double x, double y) { return x == 0.0 ? 0.0 : y * std::log1p(x / y); }

/// Scaled variables y = x / scale and normalized rows g(y) <= 0.
class P4Model {
 public:
  explicit P4Model(const SubproblemSpec& spec) : spec_(spec) {
    int n = 0;
    for (std::size_t k = 0; k < spec.users.size(); ++k) {
      const UserRows& u = spec.users[k];
      if (!(u.energy_budget > 0.0) || !(u.ap_gain > 0.0) || !(u.eve_gain > 0.0) || !(u.max_freq > 0.0)) {
        throw DomainError("subproblem user " + std::to_string(k) + " has a non-positive scale");
      }
      Slots s{};
      s.time = n++;
      s.freq = u.freq_fixed ? -1 : n++;
      s.legit = n++;
      s.eve = n++;
      s.tx = n++;
      slots_.push_back(s);
      scale_.push_back(spec.deadline);
      if (s.freq >= 0) scale_.push_back(u.max_freq);
      scale_.push_back(u.ap_gain * u.energy_budget);
      scale_.push_back(u.eve_gain * u.energy_budget);
      scale_.push_back(u.energy_budget);

      const double fcap = freq_cap(u);
      bit_scale_.push_back(std::max({u.bits.required, 1e-3 * std::abs(u.bits.freq) * fcap, 1.0}));

      const int ki = static_cast<int>(k);
      for (RowKind kind : {RowKind::Bits, RowKind::Energy, RowKind::EveLink, RowKind::LegitLink}) {
        rows_.push_back({kind, ki});
      }
      rows_.push_back({RowKind::TimeFloor, ki});
      if (s.freq >= 0) {
        rows_.push_back({RowKind::FreqLow, ki});
        rows_.push_back({RowKind::FreqHigh, ki});
      }
      rows_.push_back({RowKind::LegitLow, ki});
      rows_.push_back({RowKind::EveLow, ki});
      rows_.push_back({RowKind::TxLow, ki});
    }
    rows_.push_back({RowKind::SharedTime, -1});
    dim_ = n;

    double scale = 0.0;
    for (std::size_t k = 0; k < spec.users.size(); ++k) {
      const UserRows& u = spec.users[k];
      const UserObjective& o = u.objective;
      const double fcap = freq_cap(u);
      const double ne = u.ap_gain * u.energy_budget;
      scale += std::abs(o.time) * spec.deadline + std::abs(o.freq) * fcap + std::abs(o.legit) * ne +
               std::abs(o.eve) * u.eve_gain * u.energy_budget + std::abs(o.tx_energy) * u.energy_budget +
               std::abs(o.freq_cubed) * fcap * fcap * fcap + std::abs(o.legit_entropy) * ne;
    }
    obj_scale_ = scale > 0.0 && std::isfinite(scale) ? scale : 1.0;
  }

  int dim() const { return dim_; }
  const std::vector<Row>& rows() const { return rows_; }
  double objective_scale() const { return obj_scale_; }

  std::string row_name(const Row& r) const {
    static const char* names[] = {"bits",  "energy",   "eve-link",  "legit-link", "shared-time", "time-floor",
                                  "freq>=0", "freq<=max", "legit>=0", "eve>=0",     "tx>=0"};
    std::string n = names[static_cast<int>(r.kind)];
    if (r.user >= 0) n += "[" + std::to_string(r.user) + "]";
    return n;
  }

  std::vector<RealUser> unpack(const VectorXd& y) const {
    std::vector<RealUser> x(slots_.size());
    for (std::size_t k = 0; k < slots_.size(); ++k) {
      const Slots& s = slots_[k];
      x[k].t = y[s.time] * scale_[s.time];
      x[k].f = s.freq >= 0 ? y[s.freq] * scale_[s.freq] : 0.0;
      x[k].legit = y[s.legit] * scale_[s.legit];
      x[k].eve = y[s.eve] * scale_[s.eve];
      x[k].tx = y[s.tx] * scale_[s.tx];
    }
    return x;
  }

  /// Scaled start vector pushed strictly inside the domain rows.
  VectorXd pack_interior(const DecisionPoint* start) const {
    VectorXd y(dim_);
    const std::size_t K = slots_.size();
    for (std::size_t k = 0; k < K; ++k) {
      const Slots& s = slots_[k];
      UserDecision d;
      if (start != nullptr && start->users.size() == K) {
        d = start->users[k];
      } else {
        const UserRows& u = spec_.users[k];
        d.time = 0.5 * spec_.deadline / static_cast<double>(K);
        d.freq = 0.5 * freq_cap(u);
        d.tx_energy = 0.1 * u.energy_budget;
        d.legit_snr_energy = u.ap_gain * d.tx_energy;
        d.eve_snr_energy = u.eve_gain * d.tx_energy;
      }
      const double floor_scaled = spec_.time_floor / spec_.deadline;
      y[s.time] = std::max(d.time / scale_[s.time], floor_scaled + std::max(1e-12, 1e-3 * floor_scaled));
      if (s.freq >= 0) y[s.freq] = std::clamp(d.freq / scale_[s.freq], 1e-9, 1.0 - 1e-9);
      y[s.legit] = std::max(d.legit_snr_energy / scale_[s.legit], 1e-12);
      y[s.eve] = std::max(d.eve_snr_energy / scale_[s.eve], 1e-12);
      y[s.tx] = std::max(d.tx_energy / scale_[s.tx], 1e-12);
    }
    return y;
  }

  VectorXd pack_exact(const DecisionPoint& p) const {
    VectorXd y(dim_);
    for (std::size_t k = 0; k < slots_.size(); ++k) {
      const Slots& s = slots_[k];
      const UserDecision& d = p.users.at(k);
      y[s.time] = d.time / scale_[s.time];
      if (s.freq >= 0) y[s.freq] = d.freq / scale_[s.freq];
      y[s.legit] = d.legit_snr_energy / scale_[s.legit];
      y[s.eve] = d.eve_snr_energy / scale_[s.eve];
      y[s.tx] = d.tx_energy / scale_[s.tx];
    }
    return y;
  }

  bool in_domain(const std::vector<RealUser>& x) const {
    for (const Row& r : rows_) {
      if (!relaxed(r.kind) && !(value(r, x) < 0.0)) return false;
    }
    return true;
  }

  /// Normalized row value; negative means strictly satisfied.
  double value(const Row& r, const std::vector<RealUser>& x) const {
    if (r.kind == RowKind::SharedTime) {
      double sum = 0.0;
      for (const RealUser& xu : x) sum += xu.t;
      return (sum - spec_.deadline) / spec_.deadline;
    }
    const UserRows& u = spec_.users[r.user];
    const RealUser& xu = x[r.user];
    const double E = u.energy_budget;
    switch (r.kind) {
      case RowKind::Bits: {
        const UserBitsRow& b = u.bits;
        double lhs = b.time * xu.t + b.freq * xu.f + b.legit * xu.legit + b.eve * xu.eve + b.constant;
        if (b.legit_entropy != 0.0) lhs += b.legit_entropy * safe_entropy(xu.legit, xu.t);
        return (b.required - lhs) / bit_scale_[r.user];
      }
      case RowKind::Energy:
        return (u.cubic_energy * xu.f * xu.f * xu.f + xu.tx + u.circuit_power * xu.t - E) / E;
      case RowKind::EveLink:
        return (u.eve_gain * xu.tx - xu.eve) / (u.eve_gain * E);
      case RowKind::LegitLink:
        return (xu.legit - u.ap_gain * xu.tx) / (u.ap_gain * E);
      case RowKind::TimeFloor:
        return (spec_.time_floor - xu.t) / spec_.deadline;
      case RowKind::FreqLow:
        return -xu.f / u.max_freq;
      case RowKind::FreqHigh:
        return (xu.f - u.max_freq) / u.max_freq;
      case RowKind::LegitLow:
        return -xu.legit / (u.ap_gain * E);
      case RowKind::EveLow:
        return -xu.eve / (u.eve_gain * E);
      case RowKind::TxLow:
        return -xu.tx / E;
      case RowKind::SharedTime:
        break;
    }
    return 0.0;
  }

  /// Gradient (and optionally Hessian) of a normalized row in scaled coordinates.
  void derivs(const Row& r, const std::vector<RealUser>& x, VectorXd& g, MatrixXd* h) const {
    g.setZero(dim_);
    if (h != nullptr) h->setZero(dim_, dim_);
    if (r.kind == RowKind::SharedTime) {
      for (const Slots& s : slots_) g[s.time] = scale_[s.time] / spec_.deadline;
      return;
    }
    const UserRows& u = spec_.users[r.user];
    const Slots& s = slots_[r.user];
    const RealUser& xu = x[r.user];
    const double E = u.energy_budget;
    auto add = [&](int slot, double v) {
      if (slot >= 0) g[slot] += v * scale_[slot];
    };
    auto add2 = [&](int a, int b, double v) {
      if (h != nullptr && a >= 0 && b >= 0) (*h)(a, b) += v * scale_[a] * scale_[b];
    };
    switch (r.kind) {
      case RowKind::Bits: {
        const UserBitsRow& b = u.bits;
        const double c = -1.0 / bit_scale_[r.user];
        double dt = b.time;
        double dn = b.legit;
        if (b.legit_entropy != 0.0) {
          const EntropyGradient eg = entropy_gradient(xu.legit, xu.t);
          dn += b.legit_entropy * eg.dx;
          dt += b.legit_entropy * eg.dy;
          const EntropyHessian eh = entropy_hessian(xu.legit, xu.t);
          add2(s.legit, s.legit, c * b.legit_entropy * eh.xx);
          add2(s.legit, s.time, c * b.legit_entropy * eh.xy);
          add2(s.time, s.legit, c * b.legit_entropy * eh.xy);
          add2(s.time, s.time, c * b.legit_entropy * eh.yy);
        }
        add(s.time, c * dt);
        add(s.freq, c * b.freq);
        add(s.legit, c * dn);
        add(s.eve, c * b.eve);
        break;
      }
      case RowKind::Energy:
        add(s.freq, 3.0 * u.cubic_energy * xu.f * xu.f / E);
        add(s.tx, 1.0 / E);
        add(s.time, u.circuit_power / E);
        add2(s.freq, s.freq, 6.0 * u.cubic_energy * xu.f / E);
        break;
      case RowKind::EveLink:
        add(s.tx, 1.0 / E);
        add(s.eve, -1.0 / (u.eve_gain * E));
        break;
      case RowKind::LegitLink:
        add(s.legit, 1.0 / (u.ap_gain * E));
        add(s.tx, -1.0 / E);
        break;
      case RowKind::TimeFloor:
        add(s.time, -1.0 / spec_.deadline);
        break;
      case RowKind::FreqLow:
        add(s.freq, -1.0 / u.max_freq);
        break;
      case RowKind::FreqHigh:
        add(s.freq, 1.0 / u.max_freq);
        break;
      case RowKind::LegitLow:
        add(s.legit, -1.0 / (u.ap_gain * E));
        break;
      case RowKind::EveLow:
        add(s.eve, -1.0 / (u.eve_gain * E));
        break;
      case RowKind::TxLow:
        add(s.tx, -1.0 / E);
        break;
      case RowKind::SharedTime:
        break;
    }
  }

  /// Objective in real units.
  double objective(const std::vector<RealUser>& x) const {
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const UserObjective& o = spec_.users[k].objective;
      const RealUser& xu = x[k];
      total += o.time * xu.t + o.freq * xu.f + o.legit * xu.legit + o.eve * xu.eve + o.tx_energy * xu.tx -
               o.freq_cubed * xu.f * xu.f * xu.f + o.constant;
      if (o.legit_entropy != 0.0) total += o.legit_entropy * safe_entropy(xu.legit, xu.t);
    }
    return total;
  }

  /// Gradient and Hessian of objective / objective_scale in scaled coordinates.
  void objective_derivs(const std::vector<RealUser>& x, VectorXd& g, MatrixXd* h) const {
    g.setZero(dim_);
    if (h != nullptr) h->setZero(dim_, dim_);
    const double c = 1.0 / obj_scale_;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const UserObjective& o = spec_.users[k].objective;
      const Slots& s = slots_[k];
      const RealUser& xu = x[k];
      auto add = [&](int slot, double v) {
        if (slot >= 0) g[slot] += c * v * scale_[slot];
      };
      auto add2 = [&](int a, int b, double v) {
        if (h != nullptr && a >= 0 && b >= 0) (*h)(a, b) += c * v * scale_[a] * scale_[b];
      };
      double dt = o.time;
      double dn = o.legit;
      if (o.legit_entropy != 0.0) {
        const EntropyGradient eg = entropy_gradient(xu.legit, xu.t);
        dn += o.legit_entropy * eg.dx;
        dt += o.legit_entropy * eg.dy;
        const EntropyHessian eh = entropy_hessian(xu.legit, xu.t);
        add2(s.legit, s.legit, o.legit_entropy * eh.xx);
        add2(s.legit, s.time, o.legit_entropy * eh.xy);
        add2(s.time, s.legit, o.legit_entropy * eh.xy);
        add2(s.time, s.time, o.legit_entropy * eh.yy);
      }
      add(s.time, dt);
      add(s.freq, o.freq - 3.0 * o.freq_cubed * xu.f * xu.f);
      add(s.legit, dn);
      add(s.eve, o.eve);
      add(s.tx, o.tx_energy);
      add2(s.freq, s.freq, -6.0 * o.freq_cubed * xu.f);
    }
  }

  DecisionPoint to_point(const std::vector<RealUser>& x) const {
    DecisionPoint p;
    p.users.resize(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
      const UserBitsRow& b = spec_.users[k].bits;
      UserDecision& d = p.users[k];
      d.time = x[k].t;
      d.freq = x[k].f;
      d.legit_snr_energy = x[k].legit;
      d.eve_snr_energy = x[k].eve;
      d.tx_energy = x[k].tx;
      d.offload_bits = std::clamp(b.required - b.freq * d.freq, 0.0, std::max(b.required, 0.0));
    }
    return p;
  }

 private:
  static double freq_cap(const UserRows& u) {
    if (u.freq_fixed) return 0.0;
    if (u.cubic_energy > 0.0) return std::min(u.max_freq, std::cbrt(u.energy_budget / u.cubic_energy));
    return u.max_freq;
  }

  const SubproblemSpec& spec_;
  std::vector<Slots> slots_;
  std::vector<double> scale_;
  std::vector<double> bit_scale_;
  std::vector<Row> rows_;
  int dim_ = 0;
  double obj_scale_ = 1.0;
};

/// Solves H d = rhs for a (numerically) positive definite H, regularizing if needed.
VectorXd solve_spd(const MatrixXd& h, const VectorXd& rhs) {
  Eigen::LDLT<MatrixXd> ldlt(h);
  if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
    VectorXd d = ldlt.solve(rhs);
    if (d.allFinite()) return d;
  }
  const double base = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1.0);
  for (double reg = 1e-14; reg < 1e2; reg *= 100.0) {
    MatrixXd hr = h;
    hr.diagonal().array() += reg * base;
    Eigen::LDLT<MatrixXd> l2(hr);
    if (l2.info() == Eigen::Success && (l2.vectorD().array() > 0.0).all()) {
      VectorXd d = l2.solve(rhs);
      if (d.allFinite()) return d;
    }
  }
  return -rhs / base;
}

/// Barrier of the main phase: -w * f/scale - sum log(-g_i).
struct MainBarrier {
  const P4Model& model;
  double weight;

  bool operator()(const VectorXd& y, double& val, VectorXd* grad, MatrixXd* hess) const {
    const std::vector<RealUser> x = model.unpack(y);
    if (!model.in_domain(x)) return false;
    double v = -weight * model.objective(x) / model.objective_scale();
    for (const Row& r : model.rows()) {
      const double g = model.value(r, x);
      if (!(g < 0.0)) return false;
      v -= std::log(-g);
    }
    val = v;
    if (grad == nullptr) return true;
    const int n = model.dim();
    VectorXd og;
    MatrixXd oh;
    model.objective_derivs(x, og, hess != nullptr ? &oh : nullptr);
    *grad = -weight * og;
    if (hess != nullptr) *hess = -weight * oh;
    VectorXd rg(n);
    MatrixXd rh(n, n);
    for (const Row& r : model.rows()) {
      const double g = model.value(r, x);
      model.derivs(r, x, rg, hess != nullptr ? &rh : nullptr);
      *grad += rg / (-g);
      if (hess != nullptr) *hess += (rg * rg.transpose()) / (g * g) + rh / (-g);
    }
    return true;
  }
};

/// Phase I barrier over z = (y, s): w * s - sum_relaxed log(s - g_i) - sum_domain log(-g_i) - log(s + 1).
struct PhaseOneBarrier {
  const P4Model& model;
  double weight;

  bool operator()(const VectorXd& z, double& val, VectorXd* grad, MatrixXd* hess) const {
    const int n = model.dim();
    const VectorXd y = z.head(n);
    const double s = z[n];
    if (!(s + 1.0 > 0.0)) return false;
    const std::vector<RealUser> x = model.unpack(y);
    if (!model.in_domain(x)) return false;
    double v = weight * s - std::log(s + 1.0);
    for (const Row& r : model.rows()) {
      const double g = model.value(r, x) - (relaxed(r.kind) ? s : 0.0);
      if (!(g < 0.0)) return false;
      v -= std::log(-g);
    }
    val = v;
    if (grad == nullptr) return true;
    grad->setZero(n + 1);
    (*grad)[n] = weight - 1.0 / (s + 1.0);
    if (hess != nullptr) {
      hess->setZero(n + 1, n + 1);
      (*hess)(n, n) = 1.0 / ((s + 1.0) * (s + 1.0));
    }
    VectorXd rg(n);
    MatrixXd rh(n, n);
    VectorXd full(n + 1);
    for (const Row& r : model.rows()) {
      const bool rel = relaxed(r.kind);
      const double g = model.value(r, x) - (rel ? s : 0.0);
      model.derivs(r, x, rg, hess != nullptr ? &rh : nullptr);
      full.head(n) = rg;
      full[n] = rel ? -1.0 : 0.0;
      *grad += full / (-g);
      if (hess != nullptr) {
        *hess += (full * full.transpose()) / (g * g);
        hess->topLeftCorner(n, n) += rh / (-g);
      }
    }
    return true;
  }
};

// Squared Newton decrement below which a barrier stage counts as centered.
constexpr double kCenteredDecrement = 1e-10;
// Inside this region full Newton steps converge quadratically and need no value test,
// which would otherwise be decided by rounding once the barrier weight is large.
constexpr double kPureNewtonDecrement = 0.1;

struct CenterResult {
  int steps = 0;
  double decrement2 = 0.0;  // squared Newton decrement at exit
  bool stalled = false;     // no further progress is possible at working precision
};

/// Damped Newton centering: Armijo backtracking far from the center, pure
/// steps near it. Three pure steps without a 4x drop in the decrement mean
/// the rounding floor has been reached.
template <class Barrier>
CenterResult center(const Barrier& barrier, VectorXd& z, int budget,
                    const std::function<bool(const VectorXd&)>& early_exit = {}) {
  CenterResult res;
  VectorXd g;
  MatrixXd h;
  double v = 0.0;
  double previous = std::numeric_limits<double>::infinity();
  int flat = 0;
  res.decrement2 = std::numeric_limits<double>::infinity();
  while (res.steps < budget) {
    if (!barrier(z, v, &g, &h)) throw Error("barrier iterate left the domain");
    const VectorXd dz = solve_spd(h, -g);
    const double slope = g.dot(dz);
    res.decrement2 = -slope;
    if (!(res.decrement2 > kCenteredDecrement)) break;
    const bool pure = res.decrement2 < kPureNewtonDecrement;
    if (pure && res.decrement2 > 0.25 * previous) {
      if (++flat >= 3) {
        res.stalled = true;
        break;
      }
    } else {
      flat = 0;
    }
    previous = res.decrement2;

    double alpha = 1.0;
    bool moved = false;
    while (alpha > 1e-16) {
      const VectorXd cand = z + alpha * dz;
      double vc = 0.0;
      if (barrier(cand, vc, nullptr, nullptr) && ((pure && alpha == 1.0) || vc <= v + 0.25 * alpha * slope)) {
        z = cand;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    ++res.steps;
    if (!moved) {
      res.stalled = true;
      break;
    }
    if (early_exit && early_exit(z)) break;
  }
  return res;
}

// Certificate shared with verify_kkt; active_tol only labels rows.
constexpr double kCertActiveTol = 1e-5;
KktReport certify(const P4Model& model, const VectorXd& y, double active_tol);

}  // namespace

// ---------------------------------------------------------------------------
// Solve and certify
// ---------------------------------------------------------------------------

SubproblemSolution solve_p4(const SubproblemSpec& spec, const SolverSettings& settings,
                            const DecisionPoint* start) {
  if (spec.users.empty()) throw DomainError("solve_p4: no users");
  const P4Model model(spec);
  const int n = model.dim();
  const double m = static_cast<double>(model.rows().size());
  constexpr double kWeightGrowth = 20.0;

  SubproblemSolution sol;
  VectorXd y = model.pack_interior(start);

  // Phase I, skipped when the start is already comfortably inside.
  {
    const std::vector<RealUser> x = model.unpack(y);
    double worst = -std::numeric_limits<double>::infinity();
    for (const Row& r : model.rows()) {
      if (relaxed(r.kind)) worst = std::max(worst, model.value(r, x));
    }
    if (!(worst < -1e-6)) {
      VectorXd z(n + 1);
      z.head(n) = y;
      z[n] = std::max(worst, -0.5) + 1.0;
      double weight = 1.0;
      int used = 0;
      bool found = false;
      auto done = [&](const VectorXd& zz) { return zz[n] < -1e-3; };
      while (used < settings.max_iter) {
        const CenterResult c = center(PhaseOneBarrier{model, weight}, z, settings.max_iter - used, done);
        used += std::max(c.steps, 1);
        if (z[n] < -1e-3) {
          found = true;
          break;
        }
        if ((m + 1.0) / weight < 1e-10) {
          found = z[n] < 0.0;
          break;
        }
        weight *= kWeightGrowth;
      }
      sol.phase1_iterations = used;
      if (!found && used >= settings.max_iter) {
        sol.point = model.to_point(model.unpack(z.head(n)));
        sol.iterations = used;
        throw NoConvergence("solve_p4: Newton budget exhausted in phase I", sol);
      }
      if (!found) {
        const std::vector<RealUser> xs = model.unpack(z.head(n));
        std::string row = "none";
        double viol = -std::numeric_limits<double>::infinity();
        for (const Row& r : model.rows()) {
          if (!relaxed(r.kind)) continue;
          const double g = model.value(r, xs);
          if (g > viol) {
            viol = g;
            row = model.row_name(r);
          }
        }
        throw SubproblemInfeasible(row, viol);
      }
      y = z.head(n);
    }
  }

  // Main phase.
  const double gap_target = 0.1 * settings.tol_kkt;
  double weight = 1.0;
  int used = 0;
  for (;;) {
    const CenterResult c = center(MainBarrier{model, weight}, y, settings.max_iter - used);
    used += std::max(c.steps, 1);
    // A stalled line search means rounding dominates the barrier decrease; treat as centered.
    const bool centered = c.decrement2 <= kCenteredDecrement || c.stalled;
    if (m / weight <= gap_target && centered) break;
    if (used >= settings.max_iter) {
      const std::vector<RealUser> x = model.unpack(y);
      sol.point = model.to_point(x);
      sol.objective = model.objective(x);
      sol.iterations = used;
      sol.barrier_weight = weight;
      throw NoConvergence("solve_p4: Newton budget exhausted at barrier weight " + std::to_string(weight),
                          sol);
    }
    if (centered) weight *= kWeightGrowth;
  }

  const std::vector<RealUser> x = model.unpack(y);
  sol.point = model.to_point(x);
  sol.objective = model.objective(x);
  sol.iterations = used;
  sol.barrier_weight = weight;

  const KktReport cert = certify(model, y, kCertActiveTol);
  sol.kkt_residual = std::max(cert.stationarity, cert.complementarity);
  sol.feas_residual = std::max(0.0, cert.primal_infeasibility);
  return sol;
}

namespace {

/// Lawson-Hanson nonnegative least squares: argmin |A x - b|, x >= 0.
VectorXd nnls(const MatrixXd& a, const VectorXd& b) {
  const int cols = static_cast<int>(a.cols());
  VectorXd x = VectorXd::Zero(cols);
  if (cols == 0) return x;
  std::vector<bool> passive(cols, false);
  const double tol = 1e-14 * std::max(1.0, a.cwiseAbs().maxCoeff() * b.cwiseAbs().maxCoeff());
  for (int outer = 0; outer < 3 * cols + 10; ++outer) {
    const VectorXd w = a.transpose() * (b - a * x);
    int j = -1;
    double best = tol;
    for (int i = 0; i < cols; ++i) {
      if (!passive[i] && w[i] > best) {
        best = w[i];
        j = i;
      }
    }
    if (j < 0) break;
    passive[j] = true;
    for (int inner = 0; inner < 3 * cols + 10; ++inner) {
      std::vector<int> idx;
      for (int i = 0; i < cols; ++i) {
        if (passive[i]) idx.push_back(i);
      }
      MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
      const VectorXd sp = ap.completeOrthogonalDecomposition().solve(b);
      bool positive = true;
      for (Eigen::Index c = 0; c < sp.size(); ++c) positive = positive && sp[c] > 0.0;
      if (positive) {
        x.setZero();
        for (std::size_t c = 0; c < idx.size(); ++c) x[idx[c]] = sp[static_cast<Eigen::Index>(c)];
        break;
      }
      double alpha = 1.0;
      for (std::size_t c = 0; c < idx.size(); ++c) {
        const double s = sp[static_cast<Eigen::Index>(c)];
        if (s <= 0.0) alpha = std::min(alpha, x[idx[c]] / (x[idx[c]] - s));
      }
      for (std::size_t c = 0; c < idx.size(); ++c) {
        x[idx[c]] += alpha * (sp[static_cast<Eigen::Index>(c)] - x[idx[c]]);
        if (x[idx[c]] <= 1e-300) {
          x[idx[c]] = 0.0;
          passive[idx[c]] = false;
        }
      }
    }
  }
  return x;
}


KktReport certify(const P4Model& model, const VectorXd& y, double active_tol) {
  const int n = model.dim();
  const std::vector<RealUser> x = model.unpack(y);
  const auto& rows = model.rows();

  KktReport rep;
  rep.multipliers.assign(rows.size(), 0.0);
  rep.active.assign(rows.size(), false);
  std::vector<double> values(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rep.rows.push_back(model.row_name(rows[i]));
    values[i] = model.value(rows[i], x);
    rep.primal_infeasibility = std::max(rep.primal_infeasibility, values[i]);
    rep.active[i] = values[i] >= -active_tol;
  }

  // Multipliers minimize |stationarity|^2 + sum (mu_i g_i)^2 over all rows, so
  // slightly inactive rows may carry the small weight the central path gives them.
  VectorXd og;
  model.objective_derivs(x, og, nullptr);
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  MatrixXd a = MatrixXd::Zero(n + m, m);
  VectorXd rhs = VectorXd::Zero(n + m);
  rhs.head(n) = og;
  VectorXd rg(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    model.derivs(rows[i], x, rg, nullptr);
    a.col(i).head(n) = rg;
    a(n + i, i) = std::abs(values[i]);
  }
  const VectorXd mu = nnls(a, rhs);
  const double scale = std::max(1.0, og.cwiseAbs().maxCoeff());
  const VectorXd resid = og - a.topRows(n) * mu;
  rep.stationarity = (n > 0 ? resid.cwiseAbs().maxCoeff() : 0.0) / scale;
  for (Eigen::Index i = 0; i < m; ++i) {
    rep.multipliers[i] = mu[i];
    rep.complementarity = std::max(rep.complementarity, mu[i] * std::abs(values[i]) / scale);
  }
  return rep;
}

}  // namespace

KktReport verify_kkt(const SubproblemSpec& spec, const SubproblemSolution& sol, double active_tol) {
  const P4Model model(spec);
  return certify(model, model.pack_exact(sol.point), active_tol);
}

}  // namespace secmec
