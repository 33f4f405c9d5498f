#include "secmec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "secmec/errors.hpp"

namespace secmec {

using nlohmann::json;

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::SingleRun:
      return "single_run";
    case Scenario::Convergence:
      return "convergence";
    case Scenario::CeVsBits:
      return "ce_vs_bits";
    case Scenario::SchemeCompare:
      return "scheme_compare";
  }
  return "unknown";
}

std::string to_string(ChannelMode m) { return m == ChannelMode::Random ? "random" : "deterministic"; }

namespace {

bool same_user(const UserParams& a, const UserParams& b) {
  return a.weight == b.weight && a.task_bits == b.task_bits && a.cycles_per_bit == b.cycles_per_bit &&
         a.cpu_coeff == b.cpu_coeff && a.max_freq == b.max_freq && a.energy_budget == b.energy_budget &&
         a.ap_gain == b.ap_gain && a.eve_gain == b.eve_gain;
}

// ---- JSON reading with field paths in every error ---------------------------

class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  /// Rejects keys outside the allowed list.
  void only(std::initializer_list<const char*> keys) const {
    for (const auto& [key, value] : node_.items()) {
      (void)value;
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
        throw ConfigError(field(key) + ": unknown key");
      }
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  const json& at(const char* key) const { return node_.at(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) throw ConfigError(field(key) + ": must be finite");
  }

  void integer(const char* key, int& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
    out = v.get<int>();
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    out = v.get<std::string>();
  }

  void numbers(const char* key, std::vector<double>& out) const {
    if (!has(key)) return;
    const json& v = node_.at(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
};

UserParams read_user(const json& node, const std::string& path) {
  const Reader r(node, path);
  r.only({"weight", "task_bits", "cycles_per_bit", "eps", "f_max_hz", "energy_budget_j", "H", "G"});
  UserParams u;
  r.number("weight", u.weight);
  r.number("task_bits", u.task_bits);
  r.number("cycles_per_bit", u.cycles_per_bit);
  r.number("eps", u.cpu_coeff);
  r.number("f_max_hz", u.max_freq);
  r.number("energy_budget_j", u.energy_budget);
  r.number("H", u.ap_gain);
  r.number("G", u.eve_gain);
  return u;
}

RunOptions read_options(const json& node) {
  const Reader r(node, "options");
  r.only({"strict_paper_T", "cccp_faithful", "log2_rates", "cheap_backtrack", "stall_restart", "max_outer",
          "max_inner", "u1", "u2", "workers"});
  RunOptions o;
  r.boolean("strict_paper_T", o.strict_paper_T);
  r.boolean("cccp_faithful", o.cccp_faithful);
  r.boolean("log2_rates", o.log2_rates);
  r.boolean("cheap_backtrack", o.cheap_backtrack);
  r.boolean("stall_restart", o.stall_restart);
  r.integer("max_outer", o.max_outer);
  r.integer("max_inner", o.max_inner);
  r.number("u1", o.u1);
  r.number("u2", o.u2);
  r.integer("workers", o.workers);
  return o;
}

Scenario parse_scenario(const std::string& s) {
  for (Scenario c : {Scenario::SingleRun, Scenario::Convergence, Scenario::CeVsBits, Scenario::SchemeCompare}) {
    if (to_string(c) == s) return c;
  }
  throw ConfigError("scenario: unknown value '" + s +
                    "' (expected single_run, convergence, ce_vs_bits or scheme_compare)");
}

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// ---- Rows ------------------------------------------------------------------

std::vector<UserRow> user_rows(const DecisionPoint& point, double time_floor) {
  std::vector<UserRow> rows;
  for (const UserDecision& d : point.users) {
    UserRow r;
    r.time = d.time;
    r.freq = d.freq;
    r.power = d.time > 100.0 * time_floor ? d.tx_energy / d.time : 0.0;
    rows.push_back(r);
  }
  return rows;
}

struct SweepPoint {
  double task_bits;  // NaN when the users keep their own sizes
  double eve_scale;
};

SystemParams system_at(const ExperimentConfig& cfg, const std::vector<ChannelDraw>& channels,
                       const SweepPoint& pt) {
  SystemParams sys = cfg.system;
  sys.log2_rates = sys.log2_rates || cfg.options.log2_rates;
  for (std::size_t k = 0; k < sys.users.size(); ++k) {
    UserParams& u = sys.users[k];
    u.ap_gain = channels[k].ap_gain;
    u.eve_gain = channels[k].eve_gain * pt.eve_scale;
    if (!std::isnan(pt.task_bits)) u.task_bits = pt.task_bits;
  }
  return sys;
}

ResultRow base_row(const ExperimentConfig& cfg, const SystemParams& sys, const SweepPoint& pt,
                   const std::string& scheme) {
  ResultRow row;
  row.scenario = to_string(cfg.scenario);
  row.task_bits = std::isnan(pt.task_bits) ? sys.users.front().task_bits : pt.task_bits;
  row.eve_scale = pt.eve_scale;
  row.scheme = scheme;
  return row;
}

ResultRow joint_row(const ExperimentConfig& cfg, const SystemParams& sys, const SweepPoint& pt,
                    const SolveReport& rep, const AlgorithmOptions& opts, const std::string& scheme) {
  ResultRow row = base_row(cfg, sys, pt, scheme);
  row.iter = rep.outer_iterations();
  row.users = user_rows(rep.point, opts.time_floor);
  row.ce = std::max(rep.final_ce, 0.0);
  row.outer_iters = rep.outer_iterations();
  row.termination = to_string(rep.termination);
  return row;
}

/// Baselines may be infeasible by construction; that is a result, not a failure.
std::string baseline_termination(Termination t) {
  return t == Termination::Infeasible ? "BaselineInfeasible" : to_string(t);
}

std::vector<ResultRow> rows_at(const ExperimentConfig& cfg, const std::vector<ChannelDraw>& channels,
                               const SweepPoint& pt) {
  const SystemParams sys = system_at(cfg, channels, pt);
  const AlgorithmOptions opts = algorithm_options(cfg.options);
  std::vector<ResultRow> rows;
  const SolveReport joint = run_algorithm1(sys, opts);

  if (cfg.scenario == Scenario::Convergence) {
    for (const OuterRecord& rec : joint.outer_trace) {
      ResultRow row = base_row(cfg, sys, pt, "joint");
      row.iter = rec.iteration;
      row.users = user_rows(rec.point, opts.time_floor);
      row.ce = std::max(rec.ce, 0.0);
      row.outer_iters = joint.outer_iterations();
      row.termination = to_string(joint.termination);
      rows.push_back(std::move(row));
    }
    if (rows.empty()) rows.push_back(joint_row(cfg, sys, pt, joint, opts, "joint"));
    return rows;
  }

  rows.push_back(joint_row(cfg, sys, pt, joint, opts, "joint"));
  if (cfg.scenario == Scenario::SchemeCompare) {
    const BaselineResult local = baseline_local_only(sys);
    ResultRow lrow = base_row(cfg, sys, pt, "local_only");
    lrow.users = user_rows(local.point, opts.time_floor);
    lrow.ce = local.total_ce;
    lrow.termination = local.all_feasible() ? "ClosedForm" : "BaselineInfeasible";
    rows.push_back(std::move(lrow));

    const SolveReport off = baseline_offload_only(sys, opts);
    ResultRow orow = joint_row(cfg, sys, pt, off, opts, "offload_only");
    orow.termination = baseline_termination(off.termination);
    rows.push_back(std::move(orow));
  }
  return rows;
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
  std::vector<SweepPoint> pts;
  const std::vector<double> bits =
      cfg.sweep_task_bits.empty() ? std::vector<double>{std::nan("")} : cfg.sweep_task_bits;
  for (double L : bits) {
    for (double g : cfg.sweep_eve_scale) pts.push_back({L, g});
  }
  return pts;
}

/// Runs task(i) for every point on a bounded pool; results keep input order.
template <class Task>
std::vector<std::vector<ResultRow>> parallel_map(std::size_t count, int workers, const Task& task) {
  std::vector<std::vector<ResultRow>> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::size_t pool = workers > 0 ? static_cast<std::size_t>(workers)
                                 : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  pool = std::min(pool, count);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (pool <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < pool; ++w) threads.emplace_back(work);
    for (std::thread& t : threads) t.join();
  }
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::uint64_t seed_of(const ExperimentConfig& cfg) { return cfg.seed.value_or(0); }

}  // namespace

void ExperimentConfig::validate() const {
  if (system.users.empty()) throw ConfigError("users: at least one user is required");
  try {
    system.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  if (sweep_eve_scale.empty()) throw ConfigError("sweep.G_scale: grid must be nonempty");
  for (double L : sweep_task_bits) {
    if (!(L >= 0.0) || !std::isfinite(L)) throw ConfigError("sweep.L: task sizes must be finite and >= 0");
  }
  for (double g : sweep_eve_scale) {
    if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("sweep.G_scale: scales must be finite and > 0");
  }
  if (channel_mode == ChannelMode::Random && !seed) {
    throw ConfigError("seed: required when channel_mode is random");
  }
  if (!(options.u1 > 0.0)) throw ConfigError("options.u1: must be > 0");
  if (!(options.u2 > 0.0)) throw ConfigError("options.u2: must be > 0");
  if (options.max_outer < 1) throw ConfigError("options.max_outer: must be >= 1");
  if (options.max_inner < 1) throw ConfigError("options.max_inner: must be >= 1");
  if (options.workers < 0) throw ConfigError("options.workers: must be >= 0");
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  const SystemParams& x = a.system;
  const SystemParams& y = b.system;
  if (x.users.size() != y.users.size()) return false;
  for (std::size_t k = 0; k < x.users.size(); ++k) {
    if (!same_user(x.users[k], y.users[k])) return false;
  }
  return a.scenario == b.scenario && x.bandwidth == y.bandwidth && x.deadline == y.deadline &&
         x.circuit_power == y.circuit_power && x.log2_rates == y.log2_rates &&
         a.sweep_task_bits == b.sweep_task_bits && a.sweep_eve_scale == b.sweep_eve_scale && a.seed == b.seed &&
         a.channel_mode == b.channel_mode && a.output == b.output && a.options == b.options;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  UserParams first;
  first.ap_gain = 7.0;
  UserParams second;
  second.ap_gain = 5.0;
  cfg.system.users = {first, second};
  return cfg;
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": JSON syntax error at " + line_col(text, e.byte) + ": " + e.what());
  }
  ExperimentConfig cfg = default_config();
  try {
    const Reader r(doc, "");
    r.only({"scenario", "bandwidth_hz", "deadline_s", "circuit_power_w", "users", "sweep", "seed",
            "channel_mode", "output", "options"});
    if (r.has("scenario")) {
      std::string s;
      r.string("scenario", s);
      cfg.scenario = parse_scenario(s);
    }
    r.number("bandwidth_hz", cfg.system.bandwidth);
    r.number("deadline_s", cfg.system.deadline);
    r.number("circuit_power_w", cfg.system.circuit_power);
    if (r.has("users")) {
      const json& users = r.at("users");
      if (!users.is_array()) throw ConfigError("users: expected an array of user objects");
      cfg.system.users.clear();
      for (std::size_t i = 0; i < users.size(); ++i) {
        cfg.system.users.push_back(read_user(users[i], "users[" + std::to_string(i) + "]"));
      }
    }
    if (r.has("sweep")) {
      const Reader s(r.at("sweep"), "sweep");
      s.only({"L", "G_scale"});
      if (s.has("L")) {
        s.numbers("L", cfg.sweep_task_bits);
        if (cfg.sweep_task_bits.empty()) throw ConfigError("sweep.L: grid must be nonempty");
      }
      s.numbers("G_scale", cfg.sweep_eve_scale);
    }
    if (r.has("seed")) {
      const json& v = r.at("seed");
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        throw ConfigError("seed: expected a nonnegative integer");
      }
      cfg.seed = v.get<std::uint64_t>();
    }
    if (r.has("channel_mode")) {
      std::string m;
      r.string("channel_mode", m);
      if (m == "deterministic") {
        cfg.channel_mode = ChannelMode::Deterministic;
      } else if (m == "random") {
        cfg.channel_mode = ChannelMode::Random;
      } else {
        throw ConfigError("channel_mode: unknown value '" + m + "' (expected deterministic or random)");
      }
    }
    r.string("output", cfg.output);
    if (r.has("options")) cfg.options = read_options(r.at("options"));
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json doc;
  doc["scenario"] = to_string(cfg.scenario);
  doc["bandwidth_hz"] = cfg.system.bandwidth;
  doc["deadline_s"] = cfg.system.deadline;
  doc["circuit_power_w"] = cfg.system.circuit_power;
  json users = json::array();
  for (const UserParams& u : cfg.system.users) {
    users.push_back({{"weight", u.weight},
                     {"task_bits", u.task_bits},
                     {"cycles_per_bit", u.cycles_per_bit},
                     {"eps", u.cpu_coeff},
                     {"f_max_hz", u.max_freq},
                     {"energy_budget_j", u.energy_budget},
                     {"H", u.ap_gain},
                     {"G", u.eve_gain}});
  }
  doc["users"] = users;
  json sweep;
  if (!cfg.sweep_task_bits.empty()) sweep["L"] = cfg.sweep_task_bits;
  sweep["G_scale"] = cfg.sweep_eve_scale;
  doc["sweep"] = sweep;
  if (cfg.seed) doc["seed"] = *cfg.seed;
  doc["channel_mode"] = to_string(cfg.channel_mode);
  if (!cfg.output.empty()) doc["output"] = cfg.output;
  const RunOptions& o = cfg.options;
  doc["options"] = {{"strict_paper_T", o.strict_paper_T}, {"cccp_faithful", o.cccp_faithful},
                    {"log2_rates", o.log2_rates || cfg.system.log2_rates},
                    {"cheap_backtrack", o.cheap_backtrack}, {"stall_restart", o.stall_restart},
                    {"max_outer", o.max_outer}, {"max_inner", o.max_inner}, {"u1", o.u1}, {"u2", o.u2},
                    {"workers", o.workers}};
  return doc.dump(2);
}

std::vector<ChannelDraw> sample_channels(const ExperimentConfig& config, std::uint64_t seed) {
  std::vector<ChannelDraw> out;
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> unit(1.0);
  for (const UserParams& u : config.system.users) {
    ChannelDraw d{u.ap_gain, u.eve_gain};
    if (config.channel_mode == ChannelMode::Random) {
      d.ap_gain *= unit(rng);
      d.eve_gain *= unit(rng);
    }
    out.push_back(d);
  }
  return out;
}

AlgorithmOptions algorithm_options(const RunOptions& o) {
  AlgorithmOptions a;
  a.tol.residual = o.u1;
  a.tol.inner_change = o.u2;
  a.tol.max_outer = o.max_outer;
  a.tol.max_inner = o.max_inner;
  a.mode = o.cccp_faithful ? LinearizationMode::Split : LinearizationMode::Full;
  a.lambda_row = o.strict_paper_T ? LambdaRow::Unit : LambdaRow::Weighted;
  a.cheap_backtrack = o.cheap_backtrack;
  a.stall_restart = o.stall_restart;
  return a;
}

bool is_error_termination(const std::string& t) {
  return t == "Infeasible" || t == "Stalled" || t == "MaxOuterIters";
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::vector<ChannelDraw> channels = sample_channels(config, seed_of(config));
  const std::vector<SweepPoint> pts = sweep_points(config);
  const auto parts = parallel_map(pts.size(), config.options.workers,
                                  [&](std::size_t i) { return rows_at(config, channels, pts[i]); });
  std::vector<ResultRow> rows;
  for (const auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

std::vector<ResultRow> run_oracle_comparison(const ExperimentConfig& config, const OracleGrid& grid) {
  config.validate();
  const std::vector<ChannelDraw> channels = sample_channels(config, seed_of(config));
  const std::vector<SweepPoint> pts = sweep_points(config);
  const AlgorithmOptions opts = algorithm_options(config.options);
  const auto parts = parallel_map(pts.size(), config.options.workers, [&](std::size_t i) {
    const SystemParams sys = system_at(config, channels, pts[i]);
    std::vector<ResultRow> rows;
    ResultRow orow = base_row(config, sys, pts[i], "oracle");
    try {
      const OracleResult o = brute_force_oracle(sys, grid);
      orow.users = user_rows(o.point, opts.time_floor);
      orow.ce = o.ce;
      orow.termination = "Exhaustive";
    } catch (const InfeasibleInstance&) {
      orow.users = std::vector<UserRow>(sys.users.size());
      orow.termination = "Infeasible";
    }
    rows.push_back(std::move(orow));
    rows.push_back(joint_row(config, sys, pts[i], run_algorithm1(sys, opts), opts, "joint"));
    return rows;
  });
  std::vector<ResultRow> rows;
  for (const auto& p : parts) rows.insert(rows.end(), p.begin(), p.end());
  return rows;
}

std::string format_csv(const std::vector<ResultRow>& rows) {
  std::string out = "scenario,L,G_scale,scheme,user,iter,t_s,f_hz,p_w,ce_bits_per_joule,outer_iters,termination\n";
  char buf[512];
  for (const ResultRow& r : rows) {
    for (std::size_t k = 0; k < r.users.size(); ++k) {
      const UserRow& u = r.users[k];
      std::snprintf(buf, sizeof buf, "%s,%.16e,%.16e,%s,%zu,%d,%.16e,%.16e,%.16e,%.16e,%d,%s\n", r.scenario.c_str(),
                    r.task_bits, r.eve_scale, r.scheme.c_str(), k + 1, r.iter, u.time, u.freq, u.power, r.ce,
                    r.outer_iters, r.termination.c_str());
      out += buf;
    }
  }
  return out;
}

void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  if (rows.empty()) throw Error(path + ": refusing to write an empty result set");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path + ": cannot open for writing");
  out << format_csv(rows);
  out.flush();
  if (!out) throw Error(path + ": write failed");
}

}  // namespace secmec
