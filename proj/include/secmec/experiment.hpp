#pragma once

// Experiment harness: JSON configuration, seeded channel draws, scenario
// sweeps and CSV emission.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "secmec/driver.hpp"
#include "secmec/model.hpp"

namespace secmec {

enum class Scenario { SingleRun, Convergence, CeVsBits, SchemeCompare };
enum class ChannelMode { Deterministic, Random };

std::string to_string(Scenario s);
std::string to_string(ChannelMode m);

struct RunOptions {
  bool strict_paper_T = false;  // lambda rows use lambda E - 1
  bool cccp_faithful = true;    // keep the legitimate entropy term concave
  bool log2_rates = false;
  bool cheap_backtrack = false;
  bool stall_restart = true;
  int max_outer = 50;
  int max_inner = 50;
  double u1 = 1e-6;
  double u2 = 1e-7;
  int workers = 0;  // 0 selects the hardware concurrency

  bool operator==(const RunOptions&) const = default;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::SingleRun;
  SystemParams system;
  std::vector<double> sweep_task_bits;  // empty: each user keeps its own task size
  std::vector<double> sweep_eve_scale{1.0};
  std::optional<std::uint64_t> seed;
  ChannelMode channel_mode = ChannelMode::Deterministic;
  std::string output;  // empty: stdout
  RunOptions options;

  /// Throws ConfigError naming the violated invariant.
  void validate() const;
};

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Two users with ap gains 7 and 5, eve gains 1, 5e4-bit tasks.
ExperimentConfig default_config();

/// Parses a JSON document. Unknown keys and malformed values raise
/// ConfigError with the field path or the line and column of a syntax error.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);

struct ChannelDraw {
  double ap_gain = 0.0;
  double eve_gain = 0.0;
};

/// Deterministic mode returns the configured gains. Random mode scales each
/// gain by an independent unit-mean exponential draw (squared magnitude of a
/// unit complex Gaussian) from a generator seeded with seed.
std::vector<ChannelDraw> sample_channels(const ExperimentConfig& config, std::uint64_t seed);

AlgorithmOptions algorithm_options(const RunOptions& options);

struct UserRow {
  double time = 0.0;
  double freq = 0.0;
  double power = 0.0;
};

struct ResultRow {
  std::string scenario;
  double task_bits = 0.0;  // sweep coordinate: the common L, or the first user's L without a sweep
  double eve_scale = 1.0;
  std::string scheme;       // joint, local_only, offload_only, oracle
  int iter = 0;             // outer iteration of this snapshot
  std::vector<UserRow> users;
  double ce = 0.0;          // total CE of the row, bits per joule
  int outer_iters = 0;
  std::string termination;
};

/// True for terminations that signal a solver failure.
bool is_error_termination(const std::string& termination);

std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

/// Oracle row followed by the joint row at every sweep point.
std::vector<ResultRow> run_oracle_comparison(const ExperimentConfig& config, const OracleGrid& grid);

std::string format_csv(const std::vector<ResultRow>& rows);

/// Throws Error carrying the path on I/O failure.
void write_csv(const std::vector<ResultRow>& rows, const std::string& path);

}  // namespace secmec
