#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "secmec/errors.hpp"
#include "secmec/experiment.hpp"

using namespace secmec;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / ("secmec_test_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

fs::path write_file(const std::string& name, const std::string& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p, std::ios::binary) << body;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SECMEC_CLI + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

TEST_CASE("minimal config fills the reference defaults") {
  const ExperimentConfig c = parse_config(R"({"scenario": "single_run"})");
  CHECK(c.scenario == Scenario::SingleRun);
  CHECK(c.system.bandwidth == 200e3);
  CHECK(c.system.deadline == 1.0);
  REQUIRE(c.system.users.size() == 2);
  for (const UserParams& u : c.system.users) {
    CHECK(u.cycles_per_bit == 1000.0);
    CHECK(u.cpu_coeff == 1e-24);
    CHECK(u.max_freq == 1e9);
    CHECK(u.energy_budget == 1.0);
    CHECK(u.weight == 1.0);
    CHECK(u.eve_gain == 1.0);
  }
  CHECK(c.system.users[0].ap_gain == 7.0);
  CHECK(c.system.users[1].ap_gain == 5.0);
  CHECK(c == default_config());
}

TEST_CASE("config validation errors") {
  CHECK_THROWS_AS(parse_config(R"({"sweep": {"L": []}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"sweep": {"G_scale": []}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"channel_mode": "random"})"), ConfigError);
  CHECK_NOTHROW(parse_config(R"({"channel_mode": "random", "seed": 3})"));
  CHECK_THROWS_AS(parse_config(R"({"scenario": "fig9"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"bandwidth_hz": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"users": []})"), ConfigError);

  try {
    parse_config(R"({"users": [{"H": 7, "colour": 1}]})");
    FAIL("expected unknown-key error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("colour") != std::string::npos);
    CHECK(std::string(e.what()).find("users[0]") != std::string::npos);
  }
  try {
    parse_config("{\n  \"scenario\": \"single_run\",\n  oops\n}");
    FAIL("expected syntax error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  try {
    parse_config(R"({"users": [{"H": "seven"}]})");
    FAIL("expected type error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("H") != std::string::npos);
  }
}

TEST_CASE("serialize then parse gives an equal config") {
  ExperimentConfig c = default_config();
  c.scenario = Scenario::CeVsBits;
  c.sweep_task_bits = {3e4, 4.5e4, 6e4};
  c.sweep_eve_scale = {1.0, 3.0};
  c.seed = 12345678901234ULL;
  c.channel_mode = ChannelMode::Random;
  c.output = "out.csv";
  c.system.circuit_power = 0.125;
  c.system.users[1].weight = 0.3;
  c.options.strict_paper_T = true;
  c.options.u1 = 1e-7;
  c.options.max_inner = 17;
  CHECK(parse_config(serialize_config(c)) == c);
  CHECK(parse_config(serialize_config(default_config())) == default_config());
}

TEST_CASE("deterministic channels return the configured gains") {
  const ExperimentConfig c = default_config();
  const std::vector<ChannelDraw> d = sample_channels(c, 99);
  REQUIRE(d.size() == 2);
  CHECK(d[0].ap_gain == 7.0);
  CHECK(d[1].ap_gain == 5.0);
  CHECK(d[0].eve_gain == 1.0);
  CHECK(d[1].eve_gain == 1.0);
}

TEST_CASE("random channels: seeded, independent and unit mean") {
  ExperimentConfig c = default_config();
  c.channel_mode = ChannelMode::Random;
  c.seed = 5;
  const auto a = sample_channels(c, 5);
  const auto b = sample_channels(c, 5);
  const auto other = sample_channels(c, 6);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(a[k].ap_gain == b[k].ap_gain);
    CHECK(a[k].eve_gain == b[k].eve_gain);
  }
  CHECK(a[0].ap_gain != other[0].ap_gain);

  c.system.users.assign(50000, UserParams{});
  for (UserParams& u : c.system.users) {
    u.ap_gain = 1.0;
    u.eve_gain = 1.0;
  }
  const auto draws = sample_channels(c, 2024);
  double sum = 0.0;
  for (const ChannelDraw& d : draws) sum += d.ap_gain + d.eve_gain;
  CHECK(sum / 1e5 == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("csv: header and one line per user") {
  ResultRow r;
  r.scenario = "single_run";
  r.task_bits = 5e4;
  r.scheme = "joint";
  r.users = {{0.25, 1e7, 0.5}};
  r.ce = 1.5e6;
  r.outer_iters = 3;
  r.termination = "ResidualConverged";
  const std::string csv = format_csv({r});
  const std::vector<std::string> lines = split(csv, '\n');
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "scenario,L,G_scale,scheme,user,iter,t_s,f_hz,p_w,ce_bits_per_joule,outer_iters,termination");
  CHECK(split(lines[1], ',').size() == 12);
  r.users.push_back({0.5, 2e7, 0.25});
  CHECK(split(format_csv({r}), '\n').size() == 3);
}

TEST_CASE("csv: written values parse back exactly") {
  ResultRow r;
  r.scenario = "convergence";
  r.task_bits = 6e4;
  r.eve_scale = 3.0;
  r.scheme = "joint";
  r.iter = 4;
  r.users = {{0.1 / 3.0, 1.0 / 7.0 * 1e8, 2.0 / 3.0}};
  r.ce = 1234567.891011121314;
  r.outer_iters = 4;
  r.termination = "ResidualConverged";
  const fs::path p = scratch_dir() / "round.csv";
  write_csv({r}, p.string());
  const std::vector<std::string> f = split(split(slurp(p), '\n')[1], ',');
  CHECK(std::stod(f[1]) == r.task_bits);
  CHECK(std::stod(f[2]) == r.eve_scale);
  CHECK(std::stod(f[6]) == r.users[0].time);
  CHECK(std::stod(f[7]) == r.users[0].freq);
  CHECK(std::stod(f[8]) == r.users[0].power);
  CHECK(std::stod(f[9]) == r.ce);
  CHECK_THROWS_AS(write_csv({}, p.string()), Error);
  CHECK_THROWS_AS(write_csv({r}, "/nonexistent_dir/x.csv"), Error);
}

TEST_CASE("golden single run") {
  const std::string dir = SECMEC_GOLDEN_DIR;
  const ExperimentConfig c = load_config(dir + "/single_run.json");
  CHECK(format_csv(run_experiment(c)) == slurp(dir + "/single_run.csv"));
}

TEST_CASE("scheme comparison emits every scheme once per sweep point") {
  ExperimentConfig c = default_config();
  c.scenario = Scenario::SchemeCompare;
  c.sweep_task_bits = {4e4, 6e4};
  const std::vector<ResultRow> rows = run_experiment(c);
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 0; i < rows.size(); i += 3) {
    CHECK(rows[i].scheme == "joint");
    CHECK(rows[i + 1].scheme == "local_only");
    CHECK(rows[i + 2].scheme == "offload_only");
    CHECK(rows[i].task_bits == rows[i + 2].task_bits);
    CHECK(rows[i].ce >= rows[i + 1].ce * (1 - 1e-3));
    CHECK(rows[i].ce >= rows[i + 2].ce * (1 - 1e-3));
  }
}

TEST_CASE("convergence scenario emits one snapshot per outer iteration") {
  ExperimentConfig c = default_config();
  c.scenario = Scenario::Convergence;
  c.sweep_task_bits = {5e4};
  const std::vector<ResultRow> rows = run_experiment(c);
  REQUIRE_FALSE(rows.empty());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].iter == static_cast<int>(i));
  CHECK(rows.back().termination == "ResidualConverged");
}

TEST_CASE("solver failures are recorded and the sweep continues") {
  ExperimentConfig c = default_config();
  c.scenario = Scenario::CeVsBits;
  c.sweep_task_bits = {1e9, 5e4};
  const std::vector<ResultRow> rows = run_experiment(c);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].termination == "Infeasible");
  CHECK(is_error_termination(rows[0].termination));
  CHECK(rows[1].termination == "ResidualConverged");
  CHECK_FALSE(is_error_termination("ClosedForm"));
  CHECK_FALSE(is_error_termination("BaselineInfeasible"));
}

TEST_CASE("cli: exit codes and byte-identical reruns") {
  const fs::path ok = write_file("ok.json", R"({"scenario": "scheme_compare", "sweep": {"L": [5e4]}})");
  const fs::path bad = write_file("bad.json", R"({"scenario": "single_run", "unknown": 1})");
  const fs::path huge = write_file("huge.json", R"({"sweep": {"L": [1e9]}})");
  const fs::path rnd = write_file("rnd.json", R"({"channel_mode": "random", "seed": 11})");
  const fs::path out1 = scratch_dir() / "a.csv";
  const fs::path out2 = scratch_dir() / "b.csv";

  CHECK(run_cli("sweep \"" + ok.string() + "\" --out \"" + out1.string() + "\"") == 0);
  CHECK(run_cli("sweep \"" + ok.string() + "\" --out \"" + out2.string() + "\"") == 0);
  CHECK(slurp(out1) == slurp(out2));
  CHECK(split(slurp(out1), '\n').size() == 7);

  CHECK(run_cli("solve \"" + rnd.string() + "\" --out \"" + out1.string() + "\"") == 0);
  CHECK(run_cli("solve \"" + rnd.string() + "\" --out \"" + out2.string() + "\"") == 0);
  CHECK(slurp(out1) == slurp(out2));
  CHECK(run_cli("solve \"" + rnd.string() + "\" --seed 12 --out \"" + out2.string() + "\"") == 0);
  CHECK(slurp(out1) != slurp(out2));

  CHECK(run_cli("solve \"" + bad.string() + "\"") == 2);
  CHECK(run_cli("solve /nonexistent.json") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("solve \"" + ok.string() + "\" --cccp-faithful --paper-linearization") == 2);
  CHECK(run_cli("solve \"" + huge.string() + "\"") == 1);
  CHECK(run_cli("oracle \"" + ok.string() + "\" --grid 40") == 0);
  CHECK(run_cli("oracle \"" + ok.string() + "\" --grid 1") == 2);
}
