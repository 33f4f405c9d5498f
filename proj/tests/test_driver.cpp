#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "secmec/driver.hpp"
#include "secmec/errors.hpp"
#include "support.hpp"

using namespace secmec;
using secmec::testing::reference_system;
using secmec::testing::single_user;

namespace {

double total_time(const SolveReport& r) {
  double s = 0.0;
  for (const UserReport& u : r.per_user) s += u.time;
  return s;
}

AlgorithmOptions full_mode() {
  AlgorithmOptions o;
  o.mode = LinearizationMode::Full;
  return o;
}

}  // namespace

TEST_CASE("initialization: idle users sit at the time floor") {
  const SystemParams p = reference_system(0.0);
  const InitialState st = initialize(p);
  for (const UserDecision& d : st.point.users) {
    CHECK(d.time == doctest::Approx(2 * kTimeFloor));
    CHECK(d.freq == 0.0);
  }
}

TEST_CASE("initialization: feasible start on the reference instance") {
  const SystemParams p = reference_system();
  const InitialState st = initialize(p);
  CHECK(check_feasibility(st.point, p, 1e-9).empty());
  const RatioTerms t = ratio_terms(st.point, p);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(st.aux.lambda[k] == doctest::Approx(1.0 / t.energy[k]).epsilon(1e-14));
    CHECK(st.aux.beta[k] == doctest::Approx(t.bits[k] / t.energy[k]).epsilon(1e-14));
  }
}

TEST_CASE("initialization: oversize task reports the achievable bits") {
  const SystemParams p = reference_system(1e9);
  try {
    initialize(p);
    FAIL("expected InfeasibleInstance");
  } catch (const InfeasibleInstance& e) {
    CHECK(e.required_bits() == 1e9);
    CHECK(e.max_bits() > 0.0);
    CHECK(e.max_bits() < 1e9);
  }
  CHECK(run_algorithm1(p).termination == Termination::Infeasible);
}

TEST_CASE("initialization: tight task forces need-based time shares") {
  // Too large for a 0.45 s uplink share with local help, still within reach overall.
  SystemParams p = reference_system();
  p.users.resize(1);
  const double cap_half = max_achievable_bits(p.users[0], p, 0.45).bits;
  const double cap_full = max_achievable_bits(p.users[0], p, 1.0).bits;
  REQUIRE(cap_full > cap_half * 1.01);
  p.users[0].task_bits = 0.5 * (cap_half + cap_full);
  const InitialState st = initialize(p);
  CHECK(check_feasibility(st.point, p, 1e-9).empty());
}

TEST_CASE("inner loop: objective sequence is nondecreasing in split mode") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(0.5, 2.0);
  for (int i = 0; i < 40; ++i) {
    SystemParams p = reference_system(5e4 * U(rng));
    p.users[0].ap_gain *= U(rng);
    p.users[1].ap_gain *= U(rng);
    InitialState st;
    try {
      st = initialize(p);
    } catch (const InfeasibleInstance&) {
      continue;
    }
    AuxiliaryState aux = st.aux;
    for (double& b : aux.beta) b *= U(rng);
    const InnerResult r = inner_sca(p, aux, st.point);
    for (std::size_t j = 1; j < r.trace.size(); ++j) {
      const double scale = std::abs(r.trace[j - 1].objective) + 1.0;
      CHECK(r.trace[j].objective >= r.trace[j - 1].objective - 1e-7 * scale);
    }
  }
}

TEST_CASE("inner loop: an idle weak-link user settles at the cubic stationary frequency") {
  const SystemParams p = single_user(1.1, 1.0, 0.0);
  AuxiliaryState aux{{1.0}, {4e5}};
  DecisionPoint start;
  start.users.resize(1);
  start.users[0].time = 0.1;
  start.users[0].tx_energy = 1e-3;
  start.users[0].legit_snr_energy = 1.1e-3;
  start.users[0].eve_snr_energy = 1e-3;
  const InnerResult r = inner_sca(p, aux, start);
  const UserParams& u = p.users[0];
  const double f_star = std::sqrt(u.weight / (3.0 * 4e5 * u.cpu_coeff * u.cycles_per_bit));
  CHECK(r.point.users[0].freq == doctest::Approx(f_star).epsilon(1e-6));
  CHECK(r.converged);
}

TEST_CASE("reference instance converges quickly and with a small residual") {
  for (double L : {5e4, 6e4}) {
    const SolveReport r = run_algorithm1(reference_system(L));
    CAPTURE(L);
    CHECK(r.termination == Termination::ResidualConverged);
    CHECK(r.outer_iterations() <= 15);
    CHECK(r.outer_trace.back().residual <= 1e-6);
    CHECK(check_feasibility(r.point, reference_system(L), 1e-6).empty());
    CHECK(r.final_ce == doctest::Approx(ce_objective(r.point, reference_system(L)).total).epsilon(1e-15));
    CHECK(r.final_ce > baseline_local_only(reference_system(L)).total_ce);
  }
}

TEST_CASE("larger tasks use more uplink time") {
  const SolveReport a = run_algorithm1(reference_system(5e4));
  const SolveReport b = run_algorithm1(reference_system(6e4));
  CHECK(total_time(b) > total_time(a));
}

TEST_CASE("repeat solves are bit-identical") {
  const SolveReport a = run_algorithm1(reference_system());
  const SolveReport b = run_algorithm1(reference_system());
  CHECK(a.final_ce == b.final_ce);
  CHECK(a.outer_trace.size() == b.outer_trace.size());
  for (std::size_t k = 0; k < 2; ++k) CHECK(a.point.users[k].time == b.point.users[k].time);
}

TEST_CASE("single-user solves match the grid oracle") {
  std::mt19937_64 rng(7);
  std::exponential_distribution<double> X(1.0);
  int checked = 0;
  while (checked < 3) {
    SystemParams p = single_user(7.0 * X(rng), X(rng));
    const SolveReport r = run_algorithm1(p);
    const OracleResult o = brute_force_oracle(p, {120, 120, 120});
    if (o.ce <= 0.0) {
      CHECK(r.termination == Termination::Infeasible);
      continue;
    }
    ++checked;
    CHECK(r.termination == Termination::ResidualConverged);
    CHECK(r.final_ce >= 0.98 * o.ce);
  }
}

TEST_CASE("local-only baseline") {
  SystemParams p = reference_system();
  p.users.resize(1);
  const BaselineResult b = baseline_local_only(p);
  CHECK(b.total_ce == doctest::Approx(4e5).epsilon(1e-13));
  CHECK(b.point.users[0].freq == doctest::Approx(5e7));
  CHECK(b.all_feasible());

  const BaselineResult big = baseline_local_only(reference_system(1e6));
  CHECK_FALSE(big.all_feasible());
  CHECK(big.total_ce == 0.0);
}

TEST_CASE("joint scheme dominates both baselines") {
  for (double L : {3e4, 5e4, 7e4}) {
    const SystemParams p = reference_system(L);
    const SolveReport joint = run_algorithm1(p);
    const BaselineResult local = baseline_local_only(p);
    const SolveReport offload = baseline_offload_only(p);
    CAPTURE(L);
    REQUIRE(joint.termination == Termination::ResidualConverged);
    CHECK(joint.final_ce >= local.total_ce * (1 - 1e-3));
    if (offload.termination == Termination::ResidualConverged) {
      CHECK(joint.final_ce >= offload.final_ce * (1 - 1e-3));
      for (const UserDecision& d : offload.point.users) CHECK(d.freq == 0.0);
    }
  }
}

TEST_CASE("offload-only baseline converges across the task sweep") {
  // Without local help the ratio is 1-homogeneous along a ray of inner maximizers.
  for (double L : {2e4, 3e4, 4e4, 5e4, 6e4, 7e4, 8e4}) {
    const SystemParams p = reference_system(L);
    const SolveReport r = baseline_offload_only(p);
    CAPTURE(L);
    CHECK(r.termination == Termination::ResidualConverged);
    CHECK(check_feasibility(r.point, p, 1e-6).empty());
  }
}

TEST_CASE("a stronger eavesdropper never helps, and CE falls with the task size") {
  double previous = INFINITY;
  for (double L : {3e4, 4e4, 5e4, 6e4, 7e4}) {
    const SystemParams base = reference_system(L);
    SystemParams strong = base;
    for (UserParams& u : strong.users) u.eve_gain *= 3.0;
    const SolveReport a = run_algorithm1(base);
    const SolveReport b = run_algorithm1(strong);
    CAPTURE(L);
    REQUIRE(a.termination == Termination::ResidualConverged);
    CHECK(b.final_ce <= a.final_ce * (1 + 1e-3));
    CHECK(a.final_ce <= previous * (1 + 1e-3));
    previous = a.final_ce;
  }
}

TEST_CASE("users that cannot offload securely are pinned to local computing") {
  SystemParams p = reference_system();
  p.users[1].ap_gain = 0.5;
  const SolveReport r = run_algorithm1(p);
  CHECK(r.termination == Termination::ResidualConverged);
  CHECK(r.per_user[1].pinned_local);
  CHECK_FALSE(r.per_user[1].offloading);
  CHECK(r.per_user[1].ce == doctest::Approx(4e5).epsilon(1e-12));
  CHECK(r.per_user[0].offloading);
}

TEST_CASE("idle system reports zero CE without solving") {
  const SolveReport r = run_algorithm1(reference_system(0.0));
  CHECK(r.termination == Termination::ResidualConverged);
  CHECK(r.final_ce == 0.0);
}

TEST_CASE("fully linearized mode never reports an infeasible point as converged") {
  for (double L : {5e4, 6e4}) {
    const SystemParams p = reference_system(L);
    const SolveReport r = run_algorithm1(p, full_mode());
    if (r.termination == Termination::ResidualConverged) {
      CHECK(check_feasibility(r.point, p, 1e-6).empty());
    } else {
      CHECK_FALSE(r.message.empty());
    }
  }
}

TEST_CASE("max_outer = 0 stops after the initial record") {
  AlgorithmOptions o;
  o.tol.max_outer = 0;
  o.tol.residual = 0.0;
  const SolveReport r = run_algorithm1(reference_system(), o);
  CHECK(r.termination == Termination::MaxOuterIters);
  CHECK(r.outer_iterations() == 0);
}
