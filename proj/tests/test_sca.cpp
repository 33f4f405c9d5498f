#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "secmec/entropy.hpp"
#include "secmec/errors.hpp"
#include "secmec/sca.hpp"
#include "support.hpp"

using namespace secmec;
using secmec::testing::rel_close;

TEST_CASE("entropy values and boundary") {
  CHECK(rel_close(entropy(1.0, 1.0), 0.69314718055994530942, 1e-15));
  CHECK(entropy(0.0, 7.0) == 0.0);
  CHECK(entropy(3.0, 0.0) == 0.0);
  CHECK_THROWS_AS(entropy(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(entropy(1.0, -1.0), DomainError);
}

TEST_CASE("entropy gradient values") {
  const EntropyGradient g = entropy_gradient(1.0, 1.0);
  CHECK(g.dx == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rel_close(g.dy, 0.19314718055994530942, 1e-14));
  const EntropyGradient o = entropy_gradient(0.0, 2.5);
  CHECK(o.dx == 1.0);
  CHECK(o.dy == 0.0);
  CHECK_THROWS_AS(entropy_gradient(1.0, 0.0), DomainError);
}

TEST_CASE("entropy gradient and Hessian match central differences") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-3.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::pow(10.0, U(rng));
    const double y = std::pow(10.0, U(rng));
    const double hx = 1e-5 * x;
    const double hy = 1e-5 * y;
    const EntropyGradient g = entropy_gradient(x, y);
    const double fdx = (entropy(x + hx, y) - entropy(x - hx, y)) / (2 * hx);
    const double fdy = (entropy(x, y + hy) - entropy(x, y - hy)) / (2 * hy);
    CHECK(std::abs(g.dx - fdx) <= 1e-6 * std::max(std::abs(g.dx), std::abs(g.dy) + std::abs(g.dx)));
    CHECK(std::abs(g.dy - fdy) <= 1e-6 * std::max(std::abs(g.dy), std::abs(g.dx) + std::abs(g.dy)));

    const EntropyHessian h = entropy_hessian(x, y);
    const double fxx = (entropy_gradient(x + hx, y).dx - entropy_gradient(x - hx, y).dx) / (2 * hx);
    const double fyy = (entropy_gradient(x, y + hy).dy - entropy_gradient(x, y - hy).dy) / (2 * hy);
    CHECK(std::abs(h.xx - fxx) <= 1e-5 * std::abs(h.xx) + 1e-12);
    CHECK(std::abs(h.yy - fyy) <= 1e-5 * std::abs(h.yy) + 1e-12);
    CHECK(h.xx <= 0.0);
    CHECK(h.yy <= 0.0);
    CHECK(std::abs(h.xx * h.yy - h.xy * h.xy) <= 1e-9 * std::abs(h.xx * h.yy));  // rank one
  }
}

TEST_CASE("entropy is jointly concave and below its first argument") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 10.0);
  std::uniform_real_distribution<double> A(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x1 = U(rng), y1 = U(rng), x2 = U(rng), y2 = U(rng), a = A(rng);
    const double mid = entropy(a * x1 + (1 - a) * x2, a * y1 + (1 - a) * y2);
    CHECK(mid >= a * entropy(x1, y1) + (1 - a) * entropy(x2, y2) - 1e-12 * (1 + std::abs(mid)));
    CHECK(entropy(x1, y1) <= x1 * (1 + 1e-15));
  }
}

TEST_CASE("expansion coefficients") {
  const ExpansionTerms e = expand_user(0, 1.0, 1.0, 0.0);
  CHECK(rel_close(e.legit_time, 0.19314718055994530942, 1e-14));
  CHECK(e.eve_time == 0.0);
  CHECK(rel_close(e.offset, 0.69314718055994530942, 1e-15));
  CHECK(e.legit_slope == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e.eve_slope == 1.0);

  const ExpansionTerms s = expand_user(0, 1.0, 2.0, 2.0);
  CHECK(s.legit_time == s.eve_time);
  CHECK(s.offset == 0.0);

  CHECK_THROWS_AS(expand_user(3, 0.0, 1.0, 1.0), ExpansionError);
  try {
    expand_user(3, 1e-10, 1.0, 1.0);
    FAIL("expected an expansion error");
  } catch (const ExpansionError& err) {
    CHECK(err.user() == 3);
  }
}

TEST_CASE("make_linearization reads every user") {
  DecisionPoint p;
  p.users.resize(2);
  p.users[0].time = 0.3;
  p.users[0].legit_snr_energy = 1.0;
  p.users[0].eve_snr_energy = 0.2;
  p.users[1].time = 0.0;
  CHECK_THROWS_AS(make_linearization(p), ExpansionError);
  p.users[1].time = 0.4;
  const LinearizationPoint lin = make_linearization(p);
  REQUIRE(lin.users.size() == 2);
  CHECK(lin.users[1].time == 0.4);
  CHECK(lin.users[1].offset == 0.0);
}

TEST_CASE("linearized bits: exact at the expansion point, affine in tau") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.01, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double t0 = U(rng), n0 = U(rng), tau0 = U(rng);
    const ExpansionTerms e = expand_user(0, t0, n0, tau0);
    const double exact = 2e5 * (entropy(n0, t0) - entropy(tau0, t0));
    const double lin = linearized_secrecy_bits(t0, n0, tau0, e, 2e5);
    CHECK(std::abs(lin - exact) <= 1e-12 * std::max(2e5 * entropy(n0, t0), 1.0));
    CHECK(std::abs(split_secrecy_bits(t0, n0, tau0, e, 2e5) - exact) <= 1e-12 * std::max(2e5 * entropy(n0, t0), 1.0));

    const double d = U(rng);
    const double slope = (linearized_secrecy_bits(t0, n0, tau0 + d, e, 2e5) - lin) / d;
    CHECK(slope == doctest::Approx(-2e5 * e.eve_slope).epsilon(1e-8));
  }
}

TEST_CASE("linear model of the eavesdropper term overestimates it") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(0.01, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double t0 = U(rng), n0 = U(rng), tau0 = U(rng);
    const ExpansionTerms e = expand_user(0, t0, n0, tau0);
    const double t = U(rng), n = U(rng), tau = U(rng);
    const double tangent = entropy(tau0, t0) + e.eve_time * (t - t0) + e.eve_slope * (tau - tau0);
    CHECK(entropy(tau, t) <= tangent + 1e-12 * (1 + std::abs(tangent)));
    // Keeping the concave term exact makes the split model a lower bound.
    const double exact = entropy(n, t) - entropy(tau, t);
    CHECK(split_secrecy_bits(t, n, tau, e, 1.0) <= exact + 1e-12 * (1 + std::abs(exact)));
  }
}

TEST_CASE("linear model gradient matches finite differences of the exact difference") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.05, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double t0 = U(rng), n0 = U(rng), tau0 = U(rng);
    const ExpansionTerms e = expand_user(0, t0, n0, tau0);
    auto diff = [](double t, double n, double tau) { return entropy(n, t) - entropy(tau, t); };
    const double h = 1e-6;
    const double gt = (diff(t0 + h * t0, n0, tau0) - diff(t0 - h * t0, n0, tau0)) / (2 * h * t0);
    const double gn = (diff(t0, n0 + h * n0, tau0) - diff(t0, n0 - h * n0, tau0)) / (2 * h * n0);
    const double gtau = (diff(t0, n0, tau0 + h * tau0) - diff(t0, n0, tau0 - h * tau0)) / (2 * h * tau0);
    const double scale = std::abs(e.legit_time) + std::abs(e.eve_time) + 1.0;
    CHECK(std::abs((e.legit_time - e.eve_time) - gt) <= 1e-6 * scale);
    CHECK(std::abs(e.legit_slope - gn) <= 1e-6 * scale);
    CHECK(std::abs(-e.eve_slope - gtau) <= 1e-6 * scale);
  }
}

TEST_CASE("tangent plane passes through the origin") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> U(0.01, 5.0);
  for (int i = 0; i < 200; ++i) {
    const ExpansionTerms e = expand_user(0, U(rng), U(rng), U(rng));
    CHECK(std::abs(linearized_secrecy_bits(0.0, 0.0, 0.0, e, 1.0)) <= 1e-12 * (1 + std::abs(e.offset)));
  }
}
