#include "secmec/sca.hpp"

#include <cmath>
#include <string>

#include "secmec/entropy.hpp"
#include "secmec/errors.hpp"

namespace secmec {

double entropy(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || y < 0.0) {
    throw DomainError("entropy: arguments must be finite and nonnegative");
  }
  if (y == 0.0 || x == 0.0) return 0.0;
  return y * std::log1p(x / y);
}

EntropyGradient entropy_gradient(double x0, double y0) {
  if (!(y0 > 0.0) || !(x0 >= 0.0) || !std::isfinite(x0) || !std::isfinite(y0)) {
    throw DomainError("entropy_gradient: need y0 > 0 and x0 >= 0");
  }
  const double share = x0 / (x0 + y0);
  return {y0 / (x0 + y0), std::log1p(x0 / y0) - share};
}

EntropyHessian entropy_hessian(double x, double y) {
  const double s = x + y;
  const double c = -1.0 / (y * s * s);
  return {c * y * y, -c * x * y, c * x * x};
}

ExpansionTerms expand_user(std::size_t user, double t0, double legit0, double eve0,
                           double time_floor) {
  if (!(t0 > time_floor)) {
    throw ExpansionError(user, "expansion time " + std::to_string(t0) + " is not above the floor " +
                                   std::to_string(time_floor));
  }
  if (legit0 < 0.0 || eve0 < 0.0) {
    throw ExpansionError(user, "negative auxiliary SNR-energy variable");
  }
  const EntropyGradient gl = entropy_gradient(legit0, t0);
  const EntropyGradient ge = entropy_gradient(eve0, t0);
  ExpansionTerms e;
  e.time = t0;
  e.legit = legit0;
  e.eve = eve0;
  e.legit_time = gl.dy;
  e.eve_time = ge.dy;
  e.legit_slope = gl.dx;
  e.eve_slope = ge.dx;
  e.offset = entropy(legit0, t0) - entropy(eve0, t0);
  return e;
}

LinearizationPoint make_linearization(const DecisionPoint& point, double time_floor) {
  LinearizationPoint lin;
  lin.users.reserve(point.users.size());
  for (std::size_t k = 0; k < point.users.size(); ++k) {
    const UserDecision& d = point.users[k];
    lin.users.push_back(expand_user(k, d.time, d.legit_snr_energy, d.eve_snr_energy, time_floor));
  }
  return lin;
}

double linearized_secrecy_bits(double time, double legit, double eve, const ExpansionTerms& lin,
                               double bandwidth) {
  return bandwidth * ((lin.legit_time - lin.eve_time) * (time - lin.time) +
                      lin.legit_slope * (legit - lin.legit) - lin.eve_slope * (eve - lin.eve) +
                      lin.offset);
}

double split_secrecy_bits(double time, double legit, double eve, const ExpansionTerms& lin,
                          double bandwidth) {
  const double eve_model =
      entropy(lin.eve, lin.time) + lin.eve_time * (time - lin.time) + lin.eve_slope * (eve - lin.eve);
  return bandwidth * (entropy(legit, time) - eve_model);
}

}  // namespace secmec
