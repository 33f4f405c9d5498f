#pragma once

#include <algorithm>
#include <cmath>

#include "secmec/model.hpp"

namespace secmec::testing {

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Two-user reference instance: ap gains 7 and 5, eve gains 1.
inline SystemParams reference_system(double task_bits = 5e4) {
  SystemParams p;
  UserParams a;
  a.task_bits = task_bits;
  a.ap_gain = 7.0;
  UserParams b = a;
  b.ap_gain = 5.0;
  p.users = {a, b};
  return p;
}

inline SystemParams single_user(double ap_gain, double eve_gain, double task_bits = 5e4) {
  SystemParams p;
  UserParams u;
  u.ap_gain = ap_gain;
  u.eve_gain = eve_gain;
  u.task_bits = task_bits;
  p.users = {u};
  return p;
}

inline UserDecision offload_decision(const UserParams& u, double time, double freq, double tx_energy) {
  UserDecision d;
  d.time = time;
  d.freq = freq;
  d.tx_energy = tx_energy;
  d.legit_snr_energy = u.ap_gain * tx_energy;
  d.eve_snr_energy = u.eve_gain * tx_energy;
  return d;
}

}  // namespace secmec::testing
