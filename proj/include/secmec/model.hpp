#pragma once

// Physical model of secure partial offloading: secrecy-limited uplink bits,
// local CPU bits, energy accounting and the weighted computation-efficiency
// objective. Rates use the natural logarithm; SystemParams::log2_rates
// switches every rate to log2 by scaling the effective bandwidth.

#include <cstddef>
#include <string>
#include <vector>

namespace secmec {

struct UserParams {
  double weight = 1.0;
  double task_bits = 5e4;        // bits that must be processed within the deadline
  double cycles_per_bit = 1000;  // CPU cycles per bit
  double cpu_coeff = 1e-24;      // J s^2 / cycle^3
  double max_freq = 1e9;         // Hz
  double energy_budget = 1.0;    // J
  double ap_gain = 7.0;          // |h|^2 / sigma^2 at the access point (1/W)
  double eve_gain = 1.0;         // |g|^2 / sigma_e^2 at the eavesdropper (1/W)

  /// Secure offloading needs the access point to hear better than Eve.
  bool can_offload() const noexcept { return ap_gain > eve_gain; }
};

struct SystemParams {
  double bandwidth = 200e3;     // Hz
  double deadline = 1.0;        // s
  double circuit_power = 0.1;   // W, drawn while transmitting
  bool log2_rates = false;
  std::vector<UserParams> users;

  std::size_t num_users() const noexcept { return users.size(); }
  /// Bandwidth multiplying every entropy term (B, or B / ln 2 for log2 rates).
  double rate_bandwidth() const noexcept;
  /// Throws DomainError naming the first broken invariant.
  void validate() const;
};

/// One user's share of a candidate allocation.
struct UserDecision {
  double time = 0.0;              // uplink time t (s)
  double freq = 0.0;              // CPU frequency f (Hz)
  double offload_bits = 0.0;      // m
  double tx_energy = 0.0;         // transmit energy p * t (J)
  double eve_snr_energy = 0.0;    // tau, upper-bounds eve_gain * tx_energy
  double legit_snr_energy = 0.0;  // N, lower-bounded by ap_gain * tx_energy
};

struct DecisionPoint {
  std::vector<UserDecision> users;
};

struct EnergyBreakdown {
  double offload_tx = 0.0;
  double offload_circuit = 0.0;
  double local = 0.0;
  double total = 0.0;
};

struct CeResult {
  double total = 0.0;              // sum_k w_k * CE_k
  std::vector<double> per_user;    // unweighted CE_k (bits / J)
};

struct Violation {
  std::string constraint;  // "C1", "C2", "C3", "C3-local", "C4", "C6"
  std::size_t user;        // npos for the shared time row
  double amount;           // how far past the bound (natural units)
};

inline constexpr std::size_t kSharedRow = static_cast<std::size_t>(-1);

/// B * [t ln(1 + H e / t) - t ln(1 + G e / t)]^+ with e the transmit energy.
double secrecy_bits(double time, double tx_energy, const UserParams& user, double bandwidth);

/// Bits processed by the local CPU running at freq for the whole deadline.
double local_bits(double freq, double deadline, double cycles_per_bit);

EnergyBreakdown user_energy(const UserDecision& d, const UserParams& user, const SystemParams& params);
std::vector<EnergyBreakdown> total_energy(const DecisionPoint& point, const SystemParams& params);

/// Secure plus local bits delivered by one user.
double user_bits(const UserDecision& d, const UserParams& user, const SystemParams& params);

/// Weighted computation efficiency. Idle users (0 bits, 0 J) contribute 0.
CeResult ce_objective(const DecisionPoint& point, const SystemParams& params);

/// Constraint check of the original problem. tol is relative to each row's
/// natural scale (deadline, task size, energy budget, max frequency).
std::vector<Violation> check_feasibility(const DecisionPoint& point, const SystemParams& params,
                                         double tol);

/// Offloaded bits implied by a CPU frequency: clamp(L - T f / C, 0, L).
double offload_bits_for(double freq, const UserParams& user, double deadline);

/// Integral offloaded bits for a continuous solution. Rounds m up so the
/// local share never exceeds what the CPU computes.
DecisionPoint round_offload_bits(const DecisionPoint& point);

}  // namespace secmec
