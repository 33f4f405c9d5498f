#pragma once

#include <stdexcept>
#include <string>

namespace secmec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (negative size, NaN, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A linearization was requested at a point where the expansion is undefined.
class ExpansionError : public Error {
 public:
  ExpansionError(std::size_t user, const std::string& what)
      : Error("user " + std::to_string(user) + ": " + what), user_(user) {}
  std::size_t user() const noexcept { return user_; }

 private:
  std::size_t user_;
};

/// The convex subproblem has no strictly feasible point.
class SubproblemInfeasible : public Error {
 public:
  SubproblemInfeasible(std::string row, double violation)
      : Error("subproblem infeasible; most violated row '" + row +
              "' by " + std::to_string(violation)),
        row_(std::move(row)),
        violation_(violation) {}
  const std::string& row() const noexcept { return row_; }
  double violation() const noexcept { return violation_; }

 private:
  std::string row_;
  double violation_;
};

/// The scenario itself admits no point satisfying the bit requirements.
class InfeasibleInstance : public Error {
 public:
  InfeasibleInstance(std::size_t user, double required_bits, double max_bits)
      : Error("user " + std::to_string(user) + " needs " + std::to_string(required_bits) +
              " bits but at most " + std::to_string(max_bits) + " are achievable"),
        user_(user),
        required_bits_(required_bits),
        max_bits_(max_bits) {}
  std::size_t user() const noexcept { return user_; }
  double required_bits() const noexcept { return required_bits_; }
  double max_bits() const noexcept { return max_bits_; }

 private:
  std::size_t user_;
  double required_bits_;
  double max_bits_;
};

/// Backtracking on the ratio multipliers found no acceptable step.
class StallError : public Error {
 public:
  StallError(double old_norm, double best_norm)
      : Error("multiplier update stalled: |T| " + std::to_string(old_norm) +
              " -> best candidate " + std::to_string(best_norm)),
        old_norm_(old_norm),
        best_norm_(best_norm) {}
  double old_norm() const noexcept { return old_norm_; }
  double best_norm() const noexcept { return best_norm_; }

 private:
  double old_norm_;
  double best_norm_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace secmec
