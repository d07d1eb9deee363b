#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>

namespace socialgrad {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Joint strategy profile x and planner incentive p live in the same R^n.
using Strategy = Vector;
using Incentive = Vector;

// Caller broke a documented precondition (dimension mismatch, point outside
// the box, invalid configuration value).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration rejected before any work started.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A game specification failed its certification inequality.
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested learning rule needs structure the game does not expose.
class UnsupportedRuleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Iterative solve ran out of budget. Carries the last iterate.
class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, Vector last_iterate, double residual)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)), residual_(residual) {}

  const Vector& last_iterate() const { return last_iterate_; }
  double residual() const { return residual_; }

 private:
  Vector last_iterate_;
  double residual_;
};

// An incentive left the response region P (the induced equilibrium is on
// the boundary of the strategy box) where an interior one was required.
class OutsideResponseRegion : public std::runtime_error {
 public:
  OutsideResponseRegion(const std::string& what, Vector incentive)
      : std::runtime_error(what), incentive_(std::move(incentive)) {}

  const Vector& incentive() const { return incentive_; }

 private:
  Vector incentive_;
};

inline void require_dim(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw ContractViolation(std::string(what) + ": expected dimension " + std::to_string(n) +
                            ", got " + std::to_string(v.size()));
  }
}

}  // namespace socialgrad
