#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "socialgrad/game.hpp"

namespace socialgrad {

// Aggregative game over a directed network. Agent i pays
//   l_i(x) = 1/2 (q_i x_i^2 + a sum_j w_ij x_i x_j)
// and the registered pseudo-gradient is G0(x) = M x with M = Q + a W.
//
// Differentiating l_i literally gives q_i x_i + (a/2) (W x)_i. The registered
// operator keeps the full coupling a W, which is the form the closed-form
// response x*(p) = -M^{-1} p and the best-response rule are written against.
// aggregative_cost() evaluates the literal cost; see the tests for the factor.
struct AggregativeGameSpec {
  Vector q;  // diagonal of Q, positive
  Matrix W;  // row-stochastic, zero diagonal
  double a = 0.0;
  BoxSpace box = BoxSpace::cube(5, -2.0, 2.0);
};

// Seed of the shipped "aggregative-5" instance.
inline constexpr std::uint64_t kAggregativeDefaultSeed = 42;

// q_i ~ U[1, 2], off-diagonal w_ij ~ U(0, 1) normalized per row, and
// a = 0.9 lambda_min(Q) / ||Sym(W)||_2, all drawn from Rng(seed).
AggregativeGameSpec default_aggregative_spec(std::uint64_t seed = kAggregativeDefaultSeed, int n = 5);

// lambda_min(Q) / ||Sym(W)||_2; the game spec is certified when a is below it.
double aggregative_coupling_limit(const AggregativeGameSpec& spec);

// Throws ConstructionError naming the violated condition.
void validate(const AggregativeGameSpec& spec);

GameModel build_aggregative(const AggregativeGameSpec& spec);

// lambda_min(Sym(Q + a W)), computed without validating the game spec.
double aggregative_lambda_min(const AggregativeGameSpec& spec);

// l_i(x) exactly as written above.
double aggregative_cost(const AggregativeGameSpec& spec, Eigen::Index i, const Vector& x);

// Two-player coupled oscillator, l_i(x) = -theta_i cos(x_i) + cos(x_1 - x_2).
struct OscillatorGameSpec {
  double theta1 = 4.2;
  double theta2 = 5.0;
  BoxSpace box = BoxSpace::cube(2, -std::numbers::pi / 3.0, std::numbers::pi / 3.0);
  // When the Gershgorin certificate fails, build anyway with m taken from a
  // grid scan of lambda_min(Sym(DG0)) instead of throwing.
  bool allow_grid_certification = false;
};

void validate(const OscillatorGameSpec& spec);

// min_i { theta_i cos(x_i) - cos(dx) - |cos(dx)| } at x.
double oscillator_gershgorin_expression(const OscillatorGameSpec& spec, const Vector& x);

// Worst case of the expression over the box: min_i theta_i min cos(x_i) - 2.
// Attained at the corner where both |x_i| are maximal with dx = 0.
double oscillator_gershgorin_bound(const OscillatorGameSpec& spec);

GameModel build_oscillator(const OscillatorGameSpec& spec);

// min of lambda_min(Sym(DG0)) over a density x density grid of the box.
double oscillator_grid_lambda_min(const OscillatorGameSpec& spec, int density);

double oscillator_cost(const OscillatorGameSpec& spec, Eigen::Index i, const Vector& x);

// True iff ||J(x) - J(x)^T||_F <= 1e-10 at `samples` random points of the box.
bool symmetry_check(const GameModel& game, int samples, std::uint64_t seed = 7);

// Named presets "aggregative-5" and "oscillator-2".
std::vector<std::string> preset_names();
GameModel preset_game(std::string_view name);

}  // namespace socialgrad
