#include "socialgrad/games.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "socialgrad/rng.hpp"

namespace socialgrad {

namespace {

constexpr int kOscillatorNormGrid = 201;

double sup_abs_sin(double lo, double hi) {
  // |sin| peaks at +-pi/2 inside the interval, otherwise at an endpoint.
  constexpr double half_pi = std::numbers::pi / 2.0;
  for (double peak : {-3.0 * half_pi, -half_pi, half_pi, 3.0 * half_pi}) {
    if (lo <= peak && peak <= hi) return 1.0;
  }
  return std::max(std::abs(std::sin(lo)), std::abs(std::sin(hi)));
}

double min_cos(double lo, double hi) {
  // Boxes inside (-pi/2, pi/2): cos is unimodal with its minimum at an end.
  return std::min(std::cos(lo), std::cos(hi));
}

}  // namespace

AggregativeGameSpec default_aggregative_spec(std::uint64_t seed, int n) {
  if (n < 2) throw ConstructionError("aggregative game needs at least two players");
  Rng rng(seed);
  AggregativeGameSpec spec;
  spec.q.resize(n);
  for (int i = 0; i < n; ++i) spec.q[i] = rng.uniform(1.0, 2.0);
  spec.W = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) spec.W(i, j) = rng.uniform();
    }
    spec.W.row(i) /= spec.W.row(i).sum();
  }
  spec.box = BoxSpace::cube(n, -2.0, 2.0);
  spec.a = 0.9 * aggregative_coupling_limit(spec);
  return spec;
}

double aggregative_coupling_limit(const AggregativeGameSpec& spec) {
  const double sym_norm = spectral_norm(sym(spec.W));
  return spec.q.minCoeff() / sym_norm;
}

void validate(const AggregativeGameSpec& spec) {
  const Eigen::Index n = spec.q.size();
  if (n < 1 || spec.W.rows() != n || spec.W.cols() != n || spec.box.dim() != n) {
    throw ConstructionError("aggregative spec: q, W and box dimensions disagree");
  }
  if ((spec.q.array() <= 0.0).any()) throw ConstructionError("aggregative spec: q must be positive");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (spec.W(i, i) != 0.0) throw ConstructionError("aggregative spec: W must have zero diagonal");
    if ((spec.W.row(i).array() < 0.0).any()) throw ConstructionError("aggregative spec: W must be nonnegative");
    if (std::abs(spec.W.row(i).sum() - 1.0) > 1e-12) {
      throw ConstructionError("aggregative spec: W row " + std::to_string(i) + " does not sum to 1");
    }
  }
  if (spec.a < 0.0) throw ConstructionError("aggregative spec: coupling a must be nonnegative");
  const double limit = aggregative_coupling_limit(spec);
  if (!(spec.a < limit)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "aggregative spec violates a < lambda_min(Q)/||Sym(W)||_2: a=" << spec.a << " >= " << limit;
    throw ConstructionError(msg.str());
  }
}

GameModel build_aggregative(const AggregativeGameSpec& spec) {
  validate(spec);
  const Eigen::Index n = spec.q.size();
  const Matrix M = Matrix(spec.q.asDiagonal()) + spec.a * spec.W;
  const double lam = lambda_min_sym(M);

  GameModel g{.name = "aggregative-" + std::to_string(n),
              .space = spec.box,
              .g0 = [M](const Vector& x) -> Vector { return M * x; },
              .jac_g0 = [M](const Vector&) -> Matrix { return M; },
              .monotonicity_m = 2.0 * lam,
              .lip_L1 = 0.0,
              .jacobian_norm_bound = spectral_norm(M),
              .potential = std::nullopt,
              .linear_operator = M,
              .best_response = BestResponseStructure{spec.q, spec.W, spec.a},
              .analytic_lambda_bound = lam};
  if ((M - M.transpose()).norm() <= 1e-10) {
    g.potential = [M](const Vector& x, const Vector& p) { return 0.5 * x.dot(M * x) + p.dot(x); };
  }
  return g;
}

double aggregative_cost(const AggregativeGameSpec& spec, Eigen::Index i, const Vector& x) {
  return 0.5 * (spec.q[i] * x[i] * x[i] + spec.a * x[i] * spec.W.row(i).dot(x));
}

void validate(const OscillatorGameSpec& spec) {
  if (spec.box.dim() != 2) throw ConstructionError("oscillator game is two-player");
  if (!(spec.theta1 > 0.0 && spec.theta2 > 0.0)) throw ConstructionError("oscillator theta must be positive");
  constexpr double half_pi = std::numbers::pi / 2.0;
  if ((spec.box.lower().array() <= -half_pi).any() || (spec.box.upper().array() >= half_pi).any()) {
    throw ConstructionError("oscillator box must lie inside (-pi/2, pi/2)^2");
  }
}

double oscillator_gershgorin_expression(const OscillatorGameSpec& spec, const Vector& x) {
  const double c = std::cos(x[0] - x[1]);
  const double r1 = spec.theta1 * std::cos(x[0]) - c - std::abs(c);
  const double r2 = spec.theta2 * std::cos(x[1]) - c - std::abs(c);
  return std::min(r1, r2);
}

double oscillator_gershgorin_bound(const OscillatorGameSpec& spec) {
  const Vector& lo = spec.box.lower();
  const Vector& hi = spec.box.upper();
  return std::min(spec.theta1 * min_cos(lo[0], hi[0]), spec.theta2 * min_cos(lo[1], hi[1])) - 2.0;
}

double aggregative_lambda_min(const AggregativeGameSpec& spec) {
  return lambda_min_sym(Matrix(spec.q.asDiagonal()) + spec.a * spec.W);
}

double oscillator_grid_lambda_min(const OscillatorGameSpec& spec, int density) {
  const double t1 = spec.theta1;
  const double t2 = spec.theta2;
  double lam = std::numeric_limits<double>::infinity();
  for_each_grid_point(spec.box, density, [&](const Vector& x) {
    const double c = std::cos(x[0] - x[1]);
    Matrix j(2, 2);
    j << t1 * std::cos(x[0]) - c, c, c, t2 * std::cos(x[1]) - c;
    lam = std::min(lam, lambda_min_sym(j));
  });
  return lam;
}

GameModel build_oscillator(const OscillatorGameSpec& spec) {
  validate(spec);
  const double t1 = spec.theta1;
  const double t2 = spec.theta2;

  GameModel g{.name = "oscillator-2",
              .space = spec.box,
              .g0 =
                  [t1, t2](const Vector& x) -> Vector {
                    const double s = std::sin(x[0] - x[1]);
                    Vector out(2);
                    out << t1 * std::sin(x[0]) - s, t2 * std::sin(x[1]) + s;
                    return out;
                  },
              .jac_g0 =
                  [t1, t2](const Vector& x) -> Matrix {
                    const double c = std::cos(x[0] - x[1]);
                    Matrix j(2, 2);
                    j << t1 * std::cos(x[0]) - c, c, c, t2 * std::cos(x[1]) - c;
                    return j;
                  },
              .monotonicity_m = 0.0,
              .lip_L1 = 0.0,
              .jacobian_norm_bound = 0.0,
              .potential = std::nullopt,
              .linear_operator = std::nullopt,
              .best_response = std::nullopt,
              .analytic_lambda_bound = std::nullopt};
  g.potential = [t1, t2](const Vector& x, const Vector& p) {
    return -t1 * std::cos(x[0]) - t2 * std::cos(x[1]) + std::cos(x[0] - x[1]) + p.dot(x);
  };

  const double bound = oscillator_gershgorin_bound(spec);
  if (bound > 0.0) {
    g.monotonicity_m = 2.0 * bound;
    g.analytic_lambda_bound = bound;
  } else if (spec.allow_grid_certification) {
    const double lam = oscillator_grid_lambda_min(spec, kOscillatorNormGrid);
    if (!(lam > 0.0)) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "oscillator spec is not strongly monotone: grid min lambda_min(Sym DG0) = " << lam << " <= 0";
      throw ConstructionError(msg.str());
    }
    g.monotonicity_m = 2.0 * lam;
  } else {
    std::ostringstream msg;
    msg.precision(17);
    msg << "oscillator spec fails the Gershgorin certificate theta_i min cos(x_i) - 2 > 0: bound=" << bound;
    throw ConstructionError(msg.str());
  }

  // Entrywise bound on the Jacobian's derivatives, combined in Frobenius norm.
  const Vector& lo = spec.box.lower();
  const Vector& hi = spec.box.upper();
  const double s1 = sup_abs_sin(lo[0], hi[0]);
  const double s2 = sup_abs_sin(lo[1], hi[1]);
  const double sd = sup_abs_sin(lo[0] - hi[1], hi[0] - lo[1]);
  const double e11 = std::hypot(t1 * s1 + sd, sd);
  const double e12 = std::sqrt(2.0) * sd;
  const double e22 = std::hypot(sd, t2 * s2 + sd);
  g.lip_L1 = std::sqrt(e11 * e11 + 2.0 * e12 * e12 + e22 * e22);

  double norm_max = 0.0;
  for_each_grid_point(spec.box, kOscillatorNormGrid,
                      [&](const Vector& x) { norm_max = std::max(norm_max, spectral_norm(g.jac_g0(x))); });
  g.jacobian_norm_bound = norm_max;
  return g;
}

double oscillator_cost(const OscillatorGameSpec& spec, Eigen::Index i, const Vector& x) {
  const double theta = i == 0 ? spec.theta1 : spec.theta2;
  return -theta * std::cos(x[i]) + std::cos(x[0] - x[1]);
}

bool symmetry_check(const GameModel& game, int samples, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index n = game.dim();
  Vector x(n);
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(game.space.lower()[i], game.space.upper()[i]);
    const Matrix j = game.jac_g0(x);
    if ((j - j.transpose()).norm() > 1e-10) return false;
  }
  return true;
}

std::vector<std::string> preset_names() { return {"aggregative-5", "oscillator-2"}; }

GameModel preset_game(std::string_view name) {
  if (name == "aggregative-5") return build_aggregative(default_aggregative_spec());
  if (name == "oscillator-2") return build_oscillator(OscillatorGameSpec{});
  throw ConfigError("unknown game preset '" + std::string(name) + "'");
}

}  // namespace socialgrad
