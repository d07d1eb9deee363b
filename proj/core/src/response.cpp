#include "socialgrad/response.hpp"

#include <cmath>
#include <string>

namespace socialgrad {

namespace {

// Stationarity test: the interior residual when x is at least tol away from
// every face, the fixed-point displacement of the projected map otherwise.
bool is_stationary(const Vector& x, const Vector& g, const BoxSpace& space, double eta, double tol) {
  if (boundary_distance(x, space) >= tol) return g.norm() <= tol;
  return (x - project_box(x - eta * g, space)).norm() <= eta * tol;
}

// Unit-step projected gradient norm, zero exactly at VI solutions.
double projected_gradient_measure(const Vector& x, const Vector& g, const BoxSpace& space) {
  return (x - project_box(x - g, space)).norm();
}

ResponseResult finish(const GameModel& game, const Incentive& p, Vector x, long iterations, bool converged) {
  ResponseResult r;
  r.residual = (game.g0(x) + p).norm();
  r.iterations = iterations;
  r.converged = converged;
  r.interior = boundary_distance(x, game.space) >= interior_margin(game.space);
  r.x_star = std::move(x);
  return r;
}

Vector initial_point(const GameModel& game, const std::optional<Vector>& warm_start) {
  if (warm_start) {
    require_dim(*warm_start, game.dim(), "solve_response(warm_start)");
    return project_box(*warm_start, game.space);
  }
  return game.space.center();
}

}  // namespace

std::string_view to_string(ResponseMethod m) {
  switch (m) {
    case ResponseMethod::ClosedFormLinear: return "closed-form-linear";
    case ResponseMethod::ProjectedGradient: return "projected-gradient-fixed-point";
    case ResponseMethod::PotentialMinimization: return "potential-minimization";
  }
  return "unknown";
}

ResponseMethod parse_response_method(std::string_view s) {
  if (s == "closed-form-linear") return ResponseMethod::ClosedFormLinear;
  if (s == "projected-gradient-fixed-point" || s == "projected-gradient") {
    return ResponseMethod::ProjectedGradient;
  }
  if (s == "potential-minimization") return ResponseMethod::PotentialMinimization;
  throw ConfigError("unknown response method '" + std::string(s) + "'");
}

double interior_margin(const BoxSpace& space) { return 1e-6 * space.diameter(); }

ResponseSolverConfig default_solver_config(const GameModel& game) {
  ResponseSolverConfig cfg;
  if (game.linear_operator) {
    cfg.method = ResponseMethod::ClosedFormLinear;
  } else if (game.potential) {
    cfg.method = ResponseMethod::PotentialMinimization;
  } else {
    cfg.method = ResponseMethod::ProjectedGradient;
  }
  const double L = game.jacobian_norm_bound;
  cfg.step_eta = game.monotonicity_m / (2.0 * L * L);
  return cfg;
}

void validate(const ResponseSolverConfig& cfg, const GameModel& game) {
  if (!(cfg.tol > 0.0)) throw ConfigError("solver tol must be positive");
  if (cfg.max_iter <= 0) throw ConfigError("solver max_iter must be positive");
  const double L = game.jacobian_norm_bound;
  const double eta_max = game.monotonicity_m / (L * L);
  if (!(cfg.step_eta > 0.0 && cfg.step_eta < eta_max)) {
    throw ConfigError("solver step_eta=" + std::to_string(cfg.step_eta) + " outside (0, m/L^2) = (0, " +
                      std::to_string(eta_max) + ")");
  }
  if (cfg.method == ResponseMethod::ClosedFormLinear && !game.linear_operator) {
    throw ConfigError("closed-form-linear solver requires a linear game");
  }
  if (cfg.method == ResponseMethod::PotentialMinimization && !game.potential) {
    throw ConfigError("potential-minimization solver requires a registered potential");
  }
}

double projected_gradient_rate(const GameModel& game, double eta) {
  const double m = game.monotonicity_m;
  const double L = game.jacobian_norm_bound;
  return std::sqrt(1.0 - eta * m + eta * eta * L * L);
}

Vector solve_response_linear(const Matrix& M, const Vector& p) {
  if (M.rows() != M.cols() || M.rows() != p.size()) {
    throw ContractViolation("solve_response_linear: dimension mismatch");
  }
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    throw ContractViolation("solve_response_linear: M is numerically singular");
  }
  return lu.solve(-p);
}

ResponseResult solve_response_projected_gradient(const GameModel& game, const Incentive& p,
                                                 const ResponseSolverConfig& cfg,
                                                 const std::optional<Vector>& warm_start) {
  require_dim(p, game.dim(), "solve_response(p)");
  const double eta = cfg.step_eta;
  Vector x = initial_point(game, warm_start);
  for (long it = 0; it < cfg.max_iter; ++it) {
    const Vector g = game.g0(x) + p;
    if (is_stationary(x, g, game.space, eta, cfg.tol)) return finish(game, p, std::move(x), it, true);
    x = project_box(x - eta * g, game.space);
  }
  const double residual = (game.g0(x) + p).norm();
  throw NonConvergenceError("projected-gradient response solve exceeded max_iter=" +
                                std::to_string(cfg.max_iter),
                            x, residual);
}

ResponseResult solve_response_potential(const GameModel& game, const Incentive& p,
                                        const ResponseSolverConfig& cfg,
                                        const std::optional<Vector>& warm_start) {
  require_dim(p, game.dim(), "solve_response(p)");
  if (!game.potential) throw ConfigError("potential-minimization solver requires a registered potential");
  const auto& psi = *game.potential;
  const BoxSpace& box = game.space;
  const Eigen::Index n = game.dim();
  const double active_eps = 1e-14 * box.diameter();

  Vector x = initial_point(game, warm_start);
  for (long it = 0; it < cfg.max_iter; ++it) {
    const Vector g = game.g0(x) + p;
    if (is_stationary(x, g, box, cfg.step_eta, cfg.tol)) return finish(game, p, std::move(x), it, true);

    // Coordinates pinned at a face with the gradient pushing outward move by
    // a plain gradient step; the rest take a Newton step on the free block.
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = x[i] <= box.lower()[i] + active_eps && g[i] > 0.0;
      const bool at_upper = x[i] >= box.upper()[i] - active_eps && g[i] < 0.0;
      if (!at_lower && !at_upper) free_idx.push_back(i);
    }
    Vector d = -g;
    if (!free_idx.empty()) {
      const Matrix H = game.jac_g0(x);
      const auto nf = static_cast<Eigen::Index>(free_idx.size());
      Matrix Hf(nf, nf);
      Vector gf(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        gf[a] = g[free_idx[a]];
        for (Eigen::Index b = 0; b < nf; ++b) Hf(a, b) = H(free_idx[a], free_idx[b]);
      }
      Eigen::LLT<Matrix> llt(sym(Hf));
      if (llt.info() == Eigen::Success) {
        const Vector df = llt.solve(-gf);
        for (Eigen::Index a = 0; a < nf; ++a) d[free_idx[a]] = df[a];
      }
    }

    const double psi0 = psi(x, p);
    const double measure0 = projected_gradient_measure(x, g, box);
    double t = 1.0;
    Vector trial = x;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      trial = project_box(x + t * d, box);
      const double decrease = g.dot(trial - x);
      if (psi(trial, p) <= psi0 + 1e-4 * decrease) {
        accepted = true;
        break;
      }
      // Near the solution Psi differences drown in round-off; fall back on
      // the stationarity measure.
      const Vector gt = game.g0(trial) + p;
      if (projected_gradient_measure(trial, gt, box) <= 0.5 * measure0) {
        accepted = true;
        break;
      }
    }
    x = accepted ? trial : project_box(x - cfg.step_eta * g, box);
  }
  const double residual = (game.g0(x) + p).norm();
  throw NonConvergenceError("potential-minimization response solve exceeded max_iter=" +
                                std::to_string(cfg.max_iter),
                            x, residual);
}

ResponseResult solve_response(const GameModel& game, const Incentive& p, const ResponseSolverConfig& cfg,
                              const std::optional<Vector>& warm_start) {
  require_dim(p, game.dim(), "solve_response(p)");
  switch (cfg.method) {
    case ResponseMethod::ClosedFormLinear: {
      if (!game.linear_operator) throw ConfigError("closed-form-linear solver requires a linear game");
      Vector x = solve_response_linear(*game.linear_operator, p);
      if (game.space.contains(x)) return finish(game, p, std::move(x), 1, true);
      // Unconstrained root outside the box: the equilibrium sits on the
      // boundary and needs the projected iteration.
      return solve_response_projected_gradient(game, p, cfg, project_box(x, game.space));
    }
    case ResponseMethod::PotentialMinimization:
      return solve_response_potential(game, p, cfg, warm_start);
    case ResponseMethod::ProjectedGradient:
      return solve_response_projected_gradient(game, p, cfg, warm_start);
  }
  throw ConfigError("unknown response method");
}

Matrix response_jacobian_fd(const GameModel& game, const Incentive& p, double h,
                            const ResponseSolverConfig& cfg) {
  require_dim(p, game.dim(), "response_jacobian_fd(p)");
  if (!(h > 0.0)) throw ContractViolation("response_jacobian_fd: h must be positive");
  const Eigen::Index n = game.dim();
  const ResponseResult base = solve_response(game, p, cfg);
  if (!base.interior) throw OutsideResponseRegion("response_jacobian_fd: p is outside P", p);

  Matrix J(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector plus = p;
    Vector minus = p;
    plus[i] += h;
    minus[i] -= h;
    const ResponseResult rp = solve_response(game, plus, cfg, base.x_star);
    if (!rp.interior) {
      throw OutsideResponseRegion("response_jacobian_fd: probe p + h e_" + std::to_string(i) + " leaves P", plus);
    }
    const ResponseResult rm = solve_response(game, minus, cfg, base.x_star);
    if (!rm.interior) {
      throw OutsideResponseRegion("response_jacobian_fd: probe p - h e_" + std::to_string(i) + " leaves P",
                                  minus);
    }
    J.col(i) = (rp.x_star - rm.x_star) / (2.0 * h);
  }
  return J;
}

}  // namespace socialgrad
