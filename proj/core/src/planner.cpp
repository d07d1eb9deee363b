#include "socialgrad/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "socialgrad/rng.hpp"

namespace socialgrad {

SocialObjective quadratic_objective(const Vector& x_dagger) {
  SocialObjective obj;
  obj.x_dagger = x_dagger;
  obj.phi = [x_dagger](const Vector& x) { return 0.5 * (x - x_dagger).squaredNorm(); };
  obj.grad_phi = [x_dagger](const Vector& x) -> Vector { return x - x_dagger; };
  obj.mu_phi = 1.0;
  obj.lip_L2 = 1.0;
  return obj;
}

void validate(const SocialObjective& obj, const BoxSpace& space, int samples) {
  require_dim(obj.x_dagger, space.dim(), "SocialObjective.x_dagger");
  if (!space.contains(obj.x_dagger) || boundary_distance(obj.x_dagger, space) <= 0.0) {
    throw ContractViolation("social optimum x_dagger must be interior to the box");
  }
  if (obj.grad_phi(obj.x_dagger).norm() > 1e-12) {
    throw ContractViolation("grad_phi(x_dagger) is not zero");
  }
  if (!(obj.mu_phi > 0.0 && obj.lip_L2 >= obj.mu_phi)) {
    throw ContractViolation("need 0 < mu_phi <= lip_L2");
  }
  Rng rng(11);
  const Eigen::Index n = space.dim();
  Vector x(n), y(n);
  for (int s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x[i] = rng.uniform(space.lower()[i], space.upper()[i]);
      y[i] = rng.uniform(space.lower()[i], space.upper()[i]);
    }
    const double lhs = obj.phi(y);
    const double rhs = obj.phi(x) + obj.grad_phi(x).dot(y - x) + 0.5 * obj.mu_phi * (y - x).squaredNorm();
    if (lhs < rhs - 1e-10 * (1.0 + std::abs(rhs))) {
      throw ContractViolation("social objective violates mu_phi-strong convexity");
    }
  }
}

double quadratic_c_star(const Vector& x_dagger, const BoxSpace& space) {
  const double d = boundary_distance(x_dagger, space);
  return 0.5 * d * d;
}

double compute_c_star(const SocialObjective& obj, const BoxSpace& space, int face_grid) {
  const Eigen::Index n = space.dim();
  if (!space.contains(obj.x_dagger) || boundary_distance(obj.x_dagger, space) <= 0.0) {
    throw ContractViolation("compute_c_star: x_dagger must be interior");
  }
  if (face_grid < 2) throw ContractViolation("compute_c_star: face_grid must be at least 2");

  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index fixed = 0; fixed < n; ++fixed) {
    for (int side = 0; side < 2; ++side) {
      const double face_value = side == 0 ? space.lower()[fixed] : space.upper()[fixed];
      Vector x = space.center();
      x[fixed] = face_value;

      Vector face_best = x;
      double face_min = std::numeric_limits<double>::infinity();
      if (n == 1) {
        face_min = obj.phi(x);
      } else {
        Vector flo(n - 1), fhi(n - 1);
        for (Eigen::Index i = 0, k = 0; i < n; ++i) {
          if (i == fixed) continue;
          flo[k] = space.lower()[i];
          fhi[k] = space.upper()[i];
          ++k;
        }
        for_each_grid_point(BoxSpace(flo, fhi), face_grid, [&](const Vector& free) {
          for (Eigen::Index i = 0, k = 0; i < n; ++i) {
            if (i == fixed) continue;
            x[i] = free[k++];
          }
          const double v = obj.phi(x);
          if (v < face_min) {
            face_min = v;
            face_best = x;
          }
        });

        // Projected gradient restricted to the face.
        const double step = 1.0 / obj.lip_L2;
        Vector y = face_best;
        for (int it = 0; it < 10000; ++it) {
          Vector g = obj.grad_phi(y);
          g[fixed] = 0.0;
          Vector next = project_box(y - step * g, space);
          next[fixed] = face_value;
          const double moved = (next - y).norm();
          y = std::move(next);
          if (moved <= 1e-15 * (1.0 + y.norm())) break;
        }
        face_min = std::min(face_min, obj.phi(y));
      }
      best = std::min(best, face_min);
    }
  }
  const double c_star = best - obj.phi(obj.x_dagger);
  if (!(c_star > 0.0)) throw ContractViolation("compute_c_star: boundary gap is not positive");
  return c_star;
}

SublevelGeometry make_geometry(const GameModel& game, const SocialObjective& obj, double c_fraction,
                               const ResponseSolverConfig& solver_cfg, int face_grid) {
  if (!(c_fraction > 0.0 && c_fraction < 1.0)) {
    throw ConfigError("c_fraction must lie in (0, 1)");
  }
  if (face_grid <= 0) {
    // About 2e4 grid points per face.
    const Eigen::Index free_dims = std::max<Eigen::Index>(game.dim() - 1, 1);
    face_grid = std::max(3, static_cast<int>(std::floor(std::pow(2e4, 1.0 / static_cast<double>(free_dims)))));
  }
  SublevelGeometry geom;
  geom.c_star = compute_c_star(obj, game.space, face_grid);
  geom.c = c_fraction * geom.c_star;
  geom.p_dagger = -game.g0(obj.x_dagger);

  const ResponseResult r = solve_response(game, geom.p_dagger, solver_cfg, obj.x_dagger);
  const double gap = (r.x_star - obj.x_dagger).norm();
  const double allowed = std::max(10.0 * solver_cfg.tol * 2.0 / game.monotonicity_m, 1e-9);
  if (!r.interior || gap > allowed) {
    std::ostringstream msg;
    msg << "response to p_dagger misses x_dagger by " << gap;
    throw ContractViolation(msg.str());
  }
  return geom;
}

Membership evaluate_membership(const Incentive& p, const SublevelGeometry& geom, const GameModel& game,
                               const SocialObjective& obj, const ResponseSolverConfig& solver_cfg,
                               const std::optional<Vector>& warm_start) {
  Membership m;
  m.response = solve_response(game, p, solver_cfg, warm_start);
  m.interior = m.response.interior;
  m.V = obj.phi(m.response.x_star) - obj.phi(obj.x_dagger);
  m.member = m.interior && m.V <= geom.c;
  return m;
}

bool in_sublevel_set(const Incentive& p, const SublevelGeometry& geom, const GameModel& game,
                     const SocialObjective& obj, const ResponseSolverConfig& solver_cfg) {
  return evaluate_membership(p, geom, game, obj, solver_cfg).member;
}

std::string_view to_string(Integrator i) {
  return i == Integrator::Rk4 ? "rk4" : "explicit-euler";
}

Integrator parse_integrator(std::string_view s) {
  if (s == "rk4") return Integrator::Rk4;
  if (s == "explicit-euler" || s == "euler") return Integrator::ExplicitEuler;
  throw ConfigError("unknown integrator '" + std::string(s) + "'");
}

FlowConfig default_flow_config(const GameModel& game) {
  FlowConfig cfg;
  cfg.dt = 1e-2 * (game.monotonicity_m / 2.0);
  return cfg;
}

void validate(const FlowConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("flow dt must be positive");
  if (!(cfg.horizon_T >= cfg.dt)) throw ConfigError("flow horizon_T must be at least dt");
  if (cfg.record_every < 1) throw ConfigError("flow record_every must be positive");
  if (cfg.stop_tol < 0.0) throw ConfigError("flow stop_tol must be nonnegative");
}

FlowRecord integrate_social_gradient_flow(const Incentive& p0, const FlowConfig& cfg, const GameModel& game,
                                          const SocialObjective& obj, const SublevelGeometry& geom,
                                          const ResponseSolverConfig& solver_cfg) {
  validate(cfg);
  require_dim(p0, game.dim(), "integrate_social_gradient_flow(p0)");
  const Membership start = evaluate_membership(p0, geom, game, obj, solver_cfg);
  if (!start.member) throw ContractViolation("integrate_social_gradient_flow: p0 is not in P_c");

  const double phi_dagger = obj.phi(obj.x_dagger);
  auto make_sample = [&](double t, const Incentive& p, const Strategy& xs) {
    FlowSample s;
    s.t = t;
    s.p = p;
    s.x_star = xs;
    s.V = obj.phi(xs) - phi_dagger;
    s.grad_norm = obj.grad_phi(xs).norm();
    s.dist_to_pdagger = (p - geom.p_dagger).norm();
    return s;
  };

  FlowRecord rec;
  FlowSample current = make_sample(0.0, p0, start.response.x_star);
  rec.samples.push_back(current);

  Vector warm = current.x_star;
  auto response_at = [&](const Incentive& p) -> Strategy {
    const ResponseResult r = solve_response(game, p, solver_cfg, warm);
    if (!r.interior) {
      throw FlowLeftRegion("social-gradient flow stage left P; reduce dt", p, current);
    }
    return r.x_star;
  };
  auto field = [&](const Incentive& p) -> Vector { return obj.grad_phi(response_at(p)); };

  const double steps_real = cfg.horizon_T / cfg.dt;
  auto steps = static_cast<long>(std::llround(steps_real));
  if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real) {
    steps = static_cast<long>(std::ceil(steps_real));
  }

  if (cfg.stop_tol > 0.0 && current.grad_norm <= cfg.stop_tol) {
    rec.stopped_early = true;
    return rec;
  }

  Incentive p = p0;
  Vector k1 = obj.grad_phi(current.x_star);
  for (long s = 1; s <= steps; ++s) {
    const double t_prev = static_cast<double>(s - 1) * cfg.dt;
    const double t = s == steps ? cfg.horizon_T : static_cast<double>(s) * cfg.dt;
    const double h = t - t_prev;
    if (cfg.integrator == Integrator::Rk4) {
      const Vector k2 = field(p + 0.5 * h * k1);
      const Vector k3 = field(p + 0.5 * h * k2);
      const Vector k4 = field(p + h * k3);
      p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      p += h * k1;
    }
    const Strategy xs = response_at(p);
    warm = xs;
    current = make_sample(t, p, xs);
    k1 = obj.grad_phi(xs);

    const bool stop = cfg.stop_tol > 0.0 && current.grad_norm <= cfg.stop_tol;
    if (stop || s == steps || s % cfg.record_every == 0) rec.samples.push_back(current);
    if (stop) {
      rec.stopped_early = true;
      break;
    }
  }
  rec.final_time = rec.samples.back().t;
  return rec;
}

double lyapunov_derivative(const Incentive& p, const GameModel& game, const SocialObjective& obj,
                           const ResponseSolverConfig& solver_cfg, double h) {
  const ResponseResult r = solve_response(game, p, solver_cfg);
  if (!r.interior) throw OutsideResponseRegion("lyapunov_derivative: p is outside P", p);
  const Vector g = obj.grad_phi(r.x_star);
  const Matrix J = response_jacobian_fd(game, p, h, solver_cfg);
  return g.dot(sym(J) * g);
}

}  // namespace socialgrad
