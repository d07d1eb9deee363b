#pragma once

#include <optional>
#include <string_view>

#include "socialgrad/game.hpp"

namespace socialgrad {

enum class ResponseMethod {
  ClosedFormLinear,
  ProjectedGradient,
  PotentialMinimization,
};

std::string_view to_string(ResponseMethod m);
ResponseMethod parse_response_method(std::string_view s);

struct ResponseSolverConfig {
  ResponseMethod method = ResponseMethod::ProjectedGradient;
  double tol = 1e-10;
  long max_iter = 1'000'000;
  // Inner projected-gradient step; admissible range is (0, m / L^2).
  double step_eta = 0.0;
};

// Picks the method from the game's structure (closed form for linear games,
// potential minimization when a potential is registered, projected gradient
// otherwise) and sets step_eta = m / (2 L^2).
ResponseSolverConfig default_solver_config(const GameModel& game);

// Throws ConfigError when tol, max_iter or step_eta are out of range for
// this game, or the method needs structure the game lacks.
void validate(const ResponseSolverConfig& cfg, const GameModel& game);

struct ResponseResult {
  Vector x_star;
  double residual = 0.0;  // ||g0(x*) + p||_2
  long iterations = 0;
  bool converged = false;
  // x_star is at least interior_margin(game) away from every face, i.e. the
  // incentive belongs to the response region P.
  bool interior = false;
};

// Minimum distance to the box faces for a response to count as interior.
double interior_margin(const BoxSpace& space);

// Incentivized Nash equilibrium x*(p). For p outside P the projected fixed
// point on the box boundary is returned with interior = false.
// Throws NonConvergenceError when the budget runs out.
ResponseResult solve_response(const GameModel& game, const Incentive& p, const ResponseSolverConfig& cfg,
                              const std::optional<Vector>& warm_start = std::nullopt);

// Solves M x = -p directly. Throws ContractViolation when M is numerically
// singular.
Vector solve_response_linear(const Matrix& M, const Vector& p);

// Minimizes the registered potential over the box by projected Newton with
// an Armijo search.
ResponseResult solve_response_potential(const GameModel& game, const Incentive& p,
                                        const ResponseSolverConfig& cfg,
                                        const std::optional<Vector>& warm_start = std::nullopt);

// Projected-gradient fixed-point iteration x <- Pi(x - eta (g0(x) + p)).
ResponseResult solve_response_projected_gradient(const GameModel& game, const Incentive& p,
                                                 const ResponseSolverConfig& cfg,
                                                 const std::optional<Vector>& warm_start = std::nullopt);

// Contraction factor rho = (1 - eta m + eta^2 L^2)^(1/2) of the projected
// gradient map.
double projected_gradient_rate(const GameModel& game, double eta);

// Central finite-difference Jacobian of p -> x*(p). Every probe p +- h e_i
// must stay in P; otherwise OutsideResponseRegion names the offending probe.
Matrix response_jacobian_fd(const GameModel& game, const Incentive& p, double h,
                            const ResponseSolverConfig& cfg);

}  // namespace socialgrad
