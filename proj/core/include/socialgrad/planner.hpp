#pragma once

#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "socialgrad/response.hpp"

namespace socialgrad {

// Planner's strongly convex social cost with its unique interior minimizer.
struct SocialObjective {
  std::function<double(const Vector&)> phi;
  std::function<Vector(const Vector&)> grad_phi;
  Vector x_dagger;
  double mu_phi = 1.0;  // strong convexity
  double lip_L2 = 1.0;  // gradient Lipschitz constant
};

// Phi(x) = 1/2 ||x - x_dagger||^2.
SocialObjective quadratic_objective(const Vector& x_dagger);

// Checks grad_phi(x_dagger) = 0, interiority of x_dagger and the strong
// convexity inequality on random pairs. Throws ContractViolation.
void validate(const SocialObjective& obj, const BoxSpace& space, int samples = 64);

// min over the box boundary of Phi(x) - Phi(x_dagger). Each face is scanned
// on face_grid points per free coordinate, then refined by projected
// gradient descent restricted to the face. Throws ContractViolation when the
// result is not positive.
double compute_c_star(const SocialObjective& obj, const BoxSpace& space, int face_grid);

// Closed form 1/2 dist(x_dagger, boundary)^2 for the centered quadratic.
double quadratic_c_star(const Vector& x_dagger, const BoxSpace& space);

struct SublevelGeometry {
  double c_star = 0.0;
  double c = 0.0;
  Incentive p_dagger;  // -g0(x_dagger), the incentive that induces x_dagger
};

// c = c_fraction * c_star with c_fraction in (0, 1). Verifies that the
// response to p_dagger recovers x_dagger.
SublevelGeometry make_geometry(const GameModel& game, const SocialObjective& obj, double c_fraction,
                               const ResponseSolverConfig& solver_cfg, int face_grid = 41);

struct Membership {
  bool member = false;
  bool interior = false;
  double V = 0.0;  // Phi(x*) - Phi(x_dagger)
  ResponseResult response;
};

// Membership in P_c together with the response it was decided on.
Membership evaluate_membership(const Incentive& p, const SublevelGeometry& geom, const GameModel& game,
                               const SocialObjective& obj, const ResponseSolverConfig& solver_cfg,
                               const std::optional<Vector>& warm_start = std::nullopt);

// True iff the response to p is interior and Phi(x*) - Phi(x_dagger) <= c.
// Solver non-convergence propagates as NonConvergenceError.
bool in_sublevel_set(const Incentive& p, const SublevelGeometry& geom, const GameModel& game,
                     const SocialObjective& obj, const ResponseSolverConfig& solver_cfg);

enum class Integrator { ExplicitEuler, Rk4 };

std::string_view to_string(Integrator i);
Integrator parse_integrator(std::string_view s);

struct FlowConfig {
  Integrator integrator = Integrator::Rk4;
  double dt = 1e-3;
  double horizon_T = 10.0;
  int record_every = 1;
  double stop_tol = 1e-8;  // on ||grad Phi(x*(p))||; 0 disables early stop
};

// RK4 with dt = 1e-2 * (m / 2).
FlowConfig default_flow_config(const GameModel& game);

void validate(const FlowConfig& cfg);

struct FlowSample {
  double t = 0.0;
  Incentive p;
  Strategy x_star;
  double V = 0.0;
  double grad_norm = 0.0;
  double dist_to_pdagger = 0.0;
};

struct FlowRecord {
  std::vector<FlowSample> samples;
  double final_time = 0.0;
  bool stopped_early = false;  // hit stop_tol before the horizon
};

// Thrown when an integrator stage leaves P. Carries the last valid sample.
class FlowLeftRegion : public OutsideResponseRegion {
 public:
  FlowLeftRegion(const std::string& what, Vector incentive, FlowSample last_valid)
      : OutsideResponseRegion(what, std::move(incentive)), last_valid_(std::move(last_valid)) {}
  const FlowSample& last_valid() const { return last_valid_; }

 private:
  FlowSample last_valid_;
};

// Integrates p' = grad Phi(x*(p)) from p0 in P_c. Throws ContractViolation if
// p0 is not in P_c and FlowLeftRegion if a stage leaves P.
FlowRecord integrate_social_gradient_flow(const Incentive& p0, const FlowConfig& cfg, const GameModel& game,
                                          const SocialObjective& obj, const SublevelGeometry& geom,
                                          const ResponseSolverConfig& solver_cfg);

// grad Phi(x*)^T Sym(Dx*(p)) grad Phi(x*) with Dx* by central differences.
double lyapunov_derivative(const Incentive& p, const GameModel& game, const SocialObjective& obj,
                           const ResponseSolverConfig& solver_cfg, double h);

}  // namespace socialgrad
