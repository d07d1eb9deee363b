#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "socialgrad/experiment.hpp"
#include "socialgrad/games.hpp"
#include "socialgrad/planner.hpp"
#include "socialgrad/rng.hpp"

using namespace socialgrad;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

struct PresetEnv {
  GameModel game;
  SocialObjective obj;
  ResponseSolverConfig solver;
  SublevelGeometry geom;
};

PresetEnv make_env(const std::string& preset, double c_fraction) {
  GameModel g = preset_game(preset);
  SocialObjective obj = quadratic_objective(preset_x_dagger(preset));
  ResponseSolverConfig cfg = default_solver_config(g);
  SublevelGeometry geom = make_geometry(g, obj, c_fraction, cfg, 0);
  return {std::move(g), std::move(obj), cfg, std::move(geom)};
}

// Incentives p = -g0(x) for x uniform in the x-space sublevel region.
std::vector<Incentive> sublevel_incentives(const PresetEnv& s, int count, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.num_initial_conditions = count;
  cfg.seed = seed;
  std::vector<Incentive> out;
  for (const auto& ic : sample_initial_conditions(cfg, s.game, s.obj, s.geom)) out.push_back(ic.p0);
  return out;
}

}  // namespace

TEST(SocialObjective, QuadraticSatisfiesContract) {
  const SocialObjective obj = quadratic_objective(v2(0.3, -0.1));
  EXPECT_LE(obj.grad_phi(obj.x_dagger).norm(), 1e-12);
  EXPECT_NO_THROW(validate(obj, BoxSpace::cube(2, -1.0, 1.0)));
  Rng rng(1);
  for (int s = 0; s < 100; ++s) {
    const Vector x = v2(rng.uniform(-1, 1), rng.uniform(-1, 1)), y = v2(rng.uniform(-1, 1), rng.uniform(-1, 1));
    EXPECT_GE(obj.phi(y), obj.phi(x) + obj.grad_phi(x).dot(y - x) + 0.5 * obj.mu_phi * (y - x).squaredNorm() - 1e-14);
  }
  EXPECT_THROW(validate(quadratic_objective(v2(1.0, 0.0)), BoxSpace::cube(2, -1.0, 1.0)), ContractViolation);
}

TEST(CStar, CenteredQuadraticExamples) {
  EXPECT_NEAR(compute_c_star(quadratic_objective(Vector::Zero(5)), BoxSpace::cube(5, -2.0, 2.0), 5), 2.0, 1e-12);
  EXPECT_NEAR(compute_c_star(quadratic_objective(v2(1.0, 0.0)), BoxSpace::cube(2, -2.0, 2.0), 11), 0.5, 1e-12);
  EXPECT_NEAR(quadratic_c_star(v2(1.0, 0.0), BoxSpace::cube(2, -2.0, 2.0)), 0.5, 1e-15);
}

TEST(CStar, OscillatorMatchesBruteForceBoundaryGrid) {
  const BoxSpace box = BoxSpace::cube(2, -std::numbers::pi / 3.0, std::numbers::pi / 3.0);
  const Vector xd = preset_x_dagger("oscillator-2");
  const SocialObjective obj = quadratic_objective(xd);
  // 1e4 points on each of the four edges.
  double brute = 1e300;
  const int pts = 10000;
  for (int face = 0; face < 4; ++face) {
    const int axis = face / 2;
    const double fixed = face % 2 == 0 ? box.lower()[axis] : box.upper()[axis];
    for (int k = 0; k < pts; ++k) {
      Vector x(2);
      x[axis] = fixed;
      x[1 - axis] = box.lower()[1 - axis] + (box.upper()[1 - axis] - box.lower()[1 - axis]) * k / (pts - 1);
      brute = std::min(brute, obj.phi(x) - obj.phi(xd));
    }
  }
  const double cs = compute_c_star(obj, box, 41);
  EXPECT_NEAR(cs, quadratic_c_star(xd, box), 1e-12);
  EXPECT_LE(cs, brute + 1e-12);
  EXPECT_NEAR(cs, brute, 1e-6);
}

TEST(CStar, ShippedOscillatorOptimumPutsInitialIncentiveAtSixtyTwoPercent) {
  const PresetEnv s = make_env("oscillator-2", 0.95);
  const Membership m = evaluate_membership(v2(-3, -3), s.geom, s.game, s.obj, s.solver);
  EXPECT_TRUE(m.member);
  EXPECT_NEAR(m.V / s.geom.c_star, 0.62, 1e-6);
}

TEST(Geometry, RecoversOptimumAndRejectsBadFraction) {
  for (const auto& preset : preset_names()) {
    const PresetEnv s = make_env(preset, 0.8);
    EXPECT_NEAR(s.geom.c, 0.8 * s.geom.c_star, 1e-15);
    EXPECT_LE((s.geom.p_dagger + s.game.g0(s.obj.x_dagger)).norm(), 1e-15);
    EXPECT_LE((solve_response(s.game, s.geom.p_dagger, s.solver).x_star - s.obj.x_dagger).norm(), 1e-9);
    EXPECT_THROW(make_geometry(s.game, s.obj, 1.0, s.solver, 0), ConfigError);
  }
  EXPECT_NEAR(make_env("aggregative-5", 0.5).geom.c_star, 1.28, 1e-12);
}

TEST(Membership, Examples) {
  const PresetEnv osc = make_env("oscillator-2", 0.95);
  EXPECT_TRUE(in_sublevel_set(osc.geom.p_dagger, osc.geom, osc.game, osc.obj, osc.solver));
  EXPECT_TRUE(in_sublevel_set(v2(-3, -3), osc.geom, osc.game, osc.obj, osc.solver));

  const PresetEnv agg = make_env("aggregative-5", 0.99);
  Vector xb = Vector::Zero(5);
  xb[2] = 2.0;  // on the upper face
  EXPECT_FALSE(in_sublevel_set(-agg.game.g0(xb), agg.geom, agg.game, agg.obj, agg.solver));
}

TEST(Flow, StationaryAtOptimum) {
  const PresetEnv s = make_env("oscillator-2", 0.9);
  FlowConfig cfg = default_flow_config(s.game);
  cfg.horizon_T = 1.0;
  cfg.stop_tol = 0.0;
  cfg.record_every = 50;
  const FlowRecord rec = integrate_social_gradient_flow(s.geom.p_dagger, cfg, s.game, s.obj, s.geom, s.solver);
  for (const FlowSample& f : rec.samples) {
    EXPECT_LE(f.V, 1e-20);
    EXPECT_LE(f.dist_to_pdagger, 1e-12);
  }
}

TEST(Flow, LinearGameMatchesMatrixExponential) {
  const PresetEnv s = make_env("aggregative-5", 0.99);
  const Matrix Minv = s.game.linear_operator->inverse();
  FlowConfig cfg;
  cfg.integrator = Integrator::Rk4;
  cfg.dt = 1e-3;
  cfg.horizon_T = 10.0;
  cfg.record_every = 1;
  cfg.stop_tol = 0.0;
  const Incentive p0 = sublevel_incentives(s, 3, 99)[0];
  const FlowRecord rec = integrate_social_gradient_flow(p0, cfg, s.game, s.obj, s.geom, s.solver);
  ASSERT_EQ(rec.samples.size(), 10001u);
  // p' = -M^{-1} p - x_dagger = -M^{-1} (p - p_dagger).
  double worst = 0.0;
  for (const FlowSample& f : rec.samples) {
    const Matrix E = (-Minv * f.t).exp();
    const Vector exact = s.geom.p_dagger + E * (p0 - s.geom.p_dagger);
    worst = std::max(worst, (f.p - exact).norm());
  }
  EXPECT_LE(worst, 1e-6);
  EXPECT_NEAR(rec.samples.back().t, 10.0, 1e-9);
}

TEST(Flow, EulerAgreesWithRk4ToFirstOrder) {
  const PresetEnv s = make_env("oscillator-2", 0.95);
  FlowConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon_T = 2.0;
  cfg.record_every = 2000;
  cfg.stop_tol = 0.0;
  const FlowRecord rk = integrate_social_gradient_flow(v2(-3, -3), cfg, s.game, s.obj, s.geom, s.solver);
  cfg.integrator = Integrator::ExplicitEuler;
  const FlowRecord eu = integrate_social_gradient_flow(v2(-3, -3), cfg, s.game, s.obj, s.geom, s.solver);
  const double diff = (rk.samples.back().p - eu.samples.back().p).norm();
  EXPECT_GT(diff, 0.0);
  EXPECT_LE(diff, 10.0 * cfg.dt);
}

TEST(Flow, RejectsIncentiveOutsideSublevelSet) {
  const PresetEnv s = make_env("aggregative-5", 0.5);
  Vector xb = Vector::Zero(5);
  xb[0] = 1.95;
  EXPECT_THROW(integrate_social_gradient_flow(-s.game.g0(xb), default_flow_config(s.game), s.game, s.obj, s.geom,
                                              s.solver),
               ContractViolation);
}

TEST(Flow, OversizedStepLeavesRegionWithDiagnostics) {
  const PresetEnv s = make_env("oscillator-2", 0.95);
  FlowConfig cfg;
  cfg.integrator = Integrator::ExplicitEuler;
  cfg.dt = 100.0;
  cfg.horizon_T = 1000.0;
  try {
    integrate_social_gradient_flow(v2(-3, -3), cfg, s.game, s.obj, s.geom, s.solver);
    FAIL() << "expected FlowLeftRegion";
  } catch (const FlowLeftRegion& e) {
    EXPECT_EQ(e.last_valid().t, 0.0);
    EXPECT_EQ(e.last_valid().p, v2(-3, -3));
  }
}

TEST(FlowConfig, Validation) {
  FlowConfig cfg;
  EXPECT_NO_THROW(validate(cfg));
  cfg.dt = 0.0;
  EXPECT_THROW(validate(cfg), ConfigError);
  cfg = FlowConfig{};
  cfg.horizon_T = 0.5 * cfg.dt;
  EXPECT_THROW(validate(cfg), ConfigError);
  EXPECT_EQ(parse_integrator(to_string(Integrator::ExplicitEuler)), Integrator::ExplicitEuler);
  EXPECT_EQ(parse_integrator("rk4"), Integrator::Rk4);
  EXPECT_THROW(parse_integrator("rk45"), ConfigError);
  const GameModel g = preset_game("oscillator-2");
  EXPECT_NEAR(default_flow_config(g).dt, 1e-2 * 0.1, 1e-15);
}

class FlowInvariants : public ::testing::TestWithParam<std::string> {};

TEST_P(FlowInvariants, ForwardInvariantAndMonotone) {
  const PresetEnv s = make_env(GetParam(), 0.9);
  FlowConfig cfg = default_flow_config(s.game);
  cfg.horizon_T = 20.0;
  cfg.record_every = 100;
  const double margin = interior_margin(s.game.space);
  for (const Incentive& p0 : sublevel_incentives(s, 5, 7)) {
    const FlowRecord rec = integrate_social_gradient_flow(p0, cfg, s.game, s.obj, s.geom, s.solver);
    for (std::size_t k = 0; k < rec.samples.size(); ++k) {
      const FlowSample& f = rec.samples[k];
      EXPECT_LE(f.V, s.geom.c);
      EXPECT_GE(boundary_distance(f.x_star, s.game.space), margin);
      if (k > 0) EXPECT_LE(f.V, rec.samples[k - 1].V + 1e-9);
    }
    // Recorded samples agree with the membership oracle.
    EXPECT_TRUE(in_sublevel_set(rec.samples.back().p, s.geom, s.game, s.obj, s.solver));
  }
}

TEST_P(FlowInvariants, DescentSignAndGradientVanishesOnlyAtOptimum) {
  const PresetEnv s = make_env(GetParam(), 0.9);
  EXPECT_LE(std::abs(lyapunov_derivative(s.geom.p_dagger, s.game, s.obj, s.solver, 1e-5)), 1e-12);
  const double sigma1 = 1.0 / s.game.jacobian_norm_bound;
  for (const Incentive& p : sublevel_incentives(s, 30, 8)) {
    EXPECT_LT(lyapunov_derivative(p, s.game, s.obj, s.solver, 1e-5), 0.0);
    const Vector xs = solve_response(s.game, p, s.solver).x_star;
    EXPECT_GE(s.obj.grad_phi(xs).norm(), sigma1 * (p - s.geom.p_dagger).norm() * (1.0 - 1e-6) - 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Presets, FlowInvariants, ::testing::Values("aggregative-5", "oscillator-2"),
                         [](const auto& info) { return info.param == "aggregative-5" ? "Aggregative" : "Oscillator"; });

TEST(Lyapunov, LinearGameClosedForm) {
  const PresetEnv s = make_env("aggregative-5", 0.9);
  const Matrix Minv = s.game.linear_operator->inverse();
  for (const Incentive& p : sublevel_incentives(s, 10, 9)) {
    const Vector g = solve_response(s.game, p, s.solver).x_star - s.obj.x_dagger;
    const double closed = -g.dot(sym(Minv) * g);
    EXPECT_NEAR(lyapunov_derivative(p, s.game, s.obj, s.solver, 1e-4), closed, 1e-9 * std::max(1.0, std::abs(closed)));
  }
}
