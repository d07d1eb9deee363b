#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "socialgrad/games.hpp"
#include "socialgrad/response.hpp"
#include "socialgrad/rng.hpp"

using namespace socialgrad;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// Incentives of interior responses: p = -g0(x) for x uniform in a shrunken box.
std::vector<Incentive> interior_incentives(const GameModel& g, int count, double shrink, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Incentive> out;
  for (int s = 0; s < count; ++s) {
    Vector x(g.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x[i] = shrink * rng.uniform(g.space.lower()[i], g.space.upper()[i]);
    }
    out.push_back(-g.g0(x));
  }
  return out;
}

}  // namespace

TEST(SolverConfig, DefaultsFollowGameStructure) {
  const GameModel agg = preset_game("aggregative-5");
  const GameModel osc = preset_game("oscillator-2");
  EXPECT_EQ(default_solver_config(agg).method, ResponseMethod::ClosedFormLinear);
  EXPECT_EQ(default_solver_config(osc).method, ResponseMethod::PotentialMinimization);
  for (const GameModel* g : {&agg, &osc}) {
    const ResponseSolverConfig cfg = default_solver_config(*g);
    const double L = g->jacobian_norm_bound;
    EXPECT_NEAR(cfg.step_eta, g->monotonicity_m / (2.0 * L * L), 1e-15);
    EXPECT_EQ(cfg.tol, 1e-10);
    EXPECT_EQ(cfg.max_iter, 1'000'000);
    EXPECT_NO_THROW(validate(cfg, *g));
  }
}

TEST(SolverConfig, RejectsOutOfRangeValues) {
  const GameModel agg = preset_game("aggregative-5");
  ResponseSolverConfig cfg = default_solver_config(agg);
  const double L = agg.jacobian_norm_bound;
  cfg.step_eta = agg.monotonicity_m / (L * L);
  EXPECT_THROW(validate(cfg, agg), ConfigError);
  cfg = default_solver_config(agg);
  cfg.tol = 0.0;
  EXPECT_THROW(validate(cfg, agg), ConfigError);
  cfg = default_solver_config(agg);
  cfg.method = ResponseMethod::PotentialMinimization;
  EXPECT_THROW(validate(cfg, agg), ConfigError);
}

TEST(SolverConfig, MethodNamesRoundTrip) {
  for (auto m : {ResponseMethod::ClosedFormLinear, ResponseMethod::ProjectedGradient,
                 ResponseMethod::PotentialMinimization}) {
    EXPECT_EQ(parse_response_method(to_string(m)), m);
  }
  EXPECT_EQ(to_string(ResponseMethod::ProjectedGradient), "projected-gradient-fixed-point");
  EXPECT_THROW(parse_response_method("newton"), ConfigError);
}

TEST(SolveResponse, LinearZeroIncentiveGivesOrigin) {
  const GameModel g = preset_game("aggregative-5");
  const ResponseResult r = solve_response(g, Vector::Zero(5), default_solver_config(g));
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.interior);
  EXPECT_LE(r.x_star.norm(), 1e-15);
}

TEST(SolveResponse, DecoupledGameIsScalarDivision) {
  AggregativeGameSpec spec = default_aggregative_spec();
  spec.a = 0.0;
  const GameModel g = build_aggregative(spec);
  const Vector p = Vector::LinSpaced(5, -1.0, 1.0);
  for (auto method : {ResponseMethod::ClosedFormLinear, ResponseMethod::ProjectedGradient,
                      ResponseMethod::PotentialMinimization}) {
    ResponseSolverConfig cfg = default_solver_config(g);
    cfg.method = method;
    const Vector x = solve_response(g, p, cfg).x_star;
    for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(x[i], -p[i] / spec.q[i], 1e-9) << to_string(method);
  }
}

TEST(SolveResponseLinear, IdentityAndDiagonal) {
  EXPECT_EQ(solve_response_linear(Matrix::Identity(4, 4), Vector::Ones(4)), Vector::Constant(4, -1.0));
  Vector q(3);
  q << 1.0, 2.0, 4.0;
  const Vector p(Vector::Constant(3, 2.0));
  const Vector x = solve_response_linear(Matrix(q.asDiagonal()), p);
  EXPECT_NEAR(x[0], -2.0, 1e-15);
  EXPECT_NEAR(x[1], -1.0, 1e-15);
  EXPECT_NEAR(x[2], -0.5, 1e-15);
}

TEST(SolveResponseLinear, ShippedInstanceGivesFirstColumnOfNegativeInverse) {
  const GameModel g = preset_game("aggregative-5");
  const Matrix& M = *g.linear_operator;
  Vector e1 = Vector::Zero(5);
  e1[0] = 1.0;
  const Vector oracle_x = -M.colPivHouseholderQr().solve(e1);
  EXPECT_LE((solve_response_linear(M, e1) - oracle_x).norm(), 1e-13);
}

TEST(SolveResponseLinear, SingularMatrixIsRejected) {
  Matrix M = Matrix::Identity(3, 3);
  M(2, 2) = 0.0;
  EXPECT_THROW(solve_response_linear(M, Vector::Ones(3)), ContractViolation);
}

TEST(SolveResponse, OscillatorRoundTrip) {
  const GameModel g = preset_game("oscillator-2");
  const Vector xb = v2(0.3, -0.2);
  for (auto method : {ResponseMethod::PotentialMinimization, ResponseMethod::ProjectedGradient}) {
    ResponseSolverConfig cfg = default_solver_config(g);
    cfg.method = method;
    const ResponseResult r = solve_response(g, -g.g0(xb), cfg);
    EXPECT_TRUE(r.converged);
    EXPECT_TRUE(r.interior);
    EXPECT_LE(r.residual, cfg.tol);
    EXPECT_LE((r.x_star - xb).norm(), 2.0 / g.monotonicity_m * cfg.tol + 1e-15) << to_string(method);
  }
}

TEST(SolvePotential, ZeroIncentiveGivesOrigin) {
  const GameModel g = preset_game("oscillator-2");
  const Vector pd = -g.g0(v2(0, 0));
  const ResponseResult r = solve_response_potential(g, pd, default_solver_config(g));
  EXPECT_LE(r.x_star.norm(), 1e-12);
}

TEST(SolvePotential, MatchesGridSearchAtInitialIncentive) {
  const GameModel g = preset_game("oscillator-2");
  const Vector p0 = v2(-3.0, -3.0);
  const auto psi = [&](const Vector& x) { return (*g.potential)(x, p0); };
  const int res = 2001;
  const auto [xg, fg] = oracle::grid_argmin_2d(psi, g.space.lower(), g.space.upper(), res);
  const double spacing = (g.space.upper()[0] - g.space.lower()[0]) / (res - 1);
  const ResponseResult r = solve_response_potential(g, p0, default_solver_config(g));
  EXPECT_TRUE(r.interior);
  EXPECT_LE((r.x_star - xg).cwiseAbs().maxCoeff(), spacing);
  EXPECT_LE(psi(r.x_star), fg + 1e-12);
}

TEST(SolvePotential, FarIncentiveLandsOnBoundary) {
  const GameModel g = preset_game("oscillator-2");
  const Vector p = v2(-20.0, 1.0);
  const auto psi = [&](const Vector& x) { return (*g.potential)(x, p); };
  const int res = 2001;
  const auto [xg, fg] = oracle::grid_argmin_2d(psi, g.space.lower(), g.space.upper(), res);
  const double spacing = (g.space.upper()[0] - g.space.lower()[0]) / (res - 1);
  const ResponseResult r = solve_response(g, p, default_solver_config(g));
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.interior);
  EXPECT_NEAR(r.x_star[0], std::numbers::pi / 3.0, 1e-12);
  EXPECT_LE((r.x_star - xg).cwiseAbs().maxCoeff(), spacing);
  EXPECT_GT(r.residual, 1.0);
}

TEST(SolveResponse, ProjectedGradientRunsOutOfBudget) {
  const GameModel g = preset_game("oscillator-2");
  ResponseSolverConfig cfg = default_solver_config(g);
  cfg.method = ResponseMethod::ProjectedGradient;
  cfg.max_iter = 3;
  try {
    solve_response(g, v2(-3, -3), cfg);
    FAIL() << "expected NonConvergenceError";
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.last_iterate().size(), 2);
    EXPECT_GT(e.residual(), cfg.tol);
  }
}

TEST(ProjectedGradient, ErrorAfterKStepsWithinRhoPowerK) {
  for (const auto& name : preset_names()) {
    const GameModel g = preset_game(name);
    ResponseSolverConfig cfg = default_solver_config(g);
    const double rho = projected_gradient_rate(g, cfg.step_eta);
    ASSERT_LT(rho, 1.0);
    for (const Incentive& p : interior_incentives(g, 10, 0.8, 3)) {
      const Vector xs = solve_response(g, p, cfg).x_star;
      const Vector x0 = g.space.center() + 0.5 * (g.space.upper() - g.space.center());
      for (long k : {1L, 5L, 40L}) {
        ResponseSolverConfig pg = cfg;
        pg.method = ResponseMethod::ProjectedGradient;
        pg.max_iter = k;
        Vector xk;
        try {
          xk = solve_response_projected_gradient(g, p, pg, x0).x_star;
        } catch (const NonConvergenceError& e) {
          xk = e.last_iterate();
        }
        EXPECT_LE((xk - xs).norm(), std::pow(rho, static_cast<double>(k)) * (x0 - xs).norm() + 1e-12) << name;
      }
    }
  }
}

class ResponseMapInvariants : public ::testing::TestWithParam<std::string> {};

TEST_P(ResponseMapInvariants, RoundTripWithinTenTol) {
  const GameModel g = preset_game(GetParam());
  const ResponseSolverConfig cfg = default_solver_config(g);
  Rng rng(12);
  for (int s = 0; s < 100; ++s) {
    Vector xb(g.dim());
    for (Eigen::Index i = 0; i < xb.size(); ++i) {
      xb[i] = rng.uniform(0.999 * g.space.lower()[i], 0.999 * g.space.upper()[i]);
    }
    EXPECT_LE((solve_response(g, -g.g0(xb), cfg).x_star - xb).norm(), 10.0 * cfg.tol);
  }
}

TEST_P(ResponseMapInvariants, LipschitzTwoOverM) {
  const GameModel g = preset_game(GetParam());
  const ResponseSolverConfig cfg = default_solver_config(g);
  const auto ps = interior_incentives(g, 60, 0.95, 13);
  for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
    const Vector a = solve_response(g, ps[i], cfg).x_star, b = solve_response(g, ps[i + 1], cfg).x_star;
    EXPECT_LE((a - b).norm(), 2.0 / g.monotonicity_m * (ps[i] - ps[i + 1]).norm() + 2.0 * cfg.tol);
  }
}

TEST_P(ResponseMapInvariants, FdJacobianMatchesNegativeInverseAndIsNegativeDefinite) {
  const GameModel g = preset_game(GetParam());
  const ResponseSolverConfig cfg = default_solver_config(g);
  for (const Incentive& p : interior_incentives(g, 20, 0.8, 14)) {
    const Matrix J = response_jacobian_fd(g, p, 1e-5, cfg);
    const Vector xs = solve_response(g, p, cfg).x_star;
    const Matrix analytic = -g.jac_g0(xs).inverse();
    EXPECT_LE((J - analytic).norm(), 1e-6);
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(J));
    EXPECT_LT(es.eigenvalues().maxCoeff(), 0.0);
    Eigen::JacobiSVD<Matrix> svd(J);
    EXPECT_GE(svd.singularValues().minCoeff(), 1.0 / g.jacobian_norm_bound - 1e-4);
    EXPECT_LE(svd.singularValues().maxCoeff(), 2.0 / g.monotonicity_m + 1e-4);
  }
}

INSTANTIATE_TEST_SUITE_P(Presets, ResponseMapInvariants, ::testing::Values("aggregative-5", "oscillator-2"),
                         [](const auto& info) { return info.param == "aggregative-5" ? "Aggregative" : "Oscillator"; });

TEST(ResponseJacobian, LinearGameIsConstantNegativeInverse) {
  const GameModel g = preset_game("aggregative-5");
  const Matrix Minv = g.linear_operator->inverse();
  for (const Incentive& p : interior_incentives(g, 5, 0.5, 15)) {
    EXPECT_LE((response_jacobian_fd(g, p, 1e-4, default_solver_config(g)) + Minv).norm(), 1e-9);
  }
}

TEST(ResponseJacobian, OscillatorAtOrigin) {
  const GameModel g = preset_game("oscillator-2");
  Matrix dg(2, 2);
  dg << 3.2, 1.0, 1.0, 4.0;
  const Matrix J = response_jacobian_fd(g, v2(0, 0), 1e-5, default_solver_config(g));
  EXPECT_LE((J + dg.inverse()).norm(), 1e-8);
}

TEST(ResponseJacobian, ProbeOutsideRegionIsNamed) {
  const GameModel g = preset_game("oscillator-2");
  // Response sits within 1e-3 of the upper face of x_1.
  const Vector xb = v2(std::numbers::pi / 3.0 - 1e-3, 0.0);
  try {
    response_jacobian_fd(g, -g.g0(xb), 0.05, default_solver_config(g));
    FAIL() << "expected OutsideResponseRegion";
  } catch (const OutsideResponseRegion& e) {
    EXPECT_NE(std::string(e.what()).find("e_"), std::string::npos) << e.what();
    EXPECT_EQ(e.incentive().size(), 2);
  }
}
