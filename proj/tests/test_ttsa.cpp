#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "socialgrad/experiment.hpp"
#include "socialgrad/games.hpp"
#include "socialgrad/ttsa.hpp"

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

std::vector<InitialCondition> sample(const PresetEnv& e, int count, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.num_initial_conditions = count;
  cfg.seed = seed;
  return sample_initial_conditions(cfg, e.game, e.obj, e.geom);
}

TtsaConfig ttsa_config(const PresetEnv& e, RuleKind kind, long max_iter) {
  TtsaConfig cfg;
  cfg.rule = make_learning_rule(kind, e.game);
  cfg.c_fraction = e.geom.c / e.geom.c_star;
  cfg.max_iter = max_iter;
  cfg.record_every = std::max<long>(1, max_iter / 100);
  return cfg;
}

}  // namespace

TEST(StepSchedule, DefaultsAndValidation) {
  const StepSchedule s;
  EXPECT_DOUBLE_EQ(s.a(0), 1.0);
  EXPECT_DOUBLE_EQ(s.beta(0), 1.0);
  EXPECT_NEAR(s.a(9), std::pow(10.0, -0.6), 1e-15);
  EXPECT_NEAR(s.beta(9), std::pow(10.0, -0.9), 1e-15);
  EXPECT_NO_THROW(validate(s));

  StepSchedule bad = s;
  bad.b_exp = 0.6;
  EXPECT_THROW(validate(bad), ConfigError);
  bad = s;
  bad.a_exp = 0.5;
  EXPECT_THROW(validate(bad), ConfigError);
  bad = s;
  bad.b_exp = 1.1;
  EXPECT_THROW(validate(bad), ConfigError);
  bad = s;
  bad.a0 = 2.0;
  EXPECT_THROW(validate(bad), ConfigError);
  bad = s;
  bad.offset = 0;
  EXPECT_THROW(validate(bad), ConfigError);
}

TEST(StepSchedule, PartialSumLawsHold) {
  for (const VerifyCheck& c : check_schedule_laws(StepSchedule{}, 1'000'000)) {
    EXPECT_TRUE(c.pass) << c.name << " measured=" << c.measured << " bound=" << c.bound;
  }
}

TEST(RuleKind, NamesRoundTrip) {
  for (RuleKind k : {RuleKind::NE, RuleKind::BR, RuleKind::PG}) EXPECT_EQ(parse_rule_kind(to_string(k)), k);
  EXPECT_THROW(parse_rule_kind("gradient"), ConfigError);
}

TEST(LearningRuleNe, Examples) {
  const PresetEnv e = make_env("aggregative-5", 0.8);
  const Vector any = Vector::Constant(5, 1.3);
  EXPECT_LE((learning_rule_ne(any, e.geom.p_dagger, e.game, e.solver) - e.obj.x_dagger).norm(), 1e-9);
  const Incentive p = sample(e, 1, 4)[0].p0;
  const Vector closed = -e.game.linear_operator->inverse() * p;
  EXPECT_LE((learning_rule_ne(any, p, e.game, e.solver) - closed).norm(), 1e-9);
  EXPECT_LE((learning_rule_ne(closed, p, e.game, e.solver) - closed).norm(), 1e-9);
}

TEST(LearningRuleBr, OriginMatchesScalarMinimization) {
  const AggregativeGameSpec spec = default_aggregative_spec();
  const GameModel g = build_aggregative(spec);
  const Vector x = Vector::Zero(5), p = Vector::Ones(5);
  const Vector br = learning_rule_br(x, p, g);
  for (Eigen::Index i = 0; i < 5; ++i) {
    const double xi = oracle::golden_min(
        [&](double t) {
          Vector y = x;
          y[i] = t;
          return aggregative_cost(spec, i, y) + p[i] * t;
        },
        -2.0, 2.0);
    EXPECT_NEAR(br[i], xi, 1e-7);
    EXPECT_NEAR(br[i], -1.0 / spec.q[i], 1e-15);
  }
}

TEST(LearningRuleBr, FixedPointDecoupledAndUnsupported) {
  const PresetEnv e = make_env("aggregative-5", 0.8);
  const Incentive p = sample(e, 1, 5)[0].p0;
  const Strategy xs = solve_response(e.game, p, e.solver).x_star;
  EXPECT_LE((learning_rule_br(xs, p, e.game) - xs).norm(), 1e-9);

  AggregativeGameSpec spec = default_aggregative_spec();
  spec.a = 0.0;
  const GameModel g0 = build_aggregative(spec);
  const Vector pp = Vector::LinSpaced(5, -1.0, 1.0);
  const Vector expected = -(pp.array() / spec.q.array()).matrix();
  for (double v : {-1.0, 0.5, 1.7}) EXPECT_LE((learning_rule_br(Vector::Constant(5, v), pp, g0) - expected).norm(), 1e-15);

  const GameModel osc = preset_game("oscillator-2");
  EXPECT_THROW(learning_rule_br(v2(0, 0), v2(0, 0), osc), UnsupportedRuleError);
  EXPECT_THROW(make_learning_rule(RuleKind::BR, osc), UnsupportedRuleError);
}

TEST(LearningRulePg, OriginStepAndAdmissibleRange) {
  const GameModel g = preset_game("oscillator-2");
  const Vector p = v2(0.1, -0.1);
  // G(0) = p, so one raw gradient step of size 0.01 lands at -0.01 p.
  const Vector raw = project_box(Vector::Zero(2) - 0.01 * incentivized_pseudo_gradient(g, Vector::Zero(2), p), g.space);
  EXPECT_LE((raw - v2(-0.001, 0.001)).norm(), 1e-17);
  // 0.01 exceeds m / L^2 on this game, so the rule itself refuses it.
  const double eta_max = g.monotonicity_m / (g.jacobian_norm_bound * g.jacobian_norm_bound);
  EXPECT_LT(eta_max, 0.01);
  EXPECT_THROW(learning_rule_pg(Vector::Zero(2), p, g, 0.01), ConfigError);
  EXPECT_THROW(make_learning_rule(RuleKind::PG, g, 0.01), ConfigError);
  EXPECT_THROW(learning_rule_pg(Vector::Zero(2), p, g, 0.0), ConfigError);
  const double eta = 0.009;
  EXPECT_LE((learning_rule_pg(Vector::Zero(2), p, g, eta) - v2(-0.0009, 0.0009)).norm(), 1e-17);
  EXPECT_NEAR(make_learning_rule(RuleKind::PG, g).eta, 0.9 * eta_max, 1e-17);
}

class PgContraction : public ::testing::TestWithParam<std::string> {};

TEST_P(PgContraction, OneStepRatioWithinRho) {
  const PresetEnv e = make_env(GetParam(), 0.9);
  const LearningRule rule = make_learning_rule(RuleKind::PG, e.game);
  const double rho = projected_gradient_rate(e.game, rule.eta);
  EXPECT_NEAR(rule.certificate.rate, 1.0 - rho, 1e-15);
  int n = 0;
  for (const InitialCondition& ic : sample(e, 100, 6)) {
    const Strategy xs = solve_response(e.game, ic.p0, e.solver).x_star;
    EXPECT_LE((learning_rule_pg(xs, ic.p0, e.game, rule.eta) - xs).norm(), 1e-9);
    const double num = (learning_rule_pg(ic.x0, ic.p0, e.game, rule.eta) - xs).norm();
    const double den = (ic.x0 - xs).norm();
    EXPECT_LE(num / den, rho + 1e-8);
    ++n;
  }
  EXPECT_EQ(n, 100);
}

INSTANTIATE_TEST_SUITE_P(Presets, PgContraction, ::testing::Values("aggregative-5", "oscillator-2"),
                         [](const auto& info) { return info.param == "aggregative-5" ? "Aggregative" : "Oscillator"; });

TEST(Certification, RulesDecayAtCertifiedRate) {
  const PresetEnv agg = make_env("aggregative-5", 0.8);
  std::vector<Incentive> ps;
  for (const auto& ic : sample(agg, 5, 10)) ps.push_back(ic.p0);
  for (RuleKind k : {RuleKind::NE, RuleKind::BR, RuleKind::PG}) {
    const RuleCertificationReport r = certify_learning_rule(make_learning_rule(k, agg.game), agg.game, ps, agg.solver);
    EXPECT_TRUE(r.maps_into_box) << to_string(k);
    EXPECT_TRUE(r.exponential_decay) << to_string(k) << " worst=" << r.worst_observed_rate;
    EXPECT_EQ(r.probes, 5);
  }
  EXPECT_GT(make_learning_rule(RuleKind::BR, agg.game).certificate.rate, 0.0);
}

TEST(TtsaStep, NullStepAtOptimum) {
  for (const auto& preset : preset_names()) {
    const PresetEnv e = make_env(preset, 0.8);
    for (RuleKind k : {RuleKind::NE, RuleKind::PG}) {
      TtsaConfig cfg = ttsa_config(e, k, 10);
      for (long step : {0L, 7L, 1000L}) {
        const TtsaStepOutcome out =
            ttsa_step(TtsaState{e.obj.x_dagger, e.geom.p_dagger, step}, cfg, e.game, e.obj, e.geom, e.solver,
                      e.obj.x_dagger);
        EXPECT_LE((out.x - e.obj.x_dagger).norm(), 1e-9);
        EXPECT_EQ(out.p, e.geom.p_dagger);
        EXPECT_TRUE(out.accepted);
      }
    }
  }
}

TEST(TtsaStep, NeIsConvexCombinationWithResponse) {
  const PresetEnv e = make_env("aggregative-5", 0.8);
  const TtsaConfig cfg = ttsa_config(e, RuleKind::NE, 10);
  for (const InitialCondition& ic : sample(e, 10, 11)) {
    const long k = 3;
    const Strategy xs = solve_response(e.game, ic.p0, e.solver).x_star;
    const TtsaStepOutcome out = ttsa_step(TtsaState{ic.x0, ic.p0, k}, cfg, e.game, e.obj, e.geom, e.solver, xs);
    const double a = cfg.schedule.a(k);
    EXPECT_LE((out.x - ((1.0 - a) * ic.x0 + a * xs)).norm(), 1e-14);
    EXPECT_TRUE(e.game.space.contains(out.x));
  }
}

TEST(TtsaStep, HandEvaluatedOscillatorStep) {
  const PresetEnv e = make_env("oscillator-2", 0.95);
  const TtsaConfig cfg = ttsa_config(e, RuleKind::PG, 10);
  const Vector x0 = v2(0.0, -0.5), p0 = v2(-3.0, -3.0);
  const Strategy xs = solve_response(e.game, p0, e.solver).x_star;

  // k = 0: a = beta = 1, so x' = Pi(x0 - eta (g0(x0) + p0)).
  const double s5 = std::sin(0.5);
  const Vector g0 = v2(-s5, -5.0 * s5 + s5);
  const double eta = cfg.rule.eta;
  const Vector x_expected = project_box(x0 - eta * (g0 + p0), e.game.space);
  const Vector candidate = p0 + (x0 - e.obj.x_dagger);

  const TtsaStepOutcome out = ttsa_step(TtsaState{x0, p0, 0}, cfg, e.game, e.obj, e.geom, e.solver, xs);
  EXPECT_LE((out.x - x_expected).norm(), 1e-15);
  const bool member = in_sublevel_set(candidate, e.geom, e.game, e.obj, e.solver);
  EXPECT_EQ(out.accepted, member);
  EXPECT_EQ(out.p, member ? candidate : p0);

  // A late step with tiny beta is accepted and moves p by beta (x - x_dagger).
  const long k = 999;
  const TtsaStepOutcome late = ttsa_step(TtsaState{x0, p0, k}, cfg, e.game, e.obj, e.geom, e.solver, xs);
  EXPECT_TRUE(late.accepted);
  EXPECT_LE((late.p - (p0 + std::pow(1000.0, -0.9) * (x0 - e.obj.x_dagger))).norm(), 1e-15);
  EXPECT_LE((late.x - (x0 + std::pow(1000.0, -0.6) * (x_expected - x0))).norm(), 1e-15);
}

TEST(RunTtsa, ConstantAtOptimum) {
  const PresetEnv e = make_env("aggregative-5", 0.8);
  const TtsaRecord rec = run_ttsa(e.obj.x_dagger, e.geom.p_dagger, ttsa_config(e, RuleKind::NE, 500), e.game,
                                  e.obj, e.geom, e.solver);
  for (const TtsaSample& s : rec.samples) {
    EXPECT_LE(s.tracking_error, 1e-9);
    EXPECT_LE(s.incentive_error, 1e-9);
  }
  const DiagnosticsSummary d = tracking_diagnostics(rec);
  EXPECT_LE(d.tail_mean_tracking, 1e-9);
  EXPECT_LE(d.tail_mean_incentive, 1e-9);
  EXPECT_DOUBLE_EQ(d.tail_acceptance, 1.0);
  EXPECT_EQ(rec.summary.last_rejected_step, -1);
}

TEST(RunTtsa, PreconditionsAndDeterminism) {
  const PresetEnv e = make_env("aggregative-5", 0.8);
  const TtsaConfig cfg = ttsa_config(e, RuleKind::BR, 200);
  EXPECT_THROW(run_ttsa(Vector::Constant(5, 3.0), e.geom.p_dagger, cfg, e.game, e.obj, e.geom, e.solver),
               ContractViolation);
  Vector xb = Vector::Zero(5);
  xb[1] = 1.99;
  EXPECT_THROW(run_ttsa(e.obj.x_dagger, -e.game.g0(xb), cfg, e.game, e.obj, e.geom, e.solver), ContractViolation);

  const InitialCondition ic = sample(e, 1, 12)[0];
  const TtsaRecord a = run_ttsa(ic.x0, ic.p0, cfg, e.game, e.obj, e.geom, e.solver);
  const TtsaRecord b = run_ttsa(ic.x0, ic.p0, cfg, e.game, e.obj, e.geom, e.solver);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].x, b.samples[i].x);
    EXPECT_EQ(a.samples[i].p, b.samples[i].p);
  }
  EXPECT_EQ(a.samples.front().k, 0);
  EXPECT_EQ(a.samples.back().k, 200);
}

struct TrackingCase {
  std::string preset;
  RuleKind rule;
};

class FastTracking : public ::testing::TestWithParam<TrackingCase> {};

TEST_P(FastTracking, FeasibleAndTrackingShrinks) {
  const PresetEnv e = make_env(GetParam().preset, GetParam().preset == "oscillator-2" ? 0.95 : 0.8);
  const long max_iter = 10000;
  const TtsaConfig cfg = ttsa_config(e, GetParam().rule, max_iter);
  for (const InitialCondition& ic : sample(e, 3, 13)) {
    const TtsaRecord rec = run_ttsa(ic.x0, ic.p0, cfg, e.game, e.obj, e.geom, e.solver);
    double at_tenth = -1.0;
    for (const TtsaSample& s : rec.samples) {
      EXPECT_TRUE(e.game.space.contains(s.x));
      EXPECT_LE(s.V, e.geom.c * (1.0 + 1e-12));
      if (s.k == max_iter / 10) at_tenth = s.tracking_error;
    }
    EXPECT_TRUE(in_sublevel_set(rec.samples.back().p, e.geom, e.game, e.obj, e.solver));
    ASSERT_GE(at_tenth, 0.0);
    EXPECT_LT(rec.summary.final_tracking_error, at_tenth);
  }
}

INSTANTIATE_TEST_SUITE_P(Rules, FastTracking,
                         ::testing::Values(TrackingCase{"aggregative-5", RuleKind::NE},
                                           TrackingCase{"aggregative-5", RuleKind::BR},
                                           TrackingCase{"aggregative-5", RuleKind::PG},
                                           TrackingCase{"oscillator-2", RuleKind::NE},
                                           TrackingCase{"oscillator-2", RuleKind::PG}),
                         [](const auto& info) {
                           return std::string(info.param.preset == "aggregative-5" ? "Aggregative" : "Oscillator") +
                                  std::string(to_string(info.param.rule));
                         });

TEST(Diagnostics, AcceptedMassGrowsWithHorizon) {
  const PresetEnv e = make_env("aggregative-5", 0.8);
  const InitialCondition ic = sample(e, 1, 14)[0];
  double prev = 0.0;
  for (long n : {1000L, 10000L, 100000L}) {
    const TtsaRecord rec = run_ttsa(ic.x0, ic.p0, ttsa_config(e, RuleKind::BR, n), e.game, e.obj, e.geom, e.solver);
    const DiagnosticsSummary d = tracking_diagnostics(rec);
    EXPECT_GT(d.accepted_mass, prev);
    EXPECT_DOUBLE_EQ(d.accepted_mass, rec.summary.accepted_mass);
    prev = d.accepted_mass;
  }
}

TEST(Diagnostics, ViolatedTimescaleRunsWithoutCrash) {
  const PresetEnv e = make_env("aggregative-5", 0.8);
  TtsaConfig cfg = ttsa_config(e, RuleKind::BR, 5000);
  cfg.schedule.b_exp = 0.55;  // faster incentive than strategies
  EXPECT_THROW(run_ttsa(e.obj.x_dagger, e.geom.p_dagger, cfg, e.game, e.obj, e.geom, e.solver), ConfigError);
  cfg.enforce_schedule = false;
  const InitialCondition ic = sample(e, 1, 15)[0];
  TtsaRecord rec;
  ASSERT_NO_THROW(rec = run_ttsa(ic.x0, ic.p0, cfg, e.game, e.obj, e.geom, e.solver));
  const DiagnosticsSummary d = tracking_diagnostics(rec);
  EXPECT_TRUE(std::isfinite(d.tail_mean_tracking));
  EXPECT_TRUE(std::isfinite(d.tail_mean_incentive));
}
