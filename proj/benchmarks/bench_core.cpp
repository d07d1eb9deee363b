#include <benchmark/benchmark.h>

#include "socialgrad/experiment.hpp"

using namespace socialgrad;

namespace {

struct Env {
  ExperimentConfig cfg;
  ExperimentContext ctx;
  InitialCondition ic;
};

Env make_env(const std::string& preset) {
  ExperimentConfig cfg = default_experiment_config(ExperimentKind::Ttsa, preset);
  ExperimentContext ctx = build_context(cfg);
  ExperimentConfig one = cfg;
  one.num_initial_conditions = 1;
  InitialCondition ic = sample_initial_conditions(one, ctx.game, ctx.objective, ctx.geometry).front();
  return {std::move(cfg), std::move(ctx), std::move(ic)};
}

const Env& env(const std::string& preset) {
  static const Env agg = make_env("aggregative-5");
  static const Env osc = make_env("oscillator-2");
  return preset == "oscillator-2" ? osc : agg;
}

const char* preset_of(const benchmark::State& state) {
  return state.range(0) == 0 ? "aggregative-5" : "oscillator-2";
}

void BM_SolveResponse(benchmark::State& state) {
  const Env& e = env(preset_of(state));
  for (auto _ : state) benchmark::DoNotOptimize(solve_response(e.ctx.game, e.ic.p0, e.ctx.solver));
}
BENCHMARK(BM_SolveResponse)->Arg(0)->Arg(1);

void BM_Membership(benchmark::State& state) {
  const Env& e = env(preset_of(state));
  const auto& c = e.ctx;
  for (auto _ : state) benchmark::DoNotOptimize(in_sublevel_set(e.ic.p0, c.geometry, c.game, c.objective, c.solver));
}
BENCHMARK(BM_Membership)->Arg(0)->Arg(1);

void BM_TtsaStep(benchmark::State& state) {
  const Env& e = env(preset_of(state));
  const auto& c = e.ctx;
  TtsaConfig tc;
  tc.schedule = e.cfg.schedule;
  tc.rule = make_learning_rule(e.cfg.rules.front(), c.game, e.cfg.pg_eta);
  tc.c_fraction = e.cfg.c_fraction;
  const Strategy xs = solve_response(c.game, e.ic.p0, c.solver).x_star;
  const TtsaState s{e.ic.x0, e.ic.p0, 1000};
  for (auto _ : state) benchmark::DoNotOptimize(ttsa_step(s, tc, c.game, c.objective, c.geometry, c.solver, xs));
}
BENCHMARK(BM_TtsaStep)->Arg(0)->Arg(1);

void BM_FlowUnitTime(benchmark::State& state) {
  const Env& e = env(preset_of(state));
  const auto& c = e.ctx;
  FlowConfig fc = c.flow;
  fc.horizon_T = 1.0;
  fc.record_every = 1000000;
  fc.stop_tol = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrate_social_gradient_flow(e.ic.p0, fc, c.game, c.objective, c.geometry, c.solver));
  }
}
BENCHMARK(BM_FlowUnitTime)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
