// Command-line driver: flow, ttsa, sweep and verify experiments.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "socialgrad/experiment.hpp"
#include "socialgrad/io.hpp"

namespace sg = socialgrad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailures = 1;
constexpr int kExitConfig = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
  std::optional<int> jobs;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--preset", o.preset, "Game preset: aggregative-5 or oscillator-2");
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

sg::ExperimentConfig resolve(sg::ExperimentKind kind, const Options& o) {
  std::optional<std::filesystem::path> path;
  if (!o.config.empty()) path = o.config;
  std::optional<std::string> preset;
  if (!o.preset.empty()) preset = o.preset;
  sg::ExperimentConfig cfg = sg::resolve_experiment_config(kind, path, preset);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.jobs) cfg.jobs = *o.jobs;
  sg::validate(cfg);
  return cfg;
}

int run_flow(const sg::ExperimentConfig& cfg) {
  const auto ctx = sg::build_context(cfg);
  const auto res = sg::run_flow_batch(cfg, ctx, cfg.output_dir);
  std::printf("flow: %zu runs, %zu failed, max ||p(T)-p_dagger|| = %.3e, median %.3e, T_max = %.4g\n",
              res.runs.size(), res.failures, res.max_final_dist, res.median_final_dist, res.max_final_time);
  std::printf("flow: largest initial V in run %zu, smallest in run %zu\n", res.max_initial_V_run,
              res.min_initial_V_run);
  for (const auto& r : res.runs) {
    if (!r.error.empty()) std::printf("  run %zu: %s\n", r.index, r.error.c_str());
  }
  return res.failures == 0 ? kExitOk : kExitFailures;
}

int run_ttsa(const sg::ExperimentConfig& cfg) {
  const auto ctx = sg::build_context(cfg);
  const auto res = sg::run_ttsa_batch(cfg, ctx, cfg.output_dir);
  for (const auto& b : res.batches) {
    const auto& last = b.envelope.empty() ? sg::EnvelopePoint{} : b.envelope.back();
    std::printf("ttsa %s: %zu runs, %zu failed, k=%ld median tracking %.3e, median incentive %.3e\n",
                std::string(sg::to_string(b.rule)).c_str(), b.runs.size(), b.failures, last.k, last.track_median,
                last.inc_median);
    for (std::size_t i = 0; i < b.errors.size(); ++i) {
      if (!b.errors[i].empty()) std::printf("  run %zu: %s\n", i, b.errors[i].c_str());
    }
  }
  return res.failures == 0 ? kExitOk : kExitFailures;
}

int run_sweep(const sg::ExperimentConfig& cfg) {
  const auto ctx = sg::build_context(cfg);
  const auto rows = sg::run_timescale_sweep(cfg, ctx, cfg.output_dir);
  bool failed = false;
  std::printf("%8s %8s %14s %14s %10s\n", "gamma", "b_exp", "tracking", "incentive", "tail_acc");
  for (const auto& r : rows) {
    if (r.skipped) {
      std::printf("%8.3g %8.3g skipped: %s\n", r.gamma, r.b_exp, r.reason.c_str());
      continue;
    }
    failed = failed || !r.reason.empty();
    std::printf("%8.3g %8.3g %14.6e %14.6e %10.4f\n", r.gamma, r.b_exp, r.final_tracking_median,
                r.final_incentive_median, r.tail_acceptance_min);
  }
  return failed ? kExitFailures : kExitOk;
}

int run_verify(const sg::ExperimentConfig& cfg) {
  const auto rep = sg::run_verify(cfg, cfg.output_dir);
  for (const auto& c : rep.checks) {
    const char* status = c.skipped ? "SKIP" : (c.pass ? "PASS" : "FAIL");
    std::printf("%-4s %-32s measured=%-14.6g bound=%-14.6g %s\n", status, c.name.c_str(), c.measured, c.bound,
                c.note.c_str());
  }
  return rep.all_passed() ? kExitOk : kExitFailures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incentive design for strongly monotone games by social-gradient flow"};
  app.require_subcommand(1);
  Options opts;
  CLI::App* flow = app.add_subcommand("flow", "Social-gradient flow from sampled incentives");
  CLI::App* ttsa = app.add_subcommand("ttsa", "Two-timescale learning + incentive updates");
  CLI::App* sweep = app.add_subcommand("sweep", "Timescale-separation sweep over gamma");
  CLI::App* verify = app.add_subcommand("verify", "Certificate and invariant checks");
  for (CLI::App* c : {flow, ttsa, sweep, verify}) add_common(c, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  sg::ExperimentKind kind = sg::ExperimentKind::Verify;
  if (flow->parsed()) kind = sg::ExperimentKind::Flow;
  if (ttsa->parsed()) kind = sg::ExperimentKind::Ttsa;
  if (sweep->parsed()) kind = sg::ExperimentKind::Sweep;

  sg::ExperimentConfig cfg;
  try {
    cfg = resolve(kind, opts);
    sg::write_text_file(cfg.output_dir / "config.resolved.json", sg::to_json(cfg).dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    switch (kind) {
      case sg::ExperimentKind::Flow: return run_flow(cfg);
      case sg::ExperimentKind::Ttsa: return run_ttsa(cfg);
      case sg::ExperimentKind::Sweep: return run_sweep(cfg);
      case sg::ExperimentKind::Verify: return run_verify(cfg);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailures;
  }
  return kExitOk;
}
