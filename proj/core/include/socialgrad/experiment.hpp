#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socialgrad/games.hpp"
#include "socialgrad/planner.hpp"
#include "socialgrad/ttsa.hpp"

namespace socialgrad {

enum class ExperimentKind { Flow, Ttsa, Sweep, Verify };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view s);

// Optional overrides of the preset game. Only the fields of the preset's
// family are read.
struct GameOverrides {
  std::optional<std::uint64_t> aggregative_seed;
  std::optional<int> aggregative_n;
  std::optional<double> aggregative_a;
  std::optional<Vector> aggregative_q;
  std::optional<Matrix> aggregative_W;
  std::optional<double> theta1;
  std::optional<double> theta2;
  bool allow_grid_certification = false;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Ttsa;
  std::string preset = "aggregative-5";
  GameOverrides game;
  Vector x_dagger;  // empty = preset default
  std::string objective_form = "centered-quadratic";

  int num_initial_conditions = 100;
  double c_fraction = 0.8;
  // Fixed (x0, p0) replaces sampling when both are set.
  std::optional<Vector> x0;
  std::optional<Vector> p0;

  StepSchedule schedule;
  std::vector<RuleKind> rules{RuleKind::NE, RuleKind::BR};
  double pg_eta = 0.0;  // 0 = 0.9 m / L^2
  long max_iter = 100000;
  int record_every = 100;
  bool write_runs = true;

  // Solver: unset method / step_eta fall back to default_solver_config().
  std::optional<ResponseMethod> solver_method;
  double solver_tol = 1e-10;
  long solver_max_iter = 1'000'000;
  double solver_step_eta = 0.0;

  Integrator integrator = Integrator::Rk4;
  double flow_dt = 0.0;  // 0 = 1e-2 * m / 2
  double flow_horizon = 100.0;
  int flow_record_every = 100;
  double flow_stop_tol = 1e-8;
  double flow_target_dist = 1e-4;

  std::vector<double> sweep_gammas{0.1, 0.2, 0.3, 0.4};

  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  int jobs = 1;
};

// Preset defaults for the given experiment ("aggregative-5" or
// "oscillator-2").
ExperimentConfig default_experiment_config(ExperimentKind kind, const std::string& preset);

// Default social optimum for a preset. For "oscillator-2" this is (s, s)
// with s chosen so that p0 = (-3, -3) sits on the 0.62 c* sublevel set.
Vector preset_x_dagger(const std::string& preset);

// Overlays JSON keys onto cfg. Throws ConfigError on unknown keys or bad
// values.
void apply_json(ExperimentConfig& cfg, const nlohmann::json& j);

// Preset defaults for `kind`, overlaid with the config file when given. The
// preset comes from preset_override, else the file's "preset" key, else
// "aggregative-5". A file "experiment" key must agree with kind.
ExperimentConfig resolve_experiment_config(ExperimentKind kind, const std::optional<std::filesystem::path>& path,
                                           const std::optional<std::string>& preset_override);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Throws ConfigError.
void validate(const ExperimentConfig& cfg);

struct ExperimentContext {
  GameModel game;
  SocialObjective objective;
  ResponseSolverConfig solver;
  SublevelGeometry geometry;
  FlowConfig flow;
};

GameModel build_game(const ExperimentConfig& cfg);
ExperimentContext build_context(const ExperimentConfig& cfg);

struct InitialCondition {
  Strategy x0;
  Incentive p0;
  Strategy x_bar;  // x*(p0) by construction
};

// Run i draws from Rng::stream(seed, i): x_bar uniform in the sublevel
// region {x in int X : Phi(x) - Phi(x_dagger) <= c} by rejection, p0 =
// -g0(x_bar), then x0 uniform in X. Throws ConfigError when the rejection
// acceptance rate drops below 1e-4.
std::vector<InitialCondition> sample_initial_conditions(const ExperimentConfig& cfg, const GameModel& game,
                                                        const SocialObjective& obj,
                                                        const SublevelGeometry& geom);

// Runs fn(i) for i in [0, count) on `jobs` worker threads.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

struct FlowRunOutcome {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  double initial_V = 0.0;
  double final_dist = 0.0;
  double final_time = 0.0;
  bool V_nonincreasing = false;
  bool stayed_in_Pc = false;
  bool converged = false;  // final_dist <= flow_target_dist
  FlowRecord record;
};

struct FlowBatchResult {
  std::vector<FlowRunOutcome> runs;
  std::size_t max_initial_V_run = 0;
  std::size_t min_initial_V_run = 0;
  double max_final_dist = 0.0;
  double median_final_dist = 0.0;
  double max_final_time = 0.0;
  std::size_t failures = 0;
};

// Writes flow_run_<i>.csv per run and flow_summary.{csv,json} when
// output_dir is nonempty.
FlowBatchResult run_flow_batch(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                               const std::filesystem::path& output_dir);

struct EnvelopePoint {
  long k = 0;
  double track_median = 0.0, track_min = 0.0, track_max = 0.0;
  double inc_median = 0.0, inc_min = 0.0, inc_max = 0.0;
};

struct TtsaRuleBatch {
  RuleKind rule = RuleKind::NE;
  std::vector<TtsaRecord> runs;
  std::vector<std::string> errors;  // per run, empty when fine
  std::vector<EnvelopePoint> envelope;
  std::size_t failures = 0;
};

struct TtsaBatchResult {
  std::vector<TtsaRuleBatch> batches;
  std::size_t failures = 0;
};

// Per-k median/min/max across runs of tracking and incentive error.
std::vector<EnvelopePoint> compute_envelope(const std::vector<TtsaRecord>& runs);

// Writes ttsa_<rule>_envelope.csv, per-run CSVs (when write_runs) and
// ttsa_summary.json when output_dir is nonempty.
TtsaBatchResult run_ttsa_batch(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                               const std::filesystem::path& output_dir);

struct SweepRow {
  double gamma = 0.0;
  double b_exp = 0.0;
  bool skipped = false;
  std::string reason;
  double final_tracking_median = 0.0;
  double final_incentive_median = 0.0;
  double tail_acceptance_min = 0.0;
};

// b_exp = a_exp + gamma per row, same initial conditions for every row.
// Writes sweep.csv when output_dir is nonempty.
std::vector<SweepRow> run_timescale_sweep(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                                          const std::filesystem::path& output_dir);

struct VerifyCheck {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string note;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_passed() const;
};

// Builds the game itself so construction failures become report entries.
// Writes verify.{csv,json} when output_dir is nonempty.
VerifyReport run_verify(const ExperimentConfig& cfg, const std::filesystem::path& output_dir);

// Partial-sum checks of the step schedules over `terms` terms.
std::vector<VerifyCheck> check_schedule_laws(const StepSchedule& s, long terms);

}  // namespace socialgrad
