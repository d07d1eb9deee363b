#include "socialgrad/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "socialgrad/io.hpp"
#include "socialgrad/rng.hpp"

namespace socialgrad {

namespace {

constexpr double kOscillatorDaggerCoord = 0.5074528974345841;

Vector json_vector(const nlohmann::json& j, const char* key) {
  if (!j.is_array()) throw ConfigError(std::string(key) + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(key) + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Matrix json_matrix(const nlohmann::json& j, const char* key) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(key) + " must be a nonempty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(std::string(key) + " rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(std::string(key) + " entries must be numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

nlohmann::json vector_json(const Vector& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json matrix_json(const Matrix& m) {
  auto a = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError("unknown config key '" + where + item.key() + "'");
  }
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

std::string run_name(const std::string& prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return prefix + buf;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

TtsaConfig make_ttsa_config(const ExperimentConfig& cfg, const LearningRule& rule, const StepSchedule& sched) {
  TtsaConfig t;
  t.schedule = sched;
  t.rule = rule;
  t.c_fraction = cfg.c_fraction;
  t.max_iter = cfg.max_iter;
  t.record_every = cfg.record_every;
  t.seed = cfg.seed;
  return t;
}

struct RunSet {
  std::vector<TtsaRecord> runs;
  std::vector<std::string> errors;
  std::size_t failures = 0;
};

RunSet run_ttsa_set(const std::vector<InitialCondition>& ics, const TtsaConfig& tcfg, const ExperimentContext& ctx,
                    int jobs) {
  RunSet set;
  set.runs.resize(ics.size());
  set.errors.resize(ics.size());
  parallel_for(ics.size(), jobs, [&](std::size_t i) {
    try {
      set.runs[i] = run_ttsa(ics[i].x0, ics[i].p0, tcfg, ctx.game, ctx.objective, ctx.geometry, ctx.solver);
    } catch (const std::runtime_error& e) {
      set.errors[i] = e.what();
    }
  });
  for (const auto& e : set.errors) set.failures += e.empty() ? 0 : 1;
  return set;
}

void write_ttsa_run(const std::filesystem::path& dir, const std::string& stem, const TtsaRecord& rec,
                    const TtsaConfig& tcfg) {
  std::ostringstream csv;
  write_ttsa_csv(csv, rec);
  write_text_file(dir / (stem + ".csv"), csv.str());
  write_text_file(dir / (stem + ".json"), ttsa_to_json(rec, tcfg).dump(1) + "\n");
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Flow: return "flow";
    case ExperimentKind::Ttsa: return "ttsa";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Verify: return "verify";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
  if (s == "flow") return ExperimentKind::Flow;
  if (s == "ttsa") return ExperimentKind::Ttsa;
  if (s == "sweep") return ExperimentKind::Sweep;
  if (s == "verify") return ExperimentKind::Verify;
  throw ConfigError("unknown experiment '" + std::string(s) + "'");
}

Vector preset_x_dagger(const std::string& preset) {
  if (preset == "aggregative-5") {
    Vector x(5);
    x << 0.4, -0.3, 0.2, -0.1, 0.0;
    return x;
  }
  if (preset == "oscillator-2") return Vector::Constant(2, kOscillatorDaggerCoord);
  throw ConfigError("unknown preset '" + preset + "'");
}

ExperimentConfig default_experiment_config(ExperimentKind kind, const std::string& preset) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  cfg.preset = preset;
  cfg.x_dagger = preset_x_dagger(preset);
  const bool osc = preset == "oscillator-2";
  if (osc) {
    cfg.rules = {RuleKind::PG};
    cfg.c_fraction = 0.95;
  }
  switch (kind) {
    case ExperimentKind::Flow:
      cfg.c_fraction = 0.99;
      break;
    case ExperimentKind::Ttsa:
    case ExperimentKind::Sweep:
      if (osc) {
        cfg.num_initial_conditions = 1;
        cfg.x0 = Vector{{0.0, -0.5}};
        cfg.p0 = Vector{{-3.0, -3.0}};
      }
      break;
    case ExperimentKind::Verify:
      break;
  }
  return cfg;
}

void apply_json(ExperimentConfig& cfg, const nlohmann::json& j) {
  check_keys(j,
             {"experiment", "preset", "game", "objective", "num_initial_conditions", "c_fraction",
              "initial_condition", "schedule", "rules", "pg_eta", "max_iter", "record_every", "write_runs", "solver",
              "flow", "sweep", "seed", "output_dir", "jobs"},
             "");
  if (j.contains("experiment")) cfg.experiment = parse_experiment_kind(get_as<std::string>(j["experiment"], "experiment"));
  if (j.contains("preset")) cfg.preset = get_as<std::string>(j["preset"], "preset");
  if (j.contains("game")) {
    const auto& g = j["game"];
    check_keys(g, {"seed", "n", "a", "q", "W", "theta1", "theta2", "allow_grid_certification"}, "game.");
    if (g.contains("seed")) cfg.game.aggregative_seed = get_as<std::uint64_t>(g["seed"], "game.seed");
    if (g.contains("n")) cfg.game.aggregative_n = get_as<int>(g["n"], "game.n");
    if (g.contains("a")) cfg.game.aggregative_a = get_as<double>(g["a"], "game.a");
    if (g.contains("q")) cfg.game.aggregative_q = json_vector(g["q"], "game.q");
    if (g.contains("W")) cfg.game.aggregative_W = json_matrix(g["W"], "game.W");
    if (g.contains("theta1")) cfg.game.theta1 = get_as<double>(g["theta1"], "game.theta1");
    if (g.contains("theta2")) cfg.game.theta2 = get_as<double>(g["theta2"], "game.theta2");
    if (g.contains("allow_grid_certification")) {
      cfg.game.allow_grid_certification = get_as<bool>(g["allow_grid_certification"], "game.allow_grid_certification");
    }
  }
  if (j.contains("objective")) {
    const auto& o = j["objective"];
    check_keys(o, {"form", "x_dagger"}, "objective.");
    if (o.contains("form")) cfg.objective_form = get_as<std::string>(o["form"], "objective.form");
    if (o.contains("x_dagger")) cfg.x_dagger = json_vector(o["x_dagger"], "objective.x_dagger");
  }
  if (j.contains("num_initial_conditions")) {
    cfg.num_initial_conditions = get_as<int>(j["num_initial_conditions"], "num_initial_conditions");
  }
  if (j.contains("c_fraction")) cfg.c_fraction = get_as<double>(j["c_fraction"], "c_fraction");
  if (j.contains("initial_condition")) {
    const auto& ic = j["initial_condition"];
    if (ic.is_null()) {
      cfg.x0.reset();
      cfg.p0.reset();
    } else {
      check_keys(ic, {"x0", "p0"}, "initial_condition.");
      if (!ic.contains("x0") || !ic.contains("p0")) throw ConfigError("initial_condition needs both x0 and p0");
      cfg.x0 = json_vector(ic["x0"], "initial_condition.x0");
      cfg.p0 = json_vector(ic["p0"], "initial_condition.p0");
    }
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    check_keys(s, {"a0", "a_exp", "b0", "b_exp", "offset"}, "schedule.");
    if (s.contains("a0")) cfg.schedule.a0 = get_as<double>(s["a0"], "schedule.a0");
    if (s.contains("a_exp")) cfg.schedule.a_exp = get_as<double>(s["a_exp"], "schedule.a_exp");
    if (s.contains("b0")) cfg.schedule.b0 = get_as<double>(s["b0"], "schedule.b0");
    if (s.contains("b_exp")) cfg.schedule.b_exp = get_as<double>(s["b_exp"], "schedule.b_exp");
    if (s.contains("offset")) cfg.schedule.offset = get_as<long>(s["offset"], "schedule.offset");
  }
  if (j.contains("rules")) {
    if (!j["rules"].is_array()) throw ConfigError("rules must be an array of rule names");
    cfg.rules.clear();
    for (const auto& r : j["rules"]) cfg.rules.push_back(parse_rule_kind(get_as<std::string>(r, "rules")));
  }
  if (j.contains("pg_eta")) cfg.pg_eta = get_as<double>(j["pg_eta"], "pg_eta");
  if (j.contains("max_iter")) cfg.max_iter = get_as<long>(j["max_iter"], "max_iter");
  if (j.contains("record_every")) cfg.record_every = get_as<int>(j["record_every"], "record_every");
  if (j.contains("write_runs")) cfg.write_runs = get_as<bool>(j["write_runs"], "write_runs");
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, {"method", "tol", "max_iter", "step_eta"}, "solver.");
    if (s.contains("method")) cfg.solver_method = parse_response_method(get_as<std::string>(s["method"], "solver.method"));
    if (s.contains("tol")) cfg.solver_tol = get_as<double>(s["tol"], "solver.tol");
    if (s.contains("max_iter")) cfg.solver_max_iter = get_as<long>(s["max_iter"], "solver.max_iter");
    if (s.contains("step_eta")) cfg.solver_step_eta = get_as<double>(s["step_eta"], "solver.step_eta");
  }
  if (j.contains("flow")) {
    const auto& f = j["flow"];
    check_keys(f, {"integrator", "dt", "horizon_T", "record_every", "stop_tol", "target_dist"}, "flow.");
    if (f.contains("integrator")) cfg.integrator = parse_integrator(get_as<std::string>(f["integrator"], "flow.integrator"));
    if (f.contains("dt")) cfg.flow_dt = get_as<double>(f["dt"], "flow.dt");
    if (f.contains("horizon_T")) cfg.flow_horizon = get_as<double>(f["horizon_T"], "flow.horizon_T");
    if (f.contains("record_every")) cfg.flow_record_every = get_as<int>(f["record_every"], "flow.record_every");
    if (f.contains("stop_tol")) cfg.flow_stop_tol = get_as<double>(f["stop_tol"], "flow.stop_tol");
    if (f.contains("target_dist")) cfg.flow_target_dist = get_as<double>(f["target_dist"], "flow.target_dist");
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    check_keys(s, {"gammas"}, "sweep.");
    if (s.contains("gammas")) {
      const Vector g = json_vector(s["gammas"], "sweep.gammas");
      cfg.sweep_gammas.assign(g.data(), g.data() + g.size());
    }
  }
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("output_dir")) cfg.output_dir = get_as<std::string>(j["output_dir"], "output_dir");
  if (j.contains("jobs")) cfg.jobs = get_as<int>(j["jobs"], "jobs");
}

ExperimentConfig resolve_experiment_config(ExperimentKind kind, const std::optional<std::filesystem::path>& path,
                                           const std::optional<std::string>& preset_override) {
  nlohmann::json j = nlohmann::json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot read config file " + path->string());
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError("config file " + path->string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  }
  if (j.contains("experiment") && parse_experiment_kind(get_as<std::string>(j["experiment"], "experiment")) != kind) {
    throw ConfigError("config file is for experiment '" + j["experiment"].get<std::string>() +
                      "', not '" + std::string(to_string(kind)) + "'");
  }
  std::string preset = "aggregative-5";
  if (preset_override) {
    preset = *preset_override;
  } else if (j.contains("preset")) {
    preset = get_as<std::string>(j["preset"], "preset");
  }
  ExperimentConfig cfg = default_experiment_config(kind, preset);
  apply_json(cfg, j);
  cfg.preset = preset;
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json game = nlohmann::json::object();
  if (cfg.game.aggregative_seed) game["seed"] = *cfg.game.aggregative_seed;
  if (cfg.game.aggregative_n) game["n"] = *cfg.game.aggregative_n;
  if (cfg.game.aggregative_a) game["a"] = *cfg.game.aggregative_a;
  if (cfg.game.aggregative_q) game["q"] = vector_json(*cfg.game.aggregative_q);
  if (cfg.game.aggregative_W) game["W"] = matrix_json(*cfg.game.aggregative_W);
  if (cfg.game.theta1) game["theta1"] = *cfg.game.theta1;
  if (cfg.game.theta2) game["theta2"] = *cfg.game.theta2;
  game["allow_grid_certification"] = cfg.game.allow_grid_certification;

  nlohmann::json j;
  j["experiment"] = std::string(to_string(cfg.experiment));
  j["preset"] = cfg.preset;
  j["game"] = game;
  j["objective"] = {{"form", cfg.objective_form}, {"x_dagger", vector_json(cfg.x_dagger)}};
  j["num_initial_conditions"] = cfg.num_initial_conditions;
  j["c_fraction"] = cfg.c_fraction;
  if (cfg.x0 && cfg.p0) {
    j["initial_condition"] = {{"x0", vector_json(*cfg.x0)}, {"p0", vector_json(*cfg.p0)}};
  } else {
    j["initial_condition"] = nullptr;
  }
  j["schedule"] = {{"a0", cfg.schedule.a0},
                   {"a_exp", cfg.schedule.a_exp},
                   {"b0", cfg.schedule.b0},
                   {"b_exp", cfg.schedule.b_exp},
                   {"offset", cfg.schedule.offset}};
  auto rules = nlohmann::json::array();
  for (RuleKind r : cfg.rules) rules.push_back(std::string(to_string(r)));
  j["rules"] = rules;
  j["pg_eta"] = cfg.pg_eta;
  j["max_iter"] = cfg.max_iter;
  j["record_every"] = cfg.record_every;
  j["write_runs"] = cfg.write_runs;
  nlohmann::json solver = {{"tol", cfg.solver_tol}, {"max_iter", cfg.solver_max_iter}, {"step_eta", cfg.solver_step_eta}};
  if (cfg.solver_method) solver["method"] = std::string(to_string(*cfg.solver_method));
  j["solver"] = solver;
  j["flow"] = {{"integrator", std::string(to_string(cfg.integrator))},
               {"dt", cfg.flow_dt},
               {"horizon_T", cfg.flow_horizon},
               {"record_every", cfg.flow_record_every},
               {"stop_tol", cfg.flow_stop_tol},
               {"target_dist", cfg.flow_target_dist}};
  j["sweep"] = {{"gammas", cfg.sweep_gammas}};
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  j["jobs"] = cfg.jobs;
  return j;
}

void validate(const ExperimentConfig& cfg) {
  preset_x_dagger(cfg.preset);
  if (cfg.objective_form != "centered-quadratic") {
    throw ConfigError("unsupported objective form '" + cfg.objective_form + "'");
  }
  if (cfg.num_initial_conditions < 1) throw ConfigError("num_initial_conditions must be positive");
  if (!(cfg.c_fraction > 0.0 && cfg.c_fraction < 1.0)) throw ConfigError("c_fraction must lie in (0, 1)");
  if (cfg.x0.has_value() != cfg.p0.has_value()) throw ConfigError("initial_condition needs both x0 and p0");
  if (cfg.rules.empty()) throw ConfigError("rules must name at least one learning rule");
  if (cfg.pg_eta < 0.0) throw ConfigError("pg_eta must be nonnegative");
  if (cfg.max_iter < 1) throw ConfigError("max_iter must be positive");
  if (cfg.record_every < 1) throw ConfigError("record_every must be positive");
  if (cfg.jobs < 1) throw ConfigError("jobs must be positive");
  if (cfg.flow_target_dist <= 0.0) throw ConfigError("flow.target_dist must be positive");
  if (cfg.experiment != ExperimentKind::Sweep) validate(cfg.schedule);
  if (cfg.experiment == ExperimentKind::Sweep && cfg.sweep_gammas.empty()) {
    throw ConfigError("sweep.gammas must not be empty");
  }
}

namespace {

AggregativeGameSpec aggregative_spec_for(const ExperimentConfig& cfg) {
  const GameOverrides& o = cfg.game;
  AggregativeGameSpec spec =
      default_aggregative_spec(o.aggregative_seed.value_or(kAggregativeDefaultSeed), o.aggregative_n.value_or(5));
  if (o.aggregative_q) spec.q = *o.aggregative_q;
  if (o.aggregative_W) spec.W = *o.aggregative_W;
  if (o.aggregative_a) spec.a = *o.aggregative_a;
  if (spec.q.size() != spec.box.dim()) spec.box = BoxSpace::cube(spec.q.size(), -2.0, 2.0);
  if (spec.W.rows() != spec.q.size() || spec.W.cols() != spec.q.size()) {
    throw ConfigError("game.W must be square with the dimension of game.q");
  }
  return spec;
}

OscillatorGameSpec oscillator_spec_for(const ExperimentConfig& cfg) {
  OscillatorGameSpec spec;
  if (cfg.game.theta1) spec.theta1 = *cfg.game.theta1;
  if (cfg.game.theta2) spec.theta2 = *cfg.game.theta2;
  spec.allow_grid_certification = cfg.game.allow_grid_certification;
  return spec;
}

}  // namespace

GameModel build_game(const ExperimentConfig& cfg) {
  auto build = [&] {
    if (cfg.preset == "aggregative-5") return build_aggregative(aggregative_spec_for(cfg));
    if (cfg.preset == "oscillator-2") return build_oscillator(oscillator_spec_for(cfg));
    throw ConfigError("unknown preset '" + cfg.preset + "'");
  };
  GameModel g = build();
  g.name = cfg.preset;
  return g;
}

namespace {

ExperimentContext context_for_game(const ExperimentConfig& cfg, GameModel game) {
  const Vector xd = cfg.x_dagger.size() == 0 ? preset_x_dagger(cfg.preset) : cfg.x_dagger;
  if (xd.size() != game.dim()) throw ConfigError("objective.x_dagger has the wrong dimension for the game");
  SocialObjective obj = quadratic_objective(xd);
  try {
    validate(obj, game.space);
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string("objective rejected: ") + e.what());
  }
  ResponseSolverConfig solver = default_solver_config(game);
  if (cfg.solver_method) solver.method = *cfg.solver_method;
  solver.tol = cfg.solver_tol;
  solver.max_iter = cfg.solver_max_iter;
  if (cfg.solver_step_eta > 0.0) solver.step_eta = cfg.solver_step_eta;
  validate(solver, game);

  SublevelGeometry geom = make_geometry(game, obj, cfg.c_fraction, solver, 0);

  FlowConfig flow = default_flow_config(game);
  flow.integrator = cfg.integrator;
  if (cfg.flow_dt > 0.0) flow.dt = cfg.flow_dt;
  flow.horizon_T = cfg.flow_horizon;
  flow.record_every = cfg.flow_record_every;
  flow.stop_tol = cfg.flow_stop_tol;
  validate(flow);
  return ExperimentContext{std::move(game), std::move(obj), solver, std::move(geom), flow};
}

}  // namespace

ExperimentContext build_context(const ExperimentConfig& cfg) { return context_for_game(cfg, build_game(cfg)); }

std::vector<InitialCondition> sample_initial_conditions(const ExperimentConfig& cfg, const GameModel& game,
                                                        const SocialObjective& obj,
                                                        const SublevelGeometry& geom) {
  const Eigen::Index n = game.dim();
  if (cfg.x0 && cfg.p0) {
    require_dim(*cfg.x0, n, "initial_condition.x0");
    require_dim(*cfg.p0, n, "initial_condition.p0");
    InitialCondition ic{*cfg.x0, *cfg.p0, Strategy()};
    return {ic};
  }
  const BoxSpace& box = game.space;
  const double margin = interior_margin(box);
  const double phi_dagger = obj.phi(obj.x_dagger);
  // Keep a sliver below c so the solved response lands inside P_c despite
  // solver tolerance.
  const double level = geom.c * (1.0 - 1e-9);
  constexpr long kMaxAttemptsPerHit = 10'000;  // acceptance rate 1e-4

  std::vector<InitialCondition> out;
  out.reserve(static_cast<std::size_t>(cfg.num_initial_conditions));
  for (int i = 0; i < cfg.num_initial_conditions; ++i) {
    Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(i));
    Strategy xb(n);
    long attempts = 0;
    for (;;) {
      if (attempts++ >= kMaxAttemptsPerHit) {
        throw ConfigError("initial-condition sampler: acceptance rate below 1e-4; the sublevel region is too small");
      }
      for (Eigen::Index d = 0; d < n; ++d) xb[d] = rng.uniform(box.lower()[d], box.upper()[d]);
      if (boundary_distance(xb, box) < margin) continue;
      if (obj.phi(xb) - phi_dagger <= level) break;
    }
    InitialCondition ic;
    ic.x_bar = xb;
    ic.p0 = -game.g0(xb);
    ic.x0.resize(n);
    for (Eigen::Index d = 0; d < n; ++d) ic.x0[d] = rng.uniform(box.lower()[d], box.upper()[d]);
    out.push_back(std::move(ic));
  }
  return out;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

FlowBatchResult run_flow_batch(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                               const std::filesystem::path& output_dir) {
  const auto ics = sample_initial_conditions(cfg, ctx.game, ctx.objective, ctx.geometry);
  const double phi_dagger = ctx.objective.phi(ctx.objective.x_dagger);
  const double margin = interior_margin(ctx.game.space);

  FlowBatchResult res;
  res.runs.resize(ics.size());
  parallel_for(ics.size(), cfg.jobs, [&](std::size_t i) {
    FlowRunOutcome& run = res.runs[i];
    run.index = i;
    const ResponseResult r0 = solve_response(ctx.game, ics[i].p0, ctx.solver);
    run.initial_V = ctx.objective.phi(r0.x_star) - phi_dagger;
    try {
      run.record = integrate_social_gradient_flow(ics[i].p0, ctx.flow, ctx.game, ctx.objective, ctx.geometry,
                                                  ctx.solver);
    } catch (const std::exception& e) {
      run.error = e.what();
      return;
    }
    run.ok = true;
    const auto& s = run.record.samples;
    run.V_nonincreasing = true;
    run.stayed_in_Pc = true;
    for (std::size_t k = 0; k < s.size(); ++k) {
      if (k > 0 && s[k].V > s[k - 1].V + 1e-9) run.V_nonincreasing = false;
      if (s[k].V > ctx.geometry.c || boundary_distance(s[k].x_star, ctx.game.space) < margin) {
        run.stayed_in_Pc = false;
      }
    }
    run.final_dist = s.back().dist_to_pdagger;
    run.final_time = run.record.final_time;
    run.converged = run.final_dist <= cfg.flow_target_dist;
  });

  std::vector<double> dists;
  for (const auto& run : res.runs) {
    if (!(run.ok && run.V_nonincreasing && run.stayed_in_Pc && run.converged)) ++res.failures;
    if (run.initial_V > res.runs[res.max_initial_V_run].initial_V) res.max_initial_V_run = run.index;
    if (run.initial_V < res.runs[res.min_initial_V_run].initial_V) res.min_initial_V_run = run.index;
    if (!run.ok) continue;
    dists.push_back(run.final_dist);
    res.max_final_dist = std::max(res.max_final_dist, run.final_dist);
    res.max_final_time = std::max(res.max_final_time, run.final_time);
  }
  res.median_final_dist = median_of(dists);

  if (output_dir.empty()) return res;
  std::ostringstream summary;
  summary << "run,initial_V,final_dist,final_time,V_nonincreasing,stayed_in_Pc,converged,error\n";
  auto runs_json = nlohmann::json::array();
  for (const auto& run : res.runs) {
    if (run.ok) {
      std::ostringstream csv;
      write_flow_csv(csv, run.record);
      write_text_file(output_dir / (run_name("flow_run_", run.index) + ".csv"), csv.str());
      write_text_file(output_dir / (run_name("flow_run_", run.index) + ".json"), flow_to_json(run.record).dump(1) + "\n");
    }
    summary << run.index << ',' << format_double(run.initial_V) << ',' << format_double(run.final_dist) << ','
            << format_double(run.final_time) << ',' << run.V_nonincreasing << ',' << run.stayed_in_Pc << ','
            << run.converged << ',' << csv_quote(run.error) << '\n';
    runs_json.push_back({{"run", run.index},
                         {"initial_V", run.initial_V},
                         {"final_dist", run.final_dist},
                         {"final_time", run.final_time},
                         {"V_nonincreasing", run.V_nonincreasing},
                         {"stayed_in_Pc", run.stayed_in_Pc},
                         {"converged", run.converged},
                         {"error", run.error}});
  }
  write_text_file(output_dir / "flow_summary.csv", summary.str());
  nlohmann::json j = {{"c_star", ctx.geometry.c_star},
                      {"c", ctx.geometry.c},
                      {"p_dagger", vector_json(ctx.geometry.p_dagger)},
                      {"max_initial_V_run", res.max_initial_V_run},
                      {"min_initial_V_run", res.min_initial_V_run},
                      {"max_final_dist", res.max_final_dist},
                      {"median_final_dist", res.median_final_dist},
                      {"max_final_time", res.max_final_time},
                      {"failures", res.failures},
                      {"runs", runs_json}};
  write_text_file(output_dir / "flow_summary.json", j.dump(1) + "\n");
  return res;
}

std::vector<EnvelopePoint> compute_envelope(const std::vector<TtsaRecord>& runs) {
  std::vector<EnvelopePoint> env;
  const TtsaRecord* ref = nullptr;
  for (const auto& r : runs) {
    if (!r.samples.empty()) {
      ref = &r;
      break;
    }
  }
  if (!ref) return env;
  for (std::size_t j = 0; j < ref->samples.size(); ++j) {
    const long k = ref->samples[j].k;
    std::vector<double> tr, in;
    for (const auto& r : runs) {
      if (j < r.samples.size() && r.samples[j].k == k) {
        tr.push_back(r.samples[j].tracking_error);
        in.push_back(r.samples[j].incentive_error);
      }
    }
    EnvelopePoint e;
    e.k = k;
    e.track_median = median_of(tr);
    e.track_min = *std::min_element(tr.begin(), tr.end());
    e.track_max = *std::max_element(tr.begin(), tr.end());
    e.inc_median = median_of(in);
    e.inc_min = *std::min_element(in.begin(), in.end());
    e.inc_max = *std::max_element(in.begin(), in.end());
    env.push_back(e);
  }
  return env;
}

TtsaBatchResult run_ttsa_batch(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                               const std::filesystem::path& output_dir) {
  const auto ics = sample_initial_conditions(cfg, ctx.game, ctx.objective, ctx.geometry);
  TtsaBatchResult res;
  nlohmann::json summary = nlohmann::json::array();
  for (RuleKind kind : cfg.rules) {
    const LearningRule rule = make_learning_rule(kind, ctx.game, cfg.pg_eta);
    const TtsaConfig tcfg = make_ttsa_config(cfg, rule, cfg.schedule);
    RunSet set = run_ttsa_set(ics, tcfg, ctx, cfg.jobs);

    TtsaRuleBatch batch;
    batch.rule = kind;
    batch.runs = std::move(set.runs);
    batch.errors = std::move(set.errors);
    batch.failures = set.failures;
    batch.envelope = compute_envelope(batch.runs);
    res.failures += batch.failures;

    if (!output_dir.empty()) {
      const std::string tag = "ttsa_" + std::string(to_string(kind));
      std::ostringstream env;
      env << "k,tracking_median,tracking_min,tracking_max,incentive_median,incentive_min,incentive_max\n";
      for (const auto& e : batch.envelope) {
        env << e.k << ',' << format_double(e.track_median) << ',' << format_double(e.track_min) << ','
            << format_double(e.track_max) << ',' << format_double(e.inc_median) << ',' << format_double(e.inc_min)
            << ',' << format_double(e.inc_max) << '\n';
      }
      write_text_file(output_dir / (tag + "_envelope.csv"), env.str());
      auto runs_json = nlohmann::json::array();
      for (std::size_t i = 0; i < batch.runs.size(); ++i) {
        const auto& r = batch.runs[i];
        if (cfg.write_runs && batch.errors[i].empty()) write_ttsa_run(output_dir, run_name(tag + "_run_", i), r, tcfg);
        runs_json.push_back({{"run", i},
                             {"error", batch.errors[i]},
                             {"final_tracking_error", r.summary.final_tracking_error},
                             {"final_incentive_error", r.summary.final_incentive_error},
                             {"tail_acceptance", r.summary.tail_acceptance},
                             {"last_rejected_step", r.summary.last_rejected_step}});
      }
      summary.push_back({{"config", ttsa_config_to_json(tcfg)}, {"failures", batch.failures}, {"runs", runs_json}});
    }
    res.batches.push_back(std::move(batch));
  }
  if (!output_dir.empty()) write_text_file(output_dir / "ttsa_summary.json", summary.dump(1) + "\n");
  return res;
}

std::vector<SweepRow> run_timescale_sweep(const ExperimentConfig& cfg, const ExperimentContext& ctx,
                                          const std::filesystem::path& output_dir) {
  const auto ics = sample_initial_conditions(cfg, ctx.game, ctx.objective, ctx.geometry);
  const LearningRule rule = make_learning_rule(cfg.rules.front(), ctx.game, cfg.pg_eta);
  std::vector<SweepRow> rows;
  for (double gamma : cfg.sweep_gammas) {
    SweepRow row;
    row.gamma = gamma;
    StepSchedule sched = cfg.schedule;
    sched.b_exp = sched.a_exp + gamma;
    row.b_exp = sched.b_exp;
    try {
      validate(sched);
    } catch (const ConfigError& e) {
      row.skipped = true;
      row.reason = e.what();
      std::cerr << "warning: skipping gamma=" << format_double(gamma) << ": " << e.what() << '\n';
      rows.push_back(row);
      continue;
    }
    const TtsaConfig tcfg = make_ttsa_config(cfg, rule, sched);
    RunSet set = run_ttsa_set(ics, tcfg, ctx, cfg.jobs);
    std::vector<double> tr, in;
    row.tail_acceptance_min = 1.0;
    for (std::size_t i = 0; i < set.runs.size(); ++i) {
      if (!set.errors[i].empty()) {
        if (row.reason.empty()) row.reason = "run " + std::to_string(i) + ": " + set.errors[i];
        continue;
      }
      const auto& s = set.runs[i].summary;
      tr.push_back(s.final_tracking_error);
      in.push_back(s.final_incentive_error);
      row.tail_acceptance_min = std::min(row.tail_acceptance_min, s.tail_acceptance);
      if (cfg.write_runs && !output_dir.empty()) {
        char tag[48];
        std::snprintf(tag, sizeof tag, "sweep_gamma_%g_run_", gamma);
        write_ttsa_run(output_dir, run_name(tag, i), set.runs[i], tcfg);
      }
    }
    row.final_tracking_median = median_of(tr);
    row.final_incentive_median = median_of(in);
    rows.push_back(row);
  }
  if (!output_dir.empty()) {
    std::ostringstream csv;
    csv << "gamma,b_exp,skipped,final_tracking_median,final_incentive_median,tail_acceptance_min,reason\n";
    for (const auto& r : rows) {
      csv << format_double(r.gamma) << ',' << format_double(r.b_exp) << ',' << r.skipped << ','
          << format_double(r.final_tracking_median) << ',' << format_double(r.final_incentive_median) << ','
          << format_double(r.tail_acceptance_min) << ',' << csv_quote(r.reason) << '\n';
    }
    write_text_file(output_dir / "sweep.csv", csv.str());
  }
  return rows;
}

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.skipped || c.pass; });
}

std::vector<VerifyCheck> check_schedule_laws(const StepSchedule& s, long terms) {
  std::vector<VerifyCheck> out;
  const double a = static_cast<double>(s.offset);
  const double b = a + static_cast<double>(terms) - 1.0;
  auto diverging = [&](const char* name, double c0, double e, auto step) {
    double sum = 0.0;
    for (long k = 0; k < terms; ++k) sum += step(k);
    // sum_{t=a}^{b} c0 t^-e >= integral from a to b + 1.
    const double lower = e == 1.0 ? c0 * std::log((b + 1.0) / a)
                                  : c0 * (std::pow(b + 1.0, 1.0 - e) - std::pow(a, 1.0 - e)) / (1.0 - e);
    out.push_back({name, sum, lower, sum >= lower && lower > 0.0, false, "partial sum vs integral lower bound"});
  };
  auto squares = [&](const char* name, double c0, double e, auto step) {
    double sum = 0.0;
    for (long k = 0; k < terms; ++k) sum += step(k) * step(k);
    const double c = c0 * c0;
    const double se = 2.0 * e;
    auto f = [&](double t) { return c * std::pow(t, -se); };
    auto df = [&](double t) { return -se * c * std::pow(t, -se - 1.0); };
    // First terms exactly, then Euler-Maclaurin through the derivative term.
    const long head = std::min<long>(10, terms - 1);
    double estimate = 0.0;
    for (long k = 0; k < head; ++k) estimate += f(a + static_cast<double>(k));
    const double t0 = a + static_cast<double>(head);
    const double integral = c * (std::pow(t0, 1.0 - se) - std::pow(b, 1.0 - se)) / (se - 1.0);
    estimate += integral + 0.5 * (f(t0) + f(b)) + (df(b) - df(t0)) / 12.0;
    const double rel = std::abs(sum - estimate) / estimate;
    out.push_back({name, rel, 0.01, rel <= 0.01, false, "relative gap of partial sum to integral estimate"});
  };
  diverging("schedule_sum_a_diverges", s.a0, s.a_exp, [&](long k) { return s.a(k); });
  diverging("schedule_sum_beta_diverges", s.b0, s.b_exp, [&](long k) { return s.beta(k); });
  squares("schedule_sum_a_squared", s.a0, s.a_exp, [&](long k) { return s.a(k); });
  squares("schedule_sum_beta_squared", s.b0, s.b_exp, [&](long k) { return s.beta(k); });
  const double r_end = s.beta(terms - 1) / s.a(terms - 1);
  const double r_mid = s.beta(terms / 10) / s.a(terms / 10);
  out.push_back({"schedule_beta_over_a_decreasing", r_end, r_mid, r_end < r_mid, false, "beta_k / a_k at k = N-1 vs N/10"});
  return out;
}

namespace {

void add(VerifyReport& rep, std::string name, double measured, double bound, bool pass, std::string note = {}) {
  rep.checks.push_back({std::move(name), measured, bound, pass, false, std::move(note)});
}

void skip_rest(VerifyReport& rep, std::initializer_list<const char*> names, const std::string& why) {
  for (const char* n : names) rep.checks.push_back({n, 0.0, 0.0, false, true, "skipped: " + why});
}

const std::initializer_list<const char*> kGameChecks = {
    "strong_monotonicity_grid", "analytic_bound_vs_grid", "jacobian_fd", "potential_matches_symmetry"};
const std::initializer_list<const char*> kResponseChecks = {
    "response_roundtrip", "response_lipschitz", "response_sym_jacobian_negative", "response_singular_values",
    "response_jacobian_lipschitz", "lyapunov_descent", "lyapunov_at_pdagger", "pg_contraction",
    "learning_rule_certificates"};

void write_verify(const VerifyReport& rep, const std::filesystem::path& dir) {
  std::ostringstream csv;
  csv << "check,measured,bound,status,note\n";
  auto arr = nlohmann::json::array();
  for (const auto& c : rep.checks) {
    const char* status = c.skipped ? "skipped" : (c.pass ? "pass" : "fail");
    csv << c.name << ',' << format_double(c.measured) << ',' << format_double(c.bound) << ',' << status << ','
        << csv_quote(c.note) << '\n';
    arr.push_back({{"check", c.name}, {"measured", c.measured}, {"bound", c.bound}, {"status", status}, {"note", c.note}});
  }
  write_text_file(dir / "verify.csv", csv.str());
  write_text_file(dir / "verify.json", nlohmann::json{{"all_passed", rep.all_passed()}, {"checks", arr}}.dump(1) + "\n");
}

void verify_response_map(VerifyReport& rep, const ExperimentConfig& cfg, const ExperimentContext& ctx) {
  const GameModel& game = ctx.game;
  const double m = game.monotonicity_m;
  ExperimentConfig scfg = cfg;
  scfg.x0.reset();
  scfg.p0.reset();
  const auto ics = sample_initial_conditions(scfg, game, ctx.objective, ctx.geometry);

  double roundtrip = 0.0;
  std::vector<Strategy> xs;
  for (const auto& ic : ics) {
    xs.push_back(solve_response(game, ic.p0, ctx.solver).x_star);
    roundtrip = std::max(roundtrip, (xs.back() - ic.x_bar).norm());
  }
  add(rep, "response_roundtrip", roundtrip, 10.0 * ctx.solver.tol, roundtrip <= 10.0 * ctx.solver.tol,
      "max ||x*(-g0(x)) - x||");

  const std::size_t N = ics.size();
  double lip = 0.0;
  for (std::size_t i = 0; N > 1 && i < N; ++i) {
    const std::size_t j = (i + 1) % N;
    const double dp = (ics[i].p0 - ics[j].p0).norm();
    if (dp > 0.0) lip = std::max(lip, (xs[i] - xs[j]).norm() / dp);
  }
  add(rep, "response_lipschitz", lip, 2.0 / m + 1e-6, lip <= 2.0 / m + 1e-6, "max pair ratio vs 2/m");

  const double h = 1e-5;
  std::vector<Matrix> jac(N);
  double max_sym = -std::numeric_limits<double>::infinity();
  double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
  std::string fd_note;
  for (std::size_t i = 0; i < N; ++i) {
    try {
      jac[i] = response_jacobian_fd(game, ics[i].p0, h, ctx.solver);
    } catch (const OutsideResponseRegion& e) {
      fd_note = e.what();
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(jac[i]));
    max_sym = std::max(max_sym, es.eigenvalues().maxCoeff());
    Eigen::JacobiSVD<Matrix> svd(jac[i]);
    smin = std::min(smin, svd.singularValues().minCoeff());
    smax = std::max(smax, svd.singularValues().maxCoeff());
  }
  add(rep, "response_sym_jacobian_negative", max_sym, 0.0, max_sym < 0.0 && fd_note.empty(),
      fd_note.empty() ? "max eigenvalue of Sym(Dx*)" : fd_note);
  const double s1 = 1.0 / game.jacobian_norm_bound, s2 = 2.0 / m;
  const bool sv_ok = smin >= s1 - 1e-4 && smax <= s2 + 1e-4;
  add(rep, "response_singular_values", smin, s1, sv_ok,
      "min singular value vs 1/L; max " + format_double(smax) + " vs 2/m " + format_double(s2));

  double jl = 0.0, jd = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    if (jac[i].size() == 0 || jac[i + 1].size() == 0) continue;
    const double diff = spectral_norm(jac[i] - jac[i + 1]);
    jd = std::max(jd, diff);
    jl = std::max(jl, diff / (ics[i].p0 - ics[i + 1].p0).norm());
  }
  if (game.lip_L1 == 0.0) {
    add(rep, "response_jacobian_lipschitz", jd, 1e-8, jd <= 1e-8, "linear game: max Jacobian difference");
  } else {
    const double bound = 8.0 * game.lip_L1 / (m * m * m) + 1e-4;
    add(rep, "response_jacobian_lipschitz", jl, bound, jl <= bound, "max pair ratio vs 8 L1 / m^3");
  }

  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < N; ++i) {
    if ((ics[i].p0 - ctx.geometry.p_dagger).norm() < 1e-3) continue;
    worst = std::max(worst, lyapunov_derivative(ics[i].p0, game, ctx.objective, ctx.solver, h));
  }
  add(rep, "lyapunov_descent", worst, -1e-12, worst < -1e-12, "max dV/dt away from p_dagger");
  const double at = lyapunov_derivative(ctx.geometry.p_dagger, game, ctx.objective, ctx.solver, h);
  add(rep, "lyapunov_at_pdagger", std::abs(at), 1e-12, std::abs(at) <= 1e-12, "|dV/dt| at p_dagger");

  const LearningRule pg = make_learning_rule(RuleKind::PG, game, cfg.pg_eta);
  const double rho = projected_gradient_rate(game, pg.eta);
  double ratio = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const Strategy& x = ics[i].x0;
    const double e0 = (x - xs[i]).norm();
    if (e0 == 0.0) continue;
    ratio = std::max(ratio, (learning_rule_pg(x, ics[i].p0, game, pg.eta) - xs[i]).norm() / e0);
  }
  add(rep, "pg_contraction", ratio, rho + 1e-8, ratio <= rho + 1e-8, "one-step error ratio vs rho");

  std::vector<Incentive> probes;
  for (std::size_t i = 0; i < std::min<std::size_t>(N, 10); ++i) probes.push_back(ics[i].p0);
  bool rules_ok = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::string names;
  for (RuleKind kind : {RuleKind::NE, RuleKind::BR, RuleKind::PG}) {
    LearningRule rule;
    try {
      rule = make_learning_rule(kind, game, cfg.pg_eta);
    } catch (const UnsupportedRuleError&) {
      continue;
    }
    const auto r = certify_learning_rule(rule, game, probes, ctx.solver);
    rules_ok = rules_ok && r.maps_into_box && r.exponential_decay;
    worst_margin = std::min(worst_margin, r.worst_observed_rate / rule.certificate.rate);
    names += std::string(names.empty() ? "" : " ") + std::string(to_string(kind));
  }
  add(rep, "learning_rule_certificates", worst_margin, 0.5, rules_ok,
      "observed / certified rate over rules " + names);
}

}  // namespace

VerifyReport run_verify(const ExperimentConfig& cfg, const std::filesystem::path& output_dir) {
  VerifyReport rep;
  std::optional<GameModel> game;
  try {
    game = build_game(cfg);
    add(rep, "construction", 0.0, 0.0, true, game->name);
  } catch (const ConstructionError& e) {
    add(rep, "construction", 0.0, 0.0, false, e.what());
    // Report the monotonicity measurement behind the failure when the game spec
    // itself is well formed.
    try {
      const double lam = cfg.preset == "oscillator-2" ? oscillator_grid_lambda_min(oscillator_spec_for(cfg), 201)
                                                      : aggregative_lambda_min(aggregative_spec_for(cfg));
      add(rep, "strong_monotonicity_grid", lam, 0.0, lam > 0.0, "min lambda_min(Sym DG0) over the box vs 0");
    } catch (const std::invalid_argument&) {
    }
  }

  if (game) {
    const int density = game->dim() <= 2 ? 201 : (game->dim() <= 5 ? 7 : 3);
    const CertificateReport cert = certify_strong_monotonicity(*game, density);
    add(rep, "strong_monotonicity_grid", cert.grid_min_lambda, cert.required, cert.pass,
        "grid min lambda_min(Sym DG0) vs m/2");
    if (!cert.pass) {
      game.reset();
    } else {
      if (cfg.preset == "oscillator-2") {
        const OscillatorGameSpec spec = oscillator_spec_for(cfg);
        double grid_min = std::numeric_limits<double>::infinity();
        for_each_grid_point(spec.box, 201, [&](const Vector& x) {
          grid_min = std::min(grid_min, oscillator_gershgorin_expression(spec, x));
        });
        const double gap = std::abs(oscillator_gershgorin_bound(spec) - grid_min);
        add(rep, "analytic_bound_vs_grid", gap, 1e-10, gap <= 1e-10, "Gershgorin closed form vs grid scan");
      } else if (game->analytic_lambda_bound) {
        const double gap = std::abs(*game->analytic_lambda_bound - cert.grid_min_lambda);
        add(rep, "analytic_bound_vs_grid", gap, 1e-10, gap <= 1e-10, "analytic lambda_min vs grid eigensolve");
      } else {
        rep.checks.push_back({"analytic_bound_vs_grid", 0.0, 0.0, false, true, "no analytic bound registered"});
      }

      Rng rng(cfg.seed);
      double fd_err = 0.0;
      const BoxSpace& box = game->space;
      const double h = 1e-6 * box.diameter();
      for (int s = 0; s < 100; ++s) {
        Vector x(game->dim());
        for (Eigen::Index d = 0; d < x.size(); ++d) {
          x[d] = rng.uniform(box.lower()[d] + h, box.upper()[d] - h);
        }
        const Matrix J = game->jac_g0(x);
        Matrix fd(J.rows(), J.cols());
        for (Eigen::Index d = 0; d < x.size(); ++d) {
          Vector xp = x, xm = x;
          xp[d] += h;
          xm[d] -= h;
          fd.col(d) = (game->g0(xp) - game->g0(xm)) / (2.0 * h);
        }
        fd_err = std::max(fd_err, (fd - J).norm() / std::max(1.0, J.norm()));
      }
      add(rep, "jacobian_fd", fd_err, 1e-5, fd_err <= 1e-5, "relative FD error of jac_g0");
      const bool symmetric = symmetry_check(*game, 64, cfg.seed);
      add(rep, "potential_matches_symmetry", symmetric ? 1.0 : 0.0, game->potential ? 1.0 : 0.0,
          symmetric == game->potential.has_value(), "potential registered iff Jacobian symmetric");
    }
  }
  if (!game) {
    if (rep.checks.size() == 1) skip_rest(rep, kGameChecks, "game construction failed");
    else skip_rest(rep, {"analytic_bound_vs_grid", "jacobian_fd", "potential_matches_symmetry"}, "not certified");
    skip_rest(rep, kResponseChecks, "game not certified");
  } else {
    std::optional<ExperimentContext> ctx;
    try {
      ctx = context_for_game(cfg, *game);
      add(rep, "sublevel_geometry", ctx->geometry.c_star, 0.0, ctx->geometry.c_star > 0.0, "c* > 0");
    } catch (const std::invalid_argument& e) {
      add(rep, "sublevel_geometry", 0.0, 0.0, false, e.what());
    }
    if (ctx) verify_response_map(rep, cfg, *ctx);
    else skip_rest(rep, kResponseChecks, "no sublevel geometry");
  }
  try {
    validate(cfg.schedule);
    for (auto& c : check_schedule_laws(cfg.schedule, 1'000'000)) rep.checks.push_back(std::move(c));
  } catch (const ConfigError& e) {
    add(rep, "schedule_admissible", 0.0, 0.0, false, e.what());
  }

  if (!output_dir.empty()) write_verify(rep, output_dir);
  return rep;
}

}  // namespace socialgrad
