#include "socialgrad/ttsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "socialgrad/rng.hpp"

namespace socialgrad {

double StepSchedule::a(long k) const {
  return a0 * std::pow(static_cast<double>(k + offset), -a_exp);
}

double StepSchedule::beta(long k) const {
  return b0 * std::pow(static_cast<double>(k + offset), -b_exp);
}

void validate(const StepSchedule& s) {
  if (!(s.a0 > 0.0 && s.b0 > 0.0)) throw ConfigError("schedule a0 and b0 must be positive");
  if (s.offset < 1) throw ConfigError("schedule offset must be a positive integer");
  auto admissible = [](double e) { return e > 0.5 && e <= 1.0; };
  if (!admissible(s.a_exp) || !admissible(s.b_exp)) {
    throw ConfigError("schedule exponents must lie in (1/2, 1]");
  }
  if (!(s.b_exp > s.a_exp)) throw ConfigError("schedule needs b_exp > a_exp so that beta_k = o(a_k)");
  // a_k is decreasing in k, so a_0 <= 1 bounds every step.
  if (s.a(0) > 1.0) throw ConfigError("schedule needs a0 <= offset^a_exp so that a_k <= 1");
}

std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::NE: return "NE";
    case RuleKind::BR: return "BR";
    case RuleKind::PG: return "PG";
  }
  return "?";
}

RuleKind parse_rule_kind(std::string_view s) {
  if (s == "NE" || s == "ne") return RuleKind::NE;
  if (s == "BR" || s == "br") return RuleKind::BR;
  if (s == "PG" || s == "pg") return RuleKind::PG;
  throw ConfigError("unknown learning rule '" + std::string(s) + "'");
}

LearningRule make_learning_rule(RuleKind kind, const GameModel& game, double eta) {
  LearningRule rule;
  rule.kind = kind;
  switch (kind) {
    case RuleKind::NE:
      rule.certificate.rate = 1.0;
      break;
    case RuleKind::BR: {
      if (!game.best_response) {
        throw UnsupportedRuleError("best-response rule needs a game with registered BR structure");
      }
      const auto& br = *game.best_response;
      const Matrix M = Matrix(br.q.asDiagonal()) + br.a * br.W;
      const Matrix QinvM = br.q.cwiseInverse().asDiagonal() * M;
      rule.certificate.rate = lambda_min_sym(QinvM);
      break;
    }
    case RuleKind::PG: {
      const double L = game.jacobian_norm_bound;
      const double eta_max = game.monotonicity_m / (L * L);
      if (eta <= 0.0) eta = 0.9 * eta_max;
      if (!(eta < eta_max)) {
        throw ConfigError("PG rule eta=" + std::to_string(eta) + " outside (0, m/L^2) = (0, " +
                          std::to_string(eta_max) + ")");
      }
      rule.eta = eta;
      rule.certificate.rate = 1.0 - projected_gradient_rate(game, eta);
      break;
    }
  }
  return rule;
}

Strategy learning_rule_ne(const Strategy&, const Incentive& p, const GameModel& game,
                          const ResponseSolverConfig& solver_cfg, const std::optional<Vector>& warm_start) {
  return solve_response(game, p, solver_cfg, warm_start).x_star;
}

Strategy learning_rule_br(const Strategy& x, const Incentive& p, const GameModel& game) {
  if (!game.best_response) {
    throw UnsupportedRuleError("best-response rule needs a game with registered BR structure");
  }
  require_dim(x, game.dim(), "learning_rule_br(x)");
  require_dim(p, game.dim(), "learning_rule_br(p)");
  const auto& br = *game.best_response;
  // Agent i's cost is strictly convex in x_i; its interval minimizer is the
  // clamped stationary point of q_i x_i + a (W x)_i + p_i (w_ii = 0).
  const Vector unconstrained = -((p + br.a * (br.W * x)).array() / br.q.array()).matrix();
  return project_box(unconstrained, game.space);
}

Strategy learning_rule_pg(const Strategy& x, const Incentive& p, const GameModel& game, double eta) {
  const double L = game.jacobian_norm_bound;
  const double eta_max = game.monotonicity_m / (L * L);
  if (!(eta > 0.0 && eta < eta_max)) {
    throw ConfigError("PG rule eta=" + std::to_string(eta) + " outside (0, m/L^2)");
  }
  return project_box(x - eta * incentivized_pseudo_gradient(game, x, p), game.space);
}

Strategy apply_learning_rule(const LearningRule& rule, const Strategy& x, const Incentive& p,
                             const GameModel& game, const ResponseSolverConfig& solver_cfg,
                             const std::optional<Vector>& x_star_hint) {
  switch (rule.kind) {
    case RuleKind::NE:
      if (x_star_hint) return *x_star_hint;
      return learning_rule_ne(x, p, game, solver_cfg);
    case RuleKind::BR:
      return learning_rule_br(x, p, game);
    case RuleKind::PG:
      return learning_rule_pg(x, p, game, rule.eta);
  }
  throw ConfigError("unknown learning rule");
}

RuleCertificationReport certify_learning_rule(const LearningRule& rule, const GameModel& game,
                                              const std::vector<Incentive>& incentives,
                                              const ResponseSolverConfig& solver_cfg, double a,
                                              std::uint64_t seed) {
  RuleCertificationReport rep;
  rep.worst_observed_rate = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  const Eigen::Index n = game.dim();
  const double target = 1e-8;
  const double rate = rule.certificate.rate;
  const long budget = std::min<long>(2'000'000, static_cast<long>(std::ceil(std::log(1e10) / (a * 0.5 * rate))) + 10);

  for (const Incentive& p : incentives) {
    const Strategy xs = solve_response(game, p, solver_cfg).x_star;
    Strategy x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = rng.uniform(game.space.lower()[i], game.space.upper()[i]);
    const double e0 = (x - xs).norm();
    double e = e0;
    long it = 0;
    for (; it < budget && e > target * std::max(1.0, e0); ++it) {
      const Strategy f = apply_learning_rule(rule, x, p, game, solver_cfg, xs);
      if (!game.space.contains(f, 1e-12)) rep.maps_into_box = false;
      x = x + a * (f - x);
      e = (x - xs).norm();
    }
    ++rep.probes;
    if (it == 0) continue;
    const double observed = -std::log(std::max(e, 1e-300) / e0) / (a * static_cast<double>(it));
    rep.worst_observed_rate = std::min(rep.worst_observed_rate, observed);
    // Discrete steps lose O(a) against the continuous-time rate.
    if (observed < 0.5 * rate) rep.exponential_decay = false;
  }
  if (rep.probes == 0 || !std::isfinite(rep.worst_observed_rate)) rep.worst_observed_rate = 0.0;
  return rep;
}

TtsaStepOutcome ttsa_step(const TtsaState& state, const TtsaConfig& cfg, const GameModel& game,
                          const SocialObjective& obj, const SublevelGeometry& geom,
                          const ResponseSolverConfig& solver_cfg, const Strategy& x_star_current) {
  const double a_k = cfg.schedule.a(state.k);
  const double beta_k = cfg.schedule.beta(state.k);

  const Strategy f = apply_learning_rule(cfg.rule, state.x, state.p, game, solver_cfg, x_star_current);
  Strategy x_next = state.x + a_k * (f - state.x);
  if (!game.space.contains(x_next, 1e-12 * game.space.diameter())) {
    throw std::logic_error("ttsa_step: strategy update left the box");
  }
  x_next = project_box(x_next, game.space);  // absorb the last-ulp overshoot

  TtsaStepOutcome out;
  out.x = std::move(x_next);
  const Incentive candidate = state.p + beta_k * obj.grad_phi(state.x);
  if (candidate == state.p) {
    // Null step: the candidate is p itself, already in P_c.
    out.p = state.p;
    out.accepted = true;
    out.x_star = x_star_current;
    return out;
  }
  Membership m = evaluate_membership(candidate, geom, game, obj, solver_cfg, x_star_current);
  out.accepted = m.member;
  if (out.accepted) {
    out.p = candidate;
    out.x_star = std::move(m.response.x_star);
  } else {
    out.p = state.p;
    out.x_star = x_star_current;
  }
  return out;
}

namespace {

TtsaSample make_sample(long k, const Strategy& x, const Incentive& p, const Strategy& x_star, bool accepted,
                       const SocialObjective& obj, const SublevelGeometry& geom, double phi_dagger) {
  TtsaSample s;
  s.k = k;
  s.x = x;
  s.p = p;
  s.tracking_error = (x - x_star).norm();
  s.incentive_error = (p - geom.p_dagger).norm();
  s.V = obj.phi(x_star) - phi_dagger;
  s.indicator_accepted = accepted;
  s.xi_norm = (obj.grad_phi(x) - obj.grad_phi(x_star)).norm();
  return s;
}

}  // namespace

TtsaRecord run_ttsa(const Strategy& x0, const Incentive& p0, const TtsaConfig& cfg, const GameModel& game,
                    const SocialObjective& obj, const SublevelGeometry& geom,
                    const ResponseSolverConfig& solver_cfg) {
  if (cfg.enforce_schedule) validate(cfg.schedule);
  if (cfg.max_iter < 1) throw ConfigError("ttsa max_iter must be positive");
  if (cfg.record_every < 1) throw ConfigError("ttsa record_every must be positive");
  require_dim(x0, game.dim(), "run_ttsa(x0)");
  require_dim(p0, game.dim(), "run_ttsa(p0)");
  if (!game.space.contains(x0)) throw ContractViolation("run_ttsa: x0 outside the strategy box");
  const Membership start = evaluate_membership(p0, geom, game, obj, solver_cfg);
  if (!start.member) throw ContractViolation("run_ttsa: p0 is not in P_c");

  const double phi_dagger = obj.phi(obj.x_dagger);
  TtsaRecord rec;
  rec.samples.reserve(static_cast<std::size_t>(cfg.max_iter / cfg.record_every + 2));

  TtsaState state{x0, p0, 0};
  Strategy x_star = start.response.x_star;
  rec.samples.push_back(make_sample(0, state.x, state.p, x_star, true, obj, geom, phi_dagger));

  const long tail_begin = cfg.max_iter - std::max<long>(1, cfg.max_iter / 10);
  long tail_accepted = 0;
  auto& summary = rec.summary;
  for (long k = 0; k < cfg.max_iter; ++k) {
    TtsaStepOutcome out = ttsa_step(state, cfg, game, obj, geom, solver_cfg, x_star);
    if (out.accepted) {
      summary.accepted_mass += cfg.schedule.beta(k);
      ++summary.accepted_steps;
      if (k >= tail_begin) ++tail_accepted;
    } else {
      summary.last_rejected_step = k;
    }
    state.x = std::move(out.x);
    state.p = std::move(out.p);
    state.k = k + 1;
    x_star = std::move(out.x_star);
    if (state.k % cfg.record_every == 0 || state.k == cfg.max_iter) {
      rec.samples.push_back(make_sample(state.k, state.x, state.p, x_star, out.accepted, obj, geom, phi_dagger));
    }
  }
  summary.final_tracking_error = rec.samples.back().tracking_error;
  summary.final_incentive_error = rec.samples.back().incentive_error;
  summary.tail_acceptance =
      static_cast<double>(tail_accepted) / static_cast<double>(cfg.max_iter - tail_begin);
  return rec;
}

DiagnosticsSummary tracking_diagnostics(const TtsaRecord& rec) {
  DiagnosticsSummary d;
  d.accepted_mass = rec.summary.accepted_mass;
  d.tail_acceptance = rec.summary.tail_acceptance;
  const auto& s = rec.samples;
  if (s.empty()) return d;

  const std::size_t tail = std::max<std::size_t>(1, s.size() / 10);
  for (std::size_t i = s.size() - tail; i < s.size(); ++i) {
    d.tail_mean_tracking += s[i].tracking_error;
    d.tail_mean_incentive += s[i].incentive_error;
  }
  d.tail_mean_tracking /= static_cast<double>(tail);
  d.tail_mean_incentive /= static_cast<double>(tail);

  // Envelope = per-bin maximum over five equal bins of the last half.
  const std::size_t half_begin = s.size() / 2;
  const std::size_t len = s.size() - half_begin;
  constexpr std::size_t bins = 5;
  if (len >= bins) {
    double prev_track = std::numeric_limits<double>::infinity();
    double prev_inc = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t lo = half_begin + b * len / bins;
      const std::size_t hi = half_begin + (b + 1) * len / bins;
      double mt = 0.0, mi = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        mt = std::max(mt, s[i].tracking_error);
        mi = std::max(mi, s[i].incentive_error);
      }
      if (mt > prev_track || mi > prev_inc) d.monotone_tail = false;
      prev_track = mt;
      prev_inc = mi;
    }
  }
  return d;
}

}  // namespace socialgrad
