#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "socialgrad/planner.hpp"

namespace socialgrad {

// a_k = a0 (k + offset)^(-a_exp), beta_k = b0 (k + offset)^(-b_exp).
struct StepSchedule {
  double a0 = 1.0;
  double a_exp = 0.6;
  double b0 = 1.0;
  double b_exp = 0.9;
  long offset = 1;

  double a(long k) const;
  double beta(long k) const;
};

// Throws ConfigError unless a_k lies in (0, 1], both exponents lie in
// (1/2, 1] and b_exp > a_exp.
void validate(const StepSchedule& s);

enum class RuleKind { NE, BR, PG };

std::string_view to_string(RuleKind k);
RuleKind parse_rule_kind(std::string_view s);

// Exponential convergence certificate ||x(t) - x*(p)|| <= C e^{-rate t}
// ||x(0) - x*(p)|| for x' = f(x, p) - x, uniform over P_c.
struct ExponentialCertificate {
  double rate = 0.0;
  double constant = 1.0;
};

struct LearningRule {
  RuleKind kind = RuleKind::NE;
  double eta = 0.0;  // PG only
  ExponentialCertificate certificate;
};

// Builds the rule and attaches its certificate: rate 1 for NE,
// lambda_min(Sym(Q^{-1} M)) for BR, 1 - rho for PG. PG with eta <= 0 picks
// eta = 0.9 m / L^2. Throws UnsupportedRuleError for BR on games without the
// structure and ConfigError for PG eta outside (0, m / L^2).
LearningRule make_learning_rule(RuleKind kind, const GameModel& game, double eta = 0.0);

// f^NE(x, p) = x*(p).
Strategy learning_rule_ne(const Strategy& x, const Incentive& p, const GameModel& game,
                          const ResponseSolverConfig& solver_cfg,
                          const std::optional<Vector>& warm_start = std::nullopt);

// Per-agent best response to x_{-i}, clamped to the agent's interval.
Strategy learning_rule_br(const Strategy& x, const Incentive& p, const GameModel& game);

// Pi_X(x - eta (g0(x) + p)).
Strategy learning_rule_pg(const Strategy& x, const Incentive& p, const GameModel& game, double eta);

// Dispatches on rule.kind. x_star_hint, when given, is x*(p) already known
// to the caller (NE then skips the solve).
Strategy apply_learning_rule(const LearningRule& rule, const Strategy& x, const Incentive& p,
                             const GameModel& game, const ResponseSolverConfig& solver_cfg,
                             const std::optional<Vector>& x_star_hint = std::nullopt);

struct RuleCertificationReport {
  bool maps_into_box = true;
  bool exponential_decay = true;
  double worst_observed_rate = 0.0;  // smallest per-unit-time log-error decay seen
  int probes = 0;
};

// For each sampled p: iterates x <- x + a (f(x, p) - x) with constant a from
// random x in the box, checks f(x, p) stays in X and that the log-error falls
// at least linearly in a * iterations at the certificate's rate (with slack).
RuleCertificationReport certify_learning_rule(const LearningRule& rule, const GameModel& game,
                                              const std::vector<Incentive>& incentives,
                                              const ResponseSolverConfig& solver_cfg, double a = 0.05,
                                              std::uint64_t seed = 3);

struct TtsaConfig {
  StepSchedule schedule;
  LearningRule rule;
  double c_fraction = 0.8;
  long max_iter = 100000;
  int record_every = 100;
  std::uint64_t seed = 0;
  // Off only for deliberate timescale-separation violation experiments.
  bool enforce_schedule = true;
};

struct TtsaState {
  Strategy x;
  Incentive p;
  long k = 0;
};

struct TtsaStepOutcome {
  Strategy x;
  Incentive p;
  bool accepted = false;
  Strategy x_star;  // x*(p'), reused by the caller for warm starts
};

// One iteration
//   x' = x + a_k (f(x, p) - x)
//   p' = p + beta_k grad Phi(x)   if that candidate is in P_c, else p.
// x_star_current is x*(p), used as a warm start and as the NE response.
TtsaStepOutcome ttsa_step(const TtsaState& state, const TtsaConfig& cfg, const GameModel& game,
                          const SocialObjective& obj, const SublevelGeometry& geom,
                          const ResponseSolverConfig& solver_cfg, const Strategy& x_star_current);

struct TtsaSample {
  long k = 0;
  Strategy x;
  Incentive p;
  double tracking_error = 0.0;   // ||x - x*(p)||
  double incentive_error = 0.0;  // ||p - p_dagger||
  double V = 0.0;                // Phi(x*(p)) - Phi(x_dagger)
  bool indicator_accepted = true;  // outcome of the update that produced p_k; true at k = 0
  double xi_norm = 0.0;            // ||grad Phi(x) - grad Phi(x*(p))||
};

struct TtsaSummary {
  double final_tracking_error = 0.0;
  double final_incentive_error = 0.0;
  double tail_acceptance = 0.0;   // accepted fraction of steps in the last 10%
  double accepted_mass = 0.0;     // sum_k beta_k 1{accepted}
  long accepted_steps = 0;
  long last_rejected_step = -1;   // -1 when every update was accepted
};

struct TtsaRecord {
  std::vector<TtsaSample> samples;
  TtsaSummary summary;
};

// Runs max_iter steps from (x0, p0) in X x P_c, recording every
// record_every steps plus the final state.
TtsaRecord run_ttsa(const Strategy& x0, const Incentive& p0, const TtsaConfig& cfg, const GameModel& game,
                    const SocialObjective& obj, const SublevelGeometry& geom,
                    const ResponseSolverConfig& solver_cfg);

struct DiagnosticsSummary {
  double tail_mean_tracking = 0.0;
  double tail_mean_incentive = 0.0;
  double accepted_mass = 0.0;
  double tail_acceptance = 0.0;
  bool monotone_tail = true;  // binned error envelope nonincreasing over the last half
};

DiagnosticsSummary tracking_diagnostics(const TtsaRecord& rec);

}  // namespace socialgrad
