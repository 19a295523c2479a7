#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "relstack/calibration.hpp"
#include "relstack/common.hpp"
#include "relstack/quantiles.hpp"
#include "relstack/symptom.hpp"

namespace relstack {

enum class Action { predict = 0, abstain = 1, reacquire = 2, refer = 3 };
enum class Trigger { none, quality, completeness, ood, uncertainty, width };

inline constexpr std::array<std::string_view, 4> kActionNames = {"PREDICT", "ABSTAIN",
                                                                 "REACQUIRE", "REFER"};
inline constexpr std::array<std::string_view, 6> kTriggerNames = {
    "none", "quality", "completeness", "ood", "uncertainty", "width"};

// Percentile levels used to fit the data-driven thresholds on the validation
// split. The completeness floor is policy, not a quantile, so it is supplied
// directly.
struct QuantileSpec {
  double quality_pct = 20.0;
  double u_abstain_pct = 70.0;
  double u_refer_pct = 85.0;
  double ood_pct = 85.0;
};

// A full routing policy. Thresholds are quantiles frozen on the validation
// split; routing against an unfrozen config is a contract violation, which
// is what keeps test-time behavior pinned to the snapshot.
struct ThresholdConfig {
  double tau_q = 0.0;
  double tau_c = 0.0;
  double tau_ood = 1.0;
  double tau_u_abstain = 1.0;
  double tau_u_refer = 1.0;
  double tau_w = 0.0;
  QuantileSpec quantile_spec{};
  double coverage_budget = 0.8;
  bool refer_uses_uncertainty = false;  // escalate on uncertainty as well as ood
  bool frozen = false;

  void validate() const {
    auto fin = [](double v) { return std::isfinite(v); };
    if (!(fin(tau_q) && fin(tau_c) && fin(tau_ood) && fin(tau_u_abstain) && fin(tau_u_refer) &&
          fin(tau_w)))
      throw config_error("ThresholdConfig: thresholds must be finite");
    if (!(coverage_budget > 0.0 && coverage_budget < 1.0))
      throw config_error("ThresholdConfig: coverage_budget must lie in (0, 1)");
  }
};

struct RoutingDecision {
  std::string sample_id;
  Action action = Action::predict;
  Trigger trigger = Trigger::none;
  double trigger_value = 0.0;
  double threshold_value = 0.0;
  std::string config_digest;
};

// Fit all quantile thresholds on the validation split and freeze them.
// tau_w is the width value whose empirical CDF position matches the coverage
// budget; tau_c is passed through as policy.
inline ThresholdConfig fit_thresholds(std::span<const ReliabilitySignals> validation,
                                      std::span<const CalibratedPrediction> predictions,
                                      const QuantileSpec& spec, double coverage_budget,
                                      double tau_c, bool refer_uses_uncertainty = false) {
  if (validation.empty()) throw config_error("fit_thresholds: empty validation split");
  require(validation.size() == predictions.size(),
          "fit_thresholds: one prediction per signal row required");
  if (!(coverage_budget > 0.0 && coverage_budget < 1.0))
    throw config_error("fit_thresholds: coverage_budget must lie in (0, 1)");
  if (!(std::isfinite(tau_c) && tau_c >= 0.0 && tau_c <= 1.0))
    throw config_error("fit_thresholds: tau_c must lie in [0, 1]");

  std::vector<double> quality, uncertainty, ood, widths;
  quality.reserve(validation.size());
  uncertainty.reserve(validation.size());
  ood.reserve(validation.size());
  widths.reserve(validation.size());
  for (const auto& s : validation) {
    s.validate();
    quality.push_back(s.quality);
    uncertainty.push_back(s.uncertainty);
    ood.push_back(s.ood);
  }
  for (const auto& p : predictions) widths.push_back(p.width);

  ThresholdConfig cfg;
  cfg.tau_q = nearest_rank_percentile(quality, spec.quality_pct);
  cfg.tau_u_abstain = nearest_rank_percentile(uncertainty, spec.u_abstain_pct);
  cfg.tau_u_refer = nearest_rank_percentile(uncertainty, spec.u_refer_pct);
  cfg.tau_ood = nearest_rank_percentile(ood, spec.ood_pct);
  cfg.tau_w = nearest_rank_percentile(widths, coverage_budget * 100.0);
  cfg.tau_c = tau_c;
  cfg.quantile_spec = spec;
  cfg.coverage_budget = coverage_budget;
  cfg.refer_uses_uncertainty = refer_uses_uncertainty;
  cfg.frozen = true;
  if (!std::isfinite(cfg.tau_w))
    throw config_error(
        "fit_thresholds: width quantile is not finite; calibration split too small for alpha");
  cfg.validate();
  return cfg;
}

// Deterministic four-action routing. Priority is REACQUIRE, REFER, ABSTAIN,
// PREDICT; within REACQUIRE quality is checked before completeness, within
// ABSTAIN uncertainty before width. Every comparison is strict, so sitting
// exactly on a threshold never fires it, and the recorded trigger/threshold
// pair reproduces the fired comparison.
inline RoutingDecision route(const ReliabilitySignals& signals,
                             const CalibratedPrediction& prediction,
                             const ThresholdConfig& config, std::string_view sample_id,
                             std::string_view config_digest) {
  require(config.frozen, "route: thresholds must be frozen before routing");
  signals.validate();

  RoutingDecision d;
  d.sample_id = std::string(sample_id);
  d.config_digest = std::string(config_digest);
  const auto fire = [&](Action a, Trigger t, double value, double threshold) {
    d.action = a;
    d.trigger = t;
    d.trigger_value = value;
    d.threshold_value = threshold;
    return d;
  };

  if (signals.quality < config.tau_q)
    return fire(Action::reacquire, Trigger::quality, signals.quality, config.tau_q);
  if (signals.completeness < config.tau_c)
    return fire(Action::reacquire, Trigger::completeness, signals.completeness, config.tau_c);
  if (signals.ood > config.tau_ood)
    return fire(Action::refer, Trigger::ood, signals.ood, config.tau_ood);
  if (config.refer_uses_uncertainty && signals.uncertainty > config.tau_u_refer)
    return fire(Action::refer, Trigger::uncertainty, signals.uncertainty, config.tau_u_refer);
  if (signals.uncertainty > config.tau_u_abstain)
    return fire(Action::abstain, Trigger::uncertainty, signals.uncertainty,
                config.tau_u_abstain);
  if (prediction.width > config.tau_w)
    return fire(Action::abstain, Trigger::width, prediction.width, config.tau_w);

  d.action = Action::predict;
  d.trigger = Trigger::none;
  return d;
}

// Batch routing with optional fan-out. Workers own disjoint index ranges and
// write into preallocated slots, so the result is identical for every thread
// count and schedule.
inline std::vector<RoutingDecision> route_batch(std::span<const ReliabilitySignals> signals,
                                                std::span<const CalibratedPrediction> predictions,
                                                const ThresholdConfig& config,
                                                std::span<const std::string> sample_ids,
                                                std::string_view config_digest,
                                                unsigned threads = 1) {
  require(signals.size() == predictions.size() && signals.size() == sample_ids.size(),
          "route_batch: signals, predictions, and ids must align");
  std::vector<RoutingDecision> out(signals.size());
  const std::size_t n = signals.size();
  if (n == 0) return out;
  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      out[i] = route(signals[i], predictions[i], config, sample_ids[i], config_digest);
  };
  if (workers == 1) {
    run_range(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = static_cast<std::size_t>(w) * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(run_range, lo, hi);
  }
  for (auto& t : pool) t.join();
  return out;
}

enum class OutcomeKind { accuracy, mean_abs_error };

struct ActionSummary {
  std::size_t total = 0;
  std::array<std::size_t, 4> counts{};             // indexed by Action
  std::array<double, 4> fractions{};
  std::array<std::optional<double>, 4> conditional{};  // per-action mean outcome
  std::optional<double> overall;                   // no-rejection mean outcome
  OutcomeKind kind = OutcomeKind::accuracy;
};

// Aggregate routing decisions. outcomes, when provided, carries one value per
// decision: 1/0 correctness for accuracy, or an absolute error.
inline ActionSummary summarize_actions(std::span<const RoutingDecision> decisions,
                                       OutcomeKind kind = OutcomeKind::accuracy,
                                       std::span<const double> outcomes = {}) {
  if (decisions.empty()) throw input_error("summarize_actions: no decisions");
  if (!outcomes.empty())
    require(outcomes.size() == decisions.size(),
            "summarize_actions: one outcome per decision required");
  ActionSummary s;
  s.total = decisions.size();
  s.kind = kind;
  std::array<double, 4> outcome_sum{};
  double overall_sum = 0.0;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const auto a = static_cast<std::size_t>(decisions[i].action);
    ++s.counts[a];
    if (!outcomes.empty()) {
      outcome_sum[a] += outcomes[i];
      overall_sum += outcomes[i];
    }
  }
  for (std::size_t a = 0; a < 4; ++a) {
    s.fractions[a] = static_cast<double>(s.counts[a]) / static_cast<double>(s.total);
    if (!outcomes.empty() && s.counts[a] > 0)
      s.conditional[a] = outcome_sum[a] / static_cast<double>(s.counts[a]);
  }
  if (!outcomes.empty()) s.overall = overall_sum / static_cast<double>(s.total);
  return s;
}

struct RiskCoveragePoint {
  double coverage = 0.0;  // fraction accepted at this uncertainty cutoff
  double risk = 0.0;      // error rate among the accepted
};

// Selective risk against coverage, sweeping acceptance cutoffs over the
// distinct uncertainty values (ties are accepted together). The last point is
// always full coverage.
inline std::vector<RiskCoveragePoint> risk_coverage_curve(std::span<const double> uncertainties,
                                                          std::span<const int> correct) {
  if (uncertainties.empty() || uncertainties.size() != correct.size())
    throw input_error("risk_coverage_curve: need one correctness flag per uncertainty");
  for (std::size_t i = 0; i < correct.size(); ++i) {
    if (!std::isfinite(uncertainties[i]))
      throw input_error("risk_coverage_curve: non-finite uncertainty");
    if (correct[i] != 0 && correct[i] != 1)
      throw input_error("risk_coverage_curve: correctness must be 0/1");
  }
  std::vector<std::size_t> order(uncertainties.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return uncertainties[a] < uncertainties[b]; });

  std::vector<RiskCoveragePoint> curve;
  const double n = static_cast<double>(order.size());
  std::size_t accepted = 0, wrong = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && uncertainties[order[j]] == uncertainties[order[i]]) ++j;
    for (std::size_t t = i; t < j; ++t) {
      ++accepted;
      wrong += correct[order[t]] == 0 ? 1 : 0;
    }
    curve.push_back({static_cast<double>(accepted) / n,
                     static_cast<double>(wrong) / static_cast<double>(accepted)});
    i = j;
  }
  return curve;
}

}  // namespace relstack
