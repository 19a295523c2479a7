#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "relstack/router.hpp"

using namespace relstack;
using Catch::Approx;

namespace {

ReliabilitySignals signals_of(double q, double c, double o, double u) {
  ReliabilitySignals s;
  s.quality = q;
  s.completeness = c;
  s.ood = o;
  s.uncertainty = u;
  s.reliability = 0.5;
  return s;
}

CalibratedPrediction width_of(double w) {
  CalibratedPrediction p;
  p.kind = PredictionKind::regression;
  p.width = w;
  return p;
}

// A frozen config with distinct, easy-to-probe thresholds.
ThresholdConfig probe_config() {
  ThresholdConfig cfg;
  cfg.tau_q = 0.5;
  cfg.tau_c = 0.6;
  cfg.tau_ood = 0.7;
  cfg.tau_u_abstain = 0.3;
  cfg.tau_u_refer = 0.4;
  cfg.tau_w = 2.0;
  cfg.frozen = true;
  return cfg;
}

}  // namespace

TEST_CASE("threshold fitting freezes validation quantiles", "[router]") {
  std::vector<ReliabilitySignals> val;
  const double quality[] = {0.6, 0.7, 0.8, 0.9, 1.0};
  const double uncertainty[] = {0.1, 0.2, 0.3, 0.4, 0.5};
  const double ood[] = {0.05, 0.1, 0.15, 0.2, 0.25};
  for (int i = 0; i < 5; ++i) val.push_back(signals_of(quality[i], 1.0, ood[i], uncertainty[i]));
  std::vector<CalibratedPrediction> preds{width_of(1), width_of(1), width_of(2), width_of(2),
                                          width_of(3)};

  const auto cfg = fit_thresholds(val, preds, QuantileSpec{}, 0.8, 0.9);
  REQUIRE(cfg.frozen);
  REQUIRE(cfg.tau_q == 0.7);          // P20 of 5 values: rank ceil(1.2) = 2
  REQUIRE(cfg.tau_u_abstain == 0.5);  // P70: rank ceil(4.2) = 5
  REQUIRE(cfg.tau_u_refer == 0.5);    // P85: rank 6 clamps to 5
  REQUIRE(cfg.tau_ood == 0.25);
  REQUIRE(cfg.tau_w == 3.0);          // width quantile at the coverage budget
  REQUIRE(cfg.tau_c == 0.9);          // policy passthrough
  REQUIRE_THROWS_AS(fit_thresholds({}, {}, QuantileSpec{}, 0.8, 0.9), config_error);
  REQUIRE_THROWS_AS(fit_thresholds(val, preds, QuantileSpec{}, 0.8, 1.5), config_error);
}

TEST_CASE("infinite widths at the budget quantile are rejected at freeze time", "[router]") {
  std::vector<ReliabilitySignals> val(3, signals_of(0.9, 1.0, 0.1, 0.2));
  std::vector<CalibratedPrediction> preds{
      width_of(1), width_of(std::numeric_limits<double>::infinity()),
      width_of(std::numeric_limits<double>::infinity())};
  REQUIRE_THROWS_AS(fit_thresholds(val, preds, QuantileSpec{}, 0.8, 0.5), config_error);
}

TEST_CASE("routing follows the reacquire > refer > abstain > predict priority", "[router]") {
  const auto cfg = probe_config();
  const auto pred = width_of(1.0);

  // all clear
  auto d = route(signals_of(0.9, 0.9, 0.1, 0.1), pred, cfg, "a", "dg");
  REQUIRE(d.action == Action::predict);
  REQUIRE(d.trigger == Trigger::none);

  // low quality wins over everything else also being bad
  d = route(signals_of(0.4, 0.1, 0.9, 0.9), width_of(5.0), cfg, "b", "dg");
  REQUIRE(d.action == Action::reacquire);
  REQUIRE(d.trigger == Trigger::quality);
  REQUIRE(d.trigger_value == 0.4);
  REQUIRE(d.threshold_value == 0.5);

  // quality fine, completeness low
  d = route(signals_of(0.9, 0.5, 0.9, 0.9), width_of(5.0), cfg, "c", "dg");
  REQUIRE(d.action == Action::reacquire);
  REQUIRE(d.trigger == Trigger::completeness);

  // acquisition fine, ood high: refer beats abstain
  d = route(signals_of(0.9, 0.9, 0.8, 0.9), width_of(5.0), cfg, "d", "dg");
  REQUIRE(d.action == Action::refer);
  REQUIRE(d.trigger == Trigger::ood);

  // in-distribution, uncertainty above the abstain threshold
  d = route(signals_of(0.9, 0.9, 0.1, 0.35), pred, cfg, "e", "dg");
  REQUIRE(d.action == Action::abstain);
  REQUIRE(d.trigger == Trigger::uncertainty);
  REQUIRE(d.threshold_value == 0.3);

  // uncertainty fine, width above budget
  d = route(signals_of(0.9, 0.9, 0.1, 0.1), width_of(2.5), cfg, "f", "dg");
  REQUIRE(d.action == Action::abstain);
  REQUIRE(d.trigger == Trigger::width);
  REQUIRE(d.trigger_value == 2.5);
}

TEST_CASE("uncertainty escalation to refer is opt-in and outranks abstain", "[router]") {
  auto cfg = probe_config();
  const auto s = signals_of(0.9, 0.9, 0.1, 0.45);  // above both tau_u_refer and tau_u_abstain

  auto d = route(s, width_of(1.0), cfg, "a", "dg");
  REQUIRE(d.action == Action::abstain);  // escalation off: abstain path

  cfg.refer_uses_uncertainty = true;
  d = route(s, width_of(1.0), cfg, "a", "dg");
  REQUIRE(d.action == Action::refer);
  REQUIRE(d.trigger == Trigger::uncertainty);
  REQUIRE(d.threshold_value == 0.4);

  // between the two uncertainty thresholds the escalation does not fire
  d = route(signals_of(0.9, 0.9, 0.1, 0.35), width_of(1.0), cfg, "b", "dg");
  REQUIRE(d.action == Action::abstain);
}

TEST_CASE("boundary equality never triggers", "[router]") {
  const auto cfg = probe_config();
  // every signal sits exactly on its threshold; all comparisons are strict
  const auto d =
      route(signals_of(cfg.tau_q, cfg.tau_c, cfg.tau_ood, cfg.tau_u_abstain),
            width_of(cfg.tau_w), cfg, "edge", "dg");
  REQUIRE(d.action == Action::predict);
  REQUIRE(d.trigger == Trigger::none);
}

TEST_CASE("routing against an unfrozen config is a contract violation", "[router]") {
  auto cfg = probe_config();
  cfg.frozen = false;
  REQUIRE_THROWS_AS(route(signals_of(0.9, 0.9, 0.1, 0.1), width_of(1.0), cfg, "a", "dg"),
                    contract_violation);
}

TEST_CASE("the audit record reproduces the fired comparison", "[router]") {
  const auto cfg = probe_config();
  const auto d = route(signals_of(0.2, 0.9, 0.1, 0.1), width_of(1.0), cfg, "s42", "deadbeef");
  REQUIRE(d.sample_id == "s42");
  REQUIRE(d.config_digest == "deadbeef");
  REQUIRE(d.trigger_value < d.threshold_value);  // quality fired: value below threshold
}

TEST_CASE("batch routing is identical across thread counts", "[router]") {
  const auto cfg = probe_config();
  std::vector<ReliabilitySignals> signals;
  std::vector<CalibratedPrediction> preds;
  std::vector<std::string> ids;
  for (int i = 0; i < 257; ++i) {
    const double t = static_cast<double>(i) / 257.0;
    signals.push_back(signals_of(t, 1.0 - t, t * t, t * 0.6));
    preds.push_back(width_of(3.0 * t));
    ids.push_back("s" + std::to_string(i));
  }
  const auto one = route_batch(signals, preds, cfg, ids, "dg", 1);
  for (unsigned threads : {2u, 4u, 9u, 64u}) {
    const auto many = route_batch(signals, preds, cfg, ids, "dg", threads);
    REQUIRE(many.size() == one.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
      REQUIRE(many[i].sample_id == one[i].sample_id);
      REQUIRE(many[i].action == one[i].action);
      REQUIRE(many[i].trigger == one[i].trigger);
      REQUIRE(many[i].trigger_value == one[i].trigger_value);
      REQUIRE(many[i].threshold_value == one[i].threshold_value);
    }
  }
}

TEST_CASE("action summary partitions decisions and conditions outcomes", "[router]") {
  const auto cfg = probe_config();
  std::vector<RoutingDecision> decisions;
  decisions.push_back(route(signals_of(0.9, 0.9, 0.1, 0.1), width_of(1.0), cfg, "p1", "dg"));
  decisions.push_back(route(signals_of(0.9, 0.9, 0.1, 0.1), width_of(1.0), cfg, "p2", "dg"));
  decisions.push_back(route(signals_of(0.9, 0.9, 0.1, 0.9), width_of(1.0), cfg, "a1", "dg"));
  decisions.push_back(route(signals_of(0.1, 0.9, 0.1, 0.1), width_of(1.0), cfg, "r1", "dg"));
  const std::vector<double> outcomes{1.0, 0.0, 1.0, 0.0};  // correctness per decision

  const auto s = summarize_actions(decisions, OutcomeKind::accuracy, outcomes);
  REQUIRE(s.total == 4);
  REQUIRE(s.counts[static_cast<std::size_t>(Action::predict)] == 2);
  REQUIRE(s.counts[static_cast<std::size_t>(Action::abstain)] == 1);
  REQUIRE(s.counts[static_cast<std::size_t>(Action::reacquire)] == 1);
  REQUIRE(s.counts[static_cast<std::size_t>(Action::refer)] == 0);
  double fraction_sum = 0.0;
  for (double f : s.fractions) fraction_sum += f;
  REQUIRE(fraction_sum == Approx(1.0).margin(1e-12));
  REQUIRE(s.conditional[static_cast<std::size_t>(Action::predict)].value() == 0.5);
  REQUIRE(s.conditional[static_cast<std::size_t>(Action::abstain)].value() == 1.0);
  REQUIRE_FALSE(s.conditional[static_cast<std::size_t>(Action::refer)].has_value());
  REQUIRE(s.overall.value() == 0.5);

  const auto bare = summarize_actions(decisions);
  REQUIRE_FALSE(bare.overall.has_value());
  REQUIRE_THROWS_AS(summarize_actions({}), input_error);
}

TEST_CASE("risk-coverage sweep accepts uncertainty ties together", "[router]") {
  const std::vector<double> u{0.1, 0.2, 0.2, 0.3};
  const std::vector<int> correct{1, 1, 0, 0};
  const auto curve = risk_coverage_curve(u, correct);
  REQUIRE(curve.size() == 3);
  REQUIRE(curve[0].coverage == 0.25);
  REQUIRE(curve[0].risk == 0.0);
  REQUIRE(curve[1].coverage == 0.75);
  REQUIRE(curve[1].risk == Approx(1.0 / 3.0).margin(1e-15));
  REQUIRE(curve[2].coverage == 1.0);
  REQUIRE(curve[2].risk == 0.5);
  REQUIRE_THROWS_AS(risk_coverage_curve(std::vector<double>{}, std::vector<int>{}), input_error);
  REQUIRE_THROWS_AS(risk_coverage_curve(std::vector<double>{0.1}, std::vector<int>{2}),
                    input_error);
}
