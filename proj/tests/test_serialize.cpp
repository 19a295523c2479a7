#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <string>

#include "relstack/router.hpp"
#include "relstack/serialize.hpp"

using namespace relstack;

namespace {

ThresholdConfig reference_config() {
  ThresholdConfig cfg;
  cfg.tau_q = 0.9816;
  cfg.tau_c = 1.0;
  cfg.tau_ood = 0.5706;
  cfg.tau_u_abstain = 0.2182;
  cfg.tau_u_refer = 0.2427;
  cfg.tau_w = 3.0;
  cfg.coverage_budget = 0.8;
  cfg.refer_uses_uncertainty = false;
  cfg.frozen = true;
  return cfg;
}

}  // namespace

TEST_CASE("sha256 matches the published test vectors", "[serialize]") {
  REQUIRE(sha256_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  REQUIRE(sha256_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("the canonical threshold form and its digest are stable", "[serialize]") {
  const auto cfg = reference_config();
  REQUIRE(canonical_threshold_json(cfg) ==
          "{\"coverage_budget\":8.000000000e-01,\"frozen\":true,\"quantile_spec\":"
          "{\"ood_pct\":8.500000000e+01,\"quality_pct\":2.000000000e+01,"
          "\"u_abstain_pct\":7.000000000e+01,\"u_refer_pct\":8.500000000e+01},"
          "\"refer_uses_uncertainty\":false,\"tau_c\":1.000000000e+00,"
          "\"tau_ood\":5.706000000e-01,\"tau_q\":9.816000000e-01,"
          "\"tau_u_abstain\":2.182000000e-01,\"tau_u_refer\":2.427000000e-01,"
          "\"tau_w\":3.000000000e+00}");
  REQUIRE(threshold_digest(cfg) ==
          "a8f4063bc2ba6e7e3ad7bea39a78278ab558fc52275e2b0b64342eac3b6f384e");
}

TEST_CASE("every policy field feeds the digest", "[serialize]") {
  const auto base = threshold_digest(reference_config());
  auto probe = [&](auto&& mutate) {
    auto cfg = reference_config();
    mutate(cfg);
    REQUIRE(threshold_digest(cfg) != base);
  };
  probe([](ThresholdConfig& c) { c.tau_q += 1e-9; });
  probe([](ThresholdConfig& c) { c.tau_c -= 1e-9; });
  probe([](ThresholdConfig& c) { c.tau_ood += 1e-9; });
  probe([](ThresholdConfig& c) { c.tau_u_abstain += 1e-9; });
  probe([](ThresholdConfig& c) { c.tau_u_refer += 1e-9; });
  probe([](ThresholdConfig& c) { c.tau_w += 1e-9; });
  probe([](ThresholdConfig& c) { c.coverage_budget += 1e-9; });
  probe([](ThresholdConfig& c) { c.refer_uses_uncertainty = true; });
  probe([](ThresholdConfig& c) { c.frozen = false; });
  probe([](ThresholdConfig& c) { c.quantile_spec.quality_pct = 25.0; });
}

TEST_CASE("freezing stamps the flag and validates before digesting", "[serialize]") {
  ThresholdConfig cfg = reference_config();
  cfg.frozen = false;
  const auto frozen = freeze_with_digest(cfg);
  REQUIRE(frozen.config.frozen);
  REQUIRE(frozen.digest == threshold_digest(frozen.config));

  cfg.tau_w = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(freeze_with_digest(cfg), config_error);
}

TEST_CASE("threshold json round-trips to the same digest", "[serialize]") {
  const auto cfg = reference_config();
  const auto j = to_json(cfg);
  const auto back = threshold_config_from_json(json::parse(j.dump()));
  REQUIRE(threshold_digest(back) == threshold_digest(cfg));
  REQUIRE(back.quantile_spec.u_refer_pct == cfg.quantile_spec.u_refer_pct);
}

TEST_CASE("metric serialization rounds and nulls non-finite values", "[serialize]") {
  REQUIRE(round6(0.1234564999) == 0.123456);
  REQUIRE(round6(-1.9999995) == -2.0);
  REQUIRE(json_metric(0.5) == json(0.5));
  REQUIRE(json_metric(std::numeric_limits<double>::infinity()).is_null());
  REQUIRE(json_metric(std::nan("")).is_null());
  REQUIRE(json_metric(std::optional<double>{}).is_null());
  REQUIRE(json_metric(std::optional<double>{0.25}) == json(0.25));
}

TEST_CASE("audit lines null the comparison for clean predictions", "[serialize]") {
  RoutingDecision d;
  d.sample_id = "s1";
  d.action = Action::predict;
  d.trigger = Trigger::none;
  d.config_digest = "dg";
  auto j = to_json(d);
  REQUIRE(j["action"] == "PREDICT");
  REQUIRE(j["trigger"] == "none");
  REQUIRE(j["trigger_value"].is_null());
  REQUIRE(j["threshold_value"].is_null());
  REQUIRE(j["config_digest"] == "dg");

  d.action = Action::refer;
  d.trigger = Trigger::ood;
  d.trigger_value = 0.71828182845904523;
  d.threshold_value = 0.5706;
  j = to_json(d);
  REQUIRE(j["action"] == "REFER");
  REQUIRE(j["trigger"] == "ood");
  // full precision, not the rounded metric form
  REQUIRE(j["trigger_value"].get<double>() == 0.71828182845904523);
  REQUIRE(j["threshold_value"].get<double>() == 0.5706);
}

TEST_CASE("calibration documents round-trip including the unbounded case", "[serialize]") {
  ConformalModel conformal;
  conformal.score_kind = ScoreKind::classification_score;
  conformal.alpha = 0.2;
  conformal.q_hat = 0.4125;
  conformal.n_cal = 200;
  TemperatureModel temp;
  temp.temperature = 1.5;

  auto j = calibration_to_json(conformal, temp);
  REQUIRE(j["kind"] == "classification");
  REQUIRE(j["q_hat"].get<double>() == 0.4125);
  REQUIRE(j["T"].get<double>() == 1.5);
  auto doc = calibration_from_json(json::parse(j.dump()));
  REQUIRE(doc.conformal.score_kind == ScoreKind::classification_score);
  REQUIRE(doc.conformal.q_hat == 0.4125);
  REQUIRE(doc.conformal.n_cal == 200);
  REQUIRE_FALSE(doc.conformal.unbounded);
  REQUIRE(doc.temperature.has_value());
  REQUIRE(doc.temperature->temperature == 1.5);

  // unbounded regression model: q_hat serializes as null, loads back as +inf
  ConformalModel wide;
  wide.score_kind = ScoreKind::regression_residual;
  wide.alpha = 0.05;
  wide.q_hat = std::numeric_limits<double>::infinity();
  wide.unbounded = true;
  wide.n_cal = 3;
  j = calibration_to_json(wide, std::nullopt);
  REQUIRE(j["kind"] == "regression");
  REQUIRE(j["q_hat"].is_null());
  REQUIRE(j["T"].is_null());
  REQUIRE(j["unbounded"] == true);
  doc = calibration_from_json(json::parse(j.dump()));
  REQUIRE(doc.conformal.unbounded);
  REQUIRE(std::isinf(doc.conformal.q_hat));
  REQUIRE_FALSE(doc.temperature.has_value());
}

TEST_CASE("normalizer bounds round-trip at full precision", "[serialize]") {
  MinMaxNormalizer n{0.123456789012345, 0.987654321098765};
  const auto back = normalizer_from_json(json::parse(to_json(n).dump()));
  REQUIRE(back.lo == n.lo);
  REQUIRE(back.hi == n.hi);
}

TEST_CASE("action summaries serialize under uppercase action keys", "[serialize]") {
  ActionSummary s;
  s.total = 4;
  s.counts = {2, 1, 1, 0};
  s.fractions = {0.5, 0.25, 0.25, 0.0};
  s.conditional[0] = 0.5;
  s.overall = 0.5;
  s.kind = OutcomeKind::accuracy;
  const auto j = to_json(s);
  REQUIRE(j["total"] == 4);
  REQUIRE(j["outcome"] == "accuracy");
  REQUIRE(j["actions"]["PREDICT"]["count"] == 2);
  REQUIRE(j["actions"]["PREDICT"]["conditional"] == json(0.5));
  REQUIRE(j["actions"]["ABSTAIN"]["count"] == 1);
  REQUIRE(j["actions"]["REACQUIRE"]["count"] == 1);
  REQUIRE(j["actions"]["REFER"]["count"] == 0);
  REQUIRE(j["actions"]["REFER"]["conditional"].is_null());
  REQUIRE(j["overall"] == json(0.5));
}
