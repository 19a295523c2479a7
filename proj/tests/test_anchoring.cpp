#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "relstack/anchoring.hpp"
#include "relstack/rng.hpp"

using namespace relstack;
using Catch::Approx;

namespace {

Visit visit(std::string id, double t, double label) {
  Visit v;
  v.sample_id = std::move(id);
  v.timestamp = t;
  v.label = label;
  return v;
}

Visit visit_f(std::string id, double t, std::vector<double> features, double label) {
  Visit v = visit(std::move(id), t, label);
  v.features = std::move(features);
  return v;
}

}  // namespace

TEST_CASE("visit series order is total even with timestamp ties", "[anchoring]") {
  auto series = VisitSeries::make(
      "s1", {visit("v3", 10.0, 3.0), visit("v1", 5.0, 1.0), visit("v2", 5.0, 2.0)});
  REQUIRE(series.visits[0].sample_id == "v1");  // ties broken by sample_id
  REQUIRE(series.visits[1].sample_id == "v2");
  REQUIRE(series.visits[2].sample_id == "v3");

  REQUIRE_THROWS_AS(VisitSeries::make("s2", {}), input_error);
  REQUIRE_THROWS_AS(
      VisitSeries::make("s3", {visit("v1", std::numeric_limits<double>::quiet_NaN(), 0.0)}),
      input_error);
  REQUIRE_THROWS_AS(
      VisitSeries::make("s4", {visit("v1", 0.0, std::numeric_limits<double>::infinity())}),
      input_error);
}

TEST_CASE("anchor split takes a prefix and flags empty test sides", "[anchoring]") {
  const auto series = VisitSeries::make(
      "s1", {visit("v1", 1.0, 1.0), visit("v2", 2.0, 2.0), visit("v3", 3.0, 3.0)});

  auto split = split_anchors(series, 2);
  REQUIRE(split.anchors.size() == 2);
  REQUIRE(split.test.size() == 1);
  REQUIRE(split.test.front().sample_id == "v3");
  REQUIRE_FALSE(split.excluded);
  REQUIRE(leak_free(split));
  REQUIRE(split.anchor_labels() == std::vector<double>{1.0, 2.0});

  // asking for more anchors than visits leaves nothing to test on
  split = split_anchors(series, 3);
  REQUIRE(split.excluded);
  REQUIRE(split.test.empty());
  split = split_anchors(series, 10);
  REQUIRE(split.excluded);
  REQUIRE(split.anchors.size() == 3);
}

TEST_CASE("leak detection rejects any anchor at or after a test visit", "[anchoring]") {
  AnchorSplit bad;
  bad.subject_id = "s1";
  bad.anchors = {visit("a1", 1.0, 0.0), visit("a2", 5.0, 0.0)};
  bad.test = {visit("t1", 3.0, 0.0)};
  REQUIRE_FALSE(leak_free(bad));

  // equal composite keys also count as leakage
  AnchorSplit tied;
  tied.anchors = {visit("x", 2.0, 0.0)};
  tied.test = {visit("x", 2.0, 0.0)};
  REQUIRE_FALSE(leak_free(tied));

  // a timestamp tie resolved by sample_id order is fine
  AnchorSplit tie_ok;
  tie_ok.anchors = {visit("a", 2.0, 0.0)};
  tie_ok.test = {visit("b", 2.0, 0.0)};
  REQUIRE(leak_free(tie_ok));

  // one-sided splits are vacuously clean
  AnchorSplit empty_test;
  empty_test.anchors = {visit("a", 1.0, 0.0)};
  REQUIRE(leak_free(empty_test));
}

TEST_CASE("carry-forward and anchor-mean baselines match their one-liners", "[anchoring]") {
  const std::vector<double> labels{1.0, 3.0, 8.0};
  const auto carried = last_anchor_baseline(labels, 4);
  REQUIRE(carried == std::vector<double>(4, 8.0));
  const auto mean = anchor_mean_baseline(labels, 2);
  REQUIRE(mean == std::vector<double>(2, 4.0));

  REQUIRE_THROWS_AS(last_anchor_baseline(std::vector<double>{}, 3), contract_violation);
  REQUIRE_THROWS_AS(anchor_mean_baseline(std::vector<double>{}, 3), contract_violation);

  const auto series = VisitSeries::make(
      "s1", {visit("v1", 1.0, 2.0), visit("v2", 2.0, 6.0), visit("v3", 3.0, 0.0),
             visit("v4", 4.0, 0.0)});
  const auto split = split_anchors(series, 2);
  REQUIRE(last_anchor_baseline(split) == std::vector<double>(2, 6.0));
  REQUIRE(anchor_mean_baseline(split) == std::vector<double>(2, 4.0));
  REQUIRE(anchor_mean(split) == 4.0);
}

TEST_CASE("a single anchor makes both baselines agree", "[anchoring]") {
  const auto series = VisitSeries::make(
      "s1", {visit("v1", 1.0, 5.5), visit("v2", 2.0, 1.0), visit("v3", 3.0, 9.0)});
  const auto split = split_anchors(series, 1);
  REQUIRE(last_anchor_baseline(split) == anchor_mean_baseline(split));
  REQUIRE(last_anchor_baseline(split) == std::vector<double>(2, 5.5));
}

TEST_CASE("pooled mean predictor averages training labels", "[anchoring]") {
  const std::vector<double> labels{2.0, 4.0, 9.0};
  const auto model = mean_predictor_baseline(labels);
  REQUIRE(model.mean == 5.0);
  REQUIRE(model() == 5.0);
  REQUIRE_THROWS_AS(mean_predictor_baseline(std::vector<double>{}), input_error);
}

TEST_CASE("residual targets recompose exactly to the original labels", "[anchoring]") {
  const auto series = VisitSeries::make(
      "s1", {visit_f("v1", 1.0, {0.1}, 2.0), visit_f("v2", 2.0, {0.2}, 3.0),
             visit_f("v3", 3.0, {0.7}, 7.3), visit_f("v4", 4.0, {0.9}, -1.25)});
  const auto split = split_anchors(series, 2);
  const double base = anchor_mean(split);

  const auto targets = personalized_residual_target(split);
  REQUIRE(targets.size() == 2);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    // bitwise identity, not approximate: recomposition must be exact
    REQUIRE(base + targets[i].residual == split.test[i].label);
  }

  const auto train = anchor_residual_training_set(split);
  REQUIRE(train.size() == 2);
  REQUIRE(train[0].features == std::vector<double>{0.1});
  REQUIRE(base + train[0].residual == split.anchors[0].label);

  auto no_features = split_anchors(
      VisitSeries::make("s2", {visit("v1", 1.0, 0.0), visit("v2", 2.0, 0.0)}), 1);
  REQUIRE_THROWS_AS(personalized_residual_target(no_features), contract_violation);
  REQUIRE_THROWS_AS(anchor_residual_training_set(no_features), contract_violation);
}

TEST_CASE("least squares recovers planted coefficients", "[anchoring]") {
  Rng rng(17);
  std::vector<ResidualTarget> rows;
  for (int i = 0; i < 40; ++i) {
    const double x0 = rng.uniform() * 4.0 - 2.0;
    const double x1 = rng.uniform() * 4.0 - 2.0;
    rows.push_back({{x0, x1}, 0.75 - 1.5 * x0 + 0.25 * x1});
  }
  const auto model = LinearModel::fit(rows);
  REQUIRE(model.intercept == Approx(0.75).margin(1e-9));
  REQUIRE(model.coefficients[0] == Approx(-1.5).margin(1e-9));
  REQUIRE(model.coefficients[1] == Approx(0.25).margin(1e-9));
  REQUIRE(model.predict(std::vector<double>{1.0, 1.0}) == Approx(-0.5).margin(1e-9));

  REQUIRE_THROWS_AS(LinearModel::fit({}), input_error);
  REQUIRE_THROWS_AS(LinearModel::fit({{{1.0, 2.0}, 0.0}, {{1.0}, 0.0}}), input_error);
  REQUIRE_THROWS_AS(model.predict(std::vector<double>{1.0}), contract_violation);
}

TEST_CASE("anchor splits stay leak-free under random histories", "[anchoring]") {
  Rng rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Visit> visits;
    const int n = 2 + static_cast<int>(rng.integer(8));
    for (int i = 0; i < n; ++i) {
      // coarse integer timestamps force frequent ties
      visits.push_back(visit("v" + std::to_string(i), std::floor(rng.uniform() * 4.0),
                             rng.uniform()));
    }
    const auto series = VisitSeries::make("s", std::move(visits));
    for (std::size_t k = 1; k < static_cast<std::size_t>(n); ++k) {
      const auto split = split_anchors(series, k);
      REQUIRE(leak_free(split));
      REQUIRE(split.anchors.size() + split.test.size() == static_cast<std::size_t>(n));
    }
  }
}
