#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <optional>
#include <vector>

#include "relstack/quantiles.hpp"
#include "relstack/rng.hpp"

using namespace relstack;

TEST_CASE("kth_smallest selects order statistics", "[quantiles]") {
  std::vector<double> v{3.0, 1.0, 2.0, 5.0, 4.0};
  REQUIRE(kth_smallest(v, 1) == 1.0);
  REQUIRE(kth_smallest(v, 3) == 3.0);
  REQUIRE(kth_smallest(v, 5) == 5.0);
  REQUIRE_THROWS_AS(kth_smallest(std::vector<double>{}, 1), contract_violation);
  REQUIRE_THROWS_AS(kth_smallest(v, 0), contract_violation);
  REQUIRE_THROWS_AS(kth_smallest(v, 6), contract_violation);
}

TEST_CASE("nearest-rank percentile uses k = ceil(p/100 * (n+1)) clamped to [1, n]", "[quantiles]") {
  const std::vector<double> five{0.0, 0.25, 0.5, 0.75, 1.0};
  REQUIRE(nearest_rank_percentile(five, 20.0) == 0.25);
  REQUIRE(nearest_rank_percentile(five, 70.0) == 1.0);   // k = ceil(4.2) = 5
  REQUIRE(nearest_rank_percentile(five, 85.0) == 1.0);   // k = 6 clamps to 5
  REQUIRE(nearest_rank_percentile(five, 0.001) == 0.0);  // k clamps to 1

  const std::vector<double> nine{0.05, 0.1, 0.2, 0.3, 0.45, 0.55, 0.7, 0.8, 0.95};
  REQUIRE(nearest_rank_percentile(nine, 20.0) == 0.1);
  REQUIRE(nearest_rank_percentile(nine, 70.0) == 0.7);
  REQUIRE(nearest_rank_percentile(nine, 85.0) == 0.95);

  REQUIRE(nearest_rank_percentile(std::vector<double>{7.0}, 50.0) == 7.0);
  REQUIRE_THROWS_AS(nearest_rank_percentile(std::vector<double>{}, 50.0), config_error);
  REQUIRE_THROWS_AS(nearest_rank_percentile(five, -1.0), config_error);
  REQUIRE_THROWS_AS(nearest_rank_percentile(five, 0.0), config_error);
  REQUIRE_THROWS_AS(nearest_rank_percentile(five, 100.0), config_error);
}

TEST_CASE("percentile result is always a sample element", "[quantiles]") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + rng.integer(30));
    for (auto& x : v) x = rng.uniform();
    const double p = rng.uniform(1.0, 99.0);
    const double q = nearest_rank_percentile(v, p);
    REQUIRE(std::count(v.begin(), v.end(), q) > 0);
  }
}

TEST_CASE("conformal rank matches exact integer arithmetic", "[quantiles]") {
  // k = ceil((n+1)(1-alpha)); nullopt when k > n (q_hat unbounded).
  REQUIRE(conformal_rank(4, 0.2) == 4u);
  REQUIRE(conformal_rank(5, 0.2) == 5u);
  REQUIRE(conformal_rank(3, 0.2) == std::nullopt);
  REQUIRE(conformal_rank(9, 0.1) == 9u);
  REQUIRE(conformal_rank(19, 0.05) == 19u);
  REQUIRE(conformal_rank(1, 0.5) == 1u);
  REQUIRE(conformal_rank(4, 0.5) == 3u);
  REQUIRE(conformal_rank(200, 0.2) == 161u);
  REQUIRE(conformal_rank(0, 0.2) == std::nullopt);  // rank 1 exceeds n = 0
  REQUIRE_THROWS_AS(conformal_rank(10, 0.0), config_error);
  REQUIRE_THROWS_AS(conformal_rank(10, 1.0), config_error);
}

TEST_CASE("conformal rank floating-point guard at exact integer products", "[quantiles]") {
  // (n+1)(1-alpha) lands on an integer; a naive ceil of the float product can
  // overshoot by one when the product rounds a hair above that integer.
  for (std::size_t n : {4u, 9u, 19u, 39u, 79u}) {
    const auto k = conformal_rank(n, 0.2);
    REQUIRE(k.has_value());
    REQUIRE(*k == (n + 1) * 4 / 5);  // exact integer form of (n+1)(1-0.2)
  }
}
