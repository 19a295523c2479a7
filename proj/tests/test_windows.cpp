#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "relstack/rng.hpp"
#include "relstack/windows.hpp"

using namespace relstack;

TEST_CASE("window count follows the stride formula", "[windows]") {
  WindowSpec spec;
  spec.length = 256;
  spec.stride = 64;
  const std::vector<int> stream(512, 0);
  const auto windows = segment_windows(stream, spec);
  REQUIRE(windows.size() == 5);  // floor((512 - 256) / 64) + 1
  for (std::size_t i = 0; i < windows.size(); ++i) REQUIRE(windows[i].start == i * 64);

  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    WindowSpec s;
    s.length = 1 + rng.integer(64);
    s.stride = 1 + rng.integer(s.length);
    const std::size_t n = rng.integer(300);
    const std::vector<int> data(n, 0);
    const auto got = segment_windows(data, s).size();
    const std::size_t want = n < s.length ? 0 : (n - s.length) / s.stride + 1;
    REQUIRE(got == want);
  }
}

TEST_CASE("streams shorter than one window yield nothing", "[windows]") {
  WindowSpec spec;
  spec.length = 8;
  spec.stride = 2;
  REQUIRE(segment_windows(std::vector<int>(7, 1), spec).empty());
  REQUIRE(segment_windows(std::vector<int>{}, spec).empty());
  REQUIRE(segment_windows(std::vector<int>(8, 1), spec).size() == 1);
}

TEST_CASE("window labels compare the positive fraction strictly", "[windows]") {
  WindowSpec spec;
  spec.length = 4;
  spec.stride = 4;
  spec.gamma = 0.5;
  // exactly at gamma: 2 of 4 positives; strictly above: 3 of 4
  const std::vector<int> stream{1, 1, 0, 0, 1, 1, 1, 0};
  const auto windows = segment_windows(stream, spec);
  REQUIRE(windows.size() == 2);
  REQUIRE(windows[0].positive_fraction == 0.5);
  REQUIRE_FALSE(windows[0].label);  // equality does not cross the cutoff
  REQUIRE(windows[1].positive_fraction == 0.75);
  REQUIRE(windows[1].label);
}

TEST_CASE("overlapping windows share samples", "[windows]") {
  WindowSpec spec;
  spec.length = 4;
  spec.stride = 2;
  const std::vector<int> stream{0, 0, 1, 1, 1, 1, 0, 0};
  const auto windows = segment_windows(stream, spec);
  REQUIRE(windows.size() == 3);
  REQUIRE(windows[0].positive_fraction == 0.5);
  REQUIRE(windows[1].positive_fraction == 1.0);
  REQUIRE(windows[2].positive_fraction == 0.5);
}

TEST_CASE("window configuration and annotations are validated", "[windows]") {
  WindowSpec spec;
  spec.length = 4;
  spec.stride = 5;  // stride beyond length would skip samples
  REQUIRE_THROWS_AS(spec.validate(), config_error);
  spec.stride = 0;
  REQUIRE_THROWS_AS(spec.validate(), config_error);
  spec.stride = 2;
  spec.gamma = 1.0;
  REQUIRE_THROWS_AS(spec.validate(), config_error);
  spec.gamma = 0.0;
  REQUIRE_THROWS_AS(spec.validate(), config_error);
  spec.gamma = 0.5;
  spec.length = 0;
  REQUIRE_THROWS_AS(spec.validate(), config_error);

  WindowSpec ok;
  ok.length = 2;
  ok.stride = 1;
  REQUIRE_THROWS_AS(segment_windows(std::vector<int>{0, 2, 1}, ok), input_error);
  REQUIRE_THROWS_AS(segment_windows(std::vector<int>{0, -1}, ok), input_error);
}
