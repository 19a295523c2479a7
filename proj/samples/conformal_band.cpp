// Conformal calibration without the pipeline: wrap a fixed quantile band
// around held-out residuals, then check empirical coverage on fresh draws.
// The band is deliberately too narrow before calibration; the fitted margin
// widens it until the target coverage holds.
//
//   ./build/samples/conformal_band

#include <iostream>
#include <vector>

#include "relstack/calibration.hpp"
#include "relstack/rng.hpp"

int main() {
  relstack::Rng rng(42);

  std::vector<relstack::RegressorOutput> calibration(2000);
  for (auto& c : calibration) {
    c.point = 0.0;
    c.q_low = -1.0;
    c.q_high = 1.0;
    c.label = 1.5 * rng.normal();
  }
  const auto model = relstack::fit_conformal_regression(calibration, 0.1);
  std::cout << "margin q_hat " << model.q_hat << " from " << model.n_cal
            << " calibration scores\n";

  relstack::RegressorOutput probe;
  probe.point = 0.0;
  probe.q_low = -1.0;
  probe.q_high = 1.0;
  const auto band = relstack::apply_conformal_regression(probe, model);
  std::cout << "calibrated band [" << band.lo << ", " << band.hi << "]\n";

  constexpr std::size_t kTrials = 10000;
  std::size_t covered = 0;
  for (std::size_t i = 0; i < kTrials; ++i) {
    const double y = 1.5 * rng.normal();
    if (y >= band.lo && y <= band.hi) ++covered;
  }
  std::cout << "empirical coverage " << static_cast<double>(covered) / kTrials
            << " against target 0.9\n";
  return 0;
}
