// End-to-end tour: synthesize a small cohort, calibrate on its validation
// block, freeze the routing thresholds, route the test block, and report
// the action mix with the selective-accuracy payoff.
//
//   ./build/samples/quickstart

#include <cstddef>
#include <iostream>

#include "relstack/relstack.hpp"

int main() {
  relstack::SyntheticSpec spec;
  spec.subjects_val = 100;
  spec.subjects_test = 200;
  spec.error_uncertainty_corr = 0.6;
  spec.ood_fraction = 0.1;
  spec.ood_error_boost = 0.2;
  spec.seed = 7;

  relstack::PipelineConfig config;
  config.alpha = 0.2;  // conformal miscoverage budget
  config.tau_c = 0.5;  // completeness floor, a policy choice rather than a fit

  const auto art = relstack::run_pipeline(config, relstack::generate_synthetic_cohort(spec));

  std::cout << "thresholds digest " << art.thresholds.digest << "\n";
  const auto& s = art.summary;
  for (std::size_t a = 0; a < s.counts.size(); ++a)
    std::cout << relstack::kActionNames[a] << " " << s.counts[a] << "\n";

  const auto& predict_acc = s.conditional[static_cast<std::size_t>(relstack::Action::predict)];
  if (predict_acc && s.overall)
    std::cout << "accuracy on PREDICT rows " << *predict_acc << " vs " << *s.overall
              << " with no rejection\n";
  return 0;
}
