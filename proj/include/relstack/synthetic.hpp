#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "relstack/common.hpp"
#include "relstack/rng.hpp"
#include "relstack/symptom.hpp"
#include "relstack/table.hpp"

namespace relstack {

// Seeded cohort generator. In-distribution rows are i.i.d. (so labels are
// exchangeable given the emitted features), the error probability rises
// linearly in the emitted uncertainty via error_uncertainty_corr, and
// ood_fraction of rows carries an elevated ood score. Node observability
// follows the named coverage pattern; node values themselves are filler.
struct SyntheticSpec {
  TaskKind task = TaskKind::classification;
  std::size_t subjects_val = 100;
  std::size_t subjects_test = 200;
  std::size_t visits_per_subject = 1;
  int num_classes = 3;
  double base_error = 0.25;             // classification error prob at median uncertainty
  double error_uncertainty_corr = 0.5;  // slope of error probability in uncertainty
  double ood_fraction = 0.1;
  double ood_error_boost = 0.0;         // extra error probability for ood rows
  double noise = 1.0;                   // regression label noise scale
  std::string coverage_pattern = "ppmi";
  double missing_within_observable = 0.0;  // per-node dropout, reliability node exempt
  std::uint64_t seed = 1;

  void validate() const {
    if (subjects_val == 0 || subjects_test == 0)
      throw config_error("SyntheticSpec: need at least one subject per split");
    if (visits_per_subject == 0) throw config_error("SyntheticSpec: visits_per_subject >= 1");
    if (task == TaskKind::classification && num_classes < 2)
      throw config_error("SyntheticSpec: need at least two classes");
    if (!(base_error >= 0.0 && base_error <= 1.0))
      throw config_error("SyntheticSpec: base_error outside [0, 1]");
    if (!(ood_fraction >= 0.0 && ood_fraction <= 1.0))
      throw config_error("SyntheticSpec: ood_fraction outside [0, 1]");
    if (!(missing_within_observable >= 0.0 && missing_within_observable < 1.0))
      throw config_error("SyntheticSpec: missing_within_observable outside [0, 1)");
    if (!(noise > 0.0)) throw config_error("SyntheticSpec: noise must be positive");
  }
};

namespace detail {

inline std::string padded_id(const char* stem, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%06zu", stem, i);
  return buf;
}

}  // namespace detail

inline SampleTable generate_synthetic_cohort(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const ObservableSet obs = ObservableSet::pattern(spec.coverage_pattern);
  obs.validate();

  SampleTable table;
  table.task = spec.task;
  table.num_classes = spec.task == TaskKind::classification ? spec.num_classes : 0;
  table.payload_is_probs = false;  // classification payload is logits
  table.has_split = true;

  const std::size_t total_subjects = spec.subjects_val + spec.subjects_test;
  std::size_t sample_counter = 0;
  const auto rel_node = static_cast<std::size_t>(SymptomNode::reliability_state);

  for (std::size_t subject = 0; subject < total_subjects; ++subject) {
    const Split split = subject < spec.subjects_val ? Split::val : Split::test;
    for (std::size_t visit = 0; visit < spec.visits_per_subject; ++visit) {
      SampleRow row;
      row.sample_id = detail::padded_id("s", sample_counter++);
      row.subject_id = detail::padded_id("subj", subject);
      row.dataset_id = spec.coverage_pattern;
      row.timestamp = static_cast<double>(visit);
      row.split = split;

      const double u = rng.uniform();
      const bool is_ood = rng.bernoulli(spec.ood_fraction);
      row.uncertainty = u;
      row.ood = is_ood ? rng.uniform(0.65, 1.0) : rng.uniform(0.0, 0.35);
      row.quality = rng.uniform(0.85, 1.0);

      for (std::size_t j = 0; j < kNumNodes; ++j) {
        if (!obs.observable[j]) continue;
        if (j != rel_node && rng.bernoulli(spec.missing_within_observable)) continue;
        if (j != rel_node) row.nodes[j] = rng.uniform();
      }

      if (spec.task == TaskKind::classification) {
        const int k = spec.num_classes;
        double err = spec.base_error + spec.error_uncertainty_corr * (u - 0.5) +
                     (is_ood ? spec.ood_error_boost : 0.0);
        err = std::clamp(err, 0.02, 0.98);
        const int truth = static_cast<int>(rng.integer(static_cast<std::uint64_t>(k)));
        const bool correct = !rng.bernoulli(err);
        int emitted = truth;
        if (!correct)
          emitted = (truth + 1 +
                     static_cast<int>(rng.integer(static_cast<std::uint64_t>(k - 1)))) %
                    k;
        double confidence = 1.0 - err + 0.05 * rng.normal();
        confidence = std::clamp(confidence, 1.0 / static_cast<double>(k) + 0.01, 0.995);
        const double rest = (1.0 - confidence) / static_cast<double>(k - 1);
        row.class_scores.resize(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c)
          row.class_scores[static_cast<std::size_t>(c)] =
              std::log(c == emitted ? confidence : rest);
        row.label = static_cast<double>(truth);
      } else {
        const double mu = 10.0 + 5.0 * rng.normal();
        const double z = rng.normal();
        const double y = mu + spec.noise * z;
        row.point = mu;
        row.q_low = mu - 0.8 * spec.noise;
        row.q_high = mu + 0.8 * spec.noise;
        row.label = y;
        const double tied = std::min(std::abs(z) / 3.0, 1.0);
        row.uncertainty = std::clamp(spec.error_uncertainty_corr * tied +
                                         (1.0 - spec.error_uncertainty_corr) * u,
                                     0.0, 1.0);
      }

      // reliability node: self-consistent product; uncertainty is already on [0, 1]
      {
        std::size_t seen = 0, present = 0;
        for (std::size_t j = 0; j < kNumNodes; ++j) {
          if (!obs.observable[j] || j == rel_node) continue;
          ++seen;
          if (row.nodes[j]) ++present;
        }
        const double c =
            seen == 0 ? 1.0
                      : (static_cast<double>(present) + 1.0) / (static_cast<double>(seen) + 1.0);
        row.nodes[rel_node] = reliability_state(c, row.quality, row.uncertainty);
      }

      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace relstack
