#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "relstack/common.hpp"

namespace relstack {

// One longitudinal visit. Features are optional; only the personalized
// residual path needs them.
struct Visit {
  std::string sample_id;
  double timestamp = 0.0;
  std::optional<std::vector<double>> features;
  double label = 0.0;
};

// A subject's visit history ordered by (timestamp, sample_id). The composite
// key makes ordering total and splits deterministic even with timestamp ties.
struct VisitSeries {
  std::string subject_id;
  std::vector<Visit> visits;

  static VisitSeries make(std::string subject_id, std::vector<Visit> visits) {
    if (visits.empty()) throw input_error("VisitSeries: subject " + subject_id + " has no visits");
    for (const auto& v : visits) {
      if (!std::isfinite(v.timestamp))
        throw input_error("VisitSeries: non-finite timestamp for " + v.sample_id);
      if (!std::isfinite(v.label)) throw input_error("VisitSeries: non-finite label for " + v.sample_id);
    }
    std::sort(visits.begin(), visits.end(), [](const Visit& a, const Visit& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      return a.sample_id < b.sample_id;
    });
    return {std::move(subject_id), std::move(visits)};
  }
};

// Prefix split: the first min(n_anchor, |visits|) visits are anchors, the
// rest are test. A subject whose test side comes out empty is flagged and
// must be excluded from evaluation rather than silently dropped.
struct AnchorSplit {
  std::string subject_id;
  std::vector<Visit> anchors;
  std::vector<Visit> test;
  bool excluded = false;  // no test visits remain

  std::vector<double> anchor_labels() const {
    std::vector<double> out;
    out.reserve(anchors.size());
    for (const auto& v : anchors) out.push_back(v.label);
    return out;
  }
};

// Every anchor must precede every test visit in the (timestamp, sample_id)
// order the series is defined over. Structurally true for a prefix split;
// asserted anyway so any future split variant inherits the check.
inline bool leak_free(const AnchorSplit& split) {
  if (split.anchors.empty() || split.test.empty()) return true;
  const Visit& last_anchor = split.anchors.back();
  const Visit& first_test = split.test.front();
  const auto key = [](const Visit& v) { return std::make_pair(v.timestamp, v.sample_id); };
  for (const auto& a : split.anchors)
    for (const auto& t : split.test)
      if (!(key(a) < key(t))) return false;
  return key(last_anchor) < key(first_test);
}

inline AnchorSplit split_anchors(const VisitSeries& series, std::size_t n_anchor) {
  AnchorSplit split;
  split.subject_id = series.subject_id;
  const std::size_t cut = std::min(n_anchor, series.visits.size());
  split.anchors.assign(series.visits.begin(), series.visits.begin() + static_cast<std::ptrdiff_t>(cut));
  split.test.assign(series.visits.begin() + static_cast<std::ptrdiff_t>(cut), series.visits.end());
  split.excluded = split.test.empty();
  require(leak_free(split), "split_anchors: anchor/test ordering violated");
  return split;
}

// Carry the chronologically last anchor label forward. Interface takes only
// anchor labels and a test count, so a leak is unrepresentable.
inline std::vector<double> last_anchor_baseline(std::span<const double> anchor_labels,
                                                std::size_t test_count) {
  require(!anchor_labels.empty(), "last_anchor_baseline: no anchors");
  return std::vector<double>(test_count, anchor_labels.back());
}

inline std::vector<double> anchor_mean_baseline(std::span<const double> anchor_labels,
                                                std::size_t test_count) {
  require(!anchor_labels.empty(), "anchor_mean_baseline: no anchors");
  double mean = 0.0;
  for (double v : anchor_labels) mean += v;
  mean /= static_cast<double>(anchor_labels.size());
  return std::vector<double>(test_count, mean);
}

inline std::vector<double> last_anchor_baseline(const AnchorSplit& split) {
  return last_anchor_baseline(split.anchor_labels(), split.test.size());
}

inline std::vector<double> anchor_mean_baseline(const AnchorSplit& split) {
  return anchor_mean_baseline(split.anchor_labels(), split.test.size());
}

inline double anchor_mean(const AnchorSplit& split) {
  require(!split.anchors.empty(), "anchor_mean: no anchors");
  double mean = 0.0;
  for (const auto& v : split.anchors) mean += v.label;
  return mean / static_cast<double>(split.anchors.size());
}

// Population-mean baseline: one constant fitted on training labels only.
struct MeanPredictor {
  double mean = 0.0;
  double operator()() const { return mean; }
};

inline MeanPredictor mean_predictor_baseline(std::span<const double> train_labels) {
  if (train_labels.empty()) throw input_error("mean_predictor_baseline: no training labels");
  double mean = 0.0;
  for (double v : train_labels) mean += v;
  return {mean / static_cast<double>(train_labels.size())};
}

struct ResidualTarget {
  std::vector<double> features;
  double residual = 0.0;
};

// Residual targets for the test visits: label minus the subject's anchor
// mean. Predictions recompose exactly as anchor_mean + predicted residual.
inline std::vector<ResidualTarget> personalized_residual_target(const AnchorSplit& split) {
  require(!split.anchors.empty(), "personalized_residual_target: no anchors");
  const double base = anchor_mean(split);
  std::vector<ResidualTarget> out;
  out.reserve(split.test.size());
  for (const auto& v : split.test) {
    require(v.features.has_value(), "personalized_residual_target: test visit without features");
    out.push_back({*v.features, v.label - base});
  }
  return out;
}

// Residual training rows drawn from the anchor visits themselves, so a
// downstream regressor never sees test information.
inline std::vector<ResidualTarget> anchor_residual_training_set(const AnchorSplit& split) {
  require(!split.anchors.empty(), "anchor_residual_training_set: no anchors");
  const double base = anchor_mean(split);
  std::vector<ResidualTarget> out;
  out.reserve(split.anchors.size());
  for (const auto& v : split.anchors) {
    require(v.features.has_value(), "anchor_residual_training_set: anchor visit without features");
    out.push_back({*v.features, v.label - base});
  }
  return out;
}

// Ordinary least squares with intercept, for the end-to-end residual path.
struct LinearModel {
  std::vector<double> coefficients;
  double intercept = 0.0;

  static LinearModel fit(const std::vector<ResidualTarget>& rows) {
    if (rows.empty()) throw input_error("LinearModel: no training rows");
    const std::size_t dim = rows.front().features.size();
    for (const auto& r : rows)
      if (r.features.size() != dim) throw input_error("LinearModel: ragged feature rows");
    Eigen::MatrixXd design(rows.size(), dim + 1);
    Eigen::VectorXd target(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      design(static_cast<Eigen::Index>(i), 0) = 1.0;
      for (std::size_t j = 0; j < dim; ++j)
        design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = rows[i].features[j];
      target(static_cast<Eigen::Index>(i)) = rows[i].residual;
    }
    const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(target);
    LinearModel model;
    model.intercept = beta(0);
    model.coefficients.resize(dim);
    for (std::size_t j = 0; j < dim; ++j)
      model.coefficients[j] = beta(static_cast<Eigen::Index>(j + 1));
    return model;
  }

  double predict(std::span<const double> features) const {
    require(features.size() == coefficients.size(), "LinearModel: feature dimension mismatch");
    double out = intercept;
    for (std::size_t j = 0; j < features.size(); ++j) out += coefficients[j] * features[j];
    return out;
  }
};

}  // namespace relstack
