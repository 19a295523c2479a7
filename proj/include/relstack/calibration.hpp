#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "relstack/common.hpp"
#include "relstack/quantiles.hpp"

namespace relstack {

// Raw model output for one classification sample. Either logits or
// probabilities may be present; probabilities must form a distribution.
struct ClassifierOutput {
  std::vector<double> logits;         // empty when only probabilities are known
  std::vector<double> probabilities;  // empty when only logits are known
  std::optional<int> label;

  std::size_t num_classes() const { return logits.empty() ? probabilities.size() : logits.size(); }

  void validate() const {
    const std::size_t k = num_classes();
    if (k < 2) throw input_error("ClassifierOutput: need at least two classes");
    if (!logits.empty() && !probabilities.empty() && logits.size() != probabilities.size())
      throw input_error("ClassifierOutput: logit/probability size mismatch");
    for (double z : logits)
      if (!std::isfinite(z)) throw input_error("ClassifierOutput: non-finite logit");
    if (!probabilities.empty()) {
      double sum = 0.0;
      for (double p : probabilities) {
        if (!(p >= 0.0) || !std::isfinite(p))
          throw input_error("ClassifierOutput: negative or non-finite probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw input_error("ClassifierOutput: probabilities sum to " + std::to_string(sum));
    }
    if (label && (*label < 0 || static_cast<std::size_t>(*label) >= k))
      throw input_error("ClassifierOutput: label out of range");
  }
};

// Raw model output for one regression sample: point estimate plus a
// pre-calibration quantile band.
struct RegressorOutput {
  double point = 0.0;
  double q_low = 0.0;
  double q_high = 0.0;
  std::optional<double> label;

  void validate() const {
    if (!(std::isfinite(point) && std::isfinite(q_low) && std::isfinite(q_high)))
      throw input_error("RegressorOutput: non-finite field");
    if (q_low > q_high) throw input_error("RegressorOutput: q_low > q_high");
    if (label && !std::isfinite(*label)) throw input_error("RegressorOutput: non-finite label");
  }
};

enum class PredictionKind { classification, regression };
enum class ScoreKind { regression_residual, classification_score };

// A fitted split-conformal calibrator. unbounded means the finite-sample rank
// exceeded n_cal and q_hat is +infinity (intervals and sets degenerate to
// everything); callers should treat that as a warning about n_cal.
struct ConformalModel {
  ScoreKind score_kind = ScoreKind::regression_residual;
  double alpha = 0.1;
  double q_hat = 0.0;
  std::size_t n_cal = 0;
  bool unbounded = false;
};

struct TemperatureModel {
  double temperature = 1.0;
  double nll_before = 0.0;
  double nll_after = 0.0;
  bool single_class_warning = false;
};

// Calibrated output for one sample, in either task family. width is the
// abstention-relevant size: prediction-set cardinality or interval length.
struct CalibratedPrediction {
  PredictionKind kind = PredictionKind::classification;
  // classification
  std::vector<double> probabilities;
  std::vector<int> prediction_set;  // ascending class indices, never empty
  int point_class = 0;
  bool empty_set_fallback = false;  // set was empty pre-fallback at this q_hat
  // regression
  double lo = 0.0;
  double hi = 0.0;
  double point = 0.0;
  bool unbounded = false;
  double width = 0.0;
};

// Signed conformity score of a label against a quantile band. Negative means
// the label sits strictly inside the band.
inline double conformal_residual(double y, double q_low, double q_high) {
  if (!(std::isfinite(y) && std::isfinite(q_low) && std::isfinite(q_high)))
    throw input_error("conformal_residual: non-finite input");
  if (q_low > q_high) throw input_error("conformal_residual: q_low > q_high");
  return std::max(q_low - y, y - q_high);
}

namespace detail {

inline ConformalModel fit_conformal_from_scores(std::vector<double> scores, double alpha,
                                                ScoreKind kind) {
  if (scores.empty()) throw config_error("fit_conformal: empty calibration split");
  ConformalModel model;
  model.score_kind = kind;
  model.alpha = alpha;
  model.n_cal = scores.size();
  const auto rank = conformal_rank(scores.size(), alpha);
  if (!rank) {
    model.q_hat = std::numeric_limits<double>::infinity();
    model.unbounded = true;
    return model;
  }
  model.q_hat = kth_smallest(std::move(scores), *rank);
  return model;
}

}  // namespace detail

// Split-conformal regression calibrator. Scores are signed residuals, so
// q_hat can be negative and the calibrated interval narrower than the raw
// band; pass clamp_at_zero to forbid narrowing.
inline ConformalModel fit_conformal_regression(std::span<const RegressorOutput> calibration,
                                               double alpha, bool clamp_at_zero = false) {
  std::vector<double> scores;
  scores.reserve(calibration.size());
  for (const auto& c : calibration) {
    c.validate();
    require(c.label.has_value(), "fit_conformal_regression: calibration sample without label");
    scores.push_back(conformal_residual(*c.label, c.q_low, c.q_high));
  }
  ConformalModel model =
      detail::fit_conformal_from_scores(std::move(scores), alpha, ScoreKind::regression_residual);
  if (clamp_at_zero && !model.unbounded) model.q_hat = std::max(model.q_hat, 0.0);
  return model;
}

inline CalibratedPrediction apply_conformal_regression(const RegressorOutput& pred,
                                                       const ConformalModel& model) {
  require(model.score_kind == ScoreKind::regression_residual,
          "apply_conformal_regression: model was fitted on classification scores");
  pred.validate();
  CalibratedPrediction out;
  out.kind = PredictionKind::regression;
  out.point = pred.point;
  if (model.unbounded) {
    out.lo = -std::numeric_limits<double>::infinity();
    out.hi = std::numeric_limits<double>::infinity();
    out.unbounded = true;
    out.width = std::numeric_limits<double>::infinity();
    return out;
  }
  out.lo = pred.q_low - model.q_hat;
  out.hi = pred.q_high + model.q_hat;
  out.width = (pred.q_high - pred.q_low) + 2.0 * model.q_hat;
  return out;
}

// Numerically stable softmax (max subtraction). Argmax is preserved exactly.
inline std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw input_error("softmax: empty logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

inline std::vector<double> softmax_temperature(std::span<const double> logits, double temperature) {
  require(temperature > 0.0 && std::isfinite(temperature),
          "softmax_temperature: temperature must be positive");
  std::vector<double> scaled(logits.begin(), logits.end());
  for (double& z : scaled) z /= temperature;
  return softmax(scaled);
}

namespace detail {

inline double mean_nll(std::span<const ClassifierOutput> calibration, double temperature) {
  double total = 0.0;
  for (const auto& c : calibration) {
    const auto& z = c.logits;
    const int y = *c.label;
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : z) peak = std::max(peak, v / temperature);
    double lse = 0.0;
    for (double v : z) lse += std::exp(v / temperature - peak);
    total += (peak + std::log(lse)) - z[static_cast<std::size_t>(y)] / temperature;
  }
  return total / static_cast<double>(calibration.size());
}

}  // namespace detail

// Single-parameter temperature scaling by golden-section search over
// log T in [-4, 4] (tolerance 1e-4). T = 1 is always a candidate, so the
// fitted NLL never exceeds the unscaled NLL. A single-class calibration
// split is degenerate: the optimum runs away to T -> 0, so the identity
// temperature is returned with a warning instead.
inline TemperatureModel fit_temperature(std::span<const ClassifierOutput> calibration) {
  if (calibration.empty()) throw config_error("fit_temperature: empty calibration split");
  for (const auto& c : calibration) {
    c.validate();
    require(c.label.has_value(), "fit_temperature: calibration sample without label");
    require(!c.logits.empty(), "fit_temperature: calibration sample without logits");
  }

  TemperatureModel model;
  model.nll_before = detail::mean_nll(calibration, 1.0);

  bool single_class = true;
  for (const auto& c : calibration)
    if (*c.label != *calibration.front().label) {
      single_class = false;
      break;
    }
  if (single_class) {
    model.temperature = 1.0;
    model.nll_after = model.nll_before;
    model.single_class_warning = true;
    return model;
  }

  const auto nll_at = [&](double log_t) { return detail::mean_nll(calibration, std::exp(log_t)); };
  constexpr double kInvPhi = 0.6180339887498949;
  double a = -4.0, b = 4.0;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = nll_at(c);
  double fd = nll_at(d);
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = nll_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = nll_at(d);
    }
  }
  const double fitted = std::exp(0.5 * (a + b));
  const double nll_fitted = detail::mean_nll(calibration, fitted);
  if (nll_fitted < model.nll_before) {
    model.temperature = fitted;
    model.nll_after = nll_fitted;
  } else {
    model.temperature = 1.0;
    model.nll_after = model.nll_before;
  }
  return model;
}

// Split-conformal classification calibrator over scores 1 - p(true class).
// Expects post-temperature probabilities.
inline ConformalModel fit_conformal_classification(std::span<const ClassifierOutput> calibration,
                                                   double alpha) {
  std::vector<double> scores;
  scores.reserve(calibration.size());
  for (const auto& c : calibration) {
    c.validate();
    require(c.label.has_value(), "fit_conformal_classification: calibration sample without label");
    require(!c.probabilities.empty(),
            "fit_conformal_classification: calibration sample without probabilities");
    scores.push_back(1.0 - c.probabilities[static_cast<std::size_t>(*c.label)]);
  }
  return detail::fit_conformal_from_scores(std::move(scores), alpha,
                                           ScoreKind::classification_score);
}

// Prediction set {k : p_k >= 1 - q_hat}. An empty set falls back to the
// argmax singleton (lowest index on ties) and is flagged.
inline CalibratedPrediction apply_conformal_classification(std::span<const double> probabilities,
                                                           const ConformalModel& model) {
  require(model.score_kind == ScoreKind::classification_score,
          "apply_conformal_classification: model was fitted on regression residuals");
  if (probabilities.size() < 2)
    throw input_error("apply_conformal_classification: need at least two classes");
  double sum = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw input_error("apply_conformal_classification: invalid probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw input_error("apply_conformal_classification: probabilities do not sum to 1");

  CalibratedPrediction out;
  out.kind = PredictionKind::classification;
  out.probabilities.assign(probabilities.begin(), probabilities.end());
  out.unbounded = model.unbounded;

  std::size_t argmax = 0;
  for (std::size_t k = 1; k < probabilities.size(); ++k)
    if (probabilities[k] > probabilities[argmax]) argmax = k;  // lowest index wins ties
  out.point_class = static_cast<int>(argmax);

  const double cutoff = 1.0 - model.q_hat;  // -inf when unbounded
  for (std::size_t k = 0; k < probabilities.size(); ++k)
    if (probabilities[k] >= cutoff) out.prediction_set.push_back(static_cast<int>(k));
  if (out.prediction_set.empty()) {
    out.prediction_set.push_back(out.point_class);
    out.empty_set_fallback = true;
  }
  out.width = static_cast<double>(out.prediction_set.size());
  return out;
}

}  // namespace relstack
