#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "relstack/common.hpp"

namespace relstack {

// ---------------------------------------------------------------------------
// Regression agreement
// ---------------------------------------------------------------------------

struct RegressionReport {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> r2;        // absent when y is constant
  std::optional<double> pearson;   // absent when either side is constant
  std::optional<double> spearman;  // absent when either rank vector is constant
  std::optional<double> ccc;
  std::size_t n = 0;
};

namespace detail {

inline void check_paired(std::span<const double> y, std::span<const double> yhat,
                         const char* who) {
  if (y.empty() || y.size() != yhat.size())
    throw input_error(std::string(who) + ": need equally sized, nonempty vectors");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!(std::isfinite(y[i]) && std::isfinite(yhat[i])))
      throw input_error(std::string(who) + ": non-finite value");
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Average ranks, 1-based, ties share the mean rank of their run.
inline std::vector<double> average_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>((i + 1) + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = shared;
    i = j;
  }
  return ranks;
}

inline std::optional<double> pearson_impl(std::span<const double> x, std::span<const double> y) {
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

inline double mae(std::span<const double> y, std::span<const double> yhat) {
  detail::check_paired(y, yhat, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(y[i] - yhat[i]);
  return s / static_cast<double>(y.size());
}

inline double rmse(std::span<const double> y, std::span<const double> yhat) {
  detail::check_paired(y, yhat, "rmse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - yhat[i]) * (y[i] - yhat[i]);
  return std::sqrt(s / static_cast<double>(y.size()));
}

inline std::optional<double> r_squared(std::span<const double> y, std::span<const double> yhat) {
  detail::check_paired(y, yhat, "r_squared");
  const double my = detail::mean_of(y);
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    sst += (y[i] - my) * (y[i] - my);
  }
  if (sst == 0.0) return std::nullopt;
  return 1.0 - sse / sst;
}

inline std::optional<double> pearson(std::span<const double> y, std::span<const double> yhat) {
  detail::check_paired(y, yhat, "pearson");
  return detail::pearson_impl(y, yhat);
}

inline std::optional<double> spearman(std::span<const double> y, std::span<const double> yhat) {
  detail::check_paired(y, yhat, "spearman");
  return detail::pearson_impl(detail::average_ranks(y), detail::average_ranks(yhat));
}

// Lin's concordance, population (divide-by-n) moments. A zero denominator
// only happens when both sides are the same constant, which is perfect
// agreement, so that case returns 1.
inline double ccc(std::span<const double> y, std::span<const double> yhat) {
  detail::check_paired(y, yhat, "ccc");
  const double n = static_cast<double>(y.size());
  const double mx = detail::mean_of(y), my = detail::mean_of(yhat);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sxy += (y[i] - mx) * (yhat[i] - my);
    sxx += (y[i] - mx) * (y[i] - mx);
    syy += (yhat[i] - my) * (yhat[i] - my);
  }
  const double denom = sxx / n + syy / n + (mx - my) * (mx - my);
  if (denom == 0.0) return 1.0;
  return (2.0 * sxy / n) / denom;
}

inline RegressionReport regression_metrics(std::span<const double> y,
                                           std::span<const double> yhat) {
  RegressionReport r;
  r.mae = mae(y, yhat);
  r.rmse = rmse(y, yhat);
  r.r2 = r_squared(y, yhat);
  r.pearson = pearson(y, yhat);
  r.spearman = spearman(y, yhat);
  r.ccc = ccc(y, yhat);
  r.n = y.size();
  return r;
}

// ---------------------------------------------------------------------------
// Discrimination
// ---------------------------------------------------------------------------

// Pairwise AUC with half credit for score ties, computed via rank sums
// (identical value, O(n log n)).
inline double auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty())
    throw input_error("auc: both classes must be nonempty");
  struct Tagged {
    double score;
    bool positive;
  };
  std::vector<Tagged> pooled;
  pooled.reserve(positives.size() + negatives.size());
  for (double s : positives) {
    if (!std::isfinite(s)) throw input_error("auc: non-finite score");
    pooled.push_back({s, true});
  }
  for (double s : negatives) {
    if (!std::isfinite(s)) throw input_error("auc: non-finite score");
    pooled.push_back({s, false});
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const Tagged& a, const Tagged& b) { return a.score < b.score; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  const std::size_t n = pooled.size();
  while (i < n) {
    std::size_t j = i;
    while (j < n && pooled[j].score == pooled[i].score) ++j;
    const double shared = 0.5 * static_cast<double>((i + 1) + j);
    for (std::size_t t = i; t < j; ++t)
      if (pooled[t].positive) rank_sum_pos += shared;
    i = j;
  }
  const double np = static_cast<double>(positives.size());
  const double nn = static_cast<double>(negatives.size());
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// Hanley-McNeil standard error for an AUC, normal CI clipped to [0, 1].
inline std::pair<double, double> hanley_mcneil_ci(double auc_value, std::size_t n_pos,
                                                  std::size_t n_neg, double z = 1.96) {
  if (n_pos == 0 || n_neg == 0) throw input_error("hanley_mcneil_ci: empty class");
  const double a = auc_value;
  const double q1 = a / (2.0 - a);
  const double q2 = 2.0 * a * a / (1.0 + a);
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  const double var =
      (a * (1.0 - a) + (np - 1.0) * (q1 - a * a) + (nn - 1.0) * (q2 - a * a)) / (np * nn);
  const double se = std::sqrt(std::max(var, 0.0));
  return {std::clamp(a - z * se, 0.0, 1.0), std::clamp(a + z * se, 0.0, 1.0)};
}

// Wilson score interval for a binomial proportion, clipped to [0, 1].
inline std::pair<double, double> wilson_ci(long long successes, long long trials,
                                           double z = 1.96) {
  if (trials < 1 || successes < 0 || successes > trials)
    throw input_error("wilson_ci: need 0 <= successes <= trials, trials >= 1");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = p + z2 / (2.0 * n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::clamp((center - half) / denom, 0.0, 1.0),
          std::clamp((center + half) / denom, 0.0, 1.0)};
}

// Step-sum area under the precision-recall curve over descending score
// thresholds; tied scores enter as one group.
inline double auprc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.empty() || scores.size() != labels.size())
    throw input_error("auprc: need equally sized, nonempty vectors");
  std::size_t total_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i])) throw input_error("auprc: non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw input_error("auprc: labels must be 0/1");
    total_pos += static_cast<std::size_t>(labels[i]);
  }
  if (total_pos == 0) throw input_error("auprc: no positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1)
        ++tp;
      else
        ++fp;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

struct F1Accuracy {
  double macro_f1 = 0.0;
  double accuracy = 0.0;
};

// Macro F1 over classes 0..k-1; a class absent from both predictions and
// labels contributes zero.
inline F1Accuracy f1_accuracy(std::span<const int> predictions, std::span<const int> labels,
                              int num_classes) {
  if (predictions.empty() || predictions.size() != labels.size())
    throw input_error("f1_accuracy: need equally sized, nonempty vectors");
  if (num_classes < 2) throw input_error("f1_accuracy: need at least two classes");
  std::vector<std::size_t> tp(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::size_t> fp(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::size_t> fn(static_cast<std::size_t>(num_classes), 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i], y = labels[i];
    if (p < 0 || p >= num_classes || y < 0 || y >= num_classes)
      throw input_error("f1_accuracy: class index out of range");
    if (p == y) {
      ++correct;
      ++tp[static_cast<std::size_t>(p)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(y)];
    }
  }
  double f1_sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const auto k = static_cast<std::size_t>(c);
    const double denom = static_cast<double>(2 * tp[k] + fp[k] + fn[k]);
    f1_sum += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp[k]) / denom;
  }
  return {f1_sum / static_cast<double>(num_classes),
          static_cast<double>(correct) / static_cast<double>(labels.size())};
}

// ---------------------------------------------------------------------------
// Calibration quality
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

inline void check_prob_matrix(const std::vector<std::vector<double>>& probs,
                              std::span<const int> labels, const char* who) {
  if (probs.empty() || probs.size() != labels.size())
    throw input_error(std::string(who) + ": need one probability vector per label");
  const std::size_t k = probs.front().size();
  if (k < 2) throw input_error(std::string(who) + ": need at least two classes");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i].size() != k) throw input_error(std::string(who) + ": ragged probability rows");
    double sum = 0.0;
    for (double p : probs[i]) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw input_error(std::string(who) + ": invalid probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw input_error(std::string(who) + ": probabilities do not sum to 1");
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
      throw input_error(std::string(who) + ": label out of range");
  }
}

}  // namespace detail

// Expected calibration error over equal-width confidence bins. Bin b covers
// (b/B, (b+1)/B], with 0 folded into the first bin; confidence is the
// max-class probability.
inline double ece(const std::vector<std::vector<double>>& probs, std::span<const int> labels,
                  int num_bins = 15) {
  detail::check_prob_matrix(probs, labels, "ece");
  if (num_bins < 1) throw config_error("ece: need at least one bin");
  const auto b = static_cast<std::size_t>(num_bins);
  std::vector<double> conf_sum(b, 0.0), acc_sum(b, 0.0);
  std::vector<std::size_t> count(b, 0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const std::size_t top = detail::argmax_lowest(probs[i]);
    const double conf = probs[i][top];
    auto bin = static_cast<long long>(
        std::ceil(conf * static_cast<double>(num_bins) - 1e-9)) - 1;
    bin = std::clamp<long long>(bin, 0, num_bins - 1);
    const auto idx = static_cast<std::size_t>(bin);
    conf_sum[idx] += conf;
    acc_sum[idx] += (top == static_cast<std::size_t>(labels[i])) ? 1.0 : 0.0;
    ++count[idx];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (count[i] == 0) continue;
    const double w = static_cast<double>(count[i]) / static_cast<double>(probs.size());
    total += w * std::abs(acc_sum[i] / static_cast<double>(count[i]) -
                          conf_sum[i] / static_cast<double>(count[i]));
  }
  return total;
}

// Multiclass Brier score: mean squared distance between the probability
// vector and the one-hot label. Bounded by 2.
inline double brier(const std::vector<std::vector<double>>& probs, std::span<const int> labels) {
  detail::check_prob_matrix(probs, labels, "brier");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    for (std::size_t k = 0; k < probs[i].size(); ++k) {
      const double target = (static_cast<std::size_t>(labels[i]) == k) ? 1.0 : 0.0;
      total += (probs[i][k] - target) * (probs[i][k] - target);
    }
  }
  return total / static_cast<double>(probs.size());
}

// ---------------------------------------------------------------------------
// Agreement
// ---------------------------------------------------------------------------

struct Icc21Result {
  double value = 0.0;
  bool degenerate = false;  // all ratings identical; value fixed at 1
};

// Two-way random effects, absolute agreement, single rater. Ratings are
// n targets by k raters.
inline Icc21Result icc21(const std::vector<std::vector<double>>& ratings) {
  const std::size_t n = ratings.size();
  if (n < 2) throw input_error("icc21: need at least two targets");
  const std::size_t k = ratings.front().size();
  if (k < 2) throw input_error("icc21: need at least two raters");
  for (const auto& row : ratings) {
    if (row.size() != k) throw input_error("icc21: ragged rating matrix");
    for (double v : row)
      if (!std::isfinite(v)) throw input_error("icc21: non-finite rating");
  }

  double grand = 0.0;
  for (const auto& row : ratings)
    for (double v : row) grand += v;
  grand /= static_cast<double>(n * k);

  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      row_mean[i] += ratings[i][j] / static_cast<double>(k);
      col_mean[j] += ratings[i][j] / static_cast<double>(n);
    }

  double ss_total = 0.0, ss_rows = 0.0, ss_cols = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j)
      ss_total += (ratings[i][j] - grand) * (ratings[i][j] - grand);
  for (std::size_t i = 0; i < n; ++i)
    ss_rows += static_cast<double>(k) * (row_mean[i] - grand) * (row_mean[i] - grand);
  for (std::size_t j = 0; j < k; ++j)
    ss_cols += static_cast<double>(n) * (col_mean[j] - grand) * (col_mean[j] - grand);

  if (ss_total == 0.0) return {1.0, true};

  const double dn = static_cast<double>(n), dk = static_cast<double>(k);
  const double ms_rows = ss_rows / (dn - 1.0);
  const double ms_cols = ss_cols / (dk - 1.0);
  const double ss_err = std::max(ss_total - ss_rows - ss_cols, 0.0);
  const double ms_err = ss_err / ((dn - 1.0) * (dk - 1.0));
  const double denom = ms_rows + (dk - 1.0) * ms_err + (dk / dn) * (ms_cols - ms_err);
  return {(ms_rows - ms_err) / denom, false};
}

struct AgreementReport {
  double icc21_value = 0.0;
  bool icc21_degenerate = false;
  double coverage = 0.0;
  double target = 0.0;
};

// ---------------------------------------------------------------------------
// Interval coverage
// ---------------------------------------------------------------------------

// Fraction of labels inside their closed interval [lo, hi].
inline double empirical_coverage(std::span<const double> y,
                                 std::span<const std::pair<double, double>> intervals) {
  if (y.empty() || y.size() != intervals.size())
    throw input_error("empirical_coverage: need one interval per label");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw input_error("empirical_coverage: non-finite label");
    if (y[i] >= intervals[i].first && y[i] <= intervals[i].second) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(y.size());
}

struct ClassificationReport {
  double accuracy = 0.0;
  std::pair<double, double> accuracy_ci{0.0, 0.0};
  double macro_f1 = 0.0;
  std::pair<double, double> f1_ci{0.0, 0.0};
  std::optional<double> auc_value;                    // macro one-vs-rest when k > 2
  std::optional<std::pair<double, double>> auc_ci;    // binary only
  std::optional<double> auprc_value;                  // macro one-vs-rest when k > 2
  double ece_value = 0.0;
  double brier_value = 0.0;
  std::size_t n = 0;
};

// Full classification report from probability vectors. Binary AUC carries a
// Hanley-McNeil CI; the multiclass macro AUC does not (per-class counts do
// not reduce to one pos/neg pair). Undefined parts (a class missing from the
// labels) are left absent rather than guessed.
inline ClassificationReport classification_metrics(const std::vector<std::vector<double>>& probs,
                                                   std::span<const int> labels) {
  detail::check_prob_matrix(probs, labels, "classification_metrics");
  const int k = static_cast<int>(probs.front().size());
  const std::size_t n = labels.size();

  ClassificationReport rep;
  rep.n = n;
  std::vector<int> preds(n, 0);
  for (std::size_t i = 0; i < n; ++i) preds[i] = static_cast<int>(detail::argmax_lowest(probs[i]));
  const auto fa = f1_accuracy(preds, labels, k);
  rep.accuracy = fa.accuracy;
  rep.macro_f1 = fa.macro_f1;
  rep.accuracy_ci = wilson_ci(static_cast<long long>(std::llround(fa.accuracy * static_cast<double>(n))),
                              static_cast<long long>(n));
  rep.f1_ci = wilson_ci(static_cast<long long>(std::llround(fa.macro_f1 * static_cast<double>(n))),
                        static_cast<long long>(n));
  rep.ece_value = ece(probs, labels);
  rep.brier_value = brier(probs, labels);

  // one-vs-rest discrimination, macro averaged; binary reduces to the plain pair
  double auc_sum = 0.0, auprc_sum = 0.0;
  int auc_classes = 0, auprc_classes = 0;
  for (int c = 0; c < k; ++c) {
    std::vector<double> pos, neg, scores;
    std::vector<int> bin_labels;
    scores.reserve(n);
    bin_labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = probs[i][static_cast<std::size_t>(c)];
      scores.push_back(s);
      const int is_pos = labels[i] == c ? 1 : 0;
      bin_labels.push_back(is_pos);
      (is_pos ? pos : neg).push_back(s);
    }
    if (!pos.empty() && !neg.empty()) {
      auc_sum += auc(pos, neg);
      ++auc_classes;
      if (k == 2 && c == 1) {
        // binary report: score the positive class, CI from the pair counts
        rep.auc_ci = hanley_mcneil_ci(auc(pos, neg), pos.size(), neg.size());
      }
    }
    if (!pos.empty()) {
      auprc_sum += auprc(scores, bin_labels);
      ++auprc_classes;
    }
  }
  if (k == 2) {
    // both one-vs-rest AUCs are identical in the binary case; report one
    if (auc_classes == 2) rep.auc_value = auc_sum / 2.0;
    if (auprc_classes >= 1) {
      // convention: binary AUPRC scores class 1
      std::vector<double> scores(n);
      std::vector<int> bin_labels(n);
      bool has_pos = false;
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = probs[i][1];
        bin_labels[i] = labels[i] == 1 ? 1 : 0;
        has_pos |= bin_labels[i] == 1;
      }
      if (has_pos) rep.auprc_value = auprc(scores, bin_labels);
    }
  } else {
    if (auc_classes > 0) rep.auc_value = auc_sum / static_cast<double>(auc_classes);
    if (auprc_classes > 0) rep.auprc_value = auprc_sum / static_cast<double>(auprc_classes);
  }
  return rep;
}

}  // namespace relstack
