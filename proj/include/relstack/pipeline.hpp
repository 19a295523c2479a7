#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relstack/anchoring.hpp"
#include "relstack/calibration.hpp"
#include "relstack/common.hpp"
#include "relstack/metrics.hpp"
#include "relstack/router.hpp"
#include "relstack/serialize.hpp"
#include "relstack/symptom.hpp"
#include "relstack/table.hpp"
#include "relstack/windows.hpp"

namespace relstack {

struct SplitFractions {
  double train = 0.0;
  double val = 0.5;
  double test = 0.5;
};

// Everything the end-to-end run needs. Flags on the CLI mirror these fields;
// a JSON config file overrides flags.
struct PipelineConfig {
  TaskKind task = TaskKind::classification;
  double alpha = 0.2;
  double coverage_budget = 0.8;
  QuantileSpec quantiles{};
  double tau_c = 1.0;
  bool refer_uses_uncertainty = false;
  bool clamp_q_hat_at_zero = false;
  std::uint64_t seed = 1;
  SplitFractions split{};
  unsigned threads = 1;
  double fog_gamma = 0.5;
  std::string input_path;
  std::string out_dir;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("config: alpha must lie in (0, 1)");
    if (!(coverage_budget > 0.0 && coverage_budget < 1.0))
      throw config_error("config: coverage_budget must lie in (0, 1)");
    if (!(tau_c >= 0.0 && tau_c <= 1.0)) throw config_error("config: tau_c must lie in [0, 1]");
    if (!(fog_gamma > 0.0 && fog_gamma < 1.0))
      throw config_error("config: fog_gamma must lie in (0, 1)");
    if (threads < 1) throw config_error("config: threads must be at least 1");
    const auto& s = split;
    if (!(s.train >= 0.0 && s.val >= 0.0 && s.test >= 0.0))
      throw config_error("config: split fractions must be nonnegative");
    if (std::abs(s.train + s.val + s.test - 1.0) > 1e-9)
      throw config_error("config: split fractions must sum to 1");
  }
};

inline json to_json(const PipelineConfig& c) {
  json j;
  j["task"] = c.task == TaskKind::classification ? "classification" : "regression";
  j["alpha"] = c.alpha;
  j["coverage_budget"] = c.coverage_budget;
  j["quantiles"] = to_json(c.quantiles);
  j["tau_c"] = c.tau_c;
  j["refer_uses_uncertainty"] = c.refer_uses_uncertainty;
  j["clamp_q_hat_at_zero"] = c.clamp_q_hat_at_zero;
  j["seed"] = c.seed;
  j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
  j["threads"] = c.threads;
  j["fog_gamma"] = c.fog_gamma;
  j["input"] = c.input_path;
  j["out_dir"] = c.out_dir;
  return j;
}

// Overlay JSON fields onto an existing config; anything absent keeps its
// current value. This is what lets --config override flags.
inline void apply_config_json(PipelineConfig& c, const json& j) {
  if (j.contains("task")) {
    const std::string t = j.at("task").get<std::string>();
    if (t == "classification")
      c.task = TaskKind::classification;
    else if (t == "regression")
      c.task = TaskKind::regression;
    else
      throw config_error("config: unknown task '" + t + "'");
  }
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("coverage_budget")) c.coverage_budget = j.at("coverage_budget").get<double>();
  if (j.contains("quantiles")) c.quantiles = quantile_spec_from_json(j.at("quantiles"));
  if (j.contains("tau_c")) c.tau_c = j.at("tau_c").get<double>();
  if (j.contains("refer_uses_uncertainty"))
    c.refer_uses_uncertainty = j.at("refer_uses_uncertainty").get<bool>();
  if (j.contains("clamp_q_hat_at_zero"))
    c.clamp_q_hat_at_zero = j.at("clamp_q_hat_at_zero").get<bool>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("split")) {
    const auto& s = j.at("split");
    if (s.contains("train")) c.split.train = s.at("train").get<double>();
    if (s.contains("val")) c.split.val = s.at("val").get<double>();
    if (s.contains("test")) c.split.test = s.at("test").get<double>();
  }
  if (j.contains("threads")) c.threads = j.at("threads").get<unsigned>();
  if (j.contains("fog_gamma")) c.fog_gamma = j.at("fog_gamma").get<double>();
  if (j.contains("input")) c.input_path = j.at("input").get<std::string>();
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
}

// ---------------------------------------------------------------------------
// Calibration + signal assembly over a table
// ---------------------------------------------------------------------------

struct CalibratedTable {
  std::optional<TemperatureModel> temperature;  // classification only
  ConformalModel conformal;
  MinMaxNormalizer normalizer;                  // fit on validation uncertainties
  std::vector<CalibratedPrediction> predictions;  // aligned with table.rows
  std::vector<ReliabilitySignals> signals;        // aligned with table.rows
  std::vector<std::size_t> val_rows;
  std::vector<std::size_t> test_rows;
};

namespace detail {

inline std::vector<double> row_logits(const SampleRow& row, bool payload_is_probs) {
  if (!payload_is_probs) return row.class_scores;
  std::vector<double> logits(row.class_scores.size(), 0.0);
  for (std::size_t k = 0; k < row.class_scores.size(); ++k)
    logits[k] = std::log(std::max(row.class_scores[k], 1e-300));
  return logits;
}

}  // namespace detail

struct AppliedCalibration {
  std::vector<CalibratedPrediction> predictions;  // aligned with table.rows
  std::vector<ReliabilitySignals> signals;        // aligned with table.rows
};

// Replay path: apply stored calibration artifacts to a table without any
// refitting, so routing against a frozen snapshot is exactly reproducible.
inline AppliedCalibration apply_calibration(const SampleTable& table, const ConformalModel& conformal,
                                            const std::optional<TemperatureModel>& temperature,
                                            const MinMaxNormalizer& normalizer) {
  const bool classification = conformal.score_kind == ScoreKind::classification_score;
  if (classification != (table.task == TaskKind::classification))
    throw config_error("apply_calibration: calibration kind does not match table task");
  if (classification && !temperature)
    throw config_error("apply_calibration: classification snapshot without temperature");

  AppliedCalibration out;
  out.predictions.reserve(table.rows.size());
  out.signals.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    if (classification) {
      const auto probs = softmax_temperature(detail::row_logits(row, table.payload_is_probs),
                                             temperature->temperature);
      out.predictions.push_back(apply_conformal_classification(probs, conformal));
    } else {
      out.predictions.push_back(apply_conformal_regression(regressor_output_from_row(row), conformal));
    }
    const SymptomRecord record = record_from_row(row);
    const ObservableSet obs = ObservableSet::pattern(row.dataset_id);
    ReliabilitySignals s;
    s.quality = row.quality;
    s.uncertainty = row.uncertainty;
    s.ood = row.ood;
    s.completeness = completeness(record, obs);
    s.reliability = reliability_state(s.completeness, s.quality, normalizer(s.uncertainty));
    out.signals.push_back(s);
  }
  return out;
}

// Calibrate on the validation rows, then compute calibrated predictions and
// routing signals for every row. Thresholds are not fitted here; this stage
// is shared by the calibrate / fit-thresholds / run subcommands.
inline CalibratedTable calibrate_table(const SampleTable& table, const PipelineConfig& config) {
  if (!table.has_split)
    throw config_error("calibrate_table: table has no split column; derive one first");
  CalibratedTable out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& s = table.rows[i].split;
    if (!s) throw input_error("row " + table.rows[i].sample_id + " has no split assignment");
    if (*s == Split::val) out.val_rows.push_back(i);
    if (*s == Split::test) out.test_rows.push_back(i);
  }
  if (out.val_rows.empty()) throw config_error("calibrate_table: empty validation split");
  for (std::size_t i : out.val_rows)
    if (!table.rows[i].label)
      throw input_error("validation row " + table.rows[i].sample_id + " has no label");

  if (table.task == TaskKind::classification) {
    std::vector<ClassifierOutput> val_outputs;
    val_outputs.reserve(out.val_rows.size());
    for (std::size_t i : out.val_rows) {
      const auto& row = table.rows[i];
      ClassifierOutput c;
      c.logits = detail::row_logits(row, table.payload_is_probs);
      c.label = static_cast<int>(*row.label);
      val_outputs.push_back(std::move(c));
    }
    out.temperature = fit_temperature(val_outputs);
    for (auto& c : val_outputs)
      c.probabilities = softmax_temperature(c.logits, out.temperature->temperature);
    out.conformal = fit_conformal_classification(val_outputs, config.alpha);
  } else {
    std::vector<RegressorOutput> val_outputs;
    val_outputs.reserve(out.val_rows.size());
    for (std::size_t i : out.val_rows) val_outputs.push_back(regressor_output_from_row(table.rows[i]));
    out.conformal = fit_conformal_regression(val_outputs, config.alpha, config.clamp_q_hat_at_zero);
  }

  std::vector<double> val_uncertainties;
  val_uncertainties.reserve(out.val_rows.size());
  for (std::size_t i : out.val_rows) val_uncertainties.push_back(table.rows[i].uncertainty);
  out.normalizer = MinMaxNormalizer::fit(val_uncertainties);

  AppliedCalibration applied = apply_calibration(table, out.conformal, out.temperature, out.normalizer);
  out.predictions = std::move(applied.predictions);
  out.signals = std::move(applied.signals);
  return out;
}

inline ThresholdConfig fit_thresholds_from(const CalibratedTable& cal, const PipelineConfig& config) {
  std::vector<ReliabilitySignals> val_signals;
  std::vector<CalibratedPrediction> val_preds;
  val_signals.reserve(cal.val_rows.size());
  val_preds.reserve(cal.val_rows.size());
  for (std::size_t i : cal.val_rows) {
    val_signals.push_back(cal.signals[i]);
    val_preds.push_back(cal.predictions[i]);
  }
  return fit_thresholds(val_signals, val_preds, config.quantiles, config.coverage_budget,
                        config.tau_c, config.refer_uses_uncertainty);
}

// ---------------------------------------------------------------------------
// End-to-end run
// ---------------------------------------------------------------------------

struct PipelineArtifacts {
  FrozenThresholds thresholds;
  std::optional<TemperatureModel> temperature;
  ConformalModel conformal;
  std::vector<RoutingDecision> decisions;  // test rows, input order
  ActionSummary summary;
  // serialized artifacts, exactly as written to disk
  std::string thresholds_json;
  std::string audit_jsonl;
  std::string metrics_json;
  std::string risk_coverage_csv;
};

namespace detail {

inline std::string render_risk_coverage(const std::vector<RiskCoveragePoint>& curve) {
  std::string out = "coverage,risk\n";
  for (const auto& p : curve)
    out += format_double(p.coverage) + "," + format_double(p.risk) + "\n";
  return out;
}

}  // namespace detail

// The threshold snapshot bundles everything routing needs for exact replay:
// the frozen thresholds plus digest, the validation uncertainty normalizer,
// and the calibration models.
inline json threshold_snapshot_json(const FrozenThresholds& frozen, const MinMaxNormalizer& normalizer,
                                    const ConformalModel& conformal,
                                    const std::optional<TemperatureModel>& temperature) {
  json snapshot;
  snapshot["digest"] = frozen.digest;
  snapshot["thresholds"] = to_json(frozen.config);
  snapshot["uncertainty_normalizer"] = to_json(normalizer);
  snapshot["calibration"] = calibration_to_json(conformal, temperature);
  return snapshot;
}

struct ThresholdSnapshot {
  FrozenThresholds frozen;
  MinMaxNormalizer normalizer;
  CalibrationDoc calibration;
};

inline ThresholdSnapshot threshold_snapshot_from_json(const json& j) {
  ThresholdSnapshot s;
  s.frozen.config = threshold_config_from_json(j.at("thresholds"));
  s.frozen.digest = j.at("digest").get<std::string>();
  if (threshold_digest(s.frozen.config) != s.frozen.digest)
    throw config_error("threshold snapshot digest does not match its thresholds");
  s.normalizer = normalizer_from_json(j.at("uncertainty_normalizer"));
  s.calibration = calibration_from_json(j.at("calibration"));
  return s;
}

// Ingest -> split -> calibrate -> freeze thresholds -> route -> evaluate.
// Writes threshold snapshot, audit JSONL, metrics JSON, and the
// risk-coverage CSV into out_dir (when set) via atomic renames.
inline PipelineArtifacts run_pipeline(const PipelineConfig& config, SampleTable table) {
  config.validate();
  if (!table.has_split) derive_subject_split(table, config.split.train, config.split.val, config.seed);

  CalibratedTable cal = calibrate_table(table, config);
  if (cal.test_rows.empty()) throw config_error("run_pipeline: empty test split");

  PipelineArtifacts art;
  art.temperature = cal.temperature;
  art.conformal = cal.conformal;
  art.thresholds = freeze_with_digest(fit_thresholds_from(cal, config));

  std::vector<ReliabilitySignals> test_signals;
  std::vector<CalibratedPrediction> test_preds;
  std::vector<std::string> test_ids;
  for (std::size_t i : cal.test_rows) {
    test_signals.push_back(cal.signals[i]);
    test_preds.push_back(cal.predictions[i]);
    test_ids.push_back(table.rows[i].sample_id);
  }
  art.decisions = route_batch(test_signals, test_preds, art.thresholds.config, test_ids,
                              art.thresholds.digest, config.threads);

  // outcomes and correctness over labeled test rows
  const bool classification = table.task == TaskKind::classification;
  bool all_labeled = true;
  for (std::size_t i : cal.test_rows) all_labeled &= table.rows[i].label.has_value();

  std::vector<double> outcomes;
  std::vector<int> correctness;
  std::vector<double> uncertainties;
  double covered = 0.0;
  if (all_labeled) {
    for (std::size_t t = 0; t < cal.test_rows.size(); ++t) {
      const auto& row = table.rows[cal.test_rows[t]];
      const auto& pred = test_preds[t];
      uncertainties.push_back(row.uncertainty);
      if (classification) {
        const int label = static_cast<int>(*row.label);
        const bool correct = pred.point_class == label;
        outcomes.push_back(correct ? 1.0 : 0.0);
        correctness.push_back(correct ? 1 : 0);
        bool in_set = false;
        for (int k : pred.prediction_set) in_set |= k == label;
        covered += in_set ? 1.0 : 0.0;
      } else {
        const double label = *row.label;
        outcomes.push_back(std::abs(label - pred.point));
        const bool in_interval = label >= pred.lo && label <= pred.hi;
        correctness.push_back(in_interval ? 1 : 0);
        covered += in_interval ? 1.0 : 0.0;
      }
    }
    covered /= static_cast<double>(cal.test_rows.size());
  }

  art.summary = summarize_actions(
      art.decisions, classification ? OutcomeKind::accuracy : OutcomeKind::mean_abs_error,
      all_labeled ? std::span<const double>(outcomes) : std::span<const double>{});

  // ---- artifacts ----
  art.thresholds_json =
      threshold_snapshot_json(art.thresholds, cal.normalizer, cal.conformal, cal.temperature).dump(2) +
      "\n";

  for (const auto& d : art.decisions) art.audit_jsonl += to_json(d).dump() + "\n";

  json metrics;
  metrics["task"] = classification ? "classification" : "regression";
  metrics["n_test"] = cal.test_rows.size();
  if (all_labeled) {
    if (classification) {
      std::vector<std::vector<double>> probs;
      std::vector<int> labels;
      for (std::size_t t = 0; t < cal.test_rows.size(); ++t) {
        probs.push_back(test_preds[t].probabilities);
        labels.push_back(static_cast<int>(*table.rows[cal.test_rows[t]].label));
      }
      metrics["no_rejection"] = to_json(classification_metrics(probs, labels));
    } else {
      std::vector<double> y, yhat;
      for (std::size_t t = 0; t < cal.test_rows.size(); ++t) {
        y.push_back(*table.rows[cal.test_rows[t]].label);
        yhat.push_back(test_preds[t].point);
      }
      metrics["no_rejection"] = to_json(regression_metrics(y, yhat));
    }
    json conformal;
    conformal["coverage"] = json_metric(covered);
    conformal["target"] = json_metric(1.0 - config.alpha);
    double width_sum = 0.0;
    std::size_t width_n = 0, unbounded_n = 0;
    for (const auto& p : test_preds) {
      if (std::isfinite(p.width)) {
        width_sum += p.width;
        ++width_n;
      } else {
        ++unbounded_n;
      }
    }
    conformal["mean_width"] =
        width_n > 0 ? json_metric(width_sum / static_cast<double>(width_n)) : json(nullptr);
    conformal["unbounded"] = unbounded_n;
    metrics["conformal"] = conformal;
    art.risk_coverage_csv = detail::render_risk_coverage(risk_coverage_curve(uncertainties, correctness));
  } else {
    metrics["no_rejection"] = nullptr;
    metrics["conformal"] = nullptr;
    art.risk_coverage_csv = "coverage,risk\n";
  }
  metrics["actions"] = to_json(art.summary);
  art.metrics_json = metrics.dump(2) + "\n";

  if (!config.out_dir.empty()) {
    const std::string base = config.out_dir + "/";
    detail::atomic_write_file(base + "thresholds.json", art.thresholds_json);
    detail::atomic_write_file(base + "audit.jsonl", art.audit_jsonl);
    detail::atomic_write_file(base + "metrics.json", art.metrics_json);
    detail::atomic_write_file(base + "risk_coverage.csv", art.risk_coverage_csv);
  }
  return art;
}

inline PipelineArtifacts run_pipeline(const PipelineConfig& config) {
  if (config.input_path.empty()) throw config_error("run_pipeline: no input path");
  return run_pipeline(config, ingest_csv_file(config.input_path, config.task));
}

// ---------------------------------------------------------------------------
// Longitudinal anchor evaluation
// ---------------------------------------------------------------------------

// Visits CSV: subject_id, sample_id, timestamp, label, optional feature_0..N.
inline std::vector<VisitSeries> ingest_visits_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw input_error("ingest_visits_csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  const auto need = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end())
      throw input_error("ingest_visits_csv: missing required column '" + name + "'");
    return it->second;
  };
  const std::size_t c_subject = need("subject_id");
  const std::size_t c_sample = need("sample_id");
  const std::size_t c_time = need("timestamp");
  const std::size_t c_label = need("label");
  std::vector<std::size_t> c_features;
  for (int f = 0;; ++f) {
    const auto it = col.find("feature_" + std::to_string(f));
    if (it == col.end()) break;
    c_features.push_back(it->second);
  }

  std::map<std::string, std::vector<Visit>> by_subject;
  std::vector<std::string> subject_order;
  std::map<std::string, std::size_t> seen_ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw input_error("line " + std::to_string(line_no) + ": wrong field count");
    Visit v;
    v.sample_id = fields[c_sample];
    detail::check_id(v.sample_id, "sample_id");
    const auto [it, inserted] = seen_ids.emplace(v.sample_id, line_no);
    if (!inserted)
      throw input_error("duplicate sample_id '" + v.sample_id + "' on lines " +
                        std::to_string(it->second) + " and " + std::to_string(line_no));
    v.timestamp = detail::parse_double(fields[c_time], line_no, "timestamp");
    v.label = detail::parse_double(fields[c_label], line_no, "label");
    if (!c_features.empty()) {
      std::vector<double> feats;
      feats.reserve(c_features.size());
      for (std::size_t f = 0; f < c_features.size(); ++f)
        feats.push_back(
            detail::parse_double(fields[c_features[f]], line_no, "feature_" + std::to_string(f)));
      v.features = std::move(feats);
    }
    const std::string& subject = fields[c_subject];
    detail::check_id(subject, "subject_id");
    if (!by_subject.count(subject)) subject_order.push_back(subject);
    by_subject[subject].push_back(std::move(v));
  }
  std::vector<VisitSeries> out;
  out.reserve(subject_order.size());
  for (const auto& subject : subject_order)
    out.push_back(VisitSeries::make(subject, std::move(by_subject[subject])));
  return out;
}

struct AnchorEvalResult {
  json report;
  json exclusions;
};

// Anchor-based personalization benchmark: split every subject at n_anchor,
// score the carry-forward and anchor-mean baselines, the pooled-mean
// predictor, and (when features are present) a least-squares regressor on
// anchor residuals. Pooled (micro) metrics are primary; per-subject macro
// MAE is emitted for diagnostics.
inline AnchorEvalResult anchor_eval(const std::vector<VisitSeries>& subjects,
                                    std::size_t n_anchor) {
  if (subjects.empty()) throw input_error("anchor_eval: no subjects");
  if (n_anchor == 0)
    throw config_error("anchor_eval: n_anchor must be at least 1 (0 is the subject-independent setting)");

  std::vector<AnchorSplit> splits;
  json excluded = json::array();
  for (const auto& s : subjects) {
    AnchorSplit split = split_anchors(s, n_anchor);
    if (split.excluded) {
      excluded.push_back({{"subject_id", s.subject_id},
                          {"visits", s.visits.size()},
                          {"reason", "no test visits after anchoring"}});
      continue;
    }
    splits.push_back(std::move(split));
  }
  if (splits.empty()) throw input_error("anchor_eval: every subject was excluded");

  std::vector<double> pooled_anchor_labels;
  bool features_everywhere = true;
  for (const auto& split : splits) {
    for (const auto& a : split.anchors) {
      pooled_anchor_labels.push_back(a.label);
      features_everywhere &= a.features.has_value();
    }
    for (const auto& t : split.test) features_everywhere &= t.features.has_value();
  }
  const MeanPredictor pooled_mean = mean_predictor_baseline(pooled_anchor_labels);

  std::optional<LinearModel> residual_model;
  if (features_everywhere) {
    std::vector<ResidualTarget> training;
    for (const auto& split : splits) {
      auto rows = anchor_residual_training_set(split);
      training.insert(training.end(), rows.begin(), rows.end());
    }
    residual_model = LinearModel::fit(training);
  }

  std::vector<double> y;
  std::map<std::string, std::vector<double>> method_preds;
  std::map<std::string, std::vector<double>> per_subject_mae;
  for (const auto& split : splits) {
    const auto last = last_anchor_baseline(split);
    const auto mean = anchor_mean_baseline(split);
    std::vector<double> subject_y;
    for (std::size_t i = 0; i < split.test.size(); ++i) {
      y.push_back(split.test[i].label);
      subject_y.push_back(split.test[i].label);
      method_preds["last_anchor"].push_back(last[i]);
      method_preds["anchor_mean"].push_back(mean[i]);
      method_preds["mean_predictor"].push_back(pooled_mean());
      if (residual_model) {
        const double base = anchor_mean(split);
        method_preds["personalized_ls"].push_back(
            base + residual_model->predict(*split.test[i].features));
      }
    }
    for (const auto& [name, preds] : method_preds) {
      const std::size_t start = preds.size() - split.test.size();
      double err = 0.0;
      for (std::size_t i = 0; i < split.test.size(); ++i)
        err += std::abs(subject_y[i] - preds[start + i]);
      per_subject_mae[name].push_back(err / static_cast<double>(split.test.size()));
    }
  }

  json methods;
  for (const auto& [name, preds] : method_preds) {
    json entry = to_json(regression_metrics(y, preds));
    double macro = 0.0;
    for (double m : per_subject_mae[name]) macro += m;
    macro /= static_cast<double>(per_subject_mae[name].size());
    entry["macro_mae"] = json_metric(macro);
    methods[name] = entry;
  }

  AnchorEvalResult result;
  result.report["n_anchor"] = n_anchor;
  result.report["n_subjects"] = subjects.size();
  result.report["n_included"] = splits.size();
  result.report["n_excluded"] = excluded.size();
  result.report["n_test_visits"] = y.size();
  result.report["methods"] = methods;
  result.exclusions = {{"n_excluded", excluded.size()}, {"subjects", excluded}};
  return result;
}

}  // namespace relstack
