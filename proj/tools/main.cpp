// relstack command line: ingest, calibrate, threshold fitting, routing,
// evaluation, anchor baselines, window segmentation, synthetic cohorts.
//
// Exit codes: 0 success, 1 input or config error, 2 contract violation.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "relstack/relstack.hpp"

namespace {

using relstack::json;

struct PipelineOpts {
  relstack::PipelineConfig config;
  std::string task = "classification";
  std::string config_path;
};

void add_pipeline_flags(CLI::App* sub, PipelineOpts& o, bool need_input = true) {
  auto* input = sub->add_option("--input", o.config.input_path, "sample CSV");
  if (need_input) input->required();
  sub->add_option("--task", o.task, "classification or regression")
      ->check(CLI::IsMember({"classification", "regression"}));
  sub->add_option("--out-dir", o.config.out_dir, "directory for artifacts (stdout when omitted)");
  sub->add_option("--alpha", o.config.alpha, "conformal miscoverage level in (0, 1)");
  sub->add_option("--coverage-budget", o.config.coverage_budget,
                  "validation width quantile for the abstention width threshold");
  sub->add_option("--quality-pct", o.config.quantiles.quality_pct, "quality threshold percentile");
  sub->add_option("--u-abstain-pct", o.config.quantiles.u_abstain_pct,
                  "abstain uncertainty threshold percentile");
  sub->add_option("--u-refer-pct", o.config.quantiles.u_refer_pct,
                  "refer uncertainty threshold percentile");
  sub->add_option("--ood-pct", o.config.quantiles.ood_pct, "ood threshold percentile");
  sub->add_option("--tau-c", o.config.tau_c, "completeness threshold in [0, 1]");
  sub->add_flag("--refer-uses-uncertainty", o.config.refer_uses_uncertainty,
                "let high uncertainty trigger REFER after the ood check");
  sub->add_flag("--clamp-q-hat-at-zero", o.config.clamp_q_hat_at_zero,
                "forbid conformal interval narrowing (regression)");
  sub->add_option("--seed", o.config.seed, "seed for derived subject splits");
  sub->add_option("--split-train", o.config.split.train, "train fraction for derived splits");
  sub->add_option("--split-val", o.config.split.val, "validation fraction for derived splits");
  sub->add_option("--split-test", o.config.split.test, "test fraction for derived splits");
  sub->add_option("--threads", o.config.threads, "routing worker threads");
  sub->add_option("--config", o.config_path, "JSON config file; its fields override flags");
}

relstack::PipelineConfig finalize(PipelineOpts& o) {
  o.config.task = o.task == "regression" ? relstack::TaskKind::regression
                                         : relstack::TaskKind::classification;
  if (!o.config_path.empty()) {
    json j;
    try {
      j = json::parse(relstack::detail::read_file(o.config_path));
    } catch (const json::exception& e) {
      throw relstack::config_error(std::string("config file: ") + e.what());
    }
    relstack::apply_config_json(o.config, j);
  }
  o.config.validate();
  return o.config;
}

void emit(const std::string& out_dir, const std::string& name, const std::string& content) {
  if (out_dir.empty()) {
    std::cout << content;
    return;
  }
  const std::string path = out_dir + "/" + name;
  relstack::detail::atomic_write_file(path, content);
  std::cout << "wrote " << path << "\n";
}

// Shared front half of calibrate / fit-thresholds / evaluate / run.
relstack::SampleTable load_table(const relstack::PipelineConfig& config) {
  relstack::SampleTable table = relstack::ingest_csv_file(config.input_path, config.task);
  if (!table.has_split)
    relstack::derive_subject_split(table, config.split.train, config.split.val, config.seed);
  return table;
}

void cmd_ingest(PipelineOpts& o, const std::string& output) {
  const auto config = finalize(o);
  const relstack::SampleTable table =
      relstack::ingest_csv_file(config.input_path, config.task);
  std::size_t labeled = 0;
  for (const auto& row : table.rows) labeled += row.label.has_value() ? 1 : 0;
  std::cout << "rows=" << table.rows.size() << " labeled=" << labeled
            << " classes=" << (table.task == relstack::TaskKind::classification
                                   ? std::to_string(table.num_classes)
                                   : std::string("-"))
            << " split_column=" << (table.has_split ? "yes" : "no") << "\n";
  if (!output.empty()) {
    relstack::write_csv(table, output);
    std::cout << "wrote " << output << "\n";
  }
}

void cmd_calibrate(PipelineOpts& o) {
  const auto config = finalize(o);
  const relstack::SampleTable table = load_table(config);
  const relstack::CalibratedTable cal = relstack::calibrate_table(table, config);
  json doc;
  doc["calibration"] = relstack::calibration_to_json(cal.conformal, cal.temperature);
  if (cal.temperature) {
    doc["nll_before"] = cal.temperature->nll_before;
    doc["nll_after"] = cal.temperature->nll_after;
    if (cal.temperature->single_class_warning)
      doc["warning"] = "single-class calibration split; temperature left at 1";
  }
  doc["uncertainty_normalizer"] = relstack::to_json(cal.normalizer);
  doc["n_val"] = cal.val_rows.size();
  emit(config.out_dir, "calibration.json", doc.dump(2) + "\n");
}

void cmd_fit_thresholds(PipelineOpts& o) {
  const auto config = finalize(o);
  const relstack::SampleTable table = load_table(config);
  const relstack::CalibratedTable cal = relstack::calibrate_table(table, config);
  const relstack::FrozenThresholds frozen =
      relstack::freeze_with_digest(relstack::fit_thresholds_from(cal, config));
  const json snapshot =
      relstack::threshold_snapshot_json(frozen, cal.normalizer, cal.conformal, cal.temperature);
  emit(config.out_dir, "thresholds.json", snapshot.dump(2) + "\n");
  std::cout << "digest=" << frozen.digest << "\n";
}

void cmd_route(const std::string& input, const std::string& snapshot_path,
               const std::string& out_dir, unsigned threads) {
  json j;
  try {
    j = json::parse(relstack::detail::read_file(snapshot_path));
  } catch (const json::exception& e) {
    throw relstack::config_error(std::string("threshold snapshot: ") + e.what());
  }
  const relstack::ThresholdSnapshot snapshot = relstack::threshold_snapshot_from_json(j);
  const bool classification =
      snapshot.calibration.conformal.score_kind == relstack::ScoreKind::classification_score;
  const relstack::SampleTable table = relstack::ingest_csv_file(
      input, classification ? relstack::TaskKind::classification : relstack::TaskKind::regression);

  const relstack::AppliedCalibration applied = relstack::apply_calibration(
      table, snapshot.calibration.conformal, snapshot.calibration.temperature, snapshot.normalizer);

  // Route the test split when the table carries one, otherwise every row
  // (deployment tables have no split column).
  std::vector<relstack::ReliabilitySignals> signals;
  std::vector<relstack::CalibratedPrediction> preds;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.has_split && table.rows[i].split != relstack::Split::test) continue;
    signals.push_back(applied.signals[i]);
    preds.push_back(applied.predictions[i]);
    ids.push_back(table.rows[i].sample_id);
  }
  if (ids.empty()) throw relstack::input_error("route: no rows to route");
  const auto decisions = relstack::route_batch(signals, preds, snapshot.frozen.config, ids,
                                               snapshot.frozen.digest, threads);
  std::string audit;
  for (const auto& d : decisions) audit += relstack::to_json(d).dump() + "\n";
  emit(out_dir, "audit.jsonl", audit);
  const auto summary = relstack::summarize_actions(decisions);
  std::cout << "routed=" << decisions.size();
  for (std::size_t a = 0; a < 4; ++a)
    std::cout << " " << relstack::kActionNames[a] << "=" << summary.counts[a];
  std::cout << "\n";
}

void cmd_evaluate(PipelineOpts& o) {
  auto config = finalize(o);
  const relstack::PipelineArtifacts art = relstack::run_pipeline(config);
  if (config.out_dir.empty())
    std::cout << art.metrics_json;
  else
    std::cout << "wrote " << config.out_dir << "/metrics.json (and thresholds.json, audit.jsonl, "
              << "risk_coverage.csv)\n";
}

void cmd_run(PipelineOpts& o) {
  auto config = finalize(o);
  if (config.out_dir.empty()) throw relstack::config_error("run: --out-dir is required");
  const relstack::PipelineArtifacts art = relstack::run_pipeline(config);
  std::cout << "digest=" << art.thresholds.digest << "\n";
  std::cout << "routed=" << art.summary.total;
  for (std::size_t a = 0; a < 4; ++a)
    std::cout << " " << relstack::kActionNames[a] << "=" << art.summary.counts[a];
  std::cout << "\n";
  for (const char* name : {"thresholds.json", "audit.jsonl", "metrics.json", "risk_coverage.csv"})
    std::cout << "wrote " << config.out_dir << "/" << name << "\n";
}

void cmd_anchor_eval(const std::string& input, std::size_t n_anchor, const std::string& out_dir) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw relstack::input_error("cannot open: " + input);
  const auto subjects = relstack::ingest_visits_csv(in);
  const relstack::AnchorEvalResult result = relstack::anchor_eval(subjects, n_anchor);
  emit(out_dir, "anchor_report.json", result.report.dump(2) + "\n");
  if (!out_dir.empty()) emit(out_dir, "anchor_exclusions.json", result.exclusions.dump(2) + "\n");
}

void cmd_segment(const std::string& input, const relstack::WindowSpec& spec,
                 const std::string& output) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw relstack::input_error("cannot open: " + input);
  std::string line;
  if (!std::getline(in, line)) throw relstack::input_error("segment: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "label")
    throw relstack::input_error("segment: expected single-column header 'label', got '" + line + "'");
  std::vector<int> annotations;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "0")
      annotations.push_back(0);
    else if (line == "1")
      annotations.push_back(1);
    else
      throw relstack::input_error("segment: line " + std::to_string(line_no) +
                                  ": annotation must be 0 or 1");
  }
  const auto windows = relstack::segment_windows(annotations, spec);
  if (windows.empty())
    std::cerr << "warning: stream of " << annotations.size()
              << " samples is shorter than one window (length " << spec.length << ")\n";
  std::string csv = "start,positive_fraction,label\n";
  for (const auto& w : windows)
    csv += std::to_string(w.start) + "," + relstack::detail::format_double(w.positive_fraction) +
           "," + (w.label ? "1" : "0") + "\n";
  if (output.empty()) {
    std::cout << csv;
  } else {
    relstack::detail::atomic_write_file(output, csv);
    std::cout << "windows=" << windows.size() << "\n";
    std::cout << "wrote " << output << "\n";
  }
}

void cmd_synth(const relstack::SyntheticSpec& spec, const std::string& task,
               const std::string& output) {
  relstack::SyntheticSpec s = spec;
  s.task = task == "regression" ? relstack::TaskKind::regression
                                : relstack::TaskKind::classification;
  const relstack::SampleTable table = relstack::generate_synthetic_cohort(s);
  relstack::write_csv(table, output);
  std::cout << "rows=" << table.rows.size() << "\n";
  std::cout << "wrote " << output << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symptom-space reliability pipeline: calibration, conformal intervals, "
               "deterministic four-action routing, and evaluation"};
  app.require_subcommand(1);

  PipelineOpts ingest_opts;
  std::string ingest_output;
  auto* ingest = app.add_subcommand("ingest", "validate a sample CSV and report its shape");
  add_pipeline_flags(ingest, ingest_opts);
  ingest->add_option("--output", ingest_output, "write the canonical re-serialization here");
  ingest->callback([&]() { cmd_ingest(ingest_opts, ingest_output); });

  PipelineOpts calibrate_opts;
  auto* calibrate =
      app.add_subcommand("calibrate", "fit temperature and conformal models on the validation split");
  add_pipeline_flags(calibrate, calibrate_opts);
  calibrate->callback([&]() { cmd_calibrate(calibrate_opts); });

  PipelineOpts fit_opts;
  auto* fit = app.add_subcommand("fit-thresholds",
                                 "calibrate, then freeze routing thresholds from validation quantiles");
  add_pipeline_flags(fit, fit_opts);
  fit->callback([&]() { cmd_fit_thresholds(fit_opts); });

  std::string route_input, route_snapshot, route_out_dir;
  unsigned route_threads = 1;
  auto* route = app.add_subcommand("route", "route samples against a frozen threshold snapshot");
  route->add_option("--input", route_input, "sample CSV")->required();
  route->add_option("--thresholds", route_snapshot, "thresholds.json from fit-thresholds or run")
      ->required();
  route->add_option("--out-dir", route_out_dir, "directory for audit.jsonl (stdout when omitted)");
  route->add_option("--threads", route_threads, "routing worker threads");
  route->callback([&]() { cmd_route(route_input, route_snapshot, route_out_dir, route_threads); });

  PipelineOpts eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "end-to-end run; print the metrics document");
  add_pipeline_flags(evaluate, eval_opts);
  evaluate->callback([&]() { cmd_evaluate(eval_opts); });

  PipelineOpts run_opts;
  auto* run = app.add_subcommand("run", "end-to-end run; write all artifacts to --out-dir");
  add_pipeline_flags(run, run_opts);
  run->callback([&]() { cmd_run(run_opts); });

  std::string anchor_input, anchor_out_dir;
  std::size_t n_anchor = 1;
  auto* anchor = app.add_subcommand("anchor-eval",
                                    "score anchor-based baselines on longitudinal visits");
  anchor->add_option("--input", anchor_input, "visits CSV (subject_id, sample_id, timestamp, label, "
                                              "optional feature_*)")
      ->required();
  anchor->add_option("--n-anchor", n_anchor, "visits per subject used as anchors");
  anchor->add_option("--out-dir", anchor_out_dir, "directory for reports (stdout when omitted)");
  anchor->callback([&]() { cmd_anchor_eval(anchor_input, n_anchor, anchor_out_dir); });

  std::string segment_input, segment_output;
  relstack::WindowSpec window_spec;
  auto* segment = app.add_subcommand("segment", "slide labeled windows over a 0/1 annotation stream");
  segment->add_option("--input", segment_input, "single-column CSV with header 'label'")->required();
  segment->add_option("--length", window_spec.length, "window length in samples");
  segment->add_option("--stride", window_spec.stride, "stride in samples");
  segment->add_option("--fog-gamma", window_spec.gamma, "positive-fraction cutoff, strict");
  segment->add_option("--output", segment_output, "windows CSV (stdout when omitted)");
  segment->callback([&]() { cmd_segment(segment_input, window_spec, segment_output); });

  relstack::SyntheticSpec synth_spec;
  std::string synth_task = "classification";
  std::string synth_output;
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort CSV");
  synth->add_option("--task", synth_task, "classification or regression")
      ->check(CLI::IsMember({"classification", "regression"}));
  synth->add_option("--subjects-val", synth_spec.subjects_val, "validation subjects");
  synth->add_option("--subjects-test", synth_spec.subjects_test, "test subjects");
  synth->add_option("--visits-per-subject", synth_spec.visits_per_subject, "visits per subject");
  synth->add_option("--num-classes", synth_spec.num_classes, "classes (classification)");
  synth->add_option("--base-error", synth_spec.base_error, "base error probability");
  synth->add_option("--error-uncertainty-corr", synth_spec.error_uncertainty_corr,
                    "error slope in uncertainty");
  synth->add_option("--ood-fraction", synth_spec.ood_fraction, "fraction of ood rows");
  synth->add_option("--ood-error-boost", synth_spec.ood_error_boost, "extra error for ood rows");
  synth->add_option("--noise", synth_spec.noise, "label noise scale (regression)");
  synth->add_option("--coverage-pattern", synth_spec.coverage_pattern,
                    "observable-node pattern: ppmi, mpower, pads, daphnet, uci");
  synth->add_option("--missing", synth_spec.missing_within_observable,
                    "dropout rate among observable nodes");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_option("--output", synth_output, "cohort CSV path")->required();
  synth->callback([&]() { cmd_synth(synth_spec, synth_task, synth_output); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const relstack::contract_violation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 2;
  } catch (const relstack::input_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const relstack::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
