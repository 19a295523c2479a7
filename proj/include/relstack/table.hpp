#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "relstack/calibration.hpp"
#include "relstack/common.hpp"
#include "relstack/rng.hpp"
#include "relstack/symptom.hpp"

namespace relstack {

enum class TaskKind { classification, regression };
enum class Split { train, val, test };

inline constexpr std::array<std::string_view, 3> kSplitNames = {"train", "val", "test"};

namespace detail {

// Shortest round-trip formatting; what every CSV artifact uses.
inline std::string format_double(double v) {
  std::array<char, 40> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw contract_violation("format_double: to_chars failed");
  return std::string(buf.data(), ptr);
}

inline double parse_double(const std::string& field, std::size_t line, const std::string& column) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw input_error("line " + std::to_string(line) + ", column '" + column +
                      "': not a number: '" + field + "'");
  if (!std::isfinite(value))
    throw input_error("line " + std::to_string(line) + ", column '" + column + "': non-finite value");
  return value;
}

// Plain comma split; the exchange format does not use quoting, so embedded
// commas in identifiers are rejected at write time instead.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline void check_id(const std::string& id, const char* what) {
  if (id.empty()) throw input_error(std::string(what) + " must not be empty");
  if (id.find(',') != std::string::npos || id.find('\n') != std::string::npos)
    throw input_error(std::string(what) + " must not contain commas or newlines: '" + id + "'");
}

// Write to a sibling temp file, then rename into place.
inline void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw input_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw input_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

// One exchange-format row: identity, node severities with explicit
// missingness, routing signals, the prediction payload, and an optional
// label and split.
struct SampleRow {
  std::string sample_id;
  std::string subject_id;
  std::string dataset_id;
  double timestamp = 0.0;
  std::array<std::optional<double>, kNumNodes> nodes{};
  double quality = 0.0;
  double uncertainty = 0.0;
  double ood = 0.0;
  std::vector<double> class_scores;  // logits or probabilities, per table payload kind
  double point = 0.0;
  double q_low = 0.0;
  double q_high = 0.0;
  std::optional<double> label;
  std::optional<Split> split;
};

struct SampleTable {
  TaskKind task = TaskKind::classification;
  int num_classes = 0;           // 0 for regression
  bool payload_is_probs = false; // classification payload column kind
  bool has_split = false;
  std::vector<SampleRow> rows;
};

inline SymptomRecord record_from_row(const SampleRow& row) {
  return {row.sample_id, row.subject_id, row.dataset_id, row.timestamp, row.nodes};
}

inline ClassifierOutput classifier_output_from_row(const SampleRow& row, bool payload_is_probs) {
  ClassifierOutput out;
  if (payload_is_probs)
    out.probabilities = row.class_scores;
  else
    out.logits = row.class_scores;
  if (row.label) out.label = static_cast<int>(*row.label);
  return out;
}

inline RegressorOutput regressor_output_from_row(const SampleRow& row) {
  return {row.point, row.q_low, row.q_high, row.label};
}

namespace detail {

inline std::vector<std::string> table_header(const SampleTable& table) {
  std::vector<std::string> cols = {"sample_id", "subject_id", "dataset_id", "timestamp"};
  for (std::size_t j = 0; j < kNumNodes; ++j) cols.push_back("node_" + std::to_string(j));
  cols.insert(cols.end(), {"quality", "uncertainty", "ood"});
  if (table.task == TaskKind::classification) {
    const std::string stem = table.payload_is_probs ? "prob_" : "logit_";
    for (int k = 0; k < table.num_classes; ++k) cols.push_back(stem + std::to_string(k));
  } else {
    cols.insert(cols.end(), {"point", "q_low", "q_high"});
  }
  cols.push_back("label");
  if (table.has_split) cols.push_back("split");
  return cols;
}

}  // namespace detail

inline std::string serialize_csv(const SampleTable& table) {
  std::string out;
  const auto header = detail::table_header(table);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out.push_back(',');
    out += header[i];
  }
  out.push_back('\n');
  for (const auto& row : table.rows) {
    detail::check_id(row.sample_id, "sample_id");
    detail::check_id(row.subject_id, "subject_id");
    detail::check_id(row.dataset_id, "dataset_id");
    out += row.sample_id;
    out.push_back(',');
    out += row.subject_id;
    out.push_back(',');
    out += row.dataset_id;
    out.push_back(',');
    out += detail::format_double(row.timestamp);
    for (std::size_t j = 0; j < kNumNodes; ++j) {
      out.push_back(',');
      out += row.nodes[j] ? detail::format_double(*row.nodes[j]) : "NA";
    }
    out.push_back(',');
    out += detail::format_double(row.quality);
    out.push_back(',');
    out += detail::format_double(row.uncertainty);
    out.push_back(',');
    out += detail::format_double(row.ood);
    if (table.task == TaskKind::classification) {
      if (static_cast<int>(row.class_scores.size()) != table.num_classes)
        throw input_error("serialize_csv: row " + row.sample_id + " has wrong payload width");
      for (double v : row.class_scores) {
        out.push_back(',');
        out += detail::format_double(v);
      }
    } else {
      out.push_back(',');
      out += detail::format_double(row.point);
      out.push_back(',');
      out += detail::format_double(row.q_low);
      out.push_back(',');
      out += detail::format_double(row.q_high);
    }
    out.push_back(',');
    if (row.label) out += detail::format_double(*row.label);
    if (table.has_split) {
      out.push_back(',');
      if (row.split) out += kSplitNames[static_cast<std::size_t>(*row.split)];
    }
    out.push_back('\n');
  }
  return out;
}

inline void write_csv(const SampleTable& table, const std::string& path) {
  detail::atomic_write_file(path, serialize_csv(table));
}

// Parse and validate the exchange CSV. Structural problems (missing columns,
// duplicate sample ids) and malformed rows are rejected with line numbers.
inline SampleTable ingest_csv(std::istream& in, TaskKind task) {
  std::string line;
  if (!std::getline(in, line)) throw input_error("ingest_csv: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (col.count(header[i])) throw input_error("ingest_csv: duplicate column '" + header[i] + "'");
    col[header[i]] = i;
  }
  const auto need = [&](const std::string& name) {
    const auto it = col.find(name);
    if (it == col.end()) throw input_error("ingest_csv: missing required column '" + name + "'");
    return it->second;
  };

  SampleTable table;
  table.task = task;
  const std::size_t c_sample = need("sample_id");
  const std::size_t c_subject = need("subject_id");
  const std::size_t c_dataset = need("dataset_id");
  const std::size_t c_time = need("timestamp");
  std::array<std::size_t, kNumNodes> c_nodes{};
  for (std::size_t j = 0; j < kNumNodes; ++j) c_nodes[j] = need("node_" + std::to_string(j));
  const std::size_t c_quality = need("quality");
  const std::size_t c_uncert = need("uncertainty");
  const std::size_t c_ood = need("ood");
  const std::size_t c_label = need("label");
  const bool has_split_col = col.count("split") > 0;
  table.has_split = has_split_col;
  const std::size_t c_split = has_split_col ? col["split"] : 0;

  std::vector<std::size_t> c_scores;
  std::size_t c_point = 0, c_qlow = 0, c_qhigh = 0;
  if (task == TaskKind::classification) {
    const bool probs = col.count("prob_0") > 0;
    const bool logits = col.count("logit_0") > 0;
    if (probs == logits)
      throw input_error("ingest_csv: classification needs either prob_* or logit_* columns");
    table.payload_is_probs = probs;
    const std::string stem = probs ? "prob_" : "logit_";
    for (int k = 0;; ++k) {
      const auto it = col.find(stem + std::to_string(k));
      if (it == col.end()) break;
      c_scores.push_back(it->second);
    }
    if (c_scores.size() < 2) throw input_error("ingest_csv: need at least two " +
                                               std::string(probs ? "prob_*" : "logit_*") + " columns");
    table.num_classes = static_cast<int>(c_scores.size());
  } else {
    c_point = need("point");
    c_qlow = need("q_low");
    c_qhigh = need("q_high");
  }

  std::map<std::string, std::size_t> seen_ids;  // sample_id -> first line
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw input_error("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));

    SampleRow row;
    row.sample_id = fields[c_sample];
    row.subject_id = fields[c_subject];
    row.dataset_id = fields[c_dataset];
    detail::check_id(row.sample_id, "sample_id");
    detail::check_id(row.subject_id, "subject_id");
    detail::check_id(row.dataset_id, "dataset_id");
    const auto [it, inserted] = seen_ids.emplace(row.sample_id, line_no);
    if (!inserted)
      throw input_error("duplicate sample_id '" + row.sample_id + "' on lines " +
                        std::to_string(it->second) + " and " + std::to_string(line_no));

    row.timestamp = detail::parse_double(fields[c_time], line_no, "timestamp");
    for (std::size_t j = 0; j < kNumNodes; ++j) {
      const std::string& f = fields[c_nodes[j]];
      if (f.empty() || f == "NA") continue;  // missing stays missing
      row.nodes[j] = detail::parse_double(f, line_no, "node_" + std::to_string(j));
    }
    row.quality = detail::parse_double(fields[c_quality], line_no, "quality");
    row.uncertainty = detail::parse_double(fields[c_uncert], line_no, "uncertainty");
    row.ood = detail::parse_double(fields[c_ood], line_no, "ood");

    if (task == TaskKind::classification) {
      row.class_scores.reserve(c_scores.size());
      for (std::size_t k = 0; k < c_scores.size(); ++k)
        row.class_scores.push_back(
            detail::parse_double(fields[c_scores[k]], line_no, "score_" + std::to_string(k)));
    } else {
      row.point = detail::parse_double(fields[c_point], line_no, "point");
      row.q_low = detail::parse_double(fields[c_qlow], line_no, "q_low");
      row.q_high = detail::parse_double(fields[c_qhigh], line_no, "q_high");
      if (row.q_low > row.q_high)
        throw input_error("line " + std::to_string(line_no) + ": q_low > q_high");
    }

    if (!fields[c_label].empty())
      row.label = detail::parse_double(fields[c_label], line_no, "label");
    if (task == TaskKind::classification && row.label) {
      const double l = *row.label;
      if (l != std::floor(l) || l < 0.0 || l >= static_cast<double>(table.num_classes))
        throw input_error("line " + std::to_string(line_no) + ": label must be a class index");
    }

    if (has_split_col && !fields[c_split].empty()) {
      const std::string& s = fields[c_split];
      if (s == "train")
        row.split = Split::train;
      else if (s == "val")
        row.split = Split::val;
      else if (s == "test")
        row.split = Split::test;
      else
        throw input_error("line " + std::to_string(line_no) + ": unknown split '" + s + "'");
    }

    record_from_row(row).validate();
    const auto unit = [&](double v, const char* what) {
      if (!(v >= 0.0 && v <= 1.0))
        throw input_error("line " + std::to_string(line_no) + ": " + what + " outside [0, 1]");
    };
    unit(row.quality, "quality");
    unit(row.ood, "ood");
    if (row.uncertainty < 0.0)
      throw input_error("line " + std::to_string(line_no) + ": negative uncertainty");
    if (task == TaskKind::classification && table.payload_is_probs) {
      double sum = 0.0;
      for (double p : row.class_scores) {
        if (!(p >= 0.0))
          throw input_error("line " + std::to_string(line_no) + ": negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw input_error("line " + std::to_string(line_no) + ": probabilities do not sum to 1");
    }

    table.rows.push_back(std::move(row));
  }
  return table;
}

inline SampleTable ingest_csv_file(const std::string& path, TaskKind task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open: " + path);
  return ingest_csv(in, task);
}

// Subject-level split assignment: subjects are shuffled with the seeded Rng
// and dealt into train/val/test by fraction, so one subject never lands in
// two splits.
inline void derive_subject_split(SampleTable& table, double train_frac, double val_frac,
                                 std::uint64_t seed) {
  if (!(train_frac >= 0.0 && val_frac >= 0.0 && train_frac + val_frac <= 1.0))
    throw config_error("derive_subject_split: fractions must be nonnegative and sum to at most 1");
  std::vector<std::string> subjects;
  for (const auto& row : table.rows) subjects.push_back(row.subject_id);
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  Rng rng(seed);
  rng.shuffle(subjects);
  const auto n = subjects.size();
  const auto n_train = static_cast<std::size_t>(std::floor(train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(val_frac * static_cast<double>(n)));
  std::map<std::string, Split> assignment;
  for (std::size_t i = 0; i < n; ++i) {
    Split s = Split::test;
    if (i < n_train)
      s = Split::train;
    else if (i < n_train + n_val)
      s = Split::val;
    assignment[subjects[i]] = s;
  }
  for (auto& row : table.rows) row.split = assignment[row.subject_id];
  table.has_split = true;
}

}  // namespace relstack
