#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relstack/common.hpp"

namespace relstack {

inline constexpr std::size_t kNumNodes = 8;

// Fixed node order. The reliability node is last and is observable in every
// dataset by construction.
enum class SymptomNode : std::size_t {
  tremor = 0,
  bradykinesia = 1,
  axial_gait = 2,
  motor_fluctuation = 3,
  cognition = 4,
  sleep_autonomic = 5,
  mood = 6,
  reliability_state = 7,
};

inline constexpr std::array<std::string_view, kNumNodes> kNodeNames = {
    "tremor",    "bradykinesia",   "axial_gait", "motor_fluctuation",
    "cognition", "sleep_autonomic", "mood",       "reliability_state"};

// Min-max mapping of a raw scale value into [0, 1]. flip_to_severity inverts
// scales where larger raw values mean healthier.
struct NormalizationSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  double epsilon = 1e-9;
  bool flip_to_severity = false;
};

// Out-of-range inputs are clamped after normalization; callers that need an
// audit trail compare the result against the unclamped value themselves.
inline double normalize_severity(double x, const NormalizationSpec& spec) {
  if (!(spec.x_max >= spec.x_min)) throw config_error("normalize_severity: x_max < x_min");
  if (!(spec.epsilon > 0.0) || !std::isfinite(spec.epsilon))
    throw config_error("normalize_severity: epsilon must be positive");
  if (!std::isfinite(x)) throw input_error("normalize_severity: non-finite input");
  double norm = (x - spec.x_min) / (spec.x_max - spec.x_min + spec.epsilon);
  norm = std::clamp(norm, 0.0, 1.0);
  return spec.flip_to_severity ? 1.0 - norm : norm;
}

// One sample in the shared 8-node space. A node is either a severity in
// [0, 1] or missing. Missing is structural (empty optional), never 0 or NaN,
// so it cannot silently take part in arithmetic.
struct SymptomRecord {
  std::string sample_id;
  std::string subject_id;
  std::string dataset_id;
  double timestamp = 0.0;
  std::array<std::optional<double>, kNumNodes> nodes{};

  bool missing(std::size_t node) const {
    require(node < kNumNodes, "SymptomRecord: node index out of range");
    return !nodes[node].has_value();
  }

  std::array<bool, kNumNodes> mask() const {
    std::array<bool, kNumNodes> m{};
    for (std::size_t j = 0; j < kNumNodes; ++j) m[j] = !nodes[j].has_value();
    return m;
  }

  // Reading a missing node is a programming error, not a data error.
  double node_value(std::size_t node) const {
    require(node < kNumNodes, "SymptomRecord: node index out of range");
    require(nodes[node].has_value(), "SymptomRecord: arithmetic over a missing node");
    return *nodes[node];
  }

  void validate() const {
    if (!std::isfinite(timestamp))
      throw input_error("record " + sample_id + ": non-finite timestamp");
    for (std::size_t j = 0; j < kNumNodes; ++j) {
      if (nodes[j] && !(std::isfinite(*nodes[j]) && *nodes[j] >= 0.0 && *nodes[j] <= 1.0)) {
        throw input_error("record " + sample_id + ": node " + std::string(kNodeNames[j]) +
                          " outside [0, 1]");
      }
    }
  }
};

// The nodes a dataset can measure in principle. Distinct from per-sample
// missingness: completeness is judged only over these nodes.
struct ObservableSet {
  std::string dataset_id;
  std::array<bool, kNumNodes> observable{};

  std::size_t size() const {
    std::size_t n = 0;
    for (bool b : observable) n += b ? 1 : 0;
    return n;
  }

  void validate() const {
    if (size() == 0) throw config_error("ObservableSet: empty for dataset " + dataset_id);
    if (!observable[static_cast<std::size_t>(SymptomNode::reliability_state)])
      throw config_error("ObservableSet: reliability_state must be observable (" + dataset_id + ")");
  }

  static ObservableSet all(std::string dataset_id) {
    ObservableSet s{std::move(dataset_id), {}};
    s.observable.fill(true);
    return s;
  }

  static ObservableSet of(std::string dataset_id, std::initializer_list<SymptomNode> nodes) {
    ObservableSet s{std::move(dataset_id), {}};
    for (SymptomNode n : nodes) s.observable[static_cast<std::size_t>(n)] = true;
    s.validate();
    return s;
  }

  // Built-in coverage patterns keyed by a case-insensitive dataset name.
  // Unknown names observe all nodes.
  static ObservableSet pattern(const std::string& dataset_id) {
    std::string key;
    key.reserve(dataset_id.size());
    for (char c : dataset_id) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    using N = SymptomNode;
    if (key == "mpower")
      return of(dataset_id, {N::tremor, N::bradykinesia, N::axial_gait, N::motor_fluctuation,
                             N::cognition, N::reliability_state});
    if (key == "pads") return of(dataset_id, {N::tremor, N::bradykinesia, N::reliability_state});
    if (key == "daphnet")
      return of(dataset_id, {N::bradykinesia, N::axial_gait, N::motor_fluctuation, N::reliability_state});
    if (key == "uci") return of(dataset_id, {N::reliability_state});
    return all(dataset_id);  // ppmi and anything unrecognized
  }
};

// Fraction of the dataset's observable nodes actually present in a record.
inline double completeness(const SymptomRecord& record, const ObservableSet& obs) {
  obs.validate();
  require(obs.dataset_id == record.dataset_id,
          "completeness: record dataset '" + record.dataset_id + "' does not match observable set '" +
              obs.dataset_id + "'");
  std::size_t observed = 0;
  std::size_t total = 0;
  for (std::size_t j = 0; j < kNumNodes; ++j) {
    if (!obs.observable[j]) continue;
    ++total;
    if (record.nodes[j].has_value()) ++observed;
  }
  return static_cast<double>(observed) / static_cast<double>(total);
}

// Auxiliary reliability score: completeness * quality * retained certainty.
// Zero as soon as any factor collapses; monotone in each argument. The
// uncertainty is expected on a [0, 1]-ish scale (see MinMaxNormalizer);
// values above 1 saturate.
inline double reliability_state(double completeness, double quality, double uncertainty) {
  require(std::isfinite(completeness) && completeness >= 0.0 && completeness <= 1.0,
          "reliability_state: completeness outside [0, 1]");
  require(std::isfinite(quality) && quality >= 0.0 && quality <= 1.0,
          "reliability_state: quality outside [0, 1]");
  require(std::isfinite(uncertainty) && uncertainty >= 0.0,
          "reliability_state: uncertainty must be nonnegative");
  return completeness * quality * (1.0 - std::min(uncertainty, 1.0));
}

// Raw routing signals for one sample. quality/ood/completeness live in
// [0, 1]; uncertainty is any nonnegative scale.
struct ReliabilitySignals {
  double quality = 0.0;
  double uncertainty = 0.0;
  double ood = 0.0;
  double completeness = 0.0;
  double reliability = 0.0;

  void validate() const {
    auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
    require(unit(quality), "ReliabilitySignals: quality outside [0, 1]");
    require(std::isfinite(uncertainty) && uncertainty >= 0.0,
            "ReliabilitySignals: uncertainty must be nonnegative");
    require(unit(ood), "ReliabilitySignals: ood outside [0, 1]");
    require(unit(completeness), "ReliabilitySignals: completeness outside [0, 1]");
    require(unit(reliability), "ReliabilitySignals: reliability outside [0, 1]");
  }
};

// Validation-split min-max rescaling for raw uncertainties; frozen together
// with the routing thresholds so test-time behavior cannot drift.
struct MinMaxNormalizer {
  double lo = 0.0;
  double hi = 1.0;

  static MinMaxNormalizer fit(std::span<const double> values) {
    if (values.empty()) throw config_error("MinMaxNormalizer: empty fit sample");
    auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    return {*mn, *mx};
  }

  double operator()(double x) const {
    return std::clamp((x - lo) / (hi - lo + 1e-12), 0.0, 1.0);
  }
};

struct AttentionResult {
  std::vector<double> weights;    // softmax over query-key dot products
  std::vector<double> aggregate;  // weighted sum of value vectors
};

// Softmax attention over node embeddings, max-subtracted for stability.
// All vectors must share one dimension.
inline AttentionResult attention_aggregate(std::span<const double> query,
                                           const std::vector<std::vector<double>>& keys,
                                           const std::vector<std::vector<double>>& values) {
  if (keys.empty() || keys.size() != values.size())
    throw input_error("attention_aggregate: need equally many keys and values, at least one each");
  const std::size_t dim = query.size();
  if (dim == 0) throw input_error("attention_aggregate: empty query");
  for (const auto& k : keys)
    if (k.size() != dim) throw input_error("attention_aggregate: key dimension mismatch");
  for (const auto& v : values)
    if (v.size() != dim) throw input_error("attention_aggregate: value dimension mismatch");

  const std::size_t m = keys.size();
  std::vector<double> logits(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double dot = 0.0;
    for (std::size_t i = 0; i < dim; ++i) dot += query[i] * keys[j][i];
    logits[j] = dot;
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  std::vector<double> weights(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    weights[j] = std::exp(logits[j] - peak);
    total += weights[j];
  }
  for (double& w : weights) w /= total;

  std::vector<double> aggregate(dim, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t i = 0; i < dim; ++i) aggregate[i] += weights[j] * values[j][i];
  return {std::move(weights), std::move(aggregate)};
}

}  // namespace relstack
