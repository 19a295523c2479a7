#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "json.hpp"

#include "relstack/calibration.hpp"
#include "relstack/common.hpp"
#include "relstack/metrics.hpp"
#include "relstack/router.hpp"
#include "relstack/symptom.hpp"
#include "relstack/table.hpp"

namespace relstack {

using json = nlohmann::ordered_json;

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
    throw contract_violation("sha256_hex: digest failure");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<std::size_t>(length) * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0x0f]);
  }
  return out;
}

namespace detail {

inline std::string fixed_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9e", v);
  return buf;
}

}  // namespace detail

// Canonical serialization of a threshold config: keys sorted, numbers at a
// fixed precision. This exact string is what the digest commits to.
inline std::string canonical_threshold_json(const ThresholdConfig& cfg) {
  std::string s = "{";
  s += "\"coverage_budget\":" + detail::fixed_number(cfg.coverage_budget);
  s += ",\"frozen\":" + std::string(cfg.frozen ? "true" : "false");
  s += ",\"quantile_spec\":{";
  s += "\"ood_pct\":" + detail::fixed_number(cfg.quantile_spec.ood_pct);
  s += ",\"quality_pct\":" + detail::fixed_number(cfg.quantile_spec.quality_pct);
  s += ",\"u_abstain_pct\":" + detail::fixed_number(cfg.quantile_spec.u_abstain_pct);
  s += ",\"u_refer_pct\":" + detail::fixed_number(cfg.quantile_spec.u_refer_pct);
  s += "}";
  s += ",\"refer_uses_uncertainty\":" + std::string(cfg.refer_uses_uncertainty ? "true" : "false");
  s += ",\"tau_c\":" + detail::fixed_number(cfg.tau_c);
  s += ",\"tau_ood\":" + detail::fixed_number(cfg.tau_ood);
  s += ",\"tau_q\":" + detail::fixed_number(cfg.tau_q);
  s += ",\"tau_u_abstain\":" + detail::fixed_number(cfg.tau_u_abstain);
  s += ",\"tau_u_refer\":" + detail::fixed_number(cfg.tau_u_refer);
  s += ",\"tau_w\":" + detail::fixed_number(cfg.tau_w);
  s += "}";
  return s;
}

inline std::string threshold_digest(const ThresholdConfig& cfg) {
  return sha256_hex(canonical_threshold_json(cfg));
}

// A frozen policy plus the digest it is audited under.
struct FrozenThresholds {
  ThresholdConfig config;
  std::string digest;
};

inline FrozenThresholds freeze_with_digest(ThresholdConfig cfg) {
  cfg.frozen = true;
  cfg.validate();
  return {cfg, threshold_digest(cfg)};
}

// Metric reports round to six decimals at serialization time only; model and
// audit artifacts keep full precision so comparisons replay exactly.
inline double round6(double v) { return std::round(v * 1e6) / 1e6; }

inline json json_metric(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return round6(*v);
}

inline json json_metric(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round6(v);
}

inline json to_json(const QuantileSpec& q) {
  return {{"quality_pct", q.quality_pct},
          {"u_abstain_pct", q.u_abstain_pct},
          {"u_refer_pct", q.u_refer_pct},
          {"ood_pct", q.ood_pct}};
}

inline QuantileSpec quantile_spec_from_json(const json& j) {
  QuantileSpec q;
  q.quality_pct = j.at("quality_pct").get<double>();
  q.u_abstain_pct = j.at("u_abstain_pct").get<double>();
  q.u_refer_pct = j.at("u_refer_pct").get<double>();
  q.ood_pct = j.at("ood_pct").get<double>();
  return q;
}

inline json to_json(const ThresholdConfig& cfg) {
  return {{"tau_q", cfg.tau_q},
          {"tau_c", cfg.tau_c},
          {"tau_ood", cfg.tau_ood},
          {"tau_u_abstain", cfg.tau_u_abstain},
          {"tau_u_refer", cfg.tau_u_refer},
          {"tau_w", cfg.tau_w},
          {"quantile_spec", to_json(cfg.quantile_spec)},
          {"coverage_budget", cfg.coverage_budget},
          {"refer_uses_uncertainty", cfg.refer_uses_uncertainty},
          {"frozen", cfg.frozen}};
}

inline ThresholdConfig threshold_config_from_json(const json& j) {
  ThresholdConfig cfg;
  cfg.tau_q = j.at("tau_q").get<double>();
  cfg.tau_c = j.at("tau_c").get<double>();
  cfg.tau_ood = j.at("tau_ood").get<double>();
  cfg.tau_u_abstain = j.at("tau_u_abstain").get<double>();
  cfg.tau_u_refer = j.at("tau_u_refer").get<double>();
  cfg.tau_w = j.at("tau_w").get<double>();
  cfg.quantile_spec = quantile_spec_from_json(j.at("quantile_spec"));
  cfg.coverage_budget = j.at("coverage_budget").get<double>();
  cfg.refer_uses_uncertainty = j.at("refer_uses_uncertainty").get<bool>();
  cfg.frozen = j.at("frozen").get<bool>();
  return cfg;
}

// Calibration models share one document: kind, alpha, q_hat, n_cal, T.
// q_hat is null when the finite-sample rank was unsatisfiable; T is null for
// regression.
inline json calibration_to_json(const ConformalModel& conformal,
                                const std::optional<TemperatureModel>& temperature) {
  json j;
  j["kind"] = conformal.score_kind == ScoreKind::classification_score ? "classification"
                                                                      : "regression";
  j["alpha"] = conformal.alpha;
  j["q_hat"] = conformal.unbounded ? json(nullptr) : json(conformal.q_hat);
  j["n_cal"] = conformal.n_cal;
  j["T"] = temperature ? json(temperature->temperature) : json(nullptr);
  j["unbounded"] = conformal.unbounded;
  return j;
}

struct CalibrationDoc {
  ConformalModel conformal;
  std::optional<TemperatureModel> temperature;
};

inline CalibrationDoc calibration_from_json(const json& j) {
  CalibrationDoc doc;
  const std::string kind = j.at("kind").get<std::string>();
  doc.conformal.score_kind = kind == "classification" ? ScoreKind::classification_score
                                                      : ScoreKind::regression_residual;
  doc.conformal.alpha = j.at("alpha").get<double>();
  doc.conformal.n_cal = j.at("n_cal").get<std::size_t>();
  doc.conformal.unbounded = j.at("unbounded").get<bool>();
  doc.conformal.q_hat = doc.conformal.unbounded ? std::numeric_limits<double>::infinity()
                                                : j.at("q_hat").get<double>();
  if (!j.at("T").is_null()) {
    TemperatureModel t;
    t.temperature = j.at("T").get<double>();
    doc.temperature = t;
  }
  return doc;
}

inline json to_json(const MinMaxNormalizer& n) { return {{"lo", n.lo}, {"hi", n.hi}}; }

inline MinMaxNormalizer normalizer_from_json(const json& j) {
  return {j.at("lo").get<double>(), j.at("hi").get<double>()};
}

// One audit line per routing decision, full precision, so the recorded
// comparison can be replayed bit-for-bit.
inline json to_json(const RoutingDecision& d) {
  json j;
  j["sample_id"] = d.sample_id;
  j["action"] = kActionNames[static_cast<std::size_t>(d.action)];
  j["trigger"] = kTriggerNames[static_cast<std::size_t>(d.trigger)];
  if (d.trigger == Trigger::none) {
    j["trigger_value"] = nullptr;
    j["threshold_value"] = nullptr;
  } else {
    j["trigger_value"] = d.trigger_value;
    j["threshold_value"] = d.threshold_value;
  }
  j["config_digest"] = d.config_digest;
  return j;
}

inline json to_json(const ActionSummary& s) {
  json actions;
  for (std::size_t a = 0; a < 4; ++a) {
    json entry;
    entry["count"] = s.counts[a];
    entry["fraction"] = json_metric(s.fractions[a]);
    entry["conditional"] = json_metric(s.conditional[a]);
    actions[std::string(kActionNames[a])] = entry;
  }
  json j;
  j["total"] = s.total;
  j["outcome"] = s.kind == OutcomeKind::accuracy ? "accuracy" : "mean_abs_error";
  j["actions"] = actions;
  j["overall"] = json_metric(s.overall);
  return j;
}

inline json to_json(const RegressionReport& r) {
  json j;
  j["mae"] = json_metric(r.mae);
  j["rmse"] = json_metric(r.rmse);
  j["r2"] = json_metric(r.r2);
  j["pearson"] = json_metric(r.pearson);
  j["spearman"] = json_metric(r.spearman);
  j["ccc"] = json_metric(r.ccc);
  j["n"] = r.n;
  return j;
}

inline json to_json(const ClassificationReport& r) {
  json j;
  j["accuracy"] = json_metric(r.accuracy);
  j["accuracy_ci"] = {json_metric(r.accuracy_ci.first), json_metric(r.accuracy_ci.second)};
  j["f1"] = json_metric(r.macro_f1);
  j["f1_ci"] = {json_metric(r.f1_ci.first), json_metric(r.f1_ci.second)};
  j["auc"] = json_metric(r.auc_value);
  if (r.auc_ci)
    j["auc_ci"] = {json_metric(r.auc_ci->first), json_metric(r.auc_ci->second)};
  else
    j["auc_ci"] = nullptr;
  j["auprc"] = json_metric(r.auprc_value);
  j["ece"] = json_metric(r.ece_value);
  j["brier"] = json_metric(r.brier_value);
  j["n"] = r.n;
  return j;
}

inline json to_json(const AgreementReport& r) {
  json j;
  j["icc21"] = json_metric(r.icc21_value);
  j["icc21_degenerate"] = r.icc21_degenerate;
  j["coverage"] = json_metric(r.coverage);
  j["target"] = json_metric(r.target);
  return j;
}

}  // namespace relstack
