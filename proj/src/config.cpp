#include "vpg/config.hpp"

#include <cmath>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"
#include "vpg/csv.hpp"
#include "vpg/error.hpp"
#include "vpg/util.hpp"

namespace vpg {

namespace {

nlohmann::json node_to_json(const toml::node& n) {
  if (const auto* t = n.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *t) j[std::string(k.str())] = node_to_json(v);
    return j;
  }
  if (const auto* a = n.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& v : *a) j.push_back(node_to_json(v));
    return j;
  }
  if (auto v = n.value_exact<std::int64_t>()) return *v;
  if (auto v = n.value_exact<double>()) return *v;
  if (auto v = n.value_exact<bool>()) return *v;
  if (auto v = n.value_exact<std::string>()) return *v;
  fail(ErrorCode::ConfigError, "unsupported TOML value (dates and times are not used)");
}

bool same_kind(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Overlay `patch` on `base`, refusing keys the defaults do not know about.
void overlay(nlohmann::json& base, const nlohmann::json& patch, const std::string& path) {
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string where = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) fail(ErrorCode::ConfigError, "unknown config key '" + where + "'");
    auto& slot = base[it.key()];
    if (slot.is_object()) {
      if (!it->is_object()) fail(ErrorCode::ConfigError, "'" + where + "' must be a table");
      overlay(slot, *it, where);
    } else {
      if (!same_kind(slot, *it)) fail(ErrorCode::ConfigError, "'" + where + "' has the wrong type");
      if (slot.is_number_integer() && !it->is_number_integer())
        fail(ErrorCode::ConfigError, "'" + where + "' must be an integer");
      if (slot.is_number_unsigned() && it->get<std::int64_t>() < 0)
        fail(ErrorCode::ConfigError, "'" + where + "' must be non-negative");
      slot = *it;
    }
  }
}

const char* scaler_kind_name(TargetScaler::Kind k) { return k == TargetScaler::Kind::MeanStd ? "meanstd" : "robust"; }

TargetScaler::Kind parse_scaler_kind(const std::string& s) {
  if (s == "meanstd") return TargetScaler::Kind::MeanStd;
  if (s == "robust") return TargetScaler::Kind::MedianMad;
  fail(ErrorCode::ConfigError, "op_scaler must be 'meanstd' or 'robust', got '" + s + "'");
}

}  // namespace

nlohmann::json prepare_options_to_json(const PrepareOptions& p) {
  // winsor alphas of 0 mean "off" so that TOML can express them
  return {{"op_pooled", p.op_pooled},
          {"op_scaler", scaler_kind_name(p.op_scaler)},
          {"op_winsor_alpha", p.op_winsor_alpha.value_or(0.0)},
          {"vp_winsor_alpha", p.vp_winsor_alpha.value_or(0.0)},
          {"uncertainty_weights", p.uncertainty_weights},
          {"uncertainty_alpha", p.uncertainty_alpha},
          {"fp_bits", p.fp_bits}};
}

PrepareOptions prepare_options_from_json(const nlohmann::json& j) {
  PrepareOptions p;
  p.op_pooled = j.at("op_pooled").get<bool>();
  p.op_scaler = parse_scaler_kind(j.at("op_scaler").get<std::string>());
  const double oa = j.at("op_winsor_alpha").get<double>(), va = j.at("vp_winsor_alpha").get<double>();
  if (oa > 0.0) p.op_winsor_alpha = oa;
  if (va > 0.0) p.vp_winsor_alpha = va;
  p.uncertainty_weights = j.at("uncertainty_weights").get<bool>();
  p.uncertainty_alpha = j.at("uncertainty_alpha").get<double>();
  p.fp_bits = j.at("fp_bits").get<int>();
  return p;
}

void RunConfig::validate() const {
  model.validate();
  schedule.validate();
  auto bad = [](const std::string& m) { fail(ErrorCode::ConfigError, m); };
  double total = 0.0;
  for (double r : split.ratio) {
    if (!(r >= 0.0)) bad("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) bad("split ratios must sum to 1");
  if (split.ratio[0] <= 0.0) bad("the train ratio must be positive");
  for (const auto& a : {prepare.op_winsor_alpha, prepare.vp_winsor_alpha})
    if (a && !(*a > 0.0 && *a < 0.5)) bad("winsor alpha must lie in (0, 0.5)");
  if (!(prepare.uncertainty_alpha > 0.0)) bad("uncertainty_alpha must be positive");
  if (prepare.fp_bits < 64 || prepare.fp_bits % 64 != 0) bad("fp_bits must be a positive multiple of 64");
  if (model.fp_concat && model.fp_bits != prepare.fp_bits) bad("model.fp_bits must equal prepare.fp_bits");
  if (eval.replicates < 1) bad("eval.replicates must be positive");
  if (!(eval.detect_temperature_K > 0.0)) bad("eval.detect_temperature_K must be positive");
}

nlohmann::json RunConfig::to_json() const {
  return {{"model", model.to_json()},
          {"schedule", schedule.to_json()},
          {"prepare", prepare_options_to_json(prepare)},
          {"split", {{"ratio", split.ratio}, {"seed", split.seed}}},
          {"synth", synth.to_json()},
          {"eval",
           {{"replicates", eval.replicates}, {"seed", eval.seed}, {"detect_temperature_K", eval.detect_temperature_K}}}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.model = ModelConfig::from_json(j.at("model"));
    c.schedule = ScheduleConfig::from_json(j.at("schedule"));
    c.prepare = prepare_options_from_json(j.at("prepare"));
    c.split.ratio = j.at("split").at("ratio").get<std::array<double, 3>>();
    c.split.seed = j.at("split").at("seed").get<std::uint64_t>();
    c.synth = SynthConfig::from_json(j.at("synth"));
    c.eval.replicates = j.at("eval").at("replicates").get<int>();
    c.eval.seed = j.at("eval").at("seed").get<std::uint64_t>();
    c.eval.detect_temperature_K = j.at("eval").at("detect_temperature_K").get<double>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    fail(ErrorCode::ConfigError, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string RunConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

nlohmann::json toml_to_json(std::string_view text) {
  try {
    return node_to_json(toml::parse(text));
  } catch (const toml::parse_error& e) {
    const auto& src = e.source();
    fail(ErrorCode::ConfigError, "TOML line " + std::to_string(src.begin.line) + ": " + std::string(e.description()));
  }
}

RunConfig parse_config_toml(std::string_view text) {
  nlohmann::json j = RunConfig{}.to_json();
  overlay(j, toml_to_json(text), "");
  return RunConfig::from_json(j);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, e.what());
  }
  return parse_config_toml(text);
}

}  // namespace vpg
