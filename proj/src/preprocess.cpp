#include "vpg/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "vpg/error.hpp"
#include "vpg/util.hpp"

namespace vpg {

const char* to_string(Endpoint e) {
  switch (e) {
    case Endpoint::VP: return "VP";
    case Endpoint::OA: return "OA";
    case Endpoint::OW: return "OW";
  }
  return "VP";
}

const char* to_string(Medium m) {
  switch (m) {
    case Medium::Air: return "air";
    case Medium::Water: return "water";
    case Medium::None: return "none";
  }
  return "none";
}

Endpoint parse_endpoint(std::string_view s) {
  std::string l = to_lower(trim(s));
  if (l == "vp") return Endpoint::VP;
  if (l == "oa" || l == "op_air") return Endpoint::OA;
  if (l == "ow" || l == "op_water") return Endpoint::OW;
  fail(ErrorCode::FormatError, "unknown endpoint '" + std::string(s) + "'");
}

Medium parse_medium(std::string_view s) {
  std::string l = to_lower(trim(s));
  if (l == "air") return Medium::Air;
  if (l == "water") return Medium::Water;
  if (l.empty() || l == "none") return Medium::None;
  fail(ErrorCode::MissingMedium, "unknown medium '" + std::string(s) + "'");
}

std::string normalize_unit(std::string_view unit) {
  std::string u;
  std::string_view s = unit;
  for (std::size_t i = 0; i < s.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    // UTF-8 sequences we care about: µ (C2 B5), μ (CE BC), · (C2 B7), ⁻ (E2 81 BB), ³ (C2 B3), ¹ (C2 B9)
    if (c == 0xC2 && i + 1 < s.size()) {
      unsigned char d = static_cast<unsigned char>(s[i + 1]);
      if (d == 0xB5) u += 'u';
      else if (d == 0xB3) u += '3';
      else if (d == 0xB9) u += '1';
      else if (d == 0xB7) u += ' ';
      ++i;
      continue;
    }
    if (c == 0xCE && i + 1 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0xBC) {
      u += 'u';
      ++i;
      continue;
    }
    if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x81 &&
        static_cast<unsigned char>(s[i + 2]) == 0xBB) {
      u += '-';
      i += 2;
      continue;
    }
    if (c == '*' || c == '.') {
      u += ' ';
      continue;
    }
    u += static_cast<char>(std::tolower(c));
  }
  u = trim(u);
  // "mg m-3" / "mg m^-3" / "mg/m^3" -> "mg/m3"
  std::string out;
  std::vector<std::string> parts;
  for (auto& p : split(u, ' '))
    if (!p.empty()) parts.push_back(p);
  if (parts.size() == 2) {
    std::string den = parts[1];
    den.erase(std::remove(den.begin(), den.end(), '^'), den.end());
    if (den.size() > 2 && den.compare(den.size() - 2, 2, "-3") == 0) out = parts[0] + "/" + den.substr(0, den.size() - 2) + "3";
    else if (den.size() > 2 && den.compare(den.size() - 2, 2, "-1") == 0) out = parts[0] + "/" + den.substr(0, den.size() - 2);
    else out = parts[0] + den;
  } else {
    out = u;
    out.erase(std::remove(out.begin(), out.end(), ' '), out.end());
    out.erase(std::remove(out.begin(), out.end(), '^'), out.end());
  }
  if (out == "torr") out = "mmhg";
  return out;
}

double harmonize_vp(double value, std::string_view unit) {
  std::string u = normalize_unit(unit);
  double f;
  if (u == "pa") f = 1.0;
  else if (u == "kpa") f = 1e3;
  else if (u == "mpa") f = 1e6;
  else if (u == "hpa" || u == "mbar") f = 100.0;
  else if (u == "mmhg") f = units::kMmHgPa;
  else if (u == "atm") f = units::kAtmPa;
  else if (u == "bar") f = units::kBarPa;
  else fail(ErrorCode::UnknownUnit, "unknown pressure unit '" + std::string(unit) + "'");
  if (!(value > 0.0) || !std::isfinite(value))
    fail(ErrorCode::NonPositivePressure, "pressure must be positive, got " + format_double(value));
  return std::log10(value * f);
}

double to_kelvin(double value, std::string_view unit) {
  std::string u = normalize_unit(unit);
  double k;
  if (u == "k") k = value;
  else if (u == "c" || u == "degc") k = value + 273.15;
  else if (u == "f" || u == "degf") k = (value - 32.0) * 5.0 / 9.0 + 273.15;
  else fail(ErrorCode::UnknownUnit, "unknown temperature unit '" + std::string(unit) + "'");
  if (!(k > 0.0)) fail(ErrorCode::InvalidArgument, "temperature must be above absolute zero");
  return k;
}

const char* op_basis_unit(Medium medium) {
  switch (medium) {
    case Medium::Air: return "mg/m3";
    case Medium::Water: return "ug/L";
    case Medium::None: break;
  }
  fail(ErrorCode::MissingMedium, "odor thresholds need a medium (air or water)");
}

double harmonize_op(double value, std::string_view unit, Medium medium, std::optional<double> molar_mass) {
  if (medium == Medium::None) fail(ErrorCode::MissingMedium, "odor threshold record without medium");
  std::string u = normalize_unit(unit);
  double f = 0.0;
  if (medium == Medium::Air) {
    if (u == "mg/m3") f = 1.0;
    else if (u == "ug/m3") f = 1e-3;
    else if (u == "ng/m3") f = 1e-6;
    else if (u == "g/m3") f = 1e3;
    else if (u == "ug/l") f = 1.0;
    else if (u == "ng/l") f = 1e-3;
    else if (u == "ppm" || u == "ppb" || u == "ppt") {
      if (!molar_mass || !(*molar_mass > 0))
        fail(ErrorCode::InvalidArgument, "ppm/ppb in air needs a positive molar mass");
      double scale = u == "ppm" ? 1.0 : (u == "ppb" ? 1e-3 : 1e-6);
      f = scale * *molar_mass / units::kMolarVolumeL;
    }
  } else {
    if (u == "ug/l") f = 1.0;
    else if (u == "ng/l") f = 1e-3;
    else if (u == "mg/l" || u == "ppm") f = 1e3;
    else if (u == "g/l") f = 1e6;
    else if (u == "ppb") f = 1.0;
    else if (u == "ppt") f = 1e-3;
  }
  if (f == 0.0)
    fail(ErrorCode::UnknownUnit, "unknown " + std::string(to_string(medium)) + " concentration unit '" +
                                     std::string(unit) + "'");
  if (!(value > 0.0) || !std::isfinite(value))
    fail(ErrorCode::NonPositiveConcentration, "concentration must be positive, got " + format_double(value));
  return std::log10(value * f);
}

Aggregate aggregate_duplicates(std::span<const double> log_values) {
  if (log_values.empty()) fail(ErrorCode::InvalidArgument, "nothing to aggregate");
  Aggregate a;
  a.value = median(log_values);
  a.n = static_cast<int>(log_values.size());
  a.iqr = quantile(log_values, 0.75) - quantile(log_values, 0.25);
  return a;
}

nlohmann::json WinsorBounds::to_json() const {
  return {{"alpha", alpha}, {"lo", lo}, {"hi", hi}, {"n_fit", n_fit}};
}

WinsorBounds WinsorBounds::from_json(const nlohmann::json& j) {
  WinsorBounds b;
  b.alpha = j.at("alpha").get<double>();
  b.lo = j.at("lo").get<double>();
  b.hi = j.at("hi").get<double>();
  b.n_fit = j.at("n_fit").get<std::size_t>();
  return b;
}

Winsorized winsorize(std::span<const double> train_values, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) fail(ErrorCode::InvalidArgument, "winsorization alpha must lie in (0, 0.5)");
  const double n = static_cast<double>(train_values.size());
  if (n * alpha < 1.0 - 1e-12)
    fail(ErrorCode::TooFewSamples, "winsorization at alpha=" + format_double(alpha) + " needs at least " +
                                       format_double(std::ceil(1.0 / alpha - 1e-9)) + " values, got " +
                                       std::to_string(train_values.size()));
  Winsorized w;
  std::vector<double> sorted(train_values.begin(), train_values.end());
  std::sort(sorted.begin(), sorted.end());
  w.bounds = {alpha, quantile_sorted(sorted, alpha), quantile_sorted(sorted, 1.0 - alpha), train_values.size()};
  w.values.reserve(train_values.size());
  for (double v : train_values) {
    double c = w.bounds.apply(v);
    if (c != v) ++w.n_clipped;
    w.values.push_back(c);
  }
  return w;
}

RobustScaled robust_scale(std::span<const double> values, double eps) {
  RobustScaled r;
  r.scaler = TargetScaler::fit_median_mad(values, eps);
  r.values = r.scaler.transform(values);
  return r;
}

double uncertainty_weight(double sigma, double alpha) {
  if (!(sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "sigma must be non-negative");
  if (!(alpha > 0.0)) fail(ErrorCode::InvalidArgument, "alpha must be positive");
  return alpha / (alpha + sigma);
}

void require_train_rows(std::span<const Fold> folds, const char* what) {
  for (std::size_t i = 0; i < folds.size(); ++i)
    if (folds[i] != Fold::Train)
      fail(ErrorCode::LeakageDetected, std::string(what) + ": row " + std::to_string(i) + " belongs to the " +
                                           to_string(folds[i]) + " fold");
}

Winsorized winsorize_on_train(std::span<const double> values, std::span<const Fold> folds, double alpha) {
  if (values.size() != folds.size()) fail(ErrorCode::ShapeMismatch, "values and folds differ in length");
  require_train_rows(folds, "winsorization");
  return winsorize(values, alpha);
}

TargetScaler fit_scaler_on_train(std::span<const double> values, std::span<const Fold> folds, TargetScaler::Kind kind) {
  if (values.size() != folds.size()) fail(ErrorCode::ShapeMismatch, "values and folds differ in length");
  require_train_rows(folds, "scaler fit");
  return kind == TargetScaler::Kind::MeanStd ? TargetScaler::fit_mean_std(values) : TargetScaler::fit_median_mad(values);
}

nlohmann::json PreprocessManifest::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["units_seen"] = units_seen;
  j["constants"] = {{"mmHg_Pa", units::kMmHgPa},
                    {"atm_Pa", units::kAtmPa},
                    {"bar_Pa", units::kBarPa},
                    {"molar_volume_L_per_mol", units::kMolarVolumeL}};
  j["target_scalers"] = nlohmann::json::object();
  for (const auto& [k, s] : target_scalers) j["target_scalers"][k] = s.to_json();
  j["winsor"] = nlohmann::json::object();
  for (const auto& [k, w] : winsor) j["winsor"][k] = w.to_json();
  j["uncertainty_alpha"] = uncertainty_alpha;
  j["mad_eps"] = mad_eps;
  j["op_pooled"] = op_pooled;
  return j;
}

PreprocessManifest PreprocessManifest::from_json(const nlohmann::json& j) {
  PreprocessManifest m;
  m.units_seen = j.at("units_seen").get<std::set<std::string>>();
  for (auto it = j.at("target_scalers").begin(); it != j.at("target_scalers").end(); ++it)
    m.target_scalers[it.key()] = TargetScaler::from_json(it.value());
  for (auto it = j.at("winsor").begin(); it != j.at("winsor").end(); ++it)
    m.winsor[it.key()] = WinsorBounds::from_json(it.value());
  m.uncertainty_alpha = j.at("uncertainty_alpha").get<double>();
  m.mad_eps = j.at("mad_eps").get<double>();
  m.op_pooled = j.at("op_pooled").get<bool>();
  return m;
}

}  // namespace vpg
