#pragma once

// Unit harmonization, duplicate aggregation, winsorization, robust scaling
// and uncertainty weights. Everything that is fitted takes training-fold
// values only; the *_on_train helpers enforce that with a fold vector.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/fold.hpp"
#include "vpg/scaler.hpp"

namespace vpg {

enum class Endpoint { VP, OA, OW };
enum class Medium { Air, Water, None };

const char* to_string(Endpoint e);
const char* to_string(Medium m);
Endpoint parse_endpoint(std::string_view s);
Medium parse_medium(std::string_view s);

namespace units {
inline constexpr double kMmHgPa = 133.322;
inline constexpr double kAtmPa = 101325.0;
inline constexpr double kBarPa = 100000.0;
/// Ideal-gas molar volume at 25 C and 101325 Pa, L/mol.
inline constexpr double kMolarVolumeL = 24.45;
inline constexpr double kGasConstant = 8.314;
}  // namespace units

/// Pressure to log10(Pa). Units: Pa, kPa, MPa, mmHg (= Torr), atm, bar, mbar.
double harmonize_vp(double value, std::string_view unit);
/// Temperature in K, C or F to Kelvin.
double to_kelvin(double value, std::string_view unit);

/// Basis unit of the OP endpoint for a medium: mg/m3 in air, ug/L in water.
const char* op_basis_unit(Medium medium);
/// Concentration to log10 of the medium basis unit. ppm/ppb/ppt in air use the
/// molar volume above and need molar_mass (g/mol); in water ppm = mg/L.
double harmonize_op(double value, std::string_view unit, Medium medium, std::optional<double> molar_mass);
/// Canonical spelling of a unit string ("mg·m⁻³" -> "mg/m3"), or the lowered
/// input when unrecognized.
std::string normalize_unit(std::string_view unit);

struct Aggregate {
  double value = 0.0;  // log-space median
  int n = 0;
  double iqr = 0.0;    // Q3 - Q1, linear-interpolation quantiles
};
Aggregate aggregate_duplicates(std::span<const double> log_values);

struct WinsorBounds {
  double alpha = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_fit = 0;
  double apply(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  nlohmann::json to_json() const;
  static WinsorBounds from_json(const nlohmann::json& j);
};
struct Winsorized {
  WinsorBounds bounds;
  std::vector<double> values;
  std::size_t n_clipped = 0;
};
/// Clips training values to [q_alpha, q_(1-alpha)]. Throws TooFewSamples when
/// n < 1/alpha and InvalidArgument for alpha outside (0, 0.5).
Winsorized winsorize(std::span<const double> train_values, double alpha);

struct RobustScaled {
  TargetScaler scaler;
  std::vector<double> values;
};
/// (y - median) / max(MAD, eps). scaler.floored reports the degenerate case.
RobustScaled robust_scale(std::span<const double> values, double eps = 1e-8);

/// alpha / (alpha + sigma), in (0, 1].
double uncertainty_weight(double sigma, double alpha = 0.1);

/// Throws LeakageDetected if any row handed to a fit is not in the train fold.
void require_train_rows(std::span<const Fold> folds, const char* what);
/// Guarded fitting entry points: the values and their folds must all be Train.
Winsorized winsorize_on_train(std::span<const double> values, std::span<const Fold> folds, double alpha);
TargetScaler fit_scaler_on_train(std::span<const double> values, std::span<const Fold> folds, TargetScaler::Kind kind);

/// Everything needed to re-apply preprocessing bit-exactly.
struct PreprocessManifest {
  std::set<std::string> units_seen;
  std::map<std::string, TargetScaler> target_scalers;  // "vp", "oa", "ow", "t"
  std::map<std::string, WinsorBounds> winsor;
  double uncertainty_alpha = 0.1;
  double mad_eps = 1e-8;
  bool op_pooled = false;
  nlohmann::json to_json() const;
  static PreprocessManifest from_json(const nlohmann::json& j);
};

}  // namespace vpg
