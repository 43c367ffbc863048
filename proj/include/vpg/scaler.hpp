#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace vpg {

/// Affine target scaler shared by the mean/SD path and the median/MAD path.
/// transform(y) = (y - center) / scale.
struct TargetScaler {
  enum class Kind { MeanStd, MedianMad };

  Kind kind = Kind::MeanStd;
  double center = 0.0;
  double scale = 1.0;
  /// Set when the robust path had to fall back to the MAD floor.
  bool floored = false;

  /// Mean and population SD; throws DegenerateScale when SD < 1e-8.
  static TargetScaler fit_mean_std(std::span<const double> train);
  /// Median and max(MAD, eps); never throws for nonempty input.
  static TargetScaler fit_median_mad(std::span<const double> train, double eps = 1e-8);

  double transform(double y) const { return (y - center) / scale; }
  double inverse(double z) const { return z * scale + center; }
  std::vector<double> transform(std::span<const double> ys) const;

  nlohmann::json to_json() const;
  static TargetScaler from_json(const nlohmann::json& j);
};

}  // namespace vpg
