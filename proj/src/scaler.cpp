#include "vpg/scaler.hpp"

#include <algorithm>

#include "vpg/error.hpp"
#include "vpg/util.hpp"

namespace vpg {

TargetScaler TargetScaler::fit_mean_std(std::span<const double> train) {
  if (train.empty()) fail(ErrorCode::DegenerateScale, "no training values to fit a scaler");
  TargetScaler s;
  s.kind = Kind::MeanStd;
  s.center = mean(train);
  s.scale = population_std(train);
  if (!(s.scale >= 1e-8))
    fail(ErrorCode::DegenerateScale, "training standard deviation below 1e-8");
  return s;
}

TargetScaler TargetScaler::fit_median_mad(std::span<const double> train, double eps) {
  if (train.empty()) fail(ErrorCode::DegenerateScale, "no training values to fit a scaler");
  TargetScaler s;
  s.kind = Kind::MedianMad;
  s.center = median(train);
  double m = mad(train);
  s.floored = m < eps;
  s.scale = std::max(m, eps);
  return s;
}

std::vector<double> TargetScaler::transform(std::span<const double> ys) const {
  std::vector<double> out;
  out.reserve(ys.size());
  for (double y : ys) out.push_back(transform(y));
  return out;
}

nlohmann::json TargetScaler::to_json() const {
  return {{"kind", kind == Kind::MeanStd ? "mean_std" : "median_mad"},
          {"center", center},
          {"scale", scale},
          {"floored", floored}};
}

TargetScaler TargetScaler::from_json(const nlohmann::json& j) {
  TargetScaler s;
  s.kind = j.at("kind").get<std::string>() == "median_mad" ? Kind::MedianMad : Kind::MeanStd;
  s.center = j.at("center").get<double>();
  s.scale = j.at("scale").get<double>();
  s.floored = j.value("floored", false);
  return s;
}

}  // namespace vpg
