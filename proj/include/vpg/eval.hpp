#pragma once

// Regression metrics, physical-unit back-transformation, similarity-binned
// errors, molecule-level bootstrap intervals and CSV exports.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/fold.hpp"
#include "vpg/safemt.hpp"
#include "vpg/scaler.hpp"

namespace vpg {

double mse(std::span<const double> pred, std::span<const double> y);
double mae(std::span<const double> pred, std::span<const double> y);
/// 1 - SS_res / SS_tot. Throws DegenerateVariance for n < 2 or constant y.
double r2(std::span<const double> pred, std::span<const double> y);

struct PaErrors {
  double rmse_pa = 0.0;
  double mae_pa = 0.0;
};
/// Errors in Pa from log10-Pa values.
PaErrors pa_errors(std::span<const double> pred_log10, std::span<const double> true_log10);
/// Same from standardized values and the train-fold VP scaler.
PaErrors back_transform_vp(std::span<const double> pred_std, std::span<const double> true_std, const TargetScaler& scaler);

struct BinMse {
  int bin = 0;
  std::string label;
  std::size_t n = 0;
  double mse = 0.0;
};
/// Squared-residual means per MaxSim bin; bins without rows are left out.
std::vector<BinMse> binned_mse(std::span<const double> residuals, std::span<const double> max_sims);

struct Interval {
  double point = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
/// Percentile interval of the row mean of `values` when whole molecules
/// (all rows sharing a key) are resampled with replacement.
Interval bootstrap_ci(std::span<const std::string> molecule_of_row, std::span<const double> values, int replicates = 2000,
                      double level = 0.95, std::uint64_t seed = 0);

struct SeedSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample SD (n - 1); 0 for a single seed
};
SeedSummary summarize_seeds(std::span<const double> values);

struct ParityRow {
  std::string key;
  double temperature_K = 0.0;  // 0 for OP rows
  double y_true = 0.0, y_pred = 0.0;
  Fold fold = Fold::Test;
  std::optional<double> max_sim;
};
std::string parity_csv(const std::vector<ParityRow>& rows);
std::vector<ParityRow> parse_parity_csv(const std::string& text);
/// Throws IoError when the file cannot be written.
void export_parity(const std::vector<ParityRow>& rows, const std::filesystem::path& path);

struct TaskMetrics {
  std::size_t n = 0;
  double mse = 0.0, mae = 0.0;
  std::optional<double> r2;  // unset for degenerate targets
  Interval mse_ci;
};

struct MetricsReport {
  std::map<std::string, TaskMetrics> vp;  // per fold, standardized space
  std::map<std::string, PaErrors> vp_pa;
  std::map<std::string, TaskMetrics> op;  // per fold, pooled over OP slots, standardized space
  std::vector<BinMse> vp_bins;            // test fold
  nlohmann::json to_json() const;
};

struct EvalInputs {
  const std::vector<VpPrediction>* vp = nullptr;
  const std::vector<OpPrediction>* op = nullptr;
  const TargetScaler* vp_scaler = nullptr;
  const std::map<std::string, double>* max_sim = nullptr;  // val/test molecules
  int replicates = 2000;
  std::uint64_t seed = 0;
};
MetricsReport evaluate(const EvalInputs& in);

}  // namespace vpg
