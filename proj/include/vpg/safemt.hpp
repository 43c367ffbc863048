#pragma once

// Losses and the training loop: VP first, OP switched on at epoch e0 with a
// linear ramp of its weight, optional stop-gradient between the OP heads and
// the backbone, and one early-stopping checkpoint per task.

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/autodiff.hpp"
#include "vpg/dataset.hpp"
#include "vpg/gnn.hpp"

namespace vpg {

enum class LossKind { MSE, Huber };
const char* to_string(LossKind k);
LossKind parse_loss(std::string_view s);

struct ScheduleConfig {
  double lambda = 1e-3;
  int e0 = 30;
  int e_warm = 90;  // 0 = step to lambda at e0
  bool detach_op = true;
  int max_epochs = 300;
  int patience_vp = 40;
  int patience_op = 40;
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  double clip_norm = 5.0;
  int batch_size = 32;
  LossKind vp_loss = LossKind::MSE;
  LossKind op_loss = LossKind::MSE;
  double huber_delta = 1.5;

  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static ScheduleConfig from_json(const nlohmann::json& j);
};

/// lambda * clamp((e - e0) / E_warm, 0, 1).
double lambda_eff(int epoch, const ScheduleConfig& cfg);

/// Scalar Huber: r^2/2 inside delta, delta(|r| - delta/2) outside.
double huber_value(double r, double delta);

/// Mean of l(pred - y) over the rows. Throws EmptyBatch.
ad::Var loss_vp(const ad::Var& pred, std::span<const double> y, LossKind kind = LossKind::MSE, double delta = 1.5);

struct MaskedTarget {
  ad::Var pred;               // n x 1
  std::span<const double> y;  // standardized targets
  std::span<const double> m;  // 0/1 masks
  std::span<const double> w;  // per-sample weights (empty = 1)
};
/// sum m w l(pred - y) / (sum m + eps), summed over every target slot.
ad::Var loss_op_masked(std::span<const MaskedTarget> targets, LossKind kind = LossKind::MSE, double delta = 1.5,
                       double eps = 1e-8);

struct EpochLog {
  int epoch = 0;
  double train_vp = std::numeric_limits<double>::quiet_NaN();
  double train_op = std::numeric_limits<double>::quiet_NaN();
  double val_vp = std::numeric_limits<double>::quiet_NaN();
  double val_op = std::numeric_limits<double>::quiet_NaN();
  double lambda_eff = 0.0;
  double lr = 0.0;
};
std::string curves_csv(const std::vector<EpochLog>& curves);

struct TaskCheckpoint {
  bool valid = false;
  int epoch = -1;
  double metric = std::numeric_limits<double>::infinity();
  ModelState state;
  // Enough to resume from the end of `epoch`.
  ad::Adam optimizer;
  std::string rng_state;
  long step = 0;
};

struct TrainResult {
  std::vector<EpochLog> curves;
  TaskCheckpoint vp, op;
  TaskCheckpoint final;
  int epochs_run = 0;
  std::string stop_reason;
};

struct TrainHooks {
  std::function<void(int epoch, Model& model)> on_epoch_end;
};

/// Trains `model` in place (it ends holding the final-epoch weights).
/// Throws DivergenceDetected on a non-finite loss and EmptyTrainSet when the
/// train fold is empty.
TrainResult train(Model& model, const Dataset& data, const ScheduleConfig& cfg, std::uint64_t seed,
                  const TrainHooks& hooks = {});

// --- evaluation helpers shared with eval/cli ----------------------------------------------

struct VpPrediction {
  std::string key;
  Fold fold = Fold::Train;
  double temperature_K = 0.0;
  double y_true_std = 0.0, y_pred_std = 0.0;
  double y_true = 0.0, y_pred = 0.0;  // log10 Pa
};

struct OpPrediction {
  std::string key;
  Fold fold = Fold::Train;
  int slot = 0;
  double y_true_std = 0.0, y_pred_std = 0.0;
  double y_true = 0.0, y_pred = 0.0;  // log10 basis units
};

std::vector<VpPrediction> predict_vp(Model& model, const Dataset& data, std::span<const int> indices, int batch_size = 64);
std::vector<OpPrediction> predict_op(Model& model, const Dataset& data, std::span<const int> indices, int batch_size = 64);

/// Standardized-space MSE of the VP rows / pooled masked OP rows of a fold; NaN when there are none.
double fold_vp_mse(Model& model, const Dataset& data, Fold fold, int batch_size = 64);
double fold_op_mse(Model& model, const Dataset& data, Fold fold, int batch_size = 64);

}  // namespace vpg
