#include "vpg/safemt.hpp"

#include <algorithm>
#include <cmath>

#include "vpg/error.hpp"
#include "vpg/util.hpp"

namespace vpg {

using ad::Var;

const char* to_string(LossKind k) { return k == LossKind::MSE ? "mse" : "huber"; }

LossKind parse_loss(std::string_view s) {
  std::string l = to_lower(s);
  if (l == "mse") return LossKind::MSE;
  if (l == "huber") return LossKind::Huber;
  fail(ErrorCode::ConfigError, "unknown loss '" + std::string(s) + "' (expected mse or huber)");
}

void ScheduleConfig::validate() const {
  if (!(lambda >= 0.0)) fail(ErrorCode::ConfigError, "lambda must be >= 0");
  if (e0 < 0) fail(ErrorCode::ConfigError, "e0 must be >= 0");
  if (e_warm < 0) fail(ErrorCode::ConfigError, "e_warm must be >= 0");
  if (max_epochs < 1) fail(ErrorCode::ConfigError, "max_epochs must be >= 1");
  if (patience_vp < 1 || patience_op < 1) fail(ErrorCode::ConfigError, "patience must be >= 1");
  if (!(lr_max > 0.0) || !(lr_min >= 0.0) || lr_min > lr_max) fail(ErrorCode::ConfigError, "need 0 <= lr_min <= lr_max, lr_max > 0");
  if (!(clip_norm > 0.0)) fail(ErrorCode::ConfigError, "clip_norm must be positive");
  if (batch_size < 1) fail(ErrorCode::ConfigError, "batch_size must be >= 1");
  if (!(huber_delta > 0.0)) fail(ErrorCode::ConfigError, "huber_delta must be positive");
}

nlohmann::json ScheduleConfig::to_json() const {
  return {{"lambda", lambda},         {"e0", e0},
          {"e_warm", e_warm},         {"detach_op", detach_op},
          {"max_epochs", max_epochs}, {"patience_vp", patience_vp},
          {"patience_op", patience_op}, {"lr_max", lr_max},
          {"lr_min", lr_min},         {"clip_norm", clip_norm},
          {"batch_size", batch_size}, {"vp_loss", to_string(vp_loss)},
          {"op_loss", to_string(op_loss)}, {"huber_delta", huber_delta}};
}

ScheduleConfig ScheduleConfig::from_json(const nlohmann::json& j) {
  ScheduleConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.e0 = j.at("e0").get<int>();
  c.e_warm = j.at("e_warm").get<int>();
  c.detach_op = j.at("detach_op").get<bool>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience_vp = j.at("patience_vp").get<int>();
  c.patience_op = j.at("patience_op").get<int>();
  c.lr_max = j.at("lr_max").get<double>();
  c.lr_min = j.at("lr_min").get<double>();
  c.clip_norm = j.at("clip_norm").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.vp_loss = parse_loss(j.at("vp_loss").get<std::string>());
  c.op_loss = parse_loss(j.at("op_loss").get<std::string>());
  c.huber_delta = j.at("huber_delta").get<double>();
  return c;
}

double lambda_eff(int epoch, const ScheduleConfig& cfg) {
  if (epoch < cfg.e0) return 0.0;
  if (cfg.e_warm == 0) return cfg.lambda;
  double frac = static_cast<double>(epoch - cfg.e0) / static_cast<double>(cfg.e_warm);
  return cfg.lambda * std::min(1.0, frac);
}

double huber_value(double r, double delta) {
  double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

namespace {

Var elementwise_loss(const Var& r, LossKind kind, double delta) {
  return kind == LossKind::MSE ? ad::square(r) : ad::huber(r, delta);
}

Matrix column(std::span<const double> v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Var loss_vp(const Var& pred, std::span<const double> y, LossKind kind, double delta) {
  if (y.empty()) fail(ErrorCode::EmptyBatch, "VP loss over an empty batch");
  if (pred.rows() != static_cast<Eigen::Index>(y.size()) || pred.cols() != 1)
    fail(ErrorCode::ShapeMismatch, "VP predictions and targets differ in shape");
  Var r = ad::sub(pred, pred.tape()->constant(column(y)));
  return ad::mean_all(elementwise_loss(r, kind, delta));
}

Var loss_op_masked(std::span<const MaskedTarget> targets, LossKind kind, double delta, double eps) {
  if (targets.empty()) fail(ErrorCode::InvalidArgument, "no OP targets");
  double msum = 0.0;
  Var total;
  for (const auto& t : targets) {
    const std::size_t n = t.y.size();
    if (t.pred.rows() != static_cast<Eigen::Index>(n) || t.m.size() != n || (!t.w.empty() && t.w.size() != n))
      fail(ErrorCode::ShapeMismatch, "OP predictions, targets, masks and weights differ in length");
    std::vector<double> mw(n);
    for (std::size_t i = 0; i < n; ++i) {
      mw[i] = t.m[i] * (t.w.empty() ? 1.0 : t.w[i]);
      msum += t.m[i];
    }
    Var r = ad::sub(t.pred, t.pred.tape()->constant(column(t.y)));
    Var s = ad::weighted_sum(elementwise_loss(r, kind, delta), mw);
    total = total.valid() ? ad::add(total, s) : s;
  }
  return ad::scale(total, 1.0 / (msum + eps));
}

std::string curves_csv(const std::vector<EpochLog>& curves) {
  std::string out = "epoch,train_vp,train_op,val_vp,val_op,lambda_eff,lr\n";
  auto f = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };
  for (const auto& c : curves)
    out += std::to_string(c.epoch) + "," + f(c.train_vp) + "," + f(c.train_op) + "," + f(c.val_vp) + "," + f(c.val_op) +
           "," + format_double(c.lambda_eff) + "," + format_double(c.lr) + "\n";
  return out;
}

// --- prediction helpers --------------------------------------------------------------

namespace {

template <typename F>
void for_batches(std::span<const int> indices, int batch_size, F&& f) {
  for (std::size_t start = 0; start < indices.size(); start += static_cast<std::size_t>(batch_size)) {
    std::size_t end = std::min(indices.size(), start + static_cast<std::size_t>(batch_size));
    f(indices.subspan(start, end - start));
  }
}

}  // namespace

std::vector<VpPrediction> predict_vp(Model& model, const Dataset& data, std::span<const int> indices, int batch_size) {
  std::vector<VpPrediction> out;
  if (!model.config().head_vp) return out;
  for_batches(indices, batch_size, [&](std::span<const int> idx) {
    GraphBatch b = make_batch(data, idx, model.config().fp_concat);
    if (b.vp_rows() == 0) return;
    std::vector<double> pred = model.predict(b, Head::VP);
    std::size_t row = 0;
    for (int i : idx) {
      const Sample& s = data.samples[static_cast<std::size_t>(i)];
      for (std::size_t r = 0; r < s.vp_std.size(); ++r, ++row) {
        VpPrediction p;
        p.key = s.key;
        p.fold = s.fold;
        p.temperature_K = s.t_raw[r];
        p.y_true_std = s.vp_std[r];
        p.y_pred_std = pred[row];
        p.y_true = s.vp_raw[r];
        p.y_pred = data.vp_scaler.inverse(pred[row]);
        out.push_back(std::move(p));
      }
    }
  });
  return out;
}

std::vector<OpPrediction> predict_op(Model& model, const Dataset& data, std::span<const int> indices, int batch_size) {
  std::vector<OpPrediction> out;
  for_batches(indices, batch_size, [&](std::span<const int> idx) {
    GraphBatch b = make_batch(data, idx, model.config().fp_concat);
    for (int slot = 0; slot < 2; ++slot) {
      Head h = slot == 0 ? Head::OA : Head::OW;
      if (!model.config().has_head(h) || !b.has_op(slot) || !data.op_scalers[static_cast<std::size_t>(slot)]) continue;
      std::vector<double> pred = model.predict(b, h);
      for (std::size_t g = 0; g < idx.size(); ++g) {
        const Sample& s = data.samples[static_cast<std::size_t>(idx[g])];
        if (!s.op_m[static_cast<std::size_t>(slot)]) continue;
        OpPrediction p;
        p.key = s.key;
        p.fold = s.fold;
        p.slot = slot;
        p.y_true_std = s.op_std[static_cast<std::size_t>(slot)];
        p.y_pred_std = pred[g];
        p.y_true = s.op_raw[static_cast<std::size_t>(slot)];
        p.y_pred = data.op_scalers[static_cast<std::size_t>(slot)]->inverse(pred[g]);
        out.push_back(std::move(p));
      }
    }
  });
  return out;
}

double fold_vp_mse(Model& model, const Dataset& data, Fold fold, int batch_size) {
  auto idx = data.indices(fold);
  auto preds = predict_vp(model, data, idx, batch_size);
  if (preds.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& p : preds) s += (p.y_pred_std - p.y_true_std) * (p.y_pred_std - p.y_true_std);
  return s / static_cast<double>(preds.size());
}

double fold_op_mse(Model& model, const Dataset& data, Fold fold, int batch_size) {
  auto idx = data.indices(fold);
  auto preds = predict_op(model, data, idx, batch_size);
  if (preds.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& p : preds) s += (p.y_pred_std - p.y_true_std) * (p.y_pred_std - p.y_true_std);
  return s / static_cast<double>(preds.size());
}

// --- training loop ----------------------------------------------------------------

TrainResult train(Model& model, const Dataset& data, const ScheduleConfig& cfg, std::uint64_t seed, const TrainHooks& hooks) {
  cfg.validate();
  const ModelConfig& mc = model.config();
  std::vector<int> order = data.indices(Fold::Train);
  if (order.empty()) fail(ErrorCode::EmptyTrainSet, "the train fold is empty");

  const bool has_op_heads = (mc.head_oa && data.op_scalers[0]) || (mc.head_ow && data.op_scalers[1]);
  const bool vp_task = mc.head_vp;
  const bool op_task = has_op_heads && cfg.lambda > 0.0;
  const bool has_val = !data.indices(Fold::Val).empty();

  Rng rng(seed);
  ad::Adam adam;
  std::vector<ad::Parameter*> params = model.params().all();
  const long steps_per_epoch = static_cast<long>((order.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
                                                 static_cast<std::size_t>(cfg.batch_size));
  const long total_steps = steps_per_epoch * cfg.max_epochs;
  long step = 0;

  TrainResult res;
  int activation_epoch = -1;
  auto snapshot = [&](TaskCheckpoint& c, int epoch) {
    c.epoch = epoch;
    c.state = model.state();
    c.optimizer = adam;
    c.rng_state = rng.state();
    c.step = step;
    c.valid = true;
  };

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lam = lambda_eff(epoch, cfg);
    const bool op_on = op_task && lam > 0.0;
    if (op_on && activation_epoch < 0) activation_epoch = epoch;

    EpochLog log;
    log.epoch = epoch;
    log.lambda_eff = lam;
    log.lr = ad::cosine_lr(step, total_steps, cfg.lr_max, cfg.lr_min);
    double vp_sum = 0.0, op_sum = 0.0;
    std::size_t vp_n = 0, op_n = 0;

    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::span<const int> idx(order.data() + start, end - start);
      const double lr = ad::cosine_lr(step, total_steps, cfg.lr_max, cfg.lr_min);
      ++step;

      GraphBatch batch = make_batch(data, idx, mc.fp_concat);
      const bool has_vp = vp_task && batch.vp_rows() > 0;
      const bool has_op =
          op_on && ((mc.head_oa && batch.has_op(0)) || (mc.head_ow && batch.has_op(1)));
      if (!has_vp && !has_op) continue;

      for (auto* p : params) p->zero_grad();
      ad::Tape tape;
      ForwardOptions fo;
      fo.vp = has_vp;
      fo.op = has_op;
      fo.detach_op = cfg.detach_op;
      ModelOutput out = model.forward(tape, batch, true, &rng, fo);

      Var loss;
      if (has_vp) {
        Var lv = loss_vp(out.vp, batch.vp_y, cfg.vp_loss, cfg.huber_delta);
        vp_sum += lv.item() * static_cast<double>(batch.vp_rows());
        vp_n += batch.vp_rows();
        loss = lv;
      }
      if (has_op) {
        std::vector<MaskedTarget> targets;
        double msum = 0.0;
        if (mc.head_oa && batch.has_op(0)) targets.push_back({out.oa, batch.op_y[0], batch.op_m[0], batch.op_w[0]});
        if (mc.head_ow && batch.has_op(1)) targets.push_back({out.ow, batch.op_y[1], batch.op_m[1], batch.op_w[1]});
        for (const auto& t : targets)
          for (double m : t.m) msum += m;
        Var lo = loss_op_masked(targets, cfg.op_loss, cfg.huber_delta);
        op_sum += lo.item() * msum;
        op_n += static_cast<std::size_t>(msum);
        Var weighted = ad::scale(lo, lam);
        loss = loss.valid() ? ad::add(loss, weighted) : weighted;
      }
      if (!std::isfinite(loss.item()))
        fail(ErrorCode::DivergenceDetected, "non-finite loss at epoch " + std::to_string(epoch));
      tape.backward(loss);
      ad::clip_global_norm(params, cfg.clip_norm);
      adam.step(params, lr);
    }
    if (vp_n) log.train_vp = vp_sum / static_cast<double>(vp_n);
    if (op_n) log.train_op = op_sum / static_cast<double>(op_n);

    // validation and per-task checkpoints
    if (vp_task) {
      log.val_vp = fold_vp_mse(model, data, Fold::Val, 64);
      bool improved = has_val && std::isfinite(log.val_vp) ? log.val_vp < res.vp.metric : !has_val;
      if (improved || !res.vp.valid) {
        if (has_val && std::isfinite(log.val_vp)) res.vp.metric = log.val_vp;
        snapshot(res.vp, epoch);
      }
    }
    if (has_op_heads) {
      log.val_op = fold_op_mse(model, data, Fold::Val, 64);
      if (op_on) {
        bool improved = has_val && std::isfinite(log.val_op) ? log.val_op < res.op.metric : !has_val;
        if (improved || !res.op.valid) {
          if (has_val && std::isfinite(log.val_op)) res.op.metric = log.val_op;
          snapshot(res.op, epoch);
        }
      }
    }
    if (!std::isfinite(log.train_vp) && vp_n) fail(ErrorCode::DivergenceDetected, "non-finite VP loss");
    res.curves.push_back(log);
    res.epochs_run = epoch + 1;
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);

    if (!has_val) continue;
    bool vp_done = !vp_task || epoch - res.vp.epoch >= cfg.patience_vp;
    bool op_done = !op_task || (activation_epoch >= 0 && epoch - std::max(res.op.epoch, activation_epoch) >= cfg.patience_op);
    if (vp_done && op_done) {
      res.stop_reason = "patience exhausted";
      break;
    }
  }
  if (res.stop_reason.empty()) res.stop_reason = "max_epochs reached";
  // an OP head that never switched on keeps the final weights
  if (has_op_heads && !res.op.valid) snapshot(res.op, res.epochs_run - 1);
  snapshot(res.final, res.epochs_run - 1);
  return res;
}

}  // namespace vpg
