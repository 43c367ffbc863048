#include "vpg/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <unordered_map>

#include "vpg/csv.hpp"
#include "vpg/error.hpp"
#include "vpg/fingerprint.hpp"
#include "vpg/util.hpp"

namespace vpg {

namespace {

void same_length(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) fail(ErrorCode::ShapeMismatch, std::string(what) + ": predictions and targets differ in length");
  if (a.empty()) fail(ErrorCode::InvalidArgument, std::string(what) + " of an empty set");
}

}  // namespace

double mse(std::span<const double> pred, std::span<const double> y) {
  same_length(pred, y, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (pred[i] - y[i]) * (pred[i] - y[i]);
  return s / static_cast<double>(y.size());
}

double mae(std::span<const double> pred, std::span<const double> y) {
  same_length(pred, y, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += std::abs(pred[i] - y[i]);
  return s / static_cast<double>(y.size());
}

double r2(std::span<const double> pred, std::span<const double> y) {
  same_length(pred, y, "r2");
  if (y.size() < 2) fail(ErrorCode::DegenerateVariance, "R2 needs at least two targets");
  const double m = mean(y);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (pred[i] - y[i]) * (pred[i] - y[i]);
    ss_tot += (y[i] - m) * (y[i] - m);
  }
  if (ss_tot == 0.0) fail(ErrorCode::DegenerateVariance, "R2 of constant targets");
  return 1.0 - ss_res / ss_tot;
}

PaErrors pa_errors(std::span<const double> pred_log10, std::span<const double> true_log10) {
  same_length(pred_log10, true_log10, "pa_errors");
  double s2 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < pred_log10.size(); ++i) {
    const double d = std::pow(10.0, pred_log10[i]) - std::pow(10.0, true_log10[i]);
    s2 += d * d;
    s1 += std::abs(d);
  }
  const double n = static_cast<double>(pred_log10.size());
  return {std::sqrt(s2 / n), s1 / n};
}

PaErrors back_transform_vp(std::span<const double> pred_std, std::span<const double> true_std, const TargetScaler& scaler) {
  std::vector<double> p, t;
  for (double v : pred_std) p.push_back(scaler.inverse(v));
  for (double v : true_std) t.push_back(scaler.inverse(v));
  return pa_errors(p, t);
}

std::vector<BinMse> binned_mse(std::span<const double> residuals, std::span<const double> max_sims) {
  same_length(residuals, max_sims, "binned_mse");
  std::array<double, 4> sum{};
  std::array<std::size_t, 4> count{};
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const auto b = static_cast<std::size_t>(similarity_bin(max_sims[i]));
    sum[b] += residuals[i] * residuals[i];
    ++count[b];
  }
  std::vector<BinMse> out;
  for (int b = 0; b < 4; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    if (count[ub] == 0) continue;
    out.push_back({b, similarity_bin_label(b), count[ub], sum[ub] / static_cast<double>(count[ub])});
  }
  return out;
}

Interval bootstrap_ci(std::span<const std::string> molecule_of_row, std::span<const double> values, int replicates,
                      double level, std::uint64_t seed) {
  if (molecule_of_row.size() != values.size()) fail(ErrorCode::ShapeMismatch, "bootstrap: one molecule key per row");
  if (replicates < 1) fail(ErrorCode::InvalidArgument, "bootstrap needs at least one replicate");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCode::InvalidArgument, "bootstrap level must lie in (0, 1)");
  // per-molecule sums in order of first appearance
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<double> gsum;
  std::vector<double> gcount;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto [it, fresh] = group_of.emplace(molecule_of_row[i], gsum.size());
    if (fresh) {
      gsum.push_back(0.0);
      gcount.push_back(0.0);
    }
    gsum[it->second] += values[i];
    gcount[it->second] += 1.0;
  }
  if (gsum.size() < 2) fail(ErrorCode::InvalidArgument, "bootstrap needs at least two molecules");

  Interval ci;
  ci.point = mean(values);
  Rng rng(seed);
  std::vector<double> stats(static_cast<std::size_t>(replicates));
  const std::uint64_t n = gsum.size();
  for (auto& st : stats) {
    double s = 0.0, c = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
      const auto g = static_cast<std::size_t>(rng.below(n));
      s += gsum[g];
      c += gcount[g];
    }
    st = s / c;
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  ci.lo = quantile_sorted(stats, tail);
  ci.hi = quantile_sorted(stats, 1.0 - tail);
  return ci;
}

SeedSummary summarize_seeds(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "no seeds to summarize");
  return {values.size(), mean(values), sample_std(values)};
}

std::string parity_csv(const std::vector<ParityRow>& rows) {
  std::string out = "molecule_key,temperature_K,y_true,y_pred,fold,max_sim\n";
  for (const auto& r : rows)
    out += csv_line({r.key, format_double(r.temperature_K), format_double(r.y_true), format_double(r.y_pred),
                     to_string(r.fold), r.max_sim ? format_double(*r.max_sim) : ""});
  return out;
}

std::vector<ParityRow> parse_parity_csv(const std::string& text) {
  CsvTable t = parse_csv(text);
  const auto ck = t.require_column("molecule_key"), ct = t.require_column("temperature_K"),
             cy = t.require_column("y_true"), cp = t.require_column("y_pred"), cf = t.require_column("fold"),
             cs = t.require_column("max_sim");
  std::vector<ParityRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    ParityRow r;
    r.key = row[ck];
    r.temperature_K = parse_number(row[ct], "temperature_K", i + 2);
    r.y_true = parse_number(row[cy], "y_true", i + 2);
    r.y_pred = parse_number(row[cp], "y_pred", i + 2);
    r.fold = parse_fold(row[cf]);
    if (!row[cs].empty()) r.max_sim = parse_number(row[cs], "max_sim", i + 2);
    out.push_back(std::move(r));
  }
  return out;
}

void export_parity(const std::vector<ParityRow>& rows, const std::filesystem::path& path) {
  write_text_file(path, parity_csv(rows));
}

namespace {

TaskMetrics task_metrics(const std::vector<std::string>& keys, const std::vector<double>& pred,
                         const std::vector<double>& y, int replicates, std::uint64_t seed) {
  TaskMetrics m;
  m.n = y.size();
  m.mse = mse(pred, y);
  m.mae = mae(pred, y);
  try {
    m.r2 = r2(pred, y);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateVariance) throw;
  }
  std::vector<double> sq(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) sq[i] = (pred[i] - y[i]) * (pred[i] - y[i]);
  std::set<std::string> distinct(keys.begin(), keys.end());
  if (distinct.size() >= 2) m.mse_ci = bootstrap_ci(keys, sq, replicates, 0.95, seed);
  else m.mse_ci = {m.mse, m.mse, m.mse};
  return m;
}

nlohmann::json to_json(const TaskMetrics& m) {
  nlohmann::json j = {{"n", m.n},
                      {"mse", m.mse},
                      {"mae", m.mae},
                      {"mse_ci95", {m.mse_ci.lo, m.mse_ci.hi}}};
  j["r2"] = m.r2 ? nlohmann::json(*m.r2) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["vp"] = nlohmann::json::object();
  for (const auto& [f, m] : vp) j["vp"][f] = vpg::to_json(m);
  for (const auto& [f, e] : vp_pa) {
    j["vp"][f]["rmse_pa"] = e.rmse_pa;
    j["vp"][f]["mae_pa"] = e.mae_pa;
  }
  j["op"] = nlohmann::json::object();
  for (const auto& [f, m] : op) j["op"][f] = vpg::to_json(m);
  j["vp_bins_test"] = nlohmann::json::array();
  for (const auto& b : vp_bins) j["vp_bins_test"].push_back({{"bin", b.label}, {"n", b.n}, {"mse", b.mse}});
  return j;
}

MetricsReport evaluate(const EvalInputs& in) {
  MetricsReport rep;
  for (Fold f : {Fold::Train, Fold::Val, Fold::Test}) {
    if (in.vp) {
      std::vector<std::string> keys;
      std::vector<double> p, y, p_log, y_log, res, sims;
      for (const auto& r : *in.vp) {
        if (r.fold != f) continue;
        keys.push_back(r.key);
        p.push_back(r.y_pred_std);
        y.push_back(r.y_true_std);
        p_log.push_back(r.y_pred);
        y_log.push_back(r.y_true);
        if (f == Fold::Test && in.max_sim) {
          auto it = in.max_sim->find(r.key);
          if (it != in.max_sim->end()) {
            res.push_back(r.y_pred_std - r.y_true_std);
            sims.push_back(it->second);
          }
        }
      }
      if (!y.empty()) {
        rep.vp[to_string(f)] = task_metrics(keys, p, y, in.replicates, in.seed);
        rep.vp_pa[to_string(f)] = pa_errors(p_log, y_log);
      }
      if (!res.empty()) rep.vp_bins = binned_mse(res, sims);
    }
    if (in.op) {
      std::vector<std::string> keys;
      std::vector<double> p, y;
      for (const auto& r : *in.op) {
        if (r.fold != f) continue;
        keys.push_back(r.key);
        p.push_back(r.y_pred_std);
        y.push_back(r.y_true_std);
      }
      if (!y.empty()) rep.op[to_string(f)] = task_metrics(keys, p, y, in.replicates, in.seed);
    }
  }
  return rep;
}

}  // namespace vpg
