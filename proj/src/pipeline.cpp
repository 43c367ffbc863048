#include "vpg/pipeline.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <memory>

#include "vpg/csv.hpp"
#include "vpg/error.hpp"
#include "vpg/smiles.hpp"
#include "vpg/util.hpp"

namespace vpg {

nlohmann::json version_info() {
  nlohmann::json j;
  j["vpgraph"] = kVersion;
#if defined(__clang__)
  j["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  j["compiler"] = "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + "." +
                  std::to_string(__GNUC_PATCHLEVEL__);
#else
  j["compiler"] = "unknown";
#endif
  j["cplusplus"] = static_cast<long>(__cplusplus);
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  return j;
}

SplitOutput split_corpus(const Corpus& corpus, const SplitOptions& opts) {
  const auto scaffolds = corpus.scaffold_map();
  SplitResult r = capacity_split(group_by_scaffold(scaffolds), opts.ratio, opts.seed);
  SplitOutput out;
  out.assignment = std::move(r.assignment);
  out.warnings = std::move(r.warnings);
  out.diagnostics = verify_no_leakage(out.assignment, scaffolds);
  return out;
}

std::map<std::string, Fingerprint> corpus_fingerprints(const Corpus& corpus, int nbits) {
  std::map<std::string, Fingerprint> fps;
  for (const auto& m : corpus.molecules) fps.emplace(m.key, ecfp(parse_smiles(m.key), 2, nbits));
  return fps;
}

namespace {

// VP at one temperature plus the slot-0 OP prediction for every sample.
std::vector<CompoundPrediction> predict_compounds(Model& vp_model, Model* op_model, const Dataset& data,
                                                  const Corpus& corpus, double temperature_K) {
  std::vector<CompoundPrediction> out;
  std::vector<int> all(data.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  const double t_std = data.t_scaler.transform(temperature_K);
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < all.size(); start += kChunk) {
    const std::size_t end = std::min(all.size(), start + kChunk);
    std::span<const int> idx(all.data() + start, end - start);
    GraphBatch b = make_batch(data, idx);
    b.vp_graph.resize(static_cast<std::size_t>(b.n_graphs));
    for (int g = 0; g < b.n_graphs; ++g) b.vp_graph[static_cast<std::size_t>(g)] = g;
    b.vp_t.assign(static_cast<std::size_t>(b.n_graphs), t_std);
    b.vp_y.assign(static_cast<std::size_t>(b.n_graphs), 0.0);
    const auto vp = vp_model.predict(b, Head::VP);
    std::vector<double> op;
    if (op_model) op = op_model->predict(b, Head::OA);
    for (int g = 0; g < b.n_graphs; ++g) {
      const Sample& s = data.samples[static_cast<std::size_t>(idx[static_cast<std::size_t>(g)])];
      CompoundPrediction c;
      c.key = s.key;
      c.log10_vp_pa = data.vp_scaler.inverse(vp[static_cast<std::size_t>(g)]);
      if (op_model) {
        c.log10_c50 = data.op_scalers[0]->inverse(op[static_cast<std::size_t>(g)]);
        c.c50_unit = data.op_pooled ? "pooled" : op_basis_unit(Medium::Air);
      } else {
        c.log10_c50 = 0.0;
        c.c50_unit = "none";
      }
      if (const auto* m = corpus.find(s.key)) c.molar_mass = m->molar_mass;
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace

RunOutput run_training(const Corpus& corpus, const FoldAssignment& folds, const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  RunOutput run;
  run.config = cfg;
  run.seed = seed;
  const Dataset data = prepare(corpus, folds, cfg.prepare);
  run.preprocess = data.manifest;

  Model model(cfg.model, data.pna_delta, seed);
  run.result = train(model, data, cfg.schedule, seed);

  std::vector<int> all(data.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

  model.load_state(run.result.vp.state);
  run.vp = predict_vp(model, data, all);

  const bool has_op = (cfg.model.head_oa || cfg.model.head_ow) && (data.op_scalers[0] || data.op_scalers[1]);
  std::unique_ptr<Model> op_model;
  if (has_op) {
    op_model = std::make_unique<Model>(cfg.model, data.pna_delta, seed);
    op_model->load_state(run.result.op.state);
    run.op = predict_op(*op_model, data, all);
  }
  const bool oa_usable = has_op && cfg.model.head_oa && data.op_scalers[0].has_value();
  run.compounds = predict_compounds(model, oa_usable ? op_model.get() : nullptr, data, corpus,
                                    cfg.eval.detect_temperature_K);

  const auto report = similarity_report(folds, corpus_fingerprints(corpus, cfg.prepare.fp_bits));
  for (const auto& r : report.rows) run.max_sim[r.key] = r.max_sim;

  EvalInputs in;
  in.vp = &run.vp;
  in.op = has_op ? &run.op : nullptr;
  in.vp_scaler = &data.vp_scaler;
  in.max_sim = &run.max_sim;
  in.replicates = cfg.eval.replicates;
  in.seed = cfg.eval.seed;
  run.metrics = evaluate(in);
  return run;
}

// --- CSV exports ---------------------------------------------------------------------

std::string vp_predictions_csv(const std::vector<VpPrediction>& rows) {
  std::string out = "molecule_key,fold,temperature_K,y_true_std,y_pred_std,y_true,y_pred\n";
  for (const auto& r : rows)
    out += csv_line({r.key, to_string(r.fold), format_double(r.temperature_K), format_double(r.y_true_std),
                     format_double(r.y_pred_std), format_double(r.y_true), format_double(r.y_pred)});
  return out;
}

std::vector<VpPrediction> parse_vp_predictions(const std::string& text) {
  CsvTable t = parse_csv(text);
  const auto ck = t.require_column("molecule_key"), cf = t.require_column("fold"),
             ct = t.require_column("temperature_K"), cys = t.require_column("y_true_std"),
             cps = t.require_column("y_pred_std"), cy = t.require_column("y_true"), cp = t.require_column("y_pred");
  std::vector<VpPrediction> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    VpPrediction p;
    p.key = row[ck];
    p.fold = parse_fold(row[cf]);
    p.temperature_K = parse_number(row[ct], "temperature_K", i + 2);
    p.y_true_std = parse_number(row[cys], "y_true_std", i + 2);
    p.y_pred_std = parse_number(row[cps], "y_pred_std", i + 2);
    p.y_true = parse_number(row[cy], "y_true", i + 2);
    p.y_pred = parse_number(row[cp], "y_pred", i + 2);
    out.push_back(std::move(p));
  }
  return out;
}

std::string op_predictions_csv(const std::vector<OpPrediction>& rows) {
  std::string out = "molecule_key,fold,slot,y_true_std,y_pred_std,y_true,y_pred\n";
  for (const auto& r : rows)
    out += csv_line({r.key, to_string(r.fold), std::to_string(r.slot), format_double(r.y_true_std),
                     format_double(r.y_pred_std), format_double(r.y_true), format_double(r.y_pred)});
  return out;
}

std::vector<OpPrediction> parse_op_predictions(const std::string& text) {
  CsvTable t = parse_csv(text);
  const auto ck = t.require_column("molecule_key"), cf = t.require_column("fold"), cs = t.require_column("slot"),
             cys = t.require_column("y_true_std"), cps = t.require_column("y_pred_std"),
             cy = t.require_column("y_true"), cp = t.require_column("y_pred");
  std::vector<OpPrediction> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    OpPrediction p;
    p.key = row[ck];
    p.fold = parse_fold(row[cf]);
    p.slot = static_cast<int>(parse_number(row[cs], "slot", i + 2));
    p.y_true_std = parse_number(row[cys], "y_true_std", i + 2);
    p.y_pred_std = parse_number(row[cps], "y_pred_std", i + 2);
    p.y_true = parse_number(row[cy], "y_true", i + 2);
    p.y_pred = parse_number(row[cp], "y_pred", i + 2);
    out.push_back(std::move(p));
  }
  return out;
}

std::string compounds_csv(const std::vector<CompoundPrediction>& rows) {
  std::string out = "molecule_key,log10_vp_pa,log10_c50,c50_unit,molar_mass\n";
  for (const auto& r : rows)
    out += csv_line({r.key, format_double(r.log10_vp_pa), format_double(r.log10_c50), r.c50_unit,
                     r.molar_mass ? format_double(*r.molar_mass) : ""});
  return out;
}

std::string max_sim_csv(const std::map<std::string, double>& sims) {
  std::string out = "molecule_key,max_sim\n";
  for (const auto& [k, v] : sims) out += csv_line({k, format_double(v)});
  return out;
}

std::map<std::string, double> parse_max_sim(const std::string& text) {
  CsvTable t = parse_csv(text);
  const auto ck = t.require_column("molecule_key"), cs = t.require_column("max_sim");
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) out[t.rows[i][ck]] = parse_number(t.rows[i][cs], "max_sim", i + 2);
  return out;
}

std::string text_hash(const std::string& text) { return hex64(fnv1a64(text)); }

std::string file_hash(const std::filesystem::path& path) { return text_hash(read_text_file(path)); }

std::map<std::string, std::string> write_run(const RunOutput& run, const std::filesystem::path& dir) {
  std::map<std::string, std::string> hashes;
  auto put = [&](const std::string& name, const std::string& text) {
    write_text_file(dir / name, text);
    hashes[name] = text_hash(text);
  };
  auto checkpoint = [&](const TaskCheckpoint& c) {
    nlohmann::json j;
    j["format"] = "vpgraph.checkpoint";
    j["version"] = 1;
    j["valid"] = c.valid;
    j["epoch"] = c.epoch;
    j["metric"] = std::isfinite(c.metric) ? nlohmann::json(c.metric) : nlohmann::json(nullptr);
    j["model"] = run.config.model.to_json();
    j["state"] = c.state.to_json();
    j["optimizer"] = c.optimizer.to_json();
    j["rng_state"] = c.rng_state;
    j["step"] = c.step;
    return j.dump() + "\n";
  };
  put("config.json", run.config.to_json().dump(2) + "\n");
  put("preprocess.json", run.preprocess.to_json().dump(2) + "\n");
  put("curves.csv", curves_csv(run.result.curves));
  put("checkpoint_vp.json", checkpoint(run.result.vp));
  put("checkpoint_op.json", checkpoint(run.result.op));
  put("checkpoint_final.json", checkpoint(run.result.final));
  put("predictions_vp.csv", vp_predictions_csv(run.vp));
  put("predictions_op.csv", op_predictions_csv(run.op));
  put("max_sim.csv", max_sim_csv(run.max_sim));
  put("compounds.csv", compounds_csv(run.compounds));
  nlohmann::json metrics = run.metrics.to_json();
  metrics["seed"] = run.seed;
  metrics["split_seed"] = run.config.split.seed;
  metrics["epochs_run"] = run.result.epochs_run;
  metrics["stop_reason"] = run.result.stop_reason;
  metrics["best_epoch"] = {{"vp", run.result.vp.epoch}, {"op", run.result.op.epoch}};
  put("metrics.json", metrics.dump(2) + "\n");
  return hashes;
}

EvalOutput evaluate_run(const std::filesystem::path& dir, int replicates, std::uint64_t seed) {
  if (!std::filesystem::exists(dir / "predictions_vp.csv"))
    fail(ErrorCode::IoError, "'" + dir.string() + "' is not a run directory (predictions_vp.csv missing)");
  const auto vp = parse_vp_predictions(read_text_file(dir / "predictions_vp.csv"));
  std::vector<OpPrediction> op;
  if (std::filesystem::exists(dir / "predictions_op.csv")) op = parse_op_predictions(read_text_file(dir / "predictions_op.csv"));
  std::map<std::string, double> sims;
  if (std::filesystem::exists(dir / "max_sim.csv")) sims = parse_max_sim(read_text_file(dir / "max_sim.csv"));

  EvalOutput out;
  EvalInputs in;
  in.vp = &vp;
  in.op = op.empty() ? nullptr : &op;
  in.max_sim = &sims;
  in.replicates = replicates;
  in.seed = seed;
  out.metrics = evaluate(in);

  std::vector<ParityRow> parity;
  out.residual_vs_sim = "molecule_key,fold,temperature_K,residual,max_sim,bin\n";
  for (const auto& p : vp) {
    ParityRow r{p.key, p.temperature_K, p.y_true, p.y_pred, p.fold, std::nullopt};
    auto it = sims.find(p.key);
    if (it != sims.end()) {
      r.max_sim = it->second;
      const int bin = similarity_bin(it->second);
      out.residual_vs_sim += csv_line({p.key, to_string(p.fold), format_double(p.temperature_K),
                                       format_double(p.y_pred_std - p.y_true_std), format_double(it->second),
                                       similarity_bin_label(bin)});
    }
    parity.push_back(std::move(r));
  }
  out.parity = parity_csv(parity);
  out.bins = "bin,n,mse\n";
  for (const auto& b : out.metrics.vp_bins) out.bins += csv_line({b.label, std::to_string(b.n), format_double(b.mse)});
  return out;
}

}  // namespace vpg
