// Python bindings. Structured results cross the boundary as JSON text and are
// decoded by the package's __init__.py.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vpg/config.hpp"
#include "vpg/csv.hpp"
#include "vpg/dataset.hpp"
#include "vpg/detect.hpp"
#include "vpg/error.hpp"
#include "vpg/eval.hpp"
#include "vpg/fingerprint.hpp"
#include "vpg/pipeline.hpp"
#include "vpg/preprocess.hpp"
#include "vpg/safemt.hpp"
#include "vpg/scaffold.hpp"
#include "vpg/smiles.hpp"
#include "vpg/synthdata.hpp"

namespace py = pybind11;
using namespace vpg;

namespace {

std::string molecule_json(const std::string& smiles) {
  const Molecule m = parse_smiles(smiles);
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : m.atoms)
    atoms.push_back({{"symbol", std::string(elements::symbol(a.atomic_number))},
                     {"charge", a.formal_charge},
                     {"aromatic", a.aromatic},
                     {"total_h", a.total_h()},
                     {"degree", a.degree},
                     {"ring_sizes", a.ring_sizes}});
  nlohmann::json bonds = nlohmann::json::array();
  for (const auto& b : m.bonds)
    bonds.push_back({{"begin", b.begin}, {"end", b.end}, {"order", static_cast<int>(b.order)}, {"ring_sizes", b.ring_sizes}});
  return nlohmann::json{{"canonical_key", canonical_key(m)},
                        {"smiles", to_smiles(m)},
                        {"molar_mass", m.molar_mass()},
                        {"atoms", atoms},
                        {"bonds", bonds}}
      .dump();
}

std::vector<int> ecfp_bits(const std::string& smiles, int radius, int nbits) {
  return ecfp(parse_smiles(smiles), radius, nbits).on_bits();
}

double tanimoto_smiles(const std::string& a, const std::string& b, int nbits) {
  return tanimoto(ecfp(parse_smiles(a), 2, nbits), ecfp(parse_smiles(b), 2, nbits));
}

std::string scaffold_of(const std::string& smiles) { return murcko_scaffold_key(parse_smiles(smiles)); }

std::string synth_csv(std::uint64_t seed, const std::string& config_toml) {
  const RunConfig cfg = parse_config_toml(config_toml);
  return records_to_csv(generate_synthetic(seed, cfg.synth).records);
}

std::string featurize_csv(const std::string& csv_text) { return corpus_to_jsonl(build_corpus(records_from_csv(parse_csv(csv_text)))); }

std::string split_jsonl(const std::string& corpus_jsonl, const std::string& config_toml) {
  const RunConfig cfg = parse_config_toml(config_toml);
  const auto out = split_corpus(corpus_from_jsonl(corpus_jsonl), cfg.split);
  nlohmann::json j;
  j["split_csv"] = serialize_split(out.assignment);
  j["diagnostics"] = out.diagnostics.to_json();
  j["warnings"] = out.warnings;
  return j.dump();
}

std::string train_run(const std::string& corpus_jsonl, const std::string& split_csv, const std::string& config_toml,
                      std::uint64_t seed, const std::string& out_dir) {
  const RunConfig cfg = parse_config_toml(config_toml);
  const Corpus corpus = corpus_from_jsonl(corpus_jsonl);
  const FoldAssignment folds = parse_split(split_csv);
  RunOutput run;
  {
    py::gil_scoped_release release;
    run = run_training(corpus, folds, cfg, seed);
  }
  nlohmann::json j;
  j["metrics"] = run.metrics.to_json();
  j["epochs_run"] = run.result.epochs_run;
  j["stop_reason"] = run.result.stop_reason;
  j["best_epoch"] = {{"vp", run.result.vp.epoch}, {"op", run.result.op.epoch}};
  j["curves_csv"] = curves_csv(run.result.curves);
  if (!out_dir.empty()) j["files"] = write_run(run, out_dir);
  return j.dump();
}

std::string evaluate_dir(const std::string& dir, int replicates, std::uint64_t seed) {
  const auto ev = evaluate_run(dir, replicates, seed);
  return nlohmann::json{{"metrics", ev.metrics.to_json()}, {"parity_csv", ev.parity}, {"bins_csv", ev.bins}}.dump();
}

Scenario make_scenario(double T, double P_tot, const std::string& mode, double x, double a, double H,
                       std::optional<double> gamma) {
  Scenario s;
  s.T = T;
  s.P_tot = P_tot;
  if (mode == "raoult") s.mode = PartitionMode::Raoult;
  else if (mode == "henry") s.mode = PartitionMode::Henry;
  else fail(ErrorCode::InvalidScenario, "mode must be 'raoult' or 'henry'");
  s.x = x;
  s.a = a;
  s.H = H;
  s.gamma = gamma;
  return s;
}

std::string rank_csv(const std::string& compounds_csv_text, const std::string& scenario_toml) {
  return ranking_csv(rank_detectability(parse_compound_csv(compounds_csv_text), parse_scenario_toml(scenario_toml)));
}

std::string bootstrap(const std::vector<std::string>& keys, const std::vector<double>& values, int replicates,
                      double level, std::uint64_t seed) {
  const auto ci = bootstrap_ci(keys, values, replicates, level, seed);
  return nlohmann::json{{"point", ci.point}, {"lo", ci.lo}, {"hi", ci.hi}}.dump();
}

std::string bins(const std::vector<double>& residuals, const std::vector<double>& sims) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : binned_mse(residuals, sims)) j.push_back({{"bin", b.label}, {"n", b.n}, {"mse", b.mse}});
  return j.dump();
}

double lambda_at(int epoch, double lambda, int e0, int e_warm) {
  ScheduleConfig c;
  c.lambda = lambda;
  c.e0 = e0;
  c.e_warm = e_warm;
  return lambda_eff(epoch, c);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "vpgraph native core";
  m.attr("__version__") = kVersion;

  static py::exception<Error> vpg_error(m, "VpgError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = vpg_error;
      py::object inst = exc(e.what());
      inst.attr("code") = to_string(e.code());
      inst.attr("module") = module_of(e.code());
      inst.attr("offset") = e.offset() ? py::cast(*e.offset()) : py::none();
      PyErr_SetObject(vpg_error.ptr(), inst.ptr());
    }
  });

  m.def("molecule_json", &molecule_json, py::arg("smiles"));
  m.def("canonical_key", [](const std::string& s) { return canonical_key(parse_smiles(s)); }, py::arg("smiles"));
  m.def("ecfp_bits", &ecfp_bits, py::arg("smiles"), py::arg("radius") = 2, py::arg("nbits") = 2048);
  m.def("tanimoto", &tanimoto_smiles, py::arg("a"), py::arg("b"), py::arg("nbits") = 2048);
  m.def("scaffold_key", &scaffold_of, py::arg("smiles"));

  m.def("harmonize_vp", [](double v, const std::string& unit) { return harmonize_vp(v, unit); }, py::arg("value"),
        py::arg("unit"));
  m.def(
      "harmonize_op",
      [](double v, const std::string& unit, const std::string& medium, std::optional<double> mass) {
        return harmonize_op(v, unit, parse_medium(medium), mass);
      },
      py::arg("value"), py::arg("unit"), py::arg("medium"), py::arg("molar_mass") = py::none());

  m.def("default_config_json", [] { return RunConfig{}.to_json().dump(); });
  m.def("config_json", [](const std::string& toml) { return parse_config_toml(toml).to_json().dump(); }, py::arg("toml"));
  m.def("synth_csv", &synth_csv, py::arg("seed"), py::arg("config_toml") = "");
  m.def("featurize_csv", &featurize_csv, py::arg("csv_text"));
  m.def("split_jsonl", &split_jsonl, py::arg("corpus_jsonl"), py::arg("config_toml") = "");
  m.def("train_run", &train_run, py::arg("corpus_jsonl"), py::arg("split_csv"), py::arg("config_toml") = "",
        py::arg("seed") = 0, py::arg("out_dir") = "");
  m.def("evaluate_dir", &evaluate_dir, py::arg("run_dir"), py::arg("replicates") = 2000, py::arg("seed") = 0);

  m.def(
      "c_air",
      [](double p_star, double T, double P_tot, const std::string& mode, double x, double a, double H) {
        return c_air(p_star, make_scenario(T, P_tot, mode, x, a, H, std::nullopt));
      },
      py::arg("p_star"), py::arg("T") = 298.15, py::arg("P_tot") = 101325.0, py::arg("mode") = "raoult",
      py::arg("x") = 1.0, py::arg("a") = 1.0, py::arg("H") = 0.0);
  m.def("p_detect", [](double c, double c50, double gamma) { return p_detect(c, {c50, gamma}); }, py::arg("c"),
        py::arg("c50"), py::arg("gamma"));
  m.def("rank_csv", &rank_csv, py::arg("compounds_csv"), py::arg("scenario_toml"));

  m.def("mse", [](const std::vector<double>& p, const std::vector<double>& y) { return mse(p, y); });
  m.def("mae", [](const std::vector<double>& p, const std::vector<double>& y) { return mae(p, y); });
  m.def("r2", [](const std::vector<double>& p, const std::vector<double>& y) { return r2(p, y); });
  m.def("bootstrap_json", &bootstrap, py::arg("keys"), py::arg("values"), py::arg("replicates") = 2000,
        py::arg("level") = 0.95, py::arg("seed") = 0);
  m.def("binned_mse_json", &bins, py::arg("residuals"), py::arg("max_sims"));
  m.def("lambda_eff", &lambda_at, py::arg("epoch"), py::arg("lam") = 1e-3, py::arg("e0") = 30, py::arg("e_warm") = 90);
}
