// vpgraph: command-line driver for the synth -> featurize -> split -> train ->
// eval -> detect -> diag workflow. Exit codes: 0 ok, 1 runtime error, 2 usage or
// configuration error.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vpg/config.hpp"
#include "vpg/csv.hpp"
#include "vpg/dataset.hpp"
#include "vpg/detect.hpp"
#include "vpg/error.hpp"
#include "vpg/eval.hpp"
#include "vpg/fingerprint.hpp"
#include "vpg/pipeline.hpp"
#include "vpg/scaffold.hpp"
#include "vpg/synthdata.hpp"
#include "vpg/util.hpp"

namespace fs = std::filesystem;
using namespace vpg;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Manifest {
  std::string command;
  std::optional<std::string> config_hash;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> inputs;   // path -> hash
  std::map<std::string, std::string> outputs;  // path -> hash
  nlohmann::json extra = nlohmann::json::object();

  void input(const fs::path& p) { inputs[p.string()] = file_hash(p); }
  void output(const fs::path& p, const std::string& text) {
    write_text_file(p, text);
    outputs[p.filename().string()] = text_hash(text);
  }
  void write(const fs::path& path) const {
    nlohmann::json j;
    j["format"] = "vpgraph.manifest";
    j["command"] = command;
    j["config_hash"] = config_hash ? nlohmann::json(*config_hash) : nlohmann::json(nullptr);
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["versions"] = version_info();
    if (!extra.empty()) j["details"] = extra;
    write_text_file(path, j.dump(2) + "\n");
  }
};

fs::path sidecar(const fs::path& out, const std::string& suffix) {
  return out.parent_path() / (out.stem().string() + suffix);
}

RunConfig config_or_defaults(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

std::array<double, 3> parse_ratio(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 3) fail(ErrorCode::ConfigError, "--ratio needs three comma-separated fractions");
  std::array<double, 3> r{};
  for (std::size_t i = 0; i < 3; ++i) {
    try {
      r[i] = std::stod(parts[i]);
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, "--ratio: '" + parts[i] + "' is not a number");
    }
  }
  return r;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& p : split(s, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(trim(p), &used);
      if (used != trim(p).size()) throw std::invalid_argument(p);
      out.push_back(v);
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, "--seeds: '" + p + "' is not a non-negative integer");
    }
  }
  if (out.empty()) fail(ErrorCode::ConfigError, "--seeds is empty");
  return out;
}

FoldAssignment load_split_checked(const fs::path& path, const Corpus& corpus) {
  if (!fs::exists(path)) fail(ErrorCode::MissingSplit, "split file '" + path.string() + "' does not exist; run 'vpgraph split' first");
  return load_split(path, corpus.keys());
}

Corpus load_corpus_checked(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::IoError, "corpus '" + path.string() + "' does not exist; run 'vpgraph featurize' first");
  return load_corpus(path);
}

// --- subcommands -----------------------------------------------------------------------

struct SynthArgs {
  std::string out, config;
  std::uint64_t seed = 0;
  int n = 0;
  double corrupt = -1.0;
};

void cmd_synth(const SynthArgs& a) {
  RunConfig cfg = config_or_defaults(a.config);
  if (a.n > 0) cfg.synth.n_molecules = a.n;
  if (a.corrupt >= 0.0) cfg.synth.corrupt_op_rate = a.corrupt;
  const auto corpus = generate_synthetic(a.seed, cfg.synth);
  Manifest m;
  m.command = "synth";
  m.seed = a.seed;
  m.config_hash = text_hash(cfg.synth.to_json().dump());
  if (!a.config.empty()) m.input(a.config);
  m.output(a.out, records_to_csv(corpus.records));
  m.extra = {{"synth", cfg.synth.to_json()}, {"records", corpus.records.size()}, {"molecules", corpus.truth.size()}};
  m.write(sidecar(a.out, ".manifest.json"));
  std::cout << "wrote " << corpus.records.size() << " records for " << corpus.truth.size() << " molecules to " << a.out << "\n";
}

struct FeaturizeArgs {
  std::string input, out;
};

void cmd_featurize(const FeaturizeArgs& a) {
  const Corpus corpus = build_corpus(records_from_csv(read_csv(a.input)));
  Manifest m;
  m.command = "featurize";
  m.input(a.input);
  m.output(a.out, corpus_to_jsonl(corpus));
  m.extra = {{"molecules", corpus.molecules.size()}, {"units_seen", corpus.units_seen}, {"warnings", corpus.warnings}};
  m.write(sidecar(a.out, ".manifest.json"));
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "featurized " << corpus.molecules.size() << " molecules into " << a.out << "\n";
}

struct SplitArgs {
  std::string corpus, out, ratio = "0.8,0.1,0.1";
  std::uint64_t seed = 0;
};

void cmd_split(const SplitArgs& a) {
  const Corpus corpus = load_corpus_checked(a.corpus);
  SplitOptions opts;
  opts.ratio = parse_ratio(a.ratio);
  opts.seed = a.seed;
  RunConfig probe;
  probe.split = opts;
  probe.validate();
  const auto split = split_corpus(corpus, opts);
  Manifest m;
  m.command = "split";
  m.seed = a.seed;
  m.input(a.corpus);
  freeze_split(split.assignment, a.out);
  m.outputs[fs::path(a.out).filename().string()] = file_hash(a.out);
  nlohmann::json diag = split.diagnostics.to_json();
  diag["warnings"] = split.warnings;
  m.output(sidecar(a.out, ".diagnostics.json"), diag.dump(2) + "\n");
  m.write(sidecar(a.out, ".manifest.json"));
  for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";
  const auto c = split.diagnostics.counts;
  std::cout << "split " << c[0] << "/" << c[1] << "/" << c[2] << " (train/val/test) written to " << a.out << "\n";
}

struct TrainArgs {
  std::string config, corpus, split, out, seeds;
  std::uint64_t seed = 0;
};

int train_one(const Corpus& corpus, const FoldAssignment& folds, const RunConfig& cfg, std::uint64_t seed,
              const fs::path& dir, const TrainArgs& a) {
  const RunOutput run = run_training(corpus, folds, cfg, seed);
  Manifest m;
  m.command = "train";
  m.seed = seed;
  m.config_hash = cfg.hash();
  if (!a.config.empty()) m.input(a.config);
  m.input(a.corpus);
  m.input(a.split);
  m.outputs = write_run(run, dir);
  m.extra = {{"epochs_run", run.result.epochs_run}, {"stop_reason", run.result.stop_reason}};
  m.write(dir / "manifest.json");
  const auto& t = run.metrics.vp.at("test");
  std::cout << "seed " << seed << ": " << run.result.epochs_run << " epochs, test VP MSE " << t.mse << " -> " << dir.string()
            << "\n";
  return 0;
}

int cmd_train(const TrainArgs& a) {
  const RunConfig cfg = config_or_defaults(a.config);
  const Corpus corpus = load_corpus_checked(a.corpus);
  const FoldAssignment folds = load_split_checked(a.split, corpus);
  if (a.seeds.empty()) return train_one(corpus, folds, cfg, a.seed, a.out, a);

  // one process per seed, each writing its own run directory
  const auto seeds = parse_seeds(a.seeds);
  std::map<pid_t, std::uint64_t> children;
  std::cout.flush();
  for (auto s : seeds) {
    const pid_t pid = fork();
    if (pid < 0) fail(ErrorCode::IoError, "fork failed");
    if (pid == 0) {
      int code = 0;
      try {
        code = train_one(corpus, folds, cfg, s, fs::path(a.out) / ("seed_" + std::to_string(s)), a);
      } catch (const Error& e) {
        std::cerr << "vpgraph train [seed " << s << "] " << module_of(e.code()) << ": " << e.what() << "\n";
        code = e.code() == ErrorCode::ConfigError ? kExitUsage : kExitRuntime;
      } catch (const std::exception& e) {
        std::cerr << "vpgraph train [seed " << s << "]: " << e.what() << "\n";
        code = kExitRuntime;
      }
      std::cout.flush();
      std::_Exit(code);
    }
    children[pid] = s;
  }
  int worst = 0;
  for (std::size_t i = 0; i < children.size(); ++i) {
    int status = 0;
    const pid_t pid = wait(&status);
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kExitRuntime;
    if (code != 0) std::cerr << "seed " << children[pid] << " failed with exit code " << code << "\n";
    worst = std::max(worst, code);
  }
  if (worst != 0) return worst;

  // mean and sample SD over seeds of the headline metrics
  nlohmann::json summary;
  std::map<std::string, std::vector<double>> values;
  for (auto s : seeds) {
    const auto j = nlohmann::json::parse(read_text_file(fs::path(a.out) / ("seed_" + std::to_string(s)) / "metrics.json"));
    for (const char* fold : {"val", "test"}) {
      if (j["vp"].contains(fold)) values[std::string("vp_") + fold + "_mse"].push_back(j["vp"][fold]["mse"].get<double>());
      if (j["op"].contains(fold)) values[std::string("op_") + fold + "_mse"].push_back(j["op"][fold]["mse"].get<double>());
    }
  }
  summary["seeds"] = seeds;
  for (const auto& [k, v] : values) {
    const auto st = summarize_seeds(v);
    summary[k] = {{"mean", st.mean}, {"std", st.std}, {"n", st.n}, {"values", v}};
  }
  summary["std_denominator"] = "n-1";
  Manifest m;
  m.command = "train --seeds";
  m.config_hash = cfg.hash();
  m.input(a.corpus);
  m.input(a.split);
  m.output(fs::path(a.out) / "summary.json", summary.dump(2) + "\n");
  m.write(fs::path(a.out) / "manifest.json");
  if (values.count("vp_test_mse")) {
    const auto st = summarize_seeds(values["vp_test_mse"]);
    std::cout << "test VP MSE over " << st.n << " seeds: " << st.mean << " +/- " << st.std << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string run, out;
  int replicates = 2000;
  std::uint64_t seed = 0;
};

void cmd_eval(const EvalArgs& a) {
  const fs::path run(a.run);
  const auto ev = evaluate_run(run, a.replicates, a.seed);
  const fs::path out(a.out);
  const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  Manifest m;
  m.command = "eval";
  m.seed = a.seed;
  for (const char* f : {"predictions_vp.csv", "predictions_op.csv", "max_sim.csv"})
    if (fs::exists(run / f)) m.input(run / f);
  nlohmann::json j = ev.metrics.to_json();
  j["bootstrap"] = {{"replicates", a.replicates}, {"seed", a.seed}, {"level", 0.95}, {"unit", "molecule"}};
  m.output(out, j.dump(2) + "\n");
  m.output(dir / "parity.csv", ev.parity);
  m.output(dir / "residual_vs_sim.csv", ev.residual_vs_sim);
  m.output(dir / "bins.csv", ev.bins);
  m.write(sidecar(out, ".manifest.json"));
  if (ev.metrics.vp.count("test")) {
    const auto& t = ev.metrics.vp.at("test");
    std::cout << "test VP: MSE " << t.mse << " [" << t.mse_ci.lo << ", " << t.mse_ci.hi << "], MAE " << t.mae;
    if (t.r2) std::cout << ", R2 " << *t.r2;
    std::cout << "\n";
  }
}

struct DetectArgs {
  std::string scenario, predictions, out;
  double gamma = 0.0;
};

void cmd_detect(const DetectArgs& a) {
  Scenario s = load_scenario(a.scenario);
  if (a.gamma > 0.0) s.gamma = a.gamma;
  const auto ranked = rank_detectability(parse_compound_csv(read_text_file(a.predictions)), s);
  Manifest m;
  m.command = "detect";
  m.input(a.scenario);
  m.input(a.predictions);
  m.output(a.out, ranking_csv(ranked));
  m.write(sidecar(a.out, ".manifest.json"));
  std::cout << "ranked " << ranked.size() << " compounds into " << a.out << "\n";
}

struct DiagArgs {
  std::string corpus, split, out;
  int fp_bits = 2048;
};

void cmd_diag(const DiagArgs& a) {
  const Corpus corpus = load_corpus_checked(a.corpus);
  const FoldAssignment folds = load_split_checked(a.split, corpus);
  const auto diag = diagnose_split(folds, corpus.scaffold_map());
  const auto sim = similarity_report(folds, corpus_fingerprints(corpus, a.fp_bits));
  nlohmann::json j;
  j["split"] = diag.to_json();
  j["similarity"] = sim.summary_json();
  j["corpus"] = {{"molecules", corpus.molecules.size()}, {"units_seen", corpus.units_seen}};
  std::size_t vp = 0, oa = 0, ow = 0;
  for (const auto& mol : corpus.molecules) {
    vp += mol.vp.empty() ? 0 : 1;
    oa += mol.oa ? 1 : 0;
    ow += mol.ow ? 1 : 0;
  }
  j["corpus"]["with_vp"] = vp;
  j["corpus"]["with_oa"] = oa;
  j["corpus"]["with_ow"] = ow;
  Manifest m;
  m.command = "diag";
  m.input(a.corpus);
  m.input(a.split);
  m.output(a.out, j.dump(2) + "\n");
  m.output(sidecar(a.out, ".similarity.csv"), sim.rows_csv());
  m.write(sidecar(a.out, ".manifest.json"));
  std::cout << "identity overlap " << diag.identity_overlap << ", scaffold overlap " << diag.scaffold_overlap << "\n";
  if (diag.identity_overlap || diag.scaffold_overlap) fail(ErrorCode::LeakageDetected, "split leaks molecules or scaffolds");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"vpgraph: vapor pressure and odor threshold graph models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic measurement CSV with planted structure-property rules");
  synth->add_option("--out", sa.out, "Output CSV")->required();
  synth->add_option("--seed", sa.seed, "Generator seed");
  synth->add_option("--n", sa.n, "Number of molecules (overrides the config)");
  synth->add_option("--corrupt", sa.corrupt, "Fraction of OP records replaced by shifted values");
  synth->add_option("--config", sa.config, "Run config TOML ([synth] section)");

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "Parse, harmonize and aggregate a measurement CSV into a molecule store");
  featurize->add_option("--input", fa.input, "Measurement CSV")->required()->check(CLI::ExistingFile);
  featurize->add_option("--out", fa.out, "Output JSON-lines store")->required();

  SplitArgs pa;
  auto* split_cmd = app.add_subcommand("split", "Scaffold split with leakage diagnostics");
  split_cmd->add_option("--corpus", pa.corpus, "Molecule store from featurize")->required();
  split_cmd->add_option("--ratio", pa.ratio, "train,val,test fractions");
  split_cmd->add_option("--seed", pa.seed, "Tie-break seed");
  split_cmd->add_option("--out", pa.out, "Frozen split CSV")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train one model per seed with the safe multitask schedule");
  train_cmd->add_option("--config", ta.config, "Run config TOML (defaults when omitted)");
  train_cmd->add_option("--corpus", ta.corpus, "Molecule store from featurize")->required();
  train_cmd->add_option("--split", ta.split, "Frozen split CSV")->required();
  auto* seed_opt = train_cmd->add_option("--seed", ta.seed, "Seed of a single run");
  train_cmd->add_option("--seeds", ta.seeds, "Comma-separated seeds, trained in parallel processes")->excludes(seed_opt);
  train_cmd->add_option("--out", ta.out, "Run directory")->required();

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Metrics, bootstrap intervals and CSV exports for a run directory");
  eval_cmd->add_option("--run", ea.run, "Run directory from train")->required();
  eval_cmd->add_option("--out", ea.out, "metrics.json path; CSVs go next to it")->required();
  eval_cmd->add_option("--replicates", ea.replicates, "Bootstrap replicates")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", ea.seed, "Bootstrap seed");

  DetectArgs da;
  auto* detect_cmd = app.add_subcommand("detect", "Rank compounds by C_air / C50 under a scenario");
  detect_cmd->add_option("--scenario", da.scenario, "Scenario TOML")->required();
  detect_cmd->add_option("--predictions", da.predictions, "compounds.csv from a run")->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--gamma", da.gamma, "Psychometric slope (overrides the scenario)");
  detect_cmd->add_option("--out", da.out, "Ranking CSV")->required();

  DiagArgs ga;
  auto* diag_cmd = app.add_subcommand("diag", "Leakage and similarity diagnostics of a split");
  diag_cmd->add_option("--corpus", ga.corpus, "Molecule store")->required();
  diag_cmd->add_option("--split", ga.split, "Frozen split CSV")->required();
  diag_cmd->add_option("--fp-bits", ga.fp_bits, "Fingerprint width");
  diag_cmd->add_option("--out", ga.out, "Diagnostics JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*synth) cmd_synth(sa);
  else if (*featurize) cmd_featurize(fa);
  else if (*split_cmd) cmd_split(pa);
  else if (*train_cmd) return cmd_train(ta);
  else if (*eval_cmd) cmd_eval(ea);
  else if (*detect_cmd) cmd_detect(da);
  else if (*diag_cmd) cmd_diag(ga);
  return 0;
}

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::MissingSplit:
    case ErrorCode::InvalidScenario: return kExitUsage;
    default: return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Error& e) {
    nlohmann::json err = {{"module", module_of(e.code())}, {"code", to_string(e.code())}, {"message", e.what()}};
    if (e.offset()) err["offset"] = *e.offset();
    std::cerr << "vpgraph: error " << err.dump() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "vpgraph: error {\"module\":\"cli\",\"message\":" << nlohmann::json(e.what()).dump() << "}\n";
    return kExitRuntime;
  }
}
