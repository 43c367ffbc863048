#pragma once

// End-to-end steps shared by the command-line tool, the Python module and the
// acceptance suite: split a corpus, train one seed, export and re-evaluate runs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/config.hpp"
#include "vpg/dataset.hpp"
#include "vpg/detect.hpp"
#include "vpg/eval.hpp"
#include "vpg/fingerprint.hpp"
#include "vpg/safemt.hpp"
#include "vpg/scaffold.hpp"

namespace vpg {

inline constexpr const char* kVersion = "0.1.0";

/// Library, compiler and language versions recorded in manifests.
nlohmann::json version_info();

struct SplitOutput {
  FoldAssignment assignment;
  SplitDiagnostics diagnostics;
  std::vector<std::string> warnings;
};
/// Scaffold grouping, capacity split and a leakage check (LeakageDetected).
SplitOutput split_corpus(const Corpus& corpus, const SplitOptions& opts);

/// ECFP4 of every corpus molecule.
std::map<std::string, Fingerprint> corpus_fingerprints(const Corpus& corpus, int nbits = 2048);

struct RunOutput {
  RunConfig config;
  std::uint64_t seed = 0;
  TrainResult result;
  std::vector<VpPrediction> vp;  // VP checkpoint, every fold
  std::vector<OpPrediction> op;  // OP checkpoint, every fold (empty without OP heads)
  std::map<std::string, double> max_sim;
  std::vector<CompoundPrediction> compounds;  // per molecule, VP at eval.detect_temperature_K
  PreprocessManifest preprocess;
  MetricsReport metrics;
};

/// prepare -> Model -> train -> predictions with the per-task checkpoints -> metrics.
RunOutput run_training(const Corpus& corpus, const FoldAssignment& folds, const RunConfig& cfg, std::uint64_t seed);

std::string vp_predictions_csv(const std::vector<VpPrediction>& rows);
std::vector<VpPrediction> parse_vp_predictions(const std::string& text);
std::string op_predictions_csv(const std::vector<OpPrediction>& rows);
std::vector<OpPrediction> parse_op_predictions(const std::string& text);
std::string compounds_csv(const std::vector<CompoundPrediction>& rows);
std::string max_sim_csv(const std::map<std::string, double>& sims);
std::map<std::string, double> parse_max_sim(const std::string& text);

/// Writes checkpoints, curves, predictions, metrics and similarity files into
/// `dir`. Returns the file -> content-hash map for the manifest.
std::map<std::string, std::string> write_run(const RunOutput& run, const std::filesystem::path& dir);

struct EvalOutput {
  MetricsReport metrics;
  std::string parity;           // parity.csv
  std::string residual_vs_sim;  // residual_vs_sim.csv
  std::string bins;             // bins.csv
};
/// Re-evaluates a run directory written by write_run.
EvalOutput evaluate_run(const std::filesystem::path& dir, int replicates, std::uint64_t seed);

/// Content hash of a file (FNV-1a, hex). IoError when unreadable.
std::string file_hash(const std::filesystem::path& path);
std::string text_hash(const std::string& text);

}  // namespace vpg
