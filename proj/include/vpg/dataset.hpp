#pragma once

// Data plumbing between raw measurement CSVs and model batches:
//   CSV rows -> RawRecord -> Corpus (one entry per canonical molecule, log-space
//   labels, raw graph encodings) -> Dataset (fold-aware scaling) -> GraphBatch.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vpg/csv.hpp"
#include "vpg/features.hpp"
#include "vpg/fingerprint.hpp"
#include "vpg/fold.hpp"
#include "vpg/preprocess.hpp"

namespace vpg {

struct RawRecord {
  std::size_t row = 0;  // 1-based data row, for messages
  std::string smiles;
  Endpoint endpoint = Endpoint::VP;
  double value = 0.0;
  std::string unit;
  std::optional<double> temperature_K;
  Medium medium = Medium::None;
  std::optional<double> sigma;
  std::optional<int> n_reports;
  std::optional<double> iqr;
};

/// Columns: smiles, endpoint, value, unit, and optionally temperature_K,
/// medium, n_reports, iqr, sigma. Empty optional cells are unset.
std::vector<RawRecord> records_from_csv(const CsvTable& table);
std::string records_to_csv(const std::vector<RawRecord>& records);

struct VpRow {
  double temperature_K = 0.0;
  double y = 0.0;  // log10 Pa, duplicate median
  int n = 1;
};

struct OpLabel {
  double y = 0.0;  // log10 in the medium basis unit, duplicate median
  int n = 1;
  double iqr = 0.0;
  std::optional<double> sigma;
  std::vector<double> values;  // every harmonized record, for pooling
};

struct MoleculeRecord {
  std::string key;
  std::string smiles;  // first spelling seen in the input
  double molar_mass = 0.0;
  std::string scaffold;
  EncodedGraph graph;
  std::vector<VpRow> vp;
  std::optional<OpLabel> oa, ow;
};

struct Corpus {
  std::vector<MoleculeRecord> molecules;  // sorted by key
  std::set<std::string> units_seen;
  std::vector<std::string> warnings;

  const MoleculeRecord* find(const std::string& key) const;
  std::vector<std::string> keys() const;
  std::map<std::string, std::string> scaffold_map() const;
};

/// Parses, harmonizes and aggregates. VP duplicates are merged per
/// (molecule, temperature rounded to 0.01 K); OP duplicates per (molecule, medium).
/// Rows that fail to parse or harmonize raise an Error naming the row.
Corpus build_corpus(const std::vector<RawRecord>& records);

/// JSON-lines store: a header object {"format":"vpgraph.molstore","version":1,...}
/// followed by one molecule object per line.
std::string corpus_to_jsonl(const Corpus& corpus);
Corpus corpus_from_jsonl(const std::string& text);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

struct PrepareOptions {
  bool op_pooled = false;  // one pooled OP target in slot 0 instead of per-medium oa/ow
  TargetScaler::Kind op_scaler = TargetScaler::Kind::MeanStd;
  std::optional<double> op_winsor_alpha;
  std::optional<double> vp_winsor_alpha;
  bool uncertainty_weights = false;
  double uncertainty_alpha = 0.1;
  int fp_bits = 2048;
};

/// One molecule with all of its labels, scaled with train-fold statistics.
struct Sample {
  std::string key;
  Fold fold = Fold::Train;
  Matrix x;                            // scaled A20 node features
  std::vector<std::array<int, 2>> edges;
  Matrix e;                            // E17
  std::vector<double> t_raw, t_std;    // one entry per VP row
  std::vector<double> vp_raw, vp_std;  // log10 Pa / standardized
  std::array<int, 2> op_m{0, 0};       // slot 0 = oa (or pooled), slot 1 = ow
  std::array<double, 2> op_raw{0.0, 0.0};
  std::array<double, 2> op_std{0.0, 0.0};
  std::array<double, 2> op_w{1.0, 1.0};
  Fingerprint fp;
};

struct Dataset {
  std::vector<Sample> samples;
  FeatureScaler features;
  TargetScaler t_scaler, vp_scaler;
  std::array<std::optional<TargetScaler>, 2> op_scalers;  // unset when a slot has no train labels
  PreprocessManifest manifest;
  double pna_delta = 0.0;  // mean log(d+1) over train atoms
  bool op_pooled = false;

  std::vector<int> indices(Fold f) const;
  /// Per-row MolGraph view of one sample (OP-only molecules give one t=0 row).
  std::vector<MolGraph> molgraphs(std::size_t sample) const;
};

/// Fits every scaler on train-fold molecules only. Throws MissingKey when a
/// corpus molecule has no fold and EmptyTrainSet when the train fold is empty.
Dataset prepare(const Corpus& corpus, const FoldAssignment& folds, const PrepareOptions& opts = {});

/// Concatenated graphs of a set of samples.
struct GraphBatch {
  Matrix x;
  std::vector<int> src, dst;
  Matrix e;
  std::vector<int> node_graph;
  std::vector<double> in_degree;
  int n_graphs = 0;
  std::vector<int> sample_index;

  std::vector<int> vp_graph;  // graph of each VP row
  std::vector<double> vp_t, vp_y;
  std::array<std::vector<double>, 2> op_y, op_m, op_w;
  Matrix fp;  // n_graphs x nbits, only when requested

  std::size_t vp_rows() const { return vp_graph.size(); }
  bool has_op(int slot) const;
};

GraphBatch make_batch(const Dataset& data, std::span<const int> sample_indices, bool with_fingerprints = false);

}  // namespace vpg
