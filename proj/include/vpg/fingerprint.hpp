#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/fold.hpp"
#include "vpg/molecule.hpp"

namespace vpg {

/// Fixed-width bitset produced by hashed circular environments.
struct Fingerprint {
  int nbits = 0;
  int radius = 0;
  std::vector<std::uint64_t> words;

  Fingerprint() = default;
  Fingerprint(int nbits, int radius);
  void set(int bit) { words[static_cast<std::size_t>(bit) / 64] |= 1ULL << (bit % 64); }
  bool test(int bit) const { return words[static_cast<std::size_t>(bit) / 64] >> (bit % 64) & 1ULL; }
  int popcount() const;
  std::vector<int> on_bits() const;
  bool operator==(const Fingerprint&) const = default;
};

/// ECFP-style fingerprint. Atom invariants: atomic number, heavy degree,
/// formal charge, total H, ring membership, aromaticity. Each iteration hashes
/// the atom's previous identifier with the sorted (bond order, neighbour
/// identifier) pairs; identifiers from every radius are folded modulo nbits.
Fingerprint ecfp(const Molecule& mol, int radius = 2, int nbits = 2048);

/// |a AND b| / |a OR b|; 1 when both are empty. Throws WidthMismatch.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

/// Throws EmptyTrainSet for an empty reference set.
double max_similarity_to_train(const Fingerprint& query, std::span<const Fingerprint> train);

/// MaxSim bins [0,0.3), [0.3,0.5), [0.5,0.7), [0.7,1.0].
inline constexpr std::array<double, 5> kSimBinEdges = {0.0, 0.3, 0.5, 0.7, 1.0};
int similarity_bin(double sim);
const char* similarity_bin_label(int bin);

struct FoldSimilarity {
  std::size_t n = 0;
  double median = 0.0;
  double iqr = 0.0;
  double p95 = 0.0;
  std::array<std::size_t, 4> histogram{0, 0, 0, 0};
};

struct SimilarityRow {
  std::string key;
  Fold fold = Fold::Val;
  double max_sim = 0.0;
  int bin = 0;
};

struct SimilarityReport {
  std::map<Fold, FoldSimilarity> folds;  // val and test
  std::vector<SimilarityRow> rows;

  nlohmann::json summary_json() const;
  std::string rows_csv() const;
};

/// Max similarity of every val/test molecule to the train fold.
SimilarityReport similarity_report(const FoldAssignment& folds, const std::map<std::string, Fingerprint>& fps);

}  // namespace vpg
