#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/fold.hpp"
#include "vpg/molecule.hpp"

namespace vpg {

/// Group key shared by all acyclic molecules.
inline const std::string kAcyclicScaffold;

/// Bemis-Murcko framework: ring systems plus linkers, with atoms attached to
/// the framework by a double bond kept. Stereo marks and chirality flags are
/// cleared. Returns nullopt for acyclic input.
std::optional<Molecule> murcko_scaffold(const Molecule& mol);
/// Canonical key of the framework, kAcyclicScaffold for acyclic input.
std::string murcko_scaffold_key(const Molecule& mol);

struct ScaffoldGroup {
  std::string key;
  std::vector<std::string> members;  // molecule canonical keys
};

/// Groups molecule keys by scaffold key (input: molecule key -> scaffold key).
std::vector<ScaffoldGroup> group_by_scaffold(const std::map<std::string, std::string>& scaffold_of);

struct SplitResult {
  FoldAssignment assignment;
  std::vector<std::string> warnings;
};

/// Greedy capacity packing: groups are visited largest first (equal sizes in
/// an order fixed by a seeded hash of the scaffold key) and each goes whole to
/// the fold with the most remaining capacity (target - count); exact capacity
/// ties prefer train, then val, then test.
SplitResult capacity_split(const std::vector<ScaffoldGroup>& groups, std::array<double, 3> ratio, std::uint64_t seed);

struct SplitDiagnostics {
  std::size_t identity_overlap = 0;        // keys present in train and in val/test
  std::size_t scaffold_overlap = 0;        // val/test scaffold groups also present in train
  double val_scaffold_seen_fraction = 0.0;
  double test_scaffold_seen_fraction = 0.0;
  std::array<std::size_t, 3> counts{0, 0, 0};
  std::size_t max_group_size = 0;

  nlohmann::json to_json() const;
};

SplitDiagnostics diagnose_split(const FoldAssignment& folds, const std::map<std::string, std::string>& scaffold_of);
/// Same as diagnose_split but throws LeakageDetected on any overlap.
SplitDiagnostics verify_no_leakage(const FoldAssignment& folds, const std::map<std::string, std::string>& scaffold_of);

/// CSV with a version line, a content checksum line and (molecule_key, fold) rows.
std::string serialize_split(const FoldAssignment& folds);
FoldAssignment parse_split(const std::string& text);
void freeze_split(const FoldAssignment& folds, const std::filesystem::path& path);
/// Throws ChecksumMismatch for edited files and MissingKey when a corpus key
/// has no assignment.
FoldAssignment load_split(const std::filesystem::path& path, const std::vector<std::string>& corpus_keys = {});

}  // namespace vpg
