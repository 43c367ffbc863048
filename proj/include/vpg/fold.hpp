#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vpg {

enum class Fold { Train, Val, Test };

inline const char* to_string(Fold f) {
  switch (f) {
    case Fold::Train: return "train";
    case Fold::Val: return "val";
    case Fold::Test: return "test";
  }
  return "train";
}

/// Parses "train" / "val" / "test"; throws FormatError otherwise.
Fold parse_fold(std::string_view s);

struct FoldEntry {
  std::string key;
  Fold fold = Fold::Train;
};

/// Molecule -> fold map keyed by canonical SMILES. Stored as a list so that
/// corrupted assignments (a key listed twice) can be represented and detected.
struct FoldAssignment {
  std::vector<FoldEntry> entries;
  std::array<double, 3> ratio{0.8, 0.1, 0.1};
  std::uint64_t seed = 0;

  /// Fold of the first entry with this key.
  std::optional<Fold> find(const std::string& key) const;
  std::array<std::size_t, 3> counts() const;
  std::vector<std::string> keys_in(Fold f) const;
};

}  // namespace vpg
