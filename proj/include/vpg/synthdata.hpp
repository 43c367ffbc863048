#pragma once

// Synthetic corpus with planted target functions of simple graph statistics.
// Molecules come from a small grammar: acyclic chains with functional groups,
// and one ring system optionally joined to a second one through a linker,
// decorated with substituents.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/dataset.hpp"
#include "vpg/molecule.hpp"

namespace vpg {

struct SynthConfig {
  int n_molecules = 500;
  double vp_rate = 0.92;    // molecules with VP rows
  double op_rate = 0.56;    // molecules with at least one OP label
  double water_rate = 0.35; // OP molecules measured in water ...
  double both_rate = 0.15;  // ... or in both media
  int min_temps = 1, max_temps = 4;
  double t_lo = 260.0, t_hi = 360.0;
  double sigma_vp = 0.05;
  double sigma_op = 0.25;
  double acyclic_rate = 0.15;
  double link_rate = 0.35;  // second ring system through a linker
  double substituent_rate = 0.35;
  int max_heavy = 26;
  double duplicate_rate = 0.1;  // extra OP reports of the same molecule
  double corrupt_op_rate = 0.0; // OP records replaced by shifted values
  double corrupt_lo = 2.0, corrupt_hi = 4.0;  // |shift| in log10 units

  nlohmann::json to_json() const;
  static SynthConfig from_json(const nlohmann::json& j);
};

/// Graph statistics behind the planted functions.
struct SynthStats {
  int heavy = 0;
  int donors = 0;    // N/O/S atoms carrying hydrogens
  int hetero = 0;    // non-carbon heavy atoms
  int halogens = 0;
  int aromatic_atoms = 0;
  int rings = 0;     // smallest-ring count
};
SynthStats synth_stats(const Molecule& mol);

/// log10 Pa at temperature T (K) without noise.
double planted_vp(const SynthStats& s, double temperature_K);
/// log10 mg/m3 (air) / ug/L (water) without noise.
double planted_oa(const SynthStats& s);
double planted_ow(const SynthStats& s);

struct SynthTruth {
  std::string smiles;
  std::string key;
  SynthStats stats;
  std::vector<double> temperatures;
  std::optional<double> oa_label, ow_label;  // noisy, never corrupted (median over reports)
  bool oa_corrupted = false, ow_corrupted = false;
};

struct SynthCorpus {
  std::vector<RawRecord> records;
  std::vector<SynthTruth> truth;
};

/// Deterministic in (seed, config). Throws InvalidArgument for n < 50.
SynthCorpus generate_synthetic(std::uint64_t seed, const SynthConfig& cfg = {});

}  // namespace vpg
