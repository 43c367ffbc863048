#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/fold.hpp"
#include "vpg/matrix.hpp"
#include "vpg/molecule.hpp"
#include "vpg/scaler.hpp"

namespace vpg {

inline constexpr int kAtomDim = 20;
inline constexpr int kBondDim = 17;

/// Column layout of the 20-wide atom encoding.
namespace a20 {
inline constexpr int kElement = 0;   // 10 one-hot slots, ElementClass order
inline constexpr int kDegree = 10;   // heavy-atom degree clipped to 0..5
inline constexpr int kCharge = 11;   // formal charge clipped to -2..2
inline constexpr int kHybrid = 12;   // sp, sp2, sp3, other
inline constexpr int kAromatic = 16;
inline constexpr int kInRing = 17;
inline constexpr int kTotalH = 18;
inline constexpr int kChiral = 19;
inline constexpr std::array<int, 3> kScalarChannels = {kDegree, kCharge, kTotalH};
}  // namespace a20

/// Column layout of the 17-wide bond encoding.
namespace e17 {
inline constexpr int kOrder = 0;      // single, double, triple, aromatic
inline constexpr int kConjugated = 4;
inline constexpr int kInRing = 5;
inline constexpr int kStereo = 6;     // NONE, ANY, Z, E, CIS, TRANS
inline constexpr int kRingSize = 12;  // 3, 4, 5, 6, >=7 (multi-hot)
}  // namespace e17

/// Raw (clipped, unstandardized) atom encoding.
std::array<double, kAtomDim> encode_atom(const Molecule& mol, int atom);
std::array<double, kBondDim> encode_bond(const Bond& bond);

/// Node/edge tensors of one molecule. Atoms are emitted in canonical order so
/// that any SMILES spelling of the same molecule yields identical matrices.
struct EncodedGraph {
  Matrix node_feats;                        // n x 20, raw
  std::vector<std::array<int, 2>> edges;    // directed (src, dst), both directions
  Matrix edge_feats;                        // E x 17, rows shared by the two directions
};
EncodedGraph encode_molecule(const Molecule& mol);

/// Per-channel standardization of the scalar atom channels (degree, charge,
/// total H), fitted on training-fold atoms only. Binary and one-hot channels
/// are left untouched. A channel with zero spread keeps scale 1.
struct FeatureScaler {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> scale{1.0, 1.0, 1.0};

  static FeatureScaler fit(std::span<const Matrix* const> train_node_feats);
  void apply(Matrix& node_feats) const;

  nlohmann::json to_json() const;
  static FeatureScaler from_json(const nlohmann::json& j);
};

/// One numeric training sample (one temperature row for VP molecules, t=0 for
/// OP-only molecules).
struct MolGraph {
  std::string key;
  Matrix node_feats;
  std::vector<std::array<int, 2>> edge_index;
  Matrix edge_feats;
  double t_std = 0.0;
  double y_vp = 0.0, y_oa = 0.0, y_ow = 0.0;
  int m_vp = 0, m_oa = 0, m_ow = 0;
  std::optional<int> op_n;
  std::optional<double> op_iqr;
};

struct StandardizedTargets {
  TargetScaler scaler;
  std::vector<double> values;
};

/// Fits mean/SD on rows whose fold is Train and transforms every row with it.
/// Throws DegenerateScale when the train SD is below 1e-8.
StandardizedTargets standardize_targets(std::span<const double> values, std::span<const Fold> folds);

}  // namespace vpg
