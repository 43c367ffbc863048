#include "vpg/features.hpp"

#include <algorithm>
#include <numeric>

#include "vpg/error.hpp"
#include "vpg/smiles.hpp"
#include "vpg/util.hpp"

namespace vpg {

Fold parse_fold(std::string_view s) {
  if (s == "train") return Fold::Train;
  if (s == "val") return Fold::Val;
  if (s == "test") return Fold::Test;
  fail(ErrorCode::FormatError, "unknown fold '" + std::string(s) + "'");
}

std::array<double, kAtomDim> encode_atom(const Molecule& mol, int atom) {
  const Atom& a = mol.atoms[static_cast<std::size_t>(atom)];
  std::array<double, kAtomDim> f{};
  f[a20::kElement + static_cast<int>(a.element)] = 1.0;
  f[a20::kDegree] = std::clamp(a.degree, 0, 5);
  f[a20::kCharge] = std::clamp(a.formal_charge, -2, 2);
  f[a20::kHybrid + static_cast<int>(infer_hybridization(mol, atom))] = 1.0;
  f[a20::kAromatic] = a.aromatic ? 1.0 : 0.0;
  f[a20::kInRing] = a.in_ring ? 1.0 : 0.0;
  f[a20::kTotalH] = a.total_h();
  f[a20::kChiral] = a.chiral_center ? 1.0 : 0.0;
  return f;
}

std::array<double, kBondDim> encode_bond(const Bond& bond) {
  std::array<double, kBondDim> f{};
  f[e17::kOrder + static_cast<int>(bond.order)] = 1.0;
  f[e17::kConjugated] = bond.conjugated ? 1.0 : 0.0;
  f[e17::kInRing] = bond.in_ring ? 1.0 : 0.0;
  f[e17::kStereo + static_cast<int>(bond.stereo)] = 1.0;
  for (int size : bond.ring_sizes) f[e17::kRingSize + std::clamp(size, 3, 7) - 3] = 1.0;
  return f;
}

EncodedGraph encode_molecule(const Molecule& mol) {
  const std::size_t n = mol.num_atoms();
  std::vector<int> ranks = canonical_ranks(mol);
  std::vector<int> order(n);  // new index -> old index
  for (std::size_t i = 0; i < n; ++i) order[static_cast<std::size_t>(ranks[i])] = static_cast<int>(i);

  EncodedGraph g;
  g.node_feats = Matrix::Zero(static_cast<Eigen::Index>(n), kAtomDim);
  for (std::size_t r = 0; r < n; ++r) {
    auto f = encode_atom(mol, order[r]);
    for (int c = 0; c < kAtomDim; ++c) g.node_feats(static_cast<Eigen::Index>(r), c) = f[static_cast<std::size_t>(c)];
  }

  std::vector<std::size_t> bond_order(mol.num_bonds());
  std::iota(bond_order.begin(), bond_order.end(), 0);
  auto bond_key = [&](std::size_t b) {
    int u = ranks[static_cast<std::size_t>(mol.bonds[b].begin)], v = ranks[static_cast<std::size_t>(mol.bonds[b].end)];
    return std::pair(std::min(u, v), std::max(u, v));
  };
  std::sort(bond_order.begin(), bond_order.end(), [&](std::size_t a, std::size_t b) { return bond_key(a) < bond_key(b); });

  g.edge_feats = Matrix::Zero(static_cast<Eigen::Index>(2 * mol.num_bonds()), kBondDim);
  Eigen::Index row = 0;
  for (std::size_t b : bond_order) {
    auto [u, v] = bond_key(b);
    auto f = encode_bond(mol.bonds[b]);
    for (auto [s, d] : {std::pair(u, v), std::pair(v, u)}) {
      g.edges.push_back({s, d});
      for (int c = 0; c < kBondDim; ++c) g.edge_feats(row, c) = f[static_cast<std::size_t>(c)];
      ++row;
    }
  }
  return g;
}

FeatureScaler FeatureScaler::fit(std::span<const Matrix* const> train_node_feats) {
  FeatureScaler s;
  for (std::size_t k = 0; k < a20::kScalarChannels.size(); ++k) {
    std::vector<double> values;
    for (const Matrix* m : train_node_feats)
      for (Eigen::Index r = 0; r < m->rows(); ++r) values.push_back((*m)(r, a20::kScalarChannels[k]));
    if (values.empty()) fail(ErrorCode::EmptyTrainSet, "no training atoms to fit the feature scaler");
    s.mean[k] = vpg::mean(values);
    double sd = population_std(values);
    s.scale[k] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void FeatureScaler::apply(Matrix& node_feats) const {
  for (std::size_t k = 0; k < a20::kScalarChannels.size(); ++k) {
    auto col = node_feats.col(a20::kScalarChannels[k]);
    col = (col.array() - mean[k]) / scale[k];
  }
}

nlohmann::json FeatureScaler::to_json() const {
  return {{"channels", a20::kScalarChannels}, {"mean", mean}, {"scale", scale}};
}

FeatureScaler FeatureScaler::from_json(const nlohmann::json& j) {
  FeatureScaler s;
  s.mean = j.at("mean").get<std::array<double, 3>>();
  s.scale = j.at("scale").get<std::array<double, 3>>();
  return s;
}

StandardizedTargets standardize_targets(std::span<const double> values, std::span<const Fold> folds) {
  if (values.size() != folds.size()) fail(ErrorCode::ShapeMismatch, "values and folds differ in length");
  std::vector<double> train;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (folds[i] == Fold::Train) train.push_back(values[i]);
  StandardizedTargets out;
  out.scaler = TargetScaler::fit_mean_std(train);
  out.values = out.scaler.transform(values);
  return out;
}

}  // namespace vpg

namespace vpg {

std::optional<Fold> FoldAssignment::find(const std::string& key) const {
  for (const auto& e : entries)
    if (e.key == key) return e.fold;
  return std::nullopt;
}

std::array<std::size_t, 3> FoldAssignment::counts() const {
  std::array<std::size_t, 3> c{0, 0, 0};
  for (const auto& e : entries) ++c[static_cast<std::size_t>(e.fold)];
  return c;
}

std::vector<std::string> FoldAssignment::keys_in(Fold f) const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.fold == f) out.push_back(e.key);
  return out;
}

}  // namespace vpg
