#pragma once

// Random small graph batches for layer-level tests.

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>
#include <vector>

#include "vpg/dataset.hpp"
#include "vpg/features.hpp"
#include "vpg/util.hpp"

namespace vpg::testing {

struct RandomGraph {
  int n = 0;
  std::vector<std::pair<int, int>> bonds;  // undirected
};

/// Connected graph: a random tree plus a few extra bonds.
inline RandomGraph random_graph(Rng& rng, int min_nodes, int max_nodes, int extra_bonds = 1) {
  RandomGraph g;
  g.n = min_nodes + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_nodes - min_nodes + 1)));
  std::set<std::pair<int, int>> seen;
  for (int v = 1; v < g.n; ++v) {
    int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(v)));
    g.bonds.emplace_back(u, v);
    seen.insert({u, v});
  }
  for (int k = 0; k < extra_bonds && g.n > 2; ++k) {
    int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.n)));
    int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(g.n)));
    if (a == b) continue;
    auto key = std::minmax(a, b);
    if (seen.insert({key.first, key.second}).second) g.bonds.emplace_back(key.first, key.second);
  }
  return g;
}

/// Batch with random node/edge features, one or two VP rows per graph at
/// random standardized temperatures and full OP masks.
inline GraphBatch random_batch(Rng& rng, const std::vector<RandomGraph>& graphs, int fp_bits = 0) {
  GraphBatch b;
  b.n_graphs = static_cast<int>(graphs.size());
  int total_nodes = 0;
  for (const auto& g : graphs) total_nodes += g.n;
  b.x = Matrix(total_nodes, kAtomDim);
  for (Eigen::Index i = 0; i < b.x.size(); ++i) b.x.data()[i] = rng.uniform(-1.0, 1.0);
  std::vector<std::array<double, kBondDim>> edge_rows;
  int offset = 0;
  for (int gi = 0; gi < b.n_graphs; ++gi) {
    const auto& g = graphs[static_cast<std::size_t>(gi)];
    for (int v = 0; v < g.n; ++v) b.node_graph.push_back(gi);
    for (const auto& [u, v] : g.bonds) {
      std::array<double, kBondDim> f{};
      for (double& x : f) x = rng.uniform(-1.0, 1.0);
      b.src.push_back(offset + u);
      b.dst.push_back(offset + v);
      edge_rows.push_back(f);
      b.src.push_back(offset + v);
      b.dst.push_back(offset + u);
      edge_rows.push_back(f);
    }
    const int rows = 1 + static_cast<int>(rng.below(2));
    for (int r = 0; r < rows; ++r) {
      b.vp_graph.push_back(gi);
      b.vp_t.push_back(rng.uniform(-1.5, 1.5));
      b.vp_y.push_back(rng.normal());
    }
    b.sample_index.push_back(gi);
    offset += g.n;
  }
  b.e = Matrix(static_cast<Eigen::Index>(edge_rows.size()), kBondDim);
  for (std::size_t r = 0; r < edge_rows.size(); ++r)
    for (int c = 0; c < kBondDim; ++c) b.e(static_cast<Eigen::Index>(r), c) = edge_rows[r][static_cast<std::size_t>(c)];
  b.in_degree.assign(static_cast<std::size_t>(total_nodes), 0.0);
  for (int d : b.dst) b.in_degree[static_cast<std::size_t>(d)] += 1.0;
  for (int s = 0; s < 2; ++s) {
    for (int gi = 0; gi < b.n_graphs; ++gi) {
      b.op_y[static_cast<std::size_t>(s)].push_back(rng.normal());
      b.op_m[static_cast<std::size_t>(s)].push_back(1.0);
      b.op_w[static_cast<std::size_t>(s)].push_back(1.0);
    }
  }
  if (fp_bits > 0) {
    b.fp = Matrix::Zero(b.n_graphs, fp_bits);
    for (Eigen::Index i = 0; i < b.fp.size(); ++i) b.fp.data()[i] = rng.bernoulli(0.1) ? 1.0 : 0.0;
  }
  return b;
}

/// Mean log(d+1) over the batch nodes (stand-in for the training-split constant).
inline double batch_delta(const GraphBatch& b) {
  double s = 0.0;
  for (double d : b.in_degree) s += std::log(d + 1.0);
  return s / static_cast<double>(b.in_degree.size());
}

}  // namespace vpg::testing
