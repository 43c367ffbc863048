#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "vpg/error.hpp"
#include "vpg/smiles.hpp"
#include "vpg/util.hpp"

using namespace vpg;

namespace {

ErrorCode code_of(const std::string& smi) {
  try {
    parse_smiles(smi);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error for " << smi);
  return ErrorCode::InvalidArgument;
}

std::size_t offset_of(const std::string& smi) {
  try {
    parse_smiles(smi);
  } catch (const Error& e) {
    REQUIRE(e.offset().has_value());
    return *e.offset();
  }
  FAIL("expected an error for " << smi);
  return 0;
}

// Brute-force ring oracle: enumerate every simple cycle as a bond bitmask,
// keep the ones not expressible as an XOR of strictly shorter cycles.
std::vector<std::uint64_t> relevant_cycles_bruteforce(const Molecule& mol) {
  const int n = static_cast<int>(mol.num_atoms());
  std::set<std::uint64_t> cycles;
  std::vector<int> path;
  std::vector<bool> on(static_cast<std::size_t>(n), false);
  std::uint64_t mask = 0;
  std::function<void(int, int)> dfs = [&](int start, int a) {
    for (auto [nb, b] : mol.neighbors(a)) {
      if (mask >> b & 1) continue;
      if (nb == start && path.size() >= 3) {
        cycles.insert(mask | (1ULL << b));
        continue;
      }
      if (nb < start || on[static_cast<std::size_t>(nb)]) continue;
      on[static_cast<std::size_t>(nb)] = true;
      path.push_back(nb);
      mask |= 1ULL << b;
      dfs(start, nb);
      mask &= ~(1ULL << b);
      path.pop_back();
      on[static_cast<std::size_t>(nb)] = false;
    }
  };
  for (int s = 0; s < n; ++s) {
    on[static_cast<std::size_t>(s)] = true;
    path = {s};
    dfs(s, s);
    on[static_cast<std::size_t>(s)] = false;
  }
  std::vector<std::uint64_t> all(cycles.begin(), cycles.end());
  std::vector<std::uint64_t> relevant;
  for (std::uint64_t c : all) {
    int len = __builtin_popcountll(c);
    std::vector<std::uint64_t> shorter;
    for (std::uint64_t d : all)
      if (__builtin_popcountll(d) < len) shorter.push_back(d);
    bool spanned = false;
    for (std::uint64_t subset = 1; subset < (1ULL << shorter.size()) && !spanned; ++subset) {
      std::uint64_t x = 0;
      for (std::size_t i = 0; i < shorter.size(); ++i)
        if (subset >> i & 1) x ^= shorter[i];
      spanned = x == c;
    }
    if (!spanned) relevant.push_back(c);
  }
  return relevant;
}

}  // namespace

TEST_CASE("methane") {
  auto m = parse_smiles("C");
  REQUIRE(m.num_atoms() == 1);
  CHECK(m.atoms[0].element == ElementClass::C);
  CHECK(m.atoms[0].implicit_h == 4);
  CHECK(m.atoms[0].degree == 0);
  CHECK(infer_hybridization(m, 0) == Hybridization::SP3);
}

TEST_CASE("benzene") {
  auto m = parse_smiles("c1ccccc1");
  REQUIRE(m.num_atoms() == 6);
  REQUIRE(m.num_bonds() == 6);
  for (const auto& a : m.atoms) {
    CHECK(a.aromatic);
    CHECK(a.in_ring);
    CHECK(a.ring_sizes == std::set<int>{6});
    CHECK(a.total_h() == 1);
  }
  for (const auto& b : m.bonds) {
    CHECK(b.order == BondOrder::Aromatic);
    CHECK(b.conjugated);
  }
  CHECK(infer_hybridization(m, 0) == Hybridization::SP2);
}

TEST_CASE("acetic acid") {
  auto m = parse_smiles("CC(=O)O");
  REQUIRE(m.num_atoms() == 4);
  // hand-drawn structure: C0-C1, C1=O2, C1-O3
  CHECK(m.bonds[static_cast<std::size_t>(m.bond_between(1, 2))].order == BondOrder::Double);
  CHECK(m.bonds[static_cast<std::size_t>(m.bond_between(1, 3))].order == BondOrder::Single);
  CHECK(m.atoms[1].degree == 3);
  CHECK(m.atoms[0].implicit_h == 3);
  CHECK(m.atoms[2].implicit_h == 0);
  CHECK(m.atoms[3].implicit_h == 1);
  CHECK(m.bonds[static_cast<std::size_t>(m.bond_between(1, 3))].conjugated);
}

TEST_CASE("ring perception") {
  SUBCASE("ethane") {
    auto m = parse_smiles("CC");
    for (const auto& a : m.atoms) CHECK(a.ring_sizes.empty());
    for (const auto& b : m.bonds) CHECK(!b.in_ring);
  }
  SUBCASE("cyclopropane") {
    auto m = parse_smiles("C1CC1");
    for (const auto& a : m.atoms) CHECK(a.ring_sizes == std::set<int>{3});
    for (const auto& b : m.bonds) CHECK(b.ring_sizes == std::set<int>{3});
  }
  SUBCASE("indane shared bond") {
    auto m = parse_smiles("c1ccc2c(c1)CCC2");
    int shared = m.bond_between(3, 4);
    REQUIRE(shared >= 0);
    CHECK(m.bonds[static_cast<std::size_t>(shared)].ring_sizes == std::set<int>{5, 6});
  }
  SUBCASE("brute-force oracle on fused and bridged systems") {
    for (const char* smi : {"c1ccc2c(c1)CCC2", "c1ccc2ccccc2c1", "C1CC2CCC1C2", "C12C3C4C1C5C2C3C45",
                            "C1CCC2(CC1)CCCC2", "c1ccc2c(c1)ccc1ccccc12", "C1CC2CC1CC2"}) {
      CAPTURE(smi);
      auto m = parse_smiles(smi);
      auto oracle = relevant_cycles_bruteforce(m);
      std::map<int, std::set<int>> bond_sizes;
      for (std::uint64_t c : oracle)
        for (int b = 0; b < 64; ++b)
          if (c >> b & 1) bond_sizes[b].insert(__builtin_popcountll(c));
      for (std::size_t b = 0; b < m.num_bonds(); ++b) {
        CHECK(m.bonds[b].ring_sizes == bond_sizes[static_cast<int>(b)]);
        CHECK(m.bonds[b].in_ring == !bond_sizes[static_cast<int>(b)].empty());
      }
      for (const auto& a : m.atoms) CHECK(a.in_ring == !a.ring_sizes.empty());
    }
  }
}

TEST_CASE("canonical key") {
  CHECK(parse_smiles("OCC").canonical_key == parse_smiles("CCO").canonical_key);
  CHECK(parse_smiles("C1=CC=CC=C1").canonical_key == parse_smiles("c1ccccc1").canonical_key);
  CHECK(parse_smiles("CCO").canonical_key != parse_smiles("CCN").canonical_key);
  CHECK(parse_smiles("[H]C([H])([H])[H]").canonical_key == parse_smiles("C").canonical_key);
  CHECK(parse_smiles("C1=CC=CN1").canonical_key == parse_smiles("c1cc[nH]c1").canonical_key);
  CHECK(parse_smiles("Cc1ccccc1").canonical_key == parse_smiles("c1ccc(C)cc1").canonical_key);
  CHECK(parse_smiles("C/C=C/C").canonical_key == parse_smiles("C\\C=C\\C").canonical_key);
  CHECK(parse_smiles("C/C=C/C").canonical_key != parse_smiles("C/C=C\\C").canonical_key);
  CHECK(parse_smiles("C(/C)=C/C").canonical_key == parse_smiles("C/C=C\\C").canonical_key);
  CHECK(parse_smiles("CC(=O)O.[Na+]").canonical_key == parse_smiles("CC(=O)O").canonical_key);
}

TEST_CASE("hybridization") {
  auto acetylene = parse_smiles("C#C");
  CHECK(infer_hybridization(acetylene, 0) == Hybridization::SP);
  auto allene = parse_smiles("C=C=C");
  CHECK(infer_hybridization(allene, 1) == Hybridization::SP);
  auto ethene = parse_smiles("C=C");
  CHECK(infer_hybridization(ethene, 0) == Hybridization::SP2);
  auto ccl = parse_smiles("CCl");
  CHECK(infer_hybridization(ccl, 1) == Hybridization::Other);
}

TEST_CASE("stereo markers") {
  auto trans = parse_smiles("C/C=C/C");
  CHECK(trans.bonds[1].stereo == BondStereo::Trans);
  auto cis = parse_smiles("C/C=C\\C");
  CHECK(cis.bonds[1].stereo == BondStereo::Cis);
  auto half = parse_smiles("C/C=CC");
  CHECK(half.bonds[1].stereo == BondStereo::Any);
  auto symmetric = parse_smiles("C/C(C)=C/C");
  CHECK(symmetric.bonds[2].stereo == BondStereo::None);
  auto chiral = parse_smiles("C[C@H](N)O");
  CHECK(chiral.atoms[1].chiral_center);
}

TEST_CASE("charges and brackets") {
  auto m = parse_smiles("C[N+](C)(C)C");
  CHECK(m.atoms[1].formal_charge == 1);
  CHECK(m.atoms[1].total_h() == 0);
  auto acetate = parse_smiles("CC(=O)[O-]");
  CHECK(acetate.atoms[3].formal_charge == -1);
  auto se = parse_smiles("C[Se]C");
  CHECK(se.atoms[1].element == ElementClass::Other);
  auto iso = parse_smiles("[13CH4]");
  CHECK(iso.atoms[0].isotope == 13);
  CHECK(iso.atoms[0].total_h() == 4);
  auto big = parse_smiles("C%10CC%10");
  CHECK(big.atoms[0].ring_sizes == std::set<int>{3});
}

TEST_CASE("parse errors carry offsets") {
  CHECK(code_of("") == ErrorCode::EmptyInput);
  CHECK(code_of("C1CC") == ErrorCode::UnbalancedRingClosure);
  CHECK(offset_of("C1CC") == 1);
  CHECK(code_of("CC(C") == ErrorCode::UnbalancedBranch);
  CHECK(offset_of("CC(C") == 2);
  CHECK(code_of("CC)C") == ErrorCode::UnbalancedBranch);
  CHECK(offset_of("CC)C") == 2);
  CHECK(code_of("CXC") == ErrorCode::UnknownAtomToken);
  CHECK(offset_of("CXC") == 1);
  CHECK(code_of("C[Xx]") == ErrorCode::UnknownAtomToken);
  CHECK(offset_of("C[Xx]") == 2);
  CHECK(code_of("CC(C)(C)(C)C") == ErrorCode::ValenceViolation);
  CHECK(offset_of("CC(C)(C)(C)C") == 1);
  CHECK(code_of("C=") == ErrorCode::UnknownAtomToken);
  CHECK(offset_of("C=") == 2);
  CHECK(code_of("C.C") == ErrorCode::AmbiguousComponents);
  CHECK(code_of("C11") == ErrorCode::UnbalancedRingClosure);
}

TEST_CASE("invariants on the corpus") {
  std::ifstream in(std::string(VPG_TEST_DATA) + "/smiles_corpus.txt");
  REQUIRE(in.good());
  std::string line;
  Rng rng(7);
  int count = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    CAPTURE(line);
    auto m = parse_smiles(line);
    ++count;
    std::set<std::pair<int, int>> pairs;
    for (const auto& b : m.bonds) {
      CHECK(b.begin != b.end);
      CHECK(pairs.insert({std::min(b.begin, b.end), std::max(b.begin, b.end)}).second);
      if (b.order == BondOrder::Aromatic) {
        CHECK(m.atoms[static_cast<std::size_t>(b.begin)].aromatic);
        CHECK(m.atoms[static_cast<std::size_t>(b.end)].aromatic);
      }
    }
    for (std::size_t a = 0; a < m.num_atoms(); ++a) {
      CHECK(m.atoms[a].degree == static_cast<int>(m.neighbors(static_cast<int>(a)).size()));
      CHECK(m.atoms[a].in_ring == !m.atoms[a].ring_sizes.empty());
      CHECK(m.atoms[a].implicit_h >= 0);
    }
    // round trip through the canonical string and through input-order output
    CHECK(parse_smiles(m.canonical_key).canonical_key == m.canonical_key);
    CHECK(parse_smiles(to_smiles(m)).canonical_key == m.canonical_key);
    for (int r = 0; r < 3; ++r) {
      std::string rs = random_smiles(m, rng);
      CAPTURE(rs);
      CHECK(parse_smiles(rs).canonical_key == m.canonical_key);
    }
  }
  CHECK(count >= 150);
}
