#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "vpg/csv.hpp"
#include "vpg/error.hpp"
#include "vpg/features.hpp"
#include "vpg/fingerprint.hpp"
#include "vpg/scaffold.hpp"
#include "vpg/scaler.hpp"
#include "vpg/smiles.hpp"
#include "vpg/util.hpp"

using namespace vpg;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

int atom_with(const Molecule& m, int z) {
  for (std::size_t i = 0; i < m.atoms.size(); ++i)
    if (m.atoms[i].atomic_number == z) return static_cast<int>(i);
  return -1;
}

}  // namespace

// ---------------------------------------------------------------- target scaling

TEST_CASE("target scaler mean/std path") {
  std::vector<double> y{0.0, 2.0, 1.0};
  std::vector<Fold> f{Fold::Train, Fold::Train, Fold::Test};
  auto st = standardize_targets(y, f);
  CHECK(st.scaler.center == 1.0);
  CHECK(st.scaler.scale == 1.0);
  CHECK(st.values == std::vector<double>{-1.0, 1.0, 0.0});
  std::vector<double> flat{3.0, 3.0, 9.0};
  CHECK(code_of([&] { standardize_targets(flat, f); }) == ErrorCode::DegenerateScale);

  TargetScaler s = TargetScaler::fit_mean_std(std::vector<double>{1.3, -2.7, 0.01, 5.5});
  TargetScaler back = TargetScaler::from_json(nlohmann::json::parse(s.to_json().dump()));
  CHECK(back.center == s.center);
  CHECK(back.scale == s.scale);
  for (double v : {-3.1, 0.0, 1e3}) CHECK(std::abs(s.inverse(s.transform(v)) - v) <= 1e-10 * std::max(1.0, std::abs(v)));
}

TEST_CASE("temperature standardization centering") {
  TargetScaler t;
  t.center = 298.15;
  t.scale = 25.0;
  CHECK(t.transform(298.15) == 0.0);
}

// ---------------------------------------------------------------- A20 / E17

TEST_CASE("encode_atom hand-encoded examples") {
  Molecule benz = parse_smiles("c1ccccc1");
  auto f = encode_atom(benz, 0);
  std::array<double, kAtomDim> expect{};
  expect[0] = 1;   // C
  expect[10] = 2;  // degree
  expect[11] = 0;
  expect[13] = 1;  // sp2
  expect[16] = 1;  // aromatic
  expect[17] = 1;  // ring
  expect[18] = 1;  // one H
  CHECK(f == expect);

  Molecule ccl = parse_smiles("CCl");
  auto g = encode_atom(ccl, atom_with(ccl, 17));
  CHECK(g[a20::kElement + 4] == 1.0);
  CHECK(g[a20::kDegree] == 1.0);
  CHECK(g[a20::kTotalH] == 0.0);

  Molecule se = parse_smiles("C[Se]C");
  CHECK(encode_atom(se, atom_with(se, 34))[a20::kElement + 9] == 1.0);

  Molecule charged = parse_smiles("[O-3]");
  CHECK(encode_atom(charged, 0)[a20::kCharge] == -2.0);
  Molecule neo = parse_smiles("CC(C)(C)C");
  CHECK(encode_atom(neo, 1)[a20::kDegree] == 4.0);
  Molecule six = parse_smiles("[S](F)(F)(F)(F)(F)F");
  CHECK(encode_atom(six, 0)[a20::kDegree] == 5.0);  // clipped
}

TEST_CASE("encode_bond hand-encoded examples") {
  Molecule benz = parse_smiles("c1ccccc1");
  auto f = encode_bond(benz.bonds[0]);
  std::array<double, kBondDim> expect{};
  expect[3] = 1;   // aromatic
  expect[4] = 1;   // conjugated
  expect[5] = 1;   // ring
  expect[6] = 1;   // stereo NONE
  expect[15] = 1;  // 6-ring
  CHECK(f == expect);

  Molecule but = parse_smiles("C/C=C/C");
  const Bond* dbl = nullptr;
  for (const auto& b : but.bonds)
    if (b.order == BondOrder::Double) dbl = &b;
  REQUIRE(dbl);
  auto g = encode_bond(*dbl);
  CHECK(g[e17::kOrder + 1] == 1.0);
  CHECK(g[e17::kStereo + static_cast<int>(BondStereo::Trans)] == 1.0);

  Molecule eth = parse_smiles("CC");
  auto h = encode_bond(eth.bonds[0]);
  std::array<double, kBondDim> single{};
  single[0] = 1;
  single[6] = 1;
  CHECK(h == single);

  Molecule big = parse_smiles("C1CCCCCCCC1");
  CHECK(encode_bond(big.bonds[0])[e17::kRingSize + 4] == 1.0);
}

TEST_CASE("encoded graph invariants over the corpus") {
  std::ifstream in(std::string(VPG_TEST_DATA) + "/smiles_corpus.txt");
  std::string line;
  Rng rng(9);
  int n = 0;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    Molecule m = parse_smiles(line);
    EncodedGraph g = encode_molecule(m);
    CHECK(g.node_feats.cols() == kAtomDim);
    CHECK(g.edge_feats.cols() == kBondDim);
    CHECK(g.edges.size() % 2 == 0);
    CHECK(static_cast<Eigen::Index>(g.edges.size()) == g.edge_feats.rows());
    for (std::size_t e = 0; e < g.edges.size(); e += 2) {
      CHECK(g.edges[e][0] == g.edges[e + 1][1]);
      CHECK(g.edges[e][1] == g.edges[e + 1][0]);
      CHECK(g.edge_feats.row(static_cast<Eigen::Index>(e)) == g.edge_feats.row(static_cast<Eigen::Index>(e + 1)));
    }
    for (Eigen::Index r = 0; r < g.node_feats.rows(); ++r) {
      CHECK(g.node_feats.row(r).segment(0, 10).sum() == 1.0);
      CHECK(g.node_feats.row(r).segment(12, 4).sum() == 1.0);
    }
    for (Eigen::Index r = 0; r < g.edge_feats.rows(); ++r) {
      CHECK(g.edge_feats.row(r).segment(0, 4).sum() == 1.0);
      CHECK(g.edge_feats.row(r).segment(6, 6).sum() == 1.0);
    }
    // a different spelling of the same molecule encodes identically
    Molecule again = parse_smiles(random_smiles(m, rng));
    EncodedGraph g2 = encode_molecule(again);
    CHECK(g2.node_feats == g.node_feats);
    CHECK(g2.edges == g.edges);
    CHECK(g2.edge_feats == g.edge_feats);
    ++n;
  }
  CHECK(n >= 150);
}

TEST_CASE("feature scaler is fitted on train rows only") {
  std::vector<Matrix> train, all;
  for (const char* s : {"CCO", "c1ccccc1", "CC(C)C"}) train.push_back(encode_molecule(parse_smiles(s)).node_feats);
  all = train;
  all.push_back(encode_molecule(parse_smiles("C(Cl)(Cl)(Cl)Cl")).node_feats);
  std::vector<const Matrix*> tp, ap;
  for (auto& m : train) tp.push_back(&m);
  for (auto& m : all) ap.push_back(&m);
  FeatureScaler fs = FeatureScaler::fit(tp), leak = FeatureScaler::fit(ap);
  CHECK(fs.mean != leak.mean);

  // oracle: degree column over train atoms
  std::vector<double> deg;
  for (auto& m : train)
    for (Eigen::Index r = 0; r < m.rows(); ++r) deg.push_back(m(r, a20::kDegree));
  CHECK(fs.mean[0] == doctest::Approx(mean(deg)).epsilon(1e-15));
  CHECK(fs.scale[0] == doctest::Approx(population_std(deg)).epsilon(1e-15));

  FeatureScaler back = FeatureScaler::from_json(nlohmann::json::parse(fs.to_json().dump()));
  CHECK(back.mean == fs.mean);
  CHECK(back.scale == fs.scale);

  Matrix x = train[0];
  fs.apply(x);
  CHECK(x.col(0) == train[0].col(0));  // one-hot untouched

  Matrix zero_charge = encode_molecule(parse_smiles("CC")).node_feats;
  const Matrix* zp = &zero_charge;
  FeatureScaler z = FeatureScaler::fit(std::span<const Matrix* const>(&zp, 1));
  CHECK(z.scale[1] == 1.0);
}

// ---------------------------------------------------------------- fingerprints

TEST_CASE("ecfp and tanimoto") {
  Fingerprint a = ecfp(parse_smiles("CCO")), b = ecfp(parse_smiles("OCC"));
  CHECK(a == b);
  CHECK(a.nbits == 2048);
  CHECK(ecfp(parse_smiles("C")) != ecfp(parse_smiles("CC")));
  Fingerprint benz = ecfp(parse_smiles("c1ccccc1"));
  CHECK(benz.popcount() <= 3);
  CHECK(benz.popcount() >= 1);
  CHECK(code_of([] { ecfp(parse_smiles("C"), 2, 1000); }) == ErrorCode::InvalidArgument);

  Fingerprint x(64, 2), y(64, 2), e1(64, 2), e2(64, 2);
  for (int i : {1, 2, 3}) x.set(i);
  for (int i : {2, 3, 4}) y.set(i);
  CHECK(tanimoto(x, y) == 0.5);
  CHECK(tanimoto(y, x) == 0.5);
  CHECK(tanimoto(x, x) == 1.0);
  CHECK(tanimoto(e1, e2) == 1.0);
  Fingerprint z(64, 2);
  z.set(40);
  CHECK(tanimoto(x, z) == 0.0);
  CHECK(code_of([&] { tanimoto(x, Fingerprint(128, 2)); }) == ErrorCode::WidthMismatch);

  std::vector<Fingerprint> train{y, z, x};
  CHECK(max_similarity_to_train(x, train) == 1.0);
  CHECK(max_similarity_to_train(x, std::vector<Fingerprint>{y}) == tanimoto(x, y));
  CHECK(code_of([&] { max_similarity_to_train(x, {}); }) == ErrorCode::EmptyTrainSet);

  CHECK(similarity_bin(0.3) == 1);
  CHECK(similarity_bin(0.2999) == 0);
  CHECK(similarity_bin(1.0) == 3);
  CHECK(similarity_bin(0.7) == 3);
}

TEST_CASE("similarity report") {
  std::vector<std::string> smi{"CCO", "CCCO", "c1ccccc1", "Cc1ccccc1", "CC(=O)O", "CCN", "c1ccncc1", "CCCCCl"};
  std::map<std::string, Fingerprint> fps;
  FoldAssignment fa;
  for (std::size_t i = 0; i < smi.size(); ++i) {
    Molecule m = parse_smiles(smi[i]);
    fps[m.canonical_key] = ecfp(m);
    fa.entries.push_back({m.canonical_key, i < 4 ? Fold::Train : (i < 6 ? Fold::Val : Fold::Test)});
  }
  auto rep = similarity_report(fa, fps);
  // brute-force pairwise oracle
  for (const auto& row : rep.rows) {
    double best = 0.0;
    for (const auto& e : fa.entries)
      if (e.fold == Fold::Train) {
        const auto& a = fps.at(row.key).words;
        const auto& b = fps.at(e.key).words;
        int inter = 0, uni = 0;
        for (std::size_t w = 0; w < a.size(); ++w) {
          inter += std::popcount(a[w] & b[w]);
          uni += std::popcount(a[w] | b[w]);
        }
        best = std::max(best, uni == 0 ? 1.0 : static_cast<double>(inter) / uni);
      }
    CHECK(row.max_sim == best);
  }
  CHECK(rep.folds.at(Fold::Val).n == 2);
  std::size_t hist = 0;
  for (auto c : rep.folds.at(Fold::Test).histogram) hist += c;
  CHECK(hist == 2);
  CHECK(rep.rows_csv().rfind("molecule_key,fold,max_sim,bin\n", 0) == 0);

  // val = train
  FoldAssignment same;
  for (const auto& e : fa.entries)
    if (e.fold == Fold::Train) {
      same.entries.push_back({e.key, Fold::Train});
      same.entries.push_back({e.key + "", Fold::Val});
    }
  auto r2 = similarity_report(same, fps);
  CHECK(r2.folds.at(Fold::Val).median == 1.0);
  CHECK(r2.folds.at(Fold::Val).iqr == 0.0);
}

TEST_CASE("median of two max-similarities") {
  std::vector<double> v{0.2, 0.6};
  CHECK(median(v) == doctest::Approx(0.4));
}

// ---------------------------------------------------------------- scaffolds & splits

TEST_CASE("murcko scaffolds") {
  std::string benz = parse_smiles("c1ccccc1").canonical_key;
  CHECK(murcko_scaffold_key(parse_smiles("c1ccccc1")) == benz);
  CHECK(murcko_scaffold_key(parse_smiles("Cc1ccccc1")) == benz);
  CHECK(murcko_scaffold_key(parse_smiles("CCCCCC")) == kAcyclicScaffold);
  CHECK(murcko_scaffold_key(parse_smiles("OCCc1ccc(CC)cc1")) == benz);
  // linker kept, carbonyl on the ring kept
  CHECK(murcko_scaffold_key(parse_smiles("c1ccccc1CCc1ccccc1C")) == parse_smiles("c1ccccc1CCc1ccccc1").canonical_key);
  CHECK(murcko_scaffold_key(parse_smiles("CC1CCC(=O)CC1")) == parse_smiles("O=C1CCCCC1").canonical_key);
  CHECK(murcko_scaffold_key(parse_smiles("C/C=C/c1ccccc1")) == benz);
  CHECK(murcko_scaffold_key(parse_smiles("Cn1cccc1")) == parse_smiles("c1cc[nH]c1").canonical_key);
}

TEST_CASE("capacity split hand traces") {
  std::vector<ScaffoldGroup> singles;
  for (int i = 0; i < 10; ++i) singles.push_back({"s" + std::to_string(i), {"m" + std::to_string(i)}});
  auto r = capacity_split(singles, {0.8, 0.1, 0.1}, 1);
  CHECK(r.assignment.counts() == std::array<std::size_t, 3>{8, 1, 1});

  std::vector<ScaffoldGroup> two{{"big", {}}, {"small", {"x"}}};
  for (int i = 0; i < 9; ++i) two[0].members.push_back("b" + std::to_string(i));
  auto r2 = capacity_split(two, {0.8, 0.1, 0.1}, 7);
  auto c2 = r2.assignment.counts();
  CHECK(c2[0] == 9);
  CHECK(c2[1] + c2[2] == 1);
  CHECK(r2.assignment.find("x") == Fold::Val);

  std::vector<ScaffoldGroup> one{{"only", {"a", "b", "c"}}};
  auto r3 = capacity_split(one, {0.8, 0.1, 0.1}, 0);
  CHECK(r3.assignment.counts() == std::array<std::size_t, 3>{3, 0, 0});
  CHECK(!r3.warnings.empty());
}

TEST_CASE("split properties, leakage and persistence") {
  // random group sizes
  Rng rng(42);
  std::vector<ScaffoldGroup> groups;
  std::map<std::string, std::string> scaf;
  std::size_t n = 0, max_group = 0;
  for (int g = 0; g < 60; ++g) {
    ScaffoldGroup grp{"g" + std::to_string(g), {}};
    std::size_t size = 1 + rng.below(g < 5 ? 20 : 6);
    for (std::size_t k = 0; k < size; ++k) {
      grp.members.push_back(grp.key + "_" + std::to_string(k));
      scaf[grp.members.back()] = grp.key;
    }
    n += size;
    max_group = std::max(max_group, size);
    groups.push_back(grp);
  }
  auto res = capacity_split(groups, {0.8, 0.1, 0.1}, 3);
  auto again = capacity_split(groups, {0.8, 0.1, 0.1}, 3);
  CHECK(serialize_split(res.assignment) == serialize_split(again.assignment));
  auto diag = verify_no_leakage(res.assignment, scaf);
  CHECK(diag.identity_overlap == 0);
  CHECK(diag.scaffold_overlap == 0);
  auto c = res.assignment.counts();
  CHECK(c[0] + c[1] + c[2] == n);
  std::array<double, 3> target{0.8, 0.1, 0.1};
  for (int f = 0; f < 3; ++f)
    CHECK(std::abs(static_cast<double>(c[static_cast<std::size_t>(f)]) / n - target[static_cast<std::size_t>(f)]) <=
          static_cast<double>(max_group) / n);

  // planted faults
  FoldAssignment dup = res.assignment;
  dup.entries.push_back({res.assignment.keys_in(Fold::Train).front(), Fold::Test});
  CHECK(code_of([&] { verify_no_leakage(dup, scaf); }) == ErrorCode::LeakageDetected);
  FoldAssignment moved = res.assignment;
  for (auto& e : moved.entries)
    if (e.fold == Fold::Train) {
      e.fold = Fold::Val;
      break;
    }
  CHECK(diagnose_split(moved, scaf).scaffold_overlap > 0);

  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "vpg_split_test";
  fs::create_directories(dir);
  fs::path p = dir / "split.csv";
  freeze_split(res.assignment, p);
  FoldAssignment loaded = load_split(p);
  CHECK(serialize_split(loaded) == serialize_split(res.assignment));
  CHECK(loaded.seed == res.assignment.seed);

  std::vector<std::string> keys;
  for (auto& [k, v] : scaf) keys.push_back(k);
  CHECK_NOTHROW(load_split(p, keys));
  keys.push_back("not_there");
  CHECK(code_of([&] { load_split(p, keys); }) == ErrorCode::MissingKey);

  std::string text = read_text_file(p);
  auto pos = text.find(",train");
  text.replace(pos, 6, ",test");
  write_text_file(p, text);
  CHECK(code_of([&] { load_split(p); }) == ErrorCode::ChecksumMismatch);
  CHECK(code_of([&] { load_split(dir / "absent.csv"); }) == ErrorCode::MissingSplit);
  fs::remove_all(dir);
}
