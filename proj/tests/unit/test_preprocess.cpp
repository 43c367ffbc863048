#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>

#include "doctest.h"
#include "vpg/csv.hpp"
#include "vpg/dataset.hpp"
#include "vpg/error.hpp"
#include "vpg/preprocess.hpp"
#include "vpg/scaffold.hpp"
#include "vpg/smiles.hpp"
#include "vpg/synthdata.hpp"
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

RawRecord vp_rec(const std::string& smi, double value, const std::string& unit, std::optional<double> T) {
  RawRecord r;
  r.smiles = smi;
  r.endpoint = Endpoint::VP;
  r.value = value;
  r.unit = unit;
  r.temperature_K = T;
  return r;
}

RawRecord op_rec(const std::string& smi, Endpoint ep, double value, const std::string& unit) {
  RawRecord r;
  r.smiles = smi;
  r.endpoint = ep;
  r.value = value;
  r.unit = unit;
  r.medium = ep == Endpoint::OA ? Medium::Air : Medium::Water;
  return r;
}

// Sorted-array linear-interpolation quantile, written independently of util.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  double pos = p * static_cast<double>(v.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

// ---------------------------------------------------------------- units

TEST_CASE("harmonize_vp: documented conversions") {
  CHECK(harmonize_vp(1.0, "mmHg") == doctest::Approx(std::log10(133.322)).epsilon(1e-14));
  CHECK(harmonize_vp(1.0, "mmHg") == doctest::Approx(2.1249).epsilon(1e-4));
  CHECK(harmonize_vp(1.0, "Pa") == 0.0);
  CHECK(harmonize_vp(1.0, "atm") == doctest::Approx(5.0057).epsilon(1e-4));
  CHECK(harmonize_vp(1.0, "kPa") == doctest::Approx(3.0));
  CHECK(harmonize_vp(1.0, "bar") == doctest::Approx(5.0));
  CHECK(harmonize_vp(1.0, "torr") == harmonize_vp(1.0, "mmHg"));
  CHECK(code_of([] { harmonize_vp(1.0, "psi"); }) == ErrorCode::UnknownUnit);
  CHECK(code_of([] { harmonize_vp(0.0, "Pa"); }) == ErrorCode::NonPositivePressure);
  CHECK(code_of([] { harmonize_vp(-3.0, "kPa"); }) == ErrorCode::NonPositivePressure);
}

TEST_CASE("harmonize_vp preserves ordering within a unit") {
  Rng rng(3);
  for (const char* u : {"Pa", "kPa", "mmHg", "atm", "bar"}) {
    std::vector<double> v;
    for (int i = 0; i < 50; ++i) v.push_back(std::pow(10.0, rng.uniform(-4, 6)));
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) CHECK(harmonize_vp(v[i - 1], u) <= harmonize_vp(v[i], u));
  }
}

TEST_CASE("to_kelvin") {
  CHECK(to_kelvin(25.0, "C") == doctest::Approx(298.15));
  CHECK(to_kelvin(300.0, "K") == 300.0);
  CHECK(to_kelvin(32.0, "F") == doctest::Approx(273.15));
}

TEST_CASE("harmonize_op: documented conversions") {
  CHECK(harmonize_op(1.0, "mg/m3", Medium::Air, std::nullopt) == 0.0);
  CHECK(harmonize_op(1.0, "mg·m⁻³", Medium::Air, std::nullopt) == 0.0);
  const double ppm = harmonize_op(1.0, "ppm", Medium::Air, 100.0);
  CHECK(ppm == doctest::Approx(std::log10(100.0 / 24.45)).epsilon(1e-14));
  CHECK(ppm == doctest::Approx(0.6117).epsilon(1e-4));
  CHECK(harmonize_op(1000.0, "ng/L", Medium::Water, std::nullopt) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(harmonize_op(1.0, "µg/L", Medium::Water, std::nullopt) == 0.0);
  CHECK(harmonize_op(1.0, "mg/L", Medium::Water, std::nullopt) == doctest::Approx(3.0));
  CHECK(harmonize_op(1000.0, "ppb", Medium::Air, 100.0) == doctest::Approx(ppm));
  CHECK(code_of([] { harmonize_op(1.0, "furlongs", Medium::Air, 1.0); }) == ErrorCode::UnknownUnit);
  CHECK(code_of([] { harmonize_op(1.0, "mg/m3", Medium::None, 1.0); }) == ErrorCode::MissingMedium);
  CHECK(code_of([] { harmonize_op(0.0, "mg/m3", Medium::Air, 1.0); }) == ErrorCode::NonPositiveConcentration);
  CHECK(std::string(op_basis_unit(Medium::Air)) == "mg/m3");
  CHECK(std::string(op_basis_unit(Medium::Water)) == "ug/L");
}

// ---------------------------------------------------------------- aggregation

TEST_CASE("aggregate_duplicates") {
  std::vector<double> one{3.5};
  auto a = aggregate_duplicates(one);
  CHECK(a.value == 3.5);
  CHECK(a.n == 1);
  CHECK(a.iqr == 0.0);

  std::vector<double> three{1, 2, 10};
  CHECK(aggregate_duplicates(three).value == 2.0);

  std::vector<double> four{0, 1, 2, 100};
  auto b = aggregate_duplicates(four);
  CHECK(b.value == 1.5);
  CHECK(b.n == 4);
  CHECK(b.iqr == doctest::Approx(oracle_quantile(four, 0.75) - oracle_quantile(four, 0.25)));
  CHECK(b.iqr == doctest::Approx(25.75));
}

// ---------------------------------------------------------------- winsorization

TEST_CASE("winsorize: bounds, clipping and counts") {
  Rng rng(11);
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(rng.uniform());
  auto w = winsorize(v, 0.025);
  CHECK(w.bounds.lo == doctest::Approx(oracle_quantile(v, 0.025)));
  CHECK(w.bounds.hi == doctest::Approx(oracle_quantile(v, 0.975)));
  std::size_t expect = 0;
  for (double x : v) expect += (x < w.bounds.lo || x > w.bounds.hi) ? 1 : 0;
  CHECK(w.n_clipped == expect);
  CHECK(w.n_clipped == 50);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > w.bounds.lo && v[i] < w.bounds.hi) CHECK(w.values[i] == v[i]);
    changed += w.values[i] != v[i] ? 1 : 0;
  }
  CHECK(changed == 50);
  const auto min_at = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  CHECK(w.values[min_at] == w.bounds.lo);
  CHECK(w.bounds.n_fit == 1000);
  auto rt = WinsorBounds::from_json(w.bounds.to_json());
  CHECK(rt.lo == w.bounds.lo);
  CHECK(rt.hi == w.bounds.hi);
}

TEST_CASE("winsorize: errors") {
  std::vector<double> small(30, 1.0);
  CHECK(code_of([&] { winsorize(small, 0.025); }) == ErrorCode::TooFewSamples);
  std::vector<double> v(100, 1.0);
  CHECK(code_of([&] { winsorize(v, 0.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { winsorize(v, 0.5); }) == ErrorCode::InvalidArgument);
}

// ---------------------------------------------------------------- robust scaling, weights

TEST_CASE("robust_scale examples") {
  std::vector<double> a{1, 2, 3};
  auto r = robust_scale(a);
  CHECK(r.scaler.center == 2.0);
  CHECK(r.scaler.scale == 1.0);
  CHECK(r.values == std::vector<double>{-1, 0, 1});
  CHECK_FALSE(r.scaler.floored);

  std::vector<double> c(5, 4.2);
  auto rc = robust_scale(c);
  CHECK(rc.scaler.scale == 1e-8);
  CHECK(rc.scaler.floored);
  for (double x : rc.values) CHECK(x == 0.0);

  std::vector<double> d{0, 0, 0, 10};
  auto rd = robust_scale(d);
  CHECK(rd.scaler.center == 0.0);
  CHECK(rd.scaler.floored);
  CHECK(rd.scaler.scale == 1e-8);
}

TEST_CASE("standardize round trip") {
  Rng rng(5);
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(rng.uniform(-3, 7));
  for (auto sc : {TargetScaler::fit_mean_std(v), TargetScaler::fit_median_mad(v)})
    for (double x : v) CHECK(std::abs(sc.inverse(sc.transform(x)) - x) <= 1e-10 * std::max(1.0, std::abs(x)));
}

TEST_CASE("uncertainty_weight") {
  CHECK(uncertainty_weight(0.0) == 1.0);
  CHECK(uncertainty_weight(0.1, 0.1) == 0.5);
  CHECK(uncertainty_weight(0.9, 0.1) == doctest::Approx(0.1).epsilon(1e-15));
  for (double s = 0.0; s < 5.0; s += 0.37) {
    double w = uncertainty_weight(s);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
  }
}

// ---------------------------------------------------------------- leakage guards

TEST_CASE("planted leak: fitting on non-train rows is rejected") {
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<Fold> f(10, Fold::Train);
  CHECK_NOTHROW(fit_scaler_on_train(v, f, TargetScaler::Kind::MeanStd));
  auto clean = fit_scaler_on_train(v, f, TargetScaler::Kind::MeanStd);
  f[7] = Fold::Test;
  CHECK(code_of([&] { fit_scaler_on_train(v, f, TargetScaler::Kind::MeanStd); }) == ErrorCode::LeakageDetected);
  CHECK(code_of([&] { winsorize_on_train(v, f, 0.1); }) == ErrorCode::LeakageDetected);
  // the statistics really would differ had the leaked row been accepted
  std::vector<double> leaked = v;
  leaked[7] = 1000.0;
  CHECK(TargetScaler::fit_mean_std(leaked).center != clean.center);
}

TEST_CASE("PreprocessManifest JSON round trip") {
  PreprocessManifest m;
  m.units_seen = {"Pa", "ppm"};
  m.target_scalers["vp"] = TargetScaler{TargetScaler::Kind::MeanStd, 1.25, 0.5, false};
  m.target_scalers["oa"] = TargetScaler{TargetScaler::Kind::MedianMad, -0.3, 1e-8, true};
  m.winsor["oa"] = WinsorBounds{0.025, -1.0, 2.0, 400};
  m.op_pooled = true;
  auto r = PreprocessManifest::from_json(m.to_json());
  CHECK(r.units_seen == m.units_seen);
  CHECK(r.target_scalers.at("vp").center == 1.25);
  CHECK(r.target_scalers.at("oa").floored);
  CHECK(r.winsor.at("oa").hi == 2.0);
  CHECK(r.op_pooled);
  CHECK(r.to_json() == m.to_json());
}

// ---------------------------------------------------------------- corpus

TEST_CASE("build_corpus: harmonizes, merges duplicates and keys molecules canonically") {
  std::vector<RawRecord> recs{
      vp_rec("CCO", 1.0, "kPa", 298.15),
      vp_rec("OCC", 10.0, "kPa", 298.15),  // same molecule and temperature
      vp_rec("CCO", 100.0, "Pa", 310.0),
      op_rec("CCO", Endpoint::OA, 1.0, "ppm"),
      op_rec("CCO", Endpoint::OA, 10.0, "mg/m3"),
      op_rec("c1ccccc1", Endpoint::OW, 500.0, "ng/L"),
  };
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].row = i + 1;
  Corpus c = build_corpus(recs);
  REQUIRE(c.molecules.size() == 2);
  const MoleculeRecord* eth = c.find(c.molecules[0].smiles == "c1ccccc1" ? c.molecules[1].key : c.molecules[0].key);
  REQUIRE(eth != nullptr);
  REQUIRE(eth->vp.size() == 2);
  CHECK(eth->vp[0].temperature_K == 298.15);
  CHECK(eth->vp[0].n == 2);
  CHECK(eth->vp[0].y == doctest::Approx(3.5));
  CHECK(eth->vp[1].y == doctest::Approx(2.0));
  REQUIRE(eth->oa);
  CHECK(eth->oa->n == 2);
  const double ppm = std::log10(eth->molar_mass / 24.45);
  CHECK(eth->oa->y == doctest::Approx((ppm + 1.0) / 2.0));
  CHECK_FALSE(eth->ow);
  CHECK(c.units_seen.count("ppm") == 1);
}

TEST_CASE("build_corpus: errors name the offending row") {
  std::vector<RawRecord> recs{vp_rec("CCO", 1.0, "Pa", std::nullopt)};
  recs[0].row = 7;
  try {
    build_corpus(recs);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingTemperature);
    CHECK(std::string(e.what()).find('7') != std::string::npos);
  }
  std::vector<RawRecord> bad{vp_rec("CCO", 1.0, "parsec", 300.0)};
  CHECK(code_of([&] { build_corpus(bad); }) == ErrorCode::UnknownUnit);
  std::vector<RawRecord> bad_smiles{vp_rec("C1CC", 1.0, "Pa", 300.0)};
  CHECK(code_of([&] { build_corpus(bad_smiles); }) == ErrorCode::UnbalancedRingClosure);
}

TEST_CASE("records CSV and corpus JSONL round trips") {
  auto syn = generate_synthetic(4, SynthConfig{.n_molecules = 60});
  auto csv = records_to_csv(syn.records);
  auto back = records_from_csv(parse_csv(csv));
  REQUIRE(back.size() == syn.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].smiles == syn.records[i].smiles);
    CHECK(back[i].value == syn.records[i].value);
    CHECK(back[i].unit == syn.records[i].unit);
    CHECK(back[i].temperature_K == syn.records[i].temperature_K);
    CHECK(back[i].medium == syn.records[i].medium);
  }
  Corpus c = build_corpus(back);
  Corpus r = corpus_from_jsonl(corpus_to_jsonl(c));
  CHECK(corpus_to_jsonl(r) == corpus_to_jsonl(c));
  REQUIRE(r.molecules.size() == c.molecules.size());
  for (std::size_t i = 0; i < r.molecules.size(); ++i) {
    CHECK(r.molecules[i].key == c.molecules[i].key);
    CHECK(r.molecules[i].graph.node_feats == c.molecules[i].graph.node_feats);
  }
  auto tmp = std::filesystem::temp_directory_path() / "vpg_test_store.jsonl";
  save_corpus(c, tmp);
  CHECK(corpus_to_jsonl(load_corpus(tmp)) == corpus_to_jsonl(c));
  std::filesystem::remove(tmp);
  CHECK(code_of([] { corpus_from_jsonl("{\"format\":\"other\"}\n"); }) == ErrorCode::FormatError);
}

// ---------------------------------------------------------------- prepare

namespace {

struct Fixture {
  Corpus corpus;
  FoldAssignment folds;
  Fixture(std::uint64_t seed = 9, int n = 150) {
    auto syn = generate_synthetic(seed, SynthConfig{.n_molecules = n});
    corpus = build_corpus(syn.records);
    folds = capacity_split(group_by_scaffold(corpus.scaffold_map()), {0.8, 0.1, 0.1}, seed).assignment;
  }
};

}  // namespace

TEST_CASE("prepare: scalers see train rows only") {
  Fixture fx;
  PrepareOptions po;
  po.fp_bits = 128;
  Dataset d = prepare(fx.corpus, fx.folds, po);

  std::vector<double> vp_train, t_train;
  for (const auto& m : fx.corpus.molecules)
    if (fx.folds.find(m.key) == Fold::Train)
      for (const auto& r : m.vp) {
        vp_train.push_back(r.y);
        t_train.push_back(r.temperature_K);
      }
  CHECK(d.vp_scaler.center == doctest::Approx(mean(vp_train)).epsilon(1e-14));
  CHECK(d.vp_scaler.scale == doctest::Approx(population_std(vp_train)).epsilon(1e-14));
  CHECK(d.t_scaler.center == doctest::Approx(mean(t_train)).epsilon(1e-14));

  // moving every val/test label leaves all fitted statistics untouched
  Corpus shifted = fx.corpus;
  for (auto& m : shifted.molecules) {
    if (fx.folds.find(m.key) == Fold::Train) continue;
    for (auto& r : m.vp) r.y += 100.0;
    if (m.oa) m.oa->y -= 50.0;
  }
  Dataset d2 = prepare(shifted, fx.folds, po);
  CHECK(d2.vp_scaler.center == d.vp_scaler.center);
  CHECK(d2.vp_scaler.scale == d.vp_scaler.scale);
  CHECK(d2.op_scalers[0]->center == d.op_scalers[0]->center);
  CHECK(d2.pna_delta == d.pna_delta);
  CHECK(d2.manifest.to_json() == d.manifest.to_json());
}

TEST_CASE("prepare: winsorization clips train labels only") {
  Fixture fx(9, 300);
  PrepareOptions po;
  po.fp_bits = 64;
  po.op_winsor_alpha = 0.05;
  Dataset d = prepare(fx.corpus, fx.folds, po);
  const auto& wb = d.manifest.winsor.at("oa");
  const auto& sc = *d.op_scalers[0];
  int clipped_train = 0, outside_eval = 0;
  for (const auto& s : d.samples) {
    if (!s.op_m[0]) continue;
    const double back = sc.inverse(s.op_std[0]);
    if (s.fold == Fold::Train) {
      CHECK(back >= wb.lo - 1e-12);
      CHECK(back <= wb.hi + 1e-12);
      clipped_train += back != s.op_raw[0] ? 1 : 0;
    } else {
      CHECK(back == doctest::Approx(s.op_raw[0]).epsilon(1e-12));
      outside_eval += (s.op_raw[0] < wb.lo || s.op_raw[0] > wb.hi) ? 1 : 0;
    }
  }
  CHECK(clipped_train > 0);
  MESSAGE("eval labels outside the train bounds: " << outside_eval);
}

TEST_CASE("prepare: missing assignment, empty train fold, pooled slot") {
  Fixture fx;
  FoldAssignment partial = fx.folds;
  partial.entries.pop_back();
  CHECK(code_of([&] { prepare(fx.corpus, partial); }) == ErrorCode::MissingKey);

  FoldAssignment no_train = fx.folds;
  for (auto& e : no_train.entries) e.fold = Fold::Val;
  CHECK(code_of([&] { prepare(fx.corpus, no_train); }) == ErrorCode::EmptyTrainSet);

  PrepareOptions po;
  po.fp_bits = 64;
  po.op_pooled = true;
  Dataset d = prepare(fx.corpus, fx.folds, po);
  CHECK(d.manifest.target_scalers.count("op") == 1);
  CHECK_FALSE(d.op_scalers[1].has_value());
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto& m = fx.corpus.molecules[i];
    CHECK(d.samples[i].op_m[1] == 0);
    CHECK(d.samples[i].op_m[0] == ((m.oa || m.ow) ? 1 : 0));
  }
}

TEST_CASE("make_batch: concatenation and offsets") {
  Fixture fx;
  PrepareOptions po;
  po.fp_bits = 64;
  Dataset d = prepare(fx.corpus, fx.folds, po);
  std::vector<int> idx{0, 3, 5, 8};
  GraphBatch b = make_batch(d, idx, true);
  CHECK(b.n_graphs == 4);
  std::size_t nodes = 0, edges = 0, vp_rows = 0;
  for (int i : idx) {
    nodes += static_cast<std::size_t>(d.samples[static_cast<std::size_t>(i)].x.rows());
    edges += d.samples[static_cast<std::size_t>(i)].edges.size();
    vp_rows += d.samples[static_cast<std::size_t>(i)].vp_std.size();
  }
  CHECK(static_cast<std::size_t>(b.x.rows()) == nodes);
  CHECK(b.src.size() == edges);
  CHECK(b.vp_rows() == vp_rows);
  CHECK(b.fp.rows() == 4);
  CHECK(b.fp.cols() == 64);
  // every edge stays inside its graph and in-degrees match the edge list
  std::vector<double> deg(nodes, 0.0);
  for (std::size_t k = 0; k < b.src.size(); ++k) {
    CHECK(b.node_graph[static_cast<std::size_t>(b.src[k])] == b.node_graph[static_cast<std::size_t>(b.dst[k])]);
    deg[static_cast<std::size_t>(b.dst[k])] += 1.0;
  }
  CHECK(deg == b.in_degree);
  CHECK(code_of([&] { make_batch(d, std::vector<int>{}); }) == ErrorCode::EmptyBatch);
}

// ---------------------------------------------------------------- synthetic generator

TEST_CASE("synthdata: determinism, parseability, coverage, diversity") {
  auto a = generate_synthetic(21, SynthConfig{.n_molecules = 200});
  auto b = generate_synthetic(21, SynthConfig{.n_molecules = 200});
  CHECK(records_to_csv(a.records) == records_to_csv(b.records));
  auto c = generate_synthetic(22, SynthConfig{.n_molecules = 200});
  CHECK(records_to_csv(a.records) != records_to_csv(c.records));

  std::set<std::string> keys;
  for (const auto& t : a.truth) {
    Molecule m;
    CHECK_NOTHROW(m = parse_smiles(t.smiles));
    keys.insert(m.canonical_key);
  }
  CHECK(keys.size() == 200);
  Corpus corpus = build_corpus(a.records);
  CHECK(corpus.molecules.size() == 200);
  CHECK(group_by_scaffold(corpus.scaffold_map()).size() >= 10);

  CHECK(code_of([] { generate_synthetic(1, SynthConfig{.n_molecules = 49}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("synthdata: OP coverage follows the mask rate") {
  // binomial(100, 0.56): +-10 is about 2 SD
  int inside = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = generate_synthetic(seed, SynthConfig{.n_molecules = 100});
    int n_op = 0;
    for (const auto& t : s.truth) n_op += (t.oa_label || t.ow_label) ? 1 : 0;
    inside += std::abs(n_op - 56) <= 10 ? 1 : 0;
  }
  CHECK(inside >= 17);
  auto s = generate_synthetic(1, SynthConfig{.n_molecules = 100});
  int n_op = 0;
  for (const auto& t : s.truth) n_op += (t.oa_label || t.ow_label) ? 1 : 0;
  CHECK(std::abs(n_op - 56) <= 10);
}

TEST_CASE("synthdata: planted functions are linear in the true statistics") {
  // noiseless VP targets against [1, heavy, donors, halogens, t, heavy*t]
  auto s = generate_synthetic(8, SynthConfig{.n_molecules = 300});
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (const auto& t : s.truth)
    for (double T : t.temperatures) {
      double tl = (T - 298.15) / 25.0;
      rows.push_back({1.0, double(t.stats.heavy), double(t.stats.donors), double(t.stats.halogens), tl,
                      t.stats.heavy * tl});
      y.push_back(planted_vp(t.stats, T));
    }
  Matrix X(static_cast<Eigen::Index>(rows.size()), 6);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < 6; ++j) X(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    Y(static_cast<Eigen::Index>(i)) = y[i];
  }
  Eigen::MatrixXd Xc = X;
  Eigen::VectorXd beta = Xc.colPivHouseholderQr().solve(Y);
  Eigen::VectorXd res = Y - Xc * beta;
  double ss_tot = (Y.array() - Y.mean()).square().sum();
  CHECK(1.0 - res.squaredNorm() / ss_tot > 0.99);

  // harmonizing the written records recovers noisy labels around the planted value
  SynthConfig quiet{.n_molecules = 80};
  quiet.sigma_vp = 0.0;
  quiet.sigma_op = 0.0;
  auto q = generate_synthetic(3, quiet);
  Corpus corpus = build_corpus(q.records);
  for (const auto& t : q.truth) {
    const MoleculeRecord* m = corpus.find(t.key);
    REQUIRE(m != nullptr);
    for (const auto& r : m->vp) CHECK(r.y == doctest::Approx(planted_vp(t.stats, r.temperature_K)).epsilon(1e-9));
    if (t.oa_label) CHECK(m->oa->y == doctest::Approx(planted_oa(t.stats)).epsilon(1e-9));
    if (t.ow_label) CHECK(m->ow->y == doctest::Approx(planted_ow(t.stats)).epsilon(1e-9));
  }
}

TEST_CASE("synthdata: corruption touches the written records, not the truth") {
  SynthConfig cfg{.n_molecules = 200};
  cfg.corrupt_op_rate = 0.2;
  cfg.duplicate_rate = 0.0;
  auto s = generate_synthetic(5, cfg);
  Corpus corpus = build_corpus(s.records);
  int corrupted = 0;
  for (const auto& t : s.truth) {
    const MoleculeRecord* m = corpus.find(t.key);
    if (!t.oa_label) continue;
    const double gap = std::abs(m->oa->y - *t.oa_label);
    if (t.oa_corrupted) {
      ++corrupted;
      CHECK(gap >= cfg.corrupt_lo - 1e-9);
      CHECK(gap <= cfg.corrupt_hi + 1e-9);
    } else {
      CHECK(gap < 1e-9);
    }
  }
  CHECK(corrupted > 0);
}
