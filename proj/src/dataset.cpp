#include "vpg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "vpg/error.hpp"
#include "vpg/scaffold.hpp"
#include "vpg/smiles.hpp"
#include "vpg/util.hpp"

namespace vpg {

namespace {

constexpr const char* kStoreFormat = "vpgraph.molstore";
constexpr int kStoreVersion = 1;

std::optional<double> opt_double(const std::string& cell, const char* column, std::size_t row) {
  std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::FormatError, "row " + std::to_string(row) + ": column '" + column + "' is not a number: '" + t + "'");
  }
}

[[noreturn]] void rethrow_with_row(const Error& e, std::size_t row) {
  throw Error(e.code(), "row " + std::to_string(row) + ": " + e.what(), e.offset());
}

}  // namespace

// --- CSV ------------------------------------------------------------------------

std::vector<RawRecord> records_from_csv(const CsvTable& table) {
  const std::size_t c_smiles = table.require_column("smiles");
  const std::size_t c_endpoint = table.require_column("endpoint");
  const std::size_t c_value = table.require_column("value");
  const std::size_t c_unit = table.require_column("unit");
  auto c_t = table.column("temperature_K");
  auto c_medium = table.column("medium");
  auto c_n = table.column("n_reports");
  auto c_iqr = table.column("iqr");
  auto c_sigma = table.column("sigma");

  std::vector<RawRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    RawRecord rec;
    rec.row = i + 1;
    rec.smiles = trim(r[c_smiles]);
    try {
      rec.endpoint = parse_endpoint(r[c_endpoint]);
      if (c_medium) rec.medium = parse_medium(r[*c_medium]);
    } catch (const Error& e) {
      rethrow_with_row(e, rec.row);
    }
    auto v = opt_double(r[c_value], "value", rec.row);
    if (!v) fail(ErrorCode::FormatError, "row " + std::to_string(rec.row) + ": empty value");
    rec.value = *v;
    rec.unit = trim(r[c_unit]);
    if (c_t) rec.temperature_K = opt_double(r[*c_t], "temperature_K", rec.row);
    if (c_n) {
      if (auto n = opt_double(r[*c_n], "n_reports", rec.row)) rec.n_reports = static_cast<int>(*n);
    }
    if (c_iqr) rec.iqr = opt_double(r[*c_iqr], "iqr", rec.row);
    if (c_sigma) rec.sigma = opt_double(r[*c_sigma], "sigma", rec.row);
    // OA/OW imply their medium when the column is absent or empty
    if (rec.medium == Medium::None && rec.endpoint == Endpoint::OA) rec.medium = Medium::Air;
    if (rec.medium == Medium::None && rec.endpoint == Endpoint::OW) rec.medium = Medium::Water;
    out.push_back(std::move(rec));
  }
  return out;
}

std::string records_to_csv(const std::vector<RawRecord>& records) {
  std::string out = csv_line({"smiles", "temperature_K", "endpoint", "value", "unit", "medium", "n_reports", "iqr", "sigma"});
  for (const auto& r : records) {
    out += csv_line({r.smiles, r.temperature_K ? format_double(*r.temperature_K) : "", to_string(r.endpoint),
                     format_double(r.value), r.unit, r.medium == Medium::None ? "" : to_string(r.medium),
                     r.n_reports ? std::to_string(*r.n_reports) : "", r.iqr ? format_double(*r.iqr) : "",
                     r.sigma ? format_double(*r.sigma) : ""});
  }
  return out;
}

// --- corpus -----------------------------------------------------------------------

const MoleculeRecord* Corpus::find(const std::string& key) const {
  auto it = std::lower_bound(molecules.begin(), molecules.end(), key,
                             [](const MoleculeRecord& m, const std::string& k) { return m.key < k; });
  return it != molecules.end() && it->key == key ? &*it : nullptr;
}

std::vector<std::string> Corpus::keys() const {
  std::vector<std::string> k;
  for (const auto& m : molecules) k.push_back(m.key);
  return k;
}

std::map<std::string, std::string> Corpus::scaffold_map() const {
  std::map<std::string, std::string> s;
  for (const auto& m : molecules) s[m.key] = m.scaffold;
  return s;
}

Corpus build_corpus(const std::vector<RawRecord>& records) {
  struct Acc {
    std::string smiles;
    double molar_mass = 0.0;
    std::string scaffold;
    EncodedGraph graph;
    std::map<long long, std::vector<double>> vp;  // centi-kelvin -> log values
    std::map<long long, double> vp_t;
    std::array<std::vector<double>, 2> op;
    std::array<std::vector<double>, 2> sigma;
  };
  std::map<std::string, Acc> acc;
  std::map<std::string, std::string> key_of;  // input spelling -> key
  Corpus corpus;

  for (const auto& rec : records) {
    try {
      std::string key;
      auto known = key_of.find(rec.smiles);
      if (known != key_of.end()) {
        key = known->second;
      } else {
        Molecule mol = parse_smiles(rec.smiles);
        key = mol.canonical_key;
        key_of[rec.smiles] = key;
        if (!acc.count(key)) {
          Acc a;
          a.smiles = rec.smiles;
          a.molar_mass = mol.molar_mass();
          a.scaffold = murcko_scaffold_key(mol);
          a.graph = encode_molecule(mol);
          acc.emplace(key, std::move(a));
        }
      }
      Acc& a = acc.at(key);
      corpus.units_seen.insert(normalize_unit(rec.unit));
      if (rec.endpoint == Endpoint::VP) {
        if (!rec.temperature_K) fail(ErrorCode::MissingTemperature, "vapor pressure record without temperature");
        double t = *rec.temperature_K;
        if (!(t > 0.0)) fail(ErrorCode::InvalidArgument, "temperature must be positive Kelvin");
        double y = harmonize_vp(rec.value, rec.unit);
        long long bucket = std::llround(t * 100.0);
        a.vp[bucket].push_back(y);
        a.vp_t.emplace(bucket, t);
      } else {
        Medium m = rec.medium;
        if (m == Medium::None) fail(ErrorCode::MissingMedium, "odor threshold record without medium");
        if ((rec.endpoint == Endpoint::OA && m != Medium::Air) || (rec.endpoint == Endpoint::OW && m != Medium::Water))
          fail(ErrorCode::MissingMedium, std::string("endpoint ") + to_string(rec.endpoint) + " recorded with medium " +
                                             to_string(m));
        double y = harmonize_op(rec.value, rec.unit, m, a.molar_mass);
        std::size_t slot = m == Medium::Air ? 0 : 1;
        a.op[slot].push_back(y);
        if (rec.sigma) a.sigma[slot].push_back(*rec.sigma);
      }
    } catch (const Error& e) {
      rethrow_with_row(e, rec.row);
    }
  }

  for (auto& [key, a] : acc) {
    MoleculeRecord m;
    m.key = key;
    m.smiles = a.smiles;
    m.molar_mass = a.molar_mass;
    m.scaffold = a.scaffold;
    m.graph = std::move(a.graph);
    for (auto& [bucket, ys] : a.vp) {
      Aggregate agg = aggregate_duplicates(ys);
      m.vp.push_back({a.vp_t.at(bucket), agg.value, agg.n});
    }
    for (std::size_t slot = 0; slot < 2; ++slot) {
      if (a.op[slot].empty()) continue;
      Aggregate agg = aggregate_duplicates(a.op[slot]);
      OpLabel l{agg.value, agg.n, agg.iqr, std::nullopt, a.op[slot]};
      if (!a.sigma[slot].empty()) l.sigma = median(a.sigma[slot]);
      (slot == 0 ? m.oa : m.ow) = std::move(l);
    }
    corpus.molecules.push_back(std::move(m));
  }
  return corpus;
}

// --- JSONL store ------------------------------------------------------------------

namespace {

nlohmann::json rows_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.row(r).data(), m.row(r).data() + m.cols());
    rows.push_back(row);
  }
  return rows;
}

Matrix rows_matrix(const nlohmann::json& j, int width) {
  Matrix m(static_cast<Eigen::Index>(j.size()), width);
  for (std::size_t r = 0; r < j.size(); ++r) {
    auto row = j[r].get<std::vector<double>>();
    if (static_cast<int>(row.size()) != width) fail(ErrorCode::FormatError, "feature row has the wrong width");
    for (int c = 0; c < width; ++c) m(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

nlohmann::json op_json(const OpLabel& l) {
  nlohmann::json j = {{"y", l.y}, {"n", l.n}, {"iqr", l.iqr}, {"values", l.values}};
  if (l.sigma) j["sigma"] = *l.sigma;
  return j;
}

OpLabel op_from_json(const nlohmann::json& j) {
  OpLabel l;
  l.y = j.at("y").get<double>();
  l.n = j.at("n").get<int>();
  l.iqr = j.at("iqr").get<double>();
  l.values = j.at("values").get<std::vector<double>>();
  if (j.contains("sigma")) l.sigma = j.at("sigma").get<double>();
  return l;
}

}  // namespace

std::string corpus_to_jsonl(const Corpus& corpus) {
  nlohmann::json header = {{"format", kStoreFormat},
                           {"version", kStoreVersion},
                           {"n_molecules", corpus.molecules.size()},
                           {"atom_dim", kAtomDim},
                           {"bond_dim", kBondDim},
                           {"units_seen", corpus.units_seen}};
  std::string out = header.dump() + "\n";
  for (const auto& m : corpus.molecules) {
    nlohmann::json j;
    j["key"] = m.key;
    j["smiles"] = m.smiles;
    j["molar_mass"] = m.molar_mass;
    j["scaffold"] = m.scaffold;
    j["nodes"] = rows_json(m.graph.node_feats);
    j["edges"] = m.graph.edges;
    j["edge_feats"] = rows_json(m.graph.edge_feats);
    nlohmann::json vp = nlohmann::json::array();
    for (const auto& r : m.vp) vp.push_back({r.temperature_K, r.y, r.n});
    j["vp"] = vp;
    if (m.oa) j["oa"] = op_json(*m.oa);
    if (m.ow) j["ow"] = op_json(*m.ow);
    out += j.dump() + "\n";
  }
  return out;
}

Corpus corpus_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::FormatError, "empty molecule store");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("bad store header: ") + e.what());
  }
  if (header.value("format", "") != kStoreFormat) fail(ErrorCode::FormatError, "not a vpgraph molecule store");
  if (header.value("version", 0) != kStoreVersion)
    fail(ErrorCode::FormatError, "unsupported store version " + header.value("version", nlohmann::json()).dump());
  Corpus c;
  c.units_seen = header.at("units_seen").get<std::set<std::string>>();
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      MoleculeRecord m;
      m.key = j.at("key").get<std::string>();
      m.smiles = j.at("smiles").get<std::string>();
      m.molar_mass = j.at("molar_mass").get<double>();
      m.scaffold = j.at("scaffold").get<std::string>();
      m.graph.node_feats = rows_matrix(j.at("nodes"), kAtomDim);
      m.graph.edges = j.at("edges").get<std::vector<std::array<int, 2>>>();
      m.graph.edge_feats = rows_matrix(j.at("edge_feats"), kBondDim);
      for (const auto& r : j.at("vp")) m.vp.push_back({r[0].get<double>(), r[1].get<double>(), r[2].get<int>()});
      if (j.contains("oa")) m.oa = op_from_json(j["oa"]);
      if (j.contains("ow")) m.ow = op_from_json(j["ow"]);
      c.molecules.push_back(std::move(m));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::FormatError, "store line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (c.molecules.size() != header.at("n_molecules").get<std::size_t>())
    fail(ErrorCode::FormatError, "store is truncated");
  std::sort(c.molecules.begin(), c.molecules.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return c;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) { write_text_file(path, corpus_to_jsonl(corpus)); }

Corpus load_corpus(const std::filesystem::path& path) { return corpus_from_jsonl(read_text_file(path)); }

// --- fold-aware preparation ---------------------------------------------------------

std::vector<int> Dataset::indices(Fold f) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i].fold == f) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<MolGraph> Dataset::molgraphs(std::size_t sample) const {
  const Sample& s = samples.at(sample);
  MolGraph base;
  base.key = s.key;
  base.node_feats = s.x;
  base.edge_index = s.edges;
  base.edge_feats = s.e;
  base.y_oa = s.op_std[0];
  base.m_oa = s.op_m[0];
  base.y_ow = s.op_std[1];
  base.m_ow = s.op_m[1];
  std::vector<MolGraph> out;
  if (s.vp_std.empty()) {
    out.push_back(base);
    return out;
  }
  for (std::size_t r = 0; r < s.vp_std.size(); ++r) {
    MolGraph g = base;
    g.t_std = s.t_std[r];
    g.y_vp = s.vp_std[r];
    g.m_vp = 1;
    out.push_back(std::move(g));
  }
  return out;
}

Dataset prepare(const Corpus& corpus, const FoldAssignment& folds, const PrepareOptions& opts) {
  Dataset d;
  d.op_pooled = opts.op_pooled;
  d.manifest.units_seen = corpus.units_seen;
  d.manifest.op_pooled = opts.op_pooled;
  d.manifest.uncertainty_alpha = opts.uncertainty_alpha;

  std::map<std::string, Fold> fold_of;
  for (const auto& e : folds.entries) fold_of.emplace(e.key, e.fold);

  // raw samples
  std::array<std::optional<double>, 2> no_sigma;
  std::vector<std::array<std::optional<double>, 2>> sigmas;
  for (const auto& m : corpus.molecules) {
    auto it = fold_of.find(m.key);
    if (it == fold_of.end()) fail(ErrorCode::MissingKey, "molecule '" + m.key + "' has no fold assignment");
    Sample s;
    s.key = m.key;
    s.fold = it->second;
    s.x = m.graph.node_feats;
    s.edges = m.graph.edges;
    s.e = m.graph.edge_feats;
    for (const auto& r : m.vp) {
      s.t_raw.push_back(r.temperature_K);
      s.vp_raw.push_back(r.y);
    }
    auto sig = no_sigma;
    if (opts.op_pooled) {
      std::vector<double> all;
      std::vector<double> sg;
      for (const auto* l : {&m.oa, &m.ow})
        if (*l) {
          all.insert(all.end(), (*l)->values.begin(), (*l)->values.end());
          if ((*l)->sigma) sg.push_back(*(*l)->sigma);
        }
      if (!all.empty()) {
        s.op_m[0] = 1;
        s.op_raw[0] = median(all);
        if (!sg.empty()) sig[0] = median(sg);
      }
    } else {
      if (m.oa) {
        s.op_m[0] = 1;
        s.op_raw[0] = m.oa->y;
        sig[0] = m.oa->sigma;
      }
      if (m.ow) {
        s.op_m[1] = 1;
        s.op_raw[1] = m.ow->y;
        sig[1] = m.ow->sigma;
      }
    }
    s.fp = ecfp(parse_smiles(m.key), 2, opts.fp_bits);
    sigmas.push_back(sig);
    d.samples.push_back(std::move(s));
  }

  // node features and PNA degree constant: train atoms only
  std::vector<const Matrix*> train_nodes;
  double log_deg_sum = 0.0;
  std::size_t n_train_atoms = 0;
  for (const auto& s : d.samples) {
    if (s.fold != Fold::Train) continue;
    train_nodes.push_back(&s.x);
    std::vector<int> deg(static_cast<std::size_t>(s.x.rows()), 0);
    for (const auto& e : s.edges) ++deg[static_cast<std::size_t>(e[1])];
    for (int v : deg) log_deg_sum += std::log(v + 1.0);
    n_train_atoms += deg.size();
  }
  if (train_nodes.empty()) fail(ErrorCode::EmptyTrainSet, "the train fold is empty");
  d.features = FeatureScaler::fit(train_nodes);
  d.pna_delta = log_deg_sum / static_cast<double>(n_train_atoms);
  for (auto& s : d.samples) d.features.apply(s.x);

  // temperature and VP
  std::vector<double> t_train, vp_train;
  for (const auto& s : d.samples)
    if (s.fold == Fold::Train) {
      t_train.insert(t_train.end(), s.t_raw.begin(), s.t_raw.end());
      vp_train.insert(vp_train.end(), s.vp_raw.begin(), s.vp_raw.end());
    }
  if (!vp_train.empty()) {
    d.t_scaler.center = mean(t_train);
    double sd = population_std(t_train);
    d.t_scaler.scale = sd >= 1e-8 ? sd : 1.0;  // single-temperature corpora: centre only
    std::vector<double> fit_values = vp_train;
    if (opts.vp_winsor_alpha) {
      auto w = winsorize(vp_train, *opts.vp_winsor_alpha);
      d.manifest.winsor["vp"] = w.bounds;
      fit_values = w.values;
    }
    d.vp_scaler = TargetScaler::fit_mean_std(fit_values);
    d.manifest.target_scalers["t"] = d.t_scaler;
    d.manifest.target_scalers["vp"] = d.vp_scaler;
    for (auto& s : d.samples) {
      for (std::size_t r = 0; r < s.vp_raw.size(); ++r) {
        double y = s.vp_raw[r];
        if (opts.vp_winsor_alpha && s.fold == Fold::Train) y = d.manifest.winsor["vp"].apply(y);
        s.vp_std.push_back(d.vp_scaler.transform(y));
        s.t_std.push_back(d.t_scaler.transform(s.t_raw[r]));
      }
    }
  } else {
    for (auto& s : d.samples) {
      s.vp_std.assign(s.vp_raw.size(), 0.0);
      s.t_std.assign(s.t_raw.size(), 0.0);
    }
  }

  // OP slots
  const char* slot_names[2] = {opts.op_pooled ? "op" : "oa", "ow"};
  for (std::size_t slot = 0; slot < 2; ++slot) {
    std::vector<double> train;
    for (const auto& s : d.samples)
      if (s.fold == Fold::Train && s.op_m[slot]) train.push_back(s.op_raw[slot]);
    if (train.empty()) continue;
    std::optional<WinsorBounds> wb;
    std::vector<double> fit_values = train;
    if (opts.op_winsor_alpha) {
      auto w = winsorize(train, *opts.op_winsor_alpha);
      wb = w.bounds;
      d.manifest.winsor[slot_names[slot]] = w.bounds;
      fit_values = w.values;
    }
    TargetScaler sc = opts.op_scaler == TargetScaler::Kind::MeanStd ? TargetScaler::fit_mean_std(fit_values)
                                                                    : TargetScaler::fit_median_mad(fit_values);
    d.op_scalers[slot] = sc;
    d.manifest.target_scalers[slot_names[slot]] = sc;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
      Sample& s = d.samples[i];
      if (!s.op_m[slot]) continue;
      double y = s.op_raw[slot];
      if (wb && s.fold == Fold::Train) y = wb->apply(y);
      s.op_std[slot] = sc.transform(y);
      if (opts.uncertainty_weights && sigmas[i][slot])
        s.op_w[slot] = uncertainty_weight(*sigmas[i][slot], opts.uncertainty_alpha);
    }
  }
  // a slot without train labels cannot be fitted or scored
  for (std::size_t slot = 0; slot < 2; ++slot)
    if (!d.op_scalers[slot])
      for (auto& s : d.samples) s.op_m[slot] = 0;
  return d;
}

// --- batching ----------------------------------------------------------------------

bool GraphBatch::has_op(int slot) const {
  for (double m : op_m[static_cast<std::size_t>(slot)])
    if (m > 0) return true;
  return false;
}

GraphBatch make_batch(const Dataset& data, std::span<const int> sample_indices, bool with_fingerprints) {
  if (sample_indices.empty()) fail(ErrorCode::EmptyBatch, "batch without molecules");
  GraphBatch b;
  Eigen::Index n_nodes = 0, n_edges = 0;
  for (int i : sample_indices) {
    const Sample& s = data.samples.at(static_cast<std::size_t>(i));
    n_nodes += s.x.rows();
    n_edges += s.e.rows();
  }
  b.x.resize(n_nodes, kAtomDim);
  b.e.resize(n_edges, kBondDim);
  b.n_graphs = static_cast<int>(sample_indices.size());
  b.in_degree.assign(static_cast<std::size_t>(n_nodes), 0.0);
  int nbits = with_fingerprints ? data.samples.at(static_cast<std::size_t>(sample_indices[0])).fp.nbits : 0;
  if (with_fingerprints) b.fp = Matrix::Zero(b.n_graphs, nbits);

  Eigen::Index node0 = 0, edge0 = 0;
  for (int g = 0; g < b.n_graphs; ++g) {
    const Sample& s = data.samples[static_cast<std::size_t>(sample_indices[static_cast<std::size_t>(g)])];
    b.sample_index.push_back(sample_indices[static_cast<std::size_t>(g)]);
    b.x.middleRows(node0, s.x.rows()) = s.x;
    if (s.e.rows() > 0) b.e.middleRows(edge0, s.e.rows()) = s.e;
    for (Eigen::Index v = 0; v < s.x.rows(); ++v) b.node_graph.push_back(g);
    for (const auto& e : s.edges) {
      b.src.push_back(static_cast<int>(node0) + e[0]);
      b.dst.push_back(static_cast<int>(node0) + e[1]);
      b.in_degree[static_cast<std::size_t>(node0 + e[1])] += 1.0;
    }
    for (std::size_t r = 0; r < s.vp_std.size(); ++r) {
      b.vp_graph.push_back(g);
      b.vp_t.push_back(s.t_std[r]);
      b.vp_y.push_back(s.vp_std[r]);
    }
    for (std::size_t slot = 0; slot < 2; ++slot) {
      b.op_y[slot].push_back(s.op_std[slot]);
      b.op_m[slot].push_back(s.op_m[slot]);
      b.op_w[slot].push_back(s.op_w[slot]);
    }
    if (with_fingerprints)
      for (int bit : s.fp.on_bits()) b.fp(g, bit) = 1.0;
    node0 += s.x.rows();
    edge0 += s.e.rows();
  }
  return b;
}

}  // namespace vpg
