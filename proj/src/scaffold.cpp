#include "vpg/scaffold.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "vpg/csv.hpp"
#include "vpg/error.hpp"
#include "vpg/smiles.hpp"
#include "vpg/util.hpp"

namespace vpg {

std::optional<Molecule> murcko_scaffold(const Molecule& mol) {
  const std::size_t n = mol.num_atoms();
  bool any_ring = std::any_of(mol.atoms.begin(), mol.atoms.end(), [](const Atom& a) { return a.in_ring; });
  if (!any_ring) return std::nullopt;

  std::vector<bool> keep(n, true);
  std::vector<int> deg(n);
  for (std::size_t i = 0; i < n; ++i) deg[i] = mol.atoms[i].degree;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep[i] || mol.atoms[i].in_ring || deg[i] > 1) continue;
      keep[i] = false;
      changed = true;
      for (auto [nb, b] : mol.neighbors(static_cast<int>(i)))
        if (keep[static_cast<std::size_t>(nb)]) --deg[static_cast<std::size_t>(nb)];
    }
  }
  std::vector<bool> framework = keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (!framework[i]) continue;
    for (auto [nb, b] : mol.neighbors(static_cast<int>(i)))
      if (!framework[static_cast<std::size_t>(nb)] && mol.bonds[static_cast<std::size_t>(b)].order == BondOrder::Double)
        keep[static_cast<std::size_t>(nb)] = true;
  }

  Molecule out;
  std::vector<int> remap(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) continue;
    remap[i] = static_cast<int>(out.atoms.size());
    Atom a = mol.atoms[i];
    int lost = 0;
    for (auto [nb, b] : mol.neighbors(static_cast<int>(i)))
      if (!keep[static_cast<std::size_t>(nb)]) lost += valence_contribution(mol.bonds[static_cast<std::size_t>(b)].order);
    a.implicit_h = a.total_h() + lost;
    a.explicit_h.reset();
    a.chiral_center = false;
    out.atoms.push_back(std::move(a));
  }
  for (const Bond& b : mol.bonds) {
    int u = remap[static_cast<std::size_t>(b.begin)], v = remap[static_cast<std::size_t>(b.end)];
    if (u < 0 || v < 0) continue;
    Bond nb = b;
    nb.begin = u;
    nb.end = v;
    nb.stereo = BondStereo::None;
    nb.stereo_atoms = {-1, -1};
    out.bonds.push_back(nb);
  }
  refresh_derived(out);
  return out;
}

std::string murcko_scaffold_key(const Molecule& mol) {
  auto s = murcko_scaffold(mol);
  return s ? s->canonical_key : kAcyclicScaffold;
}

std::vector<ScaffoldGroup> group_by_scaffold(const std::map<std::string, std::string>& scaffold_of) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [key, scaf] : scaffold_of) groups[scaf].push_back(key);
  std::vector<ScaffoldGroup> out;
  for (auto& [scaf, members] : groups) out.push_back({scaf, std::move(members)});
  return out;
}

SplitResult capacity_split(const std::vector<ScaffoldGroup>& groups, std::array<double, 3> ratio, std::uint64_t seed) {
  double rsum = ratio[0] + ratio[1] + ratio[2];
  if (!(rsum > 0) || ratio[0] < 0 || ratio[1] < 0 || ratio[2] < 0)
    fail(ErrorCode::InvalidArgument, "split ratio must be non-negative with a positive sum");
  for (double& r : ratio) r /= rsum;

  std::size_t total = 0;
  for (const auto& g : groups) total += g.members.size();

  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto jitter = [&](std::size_t i) { return mix64(seed ^ fnv1a64(groups[i].key)); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (groups[a].members.size() != groups[b].members.size()) return groups[a].members.size() > groups[b].members.size();
    std::uint64_t ja = jitter(a), jb = jitter(b);
    if (ja != jb) return ja < jb;
    return groups[a].key < groups[b].key;
  });

  SplitResult result;
  result.assignment.ratio = ratio;
  result.assignment.seed = seed;
  std::array<double, 3> target{ratio[0] * static_cast<double>(total), ratio[1] * static_cast<double>(total),
                               ratio[2] * static_cast<double>(total)};
  std::array<double, 3> count{0.0, 0.0, 0.0};
  for (std::size_t gi : order) {
    int best = 0;
    for (int f = 1; f < 3; ++f)
      if (target[static_cast<std::size_t>(f)] - count[static_cast<std::size_t>(f)] >
          target[static_cast<std::size_t>(best)] - count[static_cast<std::size_t>(best)])
        best = f;
    count[static_cast<std::size_t>(best)] += static_cast<double>(groups[gi].members.size());
    for (const auto& key : groups[gi].members) result.assignment.entries.push_back({key, static_cast<Fold>(best)});
  }
  if (groups.size() == 1)
    result.warnings.push_back("all molecules share one scaffold group; val and test are empty");
  else if (count[1] == 0 || count[2] == 0)
    result.warnings.push_back("a validation or test fold is empty");
  std::sort(result.assignment.entries.begin(), result.assignment.entries.end(),
            [](const FoldEntry& a, const FoldEntry& b) { return a.key < b.key; });
  return result;
}

nlohmann::json SplitDiagnostics::to_json() const {
  return {{"identity_overlap", identity_overlap},
          {"scaffold_overlap", scaffold_overlap},
          {"val_scaffold_seen_fraction", val_scaffold_seen_fraction},
          {"test_scaffold_seen_fraction", test_scaffold_seen_fraction},
          {"counts", {{"train", counts[0]}, {"val", counts[1]}, {"test", counts[2]}}},
          {"max_group_size", max_group_size}};
}

SplitDiagnostics diagnose_split(const FoldAssignment& folds, const std::map<std::string, std::string>& scaffold_of) {
  SplitDiagnostics d;
  d.counts = folds.counts();
  std::map<std::string, std::set<Fold>> key_folds;
  for (const auto& e : folds.entries) key_folds[e.key].insert(e.fold);
  for (const auto& [key, fs] : key_folds)
    if (fs.size() > 1 && fs.count(Fold::Train)) ++d.identity_overlap;

  auto scaffold = [&](const std::string& key) -> const std::string& {
    auto it = scaffold_of.find(key);
    if (it == scaffold_of.end()) fail(ErrorCode::MissingKey, "no scaffold for '" + key + "'");
    return it->second;
  };
  std::map<Fold, std::set<std::string>> scafs;
  std::map<std::string, std::size_t> group_size;
  for (const auto& e : folds.entries) {
    scafs[e.fold].insert(scaffold(e.key));
    ++group_size[scaffold(e.key)];
  }
  for (const auto& [s, c] : group_size) d.max_group_size = std::max(d.max_group_size, c);
  const auto& train = scafs[Fold::Train];
  for (Fold f : {Fold::Val, Fold::Test}) {
    std::size_t seen = 0;
    for (const auto& s : scafs[f])
      if (train.count(s)) ++seen;
    d.scaffold_overlap += seen;
    double frac = scafs[f].empty() ? 0.0 : static_cast<double>(seen) / static_cast<double>(scafs[f].size());
    (f == Fold::Val ? d.val_scaffold_seen_fraction : d.test_scaffold_seen_fraction) = frac;
  }
  return d;
}

SplitDiagnostics verify_no_leakage(const FoldAssignment& folds, const std::map<std::string, std::string>& scaffold_of) {
  auto d = diagnose_split(folds, scaffold_of);
  if (d.identity_overlap > 0)
    fail(ErrorCode::LeakageDetected, std::to_string(d.identity_overlap) + " molecule(s) appear in train and in val/test");
  if (d.scaffold_overlap > 0)
    fail(ErrorCode::LeakageDetected, std::to_string(d.scaffold_overlap) + " val/test scaffold group(s) also appear in train");
  return d;
}

namespace {

std::string split_body(const FoldAssignment& folds) {
  std::string body = csv_line({"molecule_key", "fold"});
  for (const auto& e : folds.entries) body += csv_line({e.key, to_string(e.fold)});
  return body;
}

}  // namespace

std::string serialize_split(const FoldAssignment& folds) {
  std::string body = split_body(folds);
  std::string out = "# vpgraph split v1 seed=" + std::to_string(folds.seed) + " ratio=" + format_double(folds.ratio[0]) +
                    "," + format_double(folds.ratio[1]) + "," + format_double(folds.ratio[2]) + "\n";
  out += "# checksum=fnv1a64:" + hex64(fnv1a64(body)) + "\n";
  return out + body;
}

FoldAssignment parse_split(const std::string& text) {
  CsvTable table = parse_csv(text);
  FoldAssignment folds;
  std::optional<std::string> checksum;
  for (const auto& c : table.comments) {
    auto pos = c.find("checksum=fnv1a64:");
    if (pos != std::string::npos) checksum = trim(c.substr(pos + 17));
    auto sp = c.find("seed=");
    if (sp != std::string::npos) folds.seed = std::stoull(c.substr(sp + 5));
    auto rp = c.find("ratio=");
    if (rp != std::string::npos) {
      auto parts = split(trim(c.substr(rp + 6)), ',');
      if (parts.size() == 3)
        for (std::size_t i = 0; i < 3; ++i) folds.ratio[i] = std::stod(parts[i]);
    }
  }
  if (!checksum) fail(ErrorCode::ChecksumMismatch, "split file has no checksum line");
  auto kc = table.require_column("molecule_key");
  auto fc = table.require_column("fold");
  for (const auto& row : table.rows) folds.entries.push_back({row[kc], parse_fold(row[fc])});
  if (hex64(fnv1a64(split_body(folds))) != *checksum)
    fail(ErrorCode::ChecksumMismatch, "split file content does not match its checksum");
  return folds;
}

void freeze_split(const FoldAssignment& folds, const std::filesystem::path& path) {
  write_text_file(path, serialize_split(folds));
}

FoldAssignment load_split(const std::filesystem::path& path, const std::vector<std::string>& corpus_keys) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::MissingSplit, "split file '" + path.string() + "' not found");
  FoldAssignment folds = parse_split(read_text_file(path));
  if (!corpus_keys.empty()) {
    std::set<std::string> have;
    for (const auto& e : folds.entries) have.insert(e.key);
    for (const auto& k : corpus_keys)
      if (!have.count(k)) fail(ErrorCode::MissingKey, "molecule '" + k + "' has no fold in the split file");
  }
  return folds;
}

}  // namespace vpg
