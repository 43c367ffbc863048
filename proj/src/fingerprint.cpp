#include "vpg/fingerprint.hpp"

#include <algorithm>
#include <bit>

#include "vpg/csv.hpp"
#include "vpg/error.hpp"
#include "vpg/util.hpp"

namespace vpg {

namespace {
constexpr std::uint64_t kSeed = 0x5eed0ecf4a11ce55ULL;
}

Fingerprint::Fingerprint(int nbits_, int radius_)
    : nbits(nbits_), radius(radius_), words(static_cast<std::size_t>((nbits_ + 63) / 64), 0) {}

int Fingerprint::popcount() const {
  int c = 0;
  for (auto w : words) c += std::popcount(w);
  return c;
}

std::vector<int> Fingerprint::on_bits() const {
  std::vector<int> out;
  for (int i = 0; i < nbits; ++i)
    if (test(i)) out.push_back(i);
  return out;
}

Fingerprint ecfp(const Molecule& mol, int radius, int nbits) {
  if (nbits <= 0 || (nbits & (nbits - 1)) != 0) fail(ErrorCode::InvalidArgument, "nbits must be a power of two");
  if (radius < 0) fail(ErrorCode::InvalidArgument, "radius must be non-negative");
  Fingerprint fp(nbits, radius);
  const std::size_t n = mol.num_atoms();
  std::vector<std::uint64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = mol.atoms[i];
    std::uint64_t h = kSeed;
    for (std::int64_t v : {std::int64_t{a.atomic_number}, std::int64_t{a.degree}, std::int64_t{a.formal_charge},
                           std::int64_t{a.total_h()}, std::int64_t{a.in_ring}, std::int64_t{a.aromatic}})
      h = hash_combine(h, static_cast<std::uint64_t>(v));
    ids[i] = h;
    fp.set(static_cast<int>(h % static_cast<std::uint64_t>(nbits)));
  }
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> env;
      for (auto [nb, b] : mol.neighbors(static_cast<int>(i)))
        env.emplace_back(static_cast<std::uint64_t>(mol.bonds[static_cast<std::size_t>(b)].order), ids[static_cast<std::size_t>(nb)]);
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(static_cast<std::uint64_t>(r), ids[i]);
      for (auto [o, id] : env) h = hash_combine(hash_combine(h, o), id);
      next[i] = h;
      fp.set(static_cast<int>(h % static_cast<std::uint64_t>(nbits)));
    }
    ids = std::move(next);
  }
  return fp;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  if (a.nbits != b.nbits) fail(ErrorCode::WidthMismatch, "fingerprint widths differ");
  std::uint64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    inter += static_cast<std::uint64_t>(std::popcount(a.words[i] & b.words[i]));
    uni += static_cast<std::uint64_t>(std::popcount(a.words[i] | b.words[i]));
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double max_similarity_to_train(const Fingerprint& query, std::span<const Fingerprint> train) {
  if (train.empty()) fail(ErrorCode::EmptyTrainSet, "no training fingerprints");
  double best = 0.0;
  for (const auto& t : train) best = std::max(best, tanimoto(query, t));
  return best;
}

int similarity_bin(double sim) {
  if (sim < 0.3) return 0;
  if (sim < 0.5) return 1;
  if (sim < 0.7) return 2;
  return 3;
}

const char* similarity_bin_label(int bin) {
  static const char* labels[] = {"[0,0.3)", "[0.3,0.5)", "[0.5,0.7)", "[0.7,1.0]"};
  return labels[std::clamp(bin, 0, 3)];
}

SimilarityReport similarity_report(const FoldAssignment& folds, const std::map<std::string, Fingerprint>& fps) {
  std::vector<Fingerprint> train;
  for (const auto& e : folds.entries)
    if (e.fold == Fold::Train) {
      auto it = fps.find(e.key);
      if (it == fps.end()) fail(ErrorCode::MissingKey, "no fingerprint for '" + e.key + "'");
      train.push_back(it->second);
    }
  SimilarityReport report;
  std::map<Fold, std::vector<double>> sims;
  for (const auto& e : folds.entries) {
    if (e.fold == Fold::Train) continue;
    auto it = fps.find(e.key);
    if (it == fps.end()) fail(ErrorCode::MissingKey, "no fingerprint for '" + e.key + "'");
    double s = max_similarity_to_train(it->second, train);
    report.rows.push_back({e.key, e.fold, s, similarity_bin(s)});
    sims[e.fold].push_back(s);
  }
  for (auto& [fold, values] : sims) {
    FoldSimilarity fs;
    fs.n = values.size();
    fs.median = median(values);
    fs.iqr = quantile(values, 0.75) - quantile(values, 0.25);
    fs.p95 = quantile(values, 0.95);
    for (double v : values) ++fs.histogram[static_cast<std::size_t>(similarity_bin(v))];
    report.folds[fold] = fs;
  }
  return report;
}

nlohmann::json SimilarityReport::summary_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [fold, fs] : folds) {
    nlohmann::json bins = nlohmann::json::object();
    for (int b = 0; b < 4; ++b) bins[similarity_bin_label(b)] = fs.histogram[static_cast<std::size_t>(b)];
    j[to_string(fold)] = {{"n", fs.n}, {"median", fs.median}, {"iqr", fs.iqr}, {"p95", fs.p95}, {"bins", bins}};
  }
  return j;
}

std::string SimilarityReport::rows_csv() const {
  std::string out = csv_line({"molecule_key", "fold", "max_sim", "bin"});
  for (const auto& r : rows)
    out += csv_line({r.key, to_string(r.fold), format_double(r.max_sim), similarity_bin_label(r.bin)});
  return out;
}

}  // namespace vpg
