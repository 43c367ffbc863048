#include "vpg/smiles.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>

#include "vpg/error.hpp"
#include "vpg/util.hpp"

namespace vpg {

namespace {

[[noreturn]] void parse_fail(ErrorCode code, std::size_t offset, const std::string& msg) {
  throw Error(code, msg, offset);
}

// Allowed valences by atomic number. Charged atoms use the table entry of the
// isoelectronic neutral element (Z - charge).
const std::vector<int>* valence_table(int z) {
  static const std::map<int, std::vector<int>> table = {
      {2, {0}},        {5, {3}},        {6, {4}},           {7, {3, 5}},    {8, {2}},
      {9, {1}},        {10, {0}},       {14, {4}},          {15, {3, 5}},   {16, {2, 4, 6}},
      {17, {1, 3, 5, 7}}, {18, {0}},    {33, {3, 5}},       {34, {2, 4, 6}},
      {35, {1, 3, 5, 7}}, {36, {0}},    {52, {2, 4, 6}},    {53, {1, 3, 5, 7}},
      {54, {0}},
  };
  auto it = table.find(z);
  return it == table.end() ? nullptr : &it->second;
}

bool is_organic_subset(int z) {
  switch (z) {
    case 5: case 6: case 7: case 8: case 9: case 15: case 16: case 17: case 35: case 53:
      return true;
    default:
      return false;
  }
}

bool aromatic_organic(int z) {
  return z == 5 || z == 6 || z == 7 || z == 8 || z == 15 || z == 16;
}

// Lowercase spellings accepted (and written) for aromatic bracket atoms.
bool aromatic_bracket_symbol(int z) {
  return aromatic_organic(z) || z == 33 || z == 34 || z == 52;
}

// Hydrogens an organic-subset atom receives from the valence model, or
// nullopt when the bond sum exceeds every allowed valence.
std::optional<int> default_implicit_h(int z, bool aromatic, int used) {
  const auto* vals = valence_table(z);
  if (!vals) return 0;
  if (aromatic) {
    if (used > vals->back()) return std::nullopt;
    return std::max(0, vals->front() - 1 - used);
  }
  for (int v : *vals)
    if (v >= used) return v - used;
  return std::nullopt;
}

struct PendingBond {
  char symbol = 0;  // 0 = implicit
  std::size_t offset = 0;
};

struct RawBond {
  int a = 0, b = 0;  // a = written "from", b = written "to"
  char symbol = 0;
};

struct RingOpen {
  int atom = -1;
  char symbol = 0;
  std::size_t offset = 0;
};

bool is_direction(char c) { return c == '/' || c == '\\'; }

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  void run() {
    if (s_.empty()) parse_fail(ErrorCode::EmptyInput, 0, "empty SMILES");
    std::size_t n = s_.size();
    while (pos_ < n) {
      unsigned char c = static_cast<unsigned char>(s_[pos_]);
      if (c >= 0x80) parse_fail(ErrorCode::UnknownAtomToken, pos_, "non-ASCII byte");
      if (c == '(') {
        if (prev_ < 0) parse_fail(ErrorCode::UnbalancedBranch, pos_, "branch without a preceding atom");
        if (pending_.symbol) parse_fail(ErrorCode::UnknownAtomToken, pos_, "bond symbol before '('");
        branches_.push_back({prev_, pos_});
        branch_atoms_.push_back(atoms_.size());
        ++pos_;
      } else if (c == ')') {
        if (branches_.empty()) parse_fail(ErrorCode::UnbalancedBranch, pos_, "unmatched ')'");
        if (pending_.symbol) parse_fail(ErrorCode::UnknownAtomToken, pos_, "atom expected after bond symbol");
        if (atoms_.size() == branch_atoms_.back())
          parse_fail(ErrorCode::UnbalancedBranch, branches_.back().second, "empty branch");
        prev_ = branches_.back().first;
        branches_.pop_back();
        branch_atoms_.pop_back();
        ++pos_;
      } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\') {
        if (prev_ < 0) parse_fail(ErrorCode::UnknownAtomToken, pos_, "bond symbol without a preceding atom");
        if (pending_.symbol) parse_fail(ErrorCode::UnknownAtomToken, pos_, "atom expected after bond symbol");
        pending_ = {static_cast<char>(c), pos_};
        ++pos_;
      } else if (c == '.') {
        if (pending_.symbol) parse_fail(ErrorCode::UnknownAtomToken, pos_, "atom expected after bond symbol");
        if (prev_ < 0) parse_fail(ErrorCode::UnknownAtomToken, pos_, "atom expected before '.'");
        if (!branches_.empty()) parse_fail(ErrorCode::UnbalancedBranch, branches_.back().second, "'.' inside a branch");
        prev_ = -1;
        ++pos_;
      } else if (std::isdigit(c) || c == '%') {
        ring_closure();
      } else if (c == '[') {
        bracket_atom();
      } else {
        organic_atom();
      }
    }
    if (pending_.symbol) parse_fail(ErrorCode::UnknownAtomToken, n, "atom expected after bond symbol");
    if (!branches_.empty()) parse_fail(ErrorCode::UnbalancedBranch, branches_.back().second, "unclosed '('");
    if (!rings_.empty()) {
      std::size_t first = n;
      for (const auto& [label, open] : rings_) first = std::min(first, open.offset);
      parse_fail(ErrorCode::UnbalancedRingClosure, first, "unclosed ring bond");
    }
    if (atoms_.empty()) parse_fail(ErrorCode::EmptyInput, 0, "no atoms");
  }

  std::vector<Atom> atoms_;
  std::vector<RawBond> bonds_;
  std::vector<bool> organic_;  // written without brackets

 private:
  void add_atom(Atom atom, bool organic) {
    atoms_.push_back(std::move(atom));
    organic_.push_back(organic);
    int idx = static_cast<int>(atoms_.size()) - 1;
    if (prev_ >= 0) add_bond(prev_, idx, pending_.symbol, atoms_.back().source_offset);
    pending_ = {};
    prev_ = idx;
  }

  void add_bond(int a, int b, char symbol, std::size_t offset) {
    if (a == b) parse_fail(ErrorCode::UnbalancedRingClosure, offset, "ring bond to itself");
    for (const auto& rb : bonds_)
      if ((rb.a == a && rb.b == b) || (rb.a == b && rb.b == a))
        parse_fail(ErrorCode::UnbalancedRingClosure, offset, "duplicate bond");
    bonds_.push_back({a, b, symbol});
  }

  void ring_closure() {
    std::size_t start = pos_;
    int label;
    if (s_[pos_] == '%') {
      if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2])))
        parse_fail(ErrorCode::UnbalancedRingClosure, start, "'%' must be followed by two digits");
      label = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
      pos_ += 3;
    } else {
      label = s_[pos_] - '0';
      ++pos_;
    }
    if (prev_ < 0) parse_fail(ErrorCode::UnbalancedRingClosure, start, "ring bond without a preceding atom");
    auto it = rings_.find(label);
    if (it == rings_.end()) {
      rings_[label] = {prev_, pending_.symbol, start};
      pending_ = {};
      return;
    }
    RingOpen open = it->second;
    rings_.erase(it);
    char a = open.symbol, b = pending_.symbol;
    char symbol = a ? a : b;
    if (a && b && a != b && !(is_direction(a) && is_direction(b)))
      parse_fail(ErrorCode::UnbalancedRingClosure, start, "ring bond symbols disagree");
    // Directional marks are read relative to the writing direction of the
    // side that carries them.
    if (a) {
      add_bond(open.atom, prev_, symbol, start);
    } else {
      add_bond(prev_, open.atom, symbol, start);
    }
    pending_ = {};
  }

  void organic_atom() {
    std::size_t start = pos_;
    char c = s_[pos_];
    Atom atom;
    atom.source_offset = start;
    std::string sym;
    if (c == 'C' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'l') {
      sym = "Cl";
    } else if (c == 'B' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'r') {
      sym = "Br";
    } else if (std::string_view("BCNOPSFI").find(c) != std::string_view::npos) {
      sym = std::string(1, c);
    } else if (std::string_view("bcnops").find(c) != std::string_view::npos) {
      sym = std::string(1, static_cast<char>(std::toupper(c)));
      atom.aromatic = true;
    } else {
      parse_fail(ErrorCode::UnknownAtomToken, start, std::string("unexpected character '") + c + "'");
    }
    pos_ += atom.aromatic ? 1 : sym.size();
    atom.atomic_number = elements::atomic_number(sym);
    add_atom(std::move(atom), true);
  }

  void bracket_atom() {
    std::size_t start = pos_;
    std::size_t close = s_.find(']', pos_);
    if (close == std::string_view::npos) parse_fail(ErrorCode::UnknownAtomToken, start, "unterminated bracket atom");
    std::size_t p = pos_ + 1;
    auto digit = [&](std::size_t i) { return i < close && std::isdigit(static_cast<unsigned char>(s_[i])); };
    Atom atom;
    atom.source_offset = start;
    while (digit(p)) {
      atom.isotope = atom.isotope * 10 + (s_[p] - '0');
      if (atom.isotope > 999) parse_fail(ErrorCode::UnknownAtomToken, p, "isotope out of range");
      ++p;
    }
    if (p >= close) parse_fail(ErrorCode::UnknownAtomToken, p, "element symbol expected");
    std::size_t sym_at = p;
    int z = 0;
    if (std::islower(static_cast<unsigned char>(s_[p]))) {
      // aromatic: two-letter forms first
      if (p + 1 < close && std::islower(static_cast<unsigned char>(s_[p + 1]))) {
        std::string two{static_cast<char>(std::toupper(s_[p])), s_[p + 1]};
        int z2 = elements::atomic_number(two);
        if (z2 && aromatic_bracket_symbol(z2)) {
          z = z2;
          p += 2;
        }
      }
      if (!z) {
        int z1 = elements::atomic_number(std::string(1, static_cast<char>(std::toupper(s_[p]))));
        if (z1 && aromatic_bracket_symbol(z1)) {
          z = z1;
          p += 1;
        }
      }
      if (!z) parse_fail(ErrorCode::UnknownAtomToken, sym_at, "unknown aromatic symbol");
      atom.aromatic = true;
    } else if (std::isupper(static_cast<unsigned char>(s_[p]))) {
      if (p + 1 < close && std::islower(static_cast<unsigned char>(s_[p + 1]))) {
        z = elements::atomic_number(s_.substr(p, 2));
        if (z) p += 2;
      }
      if (!z) {
        z = elements::atomic_number(s_.substr(p, 1));
        if (z) p += 1;
      }
      if (!z) parse_fail(ErrorCode::UnknownAtomToken, sym_at, "unknown element symbol");
    } else {
      parse_fail(ErrorCode::UnknownAtomToken, sym_at, "element symbol expected");
    }
    atom.atomic_number = z;
    if (p < close && s_[p] == '@') {
      atom.chiral_center = true;
      ++p;
      if (p < close && s_[p] == '@') ++p;
    }
    int h = 0;
    if (p < close && s_[p] == 'H') {
      ++p;
      h = 1;
      if (digit(p)) {
        h = 0;
        while (digit(p)) h = h * 10 + (s_[p++] - '0');
      }
    }
    atom.explicit_h = h;
    if (p < close && (s_[p] == '+' || s_[p] == '-')) {
      char sign = s_[p++];
      int mag = 1;
      if (digit(p)) {
        mag = 0;
        while (digit(p)) mag = mag * 10 + (s_[p++] - '0');
      } else {
        while (p < close && s_[p] == sign) {
          ++mag;
          ++p;
        }
      }
      if (mag > 15) parse_fail(ErrorCode::UnknownAtomToken, p, "charge out of range");
      atom.formal_charge = sign == '+' ? mag : -mag;
    }
    if (p < close && s_[p] == ':') {
      ++p;
      if (!digit(p)) parse_fail(ErrorCode::UnknownAtomToken, p, "atom class expected");
      while (digit(p)) ++p;
    }
    if (p != close) parse_fail(ErrorCode::UnknownAtomToken, p, "unexpected character in bracket atom");
    pos_ = close + 1;
    add_atom(std::move(atom), false);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int prev_ = -1;
  PendingBond pending_;
  std::vector<std::pair<int, std::size_t>> branches_;
  std::vector<std::size_t> branch_atoms_;
  std::map<int, RingOpen> rings_;
};

// --- rings ------------------------------------------------------------------

using Bits = std::vector<std::uint64_t>;

bool bits_zero(const Bits& b) {
  return std::all_of(b.begin(), b.end(), [](std::uint64_t w) { return w == 0; });
}

int highest_bit(const Bits& b) {
  for (std::size_t w = b.size(); w-- > 0;)
    if (b[w]) return static_cast<int>(w * 64 + 63 - static_cast<std::size_t>(__builtin_clzll(b[w])));
  return -1;
}

struct Gf2Basis {
  std::map<int, Bits> rows;  // pivot -> row

  Bits reduce(Bits v) const {
    for (;;) {
      int hb = highest_bit(v);
      if (hb < 0) return v;
      auto it = rows.find(hb);
      if (it == rows.end()) return v;
      for (std::size_t i = 0; i < v.size(); ++i) v[i] ^= it->second[i];
    }
  }
  bool insert(const Bits& v) {
    Bits r = reduce(v);
    if (bits_zero(r)) return false;
    rows[highest_bit(r)] = std::move(r);
    return true;
  }
};

int count_components(const Molecule& mol) {
  std::vector<int> seen(mol.num_atoms(), 0);
  int comps = 0;
  for (std::size_t s = 0; s < mol.num_atoms(); ++s) {
    if (seen[s]) continue;
    ++comps;
    std::vector<int> stack{static_cast<int>(s)};
    seen[s] = 1;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      for (auto [n, b] : mol.neighbors(a))
        if (!seen[static_cast<std::size_t>(n)]) {
          seen[static_cast<std::size_t>(n)] = 1;
          stack.push_back(n);
        }
    }
  }
  return comps;
}

}  // namespace

std::vector<Ring> smallest_rings(const Molecule& mol) {
  const int n = static_cast<int>(mol.num_atoms());
  const int m = static_cast<int>(mol.num_bonds());
  int cyclomatic = m - n + count_components(mol);
  if (cyclomatic <= 0) return {};
  const std::size_t words = (static_cast<std::size_t>(m) + 63) / 64;

  struct Candidate {
    int length;
    Bits bits;
  };
  std::vector<Candidate> candidates;

  std::vector<int> dist(static_cast<std::size_t>(n)), parent_bond(static_cast<std::size_t>(n));
  for (int root = 0; root < n; ++root) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(parent_bond.begin(), parent_bond.end(), -1);
    std::vector<int> queue{root};
    dist[static_cast<std::size_t>(root)] = 0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      int a = queue[qi];
      auto nbrs = mol.neighbors(a);
      std::sort(nbrs.begin(), nbrs.end());
      for (auto [nb, b] : nbrs)
        if (dist[static_cast<std::size_t>(nb)] < 0) {
          dist[static_cast<std::size_t>(nb)] = dist[static_cast<std::size_t>(a)] + 1;
          parent_bond[static_cast<std::size_t>(nb)] = b;
          queue.push_back(nb);
        }
    }
    auto path = [&](int x, std::vector<int>& atoms_out, std::vector<int>& bonds_out) {
      while (x != root) {
        atoms_out.push_back(x);
        int b = parent_bond[static_cast<std::size_t>(x)];
        bonds_out.push_back(b);
        x = mol.bonds[static_cast<std::size_t>(b)].other(x);
      }
    };
    for (int bi = 0; bi < m; ++bi) {
      const Bond& bond = mol.bonds[static_cast<std::size_t>(bi)];
      int x = bond.begin, y = bond.end;
      if (dist[static_cast<std::size_t>(x)] < 0 || dist[static_cast<std::size_t>(y)] < 0) continue;
      if (parent_bond[static_cast<std::size_t>(x)] == bi || parent_bond[static_cast<std::size_t>(y)] == bi) continue;
      std::vector<int> ax, bx, ay, by;
      path(x, ax, bx);
      path(y, ay, by);
      bool disjoint = true;
      for (int a : ay)
        if (std::find(ax.begin(), ax.end(), a) != ax.end()) {
          disjoint = false;
          break;
        }
      if (!disjoint) continue;
      Bits bits(words, 0);
      auto set = [&](int b) { bits[static_cast<std::size_t>(b) / 64] |= 1ULL << (b % 64); };
      for (int b : bx) set(b);
      for (int b : by) set(b);
      set(bi);
      candidates.push_back({static_cast<int>(bx.size() + by.size() + 1), std::move(bits)});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.length != b.length ? a.length < b.length : a.bits < b.bits;
  });
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const Candidate& a, const Candidate& b) { return a.bits == b.bits; }),
                   candidates.end());

  // Relevant cycles: those not spanned by strictly shorter cycles. This set is
  // independent of atom numbering, unlike an arbitrary minimum basis.
  Gf2Basis basis;
  std::vector<Ring> rings;
  std::size_t i = 0;
  while (i < candidates.size() && static_cast<int>(basis.rows.size()) < cyclomatic) {
    std::size_t j = i;
    while (j < candidates.size() && candidates[j].length == candidates[i].length) ++j;
    std::vector<const Bits*> relevant;
    for (std::size_t k = i; k < j; ++k)
      if (!bits_zero(basis.reduce(candidates[k].bits))) relevant.push_back(&candidates[k].bits);
    for (const Bits* bits : relevant) {
      Ring ring;
      std::set<int> atoms;
      for (int b = 0; b < m; ++b)
        if ((*bits)[static_cast<std::size_t>(b) / 64] >> (b % 64) & 1ULL) {
          ring.bonds.push_back(b);
          atoms.insert(mol.bonds[static_cast<std::size_t>(b)].begin);
          atoms.insert(mol.bonds[static_cast<std::size_t>(b)].end);
        }
      ring.atoms.assign(atoms.begin(), atoms.end());
      rings.push_back(std::move(ring));
    }
    for (const Bits* bits : relevant) basis.insert(*bits);
    i = j;
  }
  return rings;
}

void perceive_rings(Molecule& mol) {
  for (auto& a : mol.atoms) {
    a.in_ring = false;
    a.ring_sizes.clear();
  }
  for (auto& b : mol.bonds) {
    b.in_ring = false;
    b.ring_sizes.clear();
  }
  for (const Ring& r : smallest_rings(mol)) {
    int size = static_cast<int>(r.bonds.size());
    for (int a : r.atoms) {
      mol.atoms[static_cast<std::size_t>(a)].in_ring = true;
      mol.atoms[static_cast<std::size_t>(a)].ring_sizes.insert(size);
    }
    for (int b : r.bonds) {
      mol.bonds[static_cast<std::size_t>(b)].in_ring = true;
      mol.bonds[static_cast<std::size_t>(b)].ring_sizes.insert(size);
    }
  }
}

namespace {

// --- aromaticity for Kekulé input ----------------------------------------------

bool has_lone_pair_donor(const Molecule& mol, int a) {
  const Atom& at = mol.atoms[static_cast<std::size_t>(a)];
  int connections = at.degree + at.total_h();
  switch (at.atomic_number) {
    case 7: case 15: return at.formal_charge == 0 && connections == 3;
    case 8: case 16: case 34: return at.formal_charge == 0 && connections == 2;
    case 6: return at.formal_charge == -1 && connections == 3;
    default: return false;
  }
}

// Pi electrons an atom donates to a candidate ring, or -1 if it breaks
// conjugation.
int pi_contribution(const Molecule& mol, int a, const std::vector<bool>& ring_bond) {
  const Atom& at = mol.atoms[static_cast<std::size_t>(a)];
  if (at.aromatic) {
    if (has_lone_pair_donor(mol, a)) return 2;
    return 1;
  }
  int doubles_in = 0, doubles_ring_other = 0, doubles_exo_hetero = 0, other_multiple = 0;
  for (auto [nb, b] : mol.neighbors(a)) {
    const Bond& bond = mol.bonds[static_cast<std::size_t>(b)];
    if (bond.order == BondOrder::Triple) ++other_multiple;
    if (bond.order != BondOrder::Double) continue;
    if (ring_bond[static_cast<std::size_t>(b)]) {
      ++doubles_in;
    } else if (bond.in_ring) {
      ++doubles_ring_other;
    } else if (mol.atoms[static_cast<std::size_t>(nb)].atomic_number != 6) {
      ++doubles_exo_hetero;
    } else {
      ++other_multiple;
    }
  }
  if (other_multiple) return -1;
  int doubles = doubles_in + doubles_ring_other + doubles_exo_hetero;
  if (doubles > 1) return -1;
  if (doubles_in || doubles_ring_other) return 1;
  if (doubles_exo_hetero) return at.atomic_number == 6 ? 0 : -1;
  if (has_lone_pair_donor(mol, a)) return 2;
  if (at.atomic_number == 6 && at.formal_charge == 1 && at.degree + at.total_h() == 3) return 0;
  return -1;
}

void perceive_kekule_aromaticity(Molecule& mol, const std::vector<Ring>& rings) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const Ring& r : rings) {
      bool all_aromatic = true;
      for (int b : r.bonds)
        all_aromatic &= mol.bonds[static_cast<std::size_t>(b)].order == BondOrder::Aromatic;
      if (all_aromatic) continue;
      std::vector<bool> member(mol.num_bonds(), false);
      for (int b : r.bonds) member[static_cast<std::size_t>(b)] = true;
      int pi = 0;
      bool ok = true;
      for (int a : r.atoms) {
        int c = pi_contribution(mol, a, member);
        if (c < 0) {
          ok = false;
          break;
        }
        pi += c;
      }
      if (!ok || pi < 2 || (pi - 2) % 4 != 0) continue;
      for (int a : r.atoms) mol.atoms[static_cast<std::size_t>(a)].aromatic = true;
      for (int b : r.bonds) mol.bonds[static_cast<std::size_t>(b)].order = BondOrder::Aromatic;
      changed = true;
    }
  }
}

// --- conjugation ------------------------------------------------------------------

void perceive_conjugation(Molecule& mol) {
  const std::size_t n = mol.num_atoms();
  std::vector<bool> unsat(n, false), donor(n, false);
  for (const Bond& b : mol.bonds)
    if (b.order != BondOrder::Single) unsat[static_cast<std::size_t>(b.begin)] = unsat[static_cast<std::size_t>(b.end)] = true;
  for (std::size_t a = 0; a < n; ++a) {
    int z = mol.atoms[a].atomic_number;
    donor[a] = !unsat[a] && (z == 7 || z == 8 || z == 16) && mol.atoms[a].formal_charge <= 0;
  }
  for (Bond& b : mol.bonds) {
    auto u = static_cast<std::size_t>(b.begin), v = static_cast<std::size_t>(b.end);
    if (b.order == BondOrder::Aromatic) {
      b.conjugated = true;
    } else if (b.order == BondOrder::Single) {
      b.conjugated = (unsat[u] && unsat[v]) || (unsat[u] && donor[v]) || (donor[u] && unsat[v]);
    } else {
      b.conjugated = false;
    }
  }
  for (std::size_t i = 0; i < mol.num_bonds(); ++i) {
    Bond& b = mol.bonds[i];
    if (b.order != BondOrder::Double && b.order != BondOrder::Triple) continue;
    for (int end : {b.begin, b.end})
      for (auto [nb, ob] : mol.neighbors(end)) {
        const Bond& o = mol.bonds[static_cast<std::size_t>(ob)];
        if (static_cast<std::size_t>(ob) != i && o.order == BondOrder::Single && o.conjugated) b.conjugated = true;
      }
  }
}

// --- refinement ---------------------------------------------------------------------

std::vector<int> dense_ranks(const std::vector<std::vector<std::int64_t>>& sigs) {
  std::vector<int> order(sigs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return sigs[static_cast<std::size_t>(a)] < sigs[static_cast<std::size_t>(b)]; });
  std::vector<int> ranks(sigs.size(), 0);
  int r = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i && sigs[static_cast<std::size_t>(order[i])] != sigs[static_cast<std::size_t>(order[i - 1])]) ++r;
    ranks[static_cast<std::size_t>(order[i])] = r;
  }
  return ranks;
}

int count_distinct(const std::vector<int>& ranks) {
  if (ranks.empty()) return 0;
  return *std::max_element(ranks.begin(), ranks.end()) + 1;
}

std::vector<int> initial_ranks(const Molecule& mol) {
  std::vector<std::vector<std::int64_t>> sigs;
  sigs.reserve(mol.num_atoms());
  for (const Atom& a : mol.atoms)
    sigs.push_back({a.atomic_number, a.isotope, a.formal_charge, a.total_h(), a.degree, a.aromatic ? 1 : 0,
                    a.chiral_center ? 1 : 0, a.in_ring ? 1 : 0});
  return dense_ranks(sigs);
}

std::vector<int> refine(const Molecule& mol, std::vector<int> ranks) {
  // start from dense ranks so the count comparison below is meaningful
  {
    std::vector<std::vector<std::int64_t>> sigs;
    for (int r : ranks) sigs.push_back({r});
    ranks = dense_ranks(sigs);
  }
  int classes = count_distinct(ranks);
  for (;;) {
    std::vector<std::vector<std::int64_t>> sigs(mol.num_atoms());
    for (std::size_t a = 0; a < mol.num_atoms(); ++a) {
      std::vector<std::int64_t> nb;
      for (auto [n, b] : mol.neighbors(static_cast<int>(a)))
        nb.push_back(static_cast<std::int64_t>(mol.bonds[static_cast<std::size_t>(b)].order) * 1000000 + ranks[static_cast<std::size_t>(n)]);
      std::sort(nb.begin(), nb.end());
      sigs[a].push_back(ranks[a]);
      sigs[a].insert(sigs[a].end(), nb.begin(), nb.end());
    }
    auto next = dense_ranks(sigs);
    int next_classes = count_distinct(next);
    ranks = std::move(next);
    if (next_classes == classes) return ranks;
    classes = next_classes;
  }
}

// --- stereo ----------------------------------------------------------------------------

void normalize_stereo(Molecule& mol) {
  bool any = false;
  for (const Bond& b : mol.bonds) any |= b.stereo == BondStereo::Cis || b.stereo == BondStereo::Trans;
  if (!any) return;
  std::vector<int> cls = symmetry_classes(mol);
  for (std::size_t i = 0; i < mol.num_bonds(); ++i) {
    Bond& b = mol.bonds[i];
    if (b.stereo != BondStereo::Cis && b.stereo != BondStereo::Trans) continue;
    bool flip = false;
    bool drop = false;
    for (int side = 0; side < 2; ++side) {
      int x = side == 0 ? b.begin : b.end;
      int ref = b.stereo_atoms[static_cast<std::size_t>(side)];
      int best = ref;
      for (auto [nb, ob] : mol.neighbors(x)) {
        if (static_cast<std::size_t>(ob) == i || nb == ref) continue;
        int c_other = cls[static_cast<std::size_t>(nb)], c_best = cls[static_cast<std::size_t>(best)];
        if (c_other == cls[static_cast<std::size_t>(ref)]) drop = true;
        if (c_other > c_best) best = nb;
      }
      if (best != ref) {
        flip = !flip;
        b.stereo_atoms[static_cast<std::size_t>(side)] = best;
      }
    }
    if (drop) {
      b.stereo = BondStereo::None;
      b.stereo_atoms = {-1, -1};
    } else if (flip) {
      b.stereo = b.stereo == BondStereo::Cis ? BondStereo::Trans : BondStereo::Cis;
    }
  }
}

bool stereo_capable(const Molecule& mol, const Bond& b) {
  if (b.order != BondOrder::Double) return false;
  if (mol.atoms[static_cast<std::size_t>(b.begin)].degree < 2 || mol.atoms[static_cast<std::size_t>(b.end)].degree < 2)
    return false;
  for (int s : b.ring_sizes)
    if (s < 8) return false;
  return true;
}

// --- writer ------------------------------------------------------------------------------

struct WriteContext {
  const Molecule& mol;
  std::vector<bool> implicit_aromatic;  // per bond: an unmarked bond would parse as aromatic
};

std::vector<bool> implicit_aromatic_bonds(const Molecule& mol, const std::vector<Ring>& rings) {
  std::vector<bool> out(mol.num_bonds(), false);
  for (const Ring& r : rings) {
    bool all = std::all_of(r.atoms.begin(), r.atoms.end(),
                           [&](int a) { return mol.atoms[static_cast<std::size_t>(a)].aromatic; });
    if (!all) continue;
    for (int b : r.bonds) out[static_cast<std::size_t>(b)] = true;
  }
  return out;
}

std::string atom_text(const Molecule& mol, int idx) {
  const Atom& a = mol.atoms[static_cast<std::size_t>(idx)];
  std::string sym(elements::symbol(a.atomic_number));
  bool lower = a.aromatic && aromatic_bracket_symbol(a.atomic_number);
  if (lower) sym[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(sym[0])));
  bool bracket = a.isotope != 0 || a.formal_charge != 0 || a.chiral_center || !is_organic_subset(a.atomic_number) ||
                 (a.aromatic && !aromatic_organic(a.atomic_number));
  if (!bracket) {
    auto h = default_implicit_h(a.atomic_number, a.aromatic, mol.bond_order_sum(idx));
    bracket = !h || *h != a.total_h();
  }
  if (!bracket) return sym;
  std::string out = "[";
  if (a.isotope) out += std::to_string(a.isotope);
  out += sym;
  if (a.chiral_center) out += "@";
  int h = a.total_h();
  if (h > 0) out += h == 1 ? std::string("H") : "H" + std::to_string(h);
  if (a.formal_charge) {
    out += a.formal_charge > 0 ? "+" : "-";
    int mag = std::abs(a.formal_charge);
    if (mag > 1) out += std::to_string(mag);
  }
  out += "]";
  return out;
}

class Writer {
 public:
  Writer(const WriteContext& ctx, std::span<const int> priority) : ctx_(ctx), mol_(ctx.mol), prio_(priority) {}

  std::string write() {
    const std::size_t n = mol_.num_atoms();
    visited_.assign(n, false);
    bond_used_.assign(mol_.num_bonds(), false);
    parent_bond_.assign(n, -1);
    from_.assign(mol_.num_bonds(), -1);
    children_.assign(n, {});
    ring_at_.assign(n, {});
    dir_.assign(mol_.num_bonds(), 0);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return prio_[static_cast<std::size_t>(a)] < prio_[static_cast<std::size_t>(b)]; });
    std::vector<int> roots;
    for (int a : order)
      if (!visited_[static_cast<std::size_t>(a)]) {
        roots.push_back(a);
        plan(a);
      }
    assign_directions();
    std::string out;
    for (std::size_t r = 0; r < roots.size(); ++r) {
      if (r) out += '.';
      emit(roots[r], -1, out);
    }
    return out;
  }

 private:
  std::vector<std::pair<int, int>> sorted_neighbors(int a) const {
    auto nbrs = mol_.neighbors(a);
    std::sort(nbrs.begin(), nbrs.end(), [&](const auto& x, const auto& y) {
      return prio_[static_cast<std::size_t>(x.first)] < prio_[static_cast<std::size_t>(y.first)];
    });
    return nbrs;
  }

  void plan(int a) {
    visited_[static_cast<std::size_t>(a)] = true;
    for (auto [nb, b] : sorted_neighbors(a)) {
      auto bi = static_cast<std::size_t>(b);
      if (bond_used_[bi]) continue;
      bond_used_[bi] = true;
      if (!visited_[static_cast<std::size_t>(nb)]) {
        parent_bond_[static_cast<std::size_t>(nb)] = b;
        from_[bi] = a;
        children_[static_cast<std::size_t>(a)].push_back(nb);
        plan(nb);
      } else {
        from_[bi] = nb;  // opened at the earlier atom
        ring_at_[static_cast<std::size_t>(nb)].push_back(b);
        ring_at_[static_cast<std::size_t>(a)].push_back(b);
      }
    }
  }

  // True if neighbour `nb` of `x` reads as "up" given the mark on bond `b`.
  bool is_up(int b, int x, char mark) const {
    bool forward = from_[static_cast<std::size_t>(b)] == x;
    return forward ? mark == '/' : mark == '\\';
  }
  char mark_for(int b, int x, bool up) const {
    bool forward = from_[static_cast<std::size_t>(b)] == x;
    return forward == up ? '/' : '\\';
  }

  void assign_directions() {
    std::vector<int> stereo_bonds;
    for (std::size_t i = 0; i < mol_.num_bonds(); ++i) {
      BondStereo s = mol_.bonds[i].stereo;
      if (s == BondStereo::Cis || s == BondStereo::Trans || s == BondStereo::Any) stereo_bonds.push_back(static_cast<int>(i));
    }
    auto key = [&](int b) {
      const Bond& bond = mol_.bonds[static_cast<std::size_t>(b)];
      int p1 = prio_[static_cast<std::size_t>(bond.begin)], p2 = prio_[static_cast<std::size_t>(bond.end)];
      return std::tuple(bond.stereo == BondStereo::Any, std::min(p1, p2), std::max(p1, p2));
    };
    std::sort(stereo_bonds.begin(), stereo_bonds.end(), [&](int a, int b) { return key(a) < key(b); });
    for (int bi : stereo_bonds) {
      const Bond& bond = mol_.bonds[static_cast<std::size_t>(bi)];
      if (bond.stereo == BondStereo::Any) {
        for (auto [nb, ob] : sorted_neighbors(bond.begin)) {
          if (ob == bi || mol_.bonds[static_cast<std::size_t>(ob)].order != BondOrder::Single) continue;
          if (!dir_[static_cast<std::size_t>(ob)]) dir_[static_cast<std::size_t>(ob)] = mark_for(ob, bond.begin, true);
          break;
        }
        continue;
      }
      int l = bond.begin, r = bond.end;
      int nl = bond.stereo_atoms[0], nr = bond.stereo_atoms[1];
      if (prio_[static_cast<std::size_t>(r)] < prio_[static_cast<std::size_t>(l)]) {
        std::swap(l, r);
        std::swap(nl, nr);
      }
      int bl = mol_.bond_between(l, nl), br = mol_.bond_between(r, nr);
      if (bl < 0 || br < 0) continue;
      bool cis = bond.stereo == BondStereo::Cis;
      char& ml = dir_[static_cast<std::size_t>(bl)];
      char& mr = dir_[static_cast<std::size_t>(br)];
      if (!ml && !mr) {
        ml = '/';
        mr = mark_for(br, r, is_up(bl, l, ml) == cis);
      } else if (ml && !mr) {
        mr = mark_for(br, r, is_up(bl, l, ml) == cis);
      } else if (!ml && mr) {
        ml = mark_for(bl, l, is_up(br, r, mr) == cis);
      }
    }
  }

  std::string bond_text(int b) const {
    const Bond& bond = mol_.bonds[static_cast<std::size_t>(b)];
    char d = dir_[static_cast<std::size_t>(b)];
    bool both_aromatic = mol_.atoms[static_cast<std::size_t>(bond.begin)].aromatic &&
                         mol_.atoms[static_cast<std::size_t>(bond.end)].aromatic;
    switch (bond.order) {
      case BondOrder::Single:
        if (d) return std::string(1, d);
        return both_aromatic ? "-" : "";
      case BondOrder::Double: return "=";
      case BondOrder::Triple: return "#";
      case BondOrder::Aromatic:
        return both_aromatic && ctx_.implicit_aromatic[static_cast<std::size_t>(b)] ? "" : ":";
    }
    return "";
  }

  static std::string ring_label(int d) { return d < 10 ? std::to_string(d) : "%" + std::to_string(d); }

  void emit(int a, int via, std::string& out) {
    if (via >= 0) out += bond_text(via);
    out += atom_text(mol_, a);
    auto& rings = ring_at_[static_cast<std::size_t>(a)];
    std::vector<int> closes, opens;
    for (int b : rings) (from_[static_cast<std::size_t>(b)] == a ? opens : closes).push_back(b);
    std::sort(opens.begin(), opens.end(), [&](int x, int y) {
      int px = prio_[static_cast<std::size_t>(mol_.bonds[static_cast<std::size_t>(x)].other(a))];
      int py = prio_[static_cast<std::size_t>(mol_.bonds[static_cast<std::size_t>(y)].other(a))];
      return px < py;
    });
    std::vector<int> freed;
    for (int b : closes) {
      int d = digit_of_[b];
      out += ring_label(d);
      freed.push_back(d);
    }
    for (int b : opens) {
      int d = 1;
      while (in_use_.count(d)) ++d;
      in_use_.insert(d);
      digit_of_[b] = d;
      out += bond_text(b);
      out += ring_label(d);
    }
    for (int d : freed) in_use_.erase(d);
    const auto& kids = children_[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      int child = kids[i];
      bool last = i + 1 == kids.size();
      if (!last) out += '(';
      emit(child, parent_bond_[static_cast<std::size_t>(child)], out);
      if (!last) out += ')';
    }
  }

  const WriteContext& ctx_;
  const Molecule& mol_;
  std::span<const int> prio_;
  std::vector<bool> visited_, bond_used_;
  std::vector<int> parent_bond_, from_;
  std::vector<std::vector<int>> children_, ring_at_;
  std::vector<char> dir_;
  std::set<int> in_use_;
  std::map<int, int> digit_of_;
};

struct CanonicalResult {
  std::string key;
  std::vector<int> ranks;
};

CanonicalResult canonicalize(const Molecule& mol) {
  if (mol.num_atoms() == 0) return {"", {}};
  WriteContext ctx{mol, implicit_aromatic_bonds(mol, smallest_rings(mol))};
  CanonicalResult best;
  bool have = false;
  long leaves = 0;
  constexpr long kLeafBudget = 20000;

  std::function<void(std::vector<int>)> search = [&](std::vector<int> ranks) {
    ranks = refine(mol, std::move(ranks));
    const int classes = count_distinct(ranks);
    if (classes == static_cast<int>(mol.num_atoms())) {
      ++leaves;
      std::string s = Writer(ctx, ranks).write();
      if (!have || s < best.key) {
        best.key = std::move(s);
        best.ranks = ranks;
        have = true;
      }
      return;
    }
    std::vector<int> count(static_cast<std::size_t>(classes), 0);
    for (int r : ranks) ++count[static_cast<std::size_t>(r)];
    int target = 0;
    while (count[static_cast<std::size_t>(target)] < 2) ++target;
    bool first = true;
    for (std::size_t m = 0; m < ranks.size(); ++m) {
      if (ranks[m] != target) continue;
      if (!first && leaves >= kLeafBudget) break;
      first = false;
      std::vector<int> next(ranks.size());
      for (std::size_t i = 0; i < ranks.size(); ++i)
        next[i] = 2 * ranks[i] + (ranks[i] == target && i != m ? 1 : 0);
      search(std::move(next));
    }
  };
  search(initial_ranks(mol));
  return best;
}

// --- parse pipeline --------------------------------------------------------------------------

Molecule build_molecule(Parser& p) {
  const std::size_t n = p.atoms_.size();
  std::vector<std::vector<int>> adj(n);
  for (std::size_t i = 0; i < p.bonds_.size(); ++i) {
    adj[static_cast<std::size_t>(p.bonds_[i].a)].push_back(static_cast<int>(i));
    adj[static_cast<std::size_t>(p.bonds_[i].b)].push_back(static_cast<int>(i));
  }

  // Fold plain hydrogen atoms into their heavy neighbour.
  std::vector<bool> drop(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const Atom& a = p.atoms_[i];
    if (a.atomic_number != 1 || a.isotope || a.formal_charge || a.explicit_h.value_or(0) || adj[i].size() != 1) continue;
    const RawBond& rb = p.bonds_[static_cast<std::size_t>(adj[i][0])];
    if (rb.symbol && rb.symbol != '-' && !is_direction(rb.symbol)) continue;
    auto nb = static_cast<std::size_t>(rb.a == static_cast<int>(i) ? rb.b : rb.a);
    if (p.atoms_[nb].atomic_number == 1) continue;
    drop[i] = true;
    p.atoms_[nb].explicit_h = p.atoms_[nb].explicit_h.value_or(0) + 1;
  }

  // Components by heavy-atom count.
  std::vector<int> comp(n, -1);
  std::vector<int> heavy;
  for (std::size_t s = 0; s < n; ++s) {
    if (drop[s] || comp[s] >= 0) continue;
    int c = static_cast<int>(heavy.size());
    heavy.push_back(0);
    std::vector<std::size_t> stack{s};
    comp[s] = c;
    while (!stack.empty()) {
      std::size_t a = stack.back();
      stack.pop_back();
      if (p.atoms_[a].atomic_number != 1) ++heavy[static_cast<std::size_t>(c)];
      for (int bi : adj[a]) {
        const RawBond& rb = p.bonds_[static_cast<std::size_t>(bi)];
        auto o = static_cast<std::size_t>(rb.a == static_cast<int>(a) ? rb.b : rb.a);
        if (!drop[o] && comp[o] < 0) {
          comp[o] = c;
          stack.push_back(o);
        }
      }
    }
  }
  int keep = 0;
  for (std::size_t c = 1; c < heavy.size(); ++c)
    if (heavy[c] > heavy[static_cast<std::size_t>(keep)]) keep = static_cast<int>(c);
  for (std::size_t c = 0; c < heavy.size(); ++c)
    if (static_cast<int>(c) != keep && heavy[c] == heavy[static_cast<std::size_t>(keep)]) {
      std::size_t at = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (comp[i] == static_cast<int>(c)) {
          at = p.atoms_[i].source_offset;
          break;
        }
      parse_fail(ErrorCode::AmbiguousComponents, at, "two largest components have the same heavy-atom count");
    }

  Molecule mol;
  std::vector<int> remap(n, -1);
  std::vector<bool> organic;
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i] || comp[i] != keep) continue;
    remap[i] = static_cast<int>(mol.atoms.size());
    Atom a = p.atoms_[i];
    a.element = elements::classify(a.atomic_number);
    mol.atoms.push_back(std::move(a));
    organic.push_back(p.organic_[i]);
  }
  std::vector<char> symbols;
  std::vector<int> written_from;
  for (const RawBond& rb : p.bonds_) {
    int a = remap[static_cast<std::size_t>(rb.a)], b = remap[static_cast<std::size_t>(rb.b)];
    if (a < 0 || b < 0) continue;
    Bond bond;
    bond.begin = std::min(a, b);
    bond.end = std::max(a, b);
    switch (rb.symbol) {
      case '=': bond.order = BondOrder::Double; break;
      case '#': bond.order = BondOrder::Triple; break;
      case ':': bond.order = BondOrder::Aromatic; break;
      default: bond.order = BondOrder::Single; break;
    }
    mol.bonds.push_back(bond);
    symbols.push_back(rb.symbol);
    written_from.push_back(a);
  }
  mol.rebuild_adjacency();

  // Unmarked bonds between aromatic atoms are aromatic inside an all-aromatic ring.
  auto rings = smallest_rings(mol);
  auto implicit_arom = implicit_aromatic_bonds(mol, rings);
  for (std::size_t i = 0; i < mol.num_bonds(); ++i) {
    Bond& b = mol.bonds[i];
    if (symbols[i] == 0 && mol.atoms[static_cast<std::size_t>(b.begin)].aromatic &&
        mol.atoms[static_cast<std::size_t>(b.end)].aromatic && implicit_arom[i])
      b.order = BondOrder::Aromatic;
    if (b.order == BondOrder::Aromatic &&
        !(mol.atoms[static_cast<std::size_t>(b.begin)].aromatic && mol.atoms[static_cast<std::size_t>(b.end)].aromatic))
      parse_fail(ErrorCode::UnknownAtomToken, mol.atoms[static_cast<std::size_t>(b.end)].source_offset,
                 "aromatic bond to a non-aromatic atom");
  }

  // Valence model.
  for (std::size_t i = 0; i < mol.num_atoms(); ++i) {
    Atom& a = mol.atoms[i];
    int used = mol.bond_order_sum(static_cast<int>(i)) + a.explicit_h.value_or(0);
    if (organic[i]) {
      auto h = default_implicit_h(a.atomic_number, a.aromatic, used);
      if (!h) parse_fail(ErrorCode::ValenceViolation, a.source_offset,
                         "valence exceeded for " + std::string(elements::symbol(a.atomic_number)));
      a.implicit_h = *h;
    } else {
      a.implicit_h = 0;
      const auto* vals = valence_table(a.atomic_number - a.formal_charge);
      if (vals && a.atomic_number > 1 && used > vals->back())
        parse_fail(ErrorCode::ValenceViolation, a.source_offset,
                   "valence exceeded for " + std::string(elements::symbol(a.atomic_number)));
    }
  }

  perceive_rings(mol);
  perceive_kekule_aromaticity(mol, rings);
  perceive_conjugation(mol);

  // Directional single bonds -> cis/trans labels.
  for (std::size_t i = 0; i < mol.num_bonds(); ++i) {
    Bond& d = mol.bonds[i];
    if (!stereo_capable(mol, d)) continue;
    std::array<int, 2> ref{-1, -1};
    std::array<bool, 2> up{false, false};
    for (int side = 0; side < 2; ++side) {
      int x = side == 0 ? d.begin : d.end;
      for (auto [nb, ob] : mol.neighbors(x)) {
        auto obi = static_cast<std::size_t>(ob);
        if (obi == i || !is_direction(symbols[obi]) || mol.bonds[obi].order != BondOrder::Single) continue;
        bool forward = written_from[obi] == x;
        bool u = forward ? symbols[obi] == '/' : symbols[obi] == '\\';
        if (ref[static_cast<std::size_t>(side)] < 0 || nb < ref[static_cast<std::size_t>(side)]) {
          ref[static_cast<std::size_t>(side)] = nb;
          up[static_cast<std::size_t>(side)] = u;
        }
      }
    }
    if (ref[0] >= 0 && ref[1] >= 0) {
      d.stereo = up[0] == up[1] ? BondStereo::Cis : BondStereo::Trans;
      d.stereo_atoms = ref;
    } else if (ref[0] >= 0 || ref[1] >= 0) {
      d.stereo = BondStereo::Any;
    }
  }
  normalize_stereo(mol);
  mol.canonical_key = canonicalize(mol).key;
  return mol;
}

}  // namespace

Molecule parse_smiles(std::string_view smiles) {
  Parser p(smiles);
  p.run();
  return build_molecule(p);
}

Hybridization infer_hybridization(const Molecule& mol, int atom) {
  const Atom& a = mol.atoms[static_cast<std::size_t>(atom)];
  int doubles = 0, triples = 0;
  bool saturated = true;
  for (auto [nb, b] : mol.neighbors(atom)) {
    BondOrder o = mol.bonds[static_cast<std::size_t>(b)].order;
    if (o == BondOrder::Double) ++doubles;
    if (o == BondOrder::Triple) ++triples;
    if (o != BondOrder::Single) saturated = false;
  }
  if (triples > 0 || doubles >= 2) return Hybridization::SP;
  if (a.aromatic || doubles == 1) return Hybridization::SP2;
  if (saturated && (a.atomic_number == 6 || a.atomic_number == 7 || a.atomic_number == 8 || a.atomic_number == 16))
    return Hybridization::SP3;
  return Hybridization::Other;
}

std::vector<int> symmetry_classes(const Molecule& mol) { return refine(mol, initial_ranks(mol)); }

std::vector<int> canonical_ranks(const Molecule& mol) { return canonicalize(mol).ranks; }

std::string canonical_key(const Molecule& mol) { return canonicalize(mol).key; }

std::string write_smiles(const Molecule& mol, std::span<const int> priority) {
  if (priority.size() != mol.num_atoms()) fail(ErrorCode::ShapeMismatch, "priority length differs from atom count");
  WriteContext ctx{mol, implicit_aromatic_bonds(mol, smallest_rings(mol))};
  return Writer(ctx, priority).write();
}

std::string to_smiles(const Molecule& mol) {
  std::vector<int> prio(mol.num_atoms());
  std::iota(prio.begin(), prio.end(), 0);
  return write_smiles(mol, prio);
}

std::string random_smiles(const Molecule& mol, Rng& rng) {
  std::vector<int> prio(mol.num_atoms());
  std::iota(prio.begin(), prio.end(), 0);
  rng.shuffle(prio);
  return write_smiles(mol, prio);
}

void refresh_derived(Molecule& mol) {
  mol.rebuild_adjacency();
  perceive_rings(mol);
  perceive_conjugation(mol);
  for (Bond& b : mol.bonds)
    if (!stereo_capable(mol, b)) {
      b.stereo = BondStereo::None;
      b.stereo_atoms = {-1, -1};
    }
  normalize_stereo(mol);
  mol.canonical_key = canonicalize(mol).key;
}

}  // namespace vpg
