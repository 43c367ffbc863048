#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vpg {

/// Element categories distinguished by the atom encoding; everything else is Other.
enum class ElementClass : unsigned char { C, N, O, F, Cl, Br, I, S, P, Other };
inline constexpr std::size_t kNumElementClasses = 10;

enum class BondOrder : unsigned char { Single, Double, Triple, Aromatic };
enum class BondStereo : unsigned char { None, Any, Z, E, Cis, Trans };
enum class Hybridization : unsigned char { SP, SP2, SP3, Other };

namespace elements {
/// Atomic number for a case-sensitive symbol ("Cl", "Se"), 0 if unknown.
int atomic_number(std::string_view symbol);
std::string_view symbol(int atomic_number);
/// Standard atomic weight in g/mol (mass number of the longest-lived isotope
/// for elements without a standard weight).
double atomic_weight(int atomic_number);
ElementClass classify(int atomic_number);
}  // namespace elements

struct Atom {
  int atomic_number = 6;
  ElementClass element = ElementClass::C;
  int formal_charge = 0;
  bool aromatic = false;
  /// Hydrogen count written inside a bracket atom; unset for organic-subset atoms.
  std::optional<int> explicit_h;
  /// Hydrogens implied by the valence model (always 0 for bracket atoms).
  int implicit_h = 0;
  bool in_ring = false;
  std::set<int> ring_sizes;
  bool chiral_center = false;
  int degree = 0;
  int isotope = 0;
  /// Byte offset of the atom token in the source SMILES.
  std::size_t source_offset = 0;

  int total_h() const { return explicit_h.value_or(0) + implicit_h; }
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::Single;
  bool conjugated = false;
  bool in_ring = false;
  std::set<int> ring_sizes;
  BondStereo stereo = BondStereo::None;
  /// Reference neighbours (of begin and end respectively) that the Cis/Trans
  /// label refers to; -1 when stereo is None.
  std::array<int, 2> stereo_atoms{-1, -1};

  int other(int atom) const { return atom == begin ? end : begin; }
  bool has(int atom) const { return atom == begin || atom == end; }
};

/// Bond order contribution to valence; aromatic counts as 1 (the extra pi
/// electron is handled by the aromatic valence rule).
int valence_contribution(BondOrder order);

class Molecule {
 public:
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  std::string canonical_key;

  std::size_t num_atoms() const { return atoms.size(); }
  std::size_t num_bonds() const { return bonds.size(); }

  /// (neighbour atom, bond index) pairs; valid after rebuild_adjacency().
  const std::vector<std::pair<int, int>>& neighbors(int atom) const {
    return adjacency_[static_cast<std::size_t>(atom)];
  }
  /// Bond index connecting a and b, or -1.
  int bond_between(int a, int b) const;
  void rebuild_adjacency();

  /// Sum of valence contributions of all bonds at an atom.
  int bond_order_sum(int atom) const;
  double molar_mass() const;
  int heavy_atom_count() const { return static_cast<int>(atoms.size()); }

 private:
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
};

}  // namespace vpg
