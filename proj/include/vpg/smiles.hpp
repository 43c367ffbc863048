#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vpg/molecule.hpp"

namespace vpg {

class Rng;

/// Parses a SMILES string into a sanitized, connected molecule.
///
/// Supported: organic-subset and bracket atoms (isotope, @/@@ flag, H count,
/// charge, class), branches, ring closures including %nn, and the bond symbols
/// - = # : / \. Explicit hydrogens are folded into their heavy neighbour. For
/// dotted inputs the largest heavy-atom component is kept.
///
/// Throws vpg::Error with UnbalancedRingClosure, UnbalancedBranch,
/// UnknownAtomToken, ValenceViolation, AmbiguousComponents or EmptyInput; every
/// error carries the byte offset it refers to.
Molecule parse_smiles(std::string_view smiles);

/// Recomputes in_ring / ring_sizes for atoms and bonds from a smallest set of
/// smallest rings (Horton candidates, GF(2) independence).
void perceive_rings(Molecule& mol);

struct Ring {
  std::vector<int> atoms;  // unordered
  std::vector<int> bonds;
};
std::vector<Ring> smallest_rings(const Molecule& mol);

Hybridization infer_hybridization(const Molecule& mol, int atom);

/// Graph-invariant atom classes from iterative neighbourhood refinement
/// (no tie breaking). Equal class ~ topologically equivalent.
std::vector<int> symmetry_classes(const Molecule& mol);

/// Total order of atoms used for the canonical key (0 = first written).
std::vector<int> canonical_ranks(const Molecule& mol);

/// Canonical SMILES. Equal for any two inputs that parse to isomorphic
/// molecules (same atoms, charges, H counts, aromaticity, bond orders,
/// cis/trans labels and chirality flags).
std::string canonical_key(const Molecule& mol);

/// Writes SMILES with a DFS that prefers atoms of lower priority.
std::string write_smiles(const Molecule& mol, std::span<const int> priority);
/// SMILES in input atom order.
std::string to_smiles(const Molecule& mol);
/// SMILES from a random root and neighbour order (for re-rooting tests).
std::string random_smiles(const Molecule& mol, Rng& rng);

/// Re-derives ring flags, conjugation, stereo normalisation and the canonical
/// key after a structural edit. Hydrogen counts are left untouched.
void refresh_derived(Molecule& mol);

}  // namespace vpg
