#include "vpg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vpg/error.hpp"
#include "vpg/preprocess.hpp"
#include "vpg/smiles.hpp"
#include "vpg/util.hpp"

namespace vpg {

nlohmann::json SynthConfig::to_json() const {
  return {{"n_molecules", n_molecules},   {"vp_rate", vp_rate},
          {"op_rate", op_rate},           {"water_rate", water_rate},
          {"both_rate", both_rate},       {"min_temps", min_temps},
          {"max_temps", max_temps},       {"t_lo", t_lo},
          {"t_hi", t_hi},                 {"sigma_vp", sigma_vp},
          {"sigma_op", sigma_op},         {"acyclic_rate", acyclic_rate},
          {"link_rate", link_rate},       {"substituent_rate", substituent_rate},
          {"max_heavy", max_heavy},       {"duplicate_rate", duplicate_rate},
          {"corrupt_op_rate", corrupt_op_rate}, {"corrupt_lo", corrupt_lo},
          {"corrupt_hi", corrupt_hi}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.n_molecules = j.value("n_molecules", c.n_molecules);
  c.vp_rate = j.value("vp_rate", c.vp_rate);
  c.op_rate = j.value("op_rate", c.op_rate);
  c.water_rate = j.value("water_rate", c.water_rate);
  c.both_rate = j.value("both_rate", c.both_rate);
  c.min_temps = j.value("min_temps", c.min_temps);
  c.max_temps = j.value("max_temps", c.max_temps);
  c.t_lo = j.value("t_lo", c.t_lo);
  c.t_hi = j.value("t_hi", c.t_hi);
  c.sigma_vp = j.value("sigma_vp", c.sigma_vp);
  c.sigma_op = j.value("sigma_op", c.sigma_op);
  c.acyclic_rate = j.value("acyclic_rate", c.acyclic_rate);
  c.link_rate = j.value("link_rate", c.link_rate);
  c.substituent_rate = j.value("substituent_rate", c.substituent_rate);
  c.max_heavy = j.value("max_heavy", c.max_heavy);
  c.duplicate_rate = j.value("duplicate_rate", c.duplicate_rate);
  c.corrupt_op_rate = j.value("corrupt_op_rate", c.corrupt_op_rate);
  c.corrupt_lo = j.value("corrupt_lo", c.corrupt_lo);
  c.corrupt_hi = j.value("corrupt_hi", c.corrupt_hi);
  return c;
}

SynthStats synth_stats(const Molecule& mol) {
  SynthStats s;
  s.heavy = mol.heavy_atom_count();
  for (const Atom& a : mol.atoms) {
    if (a.atomic_number != 6) ++s.hetero;
    if ((a.element == ElementClass::N || a.element == ElementClass::O || a.element == ElementClass::S) && a.total_h() > 0)
      ++s.donors;
    if (a.element == ElementClass::F || a.element == ElementClass::Cl || a.element == ElementClass::Br ||
        a.element == ElementClass::I)
      ++s.halogens;
    if (a.aromatic) ++s.aromatic_atoms;
  }
  s.rings = static_cast<int>(smallest_rings(mol).size());
  return s;
}

double planted_vp(const SynthStats& s, double temperature_K) {
  const double t = (temperature_K - 298.15) / 25.0;
  return 6.2 - 0.30 * s.heavy - 0.85 * s.donors + 0.10 * s.halogens + (0.55 + 0.035 * s.heavy) * t;
}

double planted_oa(const SynthStats& s) {
  return 1.8 - 0.14 * s.heavy + 0.30 * s.hetero - 0.20 * s.rings - 0.04 * s.aromatic_atoms;
}

double planted_ow(const SynthStats& s) { return planted_oa(s) + 1.0 + 0.30 * s.donors - 0.25 * s.halogens; }

namespace {

// "(*)" marks a substitutable site. Every template starts with a site atom so
// a second ring system can be attached there.
const std::vector<std::string> kRings = {
    "c1(*)c(*)c(*)c(*)c(*)c1(*)",
    "c1(*)c(*)c(*)nc(*)c1(*)",
    "c1(*)ncnc(*)c1(*)",
    "c1(*)c(*)nc(*)c(*)n1",
    "c1(*)c(*)c(*)oc1(*)",
    "c1(*)c(*)c(*)sc1(*)",
    "c1(*)c(*)c(*)[nH]c1(*)",
    "c1(*)nc(*)sc1(*)",
    "c1(*)nc(*)oc1(*)",
    "c1(*)nc(*)[nH]c1(*)",
    "c1(*)c(*)c(*)c2c(*)c(*)c(*)c(*)c2c1(*)",
    "c1(*)c(*)c2c(*)c(*)c(*)c(*)c2o1",
    "c1(*)c(*)c2c(*)c(*)c(*)c(*)c2[nH]1",
    "c1(*)c(*)c(*)c2c(*)c(*)c(*)c(*)c2n1",
    "C1(*)CCc2c(*)c(*)c(*)c(*)c21",
    "C1(*)CCCc2c(*)c(*)c(*)c(*)c21",
    "C1(*)CC1(*)",
    "C1(*)CC(*)C1",
    "C1(*)CC(*)CC1(*)",
    "C1(*)CC(*)CC(*)C1",
    "C1(*)CCCC(*)CC1",
    "C1(*)CCCCCC(*)C1",
    "C1(*)CCC=CC1",
    "C1(*)CC(*)OC1",
    "C1(*)CC(*)NCC1",
    "C1(*)COCCN1",
    "C1(*)COCCO1",
    "C1(*)CCC(=O)CC1",
    "C1(*)CC(*)C(=O)O1",
};

const std::vector<std::string> kLinkers = {"", "C", "CC", "O", "CO", "C(=O)", "CCC", "N", "C(=O)N", "S"};

const std::vector<std::string> kSubstituents = {"C",   "C",    "CC",      "CCC",  "C(C)C", "O",   "OC",
                                                "Cl",  "F",    "Br",      "N",    "C(=O)C", "C=O", "C#N",
                                                "C(F)(F)F", "CO", "C(=O)OC", "CC=C", "S",    "I"};

const std::vector<std::string> kChainGroups = {"",  "O", "Cl", "Br", "F", "C=O", "OC", "N", "C(=O)O",
                                               "C(=O)OC", "C(=O)C", "S", "C#N", "OCC", "C(=O)OCC", "SC"};

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

int count_sites(const std::string& tpl) {
  int n = 0;
  for (std::size_t p = tpl.find("(*)"); p != std::string::npos; p = tpl.find("(*)", p + 3)) ++n;
  return n;
}

std::string shift_ring_digits(const std::string& s, int by) {
  std::string out;
  for (char c : s) out += (c >= '1' && c <= '9') ? static_cast<char>('0' + (c - '0') + by) : c;
  return out;
}

// Replaces the sites of `tpl`; site `skip` is dropped, site `link` gets `link_text`.
std::string fill_sites(const std::string& tpl, Rng& rng, double sub_rate, int skip, int link, const std::string& link_text) {
  std::string out;
  int site = 0;
  std::size_t pos = 0;
  for (std::size_t p = tpl.find("(*)"); p != std::string::npos; p = tpl.find("(*)", pos)) {
    out += tpl.substr(pos, p - pos);
    if (site == link) {
      out += "(" + link_text + ")";
    } else if (site != skip && rng.bernoulli(sub_rate)) {
      out += "(" + pick(kSubstituents, rng) + ")";
    }
    pos = p + 3;
    ++site;
  }
  out += tpl.substr(pos);
  return out;
}

std::string acyclic(Rng& rng) {
  const int length = 2 + static_cast<int>(rng.below(9));
  std::string s = rng.bernoulli(0.15) ? "C=C" : "C";
  for (int i = 1; i < length; ++i) {
    s += "C";
    if (i < length - 1 && rng.bernoulli(0.2)) s += rng.bernoulli(0.7) ? "(C)" : "(CC)";
  }
  return s + pick(kChainGroups, rng);
}

std::string ring_molecule(Rng& rng, const SynthConfig& cfg) {
  const std::string& a = pick(kRings, rng);
  const int sites_a = count_sites(a);
  if (!rng.bernoulli(cfg.link_rate)) return fill_sites(a, rng, cfg.substituent_rate, -1, -1, "");
  const std::string b = shift_ring_digits(pick(kRings, rng), 2);
  const std::string b_filled = fill_sites(b, rng, cfg.substituent_rate * 0.5, 0, -1, "");
  const int link = static_cast<int>(rng.below(static_cast<std::uint64_t>(sites_a)));
  return fill_sites(a, rng, cfg.substituent_rate * 0.5, -1, link, pick(kLinkers, rng) + b_filled);
}

const std::vector<std::string> kVpUnits = {"Pa", "kPa", "mmHg", "atm", "bar", "hPa"};
const std::vector<std::string> kAirUnits = {"mg/m3", "ug/m3", "ppm", "ppb"};
const std::vector<std::string> kWaterUnits = {"ug/L", "ng/L", "mg/L"};

}  // namespace

SynthCorpus generate_synthetic(std::uint64_t seed, const SynthConfig& cfg) {
  if (cfg.n_molecules < 50) fail(ErrorCode::InvalidArgument, "synthetic corpus needs at least 50 molecules");
  if (cfg.min_temps < 1 || cfg.max_temps < cfg.min_temps || !(cfg.t_hi > cfg.t_lo))
    fail(ErrorCode::InvalidArgument, "bad temperature settings");

  Rng rng(seed);
  SynthCorpus out;
  std::set<std::string> seen;
  const long max_attempts = 400L * cfg.n_molecules;
  long attempts = 0;

  auto add_record = [&](RawRecord r) {
    r.row = out.records.size() + 1;
    out.records.push_back(std::move(r));
  };

  while (static_cast<int>(out.truth.size()) < cfg.n_molecules) {
    if (++attempts > max_attempts)
      fail(ErrorCode::InvalidArgument, "grammar cannot produce " + std::to_string(cfg.n_molecules) + " distinct molecules");
    const std::string smi = rng.bernoulli(cfg.acyclic_rate) ? acyclic(rng) : ring_molecule(rng, cfg);
    Molecule mol = parse_smiles(smi);
    if (mol.heavy_atom_count() > cfg.max_heavy || mol.heavy_atom_count() < 2) continue;
    if (!seen.insert(mol.canonical_key).second) continue;

    SynthTruth t;
    t.smiles = smi;
    t.key = mol.canonical_key;
    t.stats = synth_stats(mol);
    const double mass = mol.molar_mass();

    bool has_vp = rng.bernoulli(cfg.vp_rate);
    const bool has_op = rng.bernoulli(cfg.op_rate);
    if (!has_vp && !has_op) has_vp = true;

    if (has_vp) {
      const int n_t = cfg.min_temps + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.max_temps - cfg.min_temps + 1)));
      std::set<long> used;
      while (static_cast<int>(t.temperatures.size()) < n_t) {
        const double T = std::round(rng.uniform(cfg.t_lo, cfg.t_hi) * 10.0) / 10.0;
        if (!used.insert(std::lround(T * 10.0)).second) continue;
        t.temperatures.push_back(T);
        const double y = planted_vp(t.stats, T) + cfg.sigma_vp * rng.normal();
        const std::string& unit = pick(kVpUnits, rng);
        RawRecord r;
        r.smiles = smi;
        r.endpoint = Endpoint::VP;
        r.unit = unit;
        r.value = std::pow(10.0, y - harmonize_vp(1.0, unit));
        r.temperature_K = T;
        add_record(std::move(r));
      }
    }

    if (has_op) {
      const double u = rng.uniform();
      const bool both = u < cfg.both_rate;
      const bool water_only = !both && u < cfg.both_rate + cfg.water_rate;
      const bool air = !water_only;
      const bool water = both || water_only;
      for (int m = 0; m < 2; ++m) {
        const bool on = m == 0 ? air : water;
        if (!on) continue;
        const Medium medium = m == 0 ? Medium::Air : Medium::Water;
        const double clean = m == 0 ? planted_oa(t.stats) : planted_ow(t.stats);
        const int reports = rng.bernoulli(cfg.duplicate_rate) ? 2 + static_cast<int>(rng.below(2)) : 1;
        std::vector<double> labels;
        bool corrupted = false;
        for (int k = 0; k < reports; ++k) {
          const double y = clean + cfg.sigma_op * rng.normal();
          labels.push_back(y);
          double written = y;
          if (rng.bernoulli(cfg.corrupt_op_rate)) {
            written += (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(cfg.corrupt_lo, cfg.corrupt_hi);
            corrupted = true;
          }
          const std::string& unit = pick(m == 0 ? kAirUnits : kWaterUnits, rng);
          RawRecord r;
          r.smiles = smi;
          r.endpoint = m == 0 ? Endpoint::OA : Endpoint::OW;
          r.medium = medium;
          r.unit = unit;
          r.value = std::pow(10.0, written - harmonize_op(1.0, unit, medium, mass));
          add_record(std::move(r));
        }
        const double label = median(labels);
        if (m == 0) {
          t.oa_label = label;
          t.oa_corrupted = corrupted;
        } else {
          t.ow_label = label;
          t.ow_corrupted = corrupted;
        }
      }
    }
    out.truth.push_back(std::move(t));
  }
  return out;
}

}  // namespace vpg
