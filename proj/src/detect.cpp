#include "vpg/detect.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"
#include "vpg/csv.hpp"
#include "vpg/error.hpp"
#include "vpg/preprocess.hpp"
#include "vpg/util.hpp"

namespace vpg {

void validate(const Scenario& s) {
  auto bad = [](const std::string& m) { fail(ErrorCode::InvalidScenario, m); };
  if (!(s.T > 0.0) || !std::isfinite(s.T)) bad("temperature must be positive");
  if (!(s.P_tot > 0.0) || !std::isfinite(s.P_tot)) bad("total pressure must be positive");
  if (s.mode == PartitionMode::Raoult) {
    if (!(s.x >= 0.0 && s.x <= 1.0)) bad("mole fraction must lie in [0, 1]");
  } else {
    if (!(s.H > 0.0) || !std::isfinite(s.H)) bad("Henry constant must be positive");
    if (!(s.a >= 0.0) || !std::isfinite(s.a)) bad("activity must be non-negative");
  }
  if (s.gamma && !(*s.gamma > 0.0)) bad("psychometric slope must be positive");
}

double c_air(double p_star_pa, const Scenario& s) {
  validate(s);
  if (!(p_star_pa >= 0.0)) fail(ErrorCode::InvalidScenario, "vapor pressure must be non-negative");
  const double rt = kGasConstant * s.T;
  if (s.mode == PartitionMode::Raoult) {
    const double y = s.x * p_star_pa / s.P_tot;
    return y * s.P_tot / rt;
  }
  // Henry mode: the gas-phase fraction follows activity over the Henry constant
  const double y = s.a / s.H;
  return y * s.P_tot / rt;
}

Scenario parse_scenario_toml(std::string_view text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    fail(ErrorCode::ConfigError, std::string("scenario: ") + std::string(e.description()));
  }
  const toml::table* t = tbl["scenario"].as_table();
  if (!t) t = &tbl;
  auto num = [&](const char* k) -> std::optional<double> {
    const auto* n = t->get(k);
    if (!n) return std::nullopt;
    if (auto v = n->value<double>()) return *v;
    fail(ErrorCode::ConfigError, std::string("scenario: '") + k + "' must be a number");
  };
  Scenario s;
  s.name = (*t)["name"].value_or(std::string{});
  if (auto v = num("T")) s.T = *v;
  if (auto v = num("P_tot")) s.P_tot = *v;
  const std::string mode = (*t)["mode"].value_or(std::string("raoult"));
  if (mode == "raoult") s.mode = PartitionMode::Raoult;
  else if (mode == "henry") s.mode = PartitionMode::Henry;
  else fail(ErrorCode::InvalidScenario, "scenario mode must be 'raoult' or 'henry', got '" + mode + "'");
  if (auto v = num("x")) s.x = *v;
  if (auto v = num("a")) s.a = *v;
  if (auto v = num("H")) s.H = *v;
  if (auto v = num("gamma")) s.gamma = *v;
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario_toml(read_text_file(path)); }

double p_detect(double c, const Psychometric& psych) {
  if (!(psych.c50 > 0.0) || !(psych.gamma > 0.0))
    fail(ErrorCode::InvalidScenario, "psychometric C50 and slope must be positive");
  if (!(c >= 0.0)) fail(ErrorCode::InvalidArgument, "concentration must be non-negative");
  if (c == 0.0) return 0.0;
  if (c == psych.c50) return 0.5;
  return 1.0 / (1.0 + std::pow(psych.c50 / c, psych.gamma));
}

double c50_mol_per_m3(const CompoundPrediction& c) {
  const std::string u = normalize_unit(c.c50_unit);
  const double v = std::pow(10.0, c.log10_c50);
  if (u == "mol/m3") return v;
  if (u == op_basis_unit(Medium::Air)) {
    if (!c.molar_mass || !(*c.molar_mass > 0.0))
      fail(ErrorCode::UnitMismatch, c.key + ": a mass-basis threshold needs the molar mass");
    return v * 1e-3 / *c.molar_mass;
  }
  if (u == op_basis_unit(Medium::Water))
    fail(ErrorCode::UnitMismatch, c.key + ": water thresholds are not airborne concentrations");
  fail(ErrorCode::UnitMismatch, c.key + ": unsupported threshold unit '" + c.c50_unit + "'");
}

std::vector<DetectRow> rank_detectability(const std::vector<CompoundPrediction>& compounds, const Scenario& s) {
  validate(s);
  if (!s.gamma) fail(ErrorCode::InvalidScenario, "ranking needs the psychometric slope 'gamma'");
  std::vector<DetectRow> rows;
  rows.reserve(compounds.size());
  for (const auto& c : compounds) {
    DetectRow r;
    r.key = c.key;
    r.c_air = c_air(std::pow(10.0, c.log10_vp_pa), s);
    r.c50 = c50_mol_per_m3(c);
    r.ratio = r.c_air / r.c50;
    r.p_detect = p_detect(r.c_air, {r.c50, *s.gamma});
    rows.push_back(std::move(r));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const DetectRow& a, const DetectRow& b) {
    if (a.ratio != b.ratio) return a.ratio > b.ratio;
    if (a.p_detect != b.p_detect) return a.p_detect > b.p_detect;
    return a.key < b.key;
  });
  return rows;
}

std::vector<CompoundPrediction> parse_compound_csv(const std::string& text) {
  CsvTable t = parse_csv(text);
  const auto ck = t.require_column("molecule_key"), cv = t.require_column("log10_vp_pa"),
             co = t.require_column("log10_c50"), cu = t.require_column("c50_unit");
  const auto cm = t.column("molar_mass");
  std::vector<CompoundPrediction> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    CompoundPrediction c;
    c.key = row[ck];
    c.log10_vp_pa = parse_number(row[cv], "log10_vp_pa", i + 2);
    c.log10_c50 = parse_number(row[co], "log10_c50", i + 2);
    c.c50_unit = row[cu];
    if (cm && !row[*cm].empty()) c.molar_mass = parse_number(row[*cm], "molar_mass", i + 2);
    out.push_back(std::move(c));
  }
  return out;
}

std::string ranking_csv(const std::vector<DetectRow>& rows) {
  std::string out = "rank,molecule_key,c_air_mol_m3,c50_mol_m3,ratio,p_detect\n";
  int rank = 1;
  for (const auto& r : rows)
    out += csv_line({std::to_string(rank++), r.key, format_double(r.c_air), format_double(r.c50),
                     format_double(r.ratio), format_double(r.p_detect)});
  return out;
}

}  // namespace vpg
