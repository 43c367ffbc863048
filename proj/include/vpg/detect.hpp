#pragma once

// Scenario physics: vapor pressure to near-source air concentration,
// psychometric detection probability and C_air/C50 ranking.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vpg {

inline constexpr double kGasConstant = 8.314;  // J/(mol K)

enum class PartitionMode { Raoult, Henry };

struct Scenario {
  double T = 298.15;        // K
  double P_tot = 101325.0;  // Pa
  PartitionMode mode = PartitionMode::Raoult;
  double x = 1.0;  // liquid mole fraction (raoult)
  double a = 1.0;  // activity (henry)
  double H = 0.0;  // Henry constant, Pa (henry)
  std::optional<double> gamma;  // psychometric slope; required for ranking
  std::string name;
};

/// Throws InvalidScenario when T, P_tot, x, a or H are out of range.
void validate(const Scenario& s);
/// mol/m3. raoult: x P*/(RT); henry: a P_tot/(H RT).
double c_air(double p_star_pa, const Scenario& s);

Scenario parse_scenario_toml(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

struct Psychometric {
  double c50 = 1.0;
  double gamma = 1.0;
};
/// 1 / (1 + (C50/C)^gamma); 0 at C = 0.
double p_detect(double c, const Psychometric& psych);

struct CompoundPrediction {
  std::string key;
  double log10_vp_pa = 0.0;
  double log10_c50 = 0.0;
  std::string c50_unit = "mg/m3";     // "mg/m3" (air basis) or "mol/m3"
  std::optional<double> molar_mass;  // g/mol, needed for mg/m3
};

struct DetectRow {
  std::string key;
  double c_air = 0.0;  // mol/m3
  double c50 = 0.0;    // mol/m3
  double ratio = 0.0;
  double p_detect = 0.0;
};

/// C50 converted to mol/m3. Throws UnitMismatch for a water basis, an unknown
/// unit or a mass basis without molar mass.
double c50_mol_per_m3(const CompoundPrediction& c);
/// Descending C_air/C50; ties broken by p_detect, then key.
std::vector<DetectRow> rank_detectability(const std::vector<CompoundPrediction>& compounds, const Scenario& s);

std::vector<CompoundPrediction> parse_compound_csv(const std::string& text);
std::string ranking_csv(const std::vector<DetectRow>& rows);

}  // namespace vpg
