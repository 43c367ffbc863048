#include <cmath>
#include <functional>
#include <optional>

#include "doctest.h"
#include "vpg/detect.hpp"
#include "vpg/error.hpp"
#include "vpg/util.hpp"

using namespace vpg;

namespace {

std::optional<ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

Scenario neat(double T = 298.15) {
  Scenario s;
  s.T = T;
  s.gamma = 2.0;
  return s;
}

}  // namespace

TEST_CASE("c_air: Raoult examples") {
  CHECK(c_air(0.0, neat()) == 0.0);
  const double c = c_air(101325.0, neat());
  CHECK(c == doctest::Approx(101325.0 / (8.314 * 298.15)).epsilon(1e-14));
  CHECK(std::abs(c - 40.87) < 0.01);
  CHECK(c_air(5000.0, neat(600.0)) == doctest::Approx(c_air(5000.0, neat(300.0)) / 2.0).epsilon(1e-14));

  // linear in x and P*, independent of P_tot
  Scenario s = neat();
  s.x = 0.25;
  CHECK(c_air(2000.0, s) == doctest::Approx(0.25 * c_air(2000.0, neat())).epsilon(1e-14));
  CHECK(c_air(4000.0, s) == doctest::Approx(2.0 * c_air(2000.0, s)).epsilon(1e-14));
  s.P_tot = 50000.0;
  CHECK(c_air(2000.0, s) == doctest::Approx(0.25 * c_air(2000.0, neat())).epsilon(1e-14));
}

TEST_CASE("c_air: Henry mode") {
  Scenario s;
  s.mode = PartitionMode::Henry;
  s.a = 0.01;
  s.H = 2.0e5;
  const double expected = 0.01 * 101325.0 / (2.0e5 * 8.314 * 298.15);
  CHECK(c_air(123.0, s) == doctest::Approx(expected).epsilon(1e-14));
  s.H = 1.0e5;
  CHECK(c_air(123.0, s) == doctest::Approx(2.0 * expected).epsilon(1e-14));
}

TEST_CASE("invalid scenarios") {
  auto with = [](auto edit) {
    Scenario s = neat();
    edit(s);
    return code_of([&] { c_air(100.0, s); });
  };
  CHECK(with([](Scenario& s) { s.T = 0.0; }) == ErrorCode::InvalidScenario);
  CHECK(with([](Scenario& s) { s.P_tot = -1.0; }) == ErrorCode::InvalidScenario);
  CHECK(with([](Scenario& s) { s.x = 1.5; }) == ErrorCode::InvalidScenario);
  CHECK(with([](Scenario& s) { s.gamma = 0.0; }) == ErrorCode::InvalidScenario);
  CHECK(with([](Scenario& s) {
          s.mode = PartitionMode::Henry;
          s.H = 0.0;
        }) == ErrorCode::InvalidScenario);
  CHECK(code_of([] { c_air(-1.0, neat()); }) == ErrorCode::InvalidScenario);
}

TEST_CASE("p_detect") {
  CHECK(p_detect(3.0, {3.0, 1.7}) == 0.5);
  CHECK(p_detect(0.0, {3.0, 1.7}) == 0.0);
  CHECK(p_detect(2.0, {1.0, 2.0}) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p_detect(1e12, {1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(code_of([] { p_detect(1.0, {0.0, 1.0}); }) == ErrorCode::InvalidScenario);
  CHECK(code_of([] { p_detect(1.0, {1.0, -2.0}); }) == ErrorCode::InvalidScenario);

  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const double c50 = std::pow(10.0, rng.uniform(-6, 2));
    const double g = rng.uniform(0.2, 4.0);
    const double c1 = c50 * std::pow(10.0, rng.uniform(-3, 3));
    const double c2 = c1 * (1.0 + rng.uniform(0.01, 1.0));
    const double p1 = p_detect(c1, {c50, g}), p2 = p_detect(c2, {c50, g});
    CHECK(p1 >= 0.0);
    CHECK(p2 <= 1.0);
    CHECK(p1 <= p2);
    if (c1 > c50 * 1.01 && p1 < 1.0 - 1e-9) CHECK(p_detect(c1, {c50, g * 1.5}) > p1);
  }
}

TEST_CASE("rank_detectability") {
  Scenario s = neat();
  std::vector<CompoundPrediction> pair{{"low", 2.0, -3.0, "mol/m3", std::nullopt},
                                       {"high", 3.0, -3.0, "mol/m3", std::nullopt}};
  auto r = rank_detectability(pair, s);
  REQUIRE(r.size() == 2);
  CHECK(r[0].key == "high");
  CHECK(r[0].ratio == doctest::Approx(10.0 * r[1].ratio));

  // high VP but a much higher threshold loses to a moderate VP with a low one
  std::vector<CompoundPrediction> flip{{"volatile", 4.0, 1.0, "mg/m3", 100.0},
                                       {"potent", 2.0, -4.0, "mg/m3", 100.0}};
  r = rank_detectability(flip, s);
  CHECK(r[0].key == "potent");
  CHECK(r[1].c_air > r[0].c_air);
  CHECK(r[0].p_detect > r[1].p_detect);
  CHECK(r[1].c50 == doctest::Approx(10.0 * 1e-3 / 100.0));

  CHECK(rank_detectability({pair[0]}, s).size() == 1);

  std::vector<CompoundPrediction> water{{"w", 2.0, 1.0, "ug/L", 100.0}};
  CHECK(code_of([&] { rank_detectability(water, s); }) == ErrorCode::UnitMismatch);
  std::vector<CompoundPrediction> no_mass{{"m", 2.0, 1.0, "mg/m3", std::nullopt}};
  CHECK(code_of([&] { rank_detectability(no_mass, s); }) == ErrorCode::UnitMismatch);
  s.gamma.reset();
  CHECK(code_of([&] { rank_detectability(pair, s); }) == ErrorCode::InvalidScenario);
}

TEST_CASE("scenario TOML") {
  const auto s = parse_scenario_toml(R"([scenario]
name = "kitchen"
T = 310.0
P_tot = 100000.0
mode = "raoult"
x = 0.05
gamma = 2.5
)");
  CHECK(s.name == "kitchen");
  CHECK(s.T == 310.0);
  CHECK(s.x == 0.05);
  REQUIRE(s.gamma);
  CHECK(*s.gamma == 2.5);
  const auto h = parse_scenario_toml("mode = \"henry\"\nH = 5e4\na = 0.2\n");
  CHECK(h.mode == PartitionMode::Henry);
  CHECK(!h.gamma);
  CHECK(code_of([] { parse_scenario_toml("mode = \"fog\"\n"); }) == ErrorCode::InvalidScenario);
  CHECK(code_of([] { parse_scenario_toml("T = -4.0\n"); }) == ErrorCode::InvalidScenario);
  CHECK(code_of([] { parse_scenario_toml("T = \"warm\"\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_scenario_toml("T = = 3\n"); }) == ErrorCode::ConfigError);
}

TEST_CASE("compound CSV and ranking CSV") {
  const auto cs = parse_compound_csv(
      "molecule_key,log10_vp_pa,log10_c50,c50_unit,molar_mass\n"
      "a,3.5,-1,mg/m3,88.1\n"
      "b,1.0,-5,mol/m3,\n");
  REQUIRE(cs.size() == 2);
  CHECK(cs[0].molar_mass == 88.1);
  CHECK(!cs[1].molar_mass);
  Scenario s = neat();
  const auto text = ranking_csv(rank_detectability(cs, s));
  CHECK(text.rfind("rank,molecule_key,c_air_mol_m3,c50_mol_m3,ratio,p_detect\n", 0) == 0);
  CHECK(code_of([] { parse_compound_csv("molecule_key,log10_vp_pa,log10_c50,c50_unit\nx,abc,1,mol/m3\n"); }) ==
        ErrorCode::FormatError);
}
