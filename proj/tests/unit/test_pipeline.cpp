#include <filesystem>
#include <functional>
#include <optional>
#include <set>

#include "doctest.h"
#include "vpg/config.hpp"
#include "vpg/csv.hpp"
#include "vpg/error.hpp"
#include "vpg/pipeline.hpp"
#include "vpg/synthdata.hpp"
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

// Every leaf path of a JSON object ("a.b.c").
void leaf_paths(const nlohmann::json& j, const std::string& prefix, std::set<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string p = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) leaf_paths(*it, p, out);
    else out.insert(p);
  }
}

RunConfig tiny_config() {
  RunConfig c = parse_config_toml(R"(
[model]
hidden = 16
n_layers = 2
fp_bits = 256
[prepare]
fp_bits = 256
[schedule]
max_epochs = 4
e0 = 1
e_warm = 2
[eval]
replicates = 50
)");
  return c;
}

}  // namespace

TEST_CASE("defaults.toml mirrors the compiled defaults") {
  const auto text = read_text_file(std::filesystem::path(VPG_SOURCE_DIR) / "config" / "defaults.toml");
  std::set<std::string> file_keys, builtin_keys;
  leaf_paths(toml_to_json(text), "", file_keys);
  leaf_paths(RunConfig{}.to_json(), "", builtin_keys);
  CHECK(file_keys == builtin_keys);
  CHECK(parse_config_toml(text).to_json() == RunConfig{}.to_json());
  CHECK(parse_config_toml(text).hash() == RunConfig{}.hash());
}

TEST_CASE("config overrides and errors") {
  const auto c = parse_config_toml("[model]\nbackbone = \"gine\"\nhidden = 32\n[prepare]\nop_winsor_alpha = 0.05\n");
  CHECK(c.model.backbone == Backbone::GINE);
  CHECK(c.model.hidden == 32);
  CHECK(c.model.n_layers == RunConfig{}.model.n_layers);
  REQUIRE(c.prepare.op_winsor_alpha);
  CHECK(*c.prepare.op_winsor_alpha == 0.05);
  CHECK(!c.prepare.vp_winsor_alpha);
  CHECK(c.hash() != RunConfig{}.hash());
  CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());

  CHECK(code_of([] { parse_config_toml("[model]\nwidth = 3\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("[modle]\nhidden = 3\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("[model]\nhidden = \"big\"\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("[model]\nhidden = 3.5\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("[model]\nbackbone = \"gcn\"\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("[split]\nratio = [0.5, 0.1, 0.1]\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("[split]\nseed = -1\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("[schedule]\npatience_vp = 0\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("[prepare]\nop_winsor_alpha = 0.7\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { parse_config_toml("model = [\n"); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { load_config("/nonexistent/run.toml"); }) == ErrorCode::ConfigError);
}

TEST_CASE("pipeline: split, train, export, re-evaluate") {
  SynthConfig sc;
  sc.n_molecules = 80;
  const auto syn = generate_synthetic(11, sc);
  const Corpus corpus = build_corpus(syn.records);
  const RunConfig cfg = tiny_config();

  const auto split = split_corpus(corpus, cfg.split);
  CHECK(split.diagnostics.identity_overlap == 0);
  CHECK(split.diagnostics.scaffold_overlap == 0);

  const auto run = run_training(corpus, split.assignment, cfg, 3);
  CHECK(run.result.epochs_run == 4);
  CHECK(run.vp.size() > 0);
  CHECK(run.op.size() > 0);
  CHECK(run.compounds.size() == corpus.molecules.size());
  CHECK(run.max_sim.size() == split.assignment.keys_in(Fold::Val).size() + split.assignment.keys_in(Fold::Test).size());
  CHECK(run.metrics.vp.count("test") == 1);

  const auto dir = std::filesystem::temp_directory_path() / "vpg_pipeline_test";
  std::filesystem::remove_all(dir);
  const auto hashes = write_run(run, dir / "a");
  for (const auto& [name, h] : hashes) CHECK(file_hash(dir / "a" / name) == h);

  // checkpoints carry optimizer and RNG state alongside the weights
  const auto ck = nlohmann::json::parse(read_text_file(dir / "a" / "checkpoint_final.json"));
  CHECK(ck["epoch"] == run.result.epochs_run - 1);
  CHECK(ck["step"].get<long>() > 0);
  ad::Adam adam;
  adam.from_json(ck["optimizer"]);
  CHECK(adam.to_json() == ck["optimizer"]);
  Rng resumed;
  resumed.set_state(ck["rng_state"].get<std::string>());
  Rng original;
  original.set_state(run.result.final.rng_state);
  CHECK(resumed.next_u64() == original.next_u64());
  const auto ck_vp = nlohmann::json::parse(read_text_file(dir / "a" / "checkpoint_vp.json"));
  CHECK(ck_vp["epoch"] == run.result.vp.epoch);
  CHECK(ck_vp["step"].get<long>() <= ck["step"].get<long>());

  // identical inputs give identical files
  const auto again = write_run(run_training(corpus, split.assignment, cfg, 3), dir / "b");
  CHECK(again == hashes);

  // predictions survive the CSV round trip, so re-evaluation reproduces the metrics
  const auto back = parse_vp_predictions(read_text_file(dir / "a" / "predictions_vp.csv"));
  REQUIRE(back.size() == run.vp.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].y_pred_std == run.vp[i].y_pred_std);
    CHECK(back[i].fold == run.vp[i].fold);
  }
  const auto ev = evaluate_run(dir / "a", cfg.eval.replicates, cfg.eval.seed);
  CHECK(ev.metrics.to_json() == run.metrics.to_json());
  CHECK(ev.parity.rfind("molecule_key,temperature_K,y_true,y_pred,fold,max_sim\n", 0) == 0);
  std::size_t binned = 0;
  for (const auto& b : ev.metrics.vp_bins) binned += b.n;
  CHECK(binned == run.metrics.vp.at("test").n);

  // compounds feed straight into detect
  Scenario s;
  s.gamma = 2.0;
  const auto ranked = rank_detectability(parse_compound_csv(read_text_file(dir / "a" / "compounds.csv")), s);
  CHECK(ranked.size() == corpus.molecules.size());

  CHECK(code_of([&] { evaluate_run(dir / "missing", 10, 0); }) == ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}
