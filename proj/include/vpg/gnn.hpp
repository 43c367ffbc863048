#pragma once

// Message-passing backbones (GINE, PNA), sum readout, temperature fusion and
// linear task heads on top of the tape in autodiff.hpp.

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/autodiff.hpp"
#include "vpg/dataset.hpp"
#include "vpg/util.hpp"

namespace vpg {

enum class Backbone { GINE, PNA };
const char* to_string(Backbone b);
Backbone parse_backbone(std::string_view s);

enum class Head { VP, OA, OW };  // OA also carries the pooled OP target
const char* to_string(Head h);

struct ModelConfig {
  Backbone backbone = Backbone::PNA;
  int n_layers = 4;
  int hidden = 128;
  double dropout = 0.1;
  bool residual = true;
  bool head_vp = true, head_oa = true, head_ow = true;
  bool fp_concat = false;
  int fp_bits = 2048;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  std::vector<std::string> pna_aggregators{"mean", "max", "min", "std"};
  std::vector<std::string> pna_scalers{"identity", "amplification", "attenuation"};

  bool has_head(Head h) const;
  void validate() const;  // throws ConfigError
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Owns named parameters with stable addresses.
class ParamStore {
 public:
  /// U(-bound, bound) from a stream keyed by (seed, name), so a parameter's
  /// initial value does not depend on which other parameters exist.
  ad::Parameter* uniform(const std::string& name, int rows, int cols, double bound, std::uint64_t seed);
  ad::Parameter* constant(const std::string& name, int rows, int cols, double value);
  ad::Parameter* get(const std::string& name) const;
  std::vector<ad::Parameter*> all() const;
  std::vector<ad::Parameter*> matching(const std::function<bool(const std::string&)>& pred) const;

 private:
  std::deque<ad::Parameter> params_;
  std::map<std::string, ad::Parameter*> by_name_;
};

struct Linear {
  ad::Parameter* W = nullptr;  // in x out
  ad::Parameter* b = nullptr;  // 1 x out
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, int in, int out, std::uint64_t seed);
  ad::Var operator()(ad::Tape& t, const ad::Var& x) const;
};

struct BatchNorm {
  std::string name;
  ad::Parameter* gamma = nullptr;
  ad::Parameter* beta = nullptr;
  Matrix running_mean, running_var;
  double momentum = 0.1, eps = 1e-5;
  BatchNorm() = default;
  BatchNorm(ParamStore& ps, const std::string& name, int width, double momentum, double eps);
  /// Train mode normalizes with batch statistics and updates the running ones.
  ad::Var operator()(ad::Tape& t, const ad::Var& x, bool train);
};

/// Per-forward context shared by the layers.
struct GraphContext {
  const GraphBatch* batch = nullptr;
  ad::Var edge_attr;  // constant E x 17
  bool train = false;
  Rng* rng = nullptr;  // dropout masks, train mode only
  double dropout = 0.0;
};

struct GineLayer {
  Linear psi;             // [h_u ; e_uv] -> h
  ad::Parameter* eps = nullptr;
  Linear mlp1, mlp2;
  BatchNorm bn;
  bool residual = true;
  GineLayer() = default;
  GineLayer(ParamStore& ps, const std::string& name, int hidden, const ModelConfig& cfg, std::uint64_t seed);
  ad::Var operator()(ad::Tape& t, const ad::Var& h, GraphContext& ctx);
};

struct PnaLayer {
  Linear phi;             // [h_u ; e_uv] -> h
  Linear post1, post2;    // [h_v ; m_v] -> h
  BatchNorm bn;
  std::vector<ad::Reduce> aggregators;
  std::vector<bool> use_std;  // parallel to aggregators: true for the composed std
  std::vector<std::string> scalers;
  double delta = 1.0;
  bool residual = true;
  PnaLayer() = default;
  PnaLayer(ParamStore& ps, const std::string& name, int hidden, const ModelConfig& cfg, double delta, std::uint64_t seed);
  ad::Var operator()(ad::Tape& t, const ad::Var& h, GraphContext& ctx);
};

/// Degree scalers for PNA: 1, log(d+1)/delta, delta/log(d+1) with d clamped to >= 1.
std::vector<double> pna_scaler_weights(std::span<const double> degree, const std::string& scaler, double delta);

struct ForwardOptions {
  bool vp = true;
  bool op = true;
  bool detach_op = false;
};

struct ModelOutput {
  ad::Var pooled;     // n_graphs x hidden
  ad::Var z;          // VP rows x (hidden [+ nbits])
  ad::Var vp;         // VP rows x 1
  ad::Var oa, ow;     // n_graphs x 1 (unset when the head is off or not requested)
};

/// Snapshot of everything a forward pass depends on.
struct ModelState {
  std::map<std::string, Matrix> params;
  std::map<std::string, std::pair<Matrix, Matrix>> bn_stats;
  nlohmann::json to_json() const;
  static ModelState from_json(const nlohmann::json& j);
  std::uint64_t hash() const;
};

class Model {
 public:
  /// `pna_delta` is the training-split mean of log(d+1); ZeroDeltaError for PNA when <= 0.
  Model(const ModelConfig& cfg, double pna_delta, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ModelOutput forward(ad::Tape& t, const GraphBatch& batch, bool train, Rng* rng, const ForwardOptions& opts = {});
  /// Inference-mode predictions of one head; MissingHead if it is not configured.
  std::vector<double> predict(const GraphBatch& batch, Head head);

  /// Fusion MLP on [pooled ; t], exposed for tests.
  ad::Var fuse(ad::Tape& t, const ad::Var& pooled_rows, const ad::Var& t_col) const;

  const ModelConfig& config() const { return cfg_; }
  double pna_delta() const { return delta_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  /// Every parameter outside the task heads (input, layers, fusion).
  std::vector<ad::Parameter*> backbone_params() const;
  std::vector<ad::Parameter*> head_params(Head h) const;

  ModelState state() const;
  void load_state(const ModelState& s);
  /// Hash of parameters whose names start with any of the prefixes (all if empty).
  std::uint64_t param_hash(const std::vector<std::string>& prefixes = {}) const;

 private:
  ModelConfig cfg_;
  double delta_;
  ParamStore params_;
  Linear input_;
  std::vector<GineLayer> gine_;
  std::vector<PnaLayer> pna_;
  Linear fuse1_, fuse2_;
  std::map<Head, Linear> heads_;
  std::vector<BatchNorm*> all_bn();
  std::vector<const BatchNorm*> all_bn() const;
};

}  // namespace vpg
