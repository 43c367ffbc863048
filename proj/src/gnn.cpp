#include "vpg/gnn.hpp"

#include <cmath>
#include <cstring>

#include "vpg/error.hpp"

namespace vpg {

using ad::Var;

const char* to_string(Backbone b) { return b == Backbone::GINE ? "gine" : "pna"; }

Backbone parse_backbone(std::string_view s) {
  std::string l = to_lower(s);
  if (l == "gine") return Backbone::GINE;
  if (l == "pna") return Backbone::PNA;
  fail(ErrorCode::ConfigError, "unknown backbone '" + std::string(s) + "' (expected gine or pna)");
}

const char* to_string(Head h) {
  switch (h) {
    case Head::VP: return "vp";
    case Head::OA: return "oa";
    case Head::OW: return "ow";
  }
  return "vp";
}

// --- config ------------------------------------------------------------------------

bool ModelConfig::has_head(Head h) const {
  switch (h) {
    case Head::VP: return head_vp;
    case Head::OA: return head_oa;
    case Head::OW: return head_ow;
  }
  return false;
}

void ModelConfig::validate() const {
  if (!head_vp && !head_oa && !head_ow) fail(ErrorCode::ConfigError, "at least one head must be enabled");
  if (n_layers < 1) fail(ErrorCode::ConfigError, "n_layers must be >= 1");
  if (hidden < 1) fail(ErrorCode::ConfigError, "hidden must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail(ErrorCode::ConfigError, "dropout must lie in [0, 1)");
  if (fp_concat && (fp_bits <= 0 || (fp_bits & (fp_bits - 1)) != 0))
    fail(ErrorCode::ConfigError, "fp_bits must be a power of two");
  if (backbone == Backbone::PNA) {
    if (pna_aggregators.empty() || pna_scalers.empty())
      fail(ErrorCode::ConfigError, "PNA needs at least one aggregator and one scaler");
    for (const auto& a : pna_aggregators)
      if (a != "mean" && a != "max" && a != "min" && a != "std" && a != "sum")
        fail(ErrorCode::ConfigError, "unknown PNA aggregator '" + a + "'");
    for (const auto& s : pna_scalers)
      if (s != "identity" && s != "amplification" && s != "attenuation")
        fail(ErrorCode::ConfigError, "unknown PNA scaler '" + s + "'");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"backbone", to_string(backbone)},
          {"n_layers", n_layers},
          {"hidden", hidden},
          {"dropout", dropout},
          {"residual", residual},
          {"heads", {{"vp", head_vp}, {"oa", head_oa}, {"ow", head_ow}}},
          {"fp_concat", fp_concat},
          {"fp_bits", fp_bits},
          {"bn_momentum", bn_momentum},
          {"bn_eps", bn_eps},
          {"pna_aggregators", pna_aggregators},
          {"pna_scalers", pna_scalers}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.backbone = parse_backbone(j.at("backbone").get<std::string>());
  c.n_layers = j.at("n_layers").get<int>();
  c.hidden = j.at("hidden").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.residual = j.at("residual").get<bool>();
  c.head_vp = j.at("heads").at("vp").get<bool>();
  c.head_oa = j.at("heads").at("oa").get<bool>();
  c.head_ow = j.at("heads").at("ow").get<bool>();
  c.fp_concat = j.at("fp_concat").get<bool>();
  c.fp_bits = j.at("fp_bits").get<int>();
  c.bn_momentum = j.at("bn_momentum").get<double>();
  c.bn_eps = j.at("bn_eps").get<double>();
  c.pna_aggregators = j.at("pna_aggregators").get<std::vector<std::string>>();
  c.pna_scalers = j.at("pna_scalers").get<std::vector<std::string>>();
  return c;
}

// --- parameters ----------------------------------------------------------------------

ad::Parameter* ParamStore::uniform(const std::string& name, int rows, int cols, double bound, std::uint64_t seed) {
  if (by_name_.count(name)) fail(ErrorCode::InvalidArgument, "duplicate parameter '" + name + "'");
  Rng rng(seed ^ fnv1a64(name));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  params_.emplace_back(name, std::move(m));
  by_name_[name] = &params_.back();
  return &params_.back();
}

ad::Parameter* ParamStore::constant(const std::string& name, int rows, int cols, double value) {
  if (by_name_.count(name)) fail(ErrorCode::InvalidArgument, "duplicate parameter '" + name + "'");
  params_.emplace_back(name, Matrix::Constant(rows, cols, value));
  by_name_[name] = &params_.back();
  return &params_.back();
}

ad::Parameter* ParamStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) fail(ErrorCode::MissingKey, "no parameter '" + name + "'");
  return it->second;
}

std::vector<ad::Parameter*> ParamStore::all() const {
  std::vector<ad::Parameter*> out;
  for (const auto& [n, p] : by_name_) out.push_back(p);
  return out;
}

std::vector<ad::Parameter*> ParamStore::matching(const std::function<bool(const std::string&)>& pred) const {
  std::vector<ad::Parameter*> out;
  for (const auto& [n, p] : by_name_)
    if (pred(n)) out.push_back(p);
  return out;
}

// --- building blocks -------------------------------------------------------------------

Linear::Linear(ParamStore& ps, const std::string& name, int in, int out, std::uint64_t seed) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in));
  W = ps.uniform(name + ".W", in, out, bound, seed);
  b = ps.uniform(name + ".b", 1, out, bound, seed);
}

Var Linear::operator()(ad::Tape& t, const Var& x) const {
  return ad::add_row(ad::matmul(x, t.parameter(*W)), t.parameter(*b));
}

BatchNorm::BatchNorm(ParamStore& ps, const std::string& name_, int width, double momentum_, double eps_)
    : name(name_), momentum(momentum_), eps(eps_) {
  gamma = ps.constant(name + ".gamma", 1, width, 1.0);
  beta = ps.constant(name + ".beta", 1, width, 0.0);
  running_mean = Matrix::Zero(1, width);
  running_var = Matrix::Ones(1, width);
}

Var BatchNorm::operator()(ad::Tape& t, const Var& x, bool train) {
  if (!train) return ad::batch_norm_eval(x, t.parameter(*gamma), t.parameter(*beta), running_mean, running_var, eps);
  Matrix mu, var;
  Var y = ad::batch_norm_train(x, t.parameter(*gamma), t.parameter(*beta), eps, &mu, &var);
  double n = static_cast<double>(x.rows());
  Matrix unbiased = n > 1 ? Matrix(var * (n / (n - 1.0))) : var;
  running_mean = (1.0 - momentum) * running_mean + momentum * mu;
  running_var = (1.0 - momentum) * running_var + momentum * unbiased;
  return y;
}

namespace {

Var dropout(ad::Tape&, const Var& x, GraphContext& ctx) {
  if (!ctx.train || ctx.dropout <= 0.0) return x;
  if (!ctx.rng) fail(ErrorCode::InvalidArgument, "train-mode dropout needs an RNG");
  const double keep = 1.0 - ctx.dropout;
  Matrix mask(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = ctx.rng->bernoulli(keep) ? 1.0 / keep : 0.0;
  return ad::mul_const(x, mask);
}

Var messages(ad::Tape& t, const Linear& lin, const Var& h, const GraphContext& ctx) {
  Var hu = ad::gather_rows(h, ctx.batch->src);
  return ad::relu(lin(t, ad::concat_cols({hu, ctx.edge_attr})));
}

Var finish_layer(ad::Tape& t, const Var& h, const Var& out, BatchNorm& bn, bool residual, GraphContext& ctx) {
  Var y = ad::relu(bn(t, out, ctx.train));
  if (residual) y = ad::add(h, y);
  return dropout(t, y, ctx);
}

}  // namespace

GineLayer::GineLayer(ParamStore& ps, const std::string& name, int hidden, const ModelConfig& cfg, std::uint64_t seed)
    : psi(ps, name + ".psi", hidden + kBondDim, hidden, seed),
      eps(ps.constant(name + ".eps", 1, 1, 0.0)),
      mlp1(ps, name + ".mlp1", hidden, hidden, seed),
      mlp2(ps, name + ".mlp2", hidden, hidden, seed),
      bn(ps, name + ".bn", hidden, cfg.bn_momentum, cfg.bn_eps),
      residual(cfg.residual) {}

Var GineLayer::operator()(ad::Tape& t, const Var& h, GraphContext& ctx) {
  if (h.cols() != psi.W->value.rows() - kBondDim) fail(ErrorCode::ShapeMismatch, "GINE input width mismatch");
  const int n = static_cast<int>(h.rows());
  Var agg = ad::segment_reduce(messages(t, psi, h, ctx), ctx.batch->dst, n, ad::Reduce::Sum);
  Var self = ad::scale_by(h, ad::add_scalar(t.parameter(*eps), 1.0));
  Var out = mlp2(t, ad::relu(mlp1(t, ad::add(self, agg))));
  return finish_layer(t, h, out, bn, residual, ctx);
}

std::vector<double> pna_scaler_weights(std::span<const double> degree, const std::string& scaler, double delta) {
  std::vector<double> w(degree.size(), 1.0);
  if (scaler == "identity") return w;
  for (std::size_t i = 0; i < degree.size(); ++i) {
    double l = std::log(std::max(degree[i], 1.0) + 1.0);
    w[i] = scaler == "amplification" ? l / delta : delta / l;
  }
  return w;
}

PnaLayer::PnaLayer(ParamStore& ps, const std::string& name, int hidden, const ModelConfig& cfg, double delta_,
                   std::uint64_t seed)
    : phi(ps, name + ".phi", hidden + kBondDim, hidden, seed),
      post1(ps, name + ".post1",
            hidden * (1 + static_cast<int>(cfg.pna_aggregators.size() * cfg.pna_scalers.size())), hidden, seed),
      post2(ps, name + ".post2", hidden, hidden, seed),
      bn(ps, name + ".bn", hidden, cfg.bn_momentum, cfg.bn_eps),
      scalers(cfg.pna_scalers),
      delta(delta_),
      residual(cfg.residual) {
  if (!(delta > 0.0)) throw Error(ErrorCode::ZeroDeltaError, "PNA degree constant must be positive, got " + format_double(delta));
  for (const auto& a : cfg.pna_aggregators) {
    use_std.push_back(a == "std");
    aggregators.push_back(a == "max" ? ad::Reduce::Max
                                     : a == "min" ? ad::Reduce::Min : a == "sum" ? ad::Reduce::Sum : ad::Reduce::Mean);
  }
}

Var PnaLayer::operator()(ad::Tape& t, const Var& h, GraphContext& ctx) {
  if (h.cols() != phi.W->value.rows() - kBondDim) fail(ErrorCode::ShapeMismatch, "PNA input width mismatch");
  const int n = static_cast<int>(h.rows());
  Var msg = messages(t, phi, h, ctx);
  std::vector<Var> parts{h};
  std::vector<std::vector<double>> weights;
  for (const auto& s : scalers) weights.push_back(pna_scaler_weights(ctx.batch->in_degree, s, delta));
  for (std::size_t a = 0; a < aggregators.size(); ++a) {
    Var agg = use_std[a] ? ad::segment_std(msg, ctx.batch->dst, n) : ad::segment_reduce(msg, ctx.batch->dst, n, aggregators[a]);
    for (std::size_t s = 0; s < scalers.size(); ++s)
      parts.push_back(scalers[s] == "identity" ? agg : ad::row_scale(agg, weights[s]));
  }
  Var out = post2(t, ad::relu(post1(t, ad::concat_cols(parts))));
  return finish_layer(t, h, out, bn, residual, ctx);
}

// --- model -------------------------------------------------------------------------

Model::Model(const ModelConfig& cfg, double pna_delta, std::uint64_t seed) : cfg_(cfg), delta_(pna_delta) {
  cfg_.validate();
  const int h = cfg_.hidden;
  input_ = Linear(params_, "input", kAtomDim, h, seed);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    std::string name = "layer" + std::to_string(l);
    if (cfg_.backbone == Backbone::GINE) gine_.emplace_back(params_, name, h, cfg_, seed);
    else pna_.emplace_back(params_, name, h, cfg_, delta_, seed);
  }
  fuse1_ = Linear(params_, "fusion.0", h + 1, h, seed);
  fuse2_ = Linear(params_, "fusion.1", h, h, seed);
  if (cfg_.head_vp) heads_[Head::VP] = Linear(params_, "head.vp", h + (cfg_.fp_concat ? cfg_.fp_bits : 0), 1, seed);
  if (cfg_.head_oa) heads_[Head::OA] = Linear(params_, "head.oa", h, 1, seed);
  if (cfg_.head_ow) heads_[Head::OW] = Linear(params_, "head.ow", h, 1, seed);
}

Var Model::fuse(ad::Tape& t, const Var& pooled_rows, const Var& t_col) const {
  return fuse2_(t, ad::relu(fuse1_(t, ad::concat_cols({pooled_rows, t_col}))));
}

ModelOutput Model::forward(ad::Tape& t, const GraphBatch& batch, bool train, Rng* rng, const ForwardOptions& opts) {
  if (batch.x.cols() != kAtomDim || batch.e.cols() != kBondDim) fail(ErrorCode::ShapeMismatch, "batch feature widths");
  GraphContext ctx;
  ctx.batch = &batch;
  ctx.edge_attr = t.constant(batch.e);
  ctx.train = train;
  ctx.rng = rng;
  ctx.dropout = cfg_.dropout;

  Var h = input_(t, t.constant(batch.x));
  for (auto& l : gine_) h = l(t, h, ctx);
  for (auto& l : pna_) h = l(t, h, ctx);

  ModelOutput out;
  out.pooled = ad::segment_reduce(h, batch.node_graph, batch.n_graphs, ad::Reduce::Sum);
  if (opts.vp && cfg_.head_vp && batch.vp_rows() > 0) {
    Var rows = ad::gather_rows(out.pooled, batch.vp_graph);
    Matrix tc = Eigen::Map<const Eigen::VectorXd>(batch.vp_t.data(), static_cast<Eigen::Index>(batch.vp_t.size()));
    out.z = fuse(t, rows, t.constant(std::move(tc)));
    if (cfg_.fp_concat) {
      if (batch.fp.cols() != cfg_.fp_bits) fail(ErrorCode::ShapeMismatch, "batch fingerprints missing or of the wrong width");
      out.z = ad::concat_cols({out.z, ad::gather_rows(t.constant(batch.fp), batch.vp_graph)});
    }
    out.vp = heads_.at(Head::VP)(t, out.z);
  }
  if (opts.op && (cfg_.head_oa || cfg_.head_ow)) {
    Var src = opts.detach_op ? ad::stop_gradient(out.pooled) : out.pooled;
    if (cfg_.head_oa) out.oa = heads_.at(Head::OA)(t, src);
    if (cfg_.head_ow) out.ow = heads_.at(Head::OW)(t, src);
  }
  return out;
}

std::vector<double> Model::predict(const GraphBatch& batch, Head head) {
  if (!cfg_.has_head(head)) fail(ErrorCode::MissingHead, std::string("model has no ") + to_string(head) + " head");
  ad::Tape t;
  ForwardOptions o;
  o.vp = head == Head::VP;
  o.op = head != Head::VP;
  ModelOutput out = forward(t, batch, false, nullptr, o);
  const Var& v = head == Head::VP ? out.vp : (head == Head::OA ? out.oa : out.ow);
  if (!v.valid()) return {};
  const Matrix& m = v.value();
  return std::vector<double>(m.data(), m.data() + m.size());
}

std::vector<ad::Parameter*> Model::backbone_params() const {
  return params_.matching([](const std::string& n) { return n.rfind("head.", 0) != 0; });
}

std::vector<ad::Parameter*> Model::head_params(Head h) const {
  std::string prefix = std::string("head.") + to_string(h) + ".";
  return params_.matching([&](const std::string& n) { return n.rfind(prefix, 0) == 0; });
}

std::vector<BatchNorm*> Model::all_bn() {
  std::vector<BatchNorm*> out;
  for (auto& l : gine_) out.push_back(&l.bn);
  for (auto& l : pna_) out.push_back(&l.bn);
  return out;
}

std::vector<const BatchNorm*> Model::all_bn() const {
  std::vector<const BatchNorm*> out;
  for (const auto& l : gine_) out.push_back(&l.bn);
  for (const auto& l : pna_) out.push_back(&l.bn);
  return out;
}

ModelState Model::state() const {
  ModelState s;
  for (auto* p : params_.all()) s.params[p->name] = p->value;
  for (const auto* bn : all_bn()) s.bn_stats[bn->name] = {bn->running_mean, bn->running_var};
  return s;
}

void Model::load_state(const ModelState& s) {
  for (auto* p : params_.all()) {
    auto it = s.params.find(p->name);
    if (it == s.params.end()) fail(ErrorCode::MissingKey, "checkpoint lacks parameter '" + p->name + "'");
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      fail(ErrorCode::ShapeMismatch, "checkpoint shape differs for '" + p->name + "'");
    p->value = it->second;
  }
  for (auto* bn : all_bn()) {
    auto it = s.bn_stats.find(bn->name);
    if (it == s.bn_stats.end()) fail(ErrorCode::MissingKey, "checkpoint lacks statistics for '" + bn->name + "'");
    bn->running_mean = it->second.first;
    bn->running_var = it->second.second;
  }
}

namespace {

std::uint64_t hash_matrix(std::uint64_t h, const Matrix& m) {
  h = hash_combine(h, static_cast<std::uint64_t>(m.rows()));
  h = hash_combine(h, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, m.data() + i, sizeof bits);
    h = hash_combine(h, bits);
  }
  return h;
}

}  // namespace

std::uint64_t Model::param_hash(const std::vector<std::string>& prefixes) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (auto* p : params_.all()) {
    bool keep = prefixes.empty();
    for (const auto& pre : prefixes) keep = keep || p->name.rfind(pre, 0) == 0;
    if (!keep) continue;
    h = hash_combine(h, fnv1a64(p->name));
    h = hash_matrix(h, p->value);
  }
  return h;
}

nlohmann::json ModelState::to_json() const {
  nlohmann::json j;
  j["params"] = nlohmann::json::object();
  for (const auto& [n, m] : params) j["params"][n] = ad::matrix_to_json(m);
  j["bn"] = nlohmann::json::object();
  for (const auto& [n, st] : bn_stats)
    j["bn"][n] = {{"running_mean", ad::matrix_to_json(st.first)}, {"running_var", ad::matrix_to_json(st.second)}};
  return j;
}

ModelState ModelState::from_json(const nlohmann::json& j) {
  ModelState s;
  for (auto it = j.at("params").begin(); it != j.at("params").end(); ++it) s.params[it.key()] = ad::matrix_from_json(it.value());
  for (auto it = j.at("bn").begin(); it != j.at("bn").end(); ++it)
    s.bn_stats[it.key()] = {ad::matrix_from_json(it.value().at("running_mean")),
                            ad::matrix_from_json(it.value().at("running_var"))};
  return s;
}

std::uint64_t ModelState::hash() const {
  std::uint64_t h = 0x51ed270b27c0ffeeULL;
  for (const auto& [n, m] : params) h = hash_matrix(hash_combine(h, fnv1a64(n)), m);
  for (const auto& [n, st] : bn_stats) h = hash_matrix(hash_matrix(hash_combine(h, fnv1a64(n)), st.first), st.second);
  return h;
}

}  // namespace vpg
