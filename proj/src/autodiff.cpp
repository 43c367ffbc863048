#include "vpg/autodiff.hpp"

#include <cmath>
#include <numbers>

#include "vpg/error.hpp"

namespace vpg::ad {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorCode::ShapeMismatch, std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                                       std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                                       std::to_string(b.cols()));
}

Tape& tape_of(const Var& v) {
  if (!v.valid()) fail(ErrorCode::InvalidArgument, "operation on an empty Var");
  return *v.tape();
}

}  // namespace

Parameter::Parameter(std::string name_, Matrix init)
    : name(std::move(name_)), value(std::move(init)), grad(Matrix::Zero(value.rows(), value.cols())) {}

void Parameter::zero_grad() {
  grad.setZero();
  touched = false;
}

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) fail(ErrorCode::ShapeMismatch, "item() on a non-scalar");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, false, false, nullptr, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Parameter& p) {
  nodes_.push_back({p.value, {}, false, true, &p, {}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Matrix value, const std::vector<Var>& inputs, Backward backward) {
  bool rg = false;
  for (const Var& v : inputs) {
    if (v.tape() != this) fail(ErrorCode::InvalidArgument, "mixing Vars from different tapes");
    rg = rg || requires_grad(v.id());
  }
  nodes_.push_back({std::move(value), {}, false, rg, nullptr, rg ? std::move(backward) : Backward{}});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

Matrix Tape::grad_of(const Var& v) const {
  const Node& n = nodes_[static_cast<std::size_t>(v.id())];
  return n.has_grad ? n.grad : Matrix();
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) fail(ErrorCode::InvalidArgument, "loss belongs to another tape");
  const Matrix& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1)
    fail(ErrorCode::NonScalarLoss, "backward() needs a 1x1 loss, got " + std::to_string(lv.rows()) + "x" +
                                       std::to_string(lv.cols()));
  for (auto& n : nodes_) {
    n.has_grad = false;
    n.grad.resize(0, 0);
  }
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.has_grad) continue;
    if (n.param) {
      n.param->grad += n.grad;
      n.param->touched = true;
    }
    if (n.backward) {
      Matrix g = n.grad;  // the closure may accumulate into earlier nodes only
      n.backward(*this, g);
    }
  }
}

// --- elementwise & linear algebra -------------------------------------------------

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  int ia = a.id(), ib = b.id();
  return tape_of(a).record(a.value() + b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  int ia = a.id(), ib = b.id();
  return tape_of(a).record(a.value() - b.value(), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "mul");
  int ia = a.id(), ib = b.id();
  Matrix out = a.value().cwiseProduct(b.value());
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    fail(ErrorCode::ShapeMismatch, "matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                                       std::to_string(b.rows()));
  int ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value();
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) fail(ErrorCode::ShapeMismatch, "add_row: row must be 1 x cols(a)");
  int ia = a.id(), ir = row.id();
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return tape_of(a).record(std::move(out), {a, row}, [ia, ir](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    if (t.requires_grad(ir)) t.accumulate(ir, g.colwise().sum());
  });
}

Var scale(const Var& a, double s) {
  int ia = a.id();
  return tape_of(a).record(a.value() * s, {a}, [ia, s](Tape& t, const Matrix& g) { t.accumulate(ia, g * s); });
}

Var add_scalar(const Var& a, double s) {
  int ia = a.id();
  Matrix out = a.value().array() + s;
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Var scale_by(const Var& a, const Var& s) {
  if (s.rows() != 1 || s.cols() != 1) fail(ErrorCode::ShapeMismatch, "scale_by: scale must be 1x1");
  int ia = a.id(), is = s.id();
  Matrix out = a.value() * s.value()(0, 0);
  return tape_of(a).record(std::move(out), {a, s}, [ia, is](Tape& t, const Matrix& g) {
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(is)(0, 0));
    if (t.requires_grad(is)) t.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(t.value(ia)).sum()));
  });
}

Var row_scale(const Var& a, std::span<const double> w) {
  if (static_cast<Eigen::Index>(w.size()) != a.rows()) fail(ErrorCode::ShapeMismatch, "row_scale: weight count");
  Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  Eigen::VectorXd wc = wv;
  int ia = a.id();
  Matrix out = wc.asDiagonal() * a.value();
  return tape_of(a).record(std::move(out), {a}, [ia, wc](Tape& t, const Matrix& g) {
    t.accumulate(ia, wc.asDiagonal() * g);
  });
}

Var mul_const(const Var& a, const Matrix& c) {
  require_same_shape(a.value(), c, "mul_const");
  int ia = a.id();
  return tape_of(a).record(a.value().cwiseProduct(c), {a}, [ia, c](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.cwiseProduct(c));
  });
}

Var relu(const Var& a) {
  int ia = a.id();
  Matrix out = a.value().cwiseMax(0.0);
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
    Matrix mask = (t.value(ia).array() > 0.0).cast<double>();
    t.accumulate(ia, g.cwiseProduct(mask));
  });
}

Var square(const Var& a) {
  int ia = a.id();
  Matrix out = a.value().array().square();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, 2.0 * g.cwiseProduct(t.value(ia)));
  });
}

Var sqrt(const Var& a) {
  int ia = a.id();
  Matrix out = a.value().array().sqrt();
  int io = static_cast<int>(tape_of(a).size());  // id of the node recorded below
  return tape_of(a).record(std::move(out), {a}, [ia, io](Tape& t, const Matrix& g) {
    t.accumulate(ia, (g.array() / (2.0 * t.value(io).array())).matrix());
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) fail(ErrorCode::ShapeMismatch, "concat_cols of nothing");
  Eigen::Index rows = parts[0].rows(), cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) fail(ErrorCode::ShapeMismatch, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> layout;
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    layout.emplace_back(p.id(), p.cols());
    c += p.cols();
  }
  return tape_of(parts[0]).record(std::move(out), parts, [layout](Tape& t, const Matrix& g) {
    Eigen::Index c0 = 0;
    for (auto [id, w] : layout) {
      if (t.requires_grad(id)) t.accumulate(id, g.middleCols(c0, w));
      c0 += w;
    }
  });
}

Var gather_rows(const Var& a, std::span<const int> index) {
  std::vector<int> idx(index.begin(), index.end());
  Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= a.rows()) fail(ErrorCode::SegmentOutOfRange, "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(idx[i]);
  }
  int ia = a.id();
  Eigen::Index rows = a.rows(), cols = a.cols();
  return tape_of(a).record(std::move(out), {a}, [ia, idx, rows, cols](Tape& t, const Matrix& g) {
    Matrix ga = Matrix::Zero(rows, cols);
    for (std::size_t i = 0; i < idx.size(); ++i) ga.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(ia, ga);
  });
}

// --- segment reductions ---------------------------------------------------------------

Var segment_reduce(const Var& values, std::span<const int> segments, int n_segments, Reduce mode) {
  const Matrix& v = values.value();
  if (static_cast<Eigen::Index>(segments.size()) != v.rows())
    fail(ErrorCode::ShapeMismatch, "segment_reduce: one segment id per row required");
  std::vector<int> seg(segments.begin(), segments.end());
  for (int s : seg)
    if (s < 0 || s >= n_segments)
      fail(ErrorCode::SegmentOutOfRange, "segment id " + std::to_string(s) + " outside [0, " +
                                             std::to_string(n_segments) + ")");
  const Eigen::Index d = v.cols();
  Matrix out = Matrix::Zero(n_segments, d);
  std::vector<double> count(static_cast<std::size_t>(n_segments), 0.0);
  for (int s : seg) count[static_cast<std::size_t>(s)] += 1.0;
  int iv = values.id();
  Eigen::Index rows = v.rows();

  if (mode == Reduce::Sum || mode == Reduce::Mean) {
    for (Eigen::Index r = 0; r < rows; ++r) out.row(seg[static_cast<std::size_t>(r)]) += v.row(r);
    if (mode == Reduce::Mean)
      for (int s = 0; s < n_segments; ++s)
        if (count[static_cast<std::size_t>(s)] > 0) out.row(s) /= count[static_cast<std::size_t>(s)];
    bool mean = mode == Reduce::Mean;
    return tape_of(values).record(std::move(out), {values}, [iv, seg, count, rows, d, mean](Tape& t, const Matrix& g) {
      Matrix gv(rows, d);
      for (Eigen::Index r = 0; r < rows; ++r) {
        auto s = static_cast<std::size_t>(seg[static_cast<std::size_t>(r)]);
        gv.row(r) = mean ? Matrix(g.row(static_cast<Eigen::Index>(s)) / count[s]) : Matrix(g.row(static_cast<Eigen::Index>(s)));
      }
      t.accumulate(iv, gv);
    });
  }

  // max / min: remember the first extremal row per (segment, column)
  const bool is_max = mode == Reduce::Max;
  std::vector<int> arg(static_cast<std::size_t>(n_segments * d), -1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    int s = seg[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < d; ++c) {
      int& a = arg[static_cast<std::size_t>(s * d + c)];
      double x = v(r, c);
      if (a < 0 || (is_max ? x > out(s, c) : x < out(s, c))) {
        a = static_cast<int>(r);
        out(s, c) = x;
      }
    }
  }
  return tape_of(values).record(std::move(out), {values}, [iv, arg, rows, d, n_segments](Tape& t, const Matrix& g) {
    Matrix gv = Matrix::Zero(rows, d);
    for (int s = 0; s < n_segments; ++s)
      for (Eigen::Index c = 0; c < d; ++c) {
        int a = arg[static_cast<std::size_t>(s * d + c)];
        if (a >= 0) gv(a, c) += g(s, c);
      }
    t.accumulate(iv, gv);
  });
}

Var segment_std(const Var& values, std::span<const int> segments, int n_segments, double eps) {
  Var mean_sq = segment_reduce(square(values), segments, n_segments, Reduce::Mean);
  Var mean = segment_reduce(values, segments, n_segments, Reduce::Mean);
  return sqrt(add_scalar(sub(mean_sq, square(mean)), eps));
}

// --- reductions & losses ---------------------------------------------------------------------

Var sum_all(const Var& a) {
  int ia = a.id();
  Eigen::Index r = a.rows(), c = a.cols();
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().sum()), {a}, [ia, r, c](Tape& t, const Matrix& g) {
    t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var mean_all(const Var& a) {
  double n = static_cast<double>(a.value().size());
  if (n == 0) fail(ErrorCode::EmptyBatch, "mean of an empty tensor");
  return scale(sum_all(a), 1.0 / n);
}

Var weighted_sum(const Var& a, std::span<const double> w) {
  if (a.cols() != 1 || static_cast<Eigen::Index>(w.size()) != a.rows())
    fail(ErrorCode::ShapeMismatch, "weighted_sum: needs a column vector and one weight per row");
  Eigen::VectorXd wc = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) s += wc(i) * a.value()(i, 0);
  int ia = a.id();
  return tape_of(a).record(Matrix::Constant(1, 1, s), {a}, [ia, wc](Tape& t, const Matrix& g) {
    Matrix ga = wc * g(0, 0);
    t.accumulate(ia, ga);
  });
}

Var huber(const Var& a, double delta) {
  if (!(delta > 0)) fail(ErrorCode::InvalidArgument, "huber delta must be positive");
  Matrix out = a.value().unaryExpr([delta](double r) {
    double ar = std::abs(r);
    return ar <= delta ? 0.5 * r * r : delta * (ar - 0.5 * delta);
  });
  int ia = a.id();
  return tape_of(a).record(std::move(out), {a}, [ia, delta](Tape& t, const Matrix& g) {
    Matrix d = t.value(ia).unaryExpr([delta](double r) { return std::abs(r) <= delta ? r : (r > 0 ? delta : -delta); });
    t.accumulate(ia, g.cwiseProduct(d));
  });
}

Var stop_gradient(const Var& a) { return tape_of(a).constant(a.value()); }

// --- batch norm ----------------------------------------------------------------------------

Var batch_norm_train(const Var& x, const Var& gamma, const Var& beta, double eps, Matrix* batch_mean,
                     Matrix* batch_var) {
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows(), d = xv.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d)
    fail(ErrorCode::ShapeMismatch, "batch_norm: gamma/beta must be 1 x features");
  if (n == 0) fail(ErrorCode::EmptyBatch, "batch_norm on zero rows");
  Matrix mu = xv.colwise().mean();
  Matrix centered = xv.rowwise() - mu.row(0);
  Matrix var = centered.array().square().colwise().mean();
  Matrix inv = (var.array() + eps).rsqrt();
  Matrix xhat = centered.array().rowwise() * inv.row(0).array();
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  if (batch_mean) *batch_mean = mu;
  if (batch_var) *batch_var = var;
  int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return tape_of(x).record(std::move(out), {x, gamma, beta}, [ix, ig, ib, xhat, inv, n](Tape& t, const Matrix& g) {
    if (t.requires_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
    if (t.requires_grad(ix)) {
      Matrix dxhat = g.array().rowwise() * t.value(ig).row(0).array();
      Matrix sum_d = dxhat.colwise().sum();
      Matrix sum_dx = dxhat.cwiseProduct(xhat).colwise().sum();
      Matrix dx = static_cast<double>(n) * dxhat;
      dx.rowwise() -= sum_d.row(0);
      dx -= Matrix(xhat.array().rowwise() * sum_dx.row(0).array());
      dx = dx.array().rowwise() * (inv.row(0).array() / static_cast<double>(n));
      t.accumulate(ix, dx);
    }
  });
}

Var batch_norm_eval(const Var& x, const Var& gamma, const Var& beta, const Matrix& mean, const Matrix& var, double eps) {
  const Eigen::Index d = x.cols();
  if (gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d || mean.rows() != 1 ||
      mean.cols() != d || var.rows() != 1 || var.cols() != d)
    fail(ErrorCode::ShapeMismatch, "batch_norm_eval: statistics must be 1 x features");
  Matrix inv = (var.array() + eps).rsqrt();
  Matrix xhat = (x.value().rowwise() - mean.row(0)).array().rowwise() * inv.row(0).array();
  Matrix out = xhat.array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return tape_of(x).record(std::move(out), {x, gamma, beta}, [ix, ig, ib, xhat, inv](Tape& t, const Matrix& g) {
    if (t.requires_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
    if (t.requires_grad(ix)) {
      Matrix f = t.value(ig).cwiseProduct(inv);
      t.accumulate(ix, Matrix(g.array().rowwise() * f.row(0).array()));
    }
  });
}

// --- optimisation -----------------------------------------------------------------------------

double clip_global_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params)
    if (p->touched) sq += p->grad.squaredNorm();
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    double f = max_norm / norm;
    for (Parameter* p : params)
      if (p->touched) p->grad *= f;
  }
  return norm;
}

double cosine_lr(long step, long total_steps, double lr_max, double lr_min) {
  if (total_steps <= 0) return lr_max;
  double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

void Adam::step(std::span<Parameter* const> params, double lr) {
  for (Parameter* p : params) {
    if (!p->touched) continue;
    State& s = state_[p->name];
    if (s.t == 0) {
      s.m = Matrix::Zero(p->value.rows(), p->value.cols());
      s.v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    ++s.t;
    s.m = beta1 * s.m + (1.0 - beta1) * p->grad;
    s.v = beta2 * s.v + (1.0 - beta2) * p->grad.cwiseProduct(p->grad);
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(s.t));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(s.t));
    p->value.array() -= lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + eps);
  }
}

nlohmann::json Adam::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, s] : state_) j[name] = {{"t", s.t}, {"m", matrix_to_json(s.m)}, {"v", matrix_to_json(s.v)}};
  return j;
}

void Adam::from_json(const nlohmann::json& j) {
  state_.clear();
  for (auto it = j.begin(); it != j.end(); ++it) {
    State s;
    s.t = it.value().at("t").get<long>();
    s.m = matrix_from_json(it.value().at("m"));
    s.v = matrix_from_json(it.value().at("v"));
    state_[it.key()] = std::move(s);
  }
}

nlohmann::json matrix_to_json(const Matrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) fail(ErrorCode::FormatError, "matrix data length mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace vpg::ad
