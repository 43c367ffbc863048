#pragma once

// Reverse-mode differentiation over dense row-major float64 matrices.
//
// A Tape records every operation in execution order; backward() walks the
// record in reverse. Nodes that do not depend on any parameter carry no
// backward closure, so stop_gradient() really cuts the graph.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vpg/matrix.hpp"

namespace vpg::ad {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  /// Set when backward() reached this parameter since the last zero_grad();
  /// the optimizer leaves untouched parameters (and their moments) alone.
  bool touched = false;

  Parameter(std::string name_, Matrix init);
  void zero_grad();
};

class Tape;

class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  /// Scalar value of a 1x1 node.
  double item() const;

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

  Var constant(Matrix value);
  Var parameter(Parameter& p);

  /// Records a node. `backward` is dropped when no input requires a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, const std::vector<Var>& inputs, Backward backward);

  /// Seeds d(loss)/d(loss) = 1 and accumulates into parameter gradients.
  /// Repeated calls add to the parameter gradients. Throws NonScalarLoss.
  void backward(const Var& loss);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  /// Adds g to the gradient of node id (no-op for constants).
  void accumulate(int id, const Matrix& g);
  /// Gradient of a node after backward(); empty matrix if none reached it.
  Matrix grad_of(const Var& v) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    Parameter* param = nullptr;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// --- operations -------------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);  // elementwise
Var matmul(const Var& a, const Var& b);
/// a [n x d] + row [1 x d] broadcast over rows.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
/// a * s where s is a 1x1 node (e.g. a learnable scalar).
Var scale_by(const Var& a, const Var& s);
/// Multiplies row i of a by the constant w[i].
Var row_scale(const Var& a, std::span<const double> w);
/// Elementwise product with a constant matrix (dropout masks).
Var mul_const(const Var& a, const Matrix& c);
Var relu(const Var& a);
Var square(const Var& a);
Var sqrt(const Var& a);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(const Var& a, std::span<const int> index);

enum class Reduce { Sum, Mean, Max, Min };
/// Reduces rows of `values` into n_segments rows by segment id. Empty segments
/// give 0 (and no gradient); max/min route the gradient to the first extremal
/// row. Throws SegmentOutOfRange.
Var segment_reduce(const Var& values, std::span<const int> segments, int n_segments, Reduce mode);
/// sqrt(mean(x^2) - mean(x)^2 + eps) per segment, composed from the ops above.
Var segment_std(const Var& values, std::span<const int> segments, int n_segments, double eps = 1e-8);

Var sum_all(const Var& a);
Var mean_all(const Var& a);
/// sum_i w[i] * a(i, 0) for a column vector a.
Var weighted_sum(const Var& a, std::span<const double> w);
/// Elementwise Huber: r^2/2 for |r| <= delta, delta(|r| - delta/2) otherwise.
Var huber(const Var& a, double delta);
/// Same value, no gradient flows to the input.
Var stop_gradient(const Var& a);

/// Training-mode batch normalization over rows with biased batch variance.
/// Batch mean / variance are written to the optional outputs.
Var batch_norm_train(const Var& x, const Var& gamma, const Var& beta, double eps, Matrix* batch_mean = nullptr,
                     Matrix* batch_var = nullptr);
/// Inference-mode batch normalization with fixed statistics.
Var batch_norm_eval(const Var& x, const Var& gamma, const Var& beta, const Matrix& mean, const Matrix& var, double eps);

// --- optimisation ------------------------------------------------------------

/// Joint L2 norm over the gradients of touched parameters; if it exceeds
/// max_norm every gradient is scaled by max_norm / norm. Returns the pre-clip norm.
double clip_global_norm(std::span<Parameter* const> params, double max_norm);

/// lr_min + (lr_max - lr_min)(1 + cos(pi step / total)) / 2.
double cosine_lr(long step, long total_steps, double lr_max, double lr_min);

class Adam {
 public:
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  /// Updates touched parameters only; untouched ones keep value and moments.
  void step(std::span<Parameter* const> params, double lr);

  nlohmann::json to_json() const;
  void from_json(const nlohmann::json& j);

 private:
  struct State {
    Matrix m, v;
    long t = 0;
  };
  std::map<std::string, State> state_;
};

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace vpg::ad
