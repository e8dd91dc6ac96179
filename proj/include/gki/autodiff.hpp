#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gki/numeric.hpp"

namespace gki {

/// A named learnable tensor with its gradient accumulator.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Matrix v);

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Reverse-mode differentiation over a fixed set of matrix operations.
///
/// Every operation records its inputs and a closure that maps the output
/// gradient onto input gradients. `backward` walks the recorded graph in
/// reverse topological order and accumulates leaf gradients into the bound
/// `Param::grad`. The graph lives exactly as long as the `Var` handles.
namespace ad {

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  Param* param = nullptr;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backprop;

  void accumulate(const Matrix& g);
};

class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const;
  bool requires_grad() const { return node_->requires_grad; }
  Node& node() const { return *node_; }
  const std::shared_ptr<Node>& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node> node_;
};

Var constant(Matrix value);
Var scalar_constant(double v);
/// Leaf bound to a parameter; gradients land in `p.grad` on backward.
Var leaf(Param& p);

/// Builds an op node. `backprop` receives the node whose `grad` is populated
/// and must call `accumulate` on the inputs that require gradients.
Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backprop);

/// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates to all leaves.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var hadamard(const Var& a, const Var& b);
/// a (n x m) + row (1 x m) broadcast over rows.
Var add_row(const Var& a, const Var& row);
Var exp(const Var& a);
/// Elementwise max(x,0) + slope * min(x,0) with a learnable 1x1 slope.
Var prelu(const Var& x, const Var& slope);
/// Sum of all entries, 1x1.
Var sum(const Var& a);
/// 1 x cols row of column sums.
Var col_sum(const Var& a);
Var concat_cols(const std::vector<Var>& parts);
Var vstack(const std::vector<Var>& parts);
Var transpose(const Var& a);
/// sqrt(eps + ||a||_F^2), 1x1.
Var smoothed_frobenius(const Var& a, double eps);
/// Rows scaled to unit norm; zero rows stay zero with zero gradient.
Var normalize_rows(const Var& a);
/// Sum over rows of -log softmax(logits_row)[target_row].
Var softmax_cross_entropy(const Var& logits, const std::vector<int>& targets);

/// F(A) = V f(Λ) Vᵀ for a symmetric input A = V Λ Vᵀ. `f` and `df` act on
/// eigenvalues; the backward pass uses the divided-difference (Daleckii-Krein)
/// form of the Fréchet derivative.
Var spectral_function(const Var& a, const std::function<double(double)>& f,
                      const std::function<double(double)>& df);

}  // namespace ad
}  // namespace gki
