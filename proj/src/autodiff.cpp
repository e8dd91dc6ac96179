#include "gki/autodiff.hpp"

#include <cmath>
#include <unordered_set>

namespace gki {

Param::Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
  grad.setZero(value.rows(), value.cols());
}

namespace ad {

void Node::accumulate(const Matrix& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

double Var::scalar() const {
  if (node_->value.size() != 1) {
    throw ShapeError("scalar(): value is " + shape_str(node_->value));
  }
  return node_->value(0, 0);
}

Var constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Var(std::move(n));
}

Var scalar_constant(double v) { return constant(Matrix::Constant(1, 1, v)); }

Var leaf(Param& p) {
  auto n = std::make_shared<Node>();
  n->value = p.value;
  n->requires_grad = true;
  n->param = &p;
  return Var(std::move(n));
}

Var make_op(Matrix value, std::vector<Var> inputs, std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  for (const auto& in : inputs) {
    n->requires_grad = n->requires_grad || in.requires_grad();
    n->inputs.push_back(in.ptr());
  }
  if (n->requires_grad) n->backprop = std::move(backprop);
  return Var(std::move(n));
}

void backward(const Var& root) {
  if (root.value().size() != 1) {
    throw ShapeError("backward: root must be 1x1, got " + shape_str(root.value()));
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{&root.node(), 0}};
  seen.insert(&root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node().grad = Matrix::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.size() == 0) continue;
    if (n->backprop) n->backprop(*n);
    if (n->param != nullptr) n->param->grad += n->grad;
  }
}

Var matmul(const Var& a, const Var& b) {
  require_shape(a.cols() == b.rows(), "matmul", a.value(), b.value());
  return make_op(a.value() * b.value(), {a, b}, [](Node& n) {
    Node& x = *n.inputs[0];
    Node& y = *n.inputs[1];
    if (x.requires_grad) x.accumulate(n.grad * y.value.transpose());
    if (y.requires_grad) y.accumulate(x.value.transpose() * n.grad);
  });
}

Var add(const Var& a, const Var& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add", a.value(), b.value());
  return make_op(a.value() + b.value(), {a, b}, [](Node& n) {
    n.inputs[0]->accumulate(n.grad);
    n.inputs[1]->accumulate(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub", a.value(), b.value());
  return make_op(a.value() - b.value(), {a, b}, [](Node& n) {
    n.inputs[0]->accumulate(n.grad);
    n.inputs[1]->accumulate(-n.grad);
  });
}

Var scale(const Var& a, double s) {
  return make_op(a.value() * s, {a}, [s](Node& n) { n.inputs[0]->accumulate(n.grad * s); });
}

Var hadamard(const Var& a, const Var& b) {
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard", a.value(),
                b.value());
  return make_op(a.value().cwiseProduct(b.value()), {a, b}, [](Node& n) {
    Node& x = *n.inputs[0];
    Node& y = *n.inputs[1];
    if (x.requires_grad) x.accumulate(n.grad.cwiseProduct(y.value));
    if (y.requires_grad) y.accumulate(n.grad.cwiseProduct(x.value));
  });
}

Var add_row(const Var& a, const Var& row) {
  require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row", a.value(), row.value());
  Matrix out = a.value().rowwise() + row.value().row(0);
  return make_op(std::move(out), {a, row}, [](Node& n) {
    n.inputs[0]->accumulate(n.grad);
    if (n.inputs[1]->requires_grad) n.inputs[1]->accumulate(n.grad.colwise().sum());
  });
}

Var exp(const Var& a) {
  Matrix out = a.value().array().exp().matrix();
  return make_op(out, {a}, [](Node& n) {
    n.inputs[0]->accumulate(n.grad.cwiseProduct(n.value));
  });
}

Var prelu(const Var& x, const Var& slope) {
  require_shape(slope.value().size() == 1, "prelu", x.value(), slope.value());
  const double s = slope.scalar();
  Matrix out = x.value().unaryExpr([s](double v) { return v > 0.0 ? v : s * v; });
  return make_op(std::move(out), {x, slope}, [](Node& n) {
    Node& in = *n.inputs[0];
    Node& sl = *n.inputs[1];
    const double s = sl.value(0, 0);
    if (in.requires_grad) {
      Matrix g = n.grad;
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (!(in.value.data()[i] > 0.0)) g.data()[i] *= s;
      }
      in.accumulate(g);
    }
    if (sl.requires_grad) {
      double ds = 0.0;
      for (Eigen::Index i = 0; i < n.grad.size(); ++i) {
        const double v = in.value.data()[i];
        if (!(v > 0.0)) ds += n.grad.data()[i] * v;
      }
      sl.accumulate(Matrix::Constant(1, 1, ds));
    }
  });
}

Var sum(const Var& a) {
  return make_op(Matrix::Constant(1, 1, a.value().sum()), {a}, [](Node& n) {
    Node& in = *n.inputs[0];
    in.accumulate(Matrix::Constant(in.value.rows(), in.value.cols(), n.grad(0, 0)));
  });
}

Var col_sum(const Var& a) {
  Matrix out = a.value().colwise().sum();
  return make_op(std::move(out), {a}, [](Node& n) {
    Node& in = *n.inputs[0];
    Matrix g = n.grad.replicate(in.value.rows(), 1);
    in.accumulate(g);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    require_shape(p.rows() == rows, "concat_cols", parts.front().value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return make_op(std::move(out), parts, [](Node& n) {
    Eigen::Index c = 0;
    for (auto& in : n.inputs) {
      const Eigen::Index w = in->value.cols();
      if (in->requires_grad) in->accumulate(n.grad.middleCols(c, w));
      c += w;
    }
  });
}

Var vstack(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("vstack: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    require_shape(p.cols() == cols, "vstack", parts.front().value(), p.value());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  return make_op(std::move(out), parts, [](Node& n) {
    Eigen::Index r = 0;
    for (auto& in : n.inputs) {
      const Eigen::Index h = in->value.rows();
      if (in->requires_grad) in->accumulate(n.grad.middleRows(r, h));
      r += h;
    }
  });
}

Var transpose(const Var& a) {
  Matrix out = a.value().transpose();
  return make_op(std::move(out), {a}, [](Node& n) {
    n.inputs[0]->accumulate(n.grad.transpose());
  });
}

Var smoothed_frobenius(const Var& a, double eps) {
  const double v = std::sqrt(eps + a.value().squaredNorm());
  return make_op(Matrix::Constant(1, 1, v), {a}, [](Node& n) {
    Node& in = *n.inputs[0];
    in.accumulate(in.value * (n.grad(0, 0) / n.value(0, 0)));
  });
}

Var normalize_rows(const Var& a) {
  Matrix out = a.value();
  Vector norms = a.value().rowwise().norm();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (norms(i) > 0.0) {
      out.row(i) /= norms(i);
    } else {
      out.row(i).setZero();
    }
  }
  return make_op(std::move(out), {a}, [norms](Node& n) {
    Node& in = *n.inputs[0];
    Matrix g(n.grad.rows(), n.grad.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (norms(i) > 0.0) {
        const auto y = n.value.row(i);
        const auto dy = n.grad.row(i);
        g.row(i) = (dy - y * y.dot(dy)) / norms(i);
      } else {
        g.row(i).setZero();
      }
    }
    in.accumulate(g);
  });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<int>& targets) {
  const Matrix& z = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != z.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + shape_str(z) + " logits");
  }
  Matrix probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= z.cols()) throw ShapeError("softmax_cross_entropy: target out of range");
    const double m = z.row(i).maxCoeff();
    RowVector e = (z.row(i).array() - m).exp().matrix();
    const double s = e.sum();
    probs.row(i) = e / s;
    loss += -(z(i, t) - m - std::log(s));
  }
  return make_op(Matrix::Constant(1, 1, loss), {logits},
                 [probs = std::move(probs), targets](Node& n) {
                   Matrix g = probs;
                   for (std::size_t i = 0; i < targets.size(); ++i) {
                     g(static_cast<Eigen::Index>(i), targets[i]) -= 1.0;
                   }
                   n.inputs[0]->accumulate(g * n.grad(0, 0));
                 });
}

Var spectral_function(const Var& a, const std::function<double(double)>& f,
                      const std::function<double(double)>& df) {
  const SymmetricEigen eig = symmetric_eigen(a.value());
  const Eigen::Index k = eig.values.size();
  Vector fl(k);
  for (Eigen::Index i = 0; i < k; ++i) fl(i) = f(eig.values(i));
  Matrix out = eig.vectors * fl.asDiagonal() * eig.vectors.transpose();

  Matrix divided(k, k);
  const double scale_ref = std::max(1.0, eig.values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double gap = eig.values(i) - eig.values(j);
      if (std::abs(gap) > 1e-12 * scale_ref) {
        divided(i, j) = (fl(i) - fl(j)) / gap;
      } else {
        divided(i, j) = df(0.5 * (eig.values(i) + eig.values(j)));
      }
    }
  }
  Matrix vecs = eig.vectors;
  return make_op(std::move(out), {a}, [vecs = std::move(vecs), divided = std::move(divided)](
                                          Node& n) {
    const Matrix sym = 0.5 * (n.grad + n.grad.transpose());
    const Matrix inner = (vecs.transpose() * sym * vecs).cwiseProduct(divided);
    n.inputs[0]->accumulate(vecs * inner * vecs.transpose());
  });
}

}  // namespace ad
}  // namespace gki
