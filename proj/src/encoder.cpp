#include "gki/encoder.hpp"

#include <cmath>
#include <map>

namespace gki {

AdjacencyMode parse_adjacency_mode(const std::string& s) {
  if (s == "symmetric") return AdjacencyMode::symmetric;
  if (s == "directed") return AdjacencyMode::directed;
  throw DataError("unknown adjacency mode '" + s + "' (expected symmetric|directed)");
}

EdgeTransform parse_edge_transform(const std::string& s) {
  if (s == "raw") return EdgeTransform::raw;
  if (s == "log1p") return EdgeTransform::log1p;
  if (s == "binary") return EdgeTransform::binary;
  throw DataError("unknown edge transform '" + s + "' (expected raw|log1p|binary)");
}

std::string to_string(AdjacencyMode m) {
  return m == AdjacencyMode::symmetric ? "symmetric" : "directed";
}

std::string to_string(EdgeTransform t) {
  switch (t) {
    case EdgeTransform::raw: return "raw";
    case EdgeTransform::log1p: return "log1p";
    case EdgeTransform::binary: return "binary";
  }
  return "raw";
}

NormalizedAdjacency::NormalizedAdjacency(int n, const std::vector<Eigen::Triplet<double>>& entries)
    : n_(n) {
  if (n <= kDenseLimit) {
    Matrix d = Matrix::Zero(n, n);
    for (const auto& t : entries) d(t.row(), t.col()) += t.value();
    dense_ = std::move(d);
  } else {
    sparse_.resize(n, n);
    sparse_.setFromTriplets(entries.begin(), entries.end());
  }
}

Matrix NormalizedAdjacency::to_dense() const {
  if (dense_) return *dense_;
  return Matrix(sparse_);
}

Matrix NormalizedAdjacency::apply(const Matrix& x) const {
  if (dense_) return *dense_ * x;
  return sparse_ * x;
}

Matrix NormalizedAdjacency::apply_transpose(const Matrix& x) const {
  if (dense_) return dense_->transpose() * x;
  return sparse_.transpose() * x;
}

NormalizedAdjacency normalize_adjacency(const PatientGraph& graph, AdjacencyMode mode,
                                        EdgeTransform transform) {
  const int n = graph.num_nodes();
  auto weight_of = [transform](double w) {
    switch (transform) {
      case EdgeTransform::raw: return w;
      case EdgeTransform::log1p: return std::log1p(w);
      case EdgeTransform::binary: return 1.0;
    }
    return w;
  };

  // (row, col) -> weight, combined by max.
  std::map<std::pair<int, int>, double> w;
  auto put = [&w](int r, int c, double v) {
    auto [it, inserted] = w.emplace(std::make_pair(r, c), v);
    if (!inserted) it->second = std::max(it->second, v);
  };
  for (const Edge& e : graph.edges) {
    if (e.src == e.dst) continue;
    const double v = weight_of(e.weight);
    if (mode == AdjacencyMode::symmetric) {
      put(e.src, e.dst, v);
      put(e.dst, e.src, v);
    } else {
      put(e.dst, e.src, v);  // row i gathers from in-neighbour j
    }
  }
  for (int i = 0; i < n; ++i) put(i, i, 1.0);

  Vector degree = Vector::Zero(n);
  for (const auto& [rc, v] : w) degree(rc.first) += v;

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(w.size());
  for (const auto& [rc, v] : w) {
    const auto [r, c] = rc;
    const double norm = mode == AdjacencyMode::symmetric
                            ? v / std::sqrt(degree(r) * degree(c))
                            : v / degree(r);
    entries.emplace_back(r, c, norm);
  }
  return NormalizedAdjacency(n, entries);
}

namespace ad {

Var propagate(const NormalizedAdjacency& adj, const Var& x) {
  if (x.rows() != adj.size()) {
    throw ShapeError("propagate: adjacency " + std::to_string(adj.size()) + "x" +
                     std::to_string(adj.size()) + " vs features " + shape_str(x.value()));
  }
  return make_op(adj.apply(x.value()), {x}, [&adj](Node& n) {
    n.inputs[0]->accumulate(adj.apply_transpose(n.grad));
  });
}

}  // namespace ad

Matrix glorot_uniform(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
  return m;
}

GcnLayer GcnLayer::init(const std::string& name, int in_dim, int out_dim, Rng& rng) {
  return GcnLayer{Param(name + ".weight", glorot_uniform(in_dim, out_dim, rng)),
                  Param(name + ".prelu", Matrix::Constant(1, 1, 0.25))};
}

std::vector<ad::Var> gcn_forward(const ad::Var& x, const NormalizedAdjacency& adj,
                                 const std::vector<ad::Var>& weights,
                                 const std::vector<ad::Var>& slopes) {
  if (weights.size() != slopes.size()) {
    throw ShapeError("gcn_forward: " + std::to_string(weights.size()) + " weights vs " +
                     std::to_string(slopes.size()) + " slopes");
  }
  std::vector<ad::Var> out;
  ad::Var h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    // Multiply by the narrower side first.
    ad::Var pre = h.cols() > weights[l].cols()
                      ? ad::propagate(adj, ad::matmul(h, weights[l]))
                      : ad::matmul(ad::propagate(adj, h), weights[l]);
    h = ad::prelu(pre, slopes[l]);
    out.push_back(h);
  }
  return out;
}

std::vector<Matrix> gcn_forward(const Matrix& x, const NormalizedAdjacency& adj,
                                const std::vector<GcnLayer>& layers) {
  std::vector<ad::Var> w, s;
  for (const auto& l : layers) {
    w.push_back(ad::constant(l.weight.value));
    s.push_back(ad::constant(l.slope.value));
  }
  std::vector<Matrix> out;
  for (const auto& h : gcn_forward(ad::constant(x), adj, w, s)) out.push_back(h.value());
  return out;
}

}  // namespace gki
