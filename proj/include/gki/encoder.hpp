#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "gki/autodiff.hpp"
#include "gki/ehr_graph.hpp"
#include "gki/rng.hpp"

namespace gki {

enum class AdjacencyMode { symmetric, directed };
enum class EdgeTransform { raw, log1p, binary };

AdjacencyMode parse_adjacency_mode(const std::string& s);
EdgeTransform parse_edge_transform(const std::string& s);
std::string to_string(AdjacencyMode m);
std::string to_string(EdgeTransform t);

/// Propagation operator for one graph. Graphs up to kDenseLimit nodes keep a
/// dense matrix; larger ones keep a compressed sparse form.
class NormalizedAdjacency {
 public:
  static constexpr int kDenseLimit = 256;
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  NormalizedAdjacency(int n, const std::vector<Eigen::Triplet<double>>& entries);

  int size() const { return n_; }
  bool is_dense() const { return dense_.has_value(); }
  Matrix to_dense() const;
  Matrix apply(const Matrix& x) const;
  Matrix apply_transpose(const Matrix& x) const;

 private:
  int n_;
  std::optional<Matrix> dense_;
  Sparse sparse_;
};

/// Â = D^{-1/2}(W + I)D^{-1/2} with W symmetrized by max(W, Wᵀ) (symmetric
/// mode), or in-degree row normalization of (Wᵀ + I) (directed mode, node i
/// aggregates from its in-neighbours).
NormalizedAdjacency normalize_adjacency(const PatientGraph& graph,
                                        AdjacencyMode mode = AdjacencyMode::symmetric,
                                        EdgeTransform transform = EdgeTransform::raw);

namespace ad {
/// Â · x. The op keeps a reference to `adj`, which must outlive backward().
Var propagate(const NormalizedAdjacency& adj, const Var& x);
}  // namespace ad

struct GcnLayer {
  Param weight;  // D_in x d
  Param slope;   // 1x1 PReLU slope

  static GcnLayer init(const std::string& name, int in_dim, int out_dim, Rng& rng);
};

/// Glorot-uniform matrix in ±sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(int rows, int cols, Rng& rng);

/// h^(l) = PReLU(Â h^(l-1) W^(l)) with h^(0) = x; returns every layer output.
std::vector<ad::Var> gcn_forward(const ad::Var& x, const NormalizedAdjacency& adj,
                                 const std::vector<ad::Var>& weights,
                                 const std::vector<ad::Var>& slopes);

/// Convenience overload over parameter values, no gradient tracking.
std::vector<Matrix> gcn_forward(const Matrix& x, const NormalizedAdjacency& adj,
                                const std::vector<GcnLayer>& layers);

}  // namespace gki
