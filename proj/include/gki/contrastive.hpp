#pragma once

#include <string>
#include <vector>

#include "gki/autodiff.hpp"
#include "gki/cluster_kernel.hpp"
#include "gki/rng.hpp"

namespace gki {

/// Which candidates enter the NT-Xent denominator. `batch` uses every graph in
/// the mini-batch; `self_only` keeps just the paired positive.
enum class NegativesMode { batch, self_only };

NegativesMode parse_negatives_mode(const std::string& s);
std::string to_string(NegativesMode m);

struct LossConfig {
  double temperature = 0.01;
  NegativesMode negatives = NegativesMode::batch;
  double weight_node_graph = 1.0;
  double weight_graph_graph = 1.0;
  double weight_rec = 1.0;

  void validate() const;
};

/// Three affine layers with PReLU between them. Used only during training.
struct ProjectionHead {
  std::vector<Param> weights;  // 3 entries
  std::vector<Param> biases;   // 3 entries, 1 x out
  std::vector<Param> slopes;   // 2 entries, 1x1

  static ProjectionHead init(const std::string& name, int in_dim, int hidden, int out_dim,
                             Rng& rng);
  std::vector<Param*> params();
};

struct BoundHead {
  std::vector<ad::Var> weights, biases, slopes;

  ad::Var operator()(const ad::Var& x) const;
};

BoundHead bind(ProjectionHead& head);

/// Cosine similarity; 0 when either vector has zero norm.
double cosine_similarity(const RowVector& a, const RowVector& b);

/// -log( e^{sim(p,q)/τ} / Σ_{c ∈ {q} ∪ negatives} e^{sim(p,c)/τ} ). The caller
/// keeps `p` itself out of `negatives`.
double nt_xent(const RowVector& p, const RowVector& q, const std::vector<RowVector>& negatives,
               double temperature);

/// Projected views of one graph.
struct ProjectedViews {
  ad::Var node_euclidean;   // n x d_p
  ad::Var node_spherical;   // n x d_p
  ad::Var graph_euclidean;  // 1 x d_p
  ad::Var graph_spherical;  // 1 x d_p
};

ProjectedViews project(const KernelViews& views, const BoundHead& node_head,
                       const BoundHead& graph_head);

/// Unit-normalized graph projections of the whole batch, shared by every
/// per-graph loss term.
struct BatchContext {
  ad::Var graphs_euclidean;  // N x d_p, unit rows
  ad::Var graphs_spherical;  // N x d_p, unit rows
  std::size_t size = 0;
};

BatchContext make_batch_context(const std::vector<ProjectedViews>& batch);

/// (1/n_i) Σ_j ℓ(ẑᴱ_ij, ĝˢ_i) + ℓ(ẑˢ_ij, ĝᴱ_i) for graph `i` of the batch.
ad::Var node_graph_loss(const ProjectedViews& views, std::size_t i, const BatchContext& ctx,
                        const LossConfig& cfg);
/// ℓ(ĝᴱ_i, ĝˢ_i) + ℓ(ĝˢ_i, ĝᴱ_i) for graph `i` of the batch.
ad::Var graph_graph_loss(const ProjectedViews& views, std::size_t i, const BatchContext& ctx,
                         const LossConfig& cfg);
/// Σ_i of graph_graph_loss over the batch, evaluated as one N x N logit matrix.
ad::Var graph_graph_loss(const BatchContext& ctx, const LossConfig& cfg);

struct LossBreakdown {
  ad::Var total;
  double node_graph = 0.0;
  double graph_graph = 0.0;
  double rec = 0.0;
};

/// Weighted sum of the three components. Throws NumericError naming the first
/// non-finite component.
LossBreakdown total_loss(const ad::Var& node_graph, const ad::Var& graph_graph,
                         const ad::Var& rec, const LossConfig& cfg);

}  // namespace gki
