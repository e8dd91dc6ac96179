#pragma once

#include <cstdint>
#include <vector>

#include "gki/cluster_kernel.hpp"
#include "gki/contrastive.hpp"
#include "gki/encoder.hpp"

namespace gki {

struct ModelConfig {
  int input_dim = 0;  // vocabulary size D
  int hidden = 32;
  int layers = 2;
  int clusters = 32;
  int head_hidden = 32;
  int head_out = 32;
  AdjacencyMode adjacency = AdjacencyMode::symmetric;
  EdgeTransform transform = EdgeTransform::raw;
  KernelConfig kernel;

  void validate() const;
};

/// Every learnable tensor: GCN layers, per-layer centroids and both heads.
/// Parameters are never reallocated after init, so `Param*` stay valid.
struct ModelParams {
  std::vector<GcnLayer> encoder;
  std::vector<Param> centroids;  // K x d per layer
  ProjectionHead node_head;
  ProjectionHead graph_head;

  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed);

  ModelParams() = default;
  ModelParams(const ModelParams& other) = default;
  ModelParams& operator=(const ModelParams& other) = default;

  std::vector<Param*> all();
  std::vector<const Param*> all() const;
  /// Encoder and centroids only; the heads are not part of the embedding path.
  std::vector<Param*> embedding_params();
  void zero_grad();
};

/// Features and propagation operator cached per graph.
struct PreparedGraph {
  const PatientGraph* graph = nullptr;
  Matrix features;
  NormalizedAdjacency adjacency;
};

PreparedGraph prepare_graph(const PatientGraph& graph, const ModelConfig& cfg);

/// Parameters bound as leaves of one differentiation graph.
struct BoundModel {
  std::vector<ad::Var> weights;
  std::vector<ad::Var> slopes;
  std::vector<ad::Var> centroids;
  std::vector<Landmarks> landmarks;
  BoundHead node_head;
  BoundHead graph_head;
};

/// With `track` false the parameters enter as constants (embedding path).
BoundModel bind_model(ModelParams& params, const KernelConfig& kernel, bool track = true);

struct GraphPass {
  std::vector<ad::Var> h;
  std::vector<ad::Var> assignments;
  ad::Var rec;
  KernelViews views;
};

GraphPass forward_graph(const PreparedGraph& g, const BoundModel& model, const KernelConfig& kernel);

}  // namespace gki
