#include "gki/model.hpp"

namespace gki {

void ModelConfig::validate() const {
  if (input_dim < 1) throw DataError("model input dimension must be >= 1");
  if (hidden < 1 || head_hidden < 1 || head_out < 1) throw DataError("dimensions must be >= 1");
  if (layers < 1 || layers > 4) throw DataError("layers must be in [1, 4]");
  if (clusters < 2) throw DataError("clusters must be >= 2");
  kernel.validate();
}

ModelParams ModelParams::init(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Rng master(seed);
  Rng enc_rng = master.stream("init.encoder");
  Rng cen_rng = master.stream("init.centroids");
  Rng head_rng = master.stream("init.heads");

  ModelParams p;
  int in_dim = cfg.input_dim;
  for (int l = 0; l < cfg.layers; ++l) {
    p.encoder.push_back(GcnLayer::init("gcn" + std::to_string(l), in_dim, cfg.hidden, enc_rng));
    in_dim = cfg.hidden;
  }
  for (int l = 0; l < cfg.layers; ++l) {
    Matrix c(cfg.clusters, cfg.hidden);
    for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = cen_rng.normal(0.0, 0.1);
    p.centroids.emplace_back("centroids" + std::to_string(l), std::move(c));
  }
  p.node_head = ProjectionHead::init("node_head", cfg.clusters, cfg.head_hidden, cfg.head_out,
                                     head_rng);
  p.graph_head = ProjectionHead::init("graph_head", cfg.clusters * cfg.layers, cfg.head_hidden,
                                      cfg.head_out, head_rng);
  return p;
}

std::vector<Param*> ModelParams::embedding_params() {
  std::vector<Param*> out;
  for (auto& l : encoder) {
    out.push_back(&l.weight);
    out.push_back(&l.slope);
  }
  for (auto& c : centroids) out.push_back(&c);
  return out;
}

std::vector<Param*> ModelParams::all() {
  std::vector<Param*> out = embedding_params();
  for (Param* p : node_head.params()) out.push_back(p);
  for (Param* p : graph_head.params()) out.push_back(p);
  return out;
}

std::vector<const Param*> ModelParams::all() const {
  auto& self = const_cast<ModelParams&>(*this);
  std::vector<const Param*> out;
  for (Param* p : self.all()) out.push_back(p);
  return out;
}

void ModelParams::zero_grad() {
  for (Param* p : all()) p->zero_grad();
}

PreparedGraph prepare_graph(const PatientGraph& graph, const ModelConfig& cfg) {
  if (graph.feature_dim != cfg.input_dim) {
    throw DataError("graph '" + graph.graph_id + "' has feature dimension " +
                    std::to_string(graph.feature_dim) + " but the model expects " +
                    std::to_string(cfg.input_dim) + " (vocabulary mismatch)");
  }
  return PreparedGraph{&graph, graph.node_features(),
                       normalize_adjacency(graph, cfg.adjacency, cfg.transform)};
}

BoundModel bind_model(ModelParams& params, const KernelConfig& kernel, bool track) {
  auto bind_one = [track](Param& p) { return track ? ad::leaf(p) : ad::constant(p.value); };
  BoundModel m;
  for (auto& l : params.encoder) {
    m.weights.push_back(bind_one(l.weight));
    m.slopes.push_back(bind_one(l.slope));
  }
  for (auto& c : params.centroids) {
    m.centroids.push_back(bind_one(c));
    m.landmarks.push_back(prepare_landmarks(m.centroids.back(), kernel));
  }
  if (track) {
    m.node_head = bind(params.node_head);
    m.graph_head = bind(params.graph_head);
  }
  return m;
}

GraphPass forward_graph(const PreparedGraph& g, const BoundModel& model,
                        const KernelConfig& kernel) {
  GraphPass pass;
  pass.h = gcn_forward(ad::constant(g.features), g.adjacency, model.weights, model.slopes);
  for (std::size_t l = 0; l < pass.h.size(); ++l) {
    pass.assignments.push_back(cluster_assign(pass.h[l], model.centroids[l]));
  }
  pass.rec = clustering_loss(pass.h, pass.assignments, model.centroids);
  pass.views = make_views(pass.h, model.landmarks, kernel);
  return pass;
}

}  // namespace gki
