#include "gki/contrastive.hpp"

#include <cmath>

#include "gki/encoder.hpp"

namespace gki {

NegativesMode parse_negatives_mode(const std::string& s) {
  if (s == "batch") return NegativesMode::batch;
  if (s == "self_only") return NegativesMode::self_only;
  throw DataError("unknown negatives mode '" + s + "' (expected batch|self_only)");
}

std::string to_string(NegativesMode m) {
  return m == NegativesMode::batch ? "batch" : "self_only";
}

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw DataError("temperature must be > 0");
}

ProjectionHead ProjectionHead::init(const std::string& name, int in_dim, int hidden,
                                    int out_dim, Rng& rng) {
  ProjectionHead h;
  const int dims[4] = {in_dim, hidden, hidden, out_dim};
  for (int l = 0; l < 3; ++l) {
    const std::string prefix = name + ".layer" + std::to_string(l);
    h.weights.emplace_back(prefix + ".weight", glorot_uniform(dims[l], dims[l + 1], rng));
    h.biases.emplace_back(prefix + ".bias", Matrix::Zero(1, dims[l + 1]));
  }
  for (int l = 0; l < 2; ++l) {
    h.slopes.emplace_back(name + ".prelu" + std::to_string(l), Matrix::Constant(1, 1, 0.25));
  }
  return h;
}

std::vector<Param*> ProjectionHead::params() {
  std::vector<Param*> out;
  for (int l = 0; l < 3; ++l) {
    out.push_back(&weights[static_cast<std::size_t>(l)]);
    out.push_back(&biases[static_cast<std::size_t>(l)]);
    if (l < 2) out.push_back(&slopes[static_cast<std::size_t>(l)]);
  }
  return out;
}

BoundHead bind(ProjectionHead& head) {
  BoundHead b;
  for (auto& p : head.weights) b.weights.push_back(ad::leaf(p));
  for (auto& p : head.biases) b.biases.push_back(ad::leaf(p));
  for (auto& p : head.slopes) b.slopes.push_back(ad::leaf(p));
  return b;
}

ad::Var BoundHead::operator()(const ad::Var& x) const {
  ad::Var h = x;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = ad::add_row(ad::matmul(h, weights[l]), biases[l]);
    if (l + 1 < weights.size()) h = ad::prelu(h, slopes[l]);
  }
  return h;
}

double cosine_similarity(const RowVector& a, const RowVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

double nt_xent(const RowVector& p, const RowVector& q, const std::vector<RowVector>& negatives,
               double temperature) {
  // log-sum-exp over {q} ∪ negatives, shifted by the largest logit.
  std::vector<double> logits;
  logits.push_back(cosine_similarity(p, q) / temperature);
  for (const auto& n : negatives) logits.push_back(cosine_similarity(p, n) / temperature);
  double m = logits.front();
  for (double l : logits) m = std::max(m, l);
  double s = 0.0;
  for (double l : logits) s += std::exp(l - m);
  return -(logits.front() - m - std::log(s));
}

ProjectedViews project(const KernelViews& views, const BoundHead& node_head,
                       const BoundHead& graph_head) {
  return {node_head(views.node_euclidean), node_head(views.node_spherical),
          graph_head(views.graph_euclidean), graph_head(views.graph_spherical)};
}

BatchContext make_batch_context(const std::vector<ProjectedViews>& batch) {
  BatchContext ctx;
  ctx.size = batch.size();
  if (batch.empty()) return ctx;
  std::vector<ad::Var> e, s;
  for (const auto& v : batch) {
    e.push_back(v.graph_euclidean);
    s.push_back(v.graph_spherical);
  }
  ctx.graphs_euclidean = ad::normalize_rows(ad::vstack(e));
  ctx.graphs_spherical = ad::normalize_rows(ad::vstack(s));
  return ctx;
}

namespace {

// Σ over anchor rows of NT-Xent against `candidates` (unit rows), each row's
// positive at index `target`.
ad::Var anchored_loss(const ad::Var& anchors, const ad::Var& candidates, int target,
                      double temperature) {
  const ad::Var logits = ad::scale(
      ad::matmul(ad::normalize_rows(anchors), ad::transpose(candidates)), 1.0 / temperature);
  return ad::softmax_cross_entropy(logits,
                                   std::vector<int>(static_cast<std::size_t>(anchors.rows()),
                                                    target));
}

}  // namespace

ad::Var node_graph_loss(const ProjectedViews& views, std::size_t i, const BatchContext& ctx,
                        const LossConfig& cfg) {
  // With only the positive in the denominator every term is -log 1 = 0.
  if (cfg.negatives == NegativesMode::self_only || ctx.size <= 1) return ad::scalar_constant(0.0);
  const int target = static_cast<int>(i);
  const ad::Var e_to_s =
      anchored_loss(views.node_euclidean, ctx.graphs_spherical, target, cfg.temperature);
  const ad::Var s_to_e =
      anchored_loss(views.node_spherical, ctx.graphs_euclidean, target, cfg.temperature);
  return ad::scale(ad::add(e_to_s, s_to_e), 1.0 / static_cast<double>(views.node_euclidean.rows()));
}

ad::Var graph_graph_loss(const ProjectedViews& views, std::size_t i, const BatchContext& ctx,
                         const LossConfig& cfg) {
  if (cfg.negatives == NegativesMode::self_only || ctx.size <= 1) return ad::scalar_constant(0.0);
  const int target = static_cast<int>(i);
  return ad::add(
      anchored_loss(views.graph_euclidean, ctx.graphs_spherical, target, cfg.temperature),
      anchored_loss(views.graph_spherical, ctx.graphs_euclidean, target, cfg.temperature));
}

ad::Var graph_graph_loss(const BatchContext& ctx, const LossConfig& cfg) {
  if (cfg.negatives == NegativesMode::self_only || ctx.size <= 1) return ad::scalar_constant(0.0);
  std::vector<int> targets(ctx.size);
  for (std::size_t i = 0; i < ctx.size; ++i) targets[i] = static_cast<int>(i);
  const double inv_t = 1.0 / cfg.temperature;
  const ad::Var logits_es =
      ad::scale(ad::matmul(ctx.graphs_euclidean, ad::transpose(ctx.graphs_spherical)), inv_t);
  const ad::Var logits_se =
      ad::scale(ad::matmul(ctx.graphs_spherical, ad::transpose(ctx.graphs_euclidean)), inv_t);
  return ad::add(ad::softmax_cross_entropy(logits_es, targets),
                 ad::softmax_cross_entropy(logits_se, targets));
}

LossBreakdown total_loss(const ad::Var& node_graph, const ad::Var& graph_graph,
                         const ad::Var& rec, const LossConfig& cfg) {
  LossBreakdown out;
  out.node_graph = node_graph.scalar();
  out.graph_graph = graph_graph.scalar();
  out.rec = rec.scalar();
  if (!std::isfinite(out.node_graph)) throw NumericError("non-finite loss component L_NG");
  if (!std::isfinite(out.graph_graph)) throw NumericError("non-finite loss component L_GG");
  if (!std::isfinite(out.rec)) throw NumericError("non-finite loss component L_rec");
  out.total = ad::add(ad::add(ad::scale(node_graph, cfg.weight_node_graph),
                              ad::scale(graph_graph, cfg.weight_graph_graph)),
                      ad::scale(rec, cfg.weight_rec));
  return out;
}

}  // namespace gki
