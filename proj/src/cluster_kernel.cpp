#include "gki/cluster_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace gki {

PinvMode parse_pinv_mode(const std::string& s) {
  if (s == "identity") return PinvMode::identity;
  if (s == "pinv") return PinvMode::pinv;
  if (s == "pinv_sqrt") return PinvMode::pinv_sqrt;
  throw DataError("unknown pinv mode '" + s + "' (expected identity|pinv|pinv_sqrt)");
}

std::string to_string(PinvMode m) {
  switch (m) {
    case PinvMode::identity: return "identity";
    case PinvMode::pinv: return "pinv";
    case PinvMode::pinv_sqrt: return "pinv_sqrt";
  }
  return "identity";
}

void KernelConfig::validate() const {
  if (!(radius > 0.0)) throw DataError("kernel radius must be > 0");
  if (!(clamp_eps > 0.0 && clamp_eps <= 1e-3)) throw DataError("clamp_eps must be in (0, 1e-3]");
}

RowVector sparsemax(const RowVector& z) {
  const Eigen::Index k = z.size();
  std::vector<double> sorted(z.data(), z.data() + k);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0;
  double support_sum = 0.0;
  Eigen::Index support = 0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cumsum += sorted[static_cast<std::size_t>(j)];
    if (1.0 + static_cast<double>(j + 1) * sorted[static_cast<std::size_t>(j)] > cumsum) {
      support = j + 1;
      support_sum = cumsum;
    }
  }
  const double tau = (support_sum - 1.0) / static_cast<double>(support);
  return (z.array() - tau).max(0.0).matrix();
}

double dist_euclidean(const RowVector& x, const RowVector& y) {
  if (x.size() != y.size()) throw ShapeError("dist_euclidean: dimension mismatch");
  return (x - y).norm();
}

namespace {

RowVector unit_from_center(const RowVector& x, const KernelConfig& cfg) {
  RowVector v = cfg.center.size() == 0 ? x : RowVector(x - cfg.center);
  const double norm = v.norm();
  if (!(norm > 0.0)) throw NumericError("spherical projection undefined at the sphere centre");
  return v / norm;
}

double clamped_arccos(double c, double eps) {
  return std::acos(std::clamp(c, -1.0 + eps, 1.0 - eps));
}

}  // namespace

double dist_spherical(const RowVector& x, const RowVector& y, const KernelConfig& cfg) {
  if (x.size() != y.size()) throw ShapeError("dist_spherical: dimension mismatch");
  const double c = unit_from_center(x, cfg).dot(unit_from_center(y, cfg));
  return cfg.radius * clamped_arccos(c, cfg.clamp_eps);
}

double kernel_eval(const RowVector& x, const RowVector& y, KernelKind kind,
                   const KernelConfig& cfg) {
  const double d = kind == KernelKind::euclidean ? dist_euclidean(x, y)
                                                 : dist_spherical(x, y, cfg);
  return std::exp(-d);
}

Matrix kernel_gram(const Matrix& points, KernelKind kind, const KernelConfig& cfg) {
  const Eigen::Index n = points.rows();
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      g(i, j) = kernel_eval(points.row(i), points.row(j), kind, cfg);
    }
  }
  return g;
}

namespace ad {

Var sparsemax_rows(const Var& z) {
  Matrix out(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) out.row(i) = sparsemax(z.value().row(i));
  return make_op(std::move(out), {z}, [](Node& n) {
    Matrix g = Matrix::Zero(n.grad.rows(), n.grad.cols());
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      double sum = 0.0;
      int count = 0;
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        if (n.value(i, j) > 0.0) {
          sum += n.grad(i, j);
          ++count;
        }
      }
      const double mean = count > 0 ? sum / count : 0.0;
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        if (n.value(i, j) > 0.0) g(i, j) = n.grad(i, j) - mean;
      }
    }
    n.inputs[0]->accumulate(g);
  });
}

Var pairwise_euclidean(const Var& a, const Var& b) {
  require_shape(a.cols() == b.cols(), "pairwise_euclidean", a.value(), b.value());
  const Matrix& x = a.value();
  const Matrix& y = b.value();
  Matrix d(x.rows(), y.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < y.rows(); ++k) d(i, k) = (x.row(i) - y.row(k)).norm();
  }
  return make_op(std::move(d), {a, b}, [](Node& n) {
    Node& na = *n.inputs[0];
    Node& nb = *n.inputs[1];
    // W = G / D, zero where the distance vanishes (subgradient 0).
    Matrix w(n.grad.rows(), n.grad.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double dist = n.value.data()[i];
      w.data()[i] = dist > 0.0 ? n.grad.data()[i] / dist : 0.0;
    }
    if (na.requires_grad) {
      Matrix g = w.rowwise().sum().asDiagonal() * na.value - w * nb.value;
      na.accumulate(g);
    }
    if (nb.requires_grad) {
      Matrix g = w.colwise().sum().transpose().asDiagonal() * nb.value - w.transpose() * na.value;
      nb.accumulate(g);
    }
  });
}

namespace {

Var centered(const Var& a, const KernelConfig& cfg) {
  if (cfg.center.size() == 0) return a;
  require_shape(cfg.center.size() == a.cols(), "sphere centre", a.value(), cfg.center);
  return add_row(a, constant(Matrix(-cfg.center)));
}

void require_off_center(const Var& a) {
  if ((a.value().rowwise().norm().array() <= 0.0).any()) {
    throw NumericError("spherical projection undefined at the sphere centre");
  }
}

// r * arccos(clamp(c)); derivative zero where the clamp is active.
Var arc_length(const Var& cosines, double radius, double eps) {
  Matrix out = cosines.value().unaryExpr(
      [radius, eps](double c) { return radius * clamped_arccos(c, eps); });
  return make_op(std::move(out), {cosines}, [radius, eps](Node& n) {
    const Matrix& c = n.inputs[0]->value;
    Matrix g(c.rows(), c.cols());
    for (Eigen::Index i = 0; i < c.size(); ++i) {
      const double v = c.data()[i];
      g.data()[i] = (v > -1.0 + eps && v < 1.0 - eps)
                        ? -radius / std::sqrt(1.0 - v * v) * n.grad.data()[i]
                        : 0.0;
    }
    n.inputs[0]->accumulate(g);
  });
}

}  // namespace

Var pairwise_spherical(const Var& a, const Var& b, const KernelConfig& cfg) {
  require_shape(a.cols() == b.cols(), "pairwise_spherical", a.value(), b.value());
  const Var ca = centered(a, cfg);
  const Var cb = centered(b, cfg);
  require_off_center(ca);
  require_off_center(cb);
  const Var cosines = matmul(normalize_rows(ca), transpose(normalize_rows(cb)));
  return arc_length(cosines, cfg.radius, cfg.clamp_eps);
}

Var kernel_matrix(const Var& a, const Var& b, KernelKind kind, const KernelConfig& cfg) {
  const Var d = kind == KernelKind::euclidean ? pairwise_euclidean(a, b)
                                              : pairwise_spherical(a, b, cfg);
  return exp(scale(d, -1.0));
}

}  // namespace ad

ad::Var cluster_assign(const ad::Var& h, const ad::Var& centroids) {
  return ad::sparsemax_rows(ad::matmul(h, ad::transpose(centroids)));
}

ad::Var clustering_loss(const std::vector<ad::Var>& h, const std::vector<ad::Var>& assignments,
                        const std::vector<ad::Var>& centroids, double eps) {
  if (h.size() != assignments.size() || h.size() != centroids.size() || h.empty()) {
    throw ShapeError("clustering_loss: per-layer lists differ in length or are empty");
  }
  ad::Var total;
  for (std::size_t l = 0; l < h.size(); ++l) {
    const ad::Var residual = ad::sub(h[l], ad::matmul(assignments[l], centroids[l]));
    const ad::Var term = ad::smoothed_frobenius(residual, eps);
    total = total ? ad::add(total, term) : term;
  }
  return total;
}

namespace {

ad::Var gram_multiplier(const ad::Var& centroids, KernelKind kind, const KernelConfig& cfg) {
  const ad::Var gram = ad::kernel_matrix(centroids, centroids, kind, cfg);
  if (!gram.value().allFinite()) throw NumericError("landmark Gram matrix is not finite");
  const double lambda_max = symmetric_eigen(gram.value()).values.maxCoeff();
  const double cutoff = 1e-10 * std::max(lambda_max, 0.0);
  if (cfg.pinv_mode == PinvMode::pinv) {
    return ad::spectral_function(
        gram, [cutoff](double l) { return l > cutoff ? 1.0 / l : 0.0; },
        [cutoff](double l) { return l > cutoff ? -1.0 / (l * l) : 0.0; });
  }
  return ad::spectral_function(
      gram, [cutoff](double l) { return l > cutoff ? 1.0 / std::sqrt(l) : 0.0; },
      [cutoff](double l) { return l > cutoff ? -0.5 / (l * std::sqrt(l)) : 0.0; });
}

}  // namespace

Landmarks prepare_landmarks(const ad::Var& centroids, const KernelConfig& cfg) {
  Landmarks lm{centroids, {}, {}};
  if (cfg.pinv_mode != PinvMode::identity) {
    lm.multiplier_euclidean = gram_multiplier(centroids, KernelKind::euclidean, cfg);
    lm.multiplier_spherical = gram_multiplier(centroids, KernelKind::spherical, cfg);
  }
  return lm;
}

ad::Var nystrom_map(const ad::Var& h, const Landmarks& landmarks, KernelKind kind,
                    const KernelConfig& cfg) {
  const ad::Var k = ad::kernel_matrix(h, landmarks.centroids, kind, cfg);
  if (cfg.pinv_mode == PinvMode::identity) return k;
  const ad::Var& m = kind == KernelKind::euclidean ? landmarks.multiplier_euclidean
                                                   : landmarks.multiplier_spherical;
  if (!m) throw NumericError("nystrom_map: landmarks prepared without Gram multipliers");
  return ad::matmul(k, m);
}

ad::Var nystrom_map(const ad::Var& h, const ad::Var& centroids, KernelKind kind,
                    const KernelConfig& cfg) {
  return nystrom_map(h, prepare_landmarks(centroids, cfg), kind, cfg);
}

ad::Var graph_map(const std::vector<ad::Var>& h, const std::vector<Landmarks>& landmarks,
                  KernelKind kind, const KernelConfig& cfg) {
  if (h.empty() || h.size() != landmarks.size()) {
    throw ShapeError("graph_map: need one landmark set per layer");
  }
  std::vector<ad::Var> pooled;
  for (std::size_t l = 0; l < h.size(); ++l) {
    pooled.push_back(ad::col_sum(nystrom_map(h[l], landmarks[l], kind, cfg)));
  }
  return ad::concat_cols(pooled);
}

KernelViews make_views(const std::vector<ad::Var>& h, const std::vector<Landmarks>& landmarks,
                       const KernelConfig& cfg) {
  if (h.empty() || h.size() != landmarks.size()) {
    throw ShapeError("make_views: need one landmark set per layer");
  }
  KernelViews views;
  std::vector<ad::Var> pooled_e, pooled_s;
  for (std::size_t l = 0; l < h.size(); ++l) {
    const ad::Var node_e = nystrom_map(h[l], landmarks[l], KernelKind::euclidean, cfg);
    const ad::Var node_s = nystrom_map(h[l], landmarks[l], KernelKind::spherical, cfg);
    pooled_e.push_back(ad::col_sum(node_e));
    pooled_s.push_back(ad::col_sum(node_s));
    if (l + 1 == h.size()) {
      views.node_euclidean = node_e;
      views.node_spherical = node_s;
    }
  }
  views.graph_euclidean = ad::concat_cols(pooled_e);
  views.graph_spherical = ad::concat_cols(pooled_s);
  return views;
}

KernelViews make_views(const std::vector<ad::Var>& h, const std::vector<ad::Var>& centroids,
                       const KernelConfig& cfg) {
  std::vector<Landmarks> lms;
  for (const auto& c : centroids) lms.push_back(prepare_landmarks(c, cfg));
  return make_views(h, lms, cfg);
}

}  // namespace gki
