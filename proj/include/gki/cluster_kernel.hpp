#pragma once

#include <string>
#include <vector>

#include "gki/autodiff.hpp"

namespace gki {

enum class KernelKind { euclidean, spherical };

/// Multiplier applied to the landmark kernel row: identity, the Gram
/// pseudo-inverse, or the PSD square root of the pseudo-inverse (standard
/// Nyström features).
enum class PinvMode { identity, pinv, pinv_sqrt };

PinvMode parse_pinv_mode(const std::string& s);
std::string to_string(PinvMode m);

struct KernelConfig {
  PinvMode pinv_mode = PinvMode::identity;
  double radius = 1.0;
  RowVector center;        // empty means the origin
  double clamp_eps = 1e-6; // arccos argument kept in [-1+eps, 1-eps]

  void validate() const;
};

/// Euclidean projection of z onto the probability simplex.
RowVector sparsemax(const RowVector& z);

double dist_euclidean(const RowVector& x, const RowVector& y);
/// Arc length between the radial projections of x and y onto the configured
/// sphere. Throws NumericError when either point sits at the sphere centre.
double dist_spherical(const RowVector& x, const RowVector& y, const KernelConfig& cfg = {});
/// exp(-d(x, y)).
double kernel_eval(const RowVector& x, const RowVector& y, KernelKind kind,
                   const KernelConfig& cfg = {});
/// Brute-force Gram matrix of kernel_eval over the rows of `points`.
Matrix kernel_gram(const Matrix& points, KernelKind kind, const KernelConfig& cfg = {});

namespace ad {

/// Row-wise sparsemax with its exact Jacobian.
Var sparsemax_rows(const Var& z);
/// n x K matrix of ||a_i - b_k||.
Var pairwise_euclidean(const Var& a, const Var& b);
/// n x K matrix of spherical distances between rows of a and rows of b.
Var pairwise_spherical(const Var& a, const Var& b, const KernelConfig& cfg);
/// n x K matrix of exp(-d(a_i, b_k)).
Var kernel_matrix(const Var& a, const Var& b, KernelKind kind, const KernelConfig& cfg);

}  // namespace ad

/// H = sparsemax(h Cᵀ), one simplex row per node.
ad::Var cluster_assign(const ad::Var& h, const ad::Var& centroids);

/// Σ_l sqrt(eps + ||h_l - H_l C_l||_F²).
ad::Var clustering_loss(const std::vector<ad::Var>& h, const std::vector<ad::Var>& assignments,
                        const std::vector<ad::Var>& centroids, double eps = 1e-12);

/// One layer's landmarks with the Gram-derived multipliers (unset in identity
/// mode). Shared by every graph in a batch.
struct Landmarks {
  ad::Var centroids;
  ad::Var multiplier_euclidean;
  ad::Var multiplier_spherical;
};

Landmarks prepare_landmarks(const ad::Var& centroids, const KernelConfig& cfg);

/// Node-level kernel feature map: [k(h_i, c_1) ... k(h_i, c_K)] · M.
ad::Var nystrom_map(const ad::Var& h, const Landmarks& landmarks, KernelKind kind,
                    const KernelConfig& cfg);
ad::Var nystrom_map(const ad::Var& h, const ad::Var& centroids, KernelKind kind,
                    const KernelConfig& cfg);

/// Column sums of each layer's node map, concatenated across layers (1 x KL).
ad::Var graph_map(const std::vector<ad::Var>& h, const std::vector<Landmarks>& landmarks,
                  KernelKind kind, const KernelConfig& cfg);

/// Node views come from the last layer; graph views pool every layer.
struct KernelViews {
  ad::Var node_euclidean;   // n x K
  ad::Var node_spherical;   // n x K
  ad::Var graph_euclidean;  // 1 x KL
  ad::Var graph_spherical;  // 1 x KL
};

KernelViews make_views(const std::vector<ad::Var>& h, const std::vector<Landmarks>& landmarks,
                       const KernelConfig& cfg);
KernelViews make_views(const std::vector<ad::Var>& h, const std::vector<ad::Var>& centroids,
                       const KernelConfig& cfg);

}  // namespace gki
