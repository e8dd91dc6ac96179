#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "gki/cluster_kernel.hpp"

namespace gki {

struct SpherePair {
  RowVector x;
  RowVector y;
  double m = 0.0;  // geodesic distance
};

struct SpherePairSample {
  int dim = 0;
  double radius = 1.0;
  std::vector<SpherePair> pairs;
};

/// One pair per entry of `m_values`: x uniform on the radius-ρ sphere, y
/// obtained by rotating x through angle m/ρ along a random tangent direction.
SpherePairSample sample_sphere_pairs(std::uint64_t seed, double radius, int dim,
                                     const std::vector<double>& m_values);

/// Arc length between two points of the radius-ρ sphere. Uses the
/// 2·atan2(|u-v|, |u+v|) form, which stays accurate for tiny angles.
double sphere_arc(const RowVector& x, const RowVector& y, double radius);

struct BoundRow {
  double m = 0.0;
  double d_e = 0.0;
  double d_s = 0.0;
  double gap = 0.0;  // d_s - d_e
  bool in_fit = false;
  bool excluded = false;  // below the noise floor
};

struct BoundReport {
  std::vector<BoundRow> rows;
  double fit_lo = 1e-3;
  double fit_hi = 1e-1;
  double slope = 0.0;     // OLS slope of log(m - d_E) against log m
  double c3 = 0.0;        // fitted constant in m - d_E <= c3·m³
  double max_chord_violation = 0.0;  // max(d_E - d_S, 0)
  bool chord_ok = false;  // d_E <= d_S = m
  bool lower_ok = false;  // d_E >= m - c3·m³
  bool bound_ok = false;  // d_S - d_E within [-c4·m⁴, c3·m³]
  bool slope_ok = false;  // slope in [2.8, 3.2]
  int excluded = 0;

  bool pass() const { return chord_ok && lower_ok && bound_ok && slope_ok; }
  void write_csv(std::ostream& out) const;
};

BoundReport verify_theorem1(const SpherePairSample& sample, double fit_lo = 1e-3,
                            double fit_hi = 1e-1);

struct PsdReport {
  int n = 0;
  double min_eigenvalue = 0.0;
  bool pass = false;
};

/// Gram matrix of kernel_eval over the rows of `points`; passes when the
/// smallest eigenvalue is >= -1e-8.
PsdReport verify_psd(const Matrix& points, KernelKind kind, const KernelConfig& cfg = {});

struct FlipReport {
  int n = 0;
  std::vector<int> nn_euclidean;
  std::vector<int> nn_spherical;
  int flips = 0;
  double fraction = 0.0;
};

/// 1-NN of every point under the two kernel geometries. With landmarks the
/// points are compared through their identity-mode Nyström feature rows;
/// without landmarks through the exact feature-space distance 2 - 2k(x, y).
/// Ties go to the smaller index.
FlipReport nn_perturbation_demo(const Matrix& points, const Matrix& landmarks,
                                const KernelConfig& cfg = {});

}  // namespace gki
