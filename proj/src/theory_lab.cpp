#include "gki/theory_lab.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "gki/rng.hpp"

namespace gki {

namespace {

RowVector gaussian(Rng& rng, int dim) {
  RowVector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.normal();
  return v;
}

constexpr double kNoiseFloor = 1e-14;
constexpr double kTol = 1e-12;

}  // namespace

SpherePairSample sample_sphere_pairs(std::uint64_t seed, double radius, int dim,
                                     const std::vector<double>& m_values) {
  if (dim < 2) throw DataError("sample_sphere_pairs: dim must be >= 2");
  if (!(radius > 0.0)) throw DataError("sample_sphere_pairs: radius must be > 0");
  Rng rng = Rng(seed).stream("sphere_pairs");
  SpherePairSample s;
  s.dim = dim;
  s.radius = radius;
  for (double m : m_values) {
    if (!(m > 0.0 && m < std::numbers::pi * radius)) {
      throw DataError("sample_sphere_pairs: m must lie in (0, pi*radius), got " + std::to_string(m));
    }
    RowVector u;
    do {
      u = gaussian(rng, dim);
    } while (u.norm() < 1e-8);
    u /= u.norm();
    RowVector t;
    do {
      t = gaussian(rng, dim);
      t -= t.dot(u) * u;
    } while (t.norm() < 1e-8);
    t /= t.norm();
    const double theta = m / radius;
    s.pairs.push_back({radius * u, radius * (std::cos(theta) * u + std::sin(theta) * t), m});
  }
  return s;
}

double sphere_arc(const RowVector& x, const RowVector& y, double radius) {
  const RowVector u = x / x.norm();
  const RowVector v = y / y.norm();
  return radius * 2.0 * std::atan2((u - v).norm(), (u + v).norm());
}

BoundReport verify_theorem1(const SpherePairSample& sample, double fit_lo, double fit_hi) {
  BoundReport rep;
  rep.fit_lo = fit_lo;
  rep.fit_hi = fit_hi;
  for (const auto& p : sample.pairs) {
    BoundRow row;
    row.m = p.m;
    row.d_e = dist_euclidean(p.x, p.y);
    // the sphere is its own osculating sphere, so the spherelet distance is the arc
    row.d_s = sphere_arc(p.x, p.y, sample.radius);
    row.gap = row.d_s - row.d_e;
    row.excluded = (p.m - row.d_e) < kNoiseFloor;
    row.in_fit = !row.excluded && p.m >= fit_lo * (1 - 1e-12) && p.m <= fit_hi * (1 + 1e-12);
    rep.excluded += row.excluded;
    rep.rows.push_back(row);
  }

  // OLS slope of log(m - d_E) against log m inside the window
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (const auto& r : rep.rows) {
    if (!r.in_fit) continue;
    const double lx = std::log(r.m), ly = std::log(r.m - r.d_e);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++k;
    rep.c3 = std::max(rep.c3, (r.m - r.d_e) / (r.m * r.m * r.m));
  }
  if (k >= 2) {
    rep.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    rep.slope_ok = rep.slope >= 2.8 && rep.slope <= 3.2;
  }

  rep.chord_ok = true;
  rep.lower_ok = k >= 1;
  rep.bound_ok = k >= 1;
  for (const auto& r : rep.rows) {
    rep.max_chord_violation = std::max(rep.max_chord_violation, r.d_e - r.d_s);
    if (r.d_e - r.d_s > kTol || r.d_e - r.m > kTol) rep.chord_ok = false;
    const double m3 = r.m * r.m * r.m;
    if (r.d_e < r.m - rep.c3 * m3 - kTol) rep.lower_ok = false;
    // the lower O(m^4) side has a zero constant here because d_S = m
    if (r.gap < -kTol || r.gap > rep.c3 * m3 + kTol) rep.bound_ok = false;
  }
  return rep;
}

void BoundReport::write_csv(std::ostream& out) const {
  out << "m,d_E,d_S,d_S_minus_d_E,m_minus_d_E,in_fit,excluded\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n", r.m, r.d_e, r.d_s, r.gap,
                  r.m - r.d_e, r.in_fit ? 1 : 0, r.excluded ? 1 : 0);
    out << buf;
  }
}

PsdReport verify_psd(const Matrix& points, KernelKind kind, const KernelConfig& cfg) {
  if (points.rows() < 1) throw DataError("verify_psd: no points");
  if (kind == KernelKind::spherical) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (std::abs(points.row(i).norm() - 1.0) > 1e-9) {
        throw DataError("verify_psd: spherical kind needs unit-norm points");
      }
    }
  }
  PsdReport rep;
  rep.n = static_cast<int>(points.rows());
  rep.min_eigenvalue = min_eigenvalue(kernel_gram(points, kind, cfg));
  rep.pass = rep.min_eigenvalue >= -1e-8;
  return rep;
}

namespace {

std::vector<int> nearest(const Matrix& dist) {
  std::vector<int> nn(static_cast<std::size_t>(dist.rows()), -1);
  for (Eigen::Index i = 0; i < dist.rows(); ++i) {
    double best = 0.0;
    for (Eigen::Index j = 0; j < dist.cols(); ++j) {
      if (j == i) continue;
      if (nn[i] < 0 || dist(i, j) < best) {
        best = dist(i, j);
        nn[i] = static_cast<int>(j);
      }
    }
  }
  return nn;
}

Matrix geometry_distances(const Matrix& points, const Matrix& landmarks, KernelKind kind,
                          const KernelConfig& cfg) {
  const Eigen::Index n = points.rows();
  Matrix d(n, n);
  if (landmarks.rows() == 0) {
    const Matrix g = kernel_gram(points, kind, cfg);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) d(i, j) = g(i, i) + g(j, j) - 2.0 * g(i, j);
    }
    return d;
  }
  Matrix feat(n, landmarks.rows());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < landmarks.rows(); ++k) {
      feat(i, k) = kernel_eval(points.row(i), landmarks.row(k), kind, cfg);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = (feat.row(i) - feat.row(j)).squaredNorm();
  }
  return d;
}

}  // namespace

FlipReport nn_perturbation_demo(const Matrix& points, const Matrix& landmarks,
                                const KernelConfig& cfg) {
  if (points.rows() < 2) throw DataError("nn_perturbation_demo: needs at least 2 points");
  if (landmarks.rows() > 0 && landmarks.cols() != points.cols()) {
    throw ShapeError("nn_perturbation_demo: landmark dimension mismatch");
  }
  FlipReport rep;
  rep.n = static_cast<int>(points.rows());
  rep.nn_euclidean = nearest(geometry_distances(points, landmarks, KernelKind::euclidean, cfg));
  rep.nn_spherical = nearest(geometry_distances(points, landmarks, KernelKind::spherical, cfg));
  for (int i = 0; i < rep.n; ++i) rep.flips += rep.nn_euclidean[i] != rep.nn_spherical[i];
  rep.fraction = static_cast<double>(rep.flips) / rep.n;
  return rep;
}

}  // namespace gki
