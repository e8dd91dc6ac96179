#include "gki/optim.hpp"

#include <algorithm>
#include <cmath>

namespace gki {

void AdamState::reset(std::span<Param* const> params) {
  m.clear();
  v.clear();
  for (const Param* p : params) {
    m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
  step = 0;
}

void adam_step(std::span<Param* const> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.size() != params.size()) state.reset(params);
  for (const Param* p : params) {
    if (!p->grad.allFinite()) {
      throw NumericError("adam_step: non-finite gradient in parameter '" + p->name + "'");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * p.grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    const auto m_hat = m.array() / c1;
    const auto v_hat = v.array() / c2;
    p.value.array() -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
  }
}

GradCheckReport grad_check(const Objective& f, std::span<Param* const> params, double rtol,
                           double h) {
  for (Param* p : params) p->zero_grad();
  const double base = f(true);
  if (!std::isfinite(base)) throw NumericError("grad_check: objective is not finite");

  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      double& x = p.value.data()[i];
      const double saved = x;
      x = saved + h;
      const double up = f(false);
      x = saved - h;
      const double down = f(false);
      x = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("grad_check: objective is not finite at perturbed point of '" +
                           p.name + "'");
      }
      const double numeric = (up - down) / (2.0 * h);
      const double an = analytic[k].data()[i];
      const double denom = std::max({std::abs(an), std::abs(numeric), 1e-8});
      const double rel = std::abs(an - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_rel_error || report.worst_index < 0) {
        report.max_rel_error = rel;
        report.worst_param = p.name;
        report.worst_index = i;
        report.worst_analytic = an;
        report.worst_numeric = numeric;
      }
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = analytic[k];
  report.pass = report.max_rel_error <= rtol;
  return report;
}

}  // namespace gki
