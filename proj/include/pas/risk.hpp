#ifndef PAS_RISK_HPP
#define PAS_RISK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pas/estimators.hpp"

namespace pas {

/// Unbiased risk of c*X + (1-c)*Y as an estimator of E[X], where X has
/// variance sigma2 and Cov(X, Y) = gamma.
template <typename Scalar>
Scalar cure_single(Scalar x, Scalar y, Scalar c, Scalar sigma2, Scalar gamma) {
  if (!(c >= Scalar(0) && c <= Scalar(1))) throw InputError("cure_single: c must lie in [0, 1]");
  if (c == Scalar(1)) return sigma2;
  const Scalar shrunk = (Scalar(1) - c) * (x - y);
  return (Scalar(2) * c - Scalar(1)) * sigma2 + Scalar(2) * (Scalar(1) - c) * gamma +
         shrunk * shrunk;
}

namespace detail {

template <typename Scalar>
Scalar mean_cure(const Vector<Scalar>& src, const Vector<Scalar>& tgt,
                 const Vector<Scalar>& weight_var, const Vector<Scalar>& risk_var,
                 const Vector<Scalar>& risk_cov, Omega<Scalar> omega) {
  const Eigen::Index m = src.size();
  if (tgt.size() != m || weight_var.size() != m || risk_var.size() != m || risk_cov.size() != m)
    throw InputError("risk estimate: length mismatch");
  if (m == 0) throw InputError("risk estimate: no problems");
  Scalar total = 0;
  for (Eigen::Index j = 0; j < m; ++j)
    total += cure_single(src[j], tgt[j], omega.weight(weight_var[j]), risk_var[j], risk_cov[j]);
  return total / static_cast<Scalar>(m);
}

}  // namespace detail

/// Compound CURE of the PAS family at omega. The infinite sentinel gives the
/// mean PT variance.
template <typename Scalar>
Scalar cure_compound(const Vector<Scalar>& pt_vals, const Vector<Scalar>& z_tildes,
                     const PowerTuningSet<Scalar>& ctxs, Omega<Scalar> omega) {
  return detail::mean_cure(pt_vals, z_tildes, ctxs.sigma_tilde2, ctxs.sigma_tilde2,
                           ctxs.gamma_tilde, omega);
}

/// CURE for shrinking Ybar_j toward the independent Ztilde_j.
template <typename Scalar>
Scalar cure_shrink_classical(const Vector<Scalar>& y_bars, const Vector<Scalar>& z_tildes,
                             const Vector<Scalar>& classical_vars, Omega<Scalar> omega) {
  const Vector<Scalar> zero = Vector<Scalar>::Zero(y_bars.size());
  return detail::mean_cure(y_bars, z_tildes, classical_vars, classical_vars, zero, omega);
}

/// SURE for shrinking PT_j toward the PT group mean. The sentinel returns
/// the omega -> infinity limit, the mean PT variance.
template <typename Scalar>
Scalar sure_grand_mean(const Vector<Scalar>& pt_vals, const PowerTuningSet<Scalar>& ctxs,
                       Omega<Scalar> omega) {
  const Eigen::Index m = pt_vals.size();
  if (m < 2) throw InputError("sure_grand_mean: needs at least 2 problems");
  if (ctxs.size() != m) throw InputError("sure_grand_mean: length mismatch");
  if (omega.is_infinite()) return ctxs.sigma_tilde2.mean();
  const Scalar grand = pt_vals.mean();
  const Scalar w = omega.value();
  const Scalar k = Scalar(2) / static_cast<Scalar>(m) - Scalar(1);
  Scalar total = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Scalar v = ctxs.sigma_tilde2[j];
    const Scalar b = Scalar(1) - omega.weight(v);
    const Scalar d = b * (pt_vals[j] - grand);
    total += d * d + b * (w + k * v);
  }
  return total / static_cast<Scalar>(m);
}

/// Objective values over the omega grid. The last entry is the infinite
/// sentinel.
template <typename Scalar = double>
struct RiskCurve {
  std::vector<Omega<Scalar>> omegas;
  std::vector<Scalar> risks;
  std::size_t argmin_index = 0;

  Omega<Scalar> argmin() const { return omegas.at(argmin_index); }
  Scalar min_risk() const { return risks.at(argmin_index); }
};

inline constexpr std::size_t kDefaultGridSize = 512;

/// {0} then `size` log-spaced points spanning 12 decades around `scale`,
/// then the infinite sentinel.
template <typename Scalar = double>
std::vector<Omega<Scalar>> omega_grid(Scalar scale, std::size_t size = kDefaultGridSize) {
  if (!(scale > Scalar(0)) || !std::isfinite(static_cast<double>(scale)))
    throw InputError("omega_grid: scale must be positive and finite");
  if (size < 2) throw InputError("omega_grid: need at least 2 interior points");
  std::vector<Omega<Scalar>> g;
  g.reserve(size + 2);
  g.emplace_back(Scalar(0));
  for (std::size_t k = 0; k < size; ++k) {
    const Scalar expo = Scalar(-6) + Scalar(12) * static_cast<Scalar>(k) / static_cast<Scalar>(size - 1);
    g.emplace_back(scale * std::pow(Scalar(10), expo));
  }
  g.push_back(Omega<Scalar>::infinity());
  return g;
}

/// Median of the positive-or-zero variances, or 1 when they are all zero.
template <typename Scalar>
Scalar grid_scale(const Vector<Scalar>& variances) {
  if (variances.size() == 0) return Scalar(1);
  std::vector<Scalar> v(variances.data(), variances.data() + variances.size());
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  const Scalar med = v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / Scalar(2);
  return med > Scalar(0) ? med : Scalar(1);
}

/// Evaluates `objective` on the grid and returns the whole curve. Ties go to
/// the smaller omega; comparisons use exact float ordering.
template <typename Scalar, typename Objective>
RiskCurve<Scalar> minimize_omega(Objective&& objective, Scalar scale,
                                 std::size_t grid_size = kDefaultGridSize) {
  RiskCurve<Scalar> curve;
  curve.omegas = omega_grid<Scalar>(scale, grid_size);
  curve.risks.reserve(curve.omegas.size());
  for (const auto& w : curve.omegas) {
    const Scalar r = objective(w);
    if (!std::isfinite(static_cast<double>(r))) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", static_cast<double>(w.value()));
      throw NumericError(std::string("risk objective is not finite at omega=") + buf);
    }
    curve.risks.push_back(r);
  }
  for (std::size_t k = 1; k < curve.risks.size(); ++k)
    if (curve.risks[k] < curve.risks[curve.argmin_index]) curve.argmin_index = k;
  return curve;
}

template <typename Scalar>
void write_risk_curve_csv(std::ostream& out, const RiskCurve<Scalar>& curve) {
  out << "omega,risk\n";
  char buf[64];
  for (std::size_t k = 0; k < curve.omegas.size(); ++k) {
    if (curve.omegas[k].is_infinite()) {
      out << "inf";
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(curve.omegas[k].value()));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(curve.risks[k]));
    out << ',' << buf << '\n';
  }
}

}  // namespace pas

#endif  // PAS_RISK_HPP
