#ifndef PAS_UNI_HPP
#define PAS_UNI_HPP

#include <algorithm>
#include <cstddef>
#include <span>

#include "pas/estimators.hpp"
#include "pas/risk.hpp"

namespace pas {

/// Quantities shared by UniPT and UniPAS when second moments are estimated.
///
/// sigma_dot2 / gamma_dot are per-problem plug-ins for the variance of the
/// UniPT estimate and its covariance with Ztilde; sigma_check2 is the same
/// variance built from moments averaged across problems, and only drives the
/// shrinkage weights.
template <typename Scalar = double>
struct UniContext {
  Scalar lambda_hat_clip = 0;
  Vector<Scalar> sigma_dot2;
  Vector<Scalar> gamma_dot;
  Vector<Scalar> sigma_check2;
  Scalar sigma_bar2 = 0;
  Scalar tau_bar2 = 0;
  Scalar gamma_bar = 0;
  // Every prediction variance was zero, so no global lambda could be formed.
  bool degenerate_lambda = false;
};

struct GlobalLambda {
  double raw = 0.0;
  double clipped = 0.0;
  bool degenerate = false;
};

/// Single variance-minimizing lambda across problems, from sample moments.
template <typename Scalar = double>
GlobalLambda global_lambda(std::span<const SecondMoments> moms, std::span<const ProblemSize> sizes) {
  if (moms.size() != sizes.size()) throw InputError("global_lambda: length mismatch");
  if (moms.empty()) throw InputError("global_lambda: no problems");
  Scalar num = 0, den = 0;
  for (std::size_t j = 0; j < moms.size(); ++j) {
    const Scalar n = static_cast<Scalar>(sizes[j].n);
    const Scalar big_n = static_cast<Scalar>(sizes[j].big_n);
    num += Scalar(moms[j].gamma) / n;
    den += (n + big_n) / (n * big_n) * Scalar(moms[j].tau2);
  }
  GlobalLambda out;
  if (den == Scalar(0)) {
    out.degenerate = true;
    return out;
  }
  out.raw = static_cast<double>(num / den);
  out.clipped = std::clamp(out.raw, 0.0, 1.0);
  return out;
}

template <typename Scalar = double>
Scalar lambda_hat_clip(std::span<const SecondMoments> moms, std::span<const ProblemSize> sizes) {
  return static_cast<Scalar>(global_lambda<Scalar>(moms, sizes).clipped);
}

/// PPI with one shared lambda: Ybar_j + lambda * (Ztilde_j - Zbar_j).
template <typename Scalar = double>
Vector<Scalar> unipt(std::span<const AggregatedStats> stats, Scalar lambda_clip) {
  Vector<Scalar> out(static_cast<Eigen::Index>(stats.size()));
  for (std::size_t j = 0; j < stats.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = ppi_lambda(stats[j], static_cast<double>(lambda_clip));
  return out;
}

namespace detail {

template <typename Scalar>
Scalar uni_variance(Scalar sigma2, Scalar tau2, Scalar gamma, Scalar n, Scalar big_n,
                    Scalar lambda) {
  return sigma2 / n + (big_n + n) / (big_n * n) * lambda * lambda * tau2 -
         Scalar(2) / n * lambda * gamma;
}

}  // namespace detail

template <typename Scalar = double>
UniContext<Scalar> uni_plugins(std::span<const SecondMoments> moms,
                               std::span<const ProblemSize> sizes, Scalar lambda_clip) {
  if (moms.size() != sizes.size()) throw InputError("uni_plugins: length mismatch");
  if (moms.empty()) throw InputError("uni_plugins: no problems");
  const auto m = static_cast<Eigen::Index>(moms.size());
  UniContext<Scalar> u;
  u.lambda_hat_clip = lambda_clip;
  u.sigma_dot2.resize(m);
  u.gamma_dot.resize(m);
  u.sigma_check2.resize(m);

  Scalar s_sum = 0, t_sum = 0, g_sum = 0;
  for (const auto& mom : moms) {
    s_sum += Scalar(mom.sigma2);
    t_sum += Scalar(mom.tau2);
    g_sum += Scalar(mom.gamma);
  }
  u.sigma_bar2 = s_sum / static_cast<Scalar>(m);
  u.tau_bar2 = t_sum / static_cast<Scalar>(m);
  u.gamma_bar = g_sum / static_cast<Scalar>(m);

  for (Eigen::Index j = 0; j < m; ++j) {
    const Scalar n = static_cast<Scalar>(sizes[j].n);
    const Scalar big_n = static_cast<Scalar>(sizes[j].big_n);
    u.sigma_dot2[j] = detail::uni_variance(Scalar(moms[j].sigma2), Scalar(moms[j].tau2),
                                           Scalar(moms[j].gamma), n, big_n, lambda_clip);
    u.gamma_dot[j] = lambda_clip * Scalar(moms[j].tau2) / big_n;
    const Scalar check =
        detail::uni_variance(u.sigma_bar2, u.tau_bar2, u.gamma_bar, n, big_n, lambda_clip);
    u.sigma_check2[j] = std::max(variance_floor(u.sigma_bar2 / n), check);
  }
  return u;
}

/// Modified CURE for UniPAS: weights from sigma_check2, risk terms from the
/// per-problem plug-ins.
template <typename Scalar>
Scalar cure_hat(const Vector<Scalar>& upt_vals, const Vector<Scalar>& z_tildes,
                const UniContext<Scalar>& uni, Omega<Scalar> omega) {
  return detail::mean_cure(upt_vals, z_tildes, uni.sigma_check2, uni.sigma_dot2, uni.gamma_dot,
                           omega);
}

}  // namespace pas

#endif  // PAS_UNI_HPP
