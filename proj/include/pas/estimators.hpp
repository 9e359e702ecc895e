#ifndef PAS_ESTIMATORS_HPP
#define PAS_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pas/types.hpp"

namespace pas {

/// Global shrinkage parameter. The infinite value is an explicit sentinel:
/// weights become exactly 1, so shrinkage returns its source untouched.
template <typename Scalar = double>
class Omega {
 public:
  constexpr Omega() = default;
  constexpr explicit Omega(Scalar value) : value_(value) {}

  static constexpr Omega infinity() { return Omega(std::numeric_limits<Scalar>::infinity()); }

  constexpr bool is_infinite() const { return std::isinf(value_); }
  constexpr Scalar value() const { return value_; }

  /// omega / (omega + variance), in [0, 1) for finite omega.
  Scalar weight(Scalar variance) const {
    if (is_infinite()) return Scalar(1);
    if (value_ == Scalar(0)) return Scalar(0);
    return value_ / (value_ + variance);
  }

  friend constexpr bool operator==(Omega a, Omega b) { return a.value_ == b.value_; }

 private:
  Scalar value_ = Scalar(0);
};

/// Lower bound applied to the variance of a power-tuned estimate.
template <typename Scalar>
Scalar variance_floor(Scalar classical_variance) {
  return Scalar(1e-12) * std::max(Scalar(1), classical_variance);
}

/// Per-problem power-tuning quantities: the variance-optimal lambda, the
/// resulting estimator variance, and its covariance with the unlabeled
/// prediction mean.
template <typename Scalar = double>
struct PowerTuning {
  Scalar lambda_star = 0;
  Scalar sigma_tilde2 = 0;
  Scalar gamma_tilde = 0;
};

/// Struct-of-arrays view over the power-tuning quantities of m problems.
template <typename Scalar = double>
struct PowerTuningSet {
  Vector<Scalar> lambda_star;
  Vector<Scalar> sigma_tilde2;
  Vector<Scalar> gamma_tilde;

  Eigen::Index size() const { return sigma_tilde2.size(); }

  static PowerTuningSet from(std::span<const PowerTuning<Scalar>> items) {
    const auto m = static_cast<Eigen::Index>(items.size());
    PowerTuningSet s{Vector<Scalar>(m), Vector<Scalar>(m), Vector<Scalar>(m)};
    for (Eigen::Index j = 0; j < m; ++j) {
      s.lambda_star[j] = items[j].lambda_star;
      s.sigma_tilde2[j] = items[j].sigma_tilde2;
      s.gamma_tilde[j] = items[j].gamma_tilde;
    }
    return s;
  }
};

inline double classical(const AggregatedStats& s) { return s.y_bar; }

inline double prediction_avg(const AggregatedStats& s) { return s.z_tilde; }

/// Ybar + lambda * (Ztilde - Zbar). lambda = 1 is vanilla PPI, 0 is classical.
inline double ppi_lambda(const AggregatedStats& s, double lambda) {
  return s.y_bar + lambda * (s.z_tilde - s.z_bar);
}

inline double ppi(const AggregatedStats& s) { return ppi_lambda(s, 1.0); }

template <typename Scalar = double>
PowerTuning<Scalar> pt_context(const AggregatedStats& s, const SecondMoments& mom) {
  const Scalar n = static_cast<Scalar>(s.n);
  const Scalar big_n = static_cast<Scalar>(s.big_n);
  const Scalar classical_var = Scalar(mom.sigma2) / n;
  const Scalar floor = variance_floor(classical_var);
  PowerTuning<Scalar> ctx;
  if (mom.tau2 > 0.0) {
    const Scalar gamma = mom.gamma;
    const Scalar tau2 = mom.tau2;
    ctx.lambda_star = big_n / (n + big_n) * gamma / tau2;
    ctx.sigma_tilde2 =
        std::max(floor, classical_var - big_n / (n * (n + big_n)) * gamma * gamma / tau2);
    ctx.gamma_tilde = gamma / (n + big_n);
  } else {
    // Constant predictions carry no signal: fall back to the classical mean.
    ctx.sigma_tilde2 = std::max(floor, classical_var);
  }
  return ctx;
}

template <typename Scalar>
double pt(const AggregatedStats& s, const PowerTuning<Scalar>& ctx) {
  return ppi_lambda(s, static_cast<double>(ctx.lambda_star));
}

/// Shrinks each source value toward its target with weight
/// omega / (omega + variance_j) on the source.
template <typename Scalar>
Vector<Scalar> shrink_toward(const Vector<Scalar>& source, const Vector<Scalar>& target,
                             const Vector<Scalar>& variances, Omega<Scalar> omega) {
  if (source.size() != target.size() || source.size() != variances.size())
    throw InputError("shrink_toward: length mismatch");
  if (omega.is_infinite()) return source;
  if (omega.value() == Scalar(0)) return target;
  const Vector<Scalar> w = variances.unaryExpr([&](Scalar v) { return omega.weight(v); });
  return w.cwiseProduct(source) + (Scalar(1) - w.array()).matrix().cwiseProduct(target);
}

template <typename Scalar>
Vector<Scalar> shrinkage_weights(const Vector<Scalar>& variances, Omega<Scalar> omega) {
  return variances.unaryExpr([&](Scalar v) { return omega.weight(v); });
}

/// PAS: omega_j * PT_j + (1 - omega_j) * Ztilde_j, omega_j = omega / (omega + sigma_tilde2_j).
template <typename Scalar>
Vector<Scalar> pas_assemble(const Vector<Scalar>& pt_vals, const Vector<Scalar>& z_tildes,
                            const PowerTuningSet<Scalar>& ctxs, Omega<Scalar> omega) {
  if (omega.value() < Scalar(0)) throw InputError("pas_assemble: omega must be >= 0");
  return shrink_toward(pt_vals, z_tildes, ctxs.sigma_tilde2, omega);
}

/// Shrinks Ybar_j toward Ztilde_j using Var(Ybar_j) = sigma2_j / n_j.
template <typename Scalar>
Vector<Scalar> shrink_classical(std::span<const AggregatedStats> stats,
                                std::span<const SecondMoments> moms, Omega<Scalar> omega) {
  if (stats.size() != moms.size()) throw InputError("shrink_classical: length mismatch");
  if (omega.value() < Scalar(0)) throw InputError("shrink_classical: omega must be >= 0");
  const auto m = static_cast<Eigen::Index>(stats.size());
  Vector<Scalar> y(m), z(m), v(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    y[j] = stats[j].y_bar;
    z[j] = stats[j].z_tilde;
    const Scalar var = Scalar(moms[j].sigma2) / static_cast<Scalar>(stats[j].n);
    v[j] = std::max(variance_floor(var), var);
  }
  return shrink_toward(y, z, v, omega);
}

/// Shrinks PT_j toward the group mean of the PT estimates.
template <typename Scalar>
Vector<Scalar> shrink_average(const Vector<Scalar>& pt_vals, const PowerTuningSet<Scalar>& ctxs,
                              Omega<Scalar> omega) {
  if (pt_vals.size() < 2) throw InputError("shrink_average: needs at least 2 problems");
  if (omega.value() < Scalar(0)) throw InputError("shrink_average: omega must be >= 0");
  const Vector<Scalar> target = Vector<Scalar>::Constant(pt_vals.size(), pt_vals.mean());
  return shrink_toward(pt_vals, target, ctxs.sigma_tilde2, omega);
}

}  // namespace pas

#endif  // PAS_ESTIMATORS_HPP
