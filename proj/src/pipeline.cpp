#include "pas/pipeline.hpp"

namespace pas {

EstimateVector z_tilde_vector(std::span<const AggregatedStats> stats) {
  EstimateVector z(static_cast<Eigen::Index>(stats.size()));
  for (std::size_t j = 0; j < stats.size(); ++j) z[static_cast<Eigen::Index>(j)] = stats[j].z_tilde;
  return z;
}

std::vector<ProblemSize> problem_sizes(std::span<const AggregatedStats> stats) {
  std::vector<ProblemSize> out;
  out.reserve(stats.size());
  for (const auto& s : stats) out.push_back({s.n, s.big_n});
  return out;
}

std::vector<AggregatedStats> all_means(std::span<const ProblemData> problems) {
  std::vector<AggregatedStats> out;
  out.reserve(problems.size());
  for (const auto& p : problems) out.push_back(get_means(p));
  return out;
}

std::vector<SecondMoments> all_sample_moments(std::span<const ProblemData> problems) {
  std::vector<SecondMoments> out;
  out.reserve(problems.size());
  for (const auto& p : problems) out.push_back(sample_moments(p));
  return out;
}

PowerTuningSet<double> pt_contexts(std::span<const AggregatedStats> stats,
                                   std::span<const SecondMoments> moms) {
  if (stats.size() != moms.size()) throw InputError("pt_contexts: length mismatch");
  std::vector<PowerTuning<double>> items;
  items.reserve(stats.size());
  for (std::size_t j = 0; j < stats.size(); ++j) items.push_back(pt_context(stats[j], moms[j]));
  return PowerTuningSet<double>::from(items);
}

EstimateVector pt_estimates(std::span<const AggregatedStats> stats,
                            const PowerTuningSet<double>& ctxs) {
  EstimateVector out(static_cast<Eigen::Index>(stats.size()));
  for (std::size_t j = 0; j < stats.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    out[i] = ppi_lambda(stats[j], ctxs.lambda_star[i]);
  }
  return out;
}

PasFit pas_fit(std::span<const AggregatedStats> stats, std::span<const SecondMoments> moms,
               std::size_t grid_size) {
  PasFit fit;
  fit.ctxs = pt_contexts(stats, moms);
  fit.source = pt_estimates(stats, fit.ctxs);
  const EstimateVector z = z_tilde_vector(stats);
  fit.curve = minimize_omega(
      [&](Omega<double> w) { return cure_compound(fit.source, z, fit.ctxs, w); },
      grid_scale(fit.ctxs.sigma_tilde2), grid_size);
  fit.estimates = pas_assemble(fit.source, z, fit.ctxs, fit.curve.argmin());
  return fit;
}

ShrinkageFit shrink_classical_fit(std::span<const AggregatedStats> stats,
                                  std::span<const SecondMoments> moms, std::size_t grid_size) {
  if (stats.size() != moms.size()) throw InputError("shrink_classical_fit: length mismatch");
  const auto m = static_cast<Eigen::Index>(stats.size());
  ShrinkageFit fit;
  fit.source.resize(m);
  EstimateVector vars(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    fit.source[j] = stats[j].y_bar;
    const double v = moms[j].sigma2 / static_cast<double>(stats[j].n);
    vars[j] = std::max(variance_floor(v), v);
  }
  const EstimateVector z = z_tilde_vector(stats);
  fit.curve = minimize_omega(
      [&](Omega<double> w) { return cure_shrink_classical(fit.source, z, vars, w); },
      grid_scale(vars), grid_size);
  fit.estimates = shrink_toward(fit.source, z, vars, fit.curve.argmin());
  return fit;
}

PasFit shrink_average_fit(std::span<const AggregatedStats> stats,
                          std::span<const SecondMoments> moms, std::size_t grid_size) {
  PasFit fit;
  fit.ctxs = pt_contexts(stats, moms);
  fit.source = pt_estimates(stats, fit.ctxs);
  fit.curve = minimize_omega(
      [&](Omega<double> w) { return sure_grand_mean(fit.source, fit.ctxs, w); },
      grid_scale(fit.ctxs.sigma_tilde2), grid_size);
  fit.estimates = shrink_average(fit.source, fit.ctxs, fit.curve.argmin());
  return fit;
}

UniPasFit unipas_fit(std::span<const AggregatedStats> stats, std::span<const SecondMoments> moms,
                     std::size_t grid_size) {
  const auto sizes = problem_sizes(stats);
  const GlobalLambda lambda = global_lambda(moms, std::span<const ProblemSize>(sizes));
  UniPasFit fit;
  fit.uni = uni_plugins<double>(moms, sizes, lambda.clipped);
  fit.uni.degenerate_lambda = lambda.degenerate;
  fit.source = unipt<double>(stats, lambda.clipped);
  const EstimateVector z = z_tilde_vector(stats);
  fit.curve = minimize_omega(
      [&](Omega<double> w) { return cure_hat(fit.source, z, fit.uni, w); },
      grid_scale(fit.uni.sigma_check2), grid_size);
  fit.estimates = shrink_toward(fit.source, z, fit.uni.sigma_check2, fit.curve.argmin());
  return fit;
}

EstimateVector unipas(std::span<const ProblemData> problems) {
  const auto stats = all_means(problems);
  const auto moms = all_sample_moments(problems);
  return unipas_fit(stats, moms).estimates;
}

}  // namespace pas
