#ifndef PAS_PIPELINE_HPP
#define PAS_PIPELINE_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "pas/data.hpp"
#include "pas/estimators.hpp"
#include "pas/risk.hpp"
#include "pas/uni.hpp"

namespace pas {

// End-to-end estimators over m problems. Each takes aggregated statistics
// (and second moments where needed) and selects omega on the default grid.

struct ShrinkageFit {
  EstimateVector estimates;
  EstimateVector source;  // unshrunk estimates (PT, Ybar or UniPT)
  RiskCurve<double> curve;
};

struct PasFit : ShrinkageFit {
  PowerTuningSet<double> ctxs;
};

struct UniPasFit : ShrinkageFit {
  UniContext<double> uni;
};

EstimateVector z_tilde_vector(std::span<const AggregatedStats> stats);
std::vector<ProblemSize> problem_sizes(std::span<const AggregatedStats> stats);
std::vector<AggregatedStats> all_means(std::span<const ProblemData> problems);
std::vector<SecondMoments> all_sample_moments(std::span<const ProblemData> problems);

PowerTuningSet<double> pt_contexts(std::span<const AggregatedStats> stats,
                                   std::span<const SecondMoments> moms);
EstimateVector pt_estimates(std::span<const AggregatedStats> stats,
                            const PowerTuningSet<double>& ctxs);

PasFit pas_fit(std::span<const AggregatedStats> stats, std::span<const SecondMoments> moms,
               std::size_t grid_size = kDefaultGridSize);
ShrinkageFit shrink_classical_fit(std::span<const AggregatedStats> stats,
                                  std::span<const SecondMoments> moms,
                                  std::size_t grid_size = kDefaultGridSize);
PasFit shrink_average_fit(std::span<const AggregatedStats> stats,
                          std::span<const SecondMoments> moms,
                          std::size_t grid_size = kDefaultGridSize);

/// `moms` must be sample moments; UniPAS never sees known moments.
UniPasFit unipas_fit(std::span<const AggregatedStats> stats, std::span<const SecondMoments> moms,
                     std::size_t grid_size = kDefaultGridSize);

/// Sample moments, global lambda, UniPT, plug-ins, omega by modified CURE,
/// then shrinkage toward Ztilde. All problems need n_j >= 2.
EstimateVector unipas(std::span<const ProblemData> problems);

}  // namespace pas

#endif  // PAS_PIPELINE_HPP
