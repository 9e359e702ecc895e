#ifndef PAS_BENCH_HPP
#define PAS_BENCH_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pas/risk.hpp"
#include "pas/synth.hpp"
#include "pas/types.hpp"

namespace pas {

enum class EstimatorKind {
  classical,
  prediction_avg,
  ppi,
  pt,
  shrink_classical,
  shrink_avg,
  pas,
  unipt,
  unipas,
};

enum class MomentsMode { known, sample };

std::string to_string(EstimatorKind k);
EstimatorKind parse_estimator(const std::string& s);
/// Comma-separated names. Classical is always included, first.
std::vector<EstimatorKind> parse_estimator_list(const std::string& s);
std::string to_string(MomentsMode m);
MomentsMode parse_moments_mode(const std::string& s);

/// Estimators reported in the synthetic table.
std::vector<EstimatorKind> synthetic_table_estimators();
std::vector<EstimatorKind> all_estimators();

/// Runs the requested estimators on one data set. `moms` feed the moment-based
/// estimators; `sample_moms` feed UniPT/UniPAS and may be empty when those are
/// not requested.
std::map<EstimatorKind, EstimateVector> run_estimators(std::span<const AggregatedStats> stats,
                                                       std::span<const SecondMoments> moms,
                                                       std::span<const SecondMoments> sample_moms,
                                                       std::span<const EstimatorKind> kinds,
                                                       std::size_t grid_size = kDefaultGridSize);

struct SplitPlan {
  double ratio = 0.8;  // unlabeled fraction
  std::size_t replicates = 200;
  std::uint64_t seed = 0;
};

/// N = floor(ratio * T), n = T - N.
ProblemSize split_sizes(std::size_t total, double ratio);

/// Mean outcome over every row of each problem. Every row must carry y.
std::vector<double> pseudo_truth(std::span<const ProblemRows> problems);

/// Random labeled/unlabeled split of one problem for replicate k, drawn from
/// substream (seed, k, problem_index).
ProblemData split_replicate(const ProblemRows& rows, const SplitPlan& plan, std::uint64_t k,
                            std::uint64_t problem_index);

struct EstimatorSummary {
  EstimatorKind kind = EstimatorKind::classical;
  double mse = 0.0;
  double se = 0.0;
  double improved_pct = 0.0;
  double improved_se = 0.0;
  bool baseline = false;
};

/// MSE is the mean over replicates of the per-replicate average squared error;
/// SE is the sample standard deviation of those losses over sqrt(K).
/// Improved% counts problems whose squared error is strictly below the
/// classical one. Needs K >= 2.
EstimatorSummary metrics(std::span<const EstimateVector> estimates,
                         std::span<const EstimateVector> classical,
                         std::span<const EstimateVector> truths);

struct BenchReport {
  std::vector<EstimatorSummary> rows;
  nlohmann::ordered_json config;
  std::uint64_t seed = 0;
  std::optional<double> wall_seconds;

  const EstimatorSummary& at(EstimatorKind k) const;
};

struct SynthBenchOptions {
  SynthConfig cfg;
  std::size_t replicates = 200;
  MomentsMode moments = MomentsMode::known;
  std::vector<EstimatorKind> estimators = synthetic_table_estimators();
  std::size_t threads = 1;
  std::size_t grid_size = kDefaultGridSize;
};

/// Each replicate draws fresh eta and data (Bayes risk), truth theta = eta^2.
BenchReport run_synth_bench(const SynthBenchOptions& opt);

struct RealBenchOptions {
  SplitPlan plan;
  MomentsMode moments = MomentsMode::sample;
  std::vector<EstimatorKind> estimators = all_estimators();
  std::size_t threads = 1;
  std::size_t grid_size = kDefaultGridSize;
  // Required when moments == known, keyed by problem_id.
  std::map<std::string, SecondMoments> known_moments;
};

/// Pseudo-truths are fixed; each replicate re-splits every problem and all
/// estimators see the same split.
BenchReport run_real_bench(std::span<const ProblemRows> data, const RealBenchOptions& opt);
std::vector<BenchReport> run_real_bench_sweep(std::span<const ProblemRows> data,
                                              std::span<const double> ratios,
                                              const RealBenchOptions& opt);

void write_report_csv(std::ostream& out, const BenchReport& report);
nlohmann::ordered_json report_to_json(const BenchReport& report);

/// Calls fn(k) for k in [0, count) on `threads` workers.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace pas

#endif  // PAS_BENCH_HPP
