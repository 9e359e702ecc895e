#ifndef PAS_DATA_HPP
#define PAS_DATA_HPP

#include <cmath>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pas/types.hpp"

namespace pas {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_mean(std::span<const double> xs);

/// Means of outcomes and predictions on the labeled units and of the
/// predictions on the unlabeled units. Throws InputError on empty sides.
AggregatedStats get_means(const ProblemData& p);

/// Unbiased sample second moments. The prediction variance is pooled over
/// labeled and unlabeled predictions around their pooled mean (divisor
/// n+N-1); the covariance centers outcomes at their labeled mean and
/// predictions at the pooled mean (divisor n-1). Requires n >= 2.
SecondMoments sample_moments(const ProblemData& p);

// CSV schema: problem_id,split,y,f with split in {labeled, unlabeled}.
std::vector<ProblemRows> read_rows_csv(std::istream& in);
std::vector<ProblemRows> read_rows_csv(const std::string& path);
void write_rows_csv(std::ostream& out, const std::vector<ProblemRows>& problems);

/// Drops the outcomes of unlabeled rows. Each problem needs at least one
/// labeled and one unlabeled row.
std::vector<ProblemData> to_problem_data(const std::vector<ProblemRows>& problems);
std::vector<ProblemRows> to_rows(const std::vector<ProblemData>& problems);

std::vector<ProblemData> ingest_csv(const std::string& path);
std::vector<ProblemData> ingest_csv(std::istream& in);
void write_csv(std::ostream& out, const std::vector<ProblemData>& problems);

// Known-moments sidecar: problem_id,sigma2,tau2,gamma.
std::map<std::string, SecondMoments> read_moments_csv(std::istream& in);
std::map<std::string, SecondMoments> read_moments_csv(const std::string& path);

/// Looks up one SecondMoments per problem, in problem order.
std::vector<SecondMoments> align_moments(const std::vector<ProblemData>& problems,
                                         const std::map<std::string, SecondMoments>& table);

}  // namespace pas

#endif  // PAS_DATA_HPP
