#ifndef PAS_TYPES_HPP
#define PAS_TYPES_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pas {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One estimate per problem, index-aligned with problem order.
using EstimateVector = Vector<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad CSV, schema violations, unusable problem sizes.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericError : public Error {
 public:
  using Error::Error;
};

struct LabeledPair {
  double y = 0.0;  // gold-standard outcome
  double z = 0.0;  // model prediction on the same unit
};

/// One estimation problem: labeled (outcome, prediction) pairs plus
/// predictions on the unlabeled units.
struct ProblemData {
  std::string id;
  std::vector<LabeledPair> labeled;
  std::vector<double> unlabeled_preds;

  std::size_t n() const { return labeled.size(); }
  std::size_t big_n() const { return unlabeled_preds.size(); }
};

struct AggregatedStats {
  double y_bar = 0.0;    // mean outcome on labeled units
  double z_bar = 0.0;    // mean prediction on labeled units
  double z_tilde = 0.0;  // mean prediction on unlabeled units
  std::size_t n = 0;
  std::size_t big_n = 0;
};

struct ProblemSize {
  std::size_t n = 0;
  std::size_t big_n = 0;
};

enum class MomentSource { known, sample };

/// Second moments of (Y, f(X)) for one problem. gamma is Cov(Y, f(X)).
struct SecondMoments {
  double sigma2 = 0.0;
  double tau2 = 0.0;
  double gamma = 0.0;
  MomentSource source = MomentSource::known;
};

/// A raw data row as it appears in the CSV schema. Unlabeled rows may carry
/// an outcome; it is hidden from estimation but used for pseudo-truths.
struct DataRow {
  std::optional<double> y;
  double f = 0.0;
  bool labeled = false;
};

struct ProblemRows {
  std::string id;
  std::vector<DataRow> rows;
};

}  // namespace pas

#endif  // PAS_TYPES_HPP
