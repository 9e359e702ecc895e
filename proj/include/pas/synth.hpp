#ifndef PAS_SYNTH_HPP
#define PAS_SYNTH_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pas/types.hpp"

namespace pas {

/// Random streams for simulation.
///
/// Generator: std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Stream splitting: every (seed, replicate, problem) triple gets its
/// own engine, seeded with SplitMix64 applied in turn to seed, replicate and
/// problem. Uniforms take the top 53 bits; normals use the Marsaglia polar
/// method, keeping the spare deviate for the next call. Results therefore
/// do not depend on thread count or scheduling.
class RandomStream {
 public:
  static constexpr const char* kName = "mt19937_64/splitmix64-substreams/polar-v1";

  explicit RandomStream(std::uint64_t key) : engine_(key) {}
  static RandomStream substream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t problem);

  double uniform();  // [0, 1)
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

enum class Predictor { abs, square };

std::string to_string(Predictor p);
Predictor parse_predictor(const std::string& s);

struct SynthConfig {
  std::size_t m = 200;
  std::size_t n = 20;
  std::size_t big_n = 80;
  double psi = 0.1;
  double c = 0.05;
  Predictor predictor = Predictor::square;
  std::uint64_t seed = 0;
};

/// Problem-level truth: eta, theta = eta^2, the prediction mean mu and the
/// second moments of (Y, f(X)).
struct SynthTruth {
  double eta = 0.0;
  double theta = 0.0;
  double mu = 0.0;
  double sigma2 = 0.0;
  double tau2 = 0.0;
  double gamma = 0.0;

  SecondMoments moments() const { return {sigma2, tau2, gamma, MomentSource::known}; }
};

/// Standard normal CDF.
double norm_cdf(double x);

/// Mean of |X| for X ~ N(eta, psi^2) (folded normal).
double folded_normal_mean(double eta, double psi);

/// Closed-form moments for X ~ N(eta, psi^2), Y | X ~ N(2 eta X - eta^2, c).
SynthTruth synth_params(double eta, const SynthConfig& cfg);

double apply_predictor(Predictor p, double x);

/// Rows for replicate `replicate`: every row carries its outcome, the first
/// n rows of each problem are marked labeled. Problem j draws, in order,
/// eta ~ U[-1, 1] then (x, y) for each of its n + N units, all from
/// substream (seed, replicate, j).
std::vector<ProblemRows> synth_rows(const SynthConfig& cfg, std::vector<SynthTruth>* truths,
                                    std::uint64_t replicate = 0);

/// Same draw as synth_rows with unlabeled outcomes hidden.
std::pair<std::vector<ProblemData>, std::vector<SynthTruth>> synth_draw(
    const SynthConfig& cfg, std::uint64_t replicate = 0);

/// Draws one problem at a fixed eta (used for Monte-Carlo checks).
ProblemData synth_problem(double eta, const SynthConfig& cfg, RandomStream& rng);

}  // namespace pas

#endif  // PAS_SYNTH_HPP
