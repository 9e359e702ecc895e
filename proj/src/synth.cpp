#include "pas/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pas/data.hpp"

namespace pas {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::substream(std::uint64_t seed, std::uint64_t replicate,
                                     std::uint64_t problem) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ replicate);
  key = splitmix64(key ^ problem);
  return RandomStream(key);
}

double RandomStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

std::uint64_t RandomStream::below(std::uint64_t bound) {
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = bound * (~std::uint64_t{0} / bound);
  std::uint64_t x;
  do x = engine_();
  while (x >= limit);
  return x % bound;
}

std::string to_string(Predictor p) { return p == Predictor::abs ? "abs" : "square"; }

Predictor parse_predictor(const std::string& s) {
  if (s == "abs") return Predictor::abs;
  if (s == "square") return Predictor::square;
  throw InputError("unknown predictor '" + s + "' (expected abs or square)");
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double folded_normal_mean(double eta, double psi) {
  const double sqrt_2_over_pi = std::sqrt(2.0 / std::numbers::pi);
  return psi * sqrt_2_over_pi * std::exp(-eta * eta / (2.0 * psi * psi)) +
         eta * (2.0 * norm_cdf(eta / psi) - 1.0);
}

SynthTruth synth_params(double eta, const SynthConfig& cfg) {
  const double psi2 = cfg.psi * cfg.psi;
  SynthTruth t;
  t.eta = eta;
  t.theta = eta * eta;
  t.sigma2 = 4.0 * eta * eta * psi2 + cfg.c;
  if (cfg.predictor == Predictor::square) {
    t.gamma = 4.0 * eta * eta * psi2;
    t.mu = eta * eta + psi2;
    t.tau2 = 2.0 * psi2 * psi2 + 4.0 * eta * eta * psi2;
  } else {
    // Cov(|X|, X) = psi^2 (2 Phi(eta/psi) - 1) by Stein's lemma, and
    // Cov(|X|, Y) = 2 eta Cov(|X|, X).
    t.gamma = 2.0 * eta * psi2 * (2.0 * norm_cdf(eta / cfg.psi) - 1.0);
    t.mu = folded_normal_mean(eta, cfg.psi);
    t.tau2 = std::max(0.0, eta * eta + psi2 - t.mu * t.mu);
  }
  return t;
}

double apply_predictor(Predictor p, double x) { return p == Predictor::abs ? std::abs(x) : x * x; }

namespace {

ProblemRows draw_rows(double eta, const SynthConfig& cfg, RandomStream& rng) {
  ProblemRows p;
  const std::size_t total = cfg.n + cfg.big_n;
  p.rows.reserve(total);
  const double noise_sd = std::sqrt(cfg.c);
  for (std::size_t i = 0; i < total; ++i) {
    const double x = rng.normal(eta, cfg.psi);
    const double y = rng.normal(2.0 * eta * x - eta * eta, noise_sd);
    p.rows.push_back({y, apply_predictor(cfg.predictor, x), i < cfg.n});
  }
  return p;
}

}  // namespace

std::vector<ProblemRows> synth_rows(const SynthConfig& cfg, std::vector<SynthTruth>* truths,
                                    std::uint64_t replicate) {
  std::vector<ProblemRows> out;
  out.reserve(cfg.m);
  if (truths) {
    truths->clear();
    truths->reserve(cfg.m);
  }
  for (std::size_t j = 0; j < cfg.m; ++j) {
    RandomStream rng = RandomStream::substream(cfg.seed, replicate, j);
    const double eta = 2.0 * rng.uniform() - 1.0;
    ProblemRows p = draw_rows(eta, cfg, rng);
    p.id = "p" + std::to_string(j + 1);
    out.push_back(std::move(p));
    if (truths) truths->push_back(synth_params(eta, cfg));
  }
  return out;
}

std::pair<std::vector<ProblemData>, std::vector<SynthTruth>> synth_draw(const SynthConfig& cfg,
                                                                       std::uint64_t replicate) {
  std::vector<SynthTruth> truths;
  auto rows = synth_rows(cfg, &truths, replicate);
  return {to_problem_data(rows), std::move(truths)};
}

ProblemData synth_problem(double eta, const SynthConfig& cfg, RandomStream& rng) {
  ProblemData d;
  d.labeled.reserve(cfg.n);
  d.unlabeled_preds.reserve(cfg.big_n);
  for (const auto& r : draw_rows(eta, cfg, rng).rows) {
    if (r.labeled)
      d.labeled.push_back({*r.y, r.f});
    else
      d.unlabeled_preds.push_back(r.f);
  }
  return d;
}

}  // namespace pas
