#include <doctest.h>

#include <random>
#include <vector>

#include "pas/estimators.hpp"

using namespace pas;

namespace {

const AggregatedStats kStats{2.0, 3.0, 6.0, 10, 40};

Vector<double> vec(std::initializer_list<double> xs) {
  Vector<double> v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

PowerTuningSet<double> ctx_with_variances(const Vector<double>& v) {
  return {Vector<double>::Zero(v.size()), v, Vector<double>::Zero(v.size())};
}

}  // namespace

TEST_CASE("classical and prediction average") {
  CHECK(classical(kStats) == 2.0);
  CHECK(classical(AggregatedStats{0.0, 1.0, 2.0, 1, 1}) == 0.0);
  CHECK(prediction_avg(kStats) == 6.0);
  CHECK(prediction_avg(AggregatedStats{4.0, 4.0, 4.0, 3, 3}) == 4.0);
}

TEST_CASE("ppi_lambda") {
  CHECK(ppi_lambda(kStats, 1.0) == 5.0);
  CHECK(ppi_lambda(kStats, 0.0) == 2.0);
  CHECK(ppi_lambda(kStats, 0.5) == 3.5);
  CHECK(ppi(kStats) == 5.0);
}

TEST_CASE("ppi_lambda endpoints are exact") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const AggregatedStats s{u(gen), u(gen), u(gen), 5, 7};
    CHECK(ppi_lambda(s, 0.0) == classical(s));
    CHECK(ppi_lambda(s, 1.0) == ppi(s));
  }
}

TEST_CASE("pt_context") {
  SUBCASE("substitution") {
    const auto ctx = pt_context(kStats, SecondMoments{1.0, 4.0, 2.0, MomentSource::known});
    CHECK(ctx.lambda_star == doctest::Approx(0.4));
    CHECK(ctx.sigma_tilde2 == doctest::Approx(0.02));
    CHECK(ctx.gamma_tilde == doctest::Approx(0.04));
  }
  SUBCASE("zero covariance") {
    const auto ctx = pt_context(kStats, SecondMoments{1.0, 4.0, 0.0, MomentSource::known});
    CHECK(ctx.lambda_star == 0.0);
    CHECK(ctx.sigma_tilde2 == doctest::Approx(0.1));
    CHECK(ctx.gamma_tilde == 0.0);
  }
  SUBCASE("constant predictor") {
    const auto ctx = pt_context(kStats, SecondMoments{1.0, 0.0, 0.0, MomentSource::sample});
    CHECK(ctx.lambda_star == 0.0);
    CHECK(ctx.sigma_tilde2 == doctest::Approx(0.1));
    CHECK(ctx.gamma_tilde == 0.0);
  }
  SUBCASE("negative plug-in variance is floored") {
    // gamma^2 > sigma2 * tau2 can happen with sample moments.
    const auto ctx = pt_context(kStats, SecondMoments{0.1, 1.0, 3.0, MomentSource::sample});
    CHECK(ctx.sigma_tilde2 == doctest::Approx(variance_floor(0.01)));
    CHECK(ctx.sigma_tilde2 > 0.0);
  }
}

TEST_CASE("power tuning never inflates the variance with known moments") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.01, 5.0), r(-1.0, 1.0);
  std::uniform_int_distribution<int> sz(1, 200);
  for (int i = 0; i < 2000; ++i) {
    const double sigma2 = u(gen), tau2 = u(gen);
    const double gamma = r(gen) * std::sqrt(sigma2 * tau2);
    const AggregatedStats s{0, 0, 0, static_cast<std::size_t>(sz(gen)),
                            static_cast<std::size_t>(sz(gen))};
    const auto ctx = pt_context(s, SecondMoments{sigma2, tau2, gamma, MomentSource::known});
    const double n = static_cast<double>(s.n), big_n = static_cast<double>(s.big_n);
    const double classical_var = sigma2 / n;
    const double ppi_var = sigma2 / n + (n + big_n) / (n * big_n) * tau2 - 2.0 / n * gamma;
    CHECK(ctx.sigma_tilde2 <= classical_var * (1 + 1e-12));
    CHECK(ctx.sigma_tilde2 <= ppi_var * (1 + 1e-12) + 1e-15);
    CHECK(ctx.sigma_tilde2 >= variance_floor(classical_var));
  }
}

TEST_CASE("pt") {
  const PowerTuning<double> ctx{0.4, 0.02, 0.04};
  CHECK(pt(kStats, ctx) == doctest::Approx(3.2));
  CHECK(pt(kStats, PowerTuning<double>{0.0, 1, 0}) == classical(kStats));
  CHECK(pt(kStats, PowerTuning<double>{1.0, 1, 0}) == ppi(kStats));
}

TEST_CASE("Omega weights") {
  CHECK(Omega<double>(0.0).weight(0.3) == 0.0);
  CHECK(Omega<double>::infinity().weight(0.3) == 1.0);
  CHECK(Omega<double>::infinity().is_infinite());
  CHECK(Omega<double>(0.5).weight(0.5) == 0.5);
  // non-increasing in the variance, non-decreasing in omega
  double prev = 1.0;
  for (double v = 0.001; v < 100; v *= 1.7) {
    const double w = Omega<double>(0.2).weight(v);
    CHECK(w <= prev);
    CHECK(w >= 0.0);
    CHECK(w < 1.0);
    prev = w;
  }
  prev = 0.0;
  for (double o = 0.0; o < 100; o = o * 1.9 + 0.001) {
    const double w = Omega<double>(o).weight(0.7);
    CHECK(w >= prev);
    prev = w;
  }
}

TEST_CASE("pas_assemble") {
  const auto pt_vals = vec({3.2, 1.0, -4.0});
  const auto z = vec({6.0, 2.0, 8.0});
  const auto ctxs = ctx_with_variances(vec({0.02, 0.5, 3.0}));

  SUBCASE("omega = 0 returns the prediction means") {
    CHECK(pas_assemble(pt_vals, z, ctxs, Omega<double>(0.0)) == z);
  }
  SUBCASE("sentinel returns the PT estimates") {
    CHECK(pas_assemble(pt_vals, z, ctxs, Omega<double>::infinity()) == pt_vals);
  }
  SUBCASE("omega equal to every variance gives midpoints") {
    const auto c = ctx_with_variances(vec({0.25, 0.25, 0.25}));
    const auto out = pas_assemble(pt_vals, z, c, Omega<double>(0.25));
    CHECK(out == (pt_vals + z) / 2.0);
  }
  SUBCASE("hand arithmetic") {
    const auto out = pas_assemble(vec({3.2}), vec({6.0}), ctx_with_variances(vec({0.02})),
                                  Omega<double>(0.06));
    CHECK(out[0] == doctest::Approx(3.9));
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(pas_assemble(vec({1.0}), z, ctxs, Omega<double>(1.0)), InputError);
  }
}

TEST_CASE("pas_assemble stays between source and target and moves monotonically") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> uv(1e-4, 2.0);
  const Eigen::Index m = 40;
  Vector<double> p(m), z(m), v(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    p[j] = nd(gen);
    z[j] = nd(gen);
    v[j] = uv(gen);
  }
  const auto ctxs = ctx_with_variances(v);
  Vector<double> prev = z;
  for (double o = 0.0; o < 1e4; o = o * 2.3 + 1e-5) {
    const auto out = pas_assemble(p, z, ctxs, Omega<double>(o));
    for (Eigen::Index j = 0; j < m; ++j) {
      const double lo = std::min(p[j], z[j]), hi = std::max(p[j], z[j]);
      CHECK(out[j] >= lo - 1e-15);
      CHECK(out[j] <= hi + 1e-15);
      // distance to PT shrinks as omega grows
      CHECK(std::abs(out[j] - p[j]) <= std::abs(prev[j] - p[j]) + 1e-15);
    }
    prev = out;
  }
}

TEST_CASE("shrink_classical") {
  const std::vector<AggregatedStats> stats{{2.0, 0.0, 6.0, 10, 40}, {1.0, 0.0, -1.0, 5, 5}};
  const std::vector<SecondMoments> moms{{1.0, 1.0, 0.0, MomentSource::known},
                                        {2.0, 1.0, 0.0, MomentSource::known}};
  const auto zero = shrink_classical<double>(stats, moms, Omega<double>(0.0));
  CHECK(zero[0] == 6.0);
  CHECK(zero[1] == -1.0);
  const auto inf = shrink_classical<double>(stats, moms, Omega<double>::infinity());
  CHECK(inf[0] == 2.0);
  CHECK(inf[1] == 1.0);
  const auto mid = shrink_classical<double>(stats, moms, Omega<double>(0.3));
  CHECK(mid[0] == doctest::Approx(3.0));
}

TEST_CASE("shrink_average") {
  SUBCASE("equal PT values are fixed points") {
    const auto p = vec({0.1, 0.1, 0.1, 0.1});
    for (double o : {0.0, 0.3, 5.0}) {
      const auto out = shrink_average(p, ctx_with_variances(vec({1, 2, 3, 4})), Omega<double>(o));
      for (Eigen::Index j = 0; j < 4; ++j) CHECK(out[j] == doctest::Approx(0.1).epsilon(1e-14));
    }
  }
  SUBCASE("omega = 0 collapses to the group mean") {
    const auto out = shrink_average(vec({1.0, 2.0, 6.0}), ctx_with_variances(vec({1, 2, 3})),
                                    Omega<double>(0.0));
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(out[j] == 3.0);
  }
  SUBCASE("hand arithmetic") {
    const auto out = shrink_average(vec({1.0, 3.0}), ctx_with_variances(vec({1.0, 1.0})),
                                    Omega<double>(1.0));
    CHECK(out[0] == doctest::Approx(1.5));
    CHECK(out[1] == doctest::Approx(2.5));
  }
  SUBCASE("needs two problems") {
    CHECK_THROWS_AS(shrink_average(vec({1.0}), ctx_with_variances(vec({1.0})), Omega<double>(1.0)),
                    InputError);
  }
}

TEST_CASE("shrink_average preserves the group mean under equal variances") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> nd;
  Vector<double> p(25);
  for (auto& x : p) x = nd(gen);
  const auto ctxs = ctx_with_variances(Vector<double>::Constant(25, 0.4));
  for (double o : {0.0, 0.01, 0.4, 10.0}) {
    const auto out = shrink_average(p, ctxs, Omega<double>(o));
    CHECK(out.mean() == doctest::Approx(p.mean()).epsilon(1e-12));
  }
  // unequal variances: each output is a convex combination of PT_j and the mean
  Vector<double> v(25);
  for (auto& x : v) x = 0.01 + std::abs(nd(gen));
  const auto out = shrink_average(p, ctx_with_variances(v), Omega<double>(0.3));
  for (Eigen::Index j = 0; j < 25; ++j) {
    CHECK(out[j] >= std::min(p[j], p.mean()) - 1e-15);
    CHECK(out[j] <= std::max(p[j], p.mean()) + 1e-15);
  }
}

TEST_CASE("kernels instantiate at extended precision") {
  const Vector<long double> p = Vector<long double>::Constant(3, 1.0L);
  const Vector<long double> z = Vector<long double>::Constant(3, 3.0L);
  const PowerTuningSet<long double> c{Vector<long double>::Zero(3),
                                      Vector<long double>::Constant(3, 0.5L),
                                      Vector<long double>::Zero(3)};
  const auto out = pas_assemble(p, z, c, Omega<long double>(0.5L));
  CHECK(static_cast<double>(out[1]) == 2.0);
}
