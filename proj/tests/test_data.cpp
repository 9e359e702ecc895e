#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "pas/data.hpp"
#include "pas/synth.hpp"

using namespace pas;

namespace {

ProblemData make_problem(std::vector<LabeledPair> labeled, std::vector<double> unlabeled) {
  return ProblemData{"p", std::move(labeled), std::move(unlabeled)};
}

}  // namespace

TEST_CASE("ingest_csv parses labeled and unlabeled rows") {
  std::istringstream in(
      "problem_id,split,y,f\n"
      "p1,labeled,1,2\n"
      "p1,labeled,3,4\n"
      "p1,unlabeled,,5\n"
      "p1,unlabeled,,7\n");
  const auto problems = ingest_csv(in);
  REQUIRE(problems.size() == 1);
  CHECK(problems[0].id == "p1");
  CHECK(problems[0].n() == 2);
  CHECK(problems[0].big_n() == 2);
  CHECK(problems[0].labeled[1].y == 3.0);
  CHECK(problems[0].labeled[1].z == 4.0);
  CHECK(problems[0].unlabeled_preds == std::vector<double>{5.0, 7.0});
}

TEST_CASE("ingest keeps problem order of first appearance and any column order") {
  std::istringstream in(
      "f,y,split,problem_id\n"
      "1,1,labeled,b\n"
      "2,2,labeled,a\n"
      "3,,unlabeled,b\n"
      "4,,unlabeled,a\n");
  const auto problems = ingest_csv(in);
  REQUIRE(problems.size() == 2);
  CHECK(problems[0].id == "b");
  CHECK(problems[1].id == "a");
}

TEST_CASE("unlabeled y is hidden from estimation but kept in raw rows") {
  const std::string csv =
      "problem_id,split,y,f\n"
      "p1,labeled,1,2\n"
      "p1,unlabeled,9,5\n";
  std::istringstream a(csv), b(csv);
  const auto problems = ingest_csv(a);
  CHECK(problems[0].unlabeled_preds == std::vector<double>{5.0});
  const auto rows = read_rows_csv(b);
  REQUIRE(rows[0].rows[1].y.has_value());
  CHECK(*rows[0].rows[1].y == 9.0);
}

TEST_CASE("ingest errors name the offending row") {
  auto error_of = [](const std::string& csv) {
    std::istringstream in(csv);
    try {
      ingest_csv(in);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(error_of("problem_id,split,y,f\np1,labeled,,2\np1,unlabeled,,3\n").find("row 2") !=
        std::string::npos);
  CHECK(error_of("problem_id,split,y,f\np1,labeled,1,2\np1,unlabeled,,x\n").find("row 3") !=
        std::string::npos);
  CHECK(error_of("problem_id,split,f\np1,labeled,2\n").find("missing column 'y'") !=
        std::string::npos);
  CHECK(error_of("problem_id,split,y,f\np1,test,1,2\n").find("row 2") != std::string::npos);
  CHECK(error_of("problem_id,split,y,f\np1,labeled,1,2\n").find("zero unlabeled") !=
        std::string::npos);
  CHECK(error_of("problem_id,split,y,f\np1,unlabeled,,2\n").find("zero labeled") !=
        std::string::npos);
  CHECK(error_of("").find("header") != std::string::npos);
}

TEST_CASE("get_means") {
  SUBCASE("hand arithmetic") {
    const auto s = get_means(make_problem({{1, 2}, {3, 4}}, {6}));
    CHECK(s.y_bar == 2.0);
    CHECK(s.z_bar == 3.0);
    CHECK(s.z_tilde == 6.0);
    CHECK(s.n == 2);
    CHECK(s.big_n == 1);
  }
  SUBCASE("constant data") {
    const auto s = get_means(make_problem({{5, 5}}, {5}));
    CHECK(s.y_bar == 5.0);
    CHECK(s.z_bar == 5.0);
    CHECK(s.z_tilde == 5.0);
  }
  SUBCASE("symmetric data") {
    const auto s = get_means(make_problem({{0, 1}, {0, -1}}, {2, -2}));
    CHECK(s.y_bar == 0.0);
    CHECK(s.z_bar == 0.0);
    CHECK(s.z_tilde == 0.0);
  }
  SUBCASE("empty sides are errors") {
    CHECK_THROWS_AS(get_means(make_problem({}, {1})), InputError);
    CHECK_THROWS_AS(get_means(make_problem({{1, 1}}, {})), InputError);
  }
}

TEST_CASE("get_means is permutation invariant and within the data range") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(0.0, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    ProblemData p;
    for (int i = 0; i < 37; ++i) p.labeled.push_back({nd(gen), nd(gen)});
    for (int i = 0; i < 53; ++i) p.unlabeled_preds.push_back(nd(gen));
    const auto a = get_means(p);
    std::shuffle(p.labeled.begin(), p.labeled.end(), gen);
    std::shuffle(p.unlabeled_preds.begin(), p.unlabeled_preds.end(), gen);
    const auto b = get_means(p);
    CHECK(a.y_bar == doctest::Approx(b.y_bar).epsilon(1e-15));
    CHECK(a.z_bar == doctest::Approx(b.z_bar).epsilon(1e-15));
    CHECK(a.z_tilde == doctest::Approx(b.z_tilde).epsilon(1e-15));
    const auto [lo, hi] = std::minmax_element(p.unlabeled_preds.begin(), p.unlabeled_preds.end());
    CHECK(a.z_tilde >= *lo);
    CHECK(a.z_tilde <= *hi);
  }
}

TEST_CASE("compensated summation survives cancellation") {
  std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_mean(xs) == 0.5);
}

TEST_CASE("sample_moments") {
  SUBCASE("hand arithmetic with pooled centering") {
    const auto m = sample_moments(make_problem({{1, 1}, {3, 3}}, {2}));
    CHECK(m.sigma2 == doctest::Approx(2.0));
    CHECK(m.tau2 == doctest::Approx(1.0));
    CHECK(m.gamma == doctest::Approx(2.0));
    CHECK(m.source == MomentSource::sample);
  }
  SUBCASE("constant predictions") {
    const auto m = sample_moments(make_problem({{1, 4}, {5, 4}, {2, 4}}, {4, 4}));
    CHECK(m.tau2 == 0.0);
    CHECK(m.gamma == 0.0);
  }
  SUBCASE("identical outcomes") {
    const auto m = sample_moments(make_problem({{3, 1}, {3, 5}, {3, 2}}, {7}));
    CHECK(m.sigma2 == 0.0);
    CHECK(m.gamma == 0.0);
  }
  SUBCASE("needs two labeled rows") {
    CHECK_THROWS_AS(sample_moments(make_problem({{1, 1}}, {2})), InputError);
  }
}

TEST_CASE("known-moments sidecar") {
  std::istringstream in(
      "problem_id,sigma2,tau2,gamma\n"
      "a,1,4,2\n"
      "b,0.5,0.5,-0.25\n");
  const auto table = read_moments_csv(in);
  REQUIRE(table.size() == 2);
  CHECK(table.at("a").gamma == 2.0);
  CHECK(table.at("b").source == MomentSource::known);

  std::istringstream bad("problem_id,sigma2,tau2,gamma\na,1,1,2\n");
  CHECK_THROWS_AS(read_moments_csv(bad), InputError);
  std::istringstream negative("problem_id,sigma2,tau2,gamma\na,-1,1,0\n");
  CHECK_THROWS_AS(read_moments_csv(negative), InputError);

  std::vector<ProblemData> problems{make_problem({{1, 1}}, {1})};
  problems[0].id = "missing";
  CHECK_THROWS_AS(align_moments(problems, table), InputError);
}

TEST_CASE("writing then ingesting reproduces the problems") {
  SynthConfig cfg;
  cfg.m = 7;
  cfg.n = 5;
  cfg.big_n = 9;
  cfg.seed = 99;
  const auto [problems, truths] = synth_draw(cfg);
  std::stringstream buf;
  write_csv(buf, problems);
  const auto back = ingest_csv(buf);
  REQUIRE(back.size() == problems.size());
  for (std::size_t j = 0; j < problems.size(); ++j) {
    CHECK(back[j].id == problems[j].id);
    REQUIRE(back[j].n() == problems[j].n());
    REQUIRE(back[j].big_n() == problems[j].big_n());
    for (std::size_t i = 0; i < problems[j].n(); ++i) {
      CHECK(back[j].labeled[i].y == problems[j].labeled[i].y);
      CHECK(back[j].labeled[i].z == problems[j].labeled[i].z);
    }
    CHECK(back[j].unlabeled_preds == problems[j].unlabeled_preds);
  }
}

TEST_CASE("problem ids with commas are quoted on write") {
  std::vector<ProblemData> problems{ProblemData{"a,\"b\"", {{1, 2}}, {3}}};
  std::stringstream buf;
  write_csv(buf, problems);
  const auto back = ingest_csv(buf);
  REQUIRE(back.size() == 1);
  CHECK(back[0].id == "a,\"b\"");
}
