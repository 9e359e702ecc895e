// Command-line front end: synthetic benchmarks, split benchmarks on labeled
// data, one-shot estimation and CURE curve scans.
//
// Exit codes: 0 success, 2 input/schema error, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pas/bench.hpp"
#include "pas/data.hpp"
#include "pas/pipeline.hpp"
#include "pas/synth.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct SynthFlags {
  std::size_t m = 200;
  std::size_t n = 20;
  std::size_t big_n = 80;
  double psi = 0.1;
  double c = 0.05;
  std::string predictor = "square";
  std::uint64_t seed = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--m", m, "Number of problems")->check(CLI::PositiveNumber);
    cmd->add_option("--n", n, "Labeled units per problem")->check(CLI::Range(std::size_t{1}, std::size_t(1) << 40));
    cmd->add_option("--big-n", big_n, "Unlabeled units per problem")->check(CLI::PositiveNumber);
    cmd->add_option("--psi", psi, "Covariate noise scale")->check(CLI::PositiveNumber);
    cmd->add_option("--c", c, "Outcome noise variance")->check(CLI::PositiveNumber);
    cmd->add_option("--predictor", predictor, "abs or square")->check(CLI::IsMember({"abs", "square"}));
    cmd->add_option("--seed", seed, "Random seed");
  }

  pas::SynthConfig config() const {
    pas::SynthConfig cfg;
    cfg.m = m;
    cfg.n = n;
    cfg.big_n = big_n;
    cfg.psi = psi;
    cfg.c = c;
    cfg.predictor = pas::parse_predictor(predictor);
    cfg.seed = seed;
    return cfg;
  }
};

// Writes to `path`, or stdout when empty.
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path);
  if (!out) throw pas::InputError("cannot write '" + path + "'");
  fn(out);
}

void emit_reports(const std::vector<pas::BenchReport>& reports, const std::vector<double>& ratios,
                  const std::string& format, const std::string& out_path) {
  with_output(out_path, [&](std::ostream& out) {
    if (format == "json") {
      if (reports.size() == 1) {
        out << pas::report_to_json(reports.front()).dump(2) << '\n';
      } else {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& r : reports) arr.push_back(pas::report_to_json(r));
        out << arr.dump(2) << '\n';
      }
      return;
    }
    if (reports.size() == 1) {
      pas::write_report_csv(out, reports.front());
      return;
    }
    // Several ratios: one table with a leading ratio column.
    out << "ratio,estimator,mse,se,improved_pct,improved_se\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::ostringstream body;
      pas::write_report_csv(body, reports[i]);
      std::istringstream lines(body.str());
      std::string line;
      std::getline(lines, line);  // header
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.10g", ratios[i]);
      while (std::getline(lines, line)) out << buf << ',' << line << '\n';
    }
  });
}

void write_estimates(std::ostream& out, const std::vector<pas::ProblemData>& problems,
                     const pas::EstimateVector& est) {
  out << "problem_id,estimate\n";
  char buf[40];
  for (std::size_t j = 0; j < problems.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", est[static_cast<Eigen::Index>(j)]);
    out << problems[j].id << ',' << buf << '\n';
  }
}

std::vector<pas::SecondMoments> resolve_moments(const std::vector<pas::ProblemData>& problems,
                                                const std::string& moments_file) {
  if (moments_file.empty()) return pas::all_sample_moments(problems);
  return pas::align_moments(problems, pas::read_moments_csv(moments_file));
}

void warn_if_degenerate(std::span<const pas::AggregatedStats> stats,
                        std::span<const pas::SecondMoments> sample) {
  const auto sizes = pas::problem_sizes(stats);
  if (pas::global_lambda(sample, std::span<const pas::ProblemSize>(sizes)).degenerate)
    std::cerr << "warning: every sample prediction variance is zero; using lambda = 0\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prediction-powered adaptive shrinkage for compound mean estimation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Monte-Carlo benchmark on the synthetic model");
  SynthFlags sflags;
  sflags.add_to(synth);
  std::size_t s_reps = 200, s_threads = 1, s_grid = pas::kDefaultGridSize;
  std::string s_moments = "known", s_estimators, s_out, s_format = "csv", s_export;
  bool s_timing = false;
  synth->add_option("--replicates", s_reps, "Monte-Carlo replicates")->check(CLI::Range(2, 100000000));
  synth->add_option("--moments", s_moments, "known or sample")->check(CLI::IsMember({"known", "sample"}));
  synth->add_option("--estimators", s_estimators, "Comma-separated estimator names");
  synth->add_option("--out", s_out, "Report path (stdout if omitted)");
  synth->add_option("--format", s_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  synth->add_option("--threads", s_threads, "Worker threads")->check(CLI::PositiveNumber);
  synth->add_option("--grid-size", s_grid, "Interior omega grid points")->check(CLI::Range(2, 1000000));
  synth->add_option("--export-data", s_export,
                    "Also write replicate 0 as data CSV (outcomes kept on every row)");
  synth->add_flag("--timing", s_timing, "Include wall time in the report");

  // bench
  auto* bench = app.add_subcommand("bench", "Split benchmark on fully labeled data");
  std::string b_data, b_moments = "sample", b_moments_file, b_estimators, b_out, b_format = "csv";
  std::vector<double> b_ratios{0.8};
  std::size_t b_reps = 200, b_threads = 1, b_grid = pas::kDefaultGridSize;
  std::uint64_t b_seed = 0;
  bool b_timing = false;
  bench->add_option("--data", b_data, "Data CSV (problem_id,split,y,f), y on every row")->required();
  bench->add_option("--ratio", b_ratios, "Unlabeled fraction(s), comma-separated")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  bench->add_option("--replicates", b_reps, "Random splits")->check(CLI::Range(2, 100000000));
  bench->add_option("--seed", b_seed, "Random seed");
  bench->add_option("--moments", b_moments, "known or sample")->check(CLI::IsMember({"known", "sample"}));
  bench->add_option("--moments-file", b_moments_file, "Known-moments CSV (problem_id,sigma2,tau2,gamma)");
  bench->add_option("--estimators", b_estimators, "Comma-separated estimator names");
  bench->add_option("--out", b_out, "Report path (stdout if omitted)");
  bench->add_option("--format", b_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  bench->add_option("--threads", b_threads, "Worker threads")->check(CLI::PositiveNumber);
  bench->add_option("--grid-size", b_grid, "Interior omega grid points")->check(CLI::Range(2, 1000000));
  bench->add_flag("--timing", b_timing, "Include wall time in the report");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Estimate every problem mean once");
  std::string e_data, e_moments_file, e_estimator = "pas", e_out;
  std::size_t e_grid = pas::kDefaultGridSize;
  estimate->add_option("--data", e_data, "Data CSV (problem_id,split,y,f)")->required();
  estimate->add_option("--moments-file", e_moments_file,
                       "Known-moments CSV; sample moments are used when omitted");
  estimate->add_option("--estimator", e_estimator, "Estimator name");
  estimate->add_option("--out", e_out, "Output CSV (stdout if omitted)");
  estimate->add_option("--grid-size", e_grid, "Interior omega grid points")->check(CLI::Range(2, 1000000));

  // cure-scan
  auto* scan = app.add_subcommand("cure-scan", "Write the risk estimate over the omega grid");
  SynthFlags cflags;
  cflags.add_to(scan);
  std::string c_data, c_moments_file, c_objective = "pas", c_out;
  std::size_t c_grid = pas::kDefaultGridSize;
  scan->add_option("--data", c_data, "Data CSV; synthetic draw when omitted");
  scan->add_option("--moments-file", c_moments_file, "Known-moments CSV for --data");
  scan->add_option("--objective", c_objective, "pas, shrink_classical, shrink_avg or unipas")
      ->check(CLI::IsMember({"pas", "shrink_classical", "shrink_avg", "unipas"}));
  scan->add_option("--grid-size", c_grid, "Interior omega grid points")->check(CLI::Range(2, 1000000));
  scan->add_option("--out", c_out, "Output CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*synth) {
      pas::SynthBenchOptions opt;
      opt.cfg = sflags.config();
      opt.replicates = s_reps;
      opt.moments = pas::parse_moments_mode(s_moments);
      if (!s_estimators.empty()) opt.estimators = pas::parse_estimator_list(s_estimators);
      opt.threads = s_threads;
      opt.grid_size = s_grid;
      if (!s_export.empty()) {
        const auto rows = pas::synth_rows(opt.cfg, nullptr, 0);
        with_output(s_export, [&](std::ostream& out) { pas::write_rows_csv(out, rows); });
      }
      auto report = pas::run_synth_bench(opt);
      if (!s_timing) report.wall_seconds.reset();
      emit_reports({report}, {}, s_format, s_out);
    } else if (*bench) {
      const auto rows = pas::read_rows_csv(b_data);
      pas::RealBenchOptions opt;
      opt.plan.replicates = b_reps;
      opt.plan.seed = b_seed;
      opt.moments = pas::parse_moments_mode(b_moments);
      if (!b_estimators.empty()) opt.estimators = pas::parse_estimator_list(b_estimators);
      opt.threads = b_threads;
      opt.grid_size = b_grid;
      if (!b_moments_file.empty()) opt.known_moments = pas::read_moments_csv(b_moments_file);
      if (opt.moments == pas::MomentsMode::known && opt.known_moments.empty())
        throw pas::InputError("--moments known needs --moments-file");
      auto reports = pas::run_real_bench_sweep(rows, b_ratios, opt);
      if (!b_timing)
        for (auto& r : reports) r.wall_seconds.reset();
      emit_reports(reports, b_ratios, b_format, b_out);
    } else if (*estimate) {
      const auto problems = pas::ingest_csv(e_data);
      const auto kind = pas::parse_estimator(e_estimator);
      const auto stats = pas::all_means(problems);
      const bool uni = kind == pas::EstimatorKind::unipt || kind == pas::EstimatorKind::unipas;
      const auto moms = resolve_moments(problems, e_moments_file);
      const auto sample = uni ? pas::all_sample_moments(problems) : std::vector<pas::SecondMoments>{};
      if (uni) warn_if_degenerate(stats, sample);
      const std::vector<pas::EstimatorKind> kinds{kind};
      const auto est = pas::run_estimators(stats, moms, sample, kinds, e_grid).at(kind);
      with_output(e_out, [&](std::ostream& out) { write_estimates(out, problems, est); });
    } else if (*scan) {
      std::vector<pas::ProblemData> problems;
      std::vector<pas::SecondMoments> moms;
      if (!c_data.empty()) {
        problems = pas::ingest_csv(c_data);
        moms = resolve_moments(problems, c_moments_file);
      } else {
        std::vector<pas::SynthTruth> truths;
        std::tie(problems, truths) = pas::synth_draw(cflags.config(), 0);
        for (const auto& t : truths) moms.push_back(t.moments());
      }
      const auto stats = pas::all_means(problems);
      pas::RiskCurve<double> curve;
      if (c_objective == "pas")
        curve = pas::pas_fit(stats, moms, c_grid).curve;
      else if (c_objective == "shrink_classical")
        curve = pas::shrink_classical_fit(stats, moms, c_grid).curve;
      else if (c_objective == "shrink_avg")
        curve = pas::shrink_average_fit(stats, moms, c_grid).curve;
      else {
        const auto sample = pas::all_sample_moments(problems);
        warn_if_degenerate(stats, sample);
        curve = pas::unipas_fit(stats, sample, c_grid).curve;
      }
      with_output(c_out, [&](std::ostream& out) { pas::write_risk_curve_csv(out, curve); });
    }
  } catch (const pas::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const pas::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return 0;
}
