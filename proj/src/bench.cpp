#include "pas/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "pas/data.hpp"
#include "pas/pipeline.hpp"

namespace pas {

namespace {

struct NamedKind {
  EstimatorKind kind;
  const char* name;
};

constexpr NamedKind kNames[] = {
    {EstimatorKind::classical, "classical"},
    {EstimatorKind::prediction_avg, "prediction_avg"},
    {EstimatorKind::ppi, "ppi"},
    {EstimatorKind::pt, "pt"},
    {EstimatorKind::shrink_classical, "shrink_classical"},
    {EstimatorKind::shrink_avg, "shrink_avg"},
    {EstimatorKind::pas, "pas"},
    {EstimatorKind::unipt, "unipt"},
    {EstimatorKind::unipas, "unipas"},
};

bool needs_sample_moments(std::span<const EstimatorKind> kinds) {
  return std::any_of(kinds.begin(), kinds.end(), [](EstimatorKind k) {
    return k == EstimatorKind::unipt || k == EstimatorKind::unipas;
  });
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::ordered_json estimator_names(std::span<const EstimatorKind> kinds) {
  auto arr = nlohmann::ordered_json::array();
  for (auto k : kinds) arr.push_back(to_string(k));
  return arr;
}

std::vector<EstimatorSummary> summarize(
    std::span<const EstimatorKind> kinds,
    const std::vector<std::map<EstimatorKind, EstimateVector>>& per_replicate,
    const std::vector<EstimateVector>& truths) {
  const std::size_t K = per_replicate.size();
  std::vector<EstimateVector> classical(K);
  for (std::size_t k = 0; k < K; ++k) classical[k] = per_replicate[k].at(EstimatorKind::classical);
  std::vector<EstimatorSummary> rows;
  for (auto kind : kinds) {
    std::vector<EstimateVector> est(K);
    for (std::size_t k = 0; k < K; ++k) est[k] = per_replicate[k].at(kind);
    EstimatorSummary s = metrics(est, classical, truths);
    s.kind = kind;
    s.baseline = kind == EstimatorKind::classical;
    rows.push_back(s);
  }
  return rows;
}

std::vector<SecondMoments> moments_for(MomentsMode mode, std::span<const ProblemData> problems,
                                       const std::map<std::string, SecondMoments>& known) {
  if (mode == MomentsMode::sample) return all_sample_moments(problems);
  if (known.empty()) throw InputError("moments mode 'known' needs a moments table");
  return align_moments({problems.begin(), problems.end()}, known);
}

}  // namespace

std::string to_string(EstimatorKind k) {
  for (const auto& n : kNames)
    if (n.kind == k) return n.name;
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& s) {
  for (const auto& n : kNames)
    if (s == n.name) return n.kind;
  throw InputError("unknown estimator '" + s + "'");
}

std::vector<EstimatorKind> parse_estimator_list(const std::string& s) {
  std::vector<EstimatorKind> out{EstimatorKind::classical};
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const EstimatorKind k = parse_estimator(item);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

std::string to_string(MomentsMode m) { return m == MomentsMode::known ? "known" : "sample"; }

MomentsMode parse_moments_mode(const std::string& s) {
  if (s == "known") return MomentsMode::known;
  if (s == "sample") return MomentsMode::sample;
  throw InputError("unknown moments mode '" + s + "' (expected known or sample)");
}

std::vector<EstimatorKind> synthetic_table_estimators() {
  return {EstimatorKind::classical, EstimatorKind::prediction_avg, EstimatorKind::ppi,
          EstimatorKind::pt,        EstimatorKind::shrink_classical, EstimatorKind::shrink_avg,
          EstimatorKind::pas};
}

std::vector<EstimatorKind> all_estimators() {
  std::vector<EstimatorKind> out;
  for (const auto& n : kNames) out.push_back(n.kind);
  return out;
}

std::map<EstimatorKind, EstimateVector> run_estimators(std::span<const AggregatedStats> stats,
                                                       std::span<const SecondMoments> moms,
                                                       std::span<const SecondMoments> sample_moms,
                                                       std::span<const EstimatorKind> kinds,
                                                       std::size_t grid_size) {
  const auto m = static_cast<Eigen::Index>(stats.size());
  std::map<EstimatorKind, EstimateVector> out;
  std::optional<PowerTuningSet<double>> ctxs;
  auto contexts = [&]() -> const PowerTuningSet<double>& {
    if (!ctxs) ctxs = pt_contexts(stats, moms);
    return *ctxs;
  };
  std::optional<UniPasFit> uni;
  auto uni_fit = [&]() -> const UniPasFit& {
    if (!uni) uni = unipas_fit(stats, sample_moms, grid_size);
    return *uni;
  };

  for (auto kind : kinds) {
    EstimateVector v(m);
    switch (kind) {
      case EstimatorKind::classical:
        for (Eigen::Index j = 0; j < m; ++j) v[j] = classical(stats[j]);
        break;
      case EstimatorKind::prediction_avg:
        for (Eigen::Index j = 0; j < m; ++j) v[j] = prediction_avg(stats[j]);
        break;
      case EstimatorKind::ppi:
        for (Eigen::Index j = 0; j < m; ++j) v[j] = ppi(stats[j]);
        break;
      case EstimatorKind::pt:
        v = pt_estimates(stats, contexts());
        break;
      case EstimatorKind::shrink_classical:
        v = shrink_classical_fit(stats, moms, grid_size).estimates;
        break;
      case EstimatorKind::shrink_avg:
        v = shrink_average_fit(stats, moms, grid_size).estimates;
        break;
      case EstimatorKind::pas:
        v = pas_fit(stats, moms, grid_size).estimates;
        break;
      case EstimatorKind::unipt:
        v = uni_fit().source;
        break;
      case EstimatorKind::unipas:
        v = uni_fit().estimates;
        break;
    }
    out.emplace(kind, std::move(v));
  }
  return out;
}

ProblemSize split_sizes(std::size_t total, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InputError("split ratio must lie in (0, 1)");
  // The relative nudge absorbs representation error such as 0.29 * 100 = 28.999...
  const auto big_n =
      static_cast<std::size_t>(std::floor(ratio * static_cast<double>(total) * (1.0 + 1e-12)));
  return {total - big_n, big_n};
}

std::vector<double> pseudo_truth(std::span<const ProblemRows> problems) {
  std::vector<double> out;
  out.reserve(problems.size());
  for (const auto& p : problems) {
    if (p.rows.empty()) throw InputError("problem '" + p.id + "' has no rows");
    CompensatedSum s;
    for (const auto& r : p.rows) {
      if (!r.y) throw InputError("problem '" + p.id + "': benchmark input needs y on every row");
      s.add(*r.y);
    }
    out.push_back(s.value() / static_cast<double>(p.rows.size()));
  }
  return out;
}

ProblemData split_replicate(const ProblemRows& rows, const SplitPlan& plan, std::uint64_t k,
                            std::uint64_t problem_index) {
  const std::size_t total = rows.rows.size();
  const ProblemSize sz = split_sizes(total, plan.ratio);
  if (sz.n < 2)
    throw InputError("problem '" + rows.id + "': split leaves " + std::to_string(sz.n) +
                     " labeled rows (need 2)");
  if (sz.big_n < 1) throw InputError("problem '" + rows.id + "': split leaves no unlabeled rows");

  std::vector<std::size_t> perm(total);
  for (std::size_t i = 0; i < total; ++i) perm[i] = i;
  RandomStream rng = RandomStream::substream(plan.seed, k, problem_index);
  for (std::size_t i = total - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

  ProblemData d;
  d.id = rows.id;
  d.labeled.reserve(sz.n);
  d.unlabeled_preds.reserve(sz.big_n);
  for (std::size_t i = 0; i < total; ++i) {
    const DataRow& r = rows.rows[perm[i]];
    if (i < sz.n) {
      if (!r.y) throw InputError("problem '" + rows.id + "': benchmark input needs y on every row");
      d.labeled.push_back({*r.y, r.f});
    } else {
      d.unlabeled_preds.push_back(r.f);
    }
  }
  return d;
}

EstimatorSummary metrics(std::span<const EstimateVector> estimates,
                         std::span<const EstimateVector> classical,
                         std::span<const EstimateVector> truths) {
  const std::size_t K = estimates.size();
  if (K < 2) throw InputError("metrics: need at least 2 replicates for a standard error");
  if (classical.size() != K || truths.size() != K)
    throw InputError("metrics: replicate counts differ");
  std::vector<double> losses(K), improved(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& e = estimates[k];
    const auto& c = classical[k];
    const auto& t = truths[k];
    if (e.size() != t.size() || c.size() != t.size() || t.size() == 0)
      throw InputError("metrics: problem counts differ");
    const EstimateVector err = (e - t).array().square().matrix();
    const EstimateVector cerr = (c - t).array().square().matrix();
    losses[k] = err.mean();
    improved[k] = 100.0 * (err.array() < cerr.array()).cast<double>().mean();
  }
  auto mean_se = [K](const std::vector<double>& xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    const double mean = s.value() / static_cast<double>(K);
    CompensatedSum ss;
    for (double x : xs) ss.add((x - mean) * (x - mean));
    const double sd = std::sqrt(ss.value() / static_cast<double>(K - 1));
    return std::pair{mean, sd / std::sqrt(static_cast<double>(K))};
  };
  EstimatorSummary out;
  std::tie(out.mse, out.se) = mean_se(losses);
  std::tie(out.improved_pct, out.improved_se) = mean_se(improved);
  return out;
}

const EstimatorSummary& BenchReport::at(EstimatorKind k) const {
  for (const auto& r : rows)
    if (r.kind == k) return r;
  throw InputError("report has no row for '" + to_string(k) + "'");
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

BenchReport run_synth_bench(const SynthBenchOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t K = opt.replicates;
  std::vector<std::map<EstimatorKind, EstimateVector>> per_rep(K);
  std::vector<EstimateVector> truths(K);
  const bool want_sample = needs_sample_moments(opt.estimators);

  parallel_for(K, opt.threads, [&](std::size_t k) {
    auto [problems, truth] = synth_draw(opt.cfg, k);
    const auto stats = all_means(problems);
    std::vector<SecondMoments> sample;
    if (want_sample || opt.moments == MomentsMode::sample) sample = all_sample_moments(problems);
    std::vector<SecondMoments> known;
    if (opt.moments == MomentsMode::known) {
      known.reserve(truth.size());
      for (const auto& t : truth) known.push_back(t.moments());
    }
    const auto& moms = opt.moments == MomentsMode::known ? known : sample;
    per_rep[k] = run_estimators(stats, moms, sample, opt.estimators, opt.grid_size);
    EstimateVector th(static_cast<Eigen::Index>(truth.size()));
    for (std::size_t j = 0; j < truth.size(); ++j) th[static_cast<Eigen::Index>(j)] = truth[j].theta;
    truths[k] = std::move(th);
  });

  BenchReport report;
  report.rows = summarize(opt.estimators, per_rep, truths);
  report.seed = opt.cfg.seed;
  report.config = {{"mode", "synth"},
                   {"m", opt.cfg.m},
                   {"n", opt.cfg.n},
                   {"big_n", opt.cfg.big_n},
                   {"psi", opt.cfg.psi},
                   {"c", opt.cfg.c},
                   {"predictor", to_string(opt.cfg.predictor)},
                   {"replicates", K},
                   {"moments", to_string(opt.moments)},
                   {"estimators", estimator_names(opt.estimators)},
                   {"grid_size", opt.grid_size},
                   {"rng", RandomStream::kName}};
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

BenchReport run_real_bench(std::span<const ProblemRows> data, const RealBenchOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t K = opt.plan.replicates;
  const std::size_t m = data.size();
  if (m == 0) throw InputError("benchmark data has no problems");
  const auto truth = pseudo_truth(data);
  EstimateVector truth_vec(static_cast<Eigen::Index>(m));
  for (std::size_t j = 0; j < m; ++j) truth_vec[static_cast<Eigen::Index>(j)] = truth[j];

  std::vector<std::map<EstimatorKind, EstimateVector>> per_rep(K);
  const bool want_sample = needs_sample_moments(opt.estimators);
  parallel_for(K, opt.threads, [&](std::size_t k) {
    std::vector<ProblemData> problems;
    problems.reserve(m);
    for (std::size_t j = 0; j < m; ++j) problems.push_back(split_replicate(data[j], opt.plan, k, j));
    const auto stats = all_means(problems);
    std::vector<SecondMoments> sample;
    if (want_sample || opt.moments == MomentsMode::sample) sample = all_sample_moments(problems);
    const auto moms = opt.moments == MomentsMode::sample
                          ? sample
                          : moments_for(opt.moments, problems, opt.known_moments);
    per_rep[k] = run_estimators(stats, moms, sample, opt.estimators, opt.grid_size);
  });

  BenchReport report;
  report.rows = summarize(opt.estimators, per_rep, std::vector<EstimateVector>(K, truth_vec));
  report.seed = opt.plan.seed;
  report.config = {{"mode", "bench"},
                   {"m", m},
                   {"ratio", opt.plan.ratio},
                   {"replicates", K},
                   {"moments", to_string(opt.moments)},
                   {"estimators", estimator_names(opt.estimators)},
                   {"grid_size", opt.grid_size},
                   {"rng", RandomStream::kName}};
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<BenchReport> run_real_bench_sweep(std::span<const ProblemRows> data,
                                              std::span<const double> ratios,
                                              const RealBenchOptions& opt) {
  std::vector<BenchReport> out;
  out.reserve(ratios.size());
  for (double r : ratios) {
    RealBenchOptions o = opt;
    o.plan.ratio = r;
    out.push_back(run_real_bench(data, o));
  }
  return out;
}

void write_report_csv(std::ostream& out, const BenchReport& report) {
  out << "estimator,mse,se,improved_pct,improved_se\n";
  for (const auto& r : report.rows) {
    out << to_string(r.kind) << ',' << fmt(r.mse) << ',' << fmt(r.se) << ',';
    if (r.baseline)
      out << "baseline,baseline";
    else
      out << fmt(r.improved_pct) << ',' << fmt(r.improved_se);
    out << '\n';
  }
}

nlohmann::ordered_json report_to_json(const BenchReport& report) {
  nlohmann::ordered_json j;
  j["config"] = report.config;
  j["seed"] = report.seed;
  if (report.wall_seconds) j["wall_seconds"] = *report.wall_seconds;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json row;
    row["estimator"] = to_string(r.kind);
    row["mse"] = r.mse;
    row["se"] = r.se;
    if (r.baseline) {
      row["improved_pct"] = "baseline";
      row["improved_se"] = "baseline";
    } else {
      row["improved_pct"] = r.improved_pct;
      row["improved_se"] = r.improved_se;
    }
    rows.push_back(row);
  }
  j["estimators"] = rows;
  return j;
}

}  // namespace pas
