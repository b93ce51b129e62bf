#include "ldlc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <thread>
#include <utility>

#include "ldlc/rng.hpp"

namespace ldlc {
namespace {

constexpr double kZ95 = 1.959963984540054;

TrialRecord run_trial(const MagicSquareH& h, double db, double sigma2,
                      const DecoderParams& params, std::uint64_t stream,
                      bool random_b, int radius, const SparseSolver* solver) {
  const int n = h.n;
  CounterRng rng(stream);

  std::vector<long long> b(static_cast<std::size_t>(n), 0);
  std::vector<double> y;
  if (random_b) {
    std::vector<double> rhs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      b[static_cast<std::size_t>(i)] = rng.next_int(-radius, radius);
      rhs[static_cast<std::size_t>(i)] =
          static_cast<double>(b[static_cast<std::size_t>(i)]);
    }
    y = solver->solve(rhs);
  } else {
    y.assign(static_cast<std::size_t>(n), 0.0);
  }
  const double sigma = std::sqrt(sigma2);
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] += sigma * rng.next_gaussian();

  TrialRecord rec;
  rec.db = db;
  rec.sigma2 = sigma2;
  rec.n = n;
  try {
    const DecodeResult res = decode(y, h, sigma2, params);
    rec.iterations = res.iterations_used;
    rec.converged = res.converged;
    for (int i = 0; i < n; ++i)
      if (res.b_hat[static_cast<std::size_t>(i)] != b[static_cast<std::size_t>(i)])
        ++rec.symbol_errors;
  } catch (const DecodeError&) {
    rec.decode_failed = true;
    rec.symbol_errors = n;
    rec.iterations = params.max_iterations;
  }
  return rec;
}

}  // namespace

double sigma2_from_db(double db) {
  return kCapacityVariance * std::pow(10.0, -db / 10.0);
}

double uncoded_ser(double sigma2) {
  if (!(sigma2 > 0.0)) throw Error("uncoded_ser: sigma2 must be positive");
  const double sigma = std::sqrt(sigma2);
  return std::erfc(1.0 / (2.0 * std::numbers::sqrt2 * sigma));
}

std::pair<double, double> wilson_interval(long long errors, long long total) {
  if (total < 1 || errors < 0 || errors > total)
    throw Error("wilson_interval: need 0 <= errors <= total, total >= 1");
  const double t = static_cast<double>(total);
  const double p = static_cast<double>(errors) / t;
  const double z2 = kZ95 * kZ95;
  const double denom = 1.0 + z2 / t;
  const double center = (p + z2 / (2.0 * t)) / denom;
  const double half =
      kZ95 * std::sqrt(p * (1.0 - p) / t + z2 / (4.0 * t * t)) / denom;
  // exact endpoints at the boundaries (center -+ half only cancels to ~1e-18)
  const double lo = errors == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = errors == total ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

PointSummary run_point(const MagicSquareH& h, double db, int trials,
                       const DecoderParams& params, std::uint64_t seed,
                       const PointOptions& options) {
  if (trials < 1) throw Error("run_point: trials must be >= 1");
  if (options.random_b && options.random_b_radius < 0)
    throw Error("run_point: negative transmission radius");
  const double sigma2 = sigma2_from_db(db);

  std::vector<TrialRecord> local(static_cast<std::size_t>(trials));
  const int workers = std::max(1, std::min(options.threads, trials));
  auto work = [&](int worker) {
    // Per-worker factorization: encode solves stay thread-confined.
    std::unique_ptr<SparseSolver> solver;
    if (options.random_b) solver = std::make_unique<SparseSolver>(h);
    for (int t = worker; t < trials; t += workers)
      local[static_cast<std::size_t>(t)] = run_trial(
          h, db, sigma2, params,
          derive_stream(seed, options.point_index, static_cast<std::uint64_t>(t)),
          options.random_b, options.random_b_radius, solver.get());
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }

  PointSummary s;
  s.db = db;
  s.sigma2 = sigma2;
  s.trials = trials;
  long long iter_sum = 0;
  for (const auto& rec : local) {
    s.symbol_errors += rec.symbol_errors;
    s.decode_failures += rec.decode_failed ? 1 : 0;
    iter_sum += rec.iterations;
  }
  const long long symbols = static_cast<long long>(trials) * h.n;
  s.ser = static_cast<double>(s.symbol_errors) / static_cast<double>(symbols);
  const auto ci = wilson_interval(s.symbol_errors, symbols);
  s.ci_low = ci.first;
  s.ci_high = ci.second;
  s.mean_iterations = static_cast<double>(iter_sum) / static_cast<double>(trials);
  s.uncoded = uncoded_ser(sigma2);
  if (options.records != nullptr) *options.records = std::move(local);
  return s;
}

std::vector<PointSummary> sweep(const SimConfig& config, const MagicSquareH* h) {
  if (config.trials_per_point < 1) throw Error("sweep: trials_per_point must be >= 1");
  if (config.db_distances.empty()) throw Error("sweep: no dB distances configured");
  for (double db : config.db_distances)
    if (!std::isfinite(db)) throw Error("sweep: non-finite dB distance");

  MagicSquareH generated;
  if (h == nullptr) {
    generated = generate(config.n, config.d, derive_stream(config.seed, 0x6d7472, 0));
    h = &generated;
  } else if (h->n != config.n || h->d != config.d) {
    throw Error("sweep: matrix dimensions disagree with config");
  }

  std::vector<PointSummary> out;
  out.reserve(config.db_distances.size());
  for (std::size_t p = 0; p < config.db_distances.size(); ++p) {
    PointOptions opt;
    opt.point_index = p;
    opt.threads = config.threads;
    opt.random_b = config.random_b;
    opt.random_b_radius = config.random_b_radius;
    try {
      out.push_back(run_point(*h, config.db_distances[p], config.trials_per_point,
                              config.decoder_params, config.seed, opt));
    } catch (const Error& e) {
      throw Error("sweep point db=" + std::to_string(config.db_distances[p]) +
                  ": " + e.what());
    }
  }
  return out;
}

void write_csv(std::ostream& os, const std::vector<PointSummary>& points) {
  os << "db,sigma2,trials,symbol_errors,ser,ci_low,ci_high,mean_iters,uncoded_ser\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%lld,%lld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  p.db, p.sigma2, p.trials, p.symbol_errors, p.ser, p.ci_low,
                  p.ci_high, p.mean_iterations, p.uncoded);
    os << buf;
  }
}

}  // namespace ldlc
