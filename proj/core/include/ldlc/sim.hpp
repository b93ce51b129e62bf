#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <utility>
#include <vector>

#include "ldlc/decoder.hpp"
#include "ldlc/lattice.hpp"

namespace ldlc {

// AWGN Monte Carlo harness. Noise variance is expressed as a distance in dB
// from the unit-volume lattice capacity threshold 1/(2*pi*e); every trial has
// its own counter-based RNG stream derived from (seed, point, trial), so
// results are bit-identical at any worker-thread count.

/// Noise-variance threshold for unit-volume lattices.
inline constexpr double kCapacityVariance =
    1.0 / (2.0 * std::numbers::pi * std::numbers::e);

struct SimConfig {
  int n = 100;
  int d = 5;
  std::vector<double> db_distances;
  int trials_per_point = 100;
  DecoderParams decoder_params{};
  std::uint64_t seed = 1;
  int threads = 1;
  /// Transmit random b in [-random_b_radius, random_b_radius]^n instead of
  /// the all-zeros point (cross-check mode; zero is the standard protocol).
  bool random_b = false;
  int random_b_radius = 2;
};

struct TrialRecord {
  double db = 0.0;
  double sigma2 = 0.0;
  int symbol_errors = 0;
  int n = 0;
  int iterations = 0;
  bool converged = false;
  bool decode_failed = false;
};

struct PointSummary {
  double db = 0.0;
  double sigma2 = 0.0;
  long long trials = 0;
  long long symbol_errors = 0;
  long long decode_failures = 0;
  double ser = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double mean_iterations = 0.0;
  double uncoded = 0.0;
};

/// sigma^2 at `db` decibels below the capacity threshold:
/// kCapacityVariance * 10^(-db/10).
double sigma2_from_db(double db);

/// Per-symbol error probability of the unit integer lattice under AWGN:
/// 2 Q(1/(2 sigma)).
double uncoded_ser(double sigma2);

/// 95% Wilson score interval for `errors` successes in `total` Bernoulli
/// draws; total must be >= 1.
std::pair<double, double> wilson_interval(long long errors, long long total);

struct PointOptions {
  std::uint64_t point_index = 0;  // part of the per-trial stream key
  int threads = 1;
  bool random_b = false;
  int random_b_radius = 2;
  std::vector<TrialRecord>* records = nullptr;  // filled per trial if non-null
};

/// Runs `trials` independent AWGN trials at one dB point: transmit (zeros by
/// default), add noise, decode, count symbol errors b_hat_i != b_i. Decode
/// failures count as n symbol errors and are flagged. Deterministic in
/// (seed, options.point_index) regardless of options.threads.
PointSummary run_point(const MagicSquareH& h, double db, int trials,
                       const DecoderParams& params, std::uint64_t seed,
                       const PointOptions& options = {});

/// run_point over config.db_distances in order (point_index = position).
/// Uses `h` when given (dimensions must match the config); otherwise
/// generates the matrix from the config seed.
std::vector<PointSummary> sweep(const SimConfig& config,
                                const MagicSquareH* h = nullptr);

/// CSV with header db,sigma2,trials,symbol_errors,ser,ci_low,ci_high,
/// mean_iters,uncoded_ser.
void write_csv(std::ostream& os, const std::vector<PointSummary>& points);

}  // namespace ldlc
