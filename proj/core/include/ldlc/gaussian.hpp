#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "ldlc/errors.hpp"

namespace ldlc {

// One-dimensional Gaussian mixtures and the moment-matching reduction that
// keeps decoder messages small. All operations are pure functions of their
// inputs; values are safe to share across threads.

/// Smallest variance any operation will produce; smaller values are clamped
/// and counted (see variance_clamp_count).
inline constexpr double kVarianceFloor = 1e-12;
/// Largest variance any operation will produce.
inline constexpr double kVarianceCeiling = 1e12;
/// Components below this normalized weight are dropped before reduction.
inline constexpr double kWeightFloor = 1e-12;

/// One (mean, variance, weight) triple of a mixture.
struct GaussianComponent {
  double mean = 0.0;
  double variance = 1.0;
  double weight = 1.0;
};

/// An ordered list of weighted Gaussian components representing one density
///   f(z) = sum_i weight_i * N(z; mean_i, variance_i).
struct GaussianMixture {
  std::vector<GaussianComponent> components;

  GaussianMixture() = default;
  explicit GaussianMixture(std::vector<GaussianComponent> comps)
      : components(std::move(comps)) {}

  static GaussianMixture single(double mean, double variance, double weight = 1.0) {
    return GaussianMixture{{GaussianComponent{mean, variance, weight}}};
  }

  std::size_t size() const noexcept { return components.size(); }
  bool empty() const noexcept { return components.empty(); }

  /// Throws Error unless every component is finite with variance > 0,
  /// weight >= 0, and the mixture is non-empty.
  void validate() const;
};

/// Stopping parameters of the greedy pairwise reduction: merging continues
/// while the cheapest merge costs less than `theta`, and in any case until at
/// most `max_components` components remain.
struct ReductionParams {
  double theta = 0.5;
  int max_components = 6;
};

/// Pointwise mixture density; >= 0 everywhere.
double density_at(const GaussianMixture& mix, double z);

/// Rescales weights to sum to 1; means, variances and order are untouched.
/// Throws DegenerateMessageError when the weight sum is zero or non-finite.
GaussianMixture normalize(const GaussianMixture& mix);

/// Integrated squared difference between two unit-mass Gaussian densities
/// (weights of the operands are ignored). Symmetric, >= 0, and zero exactly
/// when the (mean, variance) pairs coincide.
double sd_single(const GaussianComponent& a, const GaussianComponent& b);

/// The single Gaussian with the same first and second moments as the
/// normalized two-component mixture {a, b}; its weight is a.weight + b.weight.
/// Throws DegeneratePairError when the total weight is zero.
GaussianComponent moment_match(const GaussianComponent& a, const GaussianComponent& b);

/// Squared difference between the normalized two-component mixture {a, b} and
/// its moment-matched single Gaussian. Symmetric in the operands and invariant
/// under common positive scaling of the weights.
double gql_pair(const GaussianComponent& a, const GaussianComponent& b);

/// Greedy pairwise reduction: repeatedly replace the pair with the smallest
/// merge cost by its moment match, while the cost is below params.theta or
/// more than params.max_components components remain. The output is
/// normalized and preserves the mixture mean and variance.
GaussianMixture reduce(const GaussianMixture& mix, const ReductionParams& params);

/// Clamps a variance into [kVarianceFloor, kVarianceCeiling]; out-of-range
/// (or NaN) inputs are counted in the thread-local clamp counter.
double clamp_variance_counted(double v) noexcept;

/// Thread-local count of variance-floor/ceiling clamps since the last reset.
long long variance_clamp_count() noexcept;
void reset_variance_clamp_count() noexcept;

/// Text fixture format: one `mean<TAB>variance<TAB>weight` line per component,
/// 17 significant digits.
void write_mixture(std::ostream& os, const GaussianMixture& mix);
GaussianMixture read_mixture(std::istream& is);

namespace detail {

/// Reusable workspace for building a mixture component-by-component and then
/// running the greedy reduction on it without intermediate allocations. The
/// decoder feeds convolution/product terms straight into one of these.
class MixtureAccumulator {
 public:
  void clear() noexcept;
  void push(double mean, double variance, double weight);
  std::size_t pending() const noexcept { return count_; }
  double pending_weight_sum() const noexcept;

  /// Normalize, drop sub-floor weights, merge greedily, normalize again.
  /// Equivalent to ldlc::reduce on the pushed components.
  GaussianMixture run(const ReductionParams& params);

 private:
  struct Slot {
    double mean;
    double variance;
    double weight;
    bool alive;
  };

  double merge_cost(const Slot& a, const Slot& b) const noexcept;

  std::vector<Slot> slots_;
  std::vector<double> cost_;  // lower triangle, cost_[j*(j-1)/2 + i] for i < j
  std::vector<std::size_t> alive_;
  std::size_t count_ = 0;
};

MixtureAccumulator& thread_accumulator() noexcept;

}  // namespace detail
}  // namespace ldlc
