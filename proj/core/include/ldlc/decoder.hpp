#pragma once

#include <vector>

#include "ldlc/errors.hpp"
#include "ldlc/gaussian.hpp"
#include "ldlc/lattice.hpp"

namespace ldlc {

// Gaussian-mixture belief propagation on a MagicSquareH factor graph with a
// flooding schedule: every iteration updates all check rows from the previous
// q-messages, then all variable columns from the fresh r-messages. Message
// growth is capped by running the moment-matching reduction after every
// pairwise convolution/product and after the integer-shift extension.

struct DecoderParams {
  ReductionParams reduction{};
  /// Number of consecutive integer shifts kept per component at the check
  /// node's extension step; must be odd and >= 1.
  int shift_count = 3;
  int max_iterations = 100;
  /// Decoding stops early once b_hat is unchanged for this many consecutive
  /// iterations.
  int stability_window = 3;
  /// Run the reduction on the extension output too (not only after pairwise
  /// steps); disable for ablation only.
  bool reduce_after_extension = true;
};

struct DecoderState {
  const MagicSquareH* matrix = nullptr;
  std::vector<double> y;
  double noise_variance = 0.0;
  int iteration = 0;
  // Messages live on edge ids e = row * d + slot (see MagicSquareH).
  std::vector<GaussianMixture> q;  // variable -> check
  std::vector<GaussianMixture> r;  // check -> variable
};

struct DecodeResult {
  std::vector<double> x_hat;
  std::vector<long long> b_hat;
  int iterations_used = 0;
  bool converged = false;
};

struct DecodeDiagnostics {
  std::vector<int> max_components_per_iteration;
  long long variance_clamps = 0;
  int iterations_used = 0;
  bool converged = false;
};

/// q-messages on every edge of variable node i start as the channel belief
/// N(y_i, sigma2); r-messages start empty and are filled by the first check
/// phase.
DecoderState init_channel_messages(const std::vector<double>& y, double sigma2,
                                   const MagicSquareH& h);

/// Componentwise (m_a + m_b, v_a + v_b, c_a * c_b) over all pairs (a-major
/// order), then reduced with params.reduction.
GaussianMixture convolve_pair(const GaussianMixture& a, const GaussianMixture& b,
                              const DecoderParams& params);

/// Pointwise product of mixture densities, renormalized: per pair,
/// v = v_a v_b / (v_a + v_b), m = (m_a v_b + m_b v_a) / (v_a + v_b), and the
/// Gaussian-product mass c_a c_b N(m_a - m_b; 0, v_a + v_b). Pair weights are
/// accumulated in log space; pairs more than 46 nats below the running
/// maximum are dropped. Reduced with params.reduction.
GaussianMixture product_pair(const GaussianMixture& a, const GaussianMixture& b,
                             const DecoderParams& params);

/// Recomputes the d r-messages of one check row from the row's q-messages:
/// unstretch by the row coefficients, leave-one-out forward/backward
/// convolutions, replicate each component at shift_count consecutive integers
/// centered on the channel-consistent shift, reduce, and stretch back.
void check_node_update(DecoderState& state, int row, const DecoderParams& params);

/// Recomputes the d q-messages of one variable column from the column's
/// r-messages and the channel belief via leave-one-out forward/backward
/// products. When posterior_out is non-null it also receives the full product
/// (channel times all d r-messages), reduced and normalized.
void variable_node_update(DecoderState& state, int col, const DecoderParams& params,
                          GaussianMixture* posterior_out = nullptr);

/// Normalized product of the channel belief and all d r-messages of a column.
GaussianMixture posterior(const DecoderState& state, int col,
                          const DecoderParams& params);

/// Mode of a mixture density: best component mean, refined by 20 ternary-search
/// steps between that mean's sorted neighbors.
double argmax_density(const GaussianMixture& mix);

/// Componentwise posterior argmax; x_hat of the current state.
std::vector<double> estimate_x(const DecoderState& state, const DecoderParams& params);

/// Full decode loop. Stops when b_hat is stable for params.stability_window
/// iterations (converged = true) or after params.max_iterations. With
/// max_iterations = 0 this returns the channel-only estimate x_hat = y.
/// Message collapse mid-iteration surfaces as DecodeError.
DecodeResult decode(const std::vector<double>& y, const MagicSquareH& h, double sigma2,
                    const DecoderParams& params,
                    DecodeDiagnostics* diagnostics = nullptr);

}  // namespace ldlc
