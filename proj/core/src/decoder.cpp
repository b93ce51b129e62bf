#include "ldlc/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

namespace ldlc {
namespace {

constexpr double kLogWeightWindow = 46.0;  // ~double-precision relative floor

void check_params(const DecoderParams& p) {
  if (p.shift_count < 1 || p.shift_count % 2 == 0)
    throw Error("shift_count must be odd and >= 1");
  if (p.max_iterations < 0) throw Error("max_iterations must be >= 0");
  if (p.stability_window < 1) throw Error("stability_window must be >= 1");
  if (p.reduction.max_components < 1) throw Error("max_components must be >= 1");
  if (p.reduction.theta < 0.0) throw Error("theta must be >= 0");
}

struct PairScratch {
  std::vector<double> mean, var, logw;
};

PairScratch& pair_scratch() noexcept {
  thread_local PairScratch s;
  return s;
}

/// Extension + reduction + stretch for one check-node output edge. `comb` is
/// the leave-one-out convolution in the unstretched domain, `w` the edge's
/// matrix coefficient, `y_j` the channel output at the receiving variable.
GaussianMixture extend_and_stretch(const GaussianMixture& comb, double w, double y_j,
                                   const DecoderParams& p) {
  auto& acc = detail::thread_accumulator();
  acc.clear();
  const int half = (p.shift_count - 1) / 2;
  const double split = 1.0 / static_cast<double>(p.shift_count);
  const double target = w * y_j;
  for (const auto& c : comb.components) {
    // Replicas whose stretched mean (b - mean)/w lands far from y_j die in
    // the variable-node product, so center the window on the closest shift.
    const double bstar = static_cast<double>(round_half_even(c.mean + target));
    for (int t = -half; t <= half; ++t)
      acc.push(bstar + t - c.mean, c.variance, c.weight * split);
  }
  const ReductionParams none{0.0, std::numeric_limits<int>::max()};
  GaussianMixture ext = acc.run(p.reduce_after_extension ? p.reduction : none);
  for (auto& c : ext.components) {
    c.mean /= w;
    c.variance = clamp_variance_counted(c.variance / (w * w));
  }
  return ext;
}

}  // namespace

DecoderState init_channel_messages(const std::vector<double>& y, double sigma2,
                                   const MagicSquareH& h) {
  if (static_cast<int>(y.size()) != h.n) throw Error("init: y length != n");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw Error("init: noise variance must be positive and finite");
  DecoderState st;
  st.matrix = &h;
  st.y = y;
  st.noise_variance = sigma2;
  st.q.assign(static_cast<std::size_t>(h.edges()), GaussianMixture{});
  st.r.assign(static_cast<std::size_t>(h.edges()), GaussianMixture{});
  for (int col = 0; col < h.n; ++col)
    for (int t = 0; t < h.d; ++t)
      st.q[static_cast<std::size_t>(h.col_edges[col * h.d + t])] =
          GaussianMixture::single(y[static_cast<std::size_t>(col)], sigma2);
  return st;
}

GaussianMixture convolve_pair(const GaussianMixture& a, const GaussianMixture& b,
                              const DecoderParams& params) {
  auto& acc = detail::thread_accumulator();
  acc.clear();
  for (const auto& ca : a.components)
    for (const auto& cb : b.components)
      acc.push(ca.mean + cb.mean, ca.variance + cb.variance, ca.weight * cb.weight);
  return acc.run(params.reduction);
}

GaussianMixture product_pair(const GaussianMixture& a, const GaussianMixture& b,
                             const DecoderParams& params) {
  auto& s = pair_scratch();
  s.mean.clear();
  s.var.clear();
  s.logw.clear();
  double max_lw = -std::numeric_limits<double>::infinity();
  for (const auto& ca : a.components)
    for (const auto& cb : b.components) {
      const double vs = ca.variance + cb.variance;
      const double dm = ca.mean - cb.mean;
      const double lw = std::log(ca.weight * cb.weight) -
                        0.5 * std::log(2.0 * std::numbers::pi * vs) -
                        dm * dm / (2.0 * vs);
      s.mean.push_back((ca.mean * cb.variance + cb.mean * ca.variance) / vs);
      s.var.push_back(ca.variance * cb.variance / vs);
      s.logw.push_back(lw);
      max_lw = std::max(max_lw, lw);
    }
  if (!std::isfinite(max_lw))
    throw DegenerateMessageError("every product pair weight underflowed");
  auto& acc = detail::thread_accumulator();
  acc.clear();
  for (std::size_t i = 0; i < s.logw.size(); ++i)
    if (s.logw[i] > max_lw - kLogWeightWindow)
      acc.push(s.mean[i], s.var[i], std::exp(s.logw[i] - max_lw));
  return acc.run(params.reduction);
}

void check_node_update(DecoderState& state, int row, const DecoderParams& params) {
  const MagicSquareH& h = *state.matrix;
  const int d = h.d;
  const int base = row * d;
  thread_local std::vector<GaussianMixture> tilde, fwd, bwd;
  tilde.resize(static_cast<std::size_t>(d));
  fwd.resize(static_cast<std::size_t>(d));
  bwd.resize(static_cast<std::size_t>(d));

  for (int s = 0; s < d; ++s) {
    const double w = h.row_vals[base + s];
    const auto& src = state.q[static_cast<std::size_t>(base + s)];
    auto& dst = tilde[static_cast<std::size_t>(s)];
    dst.components.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
      const auto& c = src.components[i];
      dst.components[i] = GaussianComponent{w * c.mean, w * w * c.variance, c.weight};
    }
  }

  fwd[0] = tilde[0];
  for (int s = 1; s <= d - 2; ++s)
    fwd[static_cast<std::size_t>(s)] =
        convolve_pair(fwd[static_cast<std::size_t>(s - 1)],
                      tilde[static_cast<std::size_t>(s)], params);
  bwd[static_cast<std::size_t>(d - 1)] = tilde[static_cast<std::size_t>(d - 1)];
  for (int s = d - 2; s >= 1; --s)
    bwd[static_cast<std::size_t>(s)] =
        convolve_pair(bwd[static_cast<std::size_t>(s + 1)],
                      tilde[static_cast<std::size_t>(s)], params);

  GaussianMixture combined;
  for (int s = 0; s < d; ++s) {
    const GaussianMixture* comb = nullptr;
    if (s == 0) {
      comb = &bwd[1];
    } else if (s == d - 1) {
      comb = &fwd[static_cast<std::size_t>(d - 2)];
    } else {
      combined = convolve_pair(fwd[static_cast<std::size_t>(s - 1)],
                               bwd[static_cast<std::size_t>(s + 1)], params);
      comb = &combined;
    }
    const double w = h.row_vals[base + s];
    const double y_j = state.y[static_cast<std::size_t>(h.row_cols[base + s])];
    state.r[static_cast<std::size_t>(base + s)] =
        extend_and_stretch(*comb, w, y_j, params);
  }
}

void variable_node_update(DecoderState& state, int col, const DecoderParams& params,
                          GaussianMixture* posterior_out) {
  const MagicSquareH& h = *state.matrix;
  const int d = h.d;
  const int base = col * d;
  const GaussianMixture channel =
      GaussianMixture::single(state.y[static_cast<std::size_t>(col)],
                              state.noise_variance);
  const auto r_in = [&](int t) -> const GaussianMixture& {
    return state.r[static_cast<std::size_t>(h.col_edges[base + t])];
  };

  thread_local std::vector<GaussianMixture> fwd, bwd;
  fwd.resize(static_cast<std::size_t>(d));
  bwd.resize(static_cast<std::size_t>(d));

  // fwd[t] = channel * r_0 * ... * r_t; bwd[t] = r_t * ... * r_{d-1}.
  fwd[0] = product_pair(channel, r_in(0), params);
  for (int t = 1; t <= d - 2; ++t)
    fwd[static_cast<std::size_t>(t)] =
        product_pair(fwd[static_cast<std::size_t>(t - 1)], r_in(t), params);
  bwd[static_cast<std::size_t>(d - 1)] = r_in(d - 1);
  for (int t = d - 2; t >= 1; --t)
    bwd[static_cast<std::size_t>(t)] =
        product_pair(bwd[static_cast<std::size_t>(t + 1)], r_in(t), params);

  // q_t excludes r_t: the chains meet around the gap at t.
  for (int t = 0; t < d; ++t) {
    GaussianMixture q_new;
    if (t == 0) {
      q_new = product_pair(channel, bwd[1], params);
    } else if (t == d - 1) {
      q_new = fwd[static_cast<std::size_t>(d - 2)];
    } else {
      q_new = product_pair(fwd[static_cast<std::size_t>(t - 1)],
                           bwd[static_cast<std::size_t>(t + 1)], params);
    }
    state.q[static_cast<std::size_t>(h.col_edges[base + t])] = std::move(q_new);
  }

  if (posterior_out != nullptr)
    *posterior_out =
        product_pair(fwd[static_cast<std::size_t>(d - 2)], r_in(d - 1), params);
}

GaussianMixture posterior(const DecoderState& state, int col,
                          const DecoderParams& params) {
  const MagicSquareH& h = *state.matrix;
  const int d = h.d;
  const int base = col * d;
  GaussianMixture acc = GaussianMixture::single(
      state.y[static_cast<std::size_t>(col)], state.noise_variance);
  for (int t = 0; t < d; ++t)
    acc = product_pair(
        acc, state.r[static_cast<std::size_t>(h.col_edges[base + t])], params);
  return acc;
}

double argmax_density(const GaussianMixture& mix) {
  if (mix.empty()) throw Error("argmax of empty mixture");
  if (mix.size() == 1) return mix.components.front().mean;

  std::size_t best = 0;
  double best_density = -1.0;
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const double dens = density_at(mix, mix.components[i].mean);
    if (dens > best_density) {
      best_density = dens;
      best = i;
    }
  }
  const double m = mix.components[best].mean;

  thread_local std::vector<double> means;
  means.clear();
  for (const auto& c : mix.components) means.push_back(c.mean);
  std::sort(means.begin(), means.end());
  const auto lb = std::lower_bound(means.begin(), means.end(), m);
  const auto ub = std::upper_bound(means.begin(), means.end(), m);
  double lo = (lb == means.begin()) ? m : *(lb - 1);
  double hi = (ub == means.end()) ? m : *ub;
  for (int step = 0; step < 20; ++step) {
    const double l1 = lo + (hi - lo) / 3.0;
    const double l2 = hi - (hi - lo) / 3.0;
    if (density_at(mix, l1) < density_at(mix, l2))
      lo = l1;
    else
      hi = l2;
  }
  const double refined = 0.5 * (lo + hi);
  return density_at(mix, refined) >= best_density ? refined : m;
}

std::vector<double> estimate_x(const DecoderState& state, const DecoderParams& params) {
  std::vector<double> x(static_cast<std::size_t>(state.matrix->n));
  for (int col = 0; col < state.matrix->n; ++col)
    x[static_cast<std::size_t>(col)] = argmax_density(posterior(state, col, params));
  return x;
}

DecodeResult decode(const std::vector<double>& y, const MagicSquareH& h, double sigma2,
                    const DecoderParams& params, DecodeDiagnostics* diagnostics) {
  check_params(params);
  const long long clamps_at_entry = variance_clamp_count();

  DecodeResult res;
  if (params.max_iterations == 0) {
    res.x_hat = y;
    res.b_hat = round_to_integers(h, y);
    if (diagnostics != nullptr) {
      *diagnostics = DecodeDiagnostics{};
      diagnostics->variance_clamps = variance_clamp_count() - clamps_at_entry;
    }
    return res;
  }

  DecoderState st = init_channel_messages(y, sigma2, h);
  std::vector<GaussianMixture> posts(static_cast<std::size_t>(h.n));
  std::vector<long long> prev_b;
  int run = 0;
  if (diagnostics != nullptr) *diagnostics = DecodeDiagnostics{};

  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    st.iteration = iter;
    try {
      for (int row = 0; row < h.n; ++row) check_node_update(st, row, params);
      for (int col = 0; col < h.n; ++col)
        variable_node_update(st, col, params, &posts[static_cast<std::size_t>(col)]);
    } catch (const DegenerateMessageError& e) {
      throw DecodeError("message collapse at iteration " + std::to_string(iter) +
                        ": " + e.what());
    }

    res.x_hat.resize(static_cast<std::size_t>(h.n));
    for (int col = 0; col < h.n; ++col)
      res.x_hat[static_cast<std::size_t>(col)] =
          argmax_density(posts[static_cast<std::size_t>(col)]);
    res.b_hat = round_to_integers(h, res.x_hat);
    res.iterations_used = iter;

    if (diagnostics != nullptr) {
      int max_comps = 0;
      for (const auto& msg : st.q) max_comps = std::max(max_comps, static_cast<int>(msg.size()));
      for (const auto& msg : st.r) max_comps = std::max(max_comps, static_cast<int>(msg.size()));
      diagnostics->max_components_per_iteration.push_back(max_comps);
    }

    if (res.b_hat == prev_b) {
      ++run;
    } else {
      run = 1;
      prev_b = res.b_hat;
    }
    if (run >= params.stability_window) {
      res.converged = true;
      break;
    }
  }

  if (diagnostics != nullptr) {
    diagnostics->iterations_used = res.iterations_used;
    diagnostics->converged = res.converged;
    diagnostics->variance_clamps = variance_clamp_count() - clamps_at_entry;
  }
  return res;
}

}  // namespace ldlc
