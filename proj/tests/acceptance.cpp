// Acceptance gate: one line per criterion, PASS/FAIL, exit 0 only if all pass.
// Every expected value here comes from the independent oracles (quadrature,
// grid algebra, dense LU, exhaustive ML search), never from the code under
// test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ldlc/decoder.hpp"
#include "ldlc/gaussian.hpp"
#include "ldlc/lattice.hpp"
#include "ldlc/oracle.hpp"
#include "ldlc/rng.hpp"
#include "ldlc/sim.hpp"

using namespace ldlc;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("%s  criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, name,
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double rel_gap(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

DecoderParams reduction_off() {
  DecoderParams p;
  p.reduction = ReductionParams{0.0, std::numeric_limits<int>::max()};
  return p;
}

/// Fully connected all-positive 3x3 magic square (diagonal 1, rest 1/sqrt 3):
/// every check/variable node sees d = 3 edges with exactly known positive
/// coefficients, which keeps the grid-oracle pipeline free of axis flips.
MagicSquareH dense3() {
  const double a = 1.0 / std::sqrt(3.0);
  MagicSquareH h;
  h.n = 3;
  h.d = 3;
  h.global_scale = 1.0;
  h.h_sequence = {1.0, a, a};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      h.row_cols.push_back(c);
      h.row_vals.push_back(r == c ? 1.0 : a);
    }
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) {
      h.col_rows.push_back(r);
      h.col_edges.push_back(r * 3 + c);
    }
  h.validate();
  return h;
}

// ---- criterion 1: squared difference, closed form vs quadrature -----------

void criterion1() {
  CounterRng rng(derive_stream(1001, 0, 0));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GaussianComponent a{3.0 * rng.next_gaussian(), 0.05 + 3.0 * rng.next_unit(), 1.0};
    const GaussianComponent b{3.0 * rng.next_gaussian(), 0.05 + 3.0 * rng.next_unit(), 1.0};
    worst = std::max(worst, std::abs(sd_single(a, b) -
                                     oracle::quad_sd(GaussianMixture{{a}},
                                                     GaussianMixture{{b}})));
  }
  const double ref = sd_single({0.0, 1.0, 1.0}, {1.0, 1.0, 1.0});
  const bool ref_ok = std::abs(ref - 0.1247981) <= 5e-7;
  report(1, "squared difference closed form vs quadrature", worst <= 1e-8 && ref_ok,
         fmt("worst |diff| %.3g over 1000 pairs; reference %.7f vs 0.1247981", worst,
             ref));
}

// ---- criterion 2: moment matching and pair merge cost vs quadrature -------

void criterion2() {
  CounterRng rng(derive_stream(1002, 0, 0));
  double worst_mm = 0.0, worst_gql = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GaussianComponent a{3.0 * rng.next_gaussian(), 0.1 + 2.0 * rng.next_unit(),
                              0.05 + rng.next_unit()};
    const GaussianComponent b{3.0 * rng.next_gaussian(), 0.1 + 2.0 * rng.next_unit(),
                              0.05 + rng.next_unit()};
    const double total = a.weight + b.weight;
    GaussianMixture pair{{a, b}};
    pair.components[0].weight /= total;
    pair.components[1].weight /= total;

    const GaussianComponent mm = moment_match(a, b);
    const auto [qm, qv] = oracle::quad_moments(pair);
    worst_mm = std::max({worst_mm, rel_gap(mm.mean, qm), rel_gap(mm.variance, qv)});

    GaussianComponent unit = mm;
    unit.weight = 1.0;
    const double cost_ref = oracle::quad_sd(pair, GaussianMixture{{unit}});
    worst_gql = std::max(worst_gql, std::abs(gql_pair(a, b) - cost_ref));
  }
  report(2, "moment matching and merge cost vs quadrature",
         worst_mm <= 1e-9 && worst_gql <= 1e-8,
         fmt("worst moment gap %.3g (rel), worst cost gap %.3g over 1000 pairs",
             worst_mm, worst_gql));
}

// ---- criterion 3: reduction contract ---------------------------------------

void criterion3() {
  CounterRng rng(derive_stream(1003, 0, 0));
  bool ok = true;
  std::string why = "all contracts held";
  double worst_moment = 0.0;

  const auto moments = [](const GaussianMixture& m) {
    double w = 0.0, mean = 0.0, second = 0.0;
    for (const auto& c : m.components) {
      w += c.weight;
      mean += c.weight * c.mean;
      second += c.weight * (c.variance + c.mean * c.mean);
    }
    mean /= w;
    second /= w;
    return std::pair{mean, second - mean * mean};
  };

  for (int trial = 0; trial < 200 && ok; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_below(49));  // N <= 50
    GaussianMixture m;
    // weights sum to exactly 1 so the no-op path can be compared bitwise
    m.components.push_back({0.0, 1.0, 0.6});
    double partial = 0.6;
    for (int i = 1; i < n - 1; ++i) {
      const double w = 0.001 + 0.2 * rng.next_unit() / n;
      m.components.push_back(
          {4.0 * rng.next_gaussian(), 0.1 + 2.0 * rng.next_unit(), w});
      partial += w;
    }
    m.components.push_back(
        {4.0 * rng.next_gaussian(), 0.1 + 2.0 * rng.next_unit(), 1.0 - partial});
    m.components[0].mean = 4.0 * rng.next_gaussian();

    const auto [m0, v0] = moments(m);
    for (int cap : {1, 2, 6}) {
      const auto out = reduce(m, ReductionParams{0.5, cap});
      if (out.size() > static_cast<std::size_t>(cap)) {
        ok = false;
        why = fmt("cap %d violated: %zu components", cap, out.size());
        break;
      }
      const auto [m1, v1] = moments(out);
      worst_moment = std::max({worst_moment, rel_gap(m1, m0), rel_gap(v1, v0)});
    }
    if (worst_moment > 1e-9) {
      ok = false;
      why = fmt("moments drifted by %.3g (rel)", worst_moment);
    }

    const auto same = reduce(m, ReductionParams{0.0, n});
    if (same.size() != m.size()) {
      ok = false;
      why = "theta=0 with M=N changed the component count";
    } else {
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& x = m.components[i];
        const auto& y = same.components[i];
        if (x.mean != y.mean || x.variance != y.variance || x.weight != y.weight) {
          ok = false;
          why = fmt("theta=0 with M=N altered component %zu", i);
          break;
        }
      }
    }
  }
  report(3, "reduction cap, moment preservation, and no-op identity", ok,
         ok ? fmt("200 mixtures, caps {1,2,6}; worst moment drift %.3g (rel)",
                  worst_moment)
            : why);
}

// ---- criterion 4: node updates vs grid/quadrature oracles ------------------

constexpr double kStep = 0.001953125;  // 1/512

oracle::GridFunction sample_span(const GaussianMixture& m, double lo, double hi,
                                 double arg_scale = 1.0) {
  const double origin = std::floor(lo / kStep) * kStep;
  const auto count = static_cast<std::size_t>(std::ceil((hi - origin) / kStep)) + 1;
  return oracle::sample_mixture(m, origin, kStep, count, arg_scale);
}

void criterion4() {
  const MagicSquareH h3 = dense3();
  CounterRng rng(derive_stream(1004, 0, 0));
  DecoderParams off = reduction_off();
  off.shift_count = 3;

  // tight means keep every component's channel-consistent shift at b* = 0,
  // so the oracle's extension window is exactly {-1, 0, 1}
  const auto narrow_mixture = [&](int k) {
    GaussianMixture m;
    for (int i = 0; i < k; ++i)
      m.components.push_back({0.15 * (2.0 * rng.next_unit() - 1.0),
                              0.05 + 0.25 * rng.next_unit(), 0.2 + rng.next_unit()});
    return normalize(m);
  };

  double worst_check = 0.0;
  for (int rep = 0; rep < 4; ++rep) {
    const std::vector<double> y{0.04 * rng.next_gaussian(), 0.04 * rng.next_gaussian(),
                                0.04 * rng.next_gaussian()};
    DecoderState st = init_channel_messages(y, 0.05, h3);
    st.q[0] = narrow_mixture(2);
    st.q[1] = narrow_mixture(3);
    st.q[2] = narrow_mixture(2);
    check_node_update(st, 0, off);

    for (int j = 0; j < 3; ++j) {
      // oracle: unstretch-sample the two other q's, convolve, extend over
      // {-1,0,1}, stretch by the edge coefficient
      std::vector<oracle::GridFunction> terms;
      for (int k = 0; k < 3; ++k) {
        if (k == j) continue;
        terms.push_back(sample_span(st.q[static_cast<std::size_t>(k)], -8.0, 8.0,
                                    h3.row_vals[static_cast<std::size_t>(k)]));
      }
      oracle::GridFunction conv = oracle::grid_convolve(terms[0], terms[1]);
      std::vector<oracle::GridFunction> shifted;
      for (int b = -1; b <= 1; ++b)
        shifted.push_back(oracle::grid_reflect_shift(conv, static_cast<double>(b)));
      const oracle::GridFunction ext =
          oracle::grid_superpose(shifted, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
      const oracle::GridFunction want =
          oracle::grid_stretch(ext, h3.row_vals[static_cast<std::size_t>(j)]);

      const oracle::GridFunction got =
          oracle::sample_mixture(st.r[static_cast<std::size_t>(j)], want.origin,
                                 want.step, want.size());
      worst_check = std::max(worst_check, oracle::grid_l1_diff(want, got));
    }
  }

  // variable node vs pointwise quadrature-normalized product
  double worst_var = 0.0;
  for (int rep = 0; rep < 4; ++rep) {
    const std::vector<double> y{rng.next_gaussian(), rng.next_gaussian(),
                                rng.next_gaussian()};
    DecoderState st = init_channel_messages(y, 0.4, h3);
    for (int e = 0; e < 9; ++e) {
      GaussianMixture m;
      const int k = 1 + static_cast<int>(rng.next_below(3));
      for (int i = 0; i < k; ++i)
        m.components.push_back({1.5 * rng.next_gaussian(), 0.3 + rng.next_unit(),
                                0.2 + rng.next_unit()});
      st.r[static_cast<std::size_t>(e)] = normalize(m);
    }
    const int col = 1;
    variable_node_update(st, col, off);

    for (int t = 0; t < 3; ++t) {
      const GaussianMixture channel =
          GaussianMixture::single(y[static_cast<std::size_t>(col)], 0.4);
      oracle::GridFunction prod = sample_span(channel, -12.0, 12.0);
      for (int k = 0; k < 3; ++k) {
        if (k == t) continue;
        const auto& r =
            st.r[static_cast<std::size_t>(h3.col_edges[col * 3 + k])];
        prod = oracle::grid_pointwise_product(prod, sample_span(r, -12.0, 12.0));
      }
      const auto& q = st.q[static_cast<std::size_t>(h3.col_edges[col * 3 + t])];
      const oracle::GridFunction got = oracle::grid_normalize_l1(
          oracle::sample_mixture(q, prod.origin, prod.step, prod.size()));
      worst_var = std::max(worst_var, oracle::grid_l1_diff(prod, got));
    }
  }

  // closed forms on single Gaussians, random signs included
  const MagicSquareH h6 = generate(6, 3, 12);
  DecoderParams single = reduction_off();
  single.shift_count = 1;
  double worst_closed = 0.0;
  {
    std::vector<double> y(6);
    for (auto& v : y) v = 0.05 * rng.next_gaussian();
    DecoderState st = init_channel_messages(y, 0.01, h6);
    std::vector<double> mean(18), var(18);
    for (int e = 0; e < 18; ++e) {
      mean[static_cast<std::size_t>(e)] = 0.3 * rng.next_gaussian();
      var[static_cast<std::size_t>(e)] = 0.02 + 0.05 * rng.next_unit();
      st.q[static_cast<std::size_t>(e)] =
          GaussianMixture::single(mean[static_cast<std::size_t>(e)],
                                  var[static_cast<std::size_t>(e)]);
    }
    for (int row = 0; row < 6; ++row) {
      check_node_update(st, row, single);
      for (int s = 0; s < 3; ++s) {
        const int e = row * 3 + s;
        double mu = 0.0, v = 0.0;
        for (int k = 0; k < 3; ++k) {
          if (k == s) continue;
          const double w = h6.row_vals[static_cast<std::size_t>(row * 3 + k)];
          mu += w * mean[static_cast<std::size_t>(row * 3 + k)];
          v += w * w * var[static_cast<std::size_t>(row * 3 + k)];
        }
        const double wj = h6.row_vals[static_cast<std::size_t>(e)];
        const double yj =
            y[static_cast<std::size_t>(h6.row_cols[static_cast<std::size_t>(e)])];
        const double b = static_cast<double>(round_half_even(mu + wj * yj));
        const auto& out = st.r[static_cast<std::size_t>(e)].components.at(0);
        worst_closed = std::max({worst_closed, rel_gap(out.mean, (b - mu) / wj),
                                 rel_gap(out.variance, v / (wj * wj))});
      }
    }

    // variable side: precisions add
    for (int e = 0; e < 18; ++e) {
      mean[static_cast<std::size_t>(e)] = rng.next_gaussian();
      var[static_cast<std::size_t>(e)] = 0.2 + rng.next_unit();
      st.r[static_cast<std::size_t>(e)] =
          GaussianMixture::single(mean[static_cast<std::size_t>(e)],
                                  var[static_cast<std::size_t>(e)]);
    }
    const double sigma2 = 0.01;
    st.noise_variance = sigma2;
    for (int col = 0; col < 6; ++col) {
      variable_node_update(st, col, single);
      for (int t = 0; t < 3; ++t) {
        double prec = 1.0 / sigma2;
        double num = y[static_cast<std::size_t>(col)] / sigma2;
        for (int k = 0; k < 3; ++k) {
          if (k == t) continue;
          const int e = h6.col_edges[static_cast<std::size_t>(col * 3 + k)];
          prec += 1.0 / var[static_cast<std::size_t>(e)];
          num += mean[static_cast<std::size_t>(e)] / var[static_cast<std::size_t>(e)];
        }
        const auto& out =
            st.q[static_cast<std::size_t>(h6.col_edges[col * 3 + t])].components.at(0);
        worst_closed = std::max({worst_closed, rel_gap(out.variance, 1.0 / prec),
                                 rel_gap(out.mean, num / prec)});
      }
    }
  }

  report(4, "node updates vs grid/quadrature oracles and closed forms",
         worst_check <= 1e-3 && worst_var <= 1e-6 && worst_closed <= 1e-12,
         fmt("check-node L1 %.3g (<=1e-3), variable-node L1 %.3g (<=1e-6), "
             "closed-form gap %.3g (<=1e-12)",
             worst_check, worst_var, worst_closed));
}

// ---- criterion 5: growth law without reduction -----------------------------

void criterion5() {
  const MagicSquareH h3 = dense3();
  CounterRng rng(derive_stream(1005, 0, 0));
  DecoderParams off = reduction_off();
  off.shift_count = 3;

  const auto overlapping = [&](int k) {
    GaussianMixture m;
    for (int i = 0; i < k; ++i)
      m.components.push_back({0.3 * rng.next_gaussian(), 0.8 + rng.next_unit(),
                              0.2 + rng.next_unit()});
    return normalize(m);
  };

  DecoderState st = init_channel_messages({0.02, -0.05, 0.1}, 0.2, h3);
  st.q[0] = overlapping(2);
  st.q[1] = overlapping(4);
  st.q[2] = overlapping(3);
  check_node_update(st, 0, off);
  const bool check_ok = st.r[0].size() == 4 * 3 * 3 && st.r[1].size() == 2 * 3 * 3 &&
                        st.r[2].size() == 2 * 4 * 3;

  st.r[static_cast<std::size_t>(h3.col_edges[0])] = overlapping(4);
  st.r[static_cast<std::size_t>(h3.col_edges[1])] = overlapping(2);
  st.r[static_cast<std::size_t>(h3.col_edges[2])] = overlapping(5);
  variable_node_update(st, 0, off);
  const bool var_ok =
      st.q[static_cast<std::size_t>(h3.col_edges[0])].size() == 2 * 5 &&
      st.q[static_cast<std::size_t>(h3.col_edges[1])].size() == 4 * 5 &&
      st.q[static_cast<std::size_t>(h3.col_edges[2])].size() == 4 * 2;

  report(5, "unreduced component counts follow the product law",
         check_ok && var_ok,
         fmt("check node (prod N_k)*shifts %s; variable node prod N_k %s",
             check_ok ? "exact" : "violated", var_ok ? "exact" : "violated"));
}

// ---- criterion 6: agreement with exhaustive ML at n=6 ----------------------

void criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  // First seed from 600 whose draw keeps the determinant normalization near 1.
  // A near-singular draw (global_scale far from 1) is a degenerate lattice on
  // which even exhaustive ML does poorly, so it cannot probe decoder quality.
  std::uint64_t seed = 600;
  MagicSquareH h = generate(6, 3, seed);
  while (h.global_scale < 0.9 || h.global_scale > 1.1) h = generate(6, 3, ++seed);
  const double db = 5.0;
  const double sigma2 = sigma2_from_db(db);
  const double sigma = std::sqrt(sigma2);
  const DecoderParams params;  // defaults: theta 0.5, M 6, shifts 3

  const int wanted = 1000;
  int kept = 0, discarded = 0, agree = 0;
  long long gm_errors = 0, ml_errors = 0;
  std::uint64_t trial = 0;
  while (kept < wanted) {
    CounterRng rng(derive_stream(seed, 0, trial++));
    std::vector<double> y(6);
    for (auto& v : y) v = sigma * rng.next_gaussian();

    const oracle::MlCheck ml = oracle::ml_decode_checked(h, y, 2);
    if (ml.boundary_suspect) {
      ++discarded;
      continue;
    }
    ++kept;
    const DecodeResult gm = decode(y, h, sigma2, params);
    if (gm.b_hat == ml.b) ++agree;
    for (int i = 0; i < 6; ++i) {
      gm_errors += gm.b_hat[static_cast<std::size_t>(i)] != 0;
      ml_errors += ml.b[static_cast<std::size_t>(i)] != 0;
    }
  }
  const double agreement = static_cast<double>(agree) / kept;
  const double gm_ser = static_cast<double>(gm_errors) / (6.0 * kept);
  const double ml_ser = static_cast<double>(ml_errors) / (6.0 * kept);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(6, "small-lattice agreement with exhaustive ML at 5 dB",
         agreement >= 0.95 && gm_ser <= 2.0 * ml_ser + 0.005,
         fmt("agreement %.1f%% (>=95%%), SER %.4g vs ML %.4g (<= 2x+0.005), "
             "%d boundary discards, seed %llu (scale %.3f), %.0fs",
             100.0 * agreement, gm_ser, ml_ser, discarded,
             static_cast<unsigned long long>(seed), h.global_scale, secs));
}

// ---- criteria 7+8: waterfall and message-size bound at n=100 ---------------

void criteria7and8() {
  const auto t0 = std::chrono::steady_clock::now();
  const MagicSquareH h = generate(100, 5, 700);
  const DecoderParams params;
  const std::vector<double> dbs{2.5, 3.5, 4.5};
  const int trials = 2000;

  std::vector<PointSummary> points;
  for (std::size_t i = 0; i < dbs.size(); ++i) {
    PointOptions opt;
    opt.point_index = i;
    points.push_back(run_point(h, dbs[i], trials, params, 700, opt));
  }

  const bool monotone =
      points[0].ser >= points[1].ser && points[1].ser >= points[2].ser;
  const bool gain = points[2].ser <= points[2].uncoded / 10.0;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(7, "waterfall at n=100: monotone SER, 10x below uncoded at 4.5 dB",
         monotone && gain,
         fmt("SER %.3g [%.2g,%.2g] / %.3g [%.2g,%.2g] / %.3g [%.2g,%.2g]; "
             "monotone %s; gain over uncoded at 4.5 dB x%.1f (need >=10); %.0fs",
             points[0].ser, points[0].ci_low, points[0].ci_high, points[1].ser,
             points[1].ci_low, points[1].ci_high, points[2].ser, points[2].ci_low,
             points[2].ci_high, monotone ? "yes" : "no",
             points[2].uncoded / std::max(points[2].ser, 1e-300), secs));

  // criterion 8: every stored message stays within the component cap at the
  // noisiest operating point
  int worst_components = 0;
  const double sigma = std::sqrt(sigma2_from_db(2.5));
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    CounterRng rng(derive_stream(800, 0, trial));
    std::vector<double> y(100);
    for (auto& v : y) v = sigma * rng.next_gaussian();
    DecodeDiagnostics diag;
    decode(y, h, sigma * sigma, params, &diag);
    for (const int c : diag.max_components_per_iteration)
      worst_components = std::max(worst_components, c);
  }
  report(8, "stored messages never exceed the component cap",
         worst_components <= params.reduction.max_components && worst_components > 0,
         fmt("max components observed %d (cap %d) across 50 decodes at 2.5 dB",
             worst_components, params.reduction.max_components));
}

// ---- criterion 9: bitwise deterministic CSVs across thread counts ----------

void criterion9() {
  SimConfig cfg;
  cfg.n = 16;
  cfg.d = 5;
  cfg.db_distances = {3.0, 6.0};
  cfg.trials_per_point = 60;
  cfg.seed = 900;

  std::vector<std::string> outputs;
  for (const int threads : {1, 2, 5}) {
    cfg.threads = threads;
    const auto points = sweep(cfg);
    std::ostringstream os;
    write_csv(os, points);
    outputs.push_back(os.str());
  }
  // and a repeat of the first configuration, same seed
  cfg.threads = 1;
  const auto again = sweep(cfg);
  std::ostringstream os;
  write_csv(os, again);
  outputs.push_back(os.str());

  const bool ok = outputs[0] == outputs[1] && outputs[0] == outputs[2] &&
                  outputs[0] == outputs[3] && !outputs[0].empty();
  report(9, "identical seeds give byte-identical CSVs at any thread count", ok,
         fmt("4 runs (threads 1/2/5/1) produced %s CSV bytes",
             ok ? "identical" : "DIFFERENT"));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criteria7and8();
  criterion9();
  std::printf("%d of 9 criteria passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
