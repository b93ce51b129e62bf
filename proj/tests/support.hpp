#pragma once

#include <cmath>
#include <cstdint>

#include "ldlc/gaussian.hpp"
#include "ldlc/lattice.hpp"
#include "ldlc/rng.hpp"

namespace ldlc::testsupport {

/// Fully connected 3x3 magic square with all-positive entries: 1 on the
/// diagonal, 1/sqrt(3) elsewhere. Rows and columns both carry the magnitude
/// multiset {1, 1/sqrt(3), 1/sqrt(3)}; handy for node-level oracle
/// comparisons because every coefficient is positive and known exactly.
inline MagicSquareH dense3() {
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

inline GaussianMixture random_mixture(CounterRng& rng, int max_comps,
                                      double mean_spread = 3.0) {
  GaussianMixture m;
  const int k =
      1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_comps)));
  for (int i = 0; i < k; ++i)
    m.components.push_back({mean_spread * rng.next_gaussian(),
                            0.2 + 2.0 * rng.next_unit(), 0.1 + rng.next_unit()});
  return normalize(m);
}

}  // namespace ldlc::testsupport
