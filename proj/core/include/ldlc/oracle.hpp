#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ldlc/errors.hpp"
#include "ldlc/gaussian.hpp"
#include "ldlc/lattice.hpp"

namespace ldlc::oracle {

// Ground-truth engines for tests: adaptive quadrature, uniform-grid function
// algebra, dense LU, and exhaustive ML lattice decoding. None of these share
// formula code with the closed forms they check; mixtures are evaluated here
// from the raw component definition only.

/// A function sampled at origin + i*step. Keeping origins on exact multiples
/// of step makes every grid op below pure index arithmetic (no interpolation).
struct GridFunction {
  double origin = 0.0;
  double step = 1.0;
  std::vector<double> samples;

  std::size_t size() const noexcept { return samples.size(); }
  double at(std::size_t i) const noexcept { return origin + static_cast<double>(i) * step; }
};

/// Samples the density of arg_scale * X where X ~ mix, i.e.
/// f(z / arg_scale) / |arg_scale|, at count points from origin.
GridFunction sample_mixture(const GaussianMixture& mix, double origin, double step,
                            std::size_t count, double arg_scale = 1.0);

/// Discrete convolution scaled by step, then L1-normalized.
/// Output origin is the sum of the input origins.
GridFunction grid_convolve(const GridFunction& a, const GridFunction& b);

/// out(z) = g(shift - z). `shift` must sit on the grid lattice.
GridFunction grid_reflect_shift(const GridFunction& g, double shift);

/// Weighted pointwise sum over the union support (same step, aligned origins).
GridFunction grid_superpose(const std::vector<GridFunction>& gs,
                            const std::vector<double>& weights);

/// Density of X / h given the density of X: |h| * g(h z), as an exact axis
/// relabeling onto step / |h| (no resampling).
GridFunction grid_stretch(const GridFunction& g, double h);

/// Pointwise product on the overlap, L1-normalized.
GridFunction grid_pointwise_product(const GridFunction& a, const GridFunction& b);

GridFunction grid_normalize_l1(const GridFunction& g);

/// step * sum |a - b| over the union support (same step, aligned origins).
double grid_l1_diff(const GridFunction& a, const GridFunction& b);

/// Abscissa of the largest sample (first one on ties).
double grid_argmax(const GridFunction& g);

/// Integral of (f - g)^2 by adaptive Simpson over the union of the mixtures'
/// +-8 sigma supports, absolute tolerance 1e-10. Throws OracleError when the
/// recursion fails to converge.
double quad_sd(const GaussianMixture& f, const GaussianMixture& g);

/// (mean, variance) of a mixture by adaptive quadrature, tolerance 1e-10.
std::pair<double, double> quad_moments(const GaussianMixture& f);

/// Integral of f * g (the normalizer of the pointwise product density).
double quad_mixture_product_mass(const GaussianMixture& f, const GaussianMixture& g);

/// Exhaustive search for the b in [-box_radius, box_radius]^n minimizing
/// ||y - G b||^2, G = H^-1 computed by the dense routines below. Ties break
/// lexicographically. Throws OracleError for n > 10.
std::vector<long long> ml_decode_bruteforce(const MagicSquareH& h,
                                            const std::vector<double>& y,
                                            int box_radius);

/// Like ml_decode_bruteforce, but also reports whether some point on the
/// search-box boundary comes within 1% of the winning distance, in which case
/// the true ML point may lie outside the box and the trial should be redrawn.
struct MlCheck {
  std::vector<long long> b;
  double distance2 = 0.0;
  bool boundary_suspect = false;
};
MlCheck ml_decode_checked(const MagicSquareH& h, const std::vector<double>& y,
                          int box_radius);

/// Row-major dense copy of H (values include the global scale).
std::vector<double> dense_from_sparse(const MagicSquareH& h);

/// Solves a x = rhs by LU with partial pivoting (a is row-major n x n,
/// consumed). Throws OracleError on a singular pivot.
std::vector<double> dense_solve(std::vector<double> a, int n, std::vector<double> rhs);

/// Inverse of a row-major n x n matrix via dense_solve on unit vectors.
std::vector<double> dense_inverse(const std::vector<double>& a, int n);

}  // namespace ldlc::oracle
