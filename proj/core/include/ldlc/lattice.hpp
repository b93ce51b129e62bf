#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "ldlc/errors.hpp"

namespace ldlc {

// Magic-square LDLC parity-check matrices: every row and every column holds
// the same d magnitudes {h_1, ..., h_d} (up to sign and a global determinant
// normalization), with h_1 = 1 and h_i = 1/sqrt(d).

struct MagicSquareH {
  int n = 0;
  int d = 0;
  /// All stored values are pre-multiplied by this factor so |det H| = 1;
  /// |value| / global_scale recovers a member of h_sequence.
  double global_scale = 1.0;
  std::vector<double> h_sequence;  // size d

  // Fixed-degree adjacency. Row r owns slots [r*d, (r+1)*d), sorted by
  // column; edge id e = r*d + slot. Column c owns slots [c*d, (c+1)*d),
  // sorted by row, each carrying the edge id of the same non-zero.
  std::vector<int> row_cols;     // n*d column indices
  std::vector<double> row_vals;  // n*d matrix values
  std::vector<int> col_rows;     // n*d row indices
  std::vector<int> col_edges;    // n*d edge ids into the row-major arrays

  int edges() const noexcept { return n * d; }

  /// Throws Error unless the degree/multiset invariants hold and the two
  /// adjacency views describe the same matrix.
  void validate() const;
};

struct LatticePoint {
  std::vector<double> coords;       // x with H x = b
  std::vector<long long> integers;  // b
};

/// Draws d pairwise position-disjoint random permutations, superposes them
/// with magnitudes h_i and independent random signs, and rescales by
/// |det|^(-1/n). Deterministic in seed. Resamples internally (fresh derived
/// stream) when the draw is singular; throws GenerationError after 100 tries.
MagicSquareH generate(int n, int d, std::uint64_t seed);

/// y = H x.
std::vector<double> matvec(const MagicSquareH& h, const std::vector<double>& x);

/// Nearest integer with ties-to-even, independent of the FP environment.
long long round_half_even(double z) noexcept;

/// Componentwise nearest integer of H x.
std::vector<long long> round_to_integers(const MagicSquareH& h,
                                         const std::vector<double>& x);

/// Solves H x = b to within ||Hx - b||_inf <= 1e-9; throws EncodeError on
/// solver failure.
LatticePoint encode(const MagicSquareH& h, const std::vector<long long>& b);

/// Reusable sparse factorization of H for repeated encodes with one matrix.
class SparseSolver {
 public:
  explicit SparseSolver(const MagicSquareH& h);
  ~SparseSolver();
  SparseSolver(SparseSolver&&) noexcept;
  SparseSolver& operator=(SparseSolver&&) noexcept;

  std::vector<double> solve(const std::vector<double>& rhs) const;
  double log_abs_det() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Text format: header `n d global_scale`, then `row col value` per non-zero
/// (0-based, 17 significant digits).
void save_matrix(std::ostream& os, const MagicSquareH& h);
MagicSquareH load_matrix(std::istream& is);

}  // namespace ldlc
