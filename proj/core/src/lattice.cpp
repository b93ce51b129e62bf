#include "ldlc/lattice.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include "ldlc/rng.hpp"

namespace ldlc {
namespace {

Eigen::SparseMatrix<double> to_eigen(const MagicSquareH& h) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(h.edges()));
  for (int r = 0; r < h.n; ++r)
    for (int s = 0; s < h.d; ++s)
      trips.emplace_back(r, h.row_cols[r * h.d + s], h.row_vals[r * h.d + s]);
  Eigen::SparseMatrix<double> m(h.n, h.n);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}

/// Sorts each row's slots by column and derives the column-side view.
void build_adjacency(MagicSquareH& h,
                     std::vector<std::pair<int, double>>& row_entries) {
  const int n = h.n, d = h.d;
  h.row_cols.assign(static_cast<std::size_t>(n) * d, 0);
  h.row_vals.assign(static_cast<std::size_t>(n) * d, 0.0);
  for (int r = 0; r < n; ++r) {
    auto* first = row_entries.data() + static_cast<std::size_t>(r) * d;
    std::sort(first, first + d,
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (int s = 0; s < d; ++s) {
      h.row_cols[r * d + s] = first[s].first;
      h.row_vals[r * d + s] = first[s].second;
    }
  }
  h.col_rows.assign(static_cast<std::size_t>(n) * d, 0);
  h.col_edges.assign(static_cast<std::size_t>(n) * d, 0);
  std::vector<int> fill(n, 0);
  for (int r = 0; r < n; ++r)  // row-major scan keeps each column sorted by row
    for (int s = 0; s < d; ++s) {
      const int c = h.row_cols[r * d + s];
      if (c < 0 || c >= n) throw Error("matrix column index out of range");
      if (fill[c] >= d) throw Error("matrix column degree exceeds d");
      h.col_rows[c * d + fill[c]] = r;
      h.col_edges[c * d + fill[c]] = r * d + s;
      ++fill[c];
    }
  for (int c = 0; c < n; ++c)
    if (fill[c] != d) throw Error("matrix column degree below d");
}

}  // namespace

void MagicSquareH::validate() const {
  if (n < d || d < 2) throw Error("matrix requires n >= d >= 2");
  if (static_cast<int>(h_sequence.size()) != d) throw Error("h_sequence size != d");
  if (!(global_scale > 0.0) || !std::isfinite(global_scale))
    throw Error("global_scale must be positive and finite");
  const std::size_t e = static_cast<std::size_t>(n) * d;
  if (row_cols.size() != e || row_vals.size() != e || col_rows.size() != e ||
      col_edges.size() != e)
    throw Error("adjacency arrays have wrong size");

  std::vector<double> sorted_h = h_sequence;
  std::sort(sorted_h.begin(), sorted_h.end());
  std::vector<double> mags(d);
  for (int r = 0; r < n; ++r) {
    for (int s = 0; s < d; ++s) {
      if (s > 0 && row_cols[r * d + s] <= row_cols[r * d + s - 1])
        throw Error("row slots not strictly sorted by column");
      mags[s] = std::abs(row_vals[r * d + s]) / global_scale;
    }
    std::sort(mags.begin(), mags.end());
    for (int s = 0; s < d; ++s)
      if (std::abs(mags[s] - sorted_h[s]) > 1e-9 * (1.0 + sorted_h[s]))
        throw Error("row magnitude multiset differs from h_sequence");
  }
  for (int c = 0; c < n; ++c) {
    for (int s = 0; s < d; ++s) {
      if (s > 0 && col_rows[c * d + s] <= col_rows[c * d + s - 1])
        throw Error("column slots not strictly sorted by row");
      const int e_id = col_edges[c * d + s];
      if (e_id < 0 || e_id >= edges()) throw Error("column edge id out of range");
      if (e_id / d != col_rows[c * d + s] || row_cols[e_id] != c)
        throw Error("column view disagrees with row view");
      mags[s] = std::abs(row_vals[e_id]) / global_scale;
    }
    std::sort(mags.begin(), mags.end());
    for (int s = 0; s < d; ++s)
      if (std::abs(mags[s] - sorted_h[s]) > 1e-9 * (1.0 + sorted_h[s]))
        throw Error("column magnitude multiset differs from h_sequence");
  }
}

MagicSquareH generate(int n, int d, std::uint64_t seed) {
  if (n < d || d < 2) throw GenerationError("generate requires n >= d >= 2");

  // Near-singularity guard, relative to the largest unscaled entry magnitude
  // (h_1 = 1). Random draws have |det| = O(1); this only rejects degenerate
  // sign patterns.
  const double log_bound = 0.0;

  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    CounterRng rng(derive_stream(seed, 0x6c617474, attempt));

    // d pairwise position-disjoint permutations: perms[i][r] is the column
    // hit by permutation i in row r.
    std::vector<std::vector<int>> perms;
    perms.reserve(static_cast<std::size_t>(d));
    bool perms_ok = true;
    for (int i = 0; i < d && perms_ok; ++i) {
      bool found = false;
      for (int tries = 0; tries < 20000; ++tries) {
        std::vector<int> p = random_permutation(n, rng);
        bool disjoint = true;
        for (const auto& q : perms) {
          for (int r = 0; r < n; ++r)
            if (p[r] == q[r]) {
              disjoint = false;
              break;
            }
          if (!disjoint) break;
        }
        if (disjoint) {
          perms.push_back(std::move(p));
          found = true;
          break;
        }
      }
      if (!found) perms_ok = false;
    }
    if (!perms_ok) continue;

    MagicSquareH h;
    h.n = n;
    h.d = d;
    h.h_sequence.assign(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)));
    h.h_sequence[0] = 1.0;

    std::vector<std::pair<int, double>> row_entries(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < d; ++i)
      for (int r = 0; r < n; ++r) {
        const double sign = rng.next_bool() ? -1.0 : 1.0;
        row_entries[static_cast<std::size_t>(r) * d + i] = {perms[i][r],
                                                            sign * h.h_sequence[i]};
      }
    build_adjacency(h, row_entries);

    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    Eigen::SparseMatrix<double> m = to_eigen(h);
    lu.analyzePattern(m);
    lu.factorize(m);
    if (lu.info() != Eigen::Success) continue;
    const double log_det = lu.logAbsDeterminant();
    if (!(log_det > std::log(1e-9) + log_bound)) continue;

    h.global_scale = std::exp(-log_det / n);
    for (auto& v : h.row_vals) v *= h.global_scale;
    return h;
  }
  throw GenerationError("no non-singular magic-square draw after 100 attempts");
}

std::vector<double> matvec(const MagicSquareH& h, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != h.n) throw Error("matvec: size mismatch");
  std::vector<double> y(static_cast<std::size_t>(h.n), 0.0);
  for (int r = 0; r < h.n; ++r) {
    double acc = 0.0;
    for (int s = 0; s < h.d; ++s)
      acc += h.row_vals[r * h.d + s] * x[h.row_cols[r * h.d + s]];
    y[r] = acc;
  }
  return y;
}

long long round_half_even(double z) noexcept {
  const double f = std::floor(z);
  const double frac = z - f;
  auto lo = static_cast<long long>(f);
  if (frac > 0.5) return lo + 1;
  if (frac < 0.5) return lo;
  return (lo % 2 == 0) ? lo : lo + 1;
}

std::vector<long long> round_to_integers(const MagicSquareH& h,
                                         const std::vector<double>& x) {
  const std::vector<double> y = matvec(h, x);
  std::vector<long long> b(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) b[i] = round_half_even(y[i]);
  return b;
}

struct SparseSolver::Impl {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  double log_abs_det = 0.0;
  int n = 0;
};

SparseSolver::SparseSolver(const MagicSquareH& h) : impl_(std::make_unique<Impl>()) {
  Eigen::SparseMatrix<double> m = to_eigen(h);
  impl_->n = h.n;
  impl_->lu.analyzePattern(m);
  impl_->lu.factorize(m);
  if (impl_->lu.info() != Eigen::Success)
    throw EncodeError("sparse factorization failed");
  impl_->log_abs_det = impl_->lu.logAbsDeterminant();
}

SparseSolver::~SparseSolver() = default;
SparseSolver::SparseSolver(SparseSolver&&) noexcept = default;
SparseSolver& SparseSolver::operator=(SparseSolver&&) noexcept = default;

std::vector<double> SparseSolver::solve(const std::vector<double>& rhs) const {
  if (static_cast<int>(rhs.size()) != impl_->n)
    throw EncodeError("solve: size mismatch");
  Eigen::VectorXd b(impl_->n);
  for (int i = 0; i < impl_->n; ++i) b[i] = rhs[i];
  Eigen::VectorXd x = impl_->lu.solve(b);
  if (impl_->lu.info() != Eigen::Success) throw EncodeError("sparse solve failed");
  return std::vector<double>(x.data(), x.data() + impl_->n);
}

double SparseSolver::log_abs_det() const noexcept { return impl_->log_abs_det; }

LatticePoint encode(const MagicSquareH& h, const std::vector<long long>& b) {
  if (static_cast<int>(b.size()) != h.n) throw EncodeError("encode: size mismatch");
  std::vector<double> rhs(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) rhs[i] = static_cast<double>(b[i]);
  SparseSolver solver(h);
  LatticePoint p;
  p.coords = solver.solve(rhs);
  p.integers = b;
  const std::vector<double> back = matvec(h, p.coords);
  for (std::size_t i = 0; i < back.size(); ++i)
    if (!(std::abs(back[i] - rhs[i]) <= 1e-9))
      throw EncodeError("encode residual exceeds 1e-9");
  return p;
}

void save_matrix(std::ostream& os, const MagicSquareH& h) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d %d %.17g\n", h.n, h.d, h.global_scale);
  os << buf;
  for (int r = 0; r < h.n; ++r)
    for (int s = 0; s < h.d; ++s) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", r, h.row_cols[r * h.d + s],
                    h.row_vals[r * h.d + s]);
      os << buf;
    }
}

MagicSquareH load_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("matrix file is empty");
  MagicSquareH h;
  {
    std::istringstream ls(line);
    if (!(ls >> h.n >> h.d >> h.global_scale))
      throw Error("malformed matrix header: " + line);
  }
  if (h.n < h.d || h.d < 2) throw Error("matrix header requires n >= d >= 2");
  h.h_sequence.assign(static_cast<std::size_t>(h.d),
                      1.0 / std::sqrt(static_cast<double>(h.d)));
  h.h_sequence[0] = 1.0;

  std::vector<std::pair<int, double>> row_entries(
      static_cast<std::size_t>(h.n) * h.d);
  std::vector<int> fill(static_cast<std::size_t>(h.n), 0);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    int r = 0, c = 0;
    double v = 0.0;
    if (!(ls >> r >> c >> v)) throw Error("malformed matrix line: " + line);
    if (r < 0 || r >= h.n || c < 0 || c >= h.n)
      throw Error("matrix index out of range: " + line);
    if (fill[r] >= h.d) throw Error("matrix row degree exceeds d");
    row_entries[static_cast<std::size_t>(r) * h.d + fill[r]] = {c, v};
    ++fill[r];
  }
  for (int r = 0; r < h.n; ++r)
    if (fill[r] != h.d) throw Error("matrix row degree below d");
  build_adjacency(h, row_entries);
  h.validate();
  return h;
}

}  // namespace ldlc
