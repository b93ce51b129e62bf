#include "ldlc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace ldlc::oracle {
namespace {

/// Mixture density straight from the component definition; deliberately not
/// routed through ldlc::density_at.
double mix_pdf(const GaussianMixture& f, double z) {
  double acc = 0.0;
  for (const auto& c : f.components) {
    const double d = z - c.mean;
    acc += c.weight * std::exp(-0.5 * d * d / c.variance) /
           std::sqrt(2.0 * std::numbers::pi * c.variance);
  }
  return acc;
}

double simpson(double a, double fa, double fm, double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double fa, double b,
             double fb, double m, double fm, double whole, double tol, int depth) {
  if (depth <= 0) throw OracleError("adaptive quadrature failed to converge");
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, fa, flm, m, fm);
  const double right = simpson(m, fm, frm, b, fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

/// Integrates f over the sorted panel boundaries, sharing `tol` across panels.
double integrate(const std::function<double(double)>& f, std::vector<double> pts,
                 double tol) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](double x, double y) { return std::abs(x - y) < 1e-13; }),
            pts.end());
  if (pts.size() < 2) throw OracleError("quadrature domain is empty");
  const double panel_tol = tol / static_cast<double>(pts.size() - 1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    total += adapt(f, a, fa, b, fb, m, fm, simpson(a, fa, fm, b, fb), panel_tol, 48);
  }
  return total;
}

/// Panel boundaries: every component mean and mean +- sigma, clipped to the
/// union of +-8 sigma supports.
std::vector<double> breakpoints(std::initializer_list<const GaussianMixture*> mixes) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* f : mixes)
    for (const auto& c : f->components) {
      const double s = std::sqrt(c.variance);
      lo = std::min(lo, c.mean - 8.0 * s);
      hi = std::max(hi, c.mean + 8.0 * s);
    }
  std::vector<double> pts{lo, hi};
  for (const auto* f : mixes)
    for (const auto& c : f->components) {
      const double s = std::sqrt(c.variance);
      for (double p : {c.mean - s, c.mean, c.mean + s})
        if (p > lo && p < hi) pts.push_back(p);
    }
  return pts;
}

long long aligned_offset(double from_origin, double to_origin, double step) {
  const double r = (to_origin - from_origin) / step;
  const double k = std::nearbyint(r);
  if (std::abs(r - k) > 1e-6)
    throw OracleError("grid origins are not on a common lattice");
  return static_cast<long long>(k);
}

void check_same_step(const GridFunction& a, const GridFunction& b) {
  if (std::abs(a.step - b.step) > 1e-12 * a.step)
    throw OracleError("grid step mismatch");
}

}  // namespace

GridFunction sample_mixture(const GaussianMixture& mix, double origin, double step,
                            std::size_t count, double arg_scale) {
  if (!(step > 0.0) || count == 0 || arg_scale == 0.0)
    throw OracleError("bad sampling parameters");
  GridFunction g;
  g.origin = origin;
  g.step = step;
  g.samples.resize(count);
  const double inv = 1.0 / arg_scale;
  const double norm = std::abs(inv);
  for (std::size_t i = 0; i < count; ++i)
    g.samples[i] = norm * mix_pdf(mix, g.at(i) * inv);
  return g;
}

GridFunction grid_convolve(const GridFunction& a, const GridFunction& b) {
  check_same_step(a, b);
  if (a.samples.empty() || b.samples.empty()) throw OracleError("empty grid");
  GridFunction out;
  out.origin = a.origin + b.origin;
  out.step = a.step;
  out.samples.assign(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a.samples[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) out.samples[i + j] += ai * b.samples[j];
  }
  for (auto& v : out.samples) v *= a.step;
  return grid_normalize_l1(out);
}

GridFunction grid_reflect_shift(const GridFunction& g, double shift) {
  GridFunction out;
  out.step = g.step;
  out.origin = shift - (g.origin + static_cast<double>(g.size() - 1) * g.step);
  out.samples.assign(g.samples.rbegin(), g.samples.rend());
  return out;
}

GridFunction grid_superpose(const std::vector<GridFunction>& gs,
                            const std::vector<double>& weights) {
  if (gs.empty() || gs.size() != weights.size())
    throw OracleError("superpose: operand/weight mismatch");
  const double step = gs.front().step;
  double lo = gs.front().origin;
  for (const auto& g : gs) {
    check_same_step(gs.front(), g);
    lo = std::min(lo, g.origin);
  }
  std::size_t len = 0;
  std::vector<long long> off(gs.size());
  for (std::size_t k = 0; k < gs.size(); ++k) {
    off[k] = aligned_offset(lo, gs[k].origin, step);
    len = std::max(len, static_cast<std::size_t>(off[k]) + gs[k].size());
  }
  GridFunction out;
  out.origin = lo;
  out.step = step;
  out.samples.assign(len, 0.0);
  for (std::size_t k = 0; k < gs.size(); ++k)
    for (std::size_t i = 0; i < gs[k].size(); ++i)
      out.samples[static_cast<std::size_t>(off[k]) + i] += weights[k] * gs[k].samples[i];
  return out;
}

GridFunction grid_stretch(const GridFunction& g, double h) {
  if (h == 0.0) throw OracleError("stretch by zero");
  const double mag = std::abs(h);
  GridFunction out;
  out.step = g.step / mag;
  if (h > 0.0) {
    out.origin = g.origin / h;
    out.samples = g.samples;
  } else {
    out.origin = (g.origin + static_cast<double>(g.size() - 1) * g.step) / h;
    out.samples.assign(g.samples.rbegin(), g.samples.rend());
  }
  for (auto& v : out.samples) v *= mag;
  return out;
}

GridFunction grid_pointwise_product(const GridFunction& a, const GridFunction& b) {
  check_same_step(a, b);
  const long long shift = aligned_offset(a.origin, b.origin, a.step);
  const long long lo = std::max(0LL, shift);
  const long long hi = std::min(static_cast<long long>(a.size()),
                                shift + static_cast<long long>(b.size()));
  if (lo >= hi) throw OracleError("pointwise product of disjoint supports");
  GridFunction out;
  out.step = a.step;
  out.origin = a.origin + static_cast<double>(lo) * a.step;
  out.samples.resize(static_cast<std::size_t>(hi - lo));
  for (long long i = lo; i < hi; ++i)
    out.samples[static_cast<std::size_t>(i - lo)] =
        a.samples[static_cast<std::size_t>(i)] *
        b.samples[static_cast<std::size_t>(i - shift)];
  return grid_normalize_l1(out);
}

GridFunction grid_normalize_l1(const GridFunction& g) {
  double mass = 0.0;
  for (double v : g.samples) mass += std::abs(v);
  mass *= g.step;
  if (!(mass > 0.0) || !std::isfinite(mass))
    throw OracleError("grid function has zero or non-finite mass");
  GridFunction out = g;
  for (auto& v : out.samples) v /= mass;
  return out;
}

double grid_l1_diff(const GridFunction& a, const GridFunction& b) {
  check_same_step(a, b);
  const double lo = std::min(a.origin, b.origin);
  const long long oa = aligned_offset(lo, a.origin, a.step);
  const long long ob = aligned_offset(lo, b.origin, a.step);
  const long long len = std::max(oa + static_cast<long long>(a.size()),
                                 ob + static_cast<long long>(b.size()));
  double acc = 0.0;
  for (long long i = 0; i < len; ++i) {
    const double va = (i >= oa && i < oa + static_cast<long long>(a.size()))
                          ? a.samples[static_cast<std::size_t>(i - oa)]
                          : 0.0;
    const double vb = (i >= ob && i < ob + static_cast<long long>(b.size()))
                          ? b.samples[static_cast<std::size_t>(i - ob)]
                          : 0.0;
    acc += std::abs(va - vb);
  }
  return acc * a.step;
}

double grid_argmax(const GridFunction& g) {
  if (g.samples.empty()) throw OracleError("argmax of empty grid");
  const auto it = std::max_element(g.samples.begin(), g.samples.end());
  return g.at(static_cast<std::size_t>(it - g.samples.begin()));
}

double quad_sd(const GaussianMixture& f, const GaussianMixture& g) {
  f.validate();
  g.validate();
  const auto integrand = [&](double z) {
    const double d = mix_pdf(f, z) - mix_pdf(g, z);
    return d * d;
  };
  return integrate(integrand, breakpoints({&f, &g}), 1e-10);
}

std::pair<double, double> quad_moments(const GaussianMixture& f) {
  f.validate();
  const auto pts = breakpoints({&f});
  const double mass = integrate([&](double z) { return mix_pdf(f, z); }, pts, 1e-12);
  if (!(mass > 0.0)) throw OracleError("mixture mass vanished under quadrature");
  // Shift the first-moment integrand to near-zero mean so the quadrature
  // error stays absolute rather than scaling with |mean|; any shift is exact
  // since int (z - c) f dz = m1 - c.
  double shift = 0.0, wsum = 0.0;
  for (const auto& c : f.components) {
    shift += c.weight * c.mean;
    wsum += c.weight;
  }
  shift /= wsum;
  const double m1 =
      shift +
      integrate([&](double z) { return (z - shift) * mix_pdf(f, z); }, pts, 1e-12) /
          mass;
  // Integrating (z - m1)^2 directly avoids the catastrophic cancellation of
  // m2 - m1^2 when |m1| is large relative to the variance.
  const double var =
      integrate([&](double z) { return (z - m1) * (z - m1) * mix_pdf(f, z); }, pts,
                1e-12) /
      mass;
  return {m1, var};
}

double quad_mixture_product_mass(const GaussianMixture& f, const GaussianMixture& g) {
  f.validate();
  g.validate();
  return integrate([&](double z) { return mix_pdf(f, z) * mix_pdf(g, z); },
                   breakpoints({&f, &g}), 1e-10);
}

std::vector<double> dense_from_sparse(const MagicSquareH& h) {
  std::vector<double> a(static_cast<std::size_t>(h.n) * h.n, 0.0);
  for (int r = 0; r < h.n; ++r)
    for (int s = 0; s < h.d; ++s)
      a[static_cast<std::size_t>(r) * h.n + h.row_cols[r * h.d + s]] =
          h.row_vals[r * h.d + s];
  return a;
}

std::vector<double> dense_solve(std::vector<double> a, int n, std::vector<double> rhs) {
  if (n <= 0 || a.size() != static_cast<std::size_t>(n) * n ||
      rhs.size() != static_cast<std::size_t>(n))
    throw OracleError("dense_solve: bad dimensions");
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (!(scale > 0.0)) throw OracleError("dense_solve: zero matrix");
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a[static_cast<std::size_t>(i) * n + k]) >
          std::abs(a[static_cast<std::size_t>(piv) * n + k]))
        piv = i;
    if (std::abs(a[static_cast<std::size_t>(piv) * n + k]) < 1e-12 * scale)
      throw OracleError("dense_solve: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j)
        std::swap(a[static_cast<std::size_t>(piv) * n + j],
                  a[static_cast<std::size_t>(k) * n + j]);
      std::swap(rhs[static_cast<std::size_t>(piv)], rhs[static_cast<std::size_t>(k)]);
    }
    const double pivot = a[static_cast<std::size_t>(k) * n + k];
    for (int i = k + 1; i < n; ++i) {
      const double factor = a[static_cast<std::size_t>(i) * n + k] / pivot;
      if (factor == 0.0) continue;
      for (int j = k; j < n; ++j)
        a[static_cast<std::size_t>(i) * n + j] -=
            factor * a[static_cast<std::size_t>(k) * n + j];
      rhs[static_cast<std::size_t>(i)] -= factor * rhs[static_cast<std::size_t>(k)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double acc = rhs[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j)
      acc -= a[static_cast<std::size_t>(i) * n + j] * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = acc / a[static_cast<std::size_t>(i) * n + i];
  }
  return x;
}

std::vector<double> dense_inverse(const std::vector<double>& a, int n) {
  std::vector<double> inv(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> e(static_cast<std::size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    e[static_cast<std::size_t>(j)] = 1.0;
    const std::vector<double> col = dense_solve(a, n, e);
    e[static_cast<std::size_t>(j)] = 0.0;
    for (int i = 0; i < n; ++i)
      inv[static_cast<std::size_t>(i) * n + j] = col[static_cast<std::size_t>(i)];
  }
  return inv;
}

MlCheck ml_decode_checked(const MagicSquareH& h, const std::vector<double>& y,
                          int box_radius) {
  const int n = h.n;
  if (n > 10) throw OracleError("brute-force ML is limited to n <= 10");
  if (static_cast<int>(y.size()) != n) throw OracleError("ml: size mismatch");
  if (box_radius < 0) throw OracleError("ml: negative box radius");

  const std::vector<double> ginv = dense_inverse(dense_from_sparse(h), n);
  const long long r = box_radius;
  std::vector<long long> b(static_cast<std::size_t>(n), -r);
  MlCheck best;
  best.distance2 = std::numeric_limits<double>::infinity();
  double boundary_best = std::numeric_limits<double>::infinity();
  std::vector<double> x(static_cast<std::size_t>(n));
  while (true) {
    bool on_boundary = false;
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j)
        acc += ginv[static_cast<std::size_t>(i) * n + j] *
               static_cast<double>(b[static_cast<std::size_t>(j)]);
      x[static_cast<std::size_t>(i)] = acc;
      if (b[static_cast<std::size_t>(i)] == r || b[static_cast<std::size_t>(i)] == -r)
        on_boundary = true;
    }
    double dist = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = y[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)];
      dist += d * d;
    }
    if (dist < best.distance2) {  // strict: first (lex-smallest) b wins ties
      best.distance2 = dist;
      best.b = b;
    }
    if (on_boundary && dist < boundary_best) boundary_best = dist;

    int k = n - 1;
    while (k >= 0 && b[static_cast<std::size_t>(k)] == r) {
      b[static_cast<std::size_t>(k)] = -r;
      --k;
    }
    if (k < 0) break;
    ++b[static_cast<std::size_t>(k)];
  }
  best.boundary_suspect = boundary_best <= best.distance2 * 1.01;
  return best;
}

std::vector<long long> ml_decode_bruteforce(const MagicSquareH& h,
                                            const std::vector<double>& y,
                                            int box_radius) {
  return ml_decode_checked(h, y, box_radius).b;
}

}  // namespace ldlc::oracle
