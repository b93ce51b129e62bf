#include "ldlc/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace ldlc {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;

thread_local long long g_variance_clamps = 0;

/// exp(-d^2 / (2V)) / sqrt(2 pi V), with a cheap zero short-circuit for
/// far-apart operands (the dropped mass is below 1e-16 of any retained term).
inline double gaussian_kernel(double diff, double v_sum) noexcept {
  const double arg = diff * diff / (2.0 * v_sum);
  if (arg > 50.0) return 0.0;
  return kInvSqrt2Pi / std::sqrt(v_sum) * std::exp(-arg);
}

/// Squared-difference between the normalized pair {(m1,v1,c1),(m2,v2,c2)}
/// (c1 + c2 = 1) and the single Gaussian N(m, v) with its moments.
inline double pair_loss(double m1, double v1, double c1, double m2, double v2,
                        double c2, double m, double v) noexcept {
  const double self = 0.5 / std::sqrt(std::numbers::pi) *
                      (1.0 / std::sqrt(v) + c1 * c1 / std::sqrt(v1) +
                       c2 * c2 / std::sqrt(v2));
  const double cross = -2.0 * c1 * gaussian_kernel(m - m1, v + v1) -
                       2.0 * c2 * gaussian_kernel(m - m2, v + v2) +
                       2.0 * c1 * c2 * gaussian_kernel(m1 - m2, v1 + v2);
  const double loss = self + cross;
  return loss > 0.0 ? loss : 0.0;
}

constexpr std::size_t tri(std::size_t j) noexcept { return j * (j - 1) / 2; }

}  // namespace

double clamp_variance_counted(double v) noexcept {
  if (!(v >= kVarianceFloor)) {  // catches NaN as well
    ++g_variance_clamps;
    return kVarianceFloor;
  }
  if (v > kVarianceCeiling) {
    ++g_variance_clamps;
    return kVarianceCeiling;
  }
  return v;
}

long long variance_clamp_count() noexcept { return g_variance_clamps; }
void reset_variance_clamp_count() noexcept { g_variance_clamps = 0; }

void GaussianMixture::validate() const {
  if (components.empty()) throw Error("mixture is empty");
  for (const auto& c : components) {
    if (!std::isfinite(c.mean) || !std::isfinite(c.variance) || !std::isfinite(c.weight))
      throw Error("mixture component has non-finite field");
    if (!(c.variance > 0.0)) throw Error("mixture component has non-positive variance");
    if (c.weight < 0.0) throw Error("mixture component has negative weight");
  }
}

double density_at(const GaussianMixture& mix, double z) {
  double acc = 0.0;
  for (const auto& c : mix.components) {
    const double d = z - c.mean;
    const double arg = d * d / (2.0 * c.variance);
    if (arg > 700.0) continue;
    acc += c.weight * kInvSqrt2Pi / std::sqrt(c.variance) * std::exp(-arg);
  }
  return acc;
}

GaussianMixture normalize(const GaussianMixture& mix) {
  double sum = 0.0;
  for (const auto& c : mix.components) sum += c.weight;
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw DegenerateMessageError("mixture weight sum is zero or non-finite");
  GaussianMixture out = mix;
  for (auto& c : out.components) c.weight /= sum;
  return out;
}

double sd_single(const GaussianComponent& a, const GaussianComponent& b) {
  const double self = 0.5 / std::sqrt(std::numbers::pi) *
                      (1.0 / std::sqrt(a.variance) + 1.0 / std::sqrt(b.variance));
  return self - 2.0 * gaussian_kernel(a.mean - b.mean, a.variance + b.variance);
}

GaussianComponent moment_match(const GaussianComponent& a, const GaussianComponent& b) {
  const double total = a.weight + b.weight;
  if (!(total > 0.0)) throw DegeneratePairError("component pair has zero total weight");
  const double c1 = a.weight / total;
  const double c2 = b.weight / total;
  const double m = c1 * a.mean + c2 * b.mean;
  // Stable form of c1(m1^2+v1) + c2(m2^2+v2) - m^2; never below min(v1, v2).
  const double dm = a.mean - b.mean;
  const double v = c1 * a.variance + c2 * b.variance + c1 * c2 * dm * dm;
  return GaussianComponent{m, v, total};
}

double gql_pair(const GaussianComponent& a, const GaussianComponent& b) {
  const double total = a.weight + b.weight;
  if (!(total > 0.0)) throw DegeneratePairError("component pair has zero total weight");
  const double c1 = a.weight / total;
  const double c2 = b.weight / total;
  const double m = c1 * a.mean + c2 * b.mean;
  const double dm = a.mean - b.mean;
  const double v = c1 * a.variance + c2 * b.variance + c1 * c2 * dm * dm;
  return pair_loss(a.mean, a.variance, c1, b.mean, b.variance, c2, m, v);
}

namespace detail {

void MixtureAccumulator::clear() noexcept {
  slots_.clear();
  count_ = 0;
}

void MixtureAccumulator::push(double mean, double variance, double weight) {
  slots_.push_back(Slot{mean, clamp_variance_counted(variance),
                        weight > 0.0 ? weight : 0.0, true});
  ++count_;
}

double MixtureAccumulator::pending_weight_sum() const noexcept {
  double s = 0.0;
  for (const auto& slot : slots_) s += slot.weight;
  return s;
}

double MixtureAccumulator::merge_cost(const Slot& a, const Slot& b) const noexcept {
  const double total = a.weight + b.weight;
  if (!(total > 0.0)) return 0.0;  // zero-weight pairs merge for free
  const double c1 = a.weight / total;
  const double c2 = b.weight / total;
  const double m = c1 * a.mean + c2 * b.mean;
  const double dm = a.mean - b.mean;
  const double v = c1 * a.variance + c2 * b.variance + c1 * c2 * dm * dm;
  return pair_loss(a.mean, a.variance, c1, b.mean, b.variance, c2, m, v);
}

GaussianMixture MixtureAccumulator::run(const ReductionParams& params) {
  if (slots_.empty()) throw DegenerateMessageError("reduction input is empty");

  double sum = 0.0;
  for (const auto& slot : slots_) sum += slot.weight;
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw DegenerateMessageError("mixture weight sum is zero or non-finite");
  for (auto& slot : slots_) slot.weight /= sum;

  bool changed = false;
  std::size_t alive = slots_.size();
  if (alive >= 2) {
    for (auto& slot : slots_) {
      if (slot.weight < kWeightFloor) {
        slot.alive = false;
        --alive;
        changed = true;
      }
    }
    if (alive == 0) {  // keep the heaviest component rather than emptying
      std::size_t best = 0;
      for (std::size_t i = 1; i < slots_.size(); ++i)
        if (slots_[i].weight > slots_[best].weight) best = i;
      slots_[best].alive = true;
      alive = 1;
    }
  }

  const auto max_comps = static_cast<std::size_t>(params.max_components);
  if (alive >= 2 && (params.theta > 0.0 || alive > max_comps)) {
    alive_.clear();
    for (std::size_t i = 0; i < slots_.size(); ++i)
      if (slots_[i].alive) alive_.push_back(i);

    cost_.resize(tri(slots_.size() + alive));  // room for every future merge
    for (std::size_t bj = 1; bj < alive_.size(); ++bj)
      for (std::size_t bi = 0; bi < bj; ++bi)
        cost_[tri(alive_[bj]) + alive_[bi]] =
            merge_cost(slots_[alive_[bi]], slots_[alive_[bj]]);

    auto rescan = [&](std::size_t& out_i, std::size_t& out_j) {
      double best = std::numeric_limits<double>::infinity();
      out_i = out_j = slots_.size();
      for (std::size_t bj = 1; bj < alive_.size(); ++bj) {
        const std::size_t j = alive_[bj];
        const double* row = cost_.data() + tri(j);
        for (std::size_t bi = 0; bi < bj; ++bi) {
          const std::size_t i = alive_[bi];
          const double c = row[i];
          // Ties go to the lexicographically smallest (i, j) insertion pair.
          if (c < best || (c == best && (i < out_i || (i == out_i && j < out_j)))) {
            best = c;
            out_i = i;
            out_j = j;
          }
        }
      }
      return best;
    };

    std::size_t mi = 0, mj = 0;
    double min_cost = rescan(mi, mj);
    while (alive >= 2 && (min_cost < params.theta || alive > max_comps)) {
      const Slot& a = slots_[mi];
      const Slot& b = slots_[mj];
      const double total = a.weight + b.weight;
      Slot merged;
      if (total > 0.0) {
        const double c1 = a.weight / total;
        const double c2 = b.weight / total;
        const double dm = a.mean - b.mean;
        merged = Slot{c1 * a.mean + c2 * b.mean,
                      clamp_variance_counted(c1 * a.variance + c2 * b.variance + c1 * c2 * dm * dm),
                      total, true};
      } else {
        merged = Slot{a.mean, a.variance, 0.0, true};
      }
      slots_[mi].alive = false;
      slots_[mj].alive = false;
      alive_.erase(std::find(alive_.begin(), alive_.end(), mj));
      alive_.erase(std::find(alive_.begin(), alive_.end(), mi));

      const std::size_t k = slots_.size();
      slots_.push_back(merged);
      if (cost_.size() < tri(k + 1)) cost_.resize(tri(k + 1));
      double* row = cost_.data() + tri(k);
      for (const std::size_t i : alive_) row[i] = merge_cost(slots_[i], slots_[k]);
      alive_.push_back(k);

      --alive;
      changed = true;
      min_cost = rescan(mi, mj);
    }
  }

  GaussianMixture out;
  out.components.reserve(alive);
  for (const auto& slot : slots_)
    if (slot.alive)
      out.components.push_back(GaussianComponent{slot.mean, slot.variance, slot.weight});

  if (changed) {
    double s = 0.0;
    for (const auto& c : out.components) s += c.weight;
    if (!(s > 0.0) || !std::isfinite(s))
      throw DegenerateMessageError("mixture weight sum is zero or non-finite");
    for (auto& c : out.components) c.weight /= s;
  }
  return out;
}

MixtureAccumulator& thread_accumulator() noexcept {
  thread_local MixtureAccumulator acc;
  return acc;
}

}  // namespace detail

GaussianMixture reduce(const GaussianMixture& mix, const ReductionParams& params) {
  auto& acc = detail::thread_accumulator();
  acc.clear();
  for (const auto& c : mix.components) acc.push(c.mean, c.variance, c.weight);
  return acc.run(params);
}

void write_mixture(std::ostream& os, const GaussianMixture& mix) {
  char buf[96];
  for (const auto& c : mix.components) {
    std::snprintf(buf, sizeof buf, "%.17g\t%.17g\t%.17g\n", c.mean, c.variance, c.weight);
    os << buf;
  }
}

GaussianMixture read_mixture(std::istream& is) {
  GaussianMixture mix;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    GaussianComponent c;
    if (!(ls >> c.mean >> c.variance >> c.weight))
      throw Error("malformed mixture line: " + line);
    mix.components.push_back(c);
  }
  mix.validate();
  return mix;
}

}  // namespace ldlc
