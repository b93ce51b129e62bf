#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldlc/decoder.hpp"
#include "ldlc/gaussian.hpp"
#include "ldlc/lattice.hpp"
#include "ldlc/oracle.hpp"
#include "ldlc/rng.hpp"
#include "ldlc/sim.hpp"
#include "ldlc/version.hpp"

namespace {

using nlohmann::json;

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Every output artifact gets a sibling <path>.manifest.json recording how to
/// reproduce it.
void write_manifest(const std::string& artifact, const std::string& command,
                    const std::map<std::string, std::string>& params,
                    std::uint64_t seed) {
  json m;
  m["command"] = command;
  m["parameters"] = params;
  m["seed"] = seed;
  m["library_version"] = ldlc::kVersionString;
  m["timestamp"] = iso_timestamp();
  std::ofstream os(artifact + ".manifest.json");
  if (!os) throw ldlc::Error("cannot write manifest for " + artifact);
  os << m.dump(2) << "\n";
}

std::vector<double> read_reals(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ldlc::Error("cannot open " + path);
  std::vector<double> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    double v = 0.0;
    if (!(ls >> v)) throw ldlc::Error("malformed number in " + path + ": " + line);
    out.push_back(v);
  }
  return out;
}

ldlc::MagicSquareH load_matrix_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ldlc::Error("cannot open " + path);
  return ldlc::load_matrix(is);
}

struct GenArgs {
  int n = 100, d = 5;
  std::uint64_t seed = 1;
  std::string out;
};

int run_gen_lattice(const GenArgs& a) {
  const ldlc::MagicSquareH h = ldlc::generate(a.n, a.d, a.seed);
  std::ofstream os(a.out);
  if (!os) throw ldlc::Error("cannot write " + a.out);
  ldlc::save_matrix(os, h);
  write_manifest(a.out, "gen-lattice",
                 {{"n", std::to_string(a.n)},
                  {"d", std::to_string(a.d)},
                  {"seed", std::to_string(a.seed)},
                  {"out", a.out}},
                 a.seed);
  std::cout << "wrote " << a.out << " (n=" << h.n << " d=" << h.d
            << " nonzeros=" << h.edges() << " global_scale=" << h.global_scale
            << ")\n";
  return 0;
}

struct DecodeArgs {
  std::string matrix, y_path;
  double sigma2 = 0.0;
  double theta = 0.5;
  int max_components = 6;
  int shifts = 3;
  int max_iters = 100;
  int stability_window = 3;
  bool json_out = false;
};

int run_decode(const DecodeArgs& a) {
  const ldlc::MagicSquareH h = load_matrix_file(a.matrix);
  const std::vector<double> y = read_reals(a.y_path);
  if (static_cast<int>(y.size()) != h.n)
    throw ldlc::Error("y has " + std::to_string(y.size()) + " entries, matrix needs " +
                      std::to_string(h.n));
  ldlc::DecoderParams params;
  params.reduction.theta = a.theta;
  params.reduction.max_components = a.max_components;
  params.shift_count = a.shifts;
  params.max_iterations = a.max_iters;
  params.stability_window = a.stability_window;

  ldlc::DecodeDiagnostics diag;
  const ldlc::DecodeResult res = ldlc::decode(y, h, a.sigma2, params, &diag);
  for (const long long b : res.b_hat) std::cout << b << "\n";

  if (a.json_out) {
    json j;
    j["iterations"] = diag.iterations_used;
    j["converged"] = diag.converged;
    j["max_components_per_iteration"] = diag.max_components_per_iteration;
    j["variance_clamps"] = diag.variance_clamps;
    std::cerr << j.dump() << "\n";
  } else {
    std::cerr << "iterations=" << diag.iterations_used
              << " converged=" << (diag.converged ? "true" : "false")
              << " variance_clamps=" << diag.variance_clamps << "\n";
  }
  return 0;
}

struct SimArgs {
  std::string matrix;  // empty => generate (sweep subcommand)
  int n = 100, d = 5;
  std::vector<double> db;
  int trials = 100;
  double theta = 0.5;
  int max_components = 6;
  int shifts = 3;
  int max_iters = 100;
  std::uint64_t seed = 1;
  int threads = 1;
  bool random_b = false;
  int b_radius = 2;
  std::string out = "results.csv";
  bool json_out = false;
};

int run_simulation(const SimArgs& a, const char* command) {
  ldlc::SimConfig cfg;
  cfg.db_distances = a.db;
  cfg.trials_per_point = a.trials;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  cfg.random_b = a.random_b;
  cfg.random_b_radius = a.b_radius;
  cfg.decoder_params.reduction.theta = a.theta;
  cfg.decoder_params.reduction.max_components = a.max_components;
  cfg.decoder_params.shift_count = a.shifts;
  cfg.decoder_params.max_iterations = a.max_iters;

  std::vector<ldlc::PointSummary> points;
  std::map<std::string, std::string> params{
      {"trials", std::to_string(a.trials)},
      {"theta", std::to_string(a.theta)},
      {"max-components", std::to_string(a.max_components)},
      {"shifts", std::to_string(a.shifts)},
      {"max-iters", std::to_string(a.max_iters)},
      {"seed", std::to_string(a.seed)},
      {"threads", std::to_string(a.threads)},
      {"random-b", a.random_b ? "true" : "false"},
      {"out", a.out}};
  {
    std::string dbs;
    for (double v : a.db) {
      if (!dbs.empty()) dbs += ",";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", v);
      dbs += buf;
    }
    params["db"] = dbs;
  }

  if (!a.matrix.empty()) {
    const ldlc::MagicSquareH h = load_matrix_file(a.matrix);
    cfg.n = h.n;
    cfg.d = h.d;
    params["matrix"] = a.matrix;
    points = ldlc::sweep(cfg, &h);
  } else {
    cfg.n = a.n;
    cfg.d = a.d;
    params["n"] = std::to_string(a.n);
    params["d"] = std::to_string(a.d);
    points = ldlc::sweep(cfg);
  }

  std::ofstream os(a.out);
  if (!os) throw ldlc::Error("cannot write " + a.out);
  ldlc::write_csv(os, points);
  write_manifest(a.out, command, params, a.seed);

  for (const auto& p : points) {
    if (a.json_out) {
      json j;
      j["db"] = p.db;
      j["sigma2"] = p.sigma2;
      j["ser"] = p.ser;
      j["ci_low"] = p.ci_low;
      j["ci_high"] = p.ci_high;
      j["mean_iters"] = p.mean_iterations;
      j["uncoded_ser"] = p.uncoded;
      j["decode_failures"] = p.decode_failures;
      std::cout << j.dump() << "\n";
    } else {
      std::printf("db=%-6g ser=%.3e ci=[%.3e, %.3e] mean_iters=%.2f uncoded=%.3e\n",
                  p.db, p.ser, p.ci_low, p.ci_high, p.mean_iterations, p.uncoded);
    }
  }
  std::cout << "wrote " << a.out << "\n";
  return 0;
}

// ---- selftest: closed forms vs the independent oracles -------------------

struct SelfTest {
  int failures = 0;

  void check(const std::string& name, bool ok, const std::string& detail = "") {
    if (ok) {
      std::cout << "ok: " << name << "\n";
    } else {
      ++failures;
      std::cout << "FAIL: " << name << (detail.empty() ? "" : " — " + detail) << "\n";
    }
  }
};

ldlc::GaussianMixture random_mixture(ldlc::CounterRng& rng, int max_comps) {
  ldlc::GaussianMixture m;
  const int k = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(max_comps)));
  for (int i = 0; i < k; ++i)
    m.components.push_back({4.0 * rng.next_gaussian(), 0.2 + 2.0 * rng.next_unit(),
                            0.1 + rng.next_unit()});
  return ldlc::normalize(m);
}

int run_selftest() {
  using namespace ldlc;
  SelfTest st;
  CounterRng rng(derive_stream(20260815, 0x5e1f, 0));

  {  // squared-difference closed form vs quadrature
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const GaussianComponent a{3.0 * rng.next_gaussian(), 0.1 + 2.0 * rng.next_unit(), 1.0};
      const GaussianComponent b{3.0 * rng.next_gaussian(), 0.1 + 2.0 * rng.next_unit(), 1.0};
      const double closed = sd_single(a, b);
      const double quad = oracle::quad_sd(GaussianMixture{{a}}, GaussianMixture{{b}});
      worst = std::max(worst, std::abs(closed - quad));
    }
    st.check("sd closed form vs quadrature (50 pairs)", worst <= 1e-8,
             "worst |diff| = " + std::to_string(worst));
  }
  {  // pair merge cost vs quadrature of mixture-vs-moment-match
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
      const GaussianComponent a{2.0 * rng.next_gaussian(), 0.2 + rng.next_unit(),
                                0.1 + rng.next_unit()};
      const GaussianComponent b{2.0 * rng.next_gaussian(), 0.2 + rng.next_unit(),
                                0.1 + rng.next_unit()};
      const double total = a.weight + b.weight;
      GaussianMixture pair{{a, b}};
      for (auto& c : pair.components) c.weight /= total;
      GaussianComponent mm = moment_match(a, b);
      mm.weight = 1.0;
      const double quad = oracle::quad_sd(pair, GaussianMixture{{mm}});
      worst = std::max(worst, std::abs(gql_pair(a, b) - quad));
    }
    st.check("merge cost vs quadrature (25 pairs)", worst <= 1e-8,
             "worst |diff| = " + std::to_string(worst));
  }
  {  // moment matching vs quadrature moments
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const GaussianMixture m = random_mixture(rng, 5);
      double mean = 0.0, second = 0.0;
      for (const auto& c : m.components) {
        mean += c.weight * c.mean;
        second += c.weight * (c.mean * c.mean + c.variance);
      }
      const auto [qm, qv] = oracle::quad_moments(m);
      worst = std::max({worst, std::abs(qm - mean),
                        std::abs(qv - (second - mean * mean))});
    }
    st.check("mixture moments vs quadrature (10 mixtures)", worst <= 1e-8,
             "worst |diff| = " + std::to_string(worst));
  }
  {  // reduction preserves mean and variance
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const GaussianMixture m = random_mixture(rng, 6);
      const GaussianMixture red = reduce(m, ReductionParams{0.5, 2});
      const auto [m0, v0] = oracle::quad_moments(m);
      const auto [m1, v1] = oracle::quad_moments(red);
      worst = std::max({worst, std::abs(m0 - m1), std::abs(v0 - v1)});
    }
    st.check("reduction preserves moments (10 mixtures)", worst <= 1e-8,
             "worst |diff| = " + std::to_string(worst));
  }
  {  // convolution closed form vs grid oracle
    const DecoderParams off{ReductionParams{0.0, 1 << 20}, 1, 1, 1, true};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      const GaussianMixture a = random_mixture(rng, 3);
      const GaussianMixture b = random_mixture(rng, 3);
      const GaussianMixture conv = convolve_pair(a, b, off);
      const double step = 1.0 / 512.0;
      const auto span = [&](const GaussianMixture& m, double& lo, double& hi) {
        for (const auto& c : m.components) {
          lo = std::min(lo, c.mean - 10.0 * std::sqrt(c.variance));
          hi = std::max(hi, c.mean + 10.0 * std::sqrt(c.variance));
        }
      };
      double alo = 1e300, ahi = -1e300, blo = 1e300, bhi = -1e300;
      span(a, alo, ahi);
      span(b, blo, bhi);
      const auto snap = [&](double z) { return std::floor(z / step) * step; };
      const auto count = [&](double lo, double hi) {
        return static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
      };
      const auto ga = oracle::sample_mixture(a, snap(alo), step, count(snap(alo), ahi));
      const auto gb = oracle::sample_mixture(b, snap(blo), step, count(snap(blo), bhi));
      const auto gc = oracle::grid_convolve(ga, gb);
      const auto gd = oracle::sample_mixture(conv, gc.origin, step, gc.size());
      worst = std::max(worst, oracle::grid_l1_diff(gc, oracle::grid_normalize_l1(gd)));
    }
    st.check("pairwise convolution vs grid oracle (3 cases)", worst <= 1e-3,
             "worst L1 = " + std::to_string(worst));
  }
  {  // product closed form vs quadrature-normalized pointwise product
    const DecoderParams off{ReductionParams{0.0, 1 << 20}, 1, 1, 1, true};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
      const GaussianMixture a = random_mixture(rng, 2);
      GaussianMixture b = random_mixture(rng, 2);
      // keep supports overlapping so the product mass is well-conditioned
      b.components[0].mean = a.components[0].mean + rng.next_gaussian();
      const GaussianMixture prod = product_pair(a, b, off);
      const double mass = oracle::quad_mixture_product_mass(a, b);
      const double step = 1.0 / 512.0;
      double lo = 1e300, hi = -1e300;
      for (const auto& c : prod.components) {
        lo = std::min(lo, c.mean - 12.0 * std::sqrt(c.variance));
        hi = std::max(hi, c.mean + 12.0 * std::sqrt(c.variance));
      }
      lo = std::floor(lo / step) * step;
      const std::size_t cnt = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
      double l1 = 0.0;
      for (std::size_t k = 0; k < cnt; ++k) {
        const double z = lo + static_cast<double>(k) * step;
        const double ref = density_at(a, z) * density_at(b, z) / mass;
        l1 += std::abs(density_at(prod, z) - ref) * step;
      }
      worst = std::max(worst, l1);
    }
    st.check("pairwise product vs quadrature oracle (3 cases)", worst <= 1e-6,
             "worst L1 = " + std::to_string(worst));
  }
  {  // sparse encode vs dense LU
    const MagicSquareH h = generate(6, 3, 77);
    std::vector<long long> b;
    for (int i = 0; i < 6; ++i) b.push_back(rng.next_int(-2, 2));
    const LatticePoint p = encode(h, b);
    std::vector<double> rhs(b.begin(), b.end());
    const auto x = oracle::dense_solve(oracle::dense_from_sparse(h), 6, rhs);
    double worst = 0.0;
    for (int i = 0; i < 6; ++i) worst = std::max(worst, std::abs(x[i] - p.coords[i]));
    st.check("sparse encode vs dense LU (n=6)", worst <= 1e-9,
             "worst |diff| = " + std::to_string(worst));
  }
  {  // exhaustive ML recovers an exact lattice point
    const MagicSquareH h = generate(4, 3, 3);
    const std::vector<long long> b{1, -2, 0, 2};
    const LatticePoint p = encode(h, b);
    const auto ml = oracle::ml_decode_bruteforce(h, p.coords, 2);
    st.check("exhaustive ML on a noiseless lattice point (n=4)", ml == b);
  }

  if (st.failures != 0) throw ldlc::Error(std::to_string(st.failures) + " selftest failure(s)");
  std::cout << "selftest: all checks passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"low-density lattice codes with a Gaussian-mixture BP decoder"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* cgen = app.add_subcommand("gen-lattice", "generate a magic-square parity matrix");
  cgen->add_option("--n", gen.n, "dimension")->check(CLI::PositiveNumber);
  cgen->add_option("--d", gen.d, "row/column degree")->check(CLI::PositiveNumber);
  cgen->add_option("--seed", gen.seed, "RNG seed");
  cgen->add_option("--out", gen.out, "output matrix file")->required();

  DecodeArgs dec;
  auto* cdec = app.add_subcommand("decode", "decode one channel observation");
  cdec->add_option("--matrix", dec.matrix, "matrix file")->required();
  cdec->add_option("--y", dec.y_path, "channel outputs, one per line")->required();
  cdec->add_option("--sigma2", dec.sigma2, "noise variance")->required();
  cdec->add_option("--theta", dec.theta, "reduction threshold");
  cdec->add_option("--max-components", dec.max_components, "mixture size cap");
  cdec->add_option("--shifts", dec.shifts, "integer shifts per extension");
  cdec->add_option("--max-iters", dec.max_iters, "iteration cap");
  cdec->add_option("--stability-window", dec.stability_window,
                   "iterations of stable b before stopping");
  cdec->add_flag("--json", dec.json_out, "diagnostics as a JSON line on stderr");

  SimArgs sim;
  auto* csim = app.add_subcommand("simulate", "Monte Carlo SER on a given matrix");
  csim->add_option("--matrix", sim.matrix, "matrix file")->required();
  csim->add_option("--db", sim.db, "dB distances from capacity")
      ->required()
      ->delimiter(',');
  csim->add_option("--trials", sim.trials, "trials per dB point");
  csim->add_option("--theta", sim.theta, "reduction threshold");
  csim->add_option("--max-components", sim.max_components, "mixture size cap");
  csim->add_option("--shifts", sim.shifts, "integer shifts per extension");
  csim->add_option("--max-iters", sim.max_iters, "iteration cap");
  csim->add_option("--seed", sim.seed, "RNG seed");
  csim->add_option("--threads", sim.threads, "worker threads")->check(CLI::PositiveNumber);
  csim->add_flag("--random-b", sim.random_b, "transmit random b instead of zeros");
  csim->add_option("--b-radius", sim.b_radius, "random b range");
  csim->add_option("--out", sim.out, "output CSV");
  csim->add_flag("--json", sim.json_out, "per-point JSON lines on stdout");

  SimArgs swp;
  auto* cswp = app.add_subcommand("sweep",
                                  "generate a matrix and sweep dB points end to end");
  cswp->add_option("--n", swp.n, "dimension")->check(CLI::PositiveNumber);
  cswp->add_option("--d", swp.d, "row/column degree")->check(CLI::PositiveNumber);
  cswp->add_option("--db", swp.db, "dB distances from capacity")
      ->required()
      ->delimiter(',');
  cswp->add_option("--trials", swp.trials, "trials per dB point");
  cswp->add_option("--theta", swp.theta, "reduction threshold");
  cswp->add_option("--max-components", swp.max_components, "mixture size cap");
  cswp->add_option("--shifts", swp.shifts, "integer shifts per extension");
  cswp->add_option("--max-iters", swp.max_iters, "iteration cap");
  cswp->add_option("--seed", swp.seed, "RNG seed");
  cswp->add_option("--threads", swp.threads, "worker threads")->check(CLI::PositiveNumber);
  cswp->add_flag("--random-b", swp.random_b, "transmit random b instead of zeros");
  cswp->add_option("--b-radius", swp.b_radius, "random b range");
  cswp->add_option("--out", swp.out, "output CSV");
  cswp->add_flag("--json", swp.json_out, "per-point JSON lines on stdout");

  auto* cself = app.add_subcommand("selftest", "closed forms vs independent oracles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (cgen->parsed()) return run_gen_lattice(gen);
    if (cdec->parsed()) return run_decode(dec);
    if (csim->parsed()) return run_simulation(sim, "simulate");
    if (cswp->parsed()) return run_simulation(swp, "sweep");
    if (cself->parsed()) return run_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
