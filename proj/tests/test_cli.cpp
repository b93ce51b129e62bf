#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string kCli = LDLC_CLI_PATH;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path outfile = dir / "stdout.txt";
  const std::string cmd =
      "cd " + dir.string() + " && '" + kCli + "' " + args + " > stdout.txt 2> stderr.txt";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(outfile);
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("gen-lattice writes the matrix and its manifest") {
  const auto dir = scratch_dir("gen");
  const auto r = run_cli("gen-lattice --n 100 --d 5 --seed 7 --out h.txt", dir);
  CHECK(r.exit_code == 0);

  const std::string matrix = slurp(dir / "h.txt");
  // header line plus one line per non-zero
  long long lines = 0;
  for (char c : matrix)
    if (c == '\n') ++lines;
  CHECK(lines == 501);

  const std::string manifest = slurp(dir / "h.txt.manifest.json");
  CHECK(manifest.find("\"command\": \"gen-lattice\"") != std::string::npos);
  CHECK(manifest.find("\"seed\": 7") != std::string::npos);
  CHECK(manifest.find("\"library_version\"") != std::string::npos);
}

TEST_CASE("selftest passes") {
  const auto dir = scratch_dir("selftest");
  const auto r = run_cli("selftest", dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("all checks passed") != std::string::npos);
}

TEST_CASE("decode emits one integer per symbol") {
  const auto dir = scratch_dir("decode");
  REQUIRE(run_cli("gen-lattice --n 12 --d 3 --seed 3 --out h.txt", dir).exit_code == 0);
  {
    std::ofstream y(dir / "y.txt");
    for (int i = 0; i < 12; ++i) y << (i % 2 == 0 ? 0.01 : -0.02) << "\n";
  }
  const auto r = run_cli("decode --matrix h.txt --y y.txt --sigma2 0.01", dir);
  CHECK(r.exit_code == 0);
  std::istringstream out(r.out);
  std::string line;
  int rows = 0;
  while (std::getline(out, line)) {
    CHECK(line == "0");  // y is a small perturbation of the zero point
    ++rows;
  }
  CHECK(rows == 12);

  // JSON diagnostics land on stderr
  const auto rj =
      run_cli("decode --matrix h.txt --y y.txt --sigma2 0.01 --json", dir);
  CHECK(rj.exit_code == 0);
  const std::string err = slurp(dir / "stderr.txt");
  CHECK(err.find("\"iterations\"") != std::string::npos);
  CHECK(err.find("\"converged\":true") != std::string::npos);
}

TEST_CASE("simulate at high dB sees no errors and writes a manifest") {
  const auto dir = scratch_dir("simulate");
  REQUIRE(run_cli("gen-lattice --n 10 --d 3 --seed 4 --out h.txt", dir).exit_code == 0);
  const auto r = run_cli(
      "simulate --matrix h.txt --db 20 --trials 10 --seed 5 --out res.csv", dir);
  CHECK(r.exit_code == 0);

  std::ifstream csv(dir / "res.csv");
  std::string header, row;
  REQUIRE(std::getline(csv, header));
  REQUIRE(std::getline(csv, row));
  // ser is the 5th comma-separated field
  std::istringstream rs(row);
  std::string field;
  for (int i = 0; i < 5; ++i) REQUIRE(std::getline(rs, field, ','));
  CHECK(field == "0");

  CHECK(fs::exists(dir / "res.csv.manifest.json"));
}

TEST_CASE("identical seeds give byte-identical CSVs at any thread count") {
  const auto dir = scratch_dir("determinism");
  REQUIRE(run_cli("gen-lattice --n 10 --d 3 --seed 8 --out h.txt", dir).exit_code == 0);
  const std::string base =
      "simulate --matrix h.txt --db 4,8 --trials 12 --seed 31 ";
  REQUIRE(run_cli(base + "--threads 1 --out a.csv", dir).exit_code == 0);
  REQUIRE(run_cli(base + "--threads 3 --out b.csv", dir).exit_code == 0);
  const std::string a = slurp(dir / "a.csv");
  const std::string b = slurp(dir / "b.csv");
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("sweep is self-contained") {
  const auto dir = scratch_dir("sweep");
  const auto r =
      run_cli("sweep --n 8 --d 3 --db 12 --trials 5 --seed 2 --out s.csv", dir);
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "s.csv"));
  CHECK(fs::exists(dir / "s.csv.manifest.json"));
}

TEST_CASE("usage errors exit 1") {
  const auto dir = scratch_dir("usage");
  CHECK(run_cli("decode --no-such-flag", dir).exit_code == 1);
  CHECK(run_cli("", dir).exit_code == 1);                 // missing subcommand
  CHECK(run_cli("gen-lattice --n 10 --d 3", dir).exit_code == 1);  // --out required
}

TEST_CASE("runtime errors exit 2") {
  const auto dir = scratch_dir("runtime");
  CHECK(run_cli("decode --matrix nope.txt --y nope.txt --sigma2 0.1", dir).exit_code == 2);
  // n < d cannot be generated
  CHECK(run_cli("gen-lattice --n 3 --d 5 --out h.txt", dir).exit_code == 2);
}

TEST_SUITE_END();
