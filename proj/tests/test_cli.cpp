#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "distmap/io.hpp"
#include "doctest.h"

// End-to-end checks that drive the installed command-line binary. The build
// passes its location in as a compile definition.
#ifndef DISTMAP_CLI_PATH
#error "DISTMAP_CLI_PATH must be defined to the distmap binary location"
#endif

using namespace distmap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("distmap_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string dir(const std::string& name) const {
    return (path / name).string();
  }
};

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(DISTMAP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// A deliberately small but complete fit so the whole file stays fast.
std::string small_fit_args(const std::string& out) {
  return "fit --model conjugate --approx gaussian --sd-scale 0.75 "
         "--y-obs 0.3 --n-sim 1500 --keep-frac 1.0 --hidden 8 --epochs 12 "
         "--batch 128 --seed 7 --histogram --bins 10 --out " + out;
}

}  // namespace

TEST_CASE("help exits cleanly, missing arguments do not") {
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("fit --help") == 0);
  CHECK(run_cli("") == 2);  // a subcommand is required

  TempDir tmp;
  // --out missing entirely.
  CHECK(run_cli("fit --model conjugate --n-sim 100 --y-obs 0.0") == 2);
  // --n-sim missing.
  CHECK(run_cli("fit --model conjugate --y-obs 0.0 --out " +
                tmp.dir("nothing")) == 2);
  CHECK_FALSE(fs::exists(tmp.dir("nothing")));
}

TEST_CASE("unknown selectors are usage errors") {
  TempDir tmp;
  CHECK(run_cli("fit --model banana --n-sim 100 --y-obs 0 --out " +
                tmp.dir("a")) == 2);
  CHECK(run_cli("fit --model conjugate --approx banana --n-sim 100 "
                "--y-obs 0 --out " + tmp.dir("b")) == 2);
  CHECK(run_cli("demo --case banana --out " + tmp.dir("c")) == 2);
  // sign-flip approximation is only defined for the scalar conjugate model
  CHECK(run_cli("fit --model logistic --approx sign-flip --n-sim 100 "
                "--out " + tmp.dir("d")) == 2);
}

TEST_CASE("a small fit produces parseable artifacts") {
  TempDir tmp;
  const std::string out = tmp.dir("fit");
  REQUIRE(run_cli(small_fit_args(out)) == 0);

  const DistortionCurve curve = io::read_curve_csv(out + "/curve.csv");
  REQUIRE(curve.q_grid.size() == 201);
  CHECK(curve.D_values.front() == 0.0);
  CHECK(curve.D_values.back() == 1.0);
  for (std::size_t i = 1; i < curve.D_values.size(); ++i)
    CHECK(curve.D_values[i] >= curve.D_values[i - 1]);

  const NetParams net = io::read_net_params(out + "/map.txt");
  CHECK(net.config.input_dim == 1);
  CHECK(net.config.hidden_widths == std::vector<int>{8});

  const RankHistogram hist = io::read_histogram_csv(out + "/histogram.csv");
  CHECK(hist.n_bins == 10);
  REQUIRE(hist.heights.size() == 10);
  double mass = 0.0;
  for (double h : hist.heights) mass += h / hist.n_bins;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

  CHECK(fs::exists(out + "/density.csv"));
  const io::Manifest m = io::read_manifest(out + "/manifest.txt");
  CHECK_FALSE(m.empty());
}

TEST_CASE("replay reproduces a run byte for byte") {
  TempDir tmp;
  const std::string first = tmp.dir("first");
  const std::string second = tmp.dir("second");
  REQUIRE(run_cli(small_fit_args(first)) == 0);
  REQUIRE(run_cli("replay --manifest " + first + "/manifest.txt --out " +
                  second) == 0);

  for (const char* name :
       {"curve.csv", "density.csv", "histogram.csv", "map.txt"}) {
    CAPTURE(name);
    CHECK(slurp(first + "/" + name) == slurp(second + "/" + name));
  }
}

TEST_CASE("render is deterministic and validates its input") {
  TempDir tmp;
  DistortionCurve c = curve_from_cdf(
      [](double q) { return q * q; }, [](double q) { return 2.0 * q; });
  const std::string csv = tmp.dir("c.csv");
  io::write_curve_csv(c, csv);

  REQUIRE(run_cli("render --in " + csv + " --svg-out " + tmp.dir("a.svg")) ==
          0);
  REQUIRE(run_cli("render --in " + csv + " --svg-out " + tmp.dir("b.svg") +
                  " --title plot") == 0);
  REQUIRE(run_cli("render --in " + csv + " --svg-out " + tmp.dir("c.svg")) ==
          0);
  CHECK(slurp(tmp.dir("a.svg")) == slurp(tmp.dir("c.svg")));
  CHECK(slurp(tmp.dir("a.svg")) != slurp(tmp.dir("b.svg")));

  std::ofstream(tmp.dir("junk.csv")) << "w,t,f\n0,0,0\n";
  CHECK(run_cli("render --in " + tmp.dir("junk.csv") + " --svg-out " +
                tmp.dir("junk.svg")) == 2);
}

TEST_CASE("validate signals failure through the exit code") {
  TempDir tmp;
  // An impossible convergence tolerance forces a deterministic failure.
  // n_sim is kept large enough that the three homogeneity blocks stay above
  // the minimum block size, so the run completes and reports rather than
  // aborting on a configuration error.
  const int rc = run_cli(
      "validate --model conjugate --approx gaussian --sd-scale 0.75 "
      "--y-obs 0.3 --n-sim 6000 --keep-frac 1.0 --hidden 8 --epochs 12 "
      "--batch 128 --seed 7 --checkpoints 1500,3000,6000 "
      "--tol-convergence 1e-9 --out " + tmp.dir("v"));
  CHECK(rc == 1);
  CHECK(fs::exists(tmp.dir("v") + "/validation.txt"));
}
