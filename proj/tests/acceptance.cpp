// Release gate: twelve end-to-end criteria, one line of output each, exit 0
// only when every criterion passes. Tolerances are fixed here on purpose —
// they are the contract this library ships against, not tuning knobs.
//
// Heavy shared artifacts (the over-dispersed reference fit and the seed
// sweeps built on it) are computed up front with progress notes on stderr;
// the twelve stdout lines then appear in order.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "distmap/baselines.hpp"
#include "distmap/betamdn.hpp"
#include "distmap/distortion.hpp"
#include "distmap/generative.hpp"
#include "distmap/io.hpp"
#include "distmap/math.hpp"
#include "distmap/rng.hpp"
#include "distmap/samplers.hpp"
#include "oracles.hpp"

#ifndef DISTMAP_CLI_PATH
#error "DISTMAP_CLI_PATH must be defined to the distmap binary location"
#endif

using namespace distmap;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

int g_failures = 0;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s (%s)\n", id, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void note(const std::string& msg) {
  std::fprintf(stderr, "[acceptance] %s\n", msg.c_str());
}

// ---------------------------------------------------------------------------
// Shared fixtures: the scalar conjugate model x ~ N(0,1), y|x ~ N(x,1),
// diagnosed at y_obs = 0.3 with a 10% nearest-neighbour window.
// ---------------------------------------------------------------------------

const std::vector<double> kYObs{0.3};
const double kSigmaF = std::sqrt(0.5);  // exact posterior sd of that model
constexpr std::size_t kNSim = 500000;   // 10% window -> 50k training pairs

GenerativeModel base_model() { return gaussian_conjugate_model(0.0, 1.0, 1.0); }

Window tenth_window() {
  Window w;
  w.keep_fraction = 0.1;
  return w;
}

NetConfig net_cfg(std::uint64_t seed) {
  NetConfig n;
  n.init_seed = seed;
  return n;
}

TrainConfig train_cfg(std::uint64_t seed) {
  TrainConfig t;
  t.seed = seed;
  return t;
}

// Exact distortion of the shifted/scaled Gaussian approximation of the
// conjugate posterior: D(q) = Phi(scale * z + shift / sigma_F), z = Phi^-1(q).
DistortionCurve scale_shift_curve(double shift, double scale) {
  const double c = shift / kSigmaF;
  return curve_from_cdf(
      [=](double q) { return math::norm_cdf(scale * math::norm_ppf(q) + c); },
      [=](double q) {
        const double z = math::norm_ppf(q);
        const double t = scale * z + c;
        return scale * std::exp(0.5 * (z * z - t * t));
      });
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Heavy precomputed artifacts shared across criteria 1, 3, 4, 6 and 11.
struct Shared {
  DistortionCurve true_cap;             // D for sd scale sqrt(2)
  DistortionMap cap_map;                // criterion-1 fit, seed 1
  double cap_seconds = 0.0;
  std::vector<ValidationReport> conv;   // seeds 1..10, checkpoints 1e3/1e4/5e4
  std::vector<DistortionCurve> sweep;   // full-size fits, seeds 1..20
};

Shared precompute() {
  Shared sh;
  sh.true_cap = scale_shift_curve(0.0, std::sqrt(2.0));

  const GenerativeModel model = base_model();
  const ApproxPosterior cap = mis_specified_gaussian(model, 0.0, std::sqrt(2.0));
  const std::vector<std::size_t> checkpoints{1000, 10000, 50000};

  note("criterion-1 reference fit (seed 1, 50k windowed pairs)");
  const auto t0 = std::chrono::steady_clock::now();
  auto [map, rep] = fit_distortion(model, cap, kYObs, 0, kNSim, tenth_window(),
                                   net_cfg(1), train_cfg(1));
  sh.cap_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  sh.cap_map = std::move(map);
  sh.sweep.push_back(curve_of(sh.cap_map));

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    note(fmt("convergence checkpoints, seed %llu/10",
             static_cast<unsigned long long>(seed)));
    sh.conv.push_back(validate_convergence(model, cap, kYObs, 0, kNSim,
                                           tenth_window(), net_cfg(seed),
                                           train_cfg(seed), checkpoints, 0.05));
    // The final checkpoint is a full-size fit of the same seed; reuse it for
    // the seed sweep instead of refitting. Seed 1 already came from the
    // timed reference fit above.
    if (seed > 1) sh.sweep.push_back(sh.conv.back().curves.back());
  }
  for (std::uint64_t seed = 11; seed <= 20; ++seed) {
    note(fmt("seed sweep %llu/20", static_cast<unsigned long long>(seed)));
    auto [m, r] = fit_distortion(model, cap, kYObs, 0, kNSim, tenth_window(),
                                 net_cfg(seed), train_cfg(seed));
    sh.sweep.push_back(curve_of(m));
  }
  return sh;
}

// ---------------------------------------------------------------------------
// Criterion 12 helpers: drive the CLI binary.
// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(DISTMAP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return (rc != -1 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing:" + p + ">";
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

int main() {
  const Shared sh = precompute();
  const GenerativeModel model = base_model();

  // ---- 1. closed-form recovery of the over-dispersed distortion -----------
  {
    const double sup = sup_distance(curve_of(sh.cap_map), sh.true_cap);
    const bool pass = sup <= 0.05 && sh.cap_seconds <= 120.0 &&
                      sh.cap_map.n_train == 50000;
    report(1, pass,
           fmt("sup vs Phi(sqrt(2) z) = %.4f <= 0.05, %.1f s <= 120 s, "
               "n_train = %zu",
               sup, sh.cap_seconds, sh.cap_map.n_train));
  }

  // ---- 2. identity recovery against the exact posterior -------------------
  {
    auto [map, rep] =
        fit_distortion(model, exact_posterior_approx(model), kYObs, 0, 100000,
                       tenth_window(), net_cfg(2), train_cfg(2));
    const BetaParams bp = map_params(map);
    const double a = bp.components[0].a;
    const double b = bp.components[0].b;
    const double sup = sup_distance(curve_of(map), identity_curve());
    const bool pass = std::abs(a - 1.0) <= 0.15 && std::abs(b - 1.0) <= 0.15 &&
                      sup <= 0.05;
    report(2, pass,
           fmt("(a,b) = (%.3f, %.3f) in 1 +/- 0.15, sup to identity = %.4f "
               "<= 0.05",
               a, b, sup));
  }

  // ---- 3. fitted map beats the raw approximation in KL, 20 seeds ----------
  {
    const double kl_id = kl_between_curves(sh.true_cap, identity_curve());
    int wins = 0;
    double worst = 0.0;
    for (const DistortionCurve& fit : sh.sweep) {
      const double kl_fit = kl_between_curves(sh.true_cap, fit);
      if (kl_fit < kl_id) ++wins;
      worst = std::max(worst, kl_fit);
    }
    const bool pass = wins >= 19;
    report(3, pass,
           fmt("KL(true||fit) < KL(true||identity) in %d/20 seeds "
               "(identity KL = %.4f, worst fit KL = %.5f)",
               wins, kl_id, worst));
  }

  // ---- 4. median sup-error non-increasing in the training-set size --------
  {
    // A single-component fit saturates the Beta-family misfit floor
    // (sup ~ 0.006 against the scale-sqrt(2) curve) already at N = 1e4, so
    // the 1e4 -> 5e4 comparison there measures noise, not consistency.  A
    // two-component mixture drops the floor well below the estimation error
    // at these budgets, keeping all three checkpoints variance-dominated.
    const ApproxPosterior cap =
        mis_specified_gaussian(model, 0.0, std::sqrt(2.0));
    std::vector<std::vector<double>> sups(3);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      note(fmt("consistency trend, seed %llu/10",
               static_cast<unsigned long long>(seed)));
      NetConfig nc = net_cfg(400 + seed);
      nc.n_components = 2;
      ValidationReport rep = validate_convergence(
          model, cap, kYObs, 0, kNSim, tenth_window(), nc,
          train_cfg(300 + seed), {1000, 10000, 50000}, 0.05);
      for (std::size_t j = 0; j < 3; ++j)
        sups[j].push_back(sup_distance(rep.curves[j], sh.true_cap));
    }
    std::vector<double> med(3);
    for (std::size_t j = 0; j < 3; ++j) med[j] = median(sups[j]);
    const bool pass = med[0] >= med[1] && med[1] >= med[2];
    report(4, pass,
           fmt("median sup-error %.4f (1e3) >= %.4f (1e4) >= %.4f (5e4)",
               med[0], med[1], med[2]));
  }

  // ---- 5. backpropagation matches central finite differences --------------
  {
    RngStream rng(55);
    int ok = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      NetConfig cfg;
      cfg.input_dim = 1 + static_cast<int>(rng.uniform_below(3));
      cfg.hidden_widths.assign(1 + rng.uniform_below(2), 0);
      for (int& w : cfg.hidden_widths)
        w = 2 + static_cast<int>(rng.uniform_below(5));
      cfg.n_components = 1 + static_cast<int>(rng.uniform_below(3));
      cfg.init_seed = 1000 + rep;
      NetParams params = init_params(cfg);
      std::vector<double> theta = params.flatten();
      for (double& t : theta) t += rng.uniform(-0.4, 0.4);
      params.unflatten(theta);

      QDataset data;
      const std::size_t n = 1 + rng.uniform_below(4);
      for (std::size_t i = 0; i < n; ++i) {
        QRecord rec;
        rec.q = rng.uniform(0.02, 0.98);
        rec.input.resize(cfg.input_dim);
        for (double& v : rec.input) v = rng.normal();
        data.records.push_back(rec);
      }

      const std::vector<double> analytic = grad(params, data);
      NetParams probe = params;
      const std::vector<double> numeric = oracles::fd_gradient(
          [&](const std::vector<double>& t) {
            probe.unflatten(t);
            return nll(probe, data);
          },
          theta);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < analytic.size(); ++i) {
        num += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        den += numeric[i] * numeric[i];
      }
      const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
      worst = std::max(worst, rel);
      if (rel <= 1e-4) ++ok;
    }
    report(5, ok == 100,
           fmt("%d/100 randomized cases, worst relative error %.2e <= 1e-4",
               ok, worst));
  }

  // ---- 6. density shape semantics: cup, cap, median shift -----------------
  {
    auto [cup_map, r1] =
        fit_distortion(model, mis_specified_gaussian(model, 0.0, 0.5), kYObs,
                       0, kNSim, tenth_window(), net_cfg(6), train_cfg(6));
    auto [shift_map, r2] =
        fit_distortion(model, mis_specified_gaussian(model, 0.5, 1.0), kYObs,
                       0, kNSim, tenth_window(), net_cfg(7), train_cfg(7));
    const double cup05 = eval_d(cup_map, 0.05);
    const double cup50 = eval_d(cup_map, 0.5);
    const double cap05 = eval_d(sh.cap_map, 0.05);
    const double cap50 = eval_d(sh.cap_map, 0.5);
    const double cap95 = eval_d(sh.cap_map, 0.95);
    const double D50 = eval_D(shift_map, 0.5);
    const bool cup = cup05 > cup50;
    const bool cap = cap05 < cap50 && cap95 < cap50;
    const bool shift = D50 >= 0.55;
    report(6, cup && cap && shift,
           fmt("cup d(.05)=%.2f > d(.5)=%.2f; cap d(.05)=%.2f < d(.5)=%.2f > "
               "d(.95)=%.2f; shift D(.5)=%.3f >= 0.55",
               cup05, cup50, cap05, cap50, cap95, D50));
  }

  // ---- 7. variational logistic regression vs MCMC ground truth ------------
  {
    const auto design = uniform_design(20, 3, 1);
    const GenerativeModel lmodel = logistic_model(design, 2.0);
    const ApproxPosterior vi = vi_logistic(design, 2.0);
    const std::vector<double> y = sample_generative(lmodel, 1, 42).pairs[0].y;

    Window w;
    w.keep_fraction = 0.01;  // 1% of 1e5 -> 1000 pairs
    TrainConfig tc;          // the VI signal is shallow: train to convergence
    tc.max_epochs = 400;
    tc.patience = 400;
    tc.batch_size = 128;

    const auto lp = [&](const std::vector<double>& x) {
      return lmodel.exact_log_posterior(x, y);
    };
    const std::vector<double> zeros(3, 0.0);
    const double step = tune_step_sd(lp, zeros, 1.0, 555);

    bool sup_ok = true;
    int cups = 0;
    std::string sups;
    for (int coord = 0; coord < 3; ++coord) {
      note(fmt("logistic coordinate %d fit + oracle chain", coord));
      NetConfig nc = net_cfg(200 + coord);
      TrainConfig tcj = tc;
      tcj.seed = 100 + coord;
      auto [map, rep] = fit_distortion(lmodel, vi, y, coord, 100000, w, nc,
                                       tcj);
      ChainConfig cc;
      cc.burn_in = 2000;
      cc.thin = 10;
      cc.n_steps = cc.burn_in + 20000 * cc.thin;
      cc.step_sd = step;
      cc.seed = 555 + coord;
      const DistortionCurve truth =
          exact_distortion_oracle(lmodel, vi, y, coord, 20000, cc);
      const double sup = sup_distance(curve_of(map), truth);
      sups += fmt("%s%.3f", coord ? "/" : "", sup);
      if (sup > 0.1) sup_ok = false;
      if (eval_d(map, 0.05) > eval_d(map, 0.5)) ++cups;
    }
    report(7, sup_ok && cups >= 2,
           fmt("per-coordinate sup vs MCMC oracle = %s (all <= 0.1), "
               "cup-shaped in %d/3 coordinates",
               sups.c_str(), cups));
  }

  // ---- 8. bivariate surface: under-dispersion concentrates in the corner --
  {
    const GenerativeModel m2 = gaussian_conjugate_model_2d(0.0, 1.0, 1.0);
    const std::vector<double> y2{0.3, -0.2};

    // Pointwise flatness at the boundary nodes amplifies any Beta-parameter
    // error by |log q| ~ 6.9, so the surface fits use affine heads (no
    // hidden layers: the conditional truth here is constant in its inputs),
    // a large windowed sample, and a calm optimizer.  Wide nets keep a
    // budget-independent function wiggle of 0.02-0.07 from their random
    // initialization that early stopping cannot grind down, which the
    // boundary amplification turns into deviations of 0.1-0.4.
    Window w;
    w.keep_fraction = 0.25;
    TrainConfig tc8;
    tc8.batch_size = 1024;
    tc8.learning_rate = 5e-4;
    tc8.patience = 30;
    tc8.max_epochs = 300;
    NetConfig nc8;
    nc8.input_dim = 2;
    nc8.hidden_widths = {};

    note("bivariate under-dispersed fit");
    nc8.init_seed = 8;
    tc8.seed = 8;
    BivariateDistortion under =
        fit_bivariate(m2, mis_specified_gaussian(m2, 0.0, 0.5), y2, {0, 1},
                      2000000, w, nc8, tc8);
    const SurfaceGrid gu = surface(under);
    const double corner = gu.at(1, 1);    // node 0.02, exact by construction
    const double center = gu.at(25, 25);  // node 0.50

    note("bivariate identity fit");
    nc8.init_seed = 29;
    tc8.seed = 29;
    BivariateDistortion ident =
        fit_bivariate(m2, exact_posterior_approx(m2), y2, {0, 1}, 2000000, w,
                      nc8, tc8);
    const SurfaceGrid gi = surface(ident);
    double dev = 0.0;
    for (double v : gi.values) dev = std::max(dev, std::abs(v - 1.0));
    const double integral = gi.trapezoid_integral();

    const bool pass = corner > center && dev <= 0.1 &&
                      std::abs(integral - 1.0) <= 0.05;
    report(8, pass,
           fmt("corner d(.02,.02)=%.2f > center d(.5,.5)=%.2f; identity max "
               "|d-1| = %.3f <= 0.1, integral = %.3f",
               corner, center, dev, integral));
  }

  // ---- 9. averaged diagnostic stays flat while the local map shifts -------
  {
    const ApproxPosterior flip = sign_flip_quantile_shift(model, 0.15, 0.0);

    // Pooled over the whole prior predictive the PIT histogram is flat ...
    const SimBatch batch = sample_generative(model, 100000, 9);
    const QDataset pooled = compute_q(batch, flip, 0);
    const RankHistogram hist = marginal_histogram(pooled, 20);
    double dev = 0.0;
    for (double h : hist.heights) dev = std::max(dev, std::abs(h - 1.0));

    // ... yet the conditional map at this y_obs is far from the identity.
    auto [map, rep] = fit_distortion(model, flip, {0.5}, 0, 100000,
                                     tenth_window(), net_cfg(10),
                                     train_cfg(10));
    const double d50 = eval_D(map, 0.5);
    const bool pass = dev <= 0.1 && std::abs(d50 - 0.5) >= 0.1;
    report(9, pass,
           fmt("pooled histogram max |h-1| = %.3f <= 0.1, local |D(0.5)-0.5| "
               "= %.3f >= 0.1",
               dev, std::abs(d50 - 0.5)));
  }

  // ---- 10. operational coverage of an under-dispersed interval ------------
  {
    // Prior N(0,2), noise var 2, y = 0: exact posterior is N(0,1); the
    // approximation halves the sd, so its 80% interval covers far less.
    const GenerativeModel m10 = gaussian_conjugate_model(0.0, 2.0, 2.0);
    const ApproxPosterior approx = mis_specified_gaussian(m10, 0.0, 0.5);
    const std::vector<double> y0{0.0};
    const auto interval = credible_interval(approx, y0, 0, 0.8);

    Chain chain;
    chain.acceptance_rate = 1.0;
    chain.config.seed = 10;
    for (std::size_t i = 0; i < 10000; ++i) {
      RngStream s = RngStream::substream(10, i);
      chain.draws.push_back(m10.sample_exact_posterior(y0, s));
    }
    const CoverageEstimate est = operational_coverage(interval, chain, 0, 0.8);
    const double oracle = 0.4783316307867514;  // 2 Phi(z_0.9 / 2) - 1
    const bool pass = std::abs(est.coverage - oracle) <= 3.0 * est.se;
    report(10, pass,
           fmt("coverage = %.4f vs oracle %.4f, |diff| = %.4f <= 3 SE = %.4f",
               est.coverage, oracle, std::abs(est.coverage - oracle),
               3.0 * est.se));
  }

  // ---- 11. validation suite on the reference setup ------------------------
  {
    const ValidationReport& conv = sh.conv[0];
    note("block agreement check (3 blocks)");
    const ValidationReport blocks = validate_blocks(
        model, mis_specified_gaussian(model, 0.0, std::sqrt(2.0)), kYObs, 0,
        kNSim, tenth_window(), net_cfg(31), train_cfg(31), 3, 0.1);
    const bool pass = conv.pass && blocks.pass;
    report(11, pass,
           fmt("convergence final sup-change = %.4f <= 0.05; block max "
               "pairwise = %.4f <= 0.1",
               conv.successive_sup.back(), blocks.max_pairwise_sup));
  }

  // ---- 12. manifest replay reproduces every CSV byte-for-byte -------------
  {
    const fs::path root = fs::temp_directory_path() /
                          ("distmap_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(root);
    const auto dir = [&](const char* n) { return (root / n).string(); };

    struct RunSpec {
      std::string args;
      std::string out;
      std::vector<std::string> csvs;
    };
    const std::vector<RunSpec> runs{
        {"fit --model conjugate --approx gaussian --sd-scale 0.75 "
         "--y-obs 0.3 --n-sim 4000 --keep-frac 0.5 --hidden 16,16 "
         "--epochs 40 --batch 128 --seed 3 --histogram --bins 12",
         dir("fit"),
         {"curve.csv", "density.csv", "histogram.csv"}},
        {"surface --model conjugate-2d --approx gaussian --sd-scale 0.6 "
         "--y-obs 0.2,-0.1 --n-sim 6000 --keep-frac 0.5 --hidden 12 "
         "--epochs 25 --batch 128 --seed 4",
         dir("surface"),
         {"surface.csv", "curve.csv", "density.csv"}},
        {"baselines --model conjugate --approx gaussian --sd-scale 0.5 "
         "--y-obs 0.1 --n-sim 20000 --keep-frac 0.1 --alpha 0.8 "
         "--coverage-draws 5000 --seed 5",
         dir("base"),
         {"histogram.csv", "coverage.csv"}}};

    bool pass = true;
    int files = 0;
    std::string why;
    for (const RunSpec& r : runs) {
      if (run_cli(r.args + " --out " + r.out) != 0) {
        pass = false;
        why = "run failed: " + r.args.substr(0, 20);
        break;
      }
      const std::string redo = r.out + "_replay";
      if (run_cli("replay --manifest " + r.out + "/manifest.txt --out " +
                  redo) != 0) {
        pass = false;
        why = "replay failed";
        break;
      }
      for (const std::string& c : r.csvs) {
        if (slurp(r.out + "/" + c) != slurp(redo + "/" + c)) {
          pass = false;
          why = c + " differs after replay";
        } else {
          ++files;
        }
      }
    }
    fs::remove_all(root);
    report(12, pass,
           pass ? fmt("3 run types replayed, %d/%d CSVs byte-identical",
                      files, files)
                : why);
  }

  if (g_failures == 0) {
    std::printf("acceptance: all 12 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
