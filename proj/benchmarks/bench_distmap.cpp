// Throughput of the hot paths: special functions, network forward/backward,
// the windowing and PIT stages, the samplers, and one small end-to-end fit.

#include <benchmark/benchmark.h>

#include <cmath>
#include <utility>

#include "distmap/betamdn.hpp"
#include "distmap/distortion.hpp"
#include "distmap/generative.hpp"
#include "distmap/math.hpp"
#include "distmap/rng.hpp"
#include "distmap/samplers.hpp"

using namespace distmap;

namespace {

GenerativeModel model() { return gaussian_conjugate_model(0.0, 1.0, 1.0); }

QDataset synthetic_dataset(std::size_t n) {
  QDataset data;
  RngStream rng(7);
  data.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    QRecord rec;
    rec.q = rng.uniform(1e-3, 1.0 - 1e-3);
    rec.input = {rng.normal()};
    data.records.push_back(std::move(rec));
  }
  return data;
}

void BM_IncBeta(benchmark::State& state) {
  double x = 0.0;
  for (auto _ : state) {
    x += 0.001;
    if (x > 0.999) x = 0.001;
    benchmark::DoNotOptimize(math::inc_beta(2.5, 3.5, x));
  }
}
BENCHMARK(BM_IncBeta);

void BM_IncBetaInv(benchmark::State& state) {
  double p = 0.0;
  for (auto _ : state) {
    p += 0.001;
    if (p > 0.999) p = 0.001;
    benchmark::DoNotOptimize(math::inc_beta_inv(2.5, 3.5, p));
  }
}
BENCHMARK(BM_IncBetaInv);

void BM_NormPpf(benchmark::State& state) {
  double p = 0.0;
  for (auto _ : state) {
    p += 0.001;
    if (p > 0.999) p = 0.001;
    benchmark::DoNotOptimize(math::norm_ppf(p));
  }
}
BENCHMARK(BM_NormPpf);

void BM_NetForward(benchmark::State& state) {
  NetConfig cfg;  // default topology: 1 -> 80 -> 80 -> heads
  const NetParams params = init_params(cfg);
  const std::vector<double> input{0.3};
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, input));
}
BENCHMARK(BM_NetForward);

void BM_GradMinibatch(benchmark::State& state) {
  NetConfig cfg;
  const NetParams params = init_params(cfg);
  const QDataset data = synthetic_dataset(256);  // one Adam step's worth
  for (auto _ : state) benchmark::DoNotOptimize(grad(params, data));
}
BENCHMARK(BM_GradMinibatch)->Unit(benchmark::kMicrosecond);

void BM_WindowSelect(benchmark::State& state) {
  const SimBatch batch = sample_generative(model(), 100000, 3);
  Window w;
  w.center = {0.3};
  w.keep_fraction = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(window_select(batch, w));
}
BENCHMARK(BM_WindowSelect)->Unit(benchmark::kMillisecond);

void BM_ComputeQ(benchmark::State& state) {
  const GenerativeModel m = model();
  const SimBatch batch = sample_generative(m, 10000, 3);
  const ApproxPosterior approx = mis_specified_gaussian(m, 0.0, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(compute_q(batch, approx, 0));
}
BENCHMARK(BM_ComputeQ)->Unit(benchmark::kMillisecond);

void BM_RwmSample(benchmark::State& state) {
  const auto target = [](const std::vector<double>& x) {
    return -0.5 * x[0] * x[0];
  };
  ChainConfig cfg;
  cfg.n_steps = 20000;
  cfg.burn_in = 1000;
  cfg.step_sd = 2.4;
  cfg.seed = 11;
  for (auto _ : state)
    benchmark::DoNotOptimize(rwm_sample(target, {0.0}, cfg));
}
BENCHMARK(BM_RwmSample)->Unit(benchmark::kMillisecond);

void BM_KlBetweenCurves(benchmark::State& state) {
  const DistortionCurve p = curve_from_cdf(
      [](double q) { return math::inc_beta(2.0, 2.0, q); },
      [](double q) { return 6.0 * q * (1.0 - q); });
  const DistortionCurve q = identity_curve();
  for (auto _ : state) benchmark::DoNotOptimize(kl_between_curves(p, q));
}
BENCHMARK(BM_KlBetweenCurves)->Unit(benchmark::kMicrosecond);

void BM_FitSmall(benchmark::State& state) {
  const GenerativeModel m = model();
  const ApproxPosterior approx = mis_specified_gaussian(m, 0.0, 0.5);
  Window w;
  w.keep_fraction = 0.5;
  NetConfig nc;
  nc.hidden_widths = {16, 16};
  TrainConfig tc;
  tc.max_epochs = 30;
  tc.batch_size = 256;
  for (auto _ : state) {
    auto fitted = fit_distortion(m, approx, {0.3}, 0, 4000, w, nc, tc);
    benchmark::DoNotOptimize(fitted);
  }
}
BENCHMARK(BM_FitSmall)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
