#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "distmap/approximators.hpp"
#include "distmap/curve.hpp"
#include "distmap/generative.hpp"

namespace distmap {

struct ChainConfig {
  std::size_t n_steps = 0;
  std::size_t burn_in = 0;
  double step_sd = 1.0;
  std::uint64_t seed = 0;
  std::size_t thin = 1;
};

struct Chain {
  std::vector<std::vector<double>> draws;
  double acceptance_rate = 0.0;
  ChainConfig config;
};

// Random-walk Metropolis with isotropic Gaussian proposals. Returns the
// post-burn-in, thinned draws; requires (n_steps - burn_in)/thin >= 100.
Chain rwm_sample(const std::function<double(const std::vector<double>&)>& log_target,
                 std::vector<double> init, const ChainConfig& config);

// Doubling/halving pilot: adjusts step_sd until the acceptance rate of a
// short pilot chain lands in [0.2, 0.5]; the returned value is then frozen
// for the recorded run.
double tune_step_sd(
    const std::function<double(const std::vector<double>&)>& log_target,
    const std::vector<double>& init, double initial_sd, std::uint64_t seed);

// Brute-force ground-truth distortion curve: draw X ~ exact posterior at y
// (closed form when the model provides it, otherwise random-walk Metropolis
// on exact_log_posterior), push each draw through G_y, and return the ECDF
// of those PIT values on the standard grid.
DistortionCurve exact_distortion_oracle(const GenerativeModel& model,
                                        const ApproxPosterior& approx,
                                        const std::vector<double>& y, int coord,
                                        std::size_t n_draws,
                                        const ChainConfig& config);

}  // namespace distmap
