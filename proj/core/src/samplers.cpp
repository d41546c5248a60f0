#include "distmap/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "distmap/math.hpp"
#include "distmap/rng.hpp"

namespace distmap {

namespace {

void check_config(const ChainConfig& config) {
  if (config.n_steps == 0)
    throw std::invalid_argument("rwm_sample: n_steps must be positive");
  if (config.burn_in >= config.n_steps)
    throw std::invalid_argument("rwm_sample: burn_in must be below n_steps");
  if (config.thin == 0)
    throw std::invalid_argument("rwm_sample: thin must be positive");
  if (!(config.step_sd > 0.0))
    throw std::invalid_argument("rwm_sample: step_sd must be positive");
  if ((config.n_steps - config.burn_in) / config.thin < 100)
    throw std::invalid_argument(
        "rwm_sample: fewer than 100 recorded draws after burn-in/thinning");
}

}  // namespace

Chain rwm_sample(const std::function<double(const std::vector<double>&)>& log_target,
                 std::vector<double> init, const ChainConfig& config) {
  check_config(config);
  double lp = log_target(init);
  if (!std::isfinite(lp))
    throw std::invalid_argument("rwm_sample: log_target non-finite at init");

  RngStream rng(config.seed);
  const std::size_t dim = init.size();
  Chain chain;
  chain.config = config;
  chain.draws.reserve((config.n_steps - config.burn_in) / config.thin);

  std::vector<double> prop(dim);
  std::size_t accepted = 0;
  for (std::size_t step = 0; step < config.n_steps; ++step) {
    for (std::size_t j = 0; j < dim; ++j)
      prop[j] = init[j] + config.step_sd * rng.normal();
    const double lp_prop = log_target(prop);
    if (std::isnan(lp_prop))
      throw std::runtime_error("rwm_sample: NaN log_target at step " +
                               std::to_string(step));
    // Accept with probability min(1, exp(lp_prop - lp)).
    if (std::log(rng.uniform()) < lp_prop - lp) {
      init = prop;
      lp = lp_prop;
      ++accepted;
    }
    if (step >= config.burn_in && (step - config.burn_in) % config.thin == 0)
      chain.draws.push_back(init);
  }
  chain.acceptance_rate =
      static_cast<double>(accepted) / static_cast<double>(config.n_steps);
  return chain;
}

double tune_step_sd(
    const std::function<double(const std::vector<double>&)>& log_target,
    const std::vector<double>& init, double initial_sd, std::uint64_t seed) {
  if (!(initial_sd > 0.0))
    throw std::invalid_argument("tune_step_sd: initial_sd must be positive");
  double sd = initial_sd;
  for (int round = 0; round < 24; ++round) {
    ChainConfig pilot;
    pilot.n_steps = 2000;
    pilot.burn_in = 0;
    pilot.step_sd = sd;
    pilot.seed = seed + round;
    pilot.thin = 1;
    const Chain chain = rwm_sample(log_target, init, pilot);
    if (chain.acceptance_rate > 0.5)
      sd *= 2.0;
    else if (chain.acceptance_rate < 0.2)
      sd *= 0.5;
    else
      return sd;
  }
  return sd;
}

DistortionCurve exact_distortion_oracle(const GenerativeModel& model,
                                        const ApproxPosterior& approx,
                                        const std::vector<double>& y, int coord,
                                        std::size_t n_draws,
                                        const ChainConfig& config) {
  if (!approx.cdf)
    throw std::invalid_argument("exact_distortion_oracle: approx has no cdf");

  std::vector<double> pit;
  if (model.sample_exact_posterior) {
    if (n_draws < 100)
      throw std::invalid_argument("exact_distortion_oracle: n_draws too small");
    pit.resize(n_draws);
    for (std::size_t i = 0; i < n_draws; ++i) {
      RngStream rng = RngStream::substream(config.seed, i);
      const std::vector<double> x = model.sample_exact_posterior(y, rng);
      pit[i] = approx.cdf(y, coord, x[coord]);
    }
  } else {
    if (!model.exact_log_posterior)
      throw std::invalid_argument(
          "exact_distortion_oracle: model has no exact posterior");
    const auto target = [&](const std::vector<double>& x) {
      return model.exact_log_posterior(x, y);
    };
    const Chain chain =
        rwm_sample(target, std::vector<double>(model.param_dim, 0.0), config);
    pit.reserve(chain.draws.size());
    for (const auto& x : chain.draws) pit.push_back(approx.cdf(y, coord, x[coord]));
  }
  return curve_from_samples(std::move(pit));
}

}  // namespace distmap
