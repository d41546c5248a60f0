#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "distmap/rng.hpp"

namespace distmap {

// Closed-form Gaussian posterior data for the conjugate oracle models:
// x ~ N(prior_mean, prior_var) per coordinate, y|x ~ N(x, noise_var).
struct GaussianConjugate {
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double noise_var = 1.0;

  double posterior_var() const {
    return 1.0 / (1.0 / prior_var + 1.0 / noise_var);
  }
  double posterior_mean(double y) const {
    return posterior_var() * (prior_mean / prior_var + y / noise_var);
  }
};

// Generative-model abstraction: prior sampler, likelihood sampler, summary
// statistic, and (for oracle models only) the exact log-posterior.
struct GenerativeModel {
  std::string id;
  int param_dim = 0;
  int data_dim = 0;
  int summary_dim = 0;

  std::function<std::vector<double>(RngStream&)> sample_prior;
  std::function<std::vector<double>(const std::vector<double>& x, RngStream&)>
      sample_data;
  std::function<std::vector<double>(const std::vector<double>& y)> summary;

  // Unnormalized log pi(x|y); empty for models without an oracle density.
  std::function<double(const std::vector<double>& x,
                       const std::vector<double>& y)>
      exact_log_posterior;

  // Direct exact-posterior sampler where closed forms exist.
  std::function<std::vector<double>(const std::vector<double>& y, RngStream&)>
      sample_exact_posterior;

  // Set for conjugate-Gaussian models (shared across iid coordinates).
  std::optional<GaussianConjugate> conjugate;
};

struct SimPair {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> s;
};

struct SimBatch {
  std::vector<SimPair> pairs;
  std::uint64_t seed = 0;
  std::string model_id;

  std::size_t size() const { return pairs.size(); }
};

// Neighborhood of y_obs in summary space: keep the nearest fraction of a
// batch by Euclidean distance, optionally on z-scored coordinates.
struct Window {
  std::vector<double> center;
  double keep_fraction = 1.0;
  bool standardize = false;
};

// Draw n iid pairs (x, y, s(y)). Each record uses its own RNG substream, so
// the result is independent of evaluation order.
SimBatch sample_generative(const GenerativeModel& model, std::size_t n,
                           std::uint64_t seed);

// Keep the ceil(keep_fraction * n) pairs closest to window.center, ties
// broken toward lower generation index; generation order is preserved.
SimBatch window_select(const SimBatch& batch, const Window& window);

// Scalar conjugate-Gaussian model: x ~ N(prior_mean, prior_var),
// y|x ~ N(x, noise_var), s(y) = y.
GenerativeModel gaussian_conjugate_model(double prior_mean, double prior_var,
                                         double noise_var);

// Two iid copies of the scalar conjugate model: x in R^2, y in R^2, s(y) = y.
GenerativeModel gaussian_conjugate_model_2d(double prior_mean,
                                            double prior_var,
                                            double noise_var);

// Bayesian logistic regression: beta ~ N(0, prior_var I), y_j ~
// Bernoulli(sigmoid(design_j . beta)), s(y) = y.
GenerativeModel logistic_model(const std::vector<std::vector<double>>& design,
                               double prior_var);

// Design matrix with iid U(0,1) entries, n_obs rows and p_reg columns.
std::vector<std::vector<double>> uniform_design(int n_obs, int p_reg,
                                                std::uint64_t seed);

}  // namespace distmap
