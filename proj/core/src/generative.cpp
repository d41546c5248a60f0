#include "distmap/generative.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "distmap/math.hpp"

namespace distmap {

SimBatch sample_generative(const GenerativeModel& model, std::size_t n,
                           std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_generative: n must be >= 1");
  if (!model.sample_prior || !model.sample_data || !model.summary)
    throw std::invalid_argument("sample_generative: model is incomplete");

  SimBatch batch;
  batch.seed = seed;
  batch.model_id = model.id;
  batch.pairs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng = RngStream::substream(seed, i);
    SimPair& p = batch.pairs[i];
    p.x = model.sample_prior(rng);
    for (double v : p.x)
      if (!std::isfinite(v))
        throw std::runtime_error("sample_generative: non-finite prior draw at index " +
                                 std::to_string(i));
    p.y = model.sample_data(p.x, rng);
    for (double v : p.y)
      if (!std::isfinite(v))
        throw std::runtime_error("sample_generative: non-finite data draw at index " +
                                 std::to_string(i));
    p.s = model.summary(p.y);
  }
  return batch;
}

SimBatch window_select(const SimBatch& batch, const Window& window) {
  if (batch.pairs.empty())
    throw std::invalid_argument("window_select: empty batch");
  const std::size_t dim = window.center.size();
  for (const SimPair& p : batch.pairs)
    if (p.s.size() != dim)
      throw std::invalid_argument("window_select: summary dimension mismatch");
  if (!(window.keep_fraction > 0.0) || window.keep_fraction > 1.0)
    throw std::invalid_argument("window_select: keep_fraction must be in (0,1]");

  const std::size_t n = batch.pairs.size();
  const std::size_t keep = std::min(
      n, static_cast<std::size_t>(std::ceil(window.keep_fraction * n)));
  if (keep == n) return batch;

  // Optional per-coordinate z-scoring of the distance metric using batch
  // statistics (the window center is transformed with the same statistics).
  std::vector<double> mean(dim, 0.0), sd(dim, 1.0);
  if (window.standardize) {
    for (const SimPair& p : batch.pairs)
      for (std::size_t j = 0; j < dim; ++j) mean[j] += p.s[j];
    for (std::size_t j = 0; j < dim; ++j) mean[j] /= n;
    std::vector<double> ss(dim, 0.0);
    for (const SimPair& p : batch.pairs)
      for (std::size_t j = 0; j < dim; ++j) {
        const double c = p.s[j] - mean[j];
        ss[j] += c * c;
      }
    for (std::size_t j = 0; j < dim; ++j) {
      sd[j] = std::sqrt(ss[j] / (n > 1 ? n - 1 : 1));
      if (!(sd[j] > 0.0)) sd[j] = 1.0;
    }
  }

  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      double diff = batch.pairs[i].s[j] - window.center[j];
      if (window.standardize) diff /= sd[j];
      acc += diff * diff;
    }
    dist[i] = acc;
  }

  // Select the keep smallest distances; ties go to the lower index because
  // nth_element is run on (distance, index) pairs.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + keep - 1, order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (dist[a] != dist[b]) return dist[a] < dist[b];
                     return a < b;
                   });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  SimBatch out;
  out.seed = batch.seed;
  out.model_id = batch.model_id;
  out.pairs.reserve(keep);
  for (std::size_t idx : order) out.pairs.push_back(batch.pairs[idx]);
  return out;
}

GenerativeModel gaussian_conjugate_model(double prior_mean, double prior_var,
                                         double noise_var) {
  if (!(prior_var > 0.0) || !(noise_var > 0.0))
    throw std::invalid_argument(
        "gaussian_conjugate_model: variances must be positive");

  GenerativeModel m;
  m.id = "conjugate";
  m.param_dim = 1;
  m.data_dim = 1;
  m.summary_dim = 1;
  GaussianConjugate cj{prior_mean, prior_var, noise_var};
  m.conjugate = cj;

  const double prior_sd = std::sqrt(prior_var);
  const double noise_sd = std::sqrt(noise_var);
  m.sample_prior = [prior_mean, prior_sd](RngStream& rng) {
    return std::vector<double>{rng.normal(prior_mean, prior_sd)};
  };
  m.sample_data = [noise_sd](const std::vector<double>& x, RngStream& rng) {
    return std::vector<double>{rng.normal(x[0], noise_sd)};
  };
  m.summary = [](const std::vector<double>& y) { return y; };
  m.exact_log_posterior = [cj](const std::vector<double>& x,
                               const std::vector<double>& y) {
    const double sd = std::sqrt(cj.posterior_var());
    return math::norm_logpdf(x[0], cj.posterior_mean(y[0]), sd);
  };
  m.sample_exact_posterior = [cj](const std::vector<double>& y,
                                  RngStream& rng) {
    const double sd = std::sqrt(cj.posterior_var());
    return std::vector<double>{rng.normal(cj.posterior_mean(y[0]), sd)};
  };
  return m;
}

GenerativeModel gaussian_conjugate_model_2d(double prior_mean,
                                            double prior_var,
                                            double noise_var) {
  if (!(prior_var > 0.0) || !(noise_var > 0.0))
    throw std::invalid_argument(
        "gaussian_conjugate_model_2d: variances must be positive");

  GenerativeModel m;
  m.id = "conjugate2d";
  m.param_dim = 2;
  m.data_dim = 2;
  m.summary_dim = 2;
  GaussianConjugate cj{prior_mean, prior_var, noise_var};
  m.conjugate = cj;

  const double prior_sd = std::sqrt(prior_var);
  const double noise_sd = std::sqrt(noise_var);
  m.sample_prior = [prior_mean, prior_sd](RngStream& rng) {
    return std::vector<double>{rng.normal(prior_mean, prior_sd),
                               rng.normal(prior_mean, prior_sd)};
  };
  m.sample_data = [noise_sd](const std::vector<double>& x, RngStream& rng) {
    return std::vector<double>{rng.normal(x[0], noise_sd),
                               rng.normal(x[1], noise_sd)};
  };
  m.summary = [](const std::vector<double>& y) { return y; };
  m.exact_log_posterior = [cj](const std::vector<double>& x,
                               const std::vector<double>& y) {
    const double sd = std::sqrt(cj.posterior_var());
    return math::norm_logpdf(x[0], cj.posterior_mean(y[0]), sd) +
           math::norm_logpdf(x[1], cj.posterior_mean(y[1]), sd);
  };
  m.sample_exact_posterior = [cj](const std::vector<double>& y,
                                  RngStream& rng) {
    const double sd = std::sqrt(cj.posterior_var());
    return std::vector<double>{rng.normal(cj.posterior_mean(y[0]), sd),
                               rng.normal(cj.posterior_mean(y[1]), sd)};
  };
  return m;
}

GenerativeModel logistic_model(const std::vector<std::vector<double>>& design,
                               double prior_var) {
  if (design.empty())
    throw std::invalid_argument("logistic_model: empty design matrix");
  const std::size_t n_obs = design.size();
  const std::size_t p_reg = design[0].size();
  if (p_reg == 0)
    throw std::invalid_argument("logistic_model: design has zero columns");
  for (const auto& row : design) {
    if (row.size() != p_reg)
      throw std::invalid_argument("logistic_model: ragged design matrix");
    for (double v : row)
      if (!std::isfinite(v))
        throw std::invalid_argument("logistic_model: non-finite design entry");
  }
  if (!(prior_var > 0.0))
    throw std::invalid_argument("logistic_model: prior_var must be positive");

  GenerativeModel m;
  m.id = "logistic";
  m.param_dim = static_cast<int>(p_reg);
  m.data_dim = static_cast<int>(n_obs);
  m.summary_dim = static_cast<int>(n_obs);

  const double prior_sd = std::sqrt(prior_var);
  m.sample_prior = [p_reg, prior_sd](RngStream& rng) {
    std::vector<double> beta(p_reg);
    for (double& b : beta) b = rng.normal(0.0, prior_sd);
    return beta;
  };
  m.sample_data = [design](const std::vector<double>& beta, RngStream& rng) {
    std::vector<double> y(design.size());
    for (std::size_t j = 0; j < design.size(); ++j) {
      double eta = 0.0;
      for (std::size_t k = 0; k < beta.size(); ++k)
        eta += design[j][k] * beta[k];
      y[j] = (rng.uniform() < math::sigmoid(eta)) ? 1.0 : 0.0;
    }
    return y;
  };
  m.summary = [](const std::vector<double>& y) { return y; };
  m.exact_log_posterior = [design, prior_var](const std::vector<double>& beta,
                                              const std::vector<double>& y) {
    double lp = 0.0;
    for (double b : beta) lp -= 0.5 * b * b / prior_var;
    for (std::size_t j = 0; j < design.size(); ++j) {
      double eta = 0.0;
      for (std::size_t k = 0; k < beta.size(); ++k)
        eta += design[j][k] * beta[k];
      lp += y[j] * eta - math::softplus(eta);
    }
    return lp;
  };
  return m;
}

std::vector<std::vector<double>> uniform_design(int n_obs, int p_reg,
                                                std::uint64_t seed) {
  if (n_obs < 1 || p_reg < 1)
    throw std::invalid_argument("uniform_design: dimensions must be positive");
  std::vector<std::vector<double>> design(n_obs, std::vector<double>(p_reg));
  RngStream rng(seed);
  for (auto& row : design)
    for (double& v : row) v = rng.uniform();
  return design;
}

}  // namespace distmap
