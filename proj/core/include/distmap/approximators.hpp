#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "distmap/generative.hpp"

namespace distmap {

// Approximate posterior G_y presented through its marginal CDFs. The cdf /
// inv_cdf / log_pdf capabilities take the data vector y so one object covers
// the whole y-indexed family; conditional_cdf supports the bivariate
// extension (coordinate 2 given coordinate 1).
struct ApproxPosterior {
  std::string kind = "analytic";  // "analytic" or "ecdf"

  std::function<double(const std::vector<double>& y, int coord, double x)> cdf;
  std::function<double(const std::vector<double>& y, int coord, double q)>
      inv_cdf;
  std::function<double(const std::vector<double>& y, double x1, double x2)>
      conditional_cdf;
  std::function<double(const std::vector<double>& y, int coord, double x)>
      log_pdf;
};

// Empirical CDF with mid-rank convention: eval(x) = (r + 0.5)/(M + 1) where
// r = #{samples < x} + 0.5 #{samples = x}, clipped into
// [eps_clip, 1 - eps_clip] so downstream Beta likelihoods stay finite.
struct EcdfTable {
  std::vector<double> sorted_samples;
  double eps_clip = 1e-6;

  double eval(double x) const;
  // Order-statistic quantile (generalized inverse of eval).
  double quantile(double q) const;
};

EcdfTable ecdf_from_samples(std::vector<double> samples, double eps_clip);

// One PIT record: q = G_y(x_coord) plus the regression input (the summary
// s(y), or (x1, s(y)) for the conditional dataset of the bivariate fit).
struct QRecord {
  double q = 0.0;
  std::vector<double> input;
};

struct QDataset {
  std::vector<QRecord> records;
  Window window;

  std::size_t size() const { return records.size(); }
  int input_dim() const {
    return records.empty() ? 0 : static_cast<int>(records[0].input.size());
  }
};

// PIT pass of the pipeline: q_i = G_{y_i}(x_{i,coord}) clipped into
// (eps_clip, 1 - eps_clip), paired with s(y_i).
QDataset compute_q(const SimBatch& batch, const ApproxPosterior& approx,
                   int coord, double eps_clip = 1e-6);

// Gaussian family around the conjugate model's exact posterior with the mean
// translated by mean_shift and the sd multiplied by sd_scale. (0, 1) is the
// exact posterior itself. Requires model.conjugate.
ApproxPosterior mis_specified_gaussian(const GenerativeModel& model,
                                       double mean_shift, double sd_scale);

// Shorthand for mis_specified_gaussian(model, 0, 1).
ApproxPosterior exact_posterior_approx(const GenerativeModel& model);

// Approximation whose distortion flips direction across flip_point: for data
// with y[coord] above flip_point the map transports quantiles up by
// amplitude*sin(pi q), below it down by the same amount. Pooled over a
// window balanced around flip_point the PIT values are exactly uniform even
// though every single-y distortion is far from the identity — the
// worked counter-example for averaged diagnostics. Requires model.conjugate.
ApproxPosterior sign_flip_quantile_shift(const GenerativeModel& model,
                                         double amplitude, double flip_point);

// ECDF-backed approximation: marginal CDFs are mid-rank empirical CDFs over
// n_samples draws from the supplied per-(y, coord) sampler, memoized per
// distinct (y, coord) with deterministic substreams.
ApproxPosterior ecdf_approx(
    std::function<double(const std::vector<double>& y, int coord, RngStream&)>
        sampler,
    std::size_t n_samples, double eps_clip, std::uint64_t seed);

// Variational Gaussian fit for Bayesian logistic regression (quadratic
// tangent bound, coordinate ascent in the variational parameters).
struct ViFit {
  std::vector<double> mean;
  std::vector<double> cov;  // row-major p x p
  std::vector<double> elbo_trace;
  int iterations = 0;
};

ViFit vi_logistic_fit(const std::vector<double>& y,
                      const std::vector<std::vector<double>>& design,
                      double prior_var);

// The y-indexed family of VI fits as an ApproxPosterior (fits are memoized
// per distinct y). Marginals are N(m_j, S_jj); conditional_cdf is the
// Gaussian conditional of coordinate 1 given coordinate 0.
ApproxPosterior vi_logistic(const std::vector<std::vector<double>>& design,
                            double prior_var);

}  // namespace distmap
