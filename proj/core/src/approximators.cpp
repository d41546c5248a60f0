#include "distmap/approximators.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>

#include "distmap/math.hpp"

namespace distmap {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clip_unit(double q, double eps) {
  return std::min(1.0 - eps, std::max(eps, q));
}

// Quantile transport q -> q + amplitude*sin(pi q) and its inverse (monotone
// for |amplitude| < 1/pi; inverted by safeguarded Newton).
double quantile_shift(double q, double amplitude) {
  return q + amplitude * std::sin(kPi * q);
}

double quantile_shift_inv(double p, double amplitude) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0, q = p;
  for (int it = 0; it < 100; ++it) {
    const double f = quantile_shift(q, amplitude) - p;
    if (f > 0.0)
      hi = q;
    else
      lo = q;
    const double slope = 1.0 + amplitude * kPi * std::cos(kPi * q);
    double next = q - f / slope;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - q) < 1e-15) return next;
    q = next;
  }
  return q;
}

std::uint64_t hash_key(const std::vector<double>& y, int coord) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ static_cast<std::uint64_t>(coord);
  for (double v : y) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h ^= bits;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const GaussianConjugate& require_conjugate(const GenerativeModel& model,
                                           const char* who) {
  if (!model.conjugate)
    throw std::invalid_argument(std::string(who) +
                                ": model has no closed-form Gaussian posterior");
  return *model.conjugate;
}

}  // namespace

double EcdfTable::eval(double x) const {
  const auto lo = std::lower_bound(sorted_samples.begin(), sorted_samples.end(), x);
  const auto hi = std::upper_bound(lo, sorted_samples.end(), x);
  const double below = static_cast<double>(lo - sorted_samples.begin());
  const double ties = static_cast<double>(hi - lo);
  const double r = below + 0.5 * ties;
  const double v = (r + 0.5) / (static_cast<double>(sorted_samples.size()) + 1.0);
  return clip_unit(v, eps_clip);
}

double EcdfTable::quantile(double q) const {
  const double m = static_cast<double>(sorted_samples.size());
  double t = q * (m + 1.0) - 0.5;  // inverse of the mid-rank position
  t = std::min(m - 1.0, std::max(0.0, t));
  const std::size_t i = static_cast<std::size_t>(t);
  const double frac = t - static_cast<double>(i);
  if (i + 1 >= sorted_samples.size()) return sorted_samples.back();
  return sorted_samples[i] * (1.0 - frac) + sorted_samples[i + 1] * frac;
}

EcdfTable ecdf_from_samples(std::vector<double> samples, double eps_clip) {
  if (samples.size() < 2)
    throw std::invalid_argument("ecdf_from_samples: need at least 2 samples");
  if (!(eps_clip > 0.0) || eps_clip > 0.01)
    throw std::invalid_argument("ecdf_from_samples: eps_clip must be in (0, 0.01]");
  for (double v : samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("ecdf_from_samples: non-finite sample");
  std::sort(samples.begin(), samples.end());
  return EcdfTable{std::move(samples), eps_clip};
}

QDataset compute_q(const SimBatch& batch, const ApproxPosterior& approx,
                   int coord, double eps_clip) {
  if (batch.pairs.empty())
    throw std::invalid_argument("compute_q: empty batch");
  if (!approx.cdf) throw std::invalid_argument("compute_q: approx has no cdf");
  if (coord < 0 ||
      coord >= static_cast<int>(batch.pairs.front().x.size()))
    throw std::invalid_argument("compute_q: coordinate out of range");

  QDataset out;
  out.records.resize(batch.pairs.size());
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    const SimPair& p = batch.pairs[i];
    const double q = approx.cdf(p.y, coord, p.x[coord]);
    if (!std::isfinite(q))
      throw std::runtime_error("compute_q: non-finite CDF value at index " +
                               std::to_string(i));
    out.records[i].q = clip_unit(q, eps_clip);
    out.records[i].input = p.s;
  }
  return out;
}

ApproxPosterior mis_specified_gaussian(const GenerativeModel& model,
                                       double mean_shift, double sd_scale) {
  const GaussianConjugate cj = require_conjugate(model, "mis_specified_gaussian");
  if (!(sd_scale > 0.0))
    throw std::invalid_argument("mis_specified_gaussian: sd_scale must be positive");

  const double sd = sd_scale * std::sqrt(cj.posterior_var());
  ApproxPosterior ap;
  ap.kind = "analytic";
  ap.cdf = [cj, mean_shift, sd](const std::vector<double>& y, int coord,
                                double x) {
    const double mu = cj.posterior_mean(y.at(coord)) + mean_shift;
    return math::norm_cdf((x - mu) / sd);
  };
  ap.inv_cdf = [cj, mean_shift, sd](const std::vector<double>& y, int coord,
                                    double q) {
    const double mu = cj.posterior_mean(y.at(coord)) + mean_shift;
    return mu + sd * math::norm_ppf(q);
  };
  // Coordinates are independent under this family, so the conditional CDF of
  // coordinate 1 given coordinate 0 is its marginal.
  ap.conditional_cdf = [cj, mean_shift, sd](const std::vector<double>& y,
                                            double /*x1*/, double x2) {
    const double mu = cj.posterior_mean(y.at(1)) + mean_shift;
    return math::norm_cdf((x2 - mu) / sd);
  };
  ap.log_pdf = [cj, mean_shift, sd](const std::vector<double>& y, int coord,
                                    double x) {
    const double mu = cj.posterior_mean(y.at(coord)) + mean_shift;
    return math::norm_logpdf(x, mu, sd);
  };
  return ap;
}

ApproxPosterior exact_posterior_approx(const GenerativeModel& model) {
  return mis_specified_gaussian(model, 0.0, 1.0);
}

ApproxPosterior sign_flip_quantile_shift(const GenerativeModel& model,
                                         double amplitude, double flip_point) {
  const GaussianConjugate cj =
      require_conjugate(model, "sign_flip_quantile_shift");
  if (!(std::fabs(amplitude) < 1.0 / kPi))
    throw std::invalid_argument(
        "sign_flip_quantile_shift: |amplitude| must be below 1/pi");

  const double sd = std::sqrt(cj.posterior_var());
  const auto signed_amp = [amplitude, flip_point](double y0) {
    return y0 >= flip_point ? amplitude : -amplitude;
  };
  ApproxPosterior ap;
  ap.kind = "analytic";
  // G_y(x) = T^{-1}(F_y(x)) with T(q) = q + a sin(pi q): the induced
  // distortion map F_y o G_y^{-1} is exactly T, with the sign of a flipping
  // across flip_point.
  ap.cdf = [cj, sd, signed_amp](const std::vector<double>& y, int coord,
                                double x) {
    const double f = math::norm_cdf((x - cj.posterior_mean(y.at(coord))) / sd);
    return quantile_shift_inv(f, signed_amp(y.at(coord)));
  };
  ap.inv_cdf = [cj, sd, signed_amp](const std::vector<double>& y, int coord,
                                    double q) {
    const double f = quantile_shift(q, signed_amp(y.at(coord)));
    return cj.posterior_mean(y.at(coord)) + sd * math::norm_ppf(f);
  };
  return ap;
}

ApproxPosterior ecdf_approx(
    std::function<double(const std::vector<double>& y, int coord, RngStream&)>
        sampler,
    std::size_t n_samples, double eps_clip, std::uint64_t seed) {
  if (!sampler) throw std::invalid_argument("ecdf_approx: null sampler");
  if (n_samples < 2)
    throw std::invalid_argument("ecdf_approx: need at least 2 samples");

  struct Cache {
    std::mutex mu;
    std::map<std::pair<std::uint64_t, int>, std::shared_ptr<const EcdfTable>>
        tables;
  };
  auto cache = std::make_shared<Cache>();
  auto table_for = [cache, sampler, n_samples, eps_clip, seed](
                       const std::vector<double>& y, int coord) {
    const std::uint64_t key = hash_key(y, coord);
    {
      std::lock_guard<std::mutex> lock(cache->mu);
      auto it = cache->tables.find({key, coord});
      if (it != cache->tables.end()) return it->second;
    }
    RngStream rng = RngStream::substream(seed, key);
    std::vector<double> draws(n_samples);
    for (double& d : draws) d = sampler(y, coord, rng);
    auto table = std::make_shared<const EcdfTable>(
        ecdf_from_samples(std::move(draws), eps_clip));
    std::lock_guard<std::mutex> lock(cache->mu);
    return cache->tables.emplace(std::make_pair(key, coord), table)
        .first->second;
  };

  ApproxPosterior ap;
  ap.kind = "ecdf";
  ap.cdf = [table_for](const std::vector<double>& y, int coord, double x) {
    return table_for(y, coord)->eval(x);
  };
  ap.inv_cdf = [table_for](const std::vector<double>& y, int coord, double q) {
    return table_for(y, coord)->quantile(q);
  };
  return ap;
}

ViFit vi_logistic_fit(const std::vector<double>& y,
                      const std::vector<std::vector<double>>& design,
                      double prior_var) {
  const std::size_t n_obs = design.size();
  if (n_obs == 0) throw std::invalid_argument("vi_logistic_fit: empty design");
  const std::size_t p = design[0].size();
  if (y.size() != n_obs)
    throw std::invalid_argument("vi_logistic_fit: y/design size mismatch");
  if (!(prior_var > 0.0))
    throw std::invalid_argument("vi_logistic_fit: prior_var must be positive");

  const auto lambda = [](double xi) {
    if (std::fabs(xi) < 1e-8) return 0.125;  // limit of tanh(xi/2)/(4 xi)
    return std::tanh(0.5 * xi) / (4.0 * xi);
  };

  std::vector<double> xi(n_obs, 1.0);
  ViFit fit;
  fit.mean.assign(p, 0.0);
  fit.cov.assign(p * p, 0.0);

  std::vector<double> prec(p * p, 0.0);
  std::vector<double> xty(p, 0.0);
  for (std::size_t j = 0; j < n_obs; ++j)
    for (std::size_t k = 0; k < p; ++k)
      xty[k] += (y[j] - 0.5) * design[j][k];

  constexpr int kMaxIter = 500;
  constexpr double kTol = 1e-8;
  double residual = 0.0;
  for (int it = 0; it < kMaxIter; ++it) {
    // Gaussian update for the current bound: S^{-1} = I/prior_var +
    // 2 sum_j lambda(xi_j) x_j x_j^T, m = S X^T (y - 1/2).
    std::fill(prec.begin(), prec.end(), 0.0);
    for (std::size_t k = 0; k < p; ++k) prec[k * p + k] = 1.0 / prior_var;
    for (std::size_t j = 0; j < n_obs; ++j) {
      const double w = 2.0 * lambda(xi[j]);
      for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < p; ++b)
          prec[a * p + b] += w * design[j][a] * design[j][b];
    }
    const math::Cholesky fact = math::cholesky(prec, p);
    if (!fact.ok)
      throw std::runtime_error("vi_logistic_fit: precision not positive definite");
    fit.mean = math::chol_solve(fact, xty);
    fit.cov = math::chol_inverse(fact);

    // Bound value at (m, S, xi); coordinate ascent keeps it nondecreasing.
    double elbo = 0.0;
    for (std::size_t k = 0; k < p; ++k)
      elbo += fit.mean[k] * xty[k];  // = 1/2 m^T S^{-1} m since m = S xty
    elbo *= 0.5;
    elbo -= 0.5 * (chol_logdet(fact) + static_cast<double>(p) * std::log(prior_var));
    for (std::size_t j = 0; j < n_obs; ++j)
      elbo += std::log(math::sigmoid(xi[j])) - 0.5 * xi[j] +
              lambda(xi[j]) * xi[j] * xi[j];
    fit.elbo_trace.push_back(elbo);

    // xi_j^2 = x_j^T (S + m m^T) x_j.
    residual = 0.0;
    for (std::size_t j = 0; j < n_obs; ++j) {
      double quad = 0.0, dot = 0.0;
      for (std::size_t a = 0; a < p; ++a) {
        dot += design[j][a] * fit.mean[a];
        for (std::size_t b = 0; b < p; ++b)
          quad += design[j][a] * fit.cov[a * p + b] * design[j][b];
      }
      const double next = std::sqrt(quad + dot * dot);
      residual = std::max(residual, std::fabs(next - xi[j]));
      xi[j] = next;
    }
    fit.iterations = it + 1;
    if (residual < kTol) return fit;
  }
  throw std::runtime_error(
      "vi_logistic_fit: no convergence after 500 iterations (last residual " +
      std::to_string(residual) + ")");
}

ApproxPosterior vi_logistic(const std::vector<std::vector<double>>& design,
                            double prior_var) {
  struct Cache {
    std::mutex mu;
    std::map<std::vector<double>, std::shared_ptr<const ViFit>> fits;
  };
  auto cache = std::make_shared<Cache>();
  auto fit_for = [cache, design, prior_var](const std::vector<double>& y) {
    {
      std::lock_guard<std::mutex> lock(cache->mu);
      auto it = cache->fits.find(y);
      if (it != cache->fits.end()) return it->second;
    }
    auto fit =
        std::make_shared<const ViFit>(vi_logistic_fit(y, design, prior_var));
    std::lock_guard<std::mutex> lock(cache->mu);
    return cache->fits.emplace(y, fit).first->second;
  };

  const std::size_t p = design.empty() ? 0 : design[0].size();
  ApproxPosterior ap;
  ap.kind = "analytic";
  ap.cdf = [fit_for, p](const std::vector<double>& y, int coord, double x) {
    const auto fit = fit_for(y);
    const double sd = std::sqrt(fit->cov[coord * p + coord]);
    return math::norm_cdf((x - fit->mean[coord]) / sd);
  };
  ap.inv_cdf = [fit_for, p](const std::vector<double>& y, int coord, double q) {
    const auto fit = fit_for(y);
    const double sd = std::sqrt(fit->cov[coord * p + coord]);
    return fit->mean[coord] + sd * math::norm_ppf(q);
  };
  ap.conditional_cdf = [fit_for, p](const std::vector<double>& y, double x1,
                                    double x2) {
    const auto fit = fit_for(y);
    const double s00 = fit->cov[0];
    const double s01 = fit->cov[1];
    const double s11 = fit->cov[p + 1];
    const double mu = fit->mean[1] + s01 / s00 * (x1 - fit->mean[0]);
    const double sd = std::sqrt(s11 - s01 * s01 / s00);
    return math::norm_cdf((x2 - mu) / sd);
  };
  ap.log_pdf = [fit_for, p](const std::vector<double>& y, int coord, double x) {
    const auto fit = fit_for(y);
    const double sd = std::sqrt(fit->cov[coord * p + coord]);
    return math::norm_logpdf(x, fit->mean[coord], sd);
  };
  return ap;
}

}  // namespace distmap
