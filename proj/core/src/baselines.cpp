#include "distmap/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace distmap {

RankHistogram marginal_histogram(const QDataset& data, int n_bins) {
  if (n_bins < 1)
    throw std::invalid_argument("marginal_histogram: n_bins must be positive");
  if (data.size() < static_cast<std::size_t>(10 * n_bins))
    throw std::invalid_argument(
        "marginal_histogram: need at least 10 records per bin");

  RankHistogram h;
  h.n_bins = n_bins;
  h.count = data.size();
  h.edges.resize(n_bins + 1);
  for (int b = 0; b <= n_bins; ++b)
    h.edges[b] = static_cast<double>(b) / n_bins;

  std::vector<std::size_t> counts(n_bins, 0);
  for (const QRecord& rec : data.records) {
    int b = static_cast<int>(rec.q * n_bins);
    b = std::min(n_bins - 1, std::max(0, b));
    ++counts[b];
  }
  const double width = 1.0 / n_bins;
  h.heights.resize(n_bins);
  for (int b = 0; b < n_bins; ++b)
    h.heights[b] =
        static_cast<double>(counts[b]) / (static_cast<double>(h.count) * width);
  return h;
}

std::pair<double, double> credible_interval(const ApproxPosterior& approx,
                                            const std::vector<double>& y,
                                            int coord, double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw std::invalid_argument("credible_interval: alpha must lie in (0,1)");
  if (!approx.inv_cdf)
    throw std::invalid_argument("credible_interval: approx has no inv_cdf");
  const double lo = approx.inv_cdf(y, coord, 0.5 * (1.0 - alpha));
  const double hi = approx.inv_cdf(y, coord, 0.5 * (1.0 + alpha));
  return {lo, hi};
}

CoverageEstimate operational_coverage(std::pair<double, double> interval,
                                      const Chain& exact_draws, int coord,
                                      double alpha) {
  if (!(interval.first < interval.second))
    throw std::invalid_argument("operational_coverage: empty interval");
  if (exact_draws.draws.size() < 1000)
    throw std::invalid_argument(
        "operational_coverage: need at least 1000 exact-posterior draws");

  std::size_t inside = 0;
  for (const auto& x : exact_draws.draws) {
    const double v = x.at(coord);
    if (v >= interval.first && v <= interval.second) ++inside;
  }
  const double n = static_cast<double>(exact_draws.draws.size());
  CoverageEstimate est;
  est.nominal = alpha;
  est.lo = interval.first;
  est.hi = interval.second;
  est.coverage = static_cast<double>(inside) / n;
  est.se = std::sqrt(est.coverage * (1.0 - est.coverage) / n);
  return est;
}

CoverageEstimate operational_coverage_exact(
    std::pair<double, double> interval,
    const std::function<double(double)>& exact_cdf, double alpha) {
  if (!(interval.first < interval.second))
    throw std::invalid_argument("operational_coverage_exact: empty interval");
  if (!exact_cdf)
    throw std::invalid_argument("operational_coverage_exact: null CDF");
  CoverageEstimate est;
  est.nominal = alpha;
  est.lo = interval.first;
  est.hi = interval.second;
  est.coverage = exact_cdf(interval.second) - exact_cdf(interval.first);
  est.se = 0.0;
  return est;
}

}  // namespace distmap
