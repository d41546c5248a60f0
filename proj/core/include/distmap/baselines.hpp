#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "distmap/approximators.hpp"
#include "distmap/samplers.hpp"

namespace distmap {

// Density-normalized histogram of PIT values pooled over the window — the
// averaged diagnostic the conditional map is compared against.
struct RankHistogram {
  int n_bins = 20;
  std::vector<double> edges;    // n_bins + 1 uniform edges over [0,1]
  std::vector<double> heights;  // density scale: sum(h * width) = 1
  std::size_t count = 0;
};

RankHistogram marginal_histogram(const QDataset& data, int n_bins = 20);

// Equal-tail credible interval of the approximation at level alpha.
std::pair<double, double> credible_interval(const ApproxPosterior& approx,
                                            const std::vector<double>& y,
                                            int coord, double alpha);

struct CoverageEstimate {
  double nominal = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double coverage = 0.0;
  double se = 0.0;
};

// Probability the exact posterior assigns to the approximate interval,
// estimated from exact-posterior draws (binomial SE) ...
CoverageEstimate operational_coverage(std::pair<double, double> interval,
                                      const Chain& exact_draws, int coord,
                                      double alpha);

// ... or computed in closed form from the exact marginal CDF (SE = 0).
CoverageEstimate operational_coverage_exact(
    std::pair<double, double> interval,
    const std::function<double(double)>& exact_cdf, double alpha);

}  // namespace distmap
