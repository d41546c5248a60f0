#include "distmap/curve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace distmap {

std::vector<double> curve_grid() {
  std::vector<double> g(DistortionCurve::kGridSize);
  for (int i = 0; i < DistortionCurve::kGridSize; ++i)
    g[i] = static_cast<double>(i) / (DistortionCurve::kGridSize - 1);
  return g;
}

DistortionCurve curve_from_cdf(const std::function<double(double)>& cdf,
                               const std::function<double(double)>& density) {
  DistortionCurve c;
  c.q_grid = curve_grid();
  c.D_values.resize(c.q_grid.size());
  c.d_values.resize(c.q_grid.size());
  for (std::size_t i = 0; i < c.q_grid.size(); ++i) {
    const double q = c.q_grid[i];
    c.D_values[i] = cdf(q);
    const double qc = std::min(1.0 - 1e-6, std::max(1e-6, q));
    c.d_values[i] = density(qc);
  }
  c.D_values.front() = 0.0;
  c.D_values.back() = 1.0;
  return c;
}

DistortionCurve curve_from_samples(std::vector<double> values) {
  if (values.size() < 2)
    throw std::invalid_argument("curve_from_samples: need at least 2 values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());

  DistortionCurve c;
  c.q_grid = curve_grid();
  c.D_values.resize(c.q_grid.size());
  for (std::size_t i = 0; i < c.q_grid.size(); ++i) {
    const auto it =
        std::upper_bound(values.begin(), values.end(), c.q_grid[i]);
    c.D_values[i] = static_cast<double>(it - values.begin()) / n;
  }
  c.D_values.front() = 0.0;
  c.D_values.back() = 1.0;

  // Density as the symmetric difference quotient of the empirical CDF.
  c.d_values.resize(c.q_grid.size());
  const double h = c.q_grid[1] - c.q_grid[0];
  for (std::size_t i = 0; i < c.q_grid.size(); ++i) {
    const std::size_t lo = (i == 0) ? 0 : i - 1;
    const std::size_t hi = (i + 1 == c.q_grid.size()) ? i : i + 1;
    c.d_values[i] =
        (c.D_values[hi] - c.D_values[lo]) / (h * static_cast<double>(hi - lo));
  }
  return c;
}

DistortionCurve identity_curve() {
  return curve_from_cdf([](double q) { return q; },
                        [](double) { return 1.0; });
}

double sup_distance(const DistortionCurve& a, const DistortionCurve& b) {
  if (a.D_values.size() != b.D_values.size())
    throw std::invalid_argument("sup_distance: grid size mismatch");
  double mx = 0.0;
  for (std::size_t i = 0; i < a.D_values.size(); ++i)
    mx = std::max(mx, std::fabs(a.D_values[i] - b.D_values[i]));
  return mx;
}

}  // namespace distmap
