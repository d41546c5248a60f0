#pragma once

#include <functional>
#include <vector>

namespace distmap {

// Gridded evaluation of a distortion map: D (a CDF on [0,1]) and its density
// d on a fixed 201-point uniform grid, the common currency for comparisons,
// file output, and oracle curves.
struct DistortionCurve {
  static constexpr int kGridSize = 201;

  std::vector<double> q_grid;
  std::vector<double> D_values;
  std::vector<double> d_values;
};

// The shared 201-point grid {0, 1/200, ..., 1}.
std::vector<double> curve_grid();

// Build a curve from callables for D and d (density evaluated with q clamped
// into [1e-6, 1-1e-6] at the endpoints).
DistortionCurve curve_from_cdf(const std::function<double(double)>& cdf,
                               const std::function<double(double)>& density);

// Empirical curve: D is the ECDF of the given values at each grid node and d
// its symmetric difference quotient.
DistortionCurve curve_from_samples(std::vector<double> values);

DistortionCurve identity_curve();

// max_i |a.D[i] - b.D[i]| over the grid.
double sup_distance(const DistortionCurve& a, const DistortionCurve& b);

}  // namespace distmap
