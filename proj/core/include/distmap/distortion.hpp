#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "distmap/approximators.hpp"
#include "distmap/betamdn.hpp"
#include "distmap/curve.hpp"
#include "distmap/generative.hpp"

namespace distmap {

// A fitted distortion map frozen at the observed data: the trained network
// plus s(y_obs), evaluated as a Beta-mixture CDF/density in q.
struct DistortionMap {
  NetParams net;
  std::vector<double> s_obs;
  int coord = 0;
  Window window;
  std::size_t n_train = 0;
};

// Bivariate extension: a marginal map for the first coordinate and a
// conditional network whose input is (x1, s(y)).
struct BivariateDistortion {
  DistortionMap marginal;
  NetParams conditional_net;
  ApproxPosterior approx;
  std::vector<double> y_obs;
  std::pair<int, int> coords{0, 1};
};

// 51x51 evaluation of the joint distortion density over the unit square;
// nodes at i/(n-1) so that (0.02, 0.02) and (0.5, 0.5) are exact nodes.
// Density evaluations clamp q into [1e-3, 1-1e-3] at the border.
struct SurfaceGrid {
  int n = 51;
  std::vector<double> nodes;
  std::vector<double> values;  // row-major n x n

  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
  double trapezoid_integral() const;
};

struct ValidationReport {
  std::vector<std::size_t> checkpoints;  // prefix sizes or block sizes
  std::vector<DistortionCurve> curves;
  std::vector<double> successive_sup;  // convergence mode, size J-1
  double max_pairwise_sup = 0.0;       // block mode
  double tolerance = 0.0;
  bool pass = false;
};

// Full pipeline: simulate n_sim pairs, keep the window around s(y_obs),
// compute PIT values through the approximation, train the Beta net, freeze
// at s(y_obs). Errors from any stage are annotated with the stage name.
std::pair<DistortionMap, TrainReport> fit_distortion(
    const GenerativeModel& model, const ApproxPosterior& approx,
    const std::vector<double>& y_obs, int coord, std::size_t n_sim,
    const Window& window, const NetConfig& net_cfg,
    const TrainConfig& train_cfg, double eps_clip = 1e-6);

// Beta-mixture parameters of the map at s(y_obs).
BetaParams map_params(const DistortionMap& map);

// D(q): mixture-Beta CDF, exact 0/1 at the endpoints.
double eval_D(const DistortionMap& map, double q);

// d(q): mixture-Beta density, q strictly interior.
double eval_d(const DistortionMap& map, double q);

// Gridded view of the fitted map.
DistortionCurve curve_of(const DistortionMap& map);

// F-hat(x) = D(G(x)): the approximation corrected by the fitted map.
double recalibrated_cdf(const DistortionMap& map, const ApproxPosterior& approx,
                        const std::vector<double>& y_obs, int coord, double x);

// log pi-hat(x|y_obs) = log d(G(x)) + log approx-density(x).
double recalibrated_logpdf(const DistortionMap& map,
                           const ApproxPosterior& approx,
                           const std::vector<double>& y_obs, int coord,
                           double x);

// Two-map pipeline for a coordinate pair: marginal map for coords.first and
// conditional map for coords.second given (x_first, s(y)).
BivariateDistortion fit_bivariate(const GenerativeModel& model,
                                  const ApproxPosterior& approx,
                                  const std::vector<double>& y_obs,
                                  std::pair<int, int> coords, std::size_t n_sim,
                                  const Window& window,
                                  const NetConfig& net_cfg,
                                  const TrainConfig& train_cfg,
                                  double eps_clip = 1e-6);

// Joint density surface d(q1, q2) = d_cond(q2 | x1 = G^{-1}(q1)) * d_marg(q1).
SurfaceGrid surface(const BivariateDistortion& biv, int n = 51);

// Stability-in-N check: refit on nested prefixes of the windowed dataset
// (checkpoints must end at the full windowed size) and measure successive
// sup-changes of the fitted curve; pass iff the last change <= tolerance.
ValidationReport validate_convergence(
    const GenerativeModel& model, const ApproxPosterior& approx,
    const std::vector<double>& y_obs, int coord, std::size_t n_sim,
    const Window& window, const NetConfig& net_cfg,
    const TrainConfig& train_cfg, const std::vector<std::size_t>& checkpoints,
    double tolerance = 0.05, double eps_clip = 1e-6);

// Same check on an already-built dataset.
ValidationReport validate_convergence_data(
    const QDataset& data, const std::vector<double>& s_obs,
    const NetConfig& net_cfg, const TrainConfig& train_cfg,
    const std::vector<std::size_t>& checkpoints, double tolerance = 0.05);

// Block agreement check: split the windowed dataset into contiguous blocks,
// refit per block, and measure the max pairwise sup-distance between the
// fitted curves; pass iff <= tolerance.
ValidationReport validate_blocks(const GenerativeModel& model,
                                 const ApproxPosterior& approx,
                                 const std::vector<double>& y_obs, int coord,
                                 std::size_t n_sim, const Window& window,
                                 const NetConfig& net_cfg,
                                 const TrainConfig& train_cfg, int n_blocks,
                                 double tolerance = 0.1, double eps_clip = 1e-6);

ValidationReport validate_blocks_data(const QDataset& data,
                                      const std::vector<double>& s_obs,
                                      const NetConfig& net_cfg,
                                      const TrainConfig& train_cfg,
                                      int n_blocks, double tolerance = 0.1);

// KL divergence between two curves viewed as densities on (0,1): trapezoid
// quadrature of p log(p/q) on the interior grid plus closed-form boundary
// corrections from a local power-law fit (exact for Beta-type tails).
double kl_between_curves(const DistortionCurve& p_curve,
                         const DistortionCurve& q_curve);

}  // namespace distmap
