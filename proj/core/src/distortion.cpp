#include "distmap/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <stdexcept>
#include <string>

#include "distmap/math.hpp"

namespace distmap {

namespace {

constexpr double kSurfaceClamp = 1e-3;

// Run the simulate -> window -> PIT stages shared by the fitting entry
// points; returns the training dataset and s(y_obs).
struct PipelineData {
  QDataset qdata;
  SimBatch windowed;
  std::vector<double> s_obs;
};

PipelineData run_pipeline_stages(const GenerativeModel& model,
                                 const ApproxPosterior& approx,
                                 const std::vector<double>& y_obs, int coord,
                                 std::size_t n_sim, const Window& window,
                                 double eps_clip, std::uint64_t seed,
                                 const char* who) {
  PipelineData out;
  out.s_obs = model.summary(y_obs);

  Window w = window;
  if (w.center.empty()) w.center = out.s_obs;
  if (n_sim * w.keep_fraction < 1e3)
    std::fprintf(stderr, "%s: warning: windowed sample below 1000 records\n",
                 who);

  SimBatch batch;
  try {
    batch = sample_generative(model, n_sim, seed);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(who) + "[simulate]: " + e.what());
  }
  try {
    out.windowed = window_select(batch, w);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(who) + "[window]: " + e.what());
  }
  try {
    out.qdata = compute_q(out.windowed, approx, coord, eps_clip);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(who) + "[pit]: " + e.what());
  }
  out.qdata.window = w;
  return out;
}

DistortionCurve curve_from_params(const BetaParams& bp) {
  return curve_from_cdf(
      [&bp](double q) { return beta_mixture_cdf(q, bp); },
      [&bp](double q) { return std::exp(beta_logpdf(q, bp)); });
}

// Closed-form integral of the power-law tail contribution to
// int p log(p/q) over [0, h]: fit p ~ Cp u^alpha and q ~ Cq u^beta through
// the two grid nodes nearest the boundary.
double tail_correction(double h, double p1, double p2, double q1v, double q2v,
                       double u1, double u2) {
  const double alpha = std::log(p1 / p2) / std::log(u1 / u2);
  const double beta = std::log(q1v / q2v) / std::log(u1 / u2);
  if (!(alpha > -1.0) || !(beta > -1.0) || !std::isfinite(alpha) ||
      !std::isfinite(beta))
    return 0.0;
  const double cp = p1 / std::pow(u1, alpha);
  const double cq = q1v / std::pow(u1, beta);
  const double a1 = alpha + 1.0;
  const double lead = cp * std::pow(h, a1);
  return lead * (std::log(cp / cq) / a1 +
                 (alpha - beta) * (std::log(h) / a1 - 1.0 / (a1 * a1)));
}

}  // namespace

double SurfaceGrid::trapezoid_integral() const {
  const double h = nodes[1] - nodes[0];
  double acc = 0.0;
  for (int i = 0; i + 1 < n; ++i)
    for (int j = 0; j + 1 < n; ++j)
      acc += 0.25 * (at(i, j) + at(i + 1, j) + at(i, j + 1) + at(i + 1, j + 1)) *
             h * h;
  return acc;
}

std::pair<DistortionMap, TrainReport> fit_distortion(
    const GenerativeModel& model, const ApproxPosterior& approx,
    const std::vector<double>& y_obs, int coord, std::size_t n_sim,
    const Window& window, const NetConfig& net_cfg,
    const TrainConfig& train_cfg, double eps_clip) {
  PipelineData pd = run_pipeline_stages(model, approx, y_obs, coord, n_sim,
                                        window, eps_clip, train_cfg.seed,
                                        "fit_distortion");
  NetConfig cfg = net_cfg;
  cfg.input_dim = pd.qdata.input_dim();

  std::pair<NetParams, TrainReport> fitted;
  try {
    fitted = train(pd.qdata, cfg, train_cfg);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("fit_distortion[train]: ") + e.what());
  }

  DistortionMap map;
  map.net = std::move(fitted.first);
  map.s_obs = pd.s_obs;
  map.coord = coord;
  map.window = pd.qdata.window;
  map.n_train = pd.qdata.size();
  return {std::move(map), std::move(fitted.second)};
}

BetaParams map_params(const DistortionMap& map) {
  return forward(map.net, map.s_obs);
}

double eval_D(const DistortionMap& map, double q) {
  if (q < 0.0 || q > 1.0)
    throw std::domain_error("eval_D: q must lie in [0,1]");
  return beta_mixture_cdf(q, map_params(map));
}

double eval_d(const DistortionMap& map, double q) {
  if (!(q > 0.0) || !(q < 1.0))
    throw std::domain_error("eval_d: q must lie strictly in (0,1)");
  return std::exp(beta_logpdf(q, map_params(map)));
}

DistortionCurve curve_of(const DistortionMap& map) {
  return curve_from_params(map_params(map));
}

double recalibrated_cdf(const DistortionMap& map, const ApproxPosterior& approx,
                        const std::vector<double>& y_obs, int coord, double x) {
  return beta_mixture_cdf(approx.cdf(y_obs, coord, x), map_params(map));
}

double recalibrated_logpdf(const DistortionMap& map,
                           const ApproxPosterior& approx,
                           const std::vector<double>& y_obs, int coord,
                           double x) {
  if (!approx.log_pdf)
    throw std::invalid_argument(
        "recalibrated_logpdf: approx provides no log-density");
  double q = approx.cdf(y_obs, coord, x);
  q = std::min(1.0 - 1e-12, std::max(1e-12, q));
  return beta_logpdf(q, map_params(map)) + approx.log_pdf(y_obs, coord, x);
}

BivariateDistortion fit_bivariate(const GenerativeModel& model,
                                  const ApproxPosterior& approx,
                                  const std::vector<double>& y_obs,
                                  std::pair<int, int> coords, std::size_t n_sim,
                                  const Window& window,
                                  const NetConfig& net_cfg,
                                  const TrainConfig& train_cfg,
                                  double eps_clip) {
  if (!approx.conditional_cdf)
    throw std::invalid_argument("fit_bivariate: approx has no conditional_cdf");

  PipelineData pd = run_pipeline_stages(model, approx, y_obs, coords.first,
                                        n_sim, window, eps_clip, train_cfg.seed,
                                        "fit_bivariate");

  // Conditional dataset: q2 = G(x2 | x1, y) with input (x1, s(y)).
  QDataset cond;
  cond.window = pd.qdata.window;
  cond.records.resize(pd.windowed.size());
  for (std::size_t i = 0; i < pd.windowed.size(); ++i) {
    const SimPair& pair = pd.windowed.pairs[i];
    const double x1 = pair.x[coords.first];
    const double q2 = approx.conditional_cdf(pair.y, x1, pair.x[coords.second]);
    if (!std::isfinite(q2))
      throw std::runtime_error(
          "fit_bivariate[pit]: non-finite conditional CDF at index " +
          std::to_string(i));
    QRecord& rec = cond.records[i];
    rec.q = std::min(1.0 - eps_clip, std::max(eps_clip, q2));
    rec.input.reserve(pair.s.size() + 1);
    rec.input.push_back(x1);
    rec.input.insert(rec.input.end(), pair.s.begin(), pair.s.end());
  }

  NetConfig marg_cfg = net_cfg;
  marg_cfg.input_dim = pd.qdata.input_dim();
  NetConfig cond_cfg = net_cfg;
  cond_cfg.input_dim = cond.input_dim();
  cond_cfg.init_seed = net_cfg.init_seed + 1;
  TrainConfig cond_train = train_cfg;
  cond_train.seed = train_cfg.seed + 1;

  BivariateDistortion biv;
  try {
    auto fitted = train(pd.qdata, marg_cfg, train_cfg);
    biv.marginal.net = std::move(fitted.first);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("fit_bivariate[train-marginal]: ") +
                             e.what());
  }
  biv.marginal.s_obs = pd.s_obs;
  biv.marginal.coord = coords.first;
  biv.marginal.window = pd.qdata.window;
  biv.marginal.n_train = pd.qdata.size();
  try {
    auto fitted = train(cond, cond_cfg, cond_train);
    biv.conditional_net = std::move(fitted.first);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("fit_bivariate[train-conditional]: ") +
                             e.what());
  }
  biv.approx = approx;
  biv.y_obs = y_obs;
  biv.coords = coords;
  return biv;
}

SurfaceGrid surface(const BivariateDistortion& biv, int n) {
  if (n < 2) throw std::invalid_argument("surface: grid must have >= 2 nodes");
  if (!biv.approx.inv_cdf)
    throw std::invalid_argument("surface: approx has no inv_cdf");

  SurfaceGrid grid;
  grid.n = n;
  grid.nodes.resize(n);
  for (int i = 0; i < n; ++i)
    grid.nodes[i] = static_cast<double>(i) / (n - 1);
  grid.values.assign(static_cast<std::size_t>(n) * n, 0.0);

  const BetaParams marg = map_params(biv.marginal);
  const std::vector<double>& s_obs = biv.marginal.s_obs;
  std::vector<double> cond_input(s_obs.size() + 1);
  std::copy(s_obs.begin(), s_obs.end(), cond_input.begin() + 1);

  for (int i = 0; i < n; ++i) {
    const double q1 = std::min(1.0 - kSurfaceClamp,
                               std::max(kSurfaceClamp, grid.nodes[i]));
    const double d1 = std::exp(beta_logpdf(q1, marg));
    cond_input[0] = biv.approx.inv_cdf(biv.y_obs, biv.coords.first, q1);
    const BetaParams cond = forward(biv.conditional_net, cond_input);
    for (int j = 0; j < n; ++j) {
      const double q2 = std::min(1.0 - kSurfaceClamp,
                                 std::max(kSurfaceClamp, grid.nodes[j]));
      grid.values[static_cast<std::size_t>(i) * n + j] =
          d1 * std::exp(beta_logpdf(q2, cond));
    }
  }
  return grid;
}

ValidationReport validate_convergence_data(
    const QDataset& data, const std::vector<double>& s_obs,
    const NetConfig& net_cfg, const TrainConfig& train_cfg,
    const std::vector<std::size_t>& checkpoints, double tolerance) {
  if (checkpoints.size() < 3)
    throw std::invalid_argument(
        "validate_convergence: need at least 3 checkpoints");
  for (std::size_t j = 1; j < checkpoints.size(); ++j)
    if (checkpoints[j] <= checkpoints[j - 1])
      throw std::invalid_argument(
          "validate_convergence: checkpoints must be strictly increasing");
  if (checkpoints.back() != data.size())
    throw std::invalid_argument(
        "validate_convergence: last checkpoint must equal the dataset size");

  // Independent refits on nested prefixes, run concurrently.
  std::vector<std::future<DistortionCurve>> jobs;
  for (std::size_t j = 0; j < checkpoints.size(); ++j) {
    jobs.push_back(std::async(std::launch::async, [&, j]() {
      QDataset prefix;
      prefix.window = data.window;
      prefix.records.assign(data.records.begin(),
                            data.records.begin() + checkpoints[j]);
      NetConfig cfg = net_cfg;
      cfg.input_dim = prefix.input_dim();
      cfg.init_seed = net_cfg.init_seed + j;
      TrainConfig tc = train_cfg;
      tc.seed = train_cfg.seed + j;
      const auto fitted = train(prefix, cfg, tc);
      return curve_from_params(forward(fitted.first, s_obs));
    }));
  }

  ValidationReport report;
  report.checkpoints = checkpoints;
  report.tolerance = tolerance;
  for (auto& job : jobs) report.curves.push_back(job.get());
  for (std::size_t j = 1; j < report.curves.size(); ++j)
    report.successive_sup.push_back(
        sup_distance(report.curves[j], report.curves[j - 1]));
  report.pass = report.successive_sup.back() <= tolerance;
  return report;
}

ValidationReport validate_convergence(
    const GenerativeModel& model, const ApproxPosterior& approx,
    const std::vector<double>& y_obs, int coord, std::size_t n_sim,
    const Window& window, const NetConfig& net_cfg,
    const TrainConfig& train_cfg, const std::vector<std::size_t>& checkpoints,
    double tolerance, double eps_clip) {
  PipelineData pd =
      run_pipeline_stages(model, approx, y_obs, coord, n_sim, window, eps_clip,
                          train_cfg.seed, "validate_convergence");
  return validate_convergence_data(pd.qdata, pd.s_obs, net_cfg, train_cfg,
                                   checkpoints, tolerance);
}

ValidationReport validate_blocks_data(const QDataset& data,
                                      const std::vector<double>& s_obs,
                                      const NetConfig& net_cfg,
                                      const TrainConfig& train_cfg,
                                      int n_blocks, double tolerance) {
  if (n_blocks < 2)
    throw std::invalid_argument("validate_blocks: need at least 2 blocks");
  const std::size_t n = data.size();
  if (n / n_blocks < 1000)
    throw std::invalid_argument(
        "validate_blocks: blocks would fall below 1000 records");

  std::vector<std::future<DistortionCurve>> jobs;
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  for (int j = 0; j < n_blocks; ++j) {
    const std::size_t len = n / n_blocks + (j < static_cast<int>(n % n_blocks) ? 1 : 0);
    sizes.push_back(len);
    jobs.push_back(std::async(std::launch::async, [&, start, len, j]() {
      QDataset block;
      block.window = data.window;
      block.records.assign(data.records.begin() + start,
                           data.records.begin() + start + len);
      NetConfig cfg = net_cfg;
      cfg.input_dim = block.input_dim();
      cfg.init_seed = net_cfg.init_seed + j;
      TrainConfig tc = train_cfg;
      tc.seed = train_cfg.seed + j;
      const auto fitted = train(block, cfg, tc);
      return curve_from_params(forward(fitted.first, s_obs));
    }));
    start += len;
  }

  ValidationReport report;
  report.checkpoints = sizes;
  report.tolerance = tolerance;
  for (auto& job : jobs) report.curves.push_back(job.get());
  for (std::size_t a = 0; a < report.curves.size(); ++a)
    for (std::size_t b = a + 1; b < report.curves.size(); ++b)
      report.max_pairwise_sup = std::max(
          report.max_pairwise_sup, sup_distance(report.curves[a], report.curves[b]));
  report.pass = report.max_pairwise_sup <= tolerance;
  return report;
}

ValidationReport validate_blocks(const GenerativeModel& model,
                                 const ApproxPosterior& approx,
                                 const std::vector<double>& y_obs, int coord,
                                 std::size_t n_sim, const Window& window,
                                 const NetConfig& net_cfg,
                                 const TrainConfig& train_cfg, int n_blocks,
                                 double tolerance, double eps_clip) {
  PipelineData pd = run_pipeline_stages(model, approx, y_obs, coord, n_sim,
                                        window, eps_clip, train_cfg.seed,
                                        "validate_blocks");
  return validate_blocks_data(pd.qdata, pd.s_obs, net_cfg, train_cfg, n_blocks,
                              tolerance);
}

double kl_between_curves(const DistortionCurve& p_curve,
                         const DistortionCurve& q_curve) {
  const std::size_t n = p_curve.q_grid.size();
  if (q_curve.q_grid.size() != n || n < 5)
    throw std::invalid_argument("kl_between_curves: grid mismatch");
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (!(p_curve.d_values[i] > 0.0) || !(q_curve.d_values[i] > 0.0))
      throw std::invalid_argument(
          "kl_between_curves: densities must be positive on the interior");

  const auto integrand = [&](std::size_t i) {
    return p_curve.d_values[i] *
           std::log(p_curve.d_values[i] / q_curve.d_values[i]);
  };

  // Trapezoid over the interior grid nodes [1, n-2].
  double acc = 0.0;
  for (std::size_t i = 1; i + 2 < n; ++i) {
    const double h = p_curve.q_grid[i + 1] - p_curve.q_grid[i];
    acc += 0.5 * h * (integrand(i) + integrand(i + 1));
  }

  // Boundary corrections from local power-law fits through the two interior
  // nodes nearest each endpoint.
  const double h0 = p_curve.q_grid[1];
  acc += tail_correction(h0, p_curve.d_values[1], p_curve.d_values[2],
                         q_curve.d_values[1], q_curve.d_values[2],
                         p_curve.q_grid[1], p_curve.q_grid[2]);
  const double u1 = 1.0 - p_curve.q_grid[n - 2];
  const double u2 = 1.0 - p_curve.q_grid[n - 3];
  acc += tail_correction(u1, p_curve.d_values[n - 2], p_curve.d_values[n - 3],
                         q_curve.d_values[n - 2], q_curve.d_values[n - 3], u1,
                         u2);
  return acc;
}

}  // namespace distmap
