// distmap — command-line front end for the distortion-map diagnostic.
//
// Subcommands run the simulation/fit/diagnosis pipelines and write fixed-name
// artifacts (curve.csv, density.csv, surface.csv, histogram.csv, coverage.csv,
// validation.txt, manifest.txt) under --out. Every run records all resolved
// parameters and seeds in manifest.txt; `distmap replay` re-executes a run
// from that file and reproduces the CSVs byte-for-byte.
//
// Exit codes: 0 success, 1 pipeline or validation-check failure, 2 usage
// error (bad flags, unknown selectors, malformed inputs).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "distmap/baselines.hpp"
#include "distmap/distortion.hpp"
#include "distmap/io.hpp"
#include "distmap/samplers.hpp"
#include "distmap/svg.hpp"

namespace {

using namespace distmap;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every parameter a run can depend on, in resolved form. The manifest is a
// flat serialization of this struct; replay deserializes and re-dispatches.
struct RunConfig {
  std::string command;
  std::string demo_case;  // informational, set by `demo`

  // model
  std::string model = "conjugate";
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double noise_var = 1.0;
  int n_obs = 20;
  int p_reg = 3;
  std::uint64_t design_seed = 1;

  // approximation
  std::string approx = "exact";
  double mean_shift = 0.0;
  double sd_scale = 1.0;
  double amplitude = 0.15;
  double flip_point = std::numeric_limits<double>::quiet_NaN();  // default: prior_mean

  // data and window
  std::vector<double> y_obs;
  int coord = 0;
  int coord2 = 1;
  std::uint64_t n_sim = 0;
  double keep_frac = 1.0;
  bool standardize = false;
  double eps_clip = 1e-6;

  // network
  std::vector<int> hidden{80, 80};
  int components = 1;
  double param_floor = 1e-4;

  // training
  double lr = 1e-3;
  int batch = 256;
  int epochs = 200;
  double val_frac = 0.1;
  int patience = 20;
  std::uint64_t seed = 0;

  // validate
  std::vector<std::uint64_t> checkpoints;
  int blocks = 3;
  double tol_convergence = 0.05;
  double tol_blocks = 0.1;

  // baselines
  double alpha = 0.8;
  int bins = 20;
  std::uint64_t coverage_draws = 10000;

  // outputs
  std::string out;
  bool svg = false;
  bool write_histogram = false;  // fit/diagnose also emit histogram.csv
};

// ---------------------------------------------------------------------------
// Manifest round trip
// ---------------------------------------------------------------------------

template <typename T>
std::string join_csv(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_same_v<T, double>)
      s += io::format_double(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> v;
  for (const auto& tok : split_csv(s)) v.push_back(std::stod(tok));
  return v;
}

io::Manifest manifest_of(const RunConfig& c) {
  io::Manifest m;
  auto sec = [&](const std::string& name) { m.emplace_back("section", name); };
  auto put = [&](const std::string& k, const std::string& v) {
    m.emplace_back(k, v);
  };
  auto putd = [&](const std::string& k, double v) { put(k, io::format_double(v)); };
  auto puti = [&](const std::string& k, std::uint64_t v) {
    put(k, std::to_string(v));
  };

  sec("run");
  put("command", c.command);
  if (!c.demo_case.empty()) put("demo_case", c.demo_case);
  put("out", c.out);
  put("svg", c.svg ? "true" : "false");
  put("write_histogram", c.write_histogram ? "true" : "false");
  puti("seed", c.seed);

  sec("model");
  put("model", c.model);
  putd("prior_mean", c.prior_mean);
  putd("prior_var", c.prior_var);
  putd("noise_var", c.noise_var);
  puti("n_obs", c.n_obs);
  puti("p_reg", c.p_reg);
  puti("design_seed", c.design_seed);

  sec("approx");
  put("approx", c.approx);
  putd("mean_shift", c.mean_shift);
  putd("sd_scale", c.sd_scale);
  putd("amplitude", c.amplitude);
  putd("flip_point", c.flip_point);

  sec("data");
  put("y_obs", join_csv(c.y_obs));
  puti("coord", c.coord);
  puti("coord2", c.coord2);
  puti("n_sim", c.n_sim);
  putd("keep_frac", c.keep_frac);
  put("standardize", c.standardize ? "true" : "false");
  putd("eps_clip", c.eps_clip);

  sec("net");
  put("hidden", join_csv(c.hidden));
  puti("components", c.components);
  putd("param_floor", c.param_floor);

  sec("train");
  putd("lr", c.lr);
  puti("batch", c.batch);
  puti("epochs", c.epochs);
  putd("val_frac", c.val_frac);
  puti("patience", c.patience);

  sec("validate");
  put("checkpoints", join_csv(c.checkpoints));
  puti("blocks", c.blocks);
  putd("tol_convergence", c.tol_convergence);
  putd("tol_blocks", c.tol_blocks);

  sec("baselines");
  putd("alpha", c.alpha);
  puti("bins", c.bins);
  puti("coverage_draws", c.coverage_draws);
  return m;
}

RunConfig config_from_manifest(const io::Manifest& m) {
  RunConfig c;
  c.y_obs.clear();
  c.hidden.clear();
  for (const auto& [key, value] : m) {
    if (key == "section") continue;
    if (key == "command") c.command = value;
    else if (key == "demo_case") c.demo_case = value;
    else if (key == "out") c.out = value;
    else if (key == "svg") c.svg = (value == "true");
    else if (key == "write_histogram") c.write_histogram = (value == "true");
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "model") c.model = value;
    else if (key == "prior_mean") c.prior_mean = std::stod(value);
    else if (key == "prior_var") c.prior_var = std::stod(value);
    else if (key == "noise_var") c.noise_var = std::stod(value);
    else if (key == "n_obs") c.n_obs = std::stoi(value);
    else if (key == "p_reg") c.p_reg = std::stoi(value);
    else if (key == "design_seed") c.design_seed = std::stoull(value);
    else if (key == "approx") c.approx = value;
    else if (key == "mean_shift") c.mean_shift = std::stod(value);
    else if (key == "sd_scale") c.sd_scale = std::stod(value);
    else if (key == "amplitude") c.amplitude = std::stod(value);
    else if (key == "flip_point") c.flip_point = std::stod(value);
    else if (key == "y_obs") c.y_obs = parse_doubles(value);
    else if (key == "coord") c.coord = std::stoi(value);
    else if (key == "coord2") c.coord2 = std::stoi(value);
    else if (key == "n_sim") c.n_sim = std::stoull(value);
    else if (key == "keep_frac") c.keep_frac = std::stod(value);
    else if (key == "standardize") c.standardize = (value == "true");
    else if (key == "eps_clip") c.eps_clip = std::stod(value);
    else if (key == "hidden") {
      for (const auto& tok : split_csv(value)) c.hidden.push_back(std::stoi(tok));
    } else if (key == "components") c.components = std::stoi(value);
    else if (key == "param_floor") c.param_floor = std::stod(value);
    else if (key == "lr") c.lr = std::stod(value);
    else if (key == "batch") c.batch = std::stoi(value);
    else if (key == "epochs") c.epochs = std::stoi(value);
    else if (key == "val_frac") c.val_frac = std::stod(value);
    else if (key == "patience") c.patience = std::stoi(value);
    else if (key == "checkpoints") {
      for (const auto& tok : split_csv(value))
        c.checkpoints.push_back(std::stoull(tok));
    } else if (key == "blocks") c.blocks = std::stoi(value);
    else if (key == "tol_convergence") c.tol_convergence = std::stod(value);
    else if (key == "tol_blocks") c.tol_blocks = std::stod(value);
    else if (key == "alpha") c.alpha = std::stod(value);
    else if (key == "bins") c.bins = std::stoi(value);
    else if (key == "coverage_draws") c.coverage_draws = std::stoull(value);
    else throw UsageError("unknown manifest key: " + key);
  }
  if (c.command.empty()) throw UsageError("manifest has no command entry");
  return c;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

GenerativeModel build_model(const RunConfig& c) {
  if (c.model == "conjugate")
    return gaussian_conjugate_model(c.prior_mean, c.prior_var, c.noise_var);
  if (c.model == "conjugate-2d")
    return gaussian_conjugate_model_2d(c.prior_mean, c.prior_var, c.noise_var);
  if (c.model == "logistic") {
    auto design = uniform_design(c.n_obs, c.p_reg, c.design_seed);
    return logistic_model(design, c.prior_var);
  }
  throw UsageError("unknown model selector: " + c.model);
}

ApproxPosterior build_approx(const RunConfig& c, const GenerativeModel& model) {
  if (c.approx == "exact") {
    if (model.conjugate) return exact_posterior_approx(model);
    throw UsageError("approx 'exact' requires a conjugate model");
  }
  if (c.approx == "gaussian") {
    if (!model.conjugate)
      throw UsageError("approx 'gaussian' requires a conjugate model");
    return mis_specified_gaussian(model, c.mean_shift, c.sd_scale);
  }
  if (c.approx == "sign-flip") {
    if (!model.conjugate)
      throw UsageError("approx 'sign-flip' requires a conjugate model");
    const double flip =
        std::isnan(c.flip_point) ? model.conjugate->prior_mean : c.flip_point;
    return sign_flip_quantile_shift(model, c.amplitude, flip);
  }
  if (c.approx == "vi") {
    if (c.model != "logistic")
      throw UsageError("approx 'vi' requires the logistic model");
    auto design = uniform_design(c.n_obs, c.p_reg, c.design_seed);
    return vi_logistic(design, c.prior_var);
  }
  throw UsageError("unknown approx selector: " + c.approx);
}

// Resolve y_obs: validate a user-supplied vector or draw one from the model
// with a seed decorrelated from the pipeline stream.
void resolve_y_obs(RunConfig& c, const GenerativeModel& model) {
  if (c.y_obs.empty()) {
    const std::uint64_t tag = c.seed ^ 0xd1b54a32d192ed03ULL;
    SimBatch one = sample_generative(model, 1, tag);
    c.y_obs = one.pairs[0].y;
  }
  if (static_cast<int>(c.y_obs.size()) != model.data_dim)
    throw UsageError("--y-obs needs " + std::to_string(model.data_dim) +
                     " values for model '" + c.model + "', got " +
                     std::to_string(c.y_obs.size()));
}

void resolve_flip_point(RunConfig& c, const GenerativeModel& model) {
  if (c.approx == "sign-flip" && std::isnan(c.flip_point))
    c.flip_point = model.conjugate ? model.conjugate->prior_mean : 0.0;
}

NetConfig net_config(const RunConfig& c, int input_dim) {
  NetConfig nc;
  nc.input_dim = input_dim;
  nc.hidden_widths = c.hidden;
  nc.n_components = c.components;
  nc.param_floor = c.param_floor;
  nc.init_seed = c.seed;
  return nc;
}

TrainConfig train_config(const RunConfig& c) {
  TrainConfig tc;
  tc.learning_rate = c.lr;
  tc.batch_size = c.batch;
  tc.max_epochs = c.epochs;
  tc.validation_fraction = c.val_frac;
  tc.patience = c.patience;
  tc.seed = c.seed;
  return tc;
}

Window window_of(const RunConfig& c, const GenerativeModel& model) {
  Window w;
  w.center = model.summary(c.y_obs);
  w.keep_fraction = c.keep_frac;
  w.standardize = c.standardize;
  return w;
}

// Exact-posterior draws at y: closed form when the model provides a sampler,
// otherwise tuned random-walk Metropolis on exact_log_posterior.
Chain exact_chain(const GenerativeModel& model, const std::vector<double>& y,
                  std::size_t n_draws, std::uint64_t seed) {
  if (model.sample_exact_posterior) {
    Chain chain;
    chain.acceptance_rate = 1.0;
    chain.config.n_steps = n_draws;
    chain.config.seed = seed;
    chain.draws.reserve(n_draws);
    for (std::size_t i = 0; i < n_draws; ++i) {
      RngStream stream = RngStream::substream(seed, i);
      chain.draws.push_back(model.sample_exact_posterior(y, stream));
    }
    return chain;
  }
  if (!model.exact_log_posterior)
    throw std::runtime_error("model '" + model.id +
                             "' has no exact posterior oracle");
  auto target = [&](const std::vector<double>& x) {
    return model.exact_log_posterior(x, y);
  };
  std::vector<double> init(model.param_dim, 0.0);
  ChainConfig cfg;
  cfg.thin = 10;
  cfg.burn_in = 2000;
  cfg.n_steps = cfg.burn_in + n_draws * cfg.thin;
  cfg.seed = seed;
  cfg.step_sd = tune_step_sd(target, init, 1.0, seed ^ 0x5851f42d4c957f2dULL);
  return rwm_sample(target, init, cfg);
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.out) / name).string();
}

void ensure_out_dir(const RunConfig& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  std::filesystem::create_directories(c.out);
}

void maybe_svg(const RunConfig& c, const std::string& csv_name) {
  if (!c.svg) return;
  const std::string csv = out_path(c, csv_name);
  const std::string svg =
      csv.substr(0, csv.size() - 4) + ".svg";  // fixed names end in .csv
  svg::Style style;
  style.title = csv_name.substr(0, csv_name.size() - 4);
  svg::render_csv_file(csv, svg, style);
}

void finish_run(const RunConfig& c) {
  io::write_manifest(manifest_of(c), out_path(c, "manifest.txt"));
}

void describe_shape(const DistortionMap& map) {
  const double d05 = eval_d(map, 0.05);
  const double d50 = eval_d(map, 0.5);
  const double d95 = eval_d(map, 0.95);
  const double D50 = eval_D(map, 0.5);
  const double sup = sup_distance(curve_of(map), identity_curve());

  std::printf("D(0.5) = %.4f   d(0.05) = %.3f  d(0.5) = %.3f  d(0.95) = %.3f\n",
              D50, d05, d50, d95);
  std::printf("sup-distance to identity = %.4f\n", sup);
  if (sup <= 0.05) {
    std::printf("verdict: no material distortion detected\n");
    return;
  }
  if (d05 > d50 && d95 > d50)
    std::printf(
        "verdict: cup-shaped density — approximation is under-dispersed\n");
  else if (d05 < d50 && d95 < d50)
    std::printf(
        "verdict: cap-shaped density — approximation is over-dispersed\n");
  if (D50 >= 0.55)
    std::printf("verdict: median shift — approximation median is too high\n");
  else if (D50 <= 0.45)
    std::printf("verdict: median shift — approximation median is too low\n");
}

// ---------------------------------------------------------------------------
// Runners (one per primitive command)
// ---------------------------------------------------------------------------

int run_simulate(RunConfig& c) {
  auto model = build_model(c);
  if (c.n_sim == 0) throw UsageError("--n-sim must be positive");
  ensure_out_dir(c);
  SimBatch batch = sample_generative(model, c.n_sim, c.seed);
  if (c.keep_frac < 1.0) {
    resolve_y_obs(c, model);
    batch = window_select(batch, window_of(c, model));
  }
  io::write_sim_batch(batch, out_path(c, "sim.txt"));
  finish_run(c);
  std::printf("wrote %zu pairs from model '%s' to %s\n", batch.size(),
              model.id.c_str(), out_path(c, "sim.txt").c_str());
  return 0;
}

int run_fit(RunConfig& c, bool describe) {
  auto model = build_model(c);
  auto approx = build_approx(c, model);
  resolve_y_obs(c, model);
  resolve_flip_point(c, model);
  if (c.n_sim == 0) throw UsageError("--n-sim must be positive");
  ensure_out_dir(c);

  auto [map, report] =
      fit_distortion(model, approx, c.y_obs, c.coord, c.n_sim,
                     window_of(c, model), net_config(c, model.summary_dim),
                     train_config(c), c.eps_clip);

  io::write_net_params(map.net, out_path(c, "map.txt"));
  const DistortionCurve curve = curve_of(map);
  io::write_curve_csv(curve, out_path(c, "curve.csv"));
  io::write_density_csv(curve, out_path(c, "density.csv"));
  maybe_svg(c, "curve.csv");

  if (c.write_histogram) {
    // Averaged diagnostic for contrast: the PIT histogram pooled over the
    // whole simulation batch, no windowing.
    SimBatch batch = sample_generative(model, c.n_sim, c.seed);
    QDataset data = compute_q(batch, approx, c.coord, c.eps_clip);
    RankHistogram hist = marginal_histogram(data, c.bins);
    io::write_histogram_csv(hist, out_path(c, "histogram.csv"));
    maybe_svg(c, "histogram.csv");
    double max_dev = 0.0;
    for (double h : hist.heights) max_dev = std::max(max_dev, std::abs(h - 1.0));
    std::printf(
        "histogram pooled over all %zu simulations: max deviation from flat = "
        "%.4f\n",
        batch.size(), max_dev);
  }

  finish_run(c);
  const BetaParams params = map_params(map);
  std::printf("fitted map on %zu windowed pairs (epoch %d of %d, val nll %.5f)\n",
              map.n_train, report.best_epoch, report.stopped_epoch,
              report.final_nll);
  std::printf("beta parameters at s(y_obs):");
  for (const auto& comp : params.components)
    std::printf("  a=%.4f b=%.4f w=%.3f", comp.a, comp.b, comp.weight);
  std::printf("\n");
  if (describe) describe_shape(map);
  return 0;
}

int run_surface(RunConfig& c) {
  auto model = build_model(c);
  auto approx = build_approx(c, model);
  resolve_y_obs(c, model);
  resolve_flip_point(c, model);
  if (c.n_sim == 0) throw UsageError("--n-sim must be positive");
  if (model.param_dim < 2)
    throw UsageError("surface needs a model with at least 2 parameters");
  ensure_out_dir(c);

  BivariateDistortion biv = fit_bivariate(
      model, approx, c.y_obs, {c.coord, c.coord2}, c.n_sim, window_of(c, model),
      net_config(c, model.summary_dim), train_config(c), c.eps_clip);
  SurfaceGrid grid = surface(biv);

  io::write_surface_csv(grid, out_path(c, "surface.csv"));
  maybe_svg(c, "surface.csv");
  const DistortionCurve curve = curve_of(biv.marginal);
  io::write_curve_csv(curve, out_path(c, "curve.csv"));
  io::write_density_csv(curve, out_path(c, "density.csv"));
  maybe_svg(c, "curve.csv");
  finish_run(c);

  const int mid = (grid.n - 1) / 2;
  const int corner = grid.n / 50;  // node 0.02 on the standard 51-grid
  std::printf("surface corner d(0.02,0.02) = %.3f, center d(0.5,0.5) = %.3f, "
              "integral = %.4f\n",
              grid.at(corner, corner), grid.at(mid, mid),
              grid.trapezoid_integral());
  return 0;
}

int run_validate(RunConfig& c) {
  auto model = build_model(c);
  auto approx = build_approx(c, model);
  resolve_y_obs(c, model);
  resolve_flip_point(c, model);
  if (c.n_sim == 0) throw UsageError("--n-sim must be positive");
  ensure_out_dir(c);

  const std::size_t n_windowed = static_cast<std::size_t>(
      std::ceil(c.keep_frac * static_cast<double>(c.n_sim)));
  std::vector<std::size_t> checkpoints(c.checkpoints.begin(),
                                       c.checkpoints.end());
  if (checkpoints.empty())
    checkpoints = {n_windowed / 4, n_windowed / 2, n_windowed};
  else if (checkpoints.back() != n_windowed)
    throw UsageError("last checkpoint must equal the windowed size " +
                     std::to_string(n_windowed));
  c.checkpoints.assign(checkpoints.begin(), checkpoints.end());

  ValidationReport conv = validate_convergence(
      model, approx, c.y_obs, c.coord, c.n_sim, window_of(c, model),
      net_config(c, model.summary_dim), train_config(c), checkpoints,
      c.tol_convergence, c.eps_clip);
  ValidationReport blocks = validate_blocks(
      model, approx, c.y_obs, c.coord, c.n_sim, window_of(c, model),
      net_config(c, model.summary_dim), train_config(c), c.blocks,
      c.tol_blocks, c.eps_clip);

  io::write_curve_csv(conv.curves.back(), out_path(c, "curve.csv"));
  maybe_svg(c, "curve.csv");

  io::Manifest v;
  v.emplace_back("section", "convergence");
  v.emplace_back("checkpoints", join_csv(std::vector<std::uint64_t>(
                                    checkpoints.begin(), checkpoints.end())));
  v.emplace_back("successive_sup", join_csv(conv.successive_sup));
  v.emplace_back("tolerance", io::format_double(conv.tolerance));
  v.emplace_back("pass", conv.pass ? "true" : "false");
  v.emplace_back("section", "blocks");
  v.emplace_back("n_blocks", std::to_string(c.blocks));
  v.emplace_back("max_pairwise_sup", io::format_double(blocks.max_pairwise_sup));
  v.emplace_back("tolerance", io::format_double(blocks.tolerance));
  v.emplace_back("pass", blocks.pass ? "true" : "false");
  io::write_manifest(v, out_path(c, "validation.txt"));
  finish_run(c);

  std::printf("convergence: last sup-change %.4f (tol %.3f) -> %s\n",
              conv.successive_sup.empty() ? 0.0 : conv.successive_sup.back(),
              conv.tolerance, conv.pass ? "pass" : "FAIL");
  std::printf("blocks: max pairwise sup %.4f (tol %.3f) -> %s\n",
              blocks.max_pairwise_sup, blocks.tolerance,
              blocks.pass ? "pass" : "FAIL");
  return (conv.pass && blocks.pass) ? 0 : 1;
}

int run_baselines(RunConfig& c) {
  auto model = build_model(c);
  auto approx = build_approx(c, model);
  resolve_y_obs(c, model);
  resolve_flip_point(c, model);
  if (c.n_sim == 0) throw UsageError("--n-sim must be positive");
  ensure_out_dir(c);

  SimBatch batch = sample_generative(model, c.n_sim, c.seed);
  batch = window_select(batch, window_of(c, model));
  QDataset data = compute_q(batch, approx, c.coord, c.eps_clip);
  RankHistogram hist = marginal_histogram(data, c.bins);
  io::write_histogram_csv(hist, out_path(c, "histogram.csv"));
  maybe_svg(c, "histogram.csv");

  auto interval = credible_interval(approx, c.y_obs, c.coord, c.alpha);
  Chain chain =
      exact_chain(model, c.y_obs, c.coverage_draws, c.seed ^ 0xa0761d6478bd642fULL);
  CoverageEstimate cov = operational_coverage(interval, chain, c.coord, c.alpha);
  io::write_coverage_csv(cov, out_path(c, "coverage.csv"));
  finish_run(c);

  double max_dev = 0.0;
  for (double h : hist.heights) max_dev = std::max(max_dev, std::abs(h - 1.0));
  std::printf("pooled histogram over %zu pairs: max deviation from flat %.4f\n",
              data.size(), max_dev);
  std::printf("nominal %.2f credible interval [%.4f, %.4f]: operational "
              "coverage %.4f (se %.4f)\n",
              cov.nominal, cov.lo, cov.hi, cov.coverage, cov.se);
  return 0;
}

int run_command(RunConfig& c) {
  if (c.command == "simulate") return run_simulate(c);
  if (c.command == "fit") return run_fit(c, false);
  if (c.command == "diagnose") return run_fit(c, true);
  if (c.command == "surface") return run_surface(c);
  if (c.command == "validate") return run_validate(c);
  if (c.command == "baselines") return run_baselines(c);
  throw UsageError("unknown command in manifest: " + c.command);
}

// ---------------------------------------------------------------------------
// Demo presets
// ---------------------------------------------------------------------------

RunConfig demo_preset(const std::string& name, const RunConfig& base) {
  RunConfig c = base;
  c.demo_case = name;
  c.command = "diagnose";
  c.n_sim = 100000;
  c.keep_frac = 0.1;
  c.model = "conjugate";
  c.y_obs = {0.3};

  if (name == "conjugate-overdispersed") {
    c.approx = "gaussian";
    c.sd_scale = std::sqrt(2.0);
  } else if (name == "conjugate-underdispersed") {
    c.approx = "gaussian";
    c.sd_scale = 0.5;
  } else if (name == "conjugate-shift") {
    c.approx = "gaussian";
    c.mean_shift = 0.5;
  } else if (name == "identity") {
    c.approx = "exact";
  } else if (name == "logistic-vi") {
    c.model = "logistic";
    c.approx = "vi";
    c.prior_var = 2.0;
    c.n_obs = 20;
    c.p_reg = 3;
    c.keep_frac = 0.01;
    c.y_obs.clear();  // drawn from the model
    // The VI distortion is shallow; train to convergence on the small
    // windowed sample instead of trusting a noisy validation split.
    c.epochs = 400;
    c.patience = 400;
    c.batch = 128;
  } else if (name == "bivariate") {
    c.command = "surface";
    c.model = "conjugate-2d";
    c.approx = "gaussian";
    c.sd_scale = 0.5;
    c.y_obs = {0.3, -0.2};
  } else if (name == "false-flat") {
    // One-sided window at y_obs = 0.5 sees the local quantile shift; the
    // pooled histogram over all simulations averages the two sign regimes
    // into exact uniformity.
    c.approx = "sign-flip";
    c.amplitude = 0.15;
    c.flip_point = 0.0;
    c.y_obs = {0.5};
    c.keep_frac = 0.1;
    c.write_histogram = true;
  } else {
    throw UsageError("unknown demo case: " + name);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Flag wiring
// ---------------------------------------------------------------------------

void add_model_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--model", c.model,
                  "Generative model: conjugate, conjugate-2d, logistic")
      ->capture_default_str();
  cmd->add_option("--prior-mean", c.prior_mean, "Prior mean (conjugate models)")
      ->capture_default_str();
  cmd->add_option("--prior-var", c.prior_var, "Prior variance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--noise-var", c.noise_var,
                  "Observation noise variance (conjugate models)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--n-obs", c.n_obs, "Observations per dataset (logistic)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--p-reg", c.p_reg, "Regression coefficients (logistic)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--design-seed", c.design_seed,
                  "Seed of the fixed U(0,1) design matrix (logistic)")
      ->capture_default_str();
}

void add_approx_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--approx", c.approx,
                  "Approximation: exact, gaussian, sign-flip, vi")
      ->capture_default_str();
  cmd->add_option("--mean-shift", c.mean_shift,
                  "Posterior mean shift (approx=gaussian)")
      ->capture_default_str();
  cmd->add_option("--sd-scale", c.sd_scale,
                  "Posterior sd scale factor (approx=gaussian)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--amplitude", c.amplitude,
                  "Quantile-shift amplitude (approx=sign-flip)")
      ->capture_default_str();
  cmd->add_option("--flip-point", c.flip_point,
                  "Data value where the shift changes sign (default prior mean)");
}

void add_pipeline_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--y-obs", c.y_obs,
                  "Observed data vector (comma separated; drawn from the model "
                  "if omitted)")
      ->delimiter(',');
  cmd->add_option("--coord", c.coord, "Parameter coordinate to diagnose")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--n-sim", c.n_sim, "Number of simulated (x, y) pairs")
      ->required();
  cmd->add_option("--keep-frac", c.keep_frac,
                  "Fraction of pairs kept nearest to s(y_obs)")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
  cmd->add_flag("--standardize", c.standardize,
                "Z-score summary coordinates before windowing");
  cmd->add_option("--eps-clip", c.eps_clip, "PIT clipping margin")
      ->check(CLI::Range(1e-12, 0.01))
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "Master seed (simulation + training)")
      ->capture_default_str();
}

void add_net_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--hidden", c.hidden, "Hidden layer widths (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  cmd->add_option("--components", c.components, "Beta mixture components")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--param-floor", c.param_floor,
                  "Lower bound on Beta parameters")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--lr", c.lr, "Adam learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--batch", c.batch, "Minibatch size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--epochs", c.epochs, "Maximum training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--val-frac", c.val_frac, "Validation split fraction")
      ->check(CLI::Range(0.0, 0.5))
      ->capture_default_str();
  cmd->add_option("--patience", c.patience,
                  "Early-stopping patience (validation epochs)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_output_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--out", c.out, "Output directory")->required();
  cmd->add_flag("--svg", c.svg, "Also render SVGs next to the CSVs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "distmap: posterior-approximation diagnostics via fitted distortion "
      "maps"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read defaults from a key=value config file (sections name "
                 "the subcommand)");

  RunConfig cfg;

  auto* simulate =
      app.add_subcommand("simulate", "Sample (x, y, s(y)) pairs and window them");
  add_model_flags(simulate, cfg);
  add_pipeline_flags(simulate, cfg);
  add_output_flags(simulate, cfg);

  auto* fit = app.add_subcommand(
      "fit", "Fit the distortion map at y_obs and write curve/density CSVs");
  add_model_flags(fit, cfg);
  add_approx_flags(fit, cfg);
  add_pipeline_flags(fit, cfg);
  add_net_flags(fit, cfg);
  add_output_flags(fit, cfg);
  fit->add_flag("--histogram", cfg.write_histogram,
                "Also write the pooled PIT histogram of the windowed data");
  fit->add_option("--bins", cfg.bins, "Histogram bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* diagnose = app.add_subcommand(
      "diagnose", "Fit the distortion map and print a shape verdict");
  add_model_flags(diagnose, cfg);
  add_approx_flags(diagnose, cfg);
  add_pipeline_flags(diagnose, cfg);
  add_net_flags(diagnose, cfg);
  add_output_flags(diagnose, cfg);

  auto* surf = app.add_subcommand(
      "surface", "Fit the bivariate distortion and write the density surface");
  add_model_flags(surf, cfg);
  add_approx_flags(surf, cfg);
  add_pipeline_flags(surf, cfg);
  add_net_flags(surf, cfg);
  add_output_flags(surf, cfg);
  surf->add_option("--coord2", cfg.coord2, "Second parameter coordinate")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  auto* validate = app.add_subcommand(
      "validate", "Run convergence and block-agreement checks on the fit");
  add_model_flags(validate, cfg);
  add_approx_flags(validate, cfg);
  add_pipeline_flags(validate, cfg);
  add_net_flags(validate, cfg);
  add_output_flags(validate, cfg);
  validate->add_option("--checkpoints", cfg.checkpoints,
                       "Nested prefix sizes (last must be the windowed size)")
      ->delimiter(',');
  validate->add_option("--blocks", cfg.blocks, "Number of data blocks")
      ->check(CLI::Range(2, 64))
      ->capture_default_str();
  validate
      ->add_option("--tol-convergence", cfg.tol_convergence,
                   "Pass threshold for the final sup-change")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  validate
      ->add_option("--tol-blocks", cfg.tol_blocks,
                   "Pass threshold for the max pairwise sup")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* base = app.add_subcommand(
      "baselines",
      "Averaged diagnostics: pooled PIT histogram and operational coverage");
  add_model_flags(base, cfg);
  add_approx_flags(base, cfg);
  add_pipeline_flags(base, cfg);
  add_output_flags(base, cfg);
  base->add_option("--alpha", cfg.alpha, "Credible-interval level")
      ->check(CLI::Range(1e-6, 1.0 - 1e-6))
      ->capture_default_str();
  base->add_option("--bins", cfg.bins, "Histogram bins")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  base->add_option("--coverage-draws", cfg.coverage_draws,
                   "Exact-posterior draws for the coverage estimate")
      ->capture_default_str();

  std::string demo_case;
  auto* demo = app.add_subcommand("demo", "Run a named showcase configuration");
  demo->add_option("--case", demo_case,
                   "One of: conjugate-overdispersed, conjugate-underdispersed, "
                   "conjugate-shift, identity, logistic-vi, bivariate, "
                   "false-flat")
      ->required();
  add_output_flags(demo, cfg);
  demo->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  demo->add_option("--n-sim", cfg.n_sim,
                   "Override the preset simulation budget");

  std::string render_in, render_out, render_title;
  int render_width = 640, render_height = 640;
  auto* render =
      app.add_subcommand("render", "Render a diagnostic CSV as an SVG");
  render->add_option("--in", render_in, "Input CSV (curve, surface, histogram)")
      ->required();
  render->add_option("--svg-out", render_out, "Output SVG path")->required();
  render->add_option("--width", render_width, "SVG width in px")
      ->capture_default_str();
  render->add_option("--height", render_height, "SVG height in px")
      ->capture_default_str();
  render->add_option("--title", render_title, "Plot title");

  std::string replay_manifest, replay_out;
  auto* replay = app.add_subcommand(
      "replay", "Re-execute a recorded run from its manifest.txt");
  replay->add_option("--manifest", replay_manifest, "Path to manifest.txt")
      ->required();
  replay->add_option("--out", replay_out,
                     "Output directory (defaults to the recorded one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      cfg.command = "simulate";
      return run_command(cfg);
    }
    if (fit->parsed()) {
      cfg.command = "fit";
      return run_command(cfg);
    }
    if (diagnose->parsed()) {
      cfg.command = "diagnose";
      return run_command(cfg);
    }
    if (surf->parsed()) {
      cfg.command = "surface";
      return run_command(cfg);
    }
    if (validate->parsed()) {
      cfg.command = "validate";
      return run_command(cfg);
    }
    if (base->parsed()) {
      cfg.command = "baselines";
      return run_command(cfg);
    }
    if (demo->parsed()) {
      RunConfig preset = demo_preset(demo_case, cfg);
      if (demo->count("--n-sim") > 0) preset.n_sim = cfg.n_sim;
      return run_command(preset);
    }
    if (render->parsed()) {
      try {
        svg::Style style;
        style.width = render_width;
        style.height = render_height;
        style.title = render_title;
        svg::render_csv_file(render_in, render_out, style);
        return 0;
      } catch (const std::exception& e) {
        std::cerr << "render error: " << e.what() << "\n";
        return 2;
      }
    }
    if (replay->parsed()) {
      RunConfig rc = config_from_manifest(io::read_manifest(replay_manifest));
      if (!replay_out.empty()) rc.out = replay_out;
      return run_command(rc);
    }
    std::cerr << "no subcommand given\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
