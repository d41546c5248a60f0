#include "distmap/betamdn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "distmap/math.hpp"
#include "distmap/rng.hpp"

namespace distmap {

namespace {

void check_config(const NetConfig& cfg) {
  if (cfg.input_dim < 1)
    throw std::invalid_argument("NetConfig: input_dim must be positive");
  for (int w : cfg.hidden_widths)
    if (w < 1)
      throw std::invalid_argument("NetConfig: hidden widths must be positive");
  if (cfg.n_components < 1)
    throw std::invalid_argument("NetConfig: n_components must be >= 1");
  if (!(cfg.param_floor > 0.0) || !(cfg.param_floor < 1.0))
    throw std::invalid_argument("NetConfig: param_floor must lie in (0,1)");
}

std::vector<int> layer_widths(const NetConfig& cfg) {
  std::vector<int> w;
  w.push_back(cfg.input_dim);
  for (int h : cfg.hidden_widths) w.push_back(h);
  w.push_back(cfg.output_dim());
  return w;
}

// Scratch buffers for batched forward/backward passes, reused across calls.
struct Workspace {
  std::vector<std::vector<double>> act;  // act[0] = inputs, act[l] = hidden l
  std::vector<double> out;               // raw output pre-activations
  std::vector<double> dout;              // loss gradient wrt out
  std::vector<double> dh;                // gradient wrt current hidden layer
  std::vector<double> dz;                // gradient wrt pre-activations
  std::vector<double> losses;            // per-record losses

  void resize(const std::vector<int>& widths, std::size_t batch) {
    act.resize(widths.size() - 1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
      act[l].resize(batch * widths[l]);
    out.resize(batch * widths.back());
    dout.resize(batch * widths.back());
    std::size_t max_hidden = 1;
    for (std::size_t l = 1; l + 1 < widths.size(); ++l)
      max_hidden = std::max(max_hidden, static_cast<std::size_t>(widths[l]));
    dh.resize(batch * max_hidden);
    dz.resize(batch * max_hidden);
    losses.resize(batch);
  }
};

// Fill act/out for the records selected by indices.
void forward_batch(const NetParams& p, const QDataset& data,
                   std::span<const std::size_t> indices,
                   const std::vector<int>& widths, Workspace& ws) {
  const std::size_t batch = indices.size();
  const int in_dim = widths[0];
  const std::size_t n_hidden = widths.size() - 2;

  for (std::size_t i = 0; i < batch; ++i) {
    const std::vector<double>& s = data.records[indices[i]].input;
    double* row = &ws.act[0][i * in_dim];
    for (int k = 0; k < in_dim; ++k)
      row[k] = (s[k] - p.input_mean[k]) / p.input_sd[k];
  }

  for (std::size_t l = 0; l <= n_hidden; ++l) {
    const int win = widths[l];
    const int wout = widths[l + 1];
    const bool is_output = (l == n_hidden);
    const std::vector<double>& in = ws.act[l];
    std::vector<double>& outbuf = is_output ? ws.out : ws.act[l + 1];
    const Matrix& w = p.weights[l];
    const std::vector<double>& bias = p.biases[l];
    for (std::size_t i = 0; i < batch; ++i) {
      const double* in_row = &in[i * win];
      double* out_row = &outbuf[i * wout];
      for (int o = 0; o < wout; ++o) {
        const double* w_row = &w.data[static_cast<std::size_t>(o) * win];
        double acc = bias[o];
        for (int k = 0; k < win; ++k) acc += in_row[k] * w_row[k];
        out_row[o] = is_output ? acc : std::tanh(acc);
      }
    }
  }
}

// Per-record loss and (optionally) dloss/dout from the raw outputs.
// Returns the mean loss over the batch.
double head_loss(const NetConfig& cfg, const QDataset& data,
                 std::span<const std::size_t> indices, Workspace& ws,
                 bool want_grad) {
  const std::size_t batch = indices.size();
  const int K = cfg.n_components;
  const int out_dim = cfg.output_dim();
  std::vector<double> a(K), b(K), log_pi(K), lk(K), r(K);

  double total = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double q = data.records[indices[i]].q;
    const double lq = std::log(q);
    const double l1q = std::log1p(-q);
    const double* o = &ws.out[i * out_dim];

    for (int k = 0; k < K; ++k) {
      a[k] = math::softplus(o[2 * k]) + cfg.param_floor;
      b[k] = math::softplus(o[2 * k + 1]) + cfg.param_floor;
    }
    double lse_u;
    if (K == 1) {
      log_pi[0] = 0.0;
      lse_u = 0.0;
    } else {
      double mx = 0.0;  // the fixed last logit
      for (int k = 0; k < K - 1; ++k) mx = std::max(mx, o[2 * K + k]);
      double acc = std::exp(0.0 - mx);
      for (int k = 0; k < K - 1; ++k) acc += std::exp(o[2 * K + k] - mx);
      lse_u = mx + std::log(acc);
      for (int k = 0; k < K - 1; ++k) log_pi[k] = o[2 * K + k] - lse_u;
      log_pi[K - 1] = -lse_u;
    }

    for (int k = 0; k < K; ++k)
      lk[k] = log_pi[k] + (a[k] - 1.0) * lq + (b[k] - 1.0) * l1q -
              math::log_beta(a[k], b[k]);
    const double lse = math::log_sum_exp(std::span<const double>(lk.data(), K));
    ws.losses[i] = -lse;
    total += -lse;

    if (!want_grad) continue;
    double* g = &ws.dout[i * out_dim];
    for (int k = 0; k < K; ++k) {
      r[k] = std::exp(lk[k] - lse);
      const double dig_ab = math::digamma(a[k] + b[k]);
      g[2 * k] = r[k] * (math::digamma(a[k]) - dig_ab - lq) *
                 math::sigmoid(o[2 * k]);
      g[2 * k + 1] = r[k] * (math::digamma(b[k]) - dig_ab - l1q) *
                     math::sigmoid(o[2 * k + 1]);
    }
    for (int k = 0; k < K - 1; ++k)
      g[2 * K + k] = std::exp(log_pi[k]) - r[k];
  }
  return total / static_cast<double>(batch);
}

// Backpropagate ws.dout through the network, accumulating the mean gradient
// into flat (laid out per flatten(): per layer, weights then biases).
void backward_batch(const NetParams& p, std::span<const std::size_t> indices,
                    const std::vector<int>& widths, Workspace& ws,
                    std::vector<double>& flat) {
  const std::size_t batch = indices.size();
  const double inv_b = 1.0 / static_cast<double>(batch);
  const std::size_t n_layers = widths.size() - 1;

  // Offsets of each layer's weight/bias block in the flat vector.
  std::vector<std::size_t> off_w(n_layers), off_b(n_layers);
  std::size_t off = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    off_w[l] = off;
    off += static_cast<std::size_t>(widths[l + 1]) * widths[l];
    off_b[l] = off;
    off += widths[l + 1];
  }

  // dZ for the output layer is dout itself (linear output head).
  std::vector<double>* dz_cur = &ws.dout;
  for (std::size_t li = n_layers; li-- > 0;) {
    const int win = widths[li];
    const int wout = widths[li + 1];
    const std::vector<double>& in = ws.act[li];

    double* gw = &flat[off_w[li]];
    double* gb = &flat[off_b[li]];
    for (std::size_t i = 0; i < batch; ++i) {
      const double* dz_row = &(*dz_cur)[i * wout];
      const double* in_row = &in[i * win];
      for (int o = 0; o < wout; ++o) {
        const double d = dz_row[o] * inv_b;
        if (d == 0.0) continue;
        double* gw_row = &gw[static_cast<std::size_t>(o) * win];
        for (int k = 0; k < win; ++k) gw_row[k] += d * in_row[k];
        gb[o] += d;
      }
    }

    if (li == 0) break;
    // dZ for the previous layer: backproject through the weights, then
    // through tanh (dZ_prev = (dZ W) .* (1 - act^2)). The projection is
    // written straight into the destination rows, so only two buffers
    // alternate across layers.
    std::vector<double>& dz_next = (dz_cur == &ws.dz) ? ws.dh : ws.dz;
    const Matrix& w = p.weights[li];
    for (std::size_t i = 0; i < batch; ++i) {
      const double* dz_row = &(*dz_cur)[i * wout];
      double* next_row = &dz_next[i * win];
      std::fill(next_row, next_row + win, 0.0);
      for (int o = 0; o < wout; ++o) {
        const double d = dz_row[o];
        if (d == 0.0) continue;
        const double* w_row = &w.data[static_cast<std::size_t>(o) * win];
        for (int k = 0; k < win; ++k) next_row[k] += d * w_row[k];
      }
      const double* act_row = &ws.act[li][i * win];
      for (int k = 0; k < win; ++k)
        next_row[k] *= 1.0 - act_row[k] * act_row[k];
    }
    dz_cur = &dz_next;
  }
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

void validate_data(const QDataset& data, const NetConfig& cfg,
                   const char* who) {
  if (data.records.empty())
    throw std::invalid_argument(std::string(who) + ": empty dataset");
  if (data.input_dim() != cfg.input_dim)
    throw std::invalid_argument(std::string(who) + ": input_dim mismatch");
  for (const QRecord& rec : data.records)
    if (!(rec.q > 0.0) || !(rec.q < 1.0))
      throw std::invalid_argument(std::string(who) +
                                  ": q values must lie strictly in (0,1)");
}

}  // namespace

std::size_t NetParams::n_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l)
    n += weights[l].data.size() + biases[l].size();
  return n;
}

std::vector<double> NetParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(n_params());
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.insert(flat.end(), weights[l].data.begin(), weights[l].data.end());
    flat.insert(flat.end(), biases[l].begin(), biases[l].end());
  }
  return flat;
}

void NetParams::unflatten(std::span<const double> flat) {
  if (flat.size() != n_params())
    throw std::invalid_argument("NetParams::unflatten: size mismatch");
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    std::copy(flat.begin() + pos, flat.begin() + pos + weights[l].data.size(),
              weights[l].data.begin());
    pos += weights[l].data.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + biases[l].size(),
              biases[l].begin());
    pos += biases[l].size();
  }
}

NetParams init_params(const NetConfig& config) {
  check_config(config);
  const std::vector<int> widths = layer_widths(config);
  NetParams p;
  p.config = config;
  p.input_mean.assign(config.input_dim, 0.0);
  p.input_sd.assign(config.input_dim, 1.0);

  RngStream rng(config.init_seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    Matrix w;
    w.rows = widths[l + 1];
    w.cols = widths[l];
    w.data.resize(static_cast<std::size_t>(w.rows) * w.cols);
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l]));
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(widths[l + 1], 0.0);
  }
  // Start at the identity map: every component at Beta(1,1), uniform weights.
  const double head_bias = math::softplus_inv(1.0 - config.param_floor);
  std::vector<double>& out_bias = p.biases.back();
  for (int k = 0; k < config.n_components; ++k) {
    out_bias[2 * k] = head_bias;
    out_bias[2 * k + 1] = head_bias;
  }
  return p;
}

NetParams identity_params(const NetConfig& config) {
  NetParams p = init_params(config);
  for (Matrix& w : p.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
  for (std::size_t l = 0; l + 1 < p.biases.size(); ++l)
    std::fill(p.biases[l].begin(), p.biases[l].end(), 0.0);
  std::vector<double>& out_bias = p.biases.back();
  std::fill(out_bias.begin(), out_bias.end(), 0.0);
  const double head_bias = math::softplus_inv(1.0 - config.param_floor);
  for (int k = 0; k < config.n_components; ++k) {
    out_bias[2 * k] = head_bias;
    out_bias[2 * k + 1] = head_bias;
  }
  p.input_mean.assign(config.input_dim, 0.0);
  p.input_sd.assign(config.input_dim, 1.0);
  return p;
}

BetaParams forward(const NetParams& p, std::span<const double> input) {
  const NetConfig& cfg = p.config;
  if (static_cast<int>(input.size()) != cfg.input_dim)
    throw std::invalid_argument("forward: input dimension mismatch");

  std::vector<double> cur(input.begin(), input.end());
  for (int k = 0; k < cfg.input_dim; ++k)
    cur[k] = (cur[k] - p.input_mean[k]) / p.input_sd[k];

  const std::size_t n_layers = p.weights.size();
  std::vector<double> next;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Matrix& w = p.weights[l];
    next.assign(w.rows, 0.0);
    for (int o = 0; o < w.rows; ++o) {
      double acc = p.biases[l][o];
      for (int k = 0; k < w.cols; ++k) acc += w.at(o, k) * cur[k];
      next[o] = (l + 1 < n_layers) ? std::tanh(acc) : acc;
      if (!std::isfinite(next[o]))
        throw std::runtime_error("forward: non-finite activation in layer " +
                                 std::to_string(l));
    }
    cur.swap(next);
  }

  const int K = cfg.n_components;
  BetaParams bp;
  bp.components.resize(K);
  std::vector<double> logits(K, 0.0);
  for (int k = 0; k < K - 1; ++k) logits[k] = cur[2 * K + k];
  const double lse = math::log_sum_exp(logits);
  for (int k = 0; k < K; ++k) {
    bp.components[k].a = math::softplus(cur[2 * k]) + cfg.param_floor;
    bp.components[k].b = math::softplus(cur[2 * k + 1]) + cfg.param_floor;
    bp.components[k].weight = std::exp(logits[k] - lse);
  }
  return bp;
}

double beta_logpdf(double q, const BetaParams& bp) {
  if (!(q > 0.0) || !(q < 1.0))
    throw std::domain_error("beta_logpdf: q must lie strictly in (0,1)");
  const double lq = std::log(q);
  const double l1q = std::log1p(-q);
  std::vector<double> terms;
  terms.reserve(bp.components.size());
  for (const BetaComponent& c : bp.components)
    terms.push_back(std::log(c.weight) + (c.a - 1.0) * lq + (c.b - 1.0) * l1q -
                    math::log_beta(c.a, c.b));
  return math::log_sum_exp(terms);
}

double beta_mixture_cdf(double q, const BetaParams& bp) {
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  double acc = 0.0;
  for (const BetaComponent& c : bp.components)
    acc += c.weight * math::inc_beta(c.a, c.b, q);
  return acc;
}

double nll(const NetParams& params, const QDataset& data) {
  validate_data(data, params.config, "nll");
  const std::vector<int> widths = layer_widths(params.config);
  const std::vector<std::size_t> idx = all_indices(data.records.size());

  Workspace ws;
  constexpr std::size_t kChunk = 1024;
  ws.resize(widths, std::min(kChunk, idx.size()));
  double total = 0.0;
  for (std::size_t start = 0; start < idx.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, idx.size() - start);
    const std::span<const std::size_t> slice(idx.data() + start, len);
    forward_batch(params, data, slice, widths, ws);
    total += head_loss(params.config, data, slice, ws, false) *
             static_cast<double>(len);
  }
  return total / static_cast<double>(idx.size());
}

std::vector<double> grad(const NetParams& params, const QDataset& data,
                         std::span<const std::size_t> indices) {
  validate_data(data, params.config, "grad");
  if (indices.empty()) throw std::invalid_argument("grad: empty index set");
  const std::vector<int> widths = layer_widths(params.config);

  std::vector<double> flat(params.n_params(), 0.0);
  Workspace ws;
  constexpr std::size_t kChunk = 1024;
  ws.resize(widths, std::min(kChunk, indices.size()));
  std::vector<double> chunk_grad(params.n_params(), 0.0);
  const double n = static_cast<double>(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, indices.size() - start);
    const std::span<const std::size_t> slice(indices.data() + start, len);
    forward_batch(params, data, slice, widths, ws);
    head_loss(params.config, data, slice, ws, true);
    std::fill(chunk_grad.begin(), chunk_grad.end(), 0.0);
    backward_batch(params, slice, widths, ws, chunk_grad);
    const double scale = static_cast<double>(len) / n;
    for (std::size_t i = 0; i < flat.size(); ++i)
      flat[i] += scale * chunk_grad[i];
  }
  return flat;
}

std::vector<double> grad(const NetParams& params, const QDataset& data) {
  const std::vector<std::size_t> idx = all_indices(data.records.size());
  return grad(params, data, idx);
}

std::pair<NetParams, TrainReport> train(const QDataset& data,
                                        const NetConfig& net_cfg,
                                        const TrainConfig& train_cfg) {
  check_config(net_cfg);
  validate_data(data, net_cfg, "train");
  if (!(train_cfg.learning_rate > 0.0))
    throw std::invalid_argument("train: learning_rate must be positive");
  if (train_cfg.batch_size < 1)
    throw std::invalid_argument("train: batch_size must be positive");
  if (train_cfg.max_epochs < 1)
    throw std::invalid_argument("train: max_epochs must be positive");
  if (!(train_cfg.validation_fraction > 0.0) ||
      !(train_cfg.validation_fraction < 0.5))
    throw std::invalid_argument(
        "train: validation_fraction must lie in (0, 0.5)");
  if (train_cfg.patience < 1)
    throw std::invalid_argument("train: patience must be positive");

  const std::size_t n = data.records.size();
  if (n < static_cast<std::size_t>(10 * train_cfg.batch_size))
    std::fprintf(stderr,
                 "train: warning: %zu records is below 10x batch_size (%d)\n",
                 n, train_cfg.batch_size);

  const auto t_start = std::chrono::steady_clock::now();
  RngStream rng(train_cfg.seed);

  std::vector<std::size_t> perm = all_indices(n);
  for (std::size_t i = n; i-- > 1;)
    std::swap(perm[i], perm[rng.uniform_below(i + 1)]);

  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::llround(train_cfg.validation_fraction * static_cast<double>(n))));
  if (n_val >= n)
    throw std::invalid_argument("train: validation split leaves no training data");
  std::vector<std::size_t> val_idx(perm.end() - n_val, perm.end());
  std::vector<std::size_t> train_idx(perm.begin(), perm.end() - n_val);

  NetParams params = init_params(net_cfg);
  // Standardize inputs with training-split statistics.
  const int d = net_cfg.input_dim;
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t i : train_idx)
    for (int k = 0; k < d; ++k) mean[k] += data.records[i].input[k];
  for (int k = 0; k < d; ++k) mean[k] /= static_cast<double>(train_idx.size());
  for (std::size_t i : train_idx)
    for (int k = 0; k < d; ++k) {
      const double c = data.records[i].input[k] - mean[k];
      sd[k] += c * c;
    }
  for (int k = 0; k < d; ++k) {
    sd[k] = std::sqrt(sd[k] / static_cast<double>(
                                  train_idx.size() > 1 ? train_idx.size() - 1 : 1));
    if (!(sd[k] > 0.0)) sd[k] = 1.0;
  }
  params.input_mean = mean;
  params.input_sd = sd;

  const std::vector<int> widths = layer_widths(net_cfg);
  const std::size_t batch =
      std::min<std::size_t>(train_cfg.batch_size, train_idx.size());
  Workspace ws;
  ws.resize(widths, std::max<std::size_t>(batch, 1024));

  // Adam state over the flat parameter vector.
  std::vector<double> theta = params.flatten();
  std::vector<double> m(theta.size(), 0.0), v(theta.size(), 0.0);
  std::vector<double> g(theta.size());
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  double beta1_t = 1.0, beta2_t = 1.0;

  TrainReport report;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<double> best_theta = theta;

  const auto eval_split = [&](const std::vector<std::size_t>& idx) {
    double total = 0.0;
    for (std::size_t start = 0; start < idx.size(); start += 1024) {
      const std::size_t len = std::min<std::size_t>(1024, idx.size() - start);
      const std::span<const std::size_t> slice(idx.data() + start, len);
      forward_batch(params, data, slice, widths, ws);
      total += head_loss(net_cfg, data, slice, ws, false) *
               static_cast<double>(len);
    }
    return total / static_cast<double>(idx.size());
  };

  for (int epoch = 0; epoch < train_cfg.max_epochs; ++epoch) {
    for (std::size_t i = train_idx.size(); i-- > 1;)
      std::swap(train_idx[i], train_idx[rng.uniform_below(i + 1)]);

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < train_idx.size(); start += batch) {
      const std::size_t len = std::min(batch, train_idx.size() - start);
      const std::span<const std::size_t> slice(train_idx.data() + start, len);
      forward_batch(params, data, slice, widths, ws);
      const double loss = head_loss(net_cfg, data, slice, ws, true);
      if (!std::isfinite(loss))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(start / batch));
      std::fill(g.begin(), g.end(), 0.0);
      backward_batch(params, slice, widths, ws, g);

      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      const double corr =
          train_cfg.learning_rate * std::sqrt(1.0 - beta2_t) / (1.0 - beta1_t);
      for (std::size_t j = 0; j < theta.size(); ++j) {
        m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g[j];
        v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g[j] * g[j];
        theta[j] -= corr * m[j] / (std::sqrt(v[j]) + kEps);
      }
      params.unflatten(theta);
      epoch_loss += loss * static_cast<double>(len);
      seen += len;
    }
    report.train_nll.push_back(epoch_loss / static_cast<double>(seen));

    const double val = eval_split(val_idx);
    report.val_nll.push_back(val);
    report.stopped_epoch = epoch + 1;
    if (val < best_val) {
      best_val = val;
      report.best_epoch = epoch + 1;
      best_theta = theta;
    }
    if (epoch + 1 - report.best_epoch >= train_cfg.patience) break;
  }

  params.unflatten(best_theta);
  report.final_nll = best_val;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return {std::move(params), std::move(report)};
}

}  // namespace distmap
