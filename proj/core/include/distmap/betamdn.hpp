#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "distmap/approximators.hpp"

namespace distmap {

// Feed-forward network mapping a regression input (the data summary) to the
// parameters of a Beta mixture on (0,1). Tanh hidden layers; the output head
// produces K (a_k, b_k) pairs through softplus + param_floor and K-1 free
// logits for the mixture weights.
struct NetConfig {
  int input_dim = 1;
  std::vector<int> hidden_widths{80, 80};
  int n_components = 1;
  double param_floor = 1e-4;
  std::uint64_t init_seed = 0;

  int output_dim() const { return 3 * n_components - 1; }
};

struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
};

struct NetParams {
  NetConfig config;
  std::vector<Matrix> weights;              // one per layer, rows x cols = out x in
  std::vector<std::vector<double>> biases;  // one per layer

  // Input standardization (from the training split; identity by default).
  std::vector<double> input_mean;
  std::vector<double> input_sd;

  std::size_t n_params() const;
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

struct BetaComponent {
  double weight = 1.0;
  double a = 1.0;
  double b = 1.0;
};

struct BetaParams {
  std::vector<BetaComponent> components;
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_epochs = 200;
  double validation_fraction = 0.1;
  int patience = 20;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> train_nll;  // mean minibatch loss per epoch
  std::vector<double> val_nll;    // full validation pass per epoch
  int stopped_epoch = 0;
  int best_epoch = 0;
  double final_nll = 0.0;  // validation NLL of the returned weights
  double wall_seconds = 0.0;
};

// Random initialization: uniform fan-in weights, zero hidden biases, output
// biases set so every component starts at Beta(1,1) (the identity map).
NetParams init_params(const NetConfig& config);

// Exact identity-map weights: forward(identity_params(cfg), s) = Beta(1,1)
// for every s.
NetParams identity_params(const NetConfig& config);

BetaParams forward(const NetParams& params, std::span<const double> input);

// log of the mixture-Beta density at q in (0,1).
double beta_logpdf(double q, const BetaParams& bp);

// Mixture-Beta CDF: sum_k w_k I_q(a_k, b_k).
double beta_mixture_cdf(double q, const BetaParams& bp);

// Mean negative log-likelihood over the dataset.
double nll(const NetParams& params, const QDataset& data);

// Exact gradient of nll in the flatten() layout, over the whole dataset or a
// subset of record indices.
std::vector<double> grad(const NetParams& params, const QDataset& data);
std::vector<double> grad(const NetParams& params, const QDataset& data,
                         std::span<const std::size_t> indices);

// Adam-based minibatch training with validation-based early stopping;
// deterministic given the seeds. Returns the best-validation weights.
std::pair<NetParams, TrainReport> train(const QDataset& data,
                                        const NetConfig& net_cfg,
                                        const TrainConfig& train_cfg);

}  // namespace distmap
