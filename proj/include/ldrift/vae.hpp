#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ldrift/numkit/autodiff.hpp"
#include "ldrift/numkit/layers.hpp"
#include "ldrift/numkit/rng.hpp"
#include "ldrift/numkit/tensor.hpp"

namespace ldrift::vae {

struct VaeConfig {
  std::size_t input_dim = 0;
  std::size_t latent_dim = 8;
  std::vector<std::size_t> encoder_hidden = {64, 32};  // decoder mirrors it
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  double kl_weight = 1.0;
  // KL weight ramps linearly from 0 to kl_weight over this share of epochs.
  double warmup_fraction = 0.1;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  // Sigmoid suits min-max scaled inputs; linear suits z-scored inputs.
  bool sigmoid_output = true;

  void validate() const;
};

// One encoder/decoder pair (E_H with its decoder, or E_S with its decoder).
struct VaeParams {
  std::vector<numkit::Dense> encoder;  // ELU hidden layers
  numkit::Dense mean_head;
  numkit::Dense log_var_head;
  std::vector<numkit::Dense> decoder;  // ELU hidden layers then the output layer
  bool sigmoid_output = true;

  std::size_t input_dim() const { return encoder.empty() ? mean_head.in_dim() : encoder.front().in_dim(); }
  std::size_t latent_dim() const { return mean_head.out_dim(); }

  // Stable names used for checkpoint sections; order matches tensors().
  std::vector<std::pair<std::string, const numkit::Tensor*>> named_tensors() const;
  std::vector<std::pair<std::string, numkit::Tensor*>> named_tensors();
};

VaeParams init_vae(const VaeConfig& config);

struct LatentBatch {
  numkit::Tensor mean;
  numkit::Tensor log_var;
  numkit::Tensor sample;
  std::optional<std::vector<int>> labels;
};

// Gaussian posterior parameters plus a reparameterised draw
// sample = mean + exp(log_var / 2) ⊙ eps, eps ~ N(0, I) from rng.
LatentBatch encode(const numkit::Tensor& x, const VaeParams& params, numkit::Rng& rng);
numkit::Tensor decode(const numkit::Tensor& z, const VaeParams& params);
// Posterior mean only; consumes no randomness.
numkit::Tensor project(const numkit::Tensor& x, const VaeParams& params);

struct ElboTerms {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
};

// Reconstruction: squared error summed over features, averaged over rows.
// KL: per row 0.5 Σ_j (μ_j² + exp(log_var_j) − 1 − log_var_j), averaged over rows.
ElboTerms elbo_loss(const numkit::Tensor& x, const numkit::Tensor& reconstruction,
                    const numkit::Tensor& mean, const numkit::Tensor& log_var, double kl_weight);
numkit::Var elbo_loss(const numkit::Var& x, const numkit::Var& reconstruction,
                      const numkit::Var& mean, const numkit::Var& log_var, double kl_weight);
// Per-row KL divergence of N(mean, exp(log_var)) from N(0, I).
std::vector<double> kl_per_row(const numkit::Tensor& mean, const numkit::Tensor& log_var);

struct EpochLoss {
  double total = 0.0;
  double reconstruction = 0.0;
  double kl = 0.0;
  double kl_weight = 0.0;
};

struct VaeTrainResult {
  VaeParams params;
  std::vector<EpochLoss> history;
};

// Minibatch Adam on the ELBO. Throws DivergenceError on a non-finite loss.
VaeTrainResult train_vae(const numkit::Tensor& data, const VaeConfig& config);
// Same, starting from a copy of `initial` instead of a fresh initialisation.
VaeTrainResult train_vae(const numkit::Tensor& data, const VaeConfig& config, VaeParams initial);

}  // namespace ldrift::vae
