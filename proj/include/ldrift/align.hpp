#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldrift/numkit/autodiff.hpp"
#include "ldrift/numkit/layers.hpp"
#include "ldrift/numkit/tensor.hpp"

namespace ldrift::align {

// Per-dimension mean and population standard deviation of a latent cloud.
struct GaussianMoments {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t dim() const { return mean.size(); }
};

GaussianMoments moments(const numkit::Tensor& batch);

// W_d = sqrt(‖μ_a − μ_b‖² + ‖σ_a − σ_b‖²). Matches the 2-Wasserstein distance
// between Gaussians only when both covariances are diagonal.
double wasserstein_distance(const GaussianMoments& a, const GaussianMoments& b);

// Same quantity with the moments of `batch` taken on the tape, so gradients
// flow back into whatever produced it. σ uses sqrt(var + variance_floor).
numkit::Var wasserstein_to(const numkit::Var& batch, const GaussianMoments& target,
                           double variance_floor = 1e-12);

enum class MomentScope { kPerBatch, kGlobal };

std::string to_string(MomentScope scope);
MomentScope moment_scope_from_string(const std::string& name);

struct AlignConfig {
  std::size_t latent_dim = 8;
  std::vector<std::size_t> hidden = {32, 32};
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  MomentScope moment_scope = MomentScope::kPerBatch;
  // Std of the perturbation added to the identity skip weights at init.
  double init_noise = 1e-3;

  void validate() const;
};

// y = z·(I + noise) + b  +  mlp(z), where mlp is an ELU stack whose last
// layer starts near zero, so a fresh aligner is close to the identity map.
struct AlignParams {
  numkit::Dense skip;
  std::vector<numkit::Dense> hidden;
  numkit::Dense out;

  std::size_t latent_dim() const { return skip.in_dim(); }
  std::vector<std::pair<std::string, const numkit::Tensor*>> named_tensors() const;
  std::vector<std::pair<std::string, numkit::Tensor*>> named_tensors();
};

AlignParams init_align(const AlignConfig& config);

numkit::Tensor apply_align(const numkit::Tensor& z, const AlignParams& params);

struct AlignTrainResult {
  AlignParams params;
  std::vector<double> history;  // mean W_d over each epoch's steps
};

// Minimises W_d(target, moments(aligner(z_source))). Never sees labels.
AlignTrainResult train_align(const numkit::Tensor& z_source, const GaussianMoments& target,
                             const AlignConfig& config);

// Loss and parameter gradients on one batch; exposed for gradient checks.
double align_loss(const numkit::Tensor& z, const GaussianMoments& target, const AlignParams& params);
std::vector<numkit::Tensor> align_loss_gradient(const numkit::Tensor& z, const GaussianMoments& target,
                                                const AlignParams& params);

}  // namespace ldrift::align
