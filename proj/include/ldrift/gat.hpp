#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldrift/graph.hpp"
#include "ldrift/numkit/layers.hpp"
#include "ldrift/numkit/tensor.hpp"

namespace ldrift::gat {

struct GatConfig {
  std::size_t in_dim = 8;
  std::size_t hidden_dim = 16;
  std::size_t heads = 4;
  std::size_t layers = 2;
  double leaky_relu_alpha = 0.2;
  double dropout_rate = 0.0;
  std::size_t epochs = 200;
  double learning_rate = 5e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct GatHead {
  numkit::Tensor weight;    // in×hidden
  numkit::Tensor attn_src;  // hidden×1, scores the neighbour being attended to
  numkit::Tensor attn_dst;  // hidden×1, scores the attending node
};

struct GatLayerParams {
  std::vector<GatHead> heads;
  bool concat = true;  // false on the last layer: heads are averaged

  std::size_t in_dim() const { return heads.front().weight.rows(); }
  std::size_t out_dim() const {
    const std::size_t w = heads.front().weight.cols();
    return concat ? w * heads.size() : w;
  }
};

// C_H: stacked attention layers and a linear two-class head.
struct GatParams {
  std::vector<GatLayerParams> layers;
  numkit::Dense output;
  double leaky_relu_alpha = 0.2;

  std::size_t in_dim() const { return layers.front().in_dim(); }
  std::vector<std::pair<std::string, const numkit::Tensor*>> named_tensors() const;
  std::vector<std::pair<std::string, numkit::Tensor*>> named_tensors();
};

GatParams init_gat(const GatConfig& config);

// Attention logits e_uv = leaky_relu(a_srcᵀ W h_u + a_dstᵀ W h_v) normalised
// over each node's in-edges; h'_v = elu(Σ_u α_uv W h_u) per head.
struct LayerOutput {
  numkit::Tensor features;
  std::vector<numkit::Tensor> attention;  // per head, E×1 aligned with graph edges
};
LayerOutput gat_layer(const numkit::Tensor& h, const graph::TrafficGraph& g,
                      const GatLayerParams& layer, double leaky_relu_alpha);

struct ClassifyTrace {
  numkit::Tensor probabilities;                       // n×2, rows sum to 1
  std::vector<std::vector<numkit::Tensor>> attention;  // [layer][head]
};

numkit::Tensor classify(const graph::TrafficGraph& g, const GatParams& params);
ClassifyTrace classify_with_attention(const graph::TrafficGraph& g, const GatParams& params);
std::vector<int> predict(const graph::TrafficGraph& g, const GatParams& params);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct GatTrainResult {
  GatParams params;
  std::vector<EpochStats> history;
};

// Full-graph cross-entropy training with Adam.
GatTrainResult train_gat(const graph::TrafficGraph& g, const GatConfig& config);

// Differentiable cross-entropy of the full model on g; exposed for gradient checks.
double gat_loss(const graph::TrafficGraph& g, const GatParams& params);
std::vector<numkit::Tensor> gat_loss_gradient(const graph::TrafficGraph& g, const GatParams& params);

}  // namespace ldrift::gat
