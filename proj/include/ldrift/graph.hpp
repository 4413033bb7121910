#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "ldrift/numkit/tensor.hpp"

namespace ldrift::graph {

struct KnnConfig {
  std::size_t k = 3;
  // Also add the reverse of every kNN edge. Off by default; breaks the
  // exact in-degree k+1 property.
  bool symmetrize = false;
};

// Directed edge: `dst` attends to `src`.
struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

// kNN graph over latent vectors. Edges are stored grouped by destination in
// ascending node order, sources ascending within each group.
class TrafficGraph {
 public:
  TrafficGraph() = default;
  TrafficGraph(numkit::Tensor node_features, std::vector<Edge> edges, std::vector<int> labels);

  std::size_t node_count() const { return features_.rows(); }
  std::size_t edge_count() const { return src_.size(); }
  const numkit::Tensor& node_features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::size_t>& sources() const { return src_; }
  const std::vector<std::size_t>& targets() const { return dst_; }
  std::vector<Edge> edges() const;

  // In-neighbors of v including v itself, ascending.
  std::vector<std::size_t> neighbors_of(std::size_t v) const;

 private:
  numkit::Tensor features_;
  std::vector<int> labels_;
  std::vector<std::size_t> src_;
  std::vector<std::size_t> dst_;
  std::vector<std::size_t> offsets_;  // edges into v are [offsets_[v], offsets_[v+1])
};

// For every node v: edges from its k nearest other nodes (squared Euclidean,
// ties to the lower index) into v, plus the self-loop (v, v).
TrafficGraph knn_graph(const numkit::Tensor& latent, std::vector<int> labels,
                       const KnnConfig& config = {});

// "src,dst" text export for debugging.
void write_edge_list(const TrafficGraph& g, const std::filesystem::path& path);

}  // namespace ldrift::graph
