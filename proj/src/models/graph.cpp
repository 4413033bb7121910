#include "ldrift/graph.hpp"

#include <algorithm>
#include <fstream>
#include <utility>

#include "ldrift/errors.hpp"

namespace ldrift::graph {

TrafficGraph::TrafficGraph(numkit::Tensor node_features, std::vector<Edge> edges,
                           std::vector<int> labels)
    : features_(std::move(node_features)), labels_(std::move(labels)) {
  const std::size_t n = features_.rows();
  if (!labels_.empty() && labels_.size() != n) {
    throw DimensionError("graph has " + std::to_string(n) + " nodes but " +
                         std::to_string(labels_.size()) + " labels");
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
  });
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw StructuralError("graph contains duplicate edges");
  }
  offsets_.assign(n + 1, 0);
  src_.reserve(edges.size());
  dst_.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.src >= n || e.dst >= n) throw StructuralError("edge endpoint out of range");
    src_.push_back(e.src);
    dst_.push_back(e.dst);
    ++offsets_[e.dst + 1];
  }
  for (std::size_t v = 0; v < n; ++v) offsets_[v + 1] += offsets_[v];
}

std::vector<Edge> TrafficGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(src_.size());
  for (std::size_t e = 0; e < src_.size(); ++e) out.push_back({src_[e], dst_[e]});
  return out;
}

std::vector<std::size_t> TrafficGraph::neighbors_of(std::size_t v) const {
  if (v >= node_count()) {
    throw StructuralError("node " + std::to_string(v) + " out of range (graph has " +
                          std::to_string(node_count()) + " nodes)");
  }
  return {src_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
          src_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1])};
}

TrafficGraph knn_graph(const numkit::Tensor& latent, std::vector<int> labels,
                       const KnnConfig& config) {
  const std::size_t n = latent.rows();
  const std::size_t d = latent.cols();
  if (config.k == 0) throw ConfigError("kNN needs k >= 1");
  if (n <= config.k) {
    throw DataError("kNN graph needs more than k=" + std::to_string(config.k) + " nodes, got " +
                    std::to_string(n));
  }
  if (!latent.all_finite()) throw DataError("kNN graph input contains non-finite features");

  std::vector<Edge> edges;
  edges.reserve(n * (config.k + 1) * (config.symmetrize ? 2 : 1));
  std::vector<std::pair<double, std::size_t>> cand(n - 1);
  for (std::size_t v = 0; v < n; ++v) {
    const double* pv = latent.row(v).data();
    std::size_t m = 0;
    for (std::size_t u = 0; u < n; ++u) {
      if (u == v) continue;
      const double* pu = latent.row(u).data();
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = pu[j] - pv[j];
        dist += diff * diff;
      }
      cand[m++] = {dist, u};
    }
    // Pair ordering compares distance first, then index: the tie rule.
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(config.k), cand.end());
    for (std::size_t i = 0; i < config.k; ++i) {
      edges.push_back({cand[i].second, v});
      if (config.symmetrize) edges.push_back({v, cand[i].second});
    }
    edges.push_back({v, v});
  }
  if (config.symmetrize) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  }
  return TrafficGraph(latent, std::move(edges), std::move(labels));
}

void write_edge_list(const TrafficGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "src,dst\n";
  for (std::size_t e = 0; e < g.edge_count(); ++e) out << g.sources()[e] << ',' << g.targets()[e] << '\n';
}

}  // namespace ldrift::graph
