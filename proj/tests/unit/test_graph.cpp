#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "ldrift/errors.hpp"
#include "ldrift/graph.hpp"
#include "support/oracles.hpp"

using namespace ldrift;
using numkit::Tensor;

namespace {

std::set<std::pair<std::size_t, std::size_t>> edge_set(const graph::TrafficGraph& g) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : g.edges()) out.insert({e.src, e.dst});
  return out;
}

Tensor column(std::initializer_list<double> xs) {
  Tensor t(xs.size(), 1);
  std::size_t i = 0;
  for (double x : xs) t(i++, 0) = x;
  return t;
}

}  // namespace

TEST_CASE("worked 1-D example") {
  const auto g = graph::knn_graph(column({0, 1, 2, 3, 100}), {0, 0, 0, 0, 1}, {3});
  CHECK(g.neighbors_of(2) == std::vector<std::size_t>{0, 1, 2, 3});
  // Node 4 is far from everything; its three nearest are 3, 2, 1.
  CHECK(g.neighbors_of(4) == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(g.edge_count() == 5 * 4);
}

TEST_CASE("four nodes with k=3 give the complete digraph") {
  numkit::Rng rng(2);
  const auto g = graph::knn_graph(testing::random_tensor(4, 3, rng), {0, 1, 0, 1}, {3});
  CHECK(g.edge_count() == 16);
  for (std::size_t v = 0; v < 4; ++v) CHECK(g.neighbors_of(v) == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("ties go to the lower index") {
  // Nodes 1, 2, 3 all sit at distance 1 from node 0.
  const auto g = graph::knn_graph(column({0, 1, 1, -1, 5}), {0, 0, 0, 0, 0}, {2});
  CHECK(g.neighbors_of(0) == std::vector<std::size_t>{0, 1, 2});
  // Duplicates: nodes 1 and 2 coincide, so each is the other's first pick.
  CHECK(g.neighbors_of(1) == std::vector<std::size_t>{0, 1, 2});
  const auto again = graph::knn_graph(column({0, 1, 1, -1, 5}), {0, 0, 0, 0, 0}, {2});
  CHECK(again.edges() == g.edges());
}

TEST_CASE("neighbors_of contract") {
  numkit::Rng rng(8);
  const auto g = graph::knn_graph(testing::random_tensor(30, 4, rng), std::vector<int>(30, 0), {3});
  for (std::size_t v = 0; v < 30; ++v) {
    const auto nb = g.neighbors_of(v);
    CHECK(nb.size() == 4);
    CHECK(std::find(nb.begin(), nb.end(), v) != nb.end());
    CHECK(std::is_sorted(nb.begin(), nb.end()));
    CHECK(g.neighbors_of(v) == nb);
  }
  CHECK_THROWS_AS(g.neighbors_of(30), StructuralError);
}

TEST_CASE("matches the brute-force oracle") {
  numkit::Rng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 1 + rng.below(5);
    const std::size_t n = k + 1 + rng.below(200 - k);
    const std::size_t d = 1 + rng.below(4);
    Tensor x = testing::random_tensor(n, d, rng);
    // Every third instance is snapped to a coarse grid to force ties.
    if (trial % 3 == 0) {
      for (auto& v : x.data()) v = std::round(v * 2.0);
    }
    const auto g = graph::knn_graph(x, std::vector<int>(n, 0), {k});
    REQUIRE(edge_set(g) == testing::brute_force_knn_edges(x, k));
    REQUIRE(g.edge_count() == n * (k + 1));
  }
}

TEST_CASE("row permutation gives an isomorphic graph") {
  numkit::Rng rng(42);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 40;
    const Tensor x = testing::random_tensor(n, 3, rng);
    const auto perm = rng.permutation(n);  // new row i holds old row perm[i]
    Tensor y(n, 3);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 3; ++j) y(i, j) = x(perm[i], j);
    const auto gx = edge_set(graph::knn_graph(x, std::vector<int>(n, 0), {3}));
    std::set<std::pair<std::size_t, std::size_t>> mapped;
    for (const auto& [s, d] : edge_set(graph::knn_graph(y, std::vector<int>(n, 0), {3}))) {
      mapped.insert({perm[s], perm[d]});
    }
    CHECK(mapped == gx);
  }
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(graph::knn_graph(column({0, 1, 2}), {0, 0, 0}, {3}), DataError);
  CHECK_THROWS_AS(graph::knn_graph(column({0, 1, 2}), {0, 0, 0}, {0}), ConfigError);
  CHECK_THROWS_AS(graph::knn_graph(column({0, 1, std::nan(""), 3, 4}), {0, 0, 0, 0, 0}, {3}), DataError);
  CHECK_THROWS_AS(graph::knn_graph(column({0, 1, 2, 3, 4}), {0, 0}, {3}), DimensionError);
}

TEST_CASE("symmetrize adds reverse edges") {
  const auto g = graph::knn_graph(column({0, 1, 2, 3, 100}), {0, 0, 0, 0, 1}, {1, true});
  const auto es = edge_set(g);
  for (const auto& [s, d] : es) CHECK(es.count({d, s}) == 1);
  CHECK(es.count({3, 4}) == 1);
  CHECK(es.count({4, 3}) == 1);
}

TEST_CASE("edge list export") {
  const auto g = graph::knn_graph(column({0, 1, 2, 3}), {0, 0, 1, 1}, {1});
  const auto path = std::filesystem::temp_directory_path() / "ldrift_graph_test.edges";
  graph::write_edge_list(g, path);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  std::set<std::pair<std::size_t, std::size_t>> read;
  while (std::getline(in, line)) {
    if (line.empty() || line.find(',') == std::string::npos || !std::isdigit(line[0])) continue;
    const auto comma = line.find(',');
    read.insert({std::stoul(line.substr(0, comma)), std::stoul(line.substr(comma + 1))});
    ++lines;
  }
  CHECK(lines == g.edge_count());
  CHECK(read == edge_set(g));
  std::filesystem::remove(path);
}
