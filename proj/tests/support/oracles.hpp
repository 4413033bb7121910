#pragma once

// Test-only reference implementations. None of these share code paths with the
// library routines they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "ldrift/graph.hpp"
#include "ldrift/numkit/autodiff.hpp"
#include "ldrift/numkit/rng.hpp"
#include "ldrift/numkit/tensor.hpp"

namespace ldrift::testing {

using numkit::Tensor;

inline Tensor random_tensor(std::size_t rows, std::size_t cols, numkit::Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

// Scalar function of several tensors recorded on a tape.
using TapeFn = std::function<numkit::Var(numkit::Tape&, const std::vector<numkit::Var>&)>;

// ‖analytic − numeric‖ / max(‖analytic‖ + ‖numeric‖, tiny), with the numeric
// gradient from central differences of step h over every input entry.
inline double gradient_relative_error(const TapeFn& fn, const std::vector<Tensor>& inputs, double h = 1e-5) {
  std::vector<Tensor> analytic;
  {
    numkit::Tape tape;
    std::vector<numkit::Var> vars;
    for (const auto& t : inputs) vars.push_back(tape.variable(t));
    auto out = fn(tape, vars);
    tape.backward(out);
    for (const auto& v : vars) {
      analytic.push_back(v.grad().shape() == v.shape() ? v.grad() : Tensor(v.shape().rows, v.shape().cols));
    }
  }
  auto eval = [&](const std::vector<Tensor>& in) {
    numkit::Tape tape;
    std::vector<numkit::Var> vars;
    for (const auto& t : in) vars.push_back(tape.constant(t));
    return fn(tape, vars).value()[0];
  };
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double orig = probe[k][i];
      probe[k][i] = orig + h;
      const double up = eval(probe);
      probe[k][i] = orig - h;
      const double down = eval(probe);
      probe[k][i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
  }
  const double denom = std::max(std::sqrt(a2) + std::sqrt(n2), 1e-12);
  return std::sqrt(diff2) / denom;
}

// Same relative error for a model's parameters: perturbs each entry of every
// tensor in `named` in place and re-evaluates `loss`.
template <typename Named, typename Loss>
double param_gradient_error(const Named& named, const std::vector<Tensor>& analytic, Loss&& loss,
                            double h = 1e-5) {
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (std::size_t k = 0; k < named.size(); ++k) {
    Tensor& t = *named[k].second;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t[i];
      t[i] = orig + h;
      const double up = loss();
      t[i] = orig - h;
      const double down = loss();
      t[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
  }
  return std::sqrt(diff2) / std::max(std::sqrt(a2) + std::sqrt(n2), 1e-12);
}

// Full sort of every candidate by (distance, index); takes the first k.
inline std::set<std::pair<std::size_t, std::size_t>> brute_force_knn_edges(const Tensor& x, std::size_t k) {
  std::set<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t v = 0; v < x.rows(); ++v) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t u = 0; u < x.rows(); ++u) {
      if (u == v) continue;
      double d = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) d += (x(u, j) - x(v, j)) * (x(u, j) - x(v, j));
      all.emplace_back(d, u);
    }
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < k; ++i) edges.insert({all[i].second, v});
    edges.insert({v, v});
  }
  return edges;
}

struct EnumeratedMetrics {
  double accuracy = 0.0;
  double precision[2] = {0, 0};
  double recall[2] = {0, 0};
  double f1[2] = {0, 0};
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
};

// Recounts every quantity straight from the label vectors.
inline EnumeratedMetrics enumerate_metrics(const std::vector<int>& truth, const std::vector<int>& pred) {
  EnumeratedMetrics m;
  const double n = static_cast<double>(truth.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == pred[i];
  m.accuracy = static_cast<double>(correct) / n;
  for (int c = 0; c < 2; ++c) {
    std::size_t predicted_c = 0, actual_c = 0, hit = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      predicted_c += pred[i] == c;
      actual_c += truth[i] == c;
      hit += pred[i] == c && truth[i] == c;
    }
    m.precision[c] = predicted_c ? static_cast<double>(hit) / static_cast<double>(predicted_c) : 0.0;
    m.recall[c] = actual_c ? static_cast<double>(hit) / static_cast<double>(actual_c) : 0.0;
    const double s = m.precision[c] + m.recall[c];
    m.f1[c] = s > 0 ? 2 * m.precision[c] * m.recall[c] / s : 0.0;
    const double w = static_cast<double>(actual_c) / n;
    m.weighted_precision += w * m.precision[c];
    m.weighted_recall += w * m.recall[c];
    m.weighted_f1 += w * m.f1[c];
  }
  return m;
}

inline std::vector<int> random_labels(std::size_t n, numkit::Rng& rng) {
  std::vector<int> out(n);
  for (auto& v : out) v = static_cast<int>(rng.below(2));
  return out;
}

}  // namespace ldrift::testing
