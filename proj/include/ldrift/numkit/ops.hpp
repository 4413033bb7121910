#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ldrift/numkit/autodiff.hpp"
#include "ldrift/numkit/tensor.hpp"

namespace ldrift::numkit {

enum class ActivationKind { kRelu, kLeakyRelu, kElu, kSigmoid, kTanh, kExp, kIdentity };

struct Activation {
  ActivationKind kind = ActivationKind::kIdentity;
  // Negative-side slope for leaky_relu, must lie in (0, 1). Scale for elu.
  double alpha = 0.0;

  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation leaky_relu(double alpha);
  static Activation elu(double alpha = 1.0) { return {ActivationKind::kElu, alpha}; }
  static Activation sigmoid() { return {ActivationKind::kSigmoid, 0.0}; }
  static Activation tanh() { return {ActivationKind::kTanh, 0.0}; }
  static Activation exp() { return {ActivationKind::kExp, 0.0}; }
  static Activation identity() { return {ActivationKind::kIdentity, 0.0}; }
};

double activate(double x, const Activation& act);
Tensor activate(const Tensor& x, const Activation& act);

// Differentiable operations. All of them record onto the tape of their first
// operand.

Var matmul(const Var& a, const Var& b);
// x[n×m] + bias[1×m] broadcast over rows.
Var add_bias(const Var& x, const Var& bias);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double c);
Var activate(const Var& x, const Activation& act);
Var square(const Var& x);
// sqrt(x + eps). The derivative is taken as 0 where the result is exactly 0.
Var sqrt(const Var& x, double eps = 0.0);

// Reductions.
Var sum(const Var& x);                 // 1×1
Var mean(const Var& x);                // 1×1
Var column_mean(const Var& x);         // 1×m
Var row_sum(const Var& x);             // n×1

Var concat_cols(const std::vector<Var>& parts);
Var average(const std::vector<Var>& parts);
Var gather_rows(const Var& x, std::span<const std::size_t> index);

// Softmax of an E×1 logit column within groups given by segment[e] in
// [0, segment_count). Stabilised by subtracting each segment's max.
Tensor segment_softmax(const Tensor& logits, std::span<const std::size_t> segment,
                       std::size_t segment_count);
Var segment_softmax(const Var& logits, std::span<const std::size_t> segment,
                    std::size_t segment_count);

// out[dst[e], :] += weight[e] * values[src[e], :]; out has `out_rows` rows.
Var weighted_scatter(const Var& weight, const Var& values, std::span<const std::size_t> src,
                     std::span<const std::size_t> dst, std::size_t out_rows);

Var log_softmax_rows(const Var& x);
// Mean negative log-likelihood of integer targets under row log-probabilities.
Var nll_loss(const Var& log_probs, std::span<const int> targets);

Tensor softmax_rows(const Tensor& x);

}  // namespace ldrift::numkit
