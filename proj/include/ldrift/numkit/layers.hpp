#pragma once

#include <cstddef>
#include <vector>

#include "ldrift/numkit/adam.hpp"
#include "ldrift/numkit/autodiff.hpp"
#include "ldrift/numkit/ops.hpp"
#include "ldrift/numkit/rng.hpp"
#include "ldrift/numkit/tensor.hpp"

namespace ldrift::numkit {

// Fully connected layer y = x·W + b with W stored in×out.
struct Dense {
  Tensor weight;
  Tensor bias;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }

  // Glorot-uniform weights, zero bias.
  static Dense glorot(std::size_t in, std::size_t out, Rng& rng);
  // Plain forward pass, no tape.
  Tensor forward(const Tensor& x) const;
};

Tensor glorot_uniform(std::size_t in, std::size_t out, Rng& rng);

// Copies parameter tensors onto a tape and remembers where they came from, so
// one call can push the resulting gradients through an optimizer.
class ParameterBinder {
 public:
  ParameterBinder(Tape& tape, bool trainable) : tape_(tape), trainable_(trainable) {}

  Var bind(Tensor& param);
  Var bind(const Tensor& param);

  struct DenseVars {
    Var weight;
    Var bias;
  };
  DenseVars bind(Dense& layer) { return {bind(layer.weight), bind(layer.bias)}; }
  DenseVars bind(const Dense& layer) { return {bind(layer.weight), bind(layer.bias)}; }

  // Gradients of every bound parameter, zero-filled where backward never reached.
  std::vector<Tensor> gradients() const;
  // Applies one optimizer step to the source tensors of mutable bindings.
  void apply(Adam& optimizer) const;

 private:
  Tape& tape_;
  bool trainable_;
  std::vector<Tensor*> sources_;
  std::vector<Var> vars_;
};

Var dense_forward(const ParameterBinder::DenseVars& layer, const Var& x);

}  // namespace ldrift::numkit
