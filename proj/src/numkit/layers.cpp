#include "ldrift/numkit/layers.hpp"

#include <cmath>

#include "ldrift/errors.hpp"

namespace ldrift::numkit {

Tensor glorot_uniform(std::size_t in, std::size_t out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Tensor w(in, out);
  for (auto& v : w.data()) v = rng.uniform(-limit, limit);
  return w;
}

Dense Dense::glorot(std::size_t in, std::size_t out, Rng& rng) {
  if (in == 0 || out == 0) throw ConfigError("dense layer widths must be >= 1");
  return {glorot_uniform(in, out, rng), Tensor(1, out)};
}

Tensor Dense::forward(const Tensor& x) const {
  Tensor y = matmul(x, weight);
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += bias[c];
  return y;
}

Var ParameterBinder::bind(Tensor& param) {
  Var v = trainable_ ? tape_.variable(param) : tape_.constant(param);
  sources_.push_back(&param);
  vars_.push_back(v);
  return v;
}

Var ParameterBinder::bind(const Tensor& param) {
  Var v = trainable_ ? tape_.variable(param) : tape_.constant(param);
  sources_.push_back(nullptr);
  vars_.push_back(v);
  return v;
}

std::vector<Tensor> ParameterBinder::gradients() const {
  std::vector<Tensor> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) {
    if (v.grad().shape() == v.shape()) {
      out.push_back(v.grad());
    } else {
      out.emplace_back(v.shape().rows, v.shape().cols);
    }
  }
  return out;
}

void ParameterBinder::apply(Adam& optimizer) const {
  if (!trainable_) throw ConfigError("cannot step an optimizer on frozen parameters");
  const std::vector<Tensor> grads = gradients();
  std::vector<Tensor*> params;
  std::vector<const Tensor*> grad_ptrs;
  for (std::size_t k = 0; k < sources_.size(); ++k) {
    if (!sources_[k]) throw ConfigError("parameter was bound read-only");
    params.push_back(sources_[k]);
    grad_ptrs.push_back(&grads[k]);
  }
  optimizer.step(params, grad_ptrs);
}

Var dense_forward(const ParameterBinder::DenseVars& layer, const Var& x) {
  return add_bias(matmul(x, layer.weight), layer.bias);
}

}  // namespace ldrift::numkit
