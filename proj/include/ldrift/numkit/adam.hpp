#pragma once

#include <cstdint>
#include <vector>

#include "ldrift/numkit/tensor.hpp"

namespace ldrift::numkit {

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias-corrected moments. Moment buffers are created on the first
// step from the parameter shapes and must keep matching afterwards.
class Adam {
 public:
  explicit Adam(AdamOptions options = {});

  void step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads);

  std::int64_t step_count() const { return step_count_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<Tensor>& first_moment() const { return m_; }
  const std::vector<Tensor>& second_moment() const { return v_; }

 private:
  AdamOptions options_;
  std::int64_t step_count_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace ldrift::numkit
