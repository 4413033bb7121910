#include "ldrift/numkit/adam.hpp"

#include <cmath>

#include "ldrift/errors.hpp"

namespace ldrift::numkit {

Adam::Adam(AdamOptions options) : options_(options) {
  if (!(options_.beta1 > 0.0 && options_.beta1 < 1.0) ||
      !(options_.beta2 > 0.0 && options_.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (!(options_.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (!(options_.learning_rate > 0.0)) throw ConfigError("Adam learning rate must be positive");
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads) {
  if (params.size() != grads.size()) {
    throw DimensionError("Adam: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  if (m_.size() != params.size()) throw DimensionError("Adam: parameter count changed");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k]->shape() != m_[k].shape() || grads[k]->shape() != m_[k].shape()) {
      throw DimensionError("Adam: parameter " + std::to_string(k) + " shape " +
                           params[k]->shape().str() + ", gradient " + grads[k]->shape().str() +
                           ", state " + m_[k].shape().str());
    }
  }

  ++step_count_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k]->data();
    auto g = grads[k]->data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
    }
  }
}

}  // namespace ldrift::numkit
