#include "ldrift/numkit/autodiff.hpp"

#include "ldrift/errors.hpp"

namespace ldrift::numkit {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, const std::vector<Var>& parents, BackwardFn backward) {
  bool needs = false;
  for (const auto& p : parents) {
    if (p.tape_ != this) throw StructuralError("operand recorded on a different tape");
    needs = needs || nodes_[p.id_].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{}, needs});
  return Var(this, nodes_.size() - 1);
}

Tensor* Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return &n.grad;
}

void Tape::backward(const Var& out) {
  if (out.tape_ != this) throw StructuralError("backward called on a foreign variable");
  if (out.shape() != Shape{1, 1}) {
    throw DimensionError("backward expects a 1x1 output, got " + out.shape().str());
  }
  if (!nodes_[out.id_].requires_grad) return;
  grad_buffer(out.id_)->fill(1.0);
  for (std::size_t i = out.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

}  // namespace ldrift::numkit
