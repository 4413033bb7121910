#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ldrift/numkit/tensor.hpp"

namespace ldrift::numkit {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient after Tape::backward; zero-shaped if the node was not reached.
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode autodiff over an explicit, append-only tape. A tape records one
// forward pass; call backward() once and then discard it.
class Tape {
 public:
  // Receives the tape and the id of the node whose gradient is being pushed
  // to its parents.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var variable(Tensor value);
  Var constant(Tensor value);
  Var record(Tensor value, const std::vector<Var>& parents, BackwardFn backward);

  // Seeds d(out)/d(out) = 1 for a 1×1 output and propagates to every leaf.
  void backward(const Var& out);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const { return nodes_[id].grad; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Zero-initialised gradient buffer of a node, or nullptr when the node does
  // not need one. Backward functions accumulate into it.
  Tensor* grad_buffer(std::size_t id);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace ldrift::numkit
