#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <string>

#include "ffcac/tensor.hpp"

namespace ffcac::ad {

class Tape;

// Handle to one node of a Tape. Cheap to copy; valid while its tape lives and
// has not been rewound past it.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient from the last backward sweep. UsageError if there is none.
  const Tensor& grad() const;
  bool requires_grad() const;
  const Shape& shape() const { return value().shape(); }

  Tape& tape() const;
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Computation record: an append-only log of primitive results. Every op's
// inputs precede it, so one reverse sweep yields all gradients. Rebuilt on
// each forward pass; single-threaded.
class Tape {
 public:
  // Receives the gradient of the node's output and accumulates into the
  // gradient buffers of its inputs.
  using BackwardFn = std::function<void(Tape& tape, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor value);

  // Appends an op result. The node requires grad iff any input does; the
  // backward closure is dropped otherwise. Non-finite output -> NumericError.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(const char* op, Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  // Reverse sweep from a scalar loss; fills grad() of every requires-grad
  // node recorded at or before the loss.
  void backward(const Var& loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t mark() const noexcept { return nodes_.size(); }
  // Drops every node recorded after mark.
  void rewind(std::size_t mark);

  const Tensor& value_of(std::size_t id) const { return nodes_[id].value; }
  // Gradient accumulator for node id during backward, or nullptr when that
  // node does not require grad.
  Tensor* grad_buffer(std::size_t id);

 private:
  friend class Var;

  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(Node node);
  void check_owned(const Var& v, const char* op) const;

  std::deque<Node> nodes_;
};

}  // namespace ffcac::ad
