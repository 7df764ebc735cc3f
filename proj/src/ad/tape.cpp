#include "ffcac/ad/tape.hpp"

#include "ffcac/error.hpp"

namespace ffcac::ad {

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("use of an unbound Var");
  return tape_->nodes_[id_].value;
}

const Tensor& Var::grad() const {
  if (!tape_) throw UsageError("use of an unbound Var");
  const auto& node = tape_->nodes_[id_];
  if (node.grad.empty()) throw UsageError("no gradient recorded for this value; run backward first");
  return node.grad;
}

bool Var::requires_grad() const {
  if (!tape_) throw UsageError("use of an unbound Var");
  return tape_->nodes_[id_].requires_grad;
}

Tape& Var::tape() const {
  if (!tape_) throw UsageError("use of an unbound Var");
  return *tape_;
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(const Var& v, const char* op) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw UsageError(std::string(op) + ": input does not belong to this tape");
  }
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant contains non-finite values");
  return push(Node{std::move(value), {}, false, {}});
}

Var Tape::parameter(Tensor value) {
  if (!value.all_finite()) throw NumericError("parameter contains non-finite values");
  return push(Node{std::move(value), {}, true, {}});
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const auto& v : inputs) {
    check_owned(v, op);
    needs = needs || nodes_[v.id_].requires_grad;
  }
  if (!value.all_finite()) throw NumericError(std::string(op) + " produced non-finite values");
  return push(Node{std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}});
}

Var Tape::record(const char* op, Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  bool needs = false;
  for (const auto& v : inputs) {
    check_owned(v, op);
    needs = needs || nodes_[v.id_].requires_grad;
  }
  if (!value.all_finite()) throw NumericError(std::string(op) + " produced non-finite values");
  return push(Node{std::move(value), {}, needs, needs ? std::move(backward) : BackwardFn{}});
}

Tensor* Tape::grad_buffer(std::size_t id) {
  auto& node = nodes_[id];
  if (!node.requires_grad) return nullptr;
  if (node.grad.empty()) node.grad = Tensor(node.value.shape());
  return &node.grad;
}

void Tape::backward(const Var& loss) {
  if (nodes_.empty()) throw UsageError("backward on an empty tape");
  check_owned(loss, "backward");
  if (loss.value().size() != 1) {
    throw UsageError("backward needs a scalar loss, got shape " + shape_string(loss.shape()));
  }
  for (auto& node : nodes_) node.grad = Tensor();
  const std::size_t last = loss.id();
  for (std::size_t i = 0; i <= last; ++i) {
    if (nodes_[i].requires_grad) nodes_[i].grad = Tensor(nodes_[i].value.shape());
  }
  if (!nodes_[last].requires_grad) return;
  nodes_[last].grad[0] = 1.0;
  for (std::size_t i = last + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (node.requires_grad && node.backward) node.backward(*this, node.grad);
  }
}

void Tape::rewind(std::size_t mark) {
  if (mark > nodes_.size()) throw UsageError("rewind past the end of the tape");
  nodes_.resize(mark);
}

}  // namespace ffcac::ad
