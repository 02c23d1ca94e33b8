#include "mmhcan/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

MMHCAN_NAMESPACE_BEGIN

namespace {

std::atomic<std::size_t> next_node_id{1};

std::shared_ptr<detail::Node> new_node(Shape shape, std::vector<Scalar> values,
                                       bool requires_grad) {
  for (auto extent : shape) {
    if (extent == 0) {
      throw DimensionError("tensor extents must be positive, got " +
                           shape_str(shape));
    }
  }
  if (numel_of(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " needs " +
                         std::to_string(numel_of(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return node;
}

}  // namespace

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace detail {

std::span<Scalar> Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), Scalar(0));
  return grad;
}

void Node::accumulate(std::span<const Scalar> g) {
  auto buf = grad_buffer();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
}

}  // namespace detail

Tensor::Tensor(Shape shape, std::vector<Scalar> values, bool requires_grad)
    : node_(new_node(std::move(shape), std::move(values), requires_grad)) {}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = numel_of(shape);
  return Tensor(std::move(shape), std::vector<Scalar>(n, Scalar(0)),
                requires_grad);
}

Tensor Tensor::full(Shape shape, Scalar value, bool requires_grad) {
  auto n = numel_of(shape);
  return Tensor(std::move(shape), std::vector<Scalar>(n, value), requires_grad);
}

Tensor Tensor::scalar(Scalar value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " +
                         shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return numel_of(shape()); }

std::span<const Scalar> Tensor::data() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->value;
}

std::span<Scalar> Tensor::mutable_data() {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->value;
}

Scalar Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on non-scalar tensor " + shape_str(shape()));
  }
  return node_->value[0];
}

Scalar Tensor::at(std::size_t i, std::size_t j) const {
  return data()[i * dim(1) + j];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool on) {
  if (!node_) throw ContractError("use of undefined tensor");
  node_->requires_grad = on;
}

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const Scalar> Tensor::grad() const {
  if (!has_grad()) throw ContractError("tensor has no gradient");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const {
  return Tensor(shape(), node_->value, false);
}

Tensor Tensor::clone() const {
  return Tensor(shape(), node_->value, requires_grad());
}

std::size_t Tensor::id() const {
  if (!node_) throw ContractError("use of undefined tensor");
  return node_->id;
}

Tensor make_result(const char* op, Shape shape, std::vector<Scalar> values,
                   bool records) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NonFiniteError(op, std::string("non-finite value produced by ") +
                                   op + " at flat index " + std::to_string(i));
    }
  }
  return Tensor(new_node(std::move(shape), std::move(values),
                         records && Tape::current().enabled()));
}

Tape& Tape::current() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(std::string op, std::vector<std::size_t> inputs,
                  std::size_t output, std::function<void()> backward) {
  entries_.push_back({std::move(op), std::move(inputs), output,
                      std::move(backward)});
}

void Tape::clear() { entries_.clear(); }

NoGradGuard::NoGradGuard() : previous_(Tape::current().enabled_) {
  Tape::current().enabled_ = false;
}

NoGradGuard::~NoGradGuard() { Tape::current().enabled_ = previous_; }

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::current().enabled()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward expects a scalar loss, got shape " +
                        shape_str(loss.shape()));
  }
  auto& tape = Tape::current();
  if (!loss.requires_grad() || tape.entries_.empty()) {
    throw ContractError("backward called on a loss with no recorded graph");
  }
  loss.node()->grad.assign(1, Scalar(1));
  tape.visited_.clear();
  tape.visited_.reserve(tape.entries_.size());
  for (std::size_t i = tape.entries_.size(); i-- > 0;) {
    tape.entries_[i].backward();
    tape.visited_.push_back(i);
  }
  tape.clear();
}

MMHCAN_NAMESPACE_END
