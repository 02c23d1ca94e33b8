#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmhcan/errors.hpp"
#include "mmhcan/precision.hpp"

MMHCAN_NAMESPACE_BEGIN

using Shape = std::vector<std::size_t>;

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct Node {
  std::size_t id = 0;
  Shape shape;
  std::vector<Scalar> value;
  std::vector<Scalar> grad;  // empty until first accumulation
  bool requires_grad = false;

  void accumulate(std::span<const Scalar> g);
  std::span<Scalar> grad_buffer();  // allocates zeros on demand
};

}  // namespace detail

/// Dense row-major array. Copies share the underlying node; values are
/// treated as immutable once produced by a forward op, grads are mutable.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<Scalar> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor scalar(Scalar value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t dim(std::size_t axis) const;
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const;

  std::span<const Scalar> data() const;
  // Only for leaves (parameters, inputs) outside of a recorded graph.
  std::span<Scalar> mutable_data();
  Scalar item() const;
  Scalar at(std::size_t i) const { return data()[i]; }
  Scalar at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const Scalar> grad() const;
  void zero_grad();

  // Same values, no graph connection.
  Tensor detach() const;
  Tensor clone() const;

  std::size_t id() const;
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  friend Tensor make_result(const char*, Shape, std::vector<Scalar>, bool);
  std::shared_ptr<detail::Node> node_;
};

// Builds an op output and checks finiteness of every entry. `records` tells
// whether the output participates in the tape.
Tensor make_result(const char* op, Shape shape, std::vector<Scalar> values,
                   bool records);

/// Linear record of differentiable ops for one forward pass.
class Tape {
 public:
  struct Entry {
    std::string op;
    std::vector<std::size_t> inputs;
    std::size_t output = 0;
    std::function<void()> backward;
  };

  static Tape& current();

  void record(std::string op, std::vector<std::size_t> inputs,
              std::size_t output, std::function<void()> backward);
  void clear();
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  // Entry indices visited by the most recent backward pass, in visit order.
  const std::vector<std::size_t>& last_visit_order() const noexcept {
    return visited_;
  }

  bool enabled() const noexcept { return enabled_; }

 private:
  friend class NoGradGuard;
  friend void backward(const Tensor& loss);
  std::vector<Entry> entries_;
  std::vector<std::size_t> visited_;
  bool enabled_ = true;
};

/// Disables recording for its lifetime (evaluation, graph construction).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Runs reverse-mode accumulation from a scalar loss, then clears the tape.
void backward(const Tensor& loss);

// True when an op with these inputs must be recorded.
bool any_requires_grad(std::initializer_list<const Tensor*> inputs);

MMHCAN_NAMESPACE_END
