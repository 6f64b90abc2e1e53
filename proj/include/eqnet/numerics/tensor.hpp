#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace eqnet::numerics {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Process-wide accounting of bytes held by tensor storage. Used by the
// benchmarks to measure peak memory of a single operation.
class MemoryTracker {
 public:
  static void allocate(std::size_t bytes) noexcept;
  static void release(std::size_t bytes) noexcept;
  static std::size_t current() noexcept;
  static std::size_t peak() noexcept;
  // Sets peak to the current live byte count.
  static void reset_peak() noexcept;
};

// Dense double storage whose lifetime is reported to MemoryTracker.
class Buffer {
 public:
  Buffer() = default;
  explicit Buffer(std::size_t n, double fill = 0.0);
  explicit Buffer(std::vector<double> values);
  Buffer(const Buffer& other);
  Buffer(Buffer&& other) noexcept;
  Buffer& operator=(const Buffer& other);
  Buffer& operator=(Buffer&& other) noexcept;
  ~Buffer();

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  void fill(double v) noexcept;

 private:
  std::vector<double> data_;
};

namespace detail {

struct Node {
  Shape shape;
  Buffer value;
  Buffer grad;  // empty until the first gradient reaches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  // Allocates the gradient slot on first use.
  double* grad_data();
  bool is_leaf() const noexcept { return !backward; }
};

}  // namespace detail

// Reverse-mode differentiable dense array with shared handle semantics.
// Copying a Tensor copies the handle, not the data.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // First and second extent of a rank-2 tensor; a rank-1 tensor is a row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  // Direct write access; only valid on leaves (parameters, inputs).
  std::span<double> mutable_values();
  double at(std::size_t i) const { return values()[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  // Throws ValidationError when any value is NaN or infinite.
  void check_finite(const std::string& what) const;

  // Value copy detached from the graph.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const noexcept { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  detail::Node& checked() const;
  std::shared_ptr<detail::Node> node_;
};

// Thread-local switch controlling whether ops record backward closures.
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

using BackwardFn = std::function<void(detail::Node&)>;

// Builds the output of a primitive op. The backward closure is attached only
// when grad mode is on and some input requires grad; inside the closure the
// inputs are reachable as out.inputs[i] in the order given here.
Tensor make_result(Shape shape, Buffer values, std::initializer_list<Tensor> inputs,
                   BackwardFn backward);
Tensor make_result(Shape shape, Buffer values, const std::vector<Tensor>& inputs,
                   BackwardFn backward);

// Gradient slot of an op input, or nullptr when it does not require grad.
inline double* input_grad(detail::Node& out, std::size_t i) {
  auto& in = *out.inputs[i];
  return in.requires_grad ? in.grad_data() : nullptr;
}

}  // namespace eqnet::numerics
