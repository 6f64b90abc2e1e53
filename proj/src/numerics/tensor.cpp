#include "eqnet/numerics/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include "eqnet/errors.hpp"

namespace eqnet::numerics {

namespace {

std::atomic<std::size_t> g_current_bytes{0};
std::atomic<std::size_t> g_peak_bytes{0};
thread_local bool t_grad_enabled = true;

}  // namespace

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void MemoryTracker::allocate(std::size_t bytes) noexcept {
  const auto now = g_current_bytes.fetch_add(bytes) + bytes;
  auto peak = g_peak_bytes.load();
  while (now > peak && !g_peak_bytes.compare_exchange_weak(peak, now)) {
  }
}

void MemoryTracker::release(std::size_t bytes) noexcept { g_current_bytes.fetch_sub(bytes); }
std::size_t MemoryTracker::current() noexcept { return g_current_bytes.load(); }
std::size_t MemoryTracker::peak() noexcept { return g_peak_bytes.load(); }
void MemoryTracker::reset_peak() noexcept { g_peak_bytes.store(g_current_bytes.load()); }

Buffer::Buffer(std::size_t n, double fill) : data_(n, fill) {
  MemoryTracker::allocate(data_.size() * sizeof(double));
}

Buffer::Buffer(std::vector<double> values) : data_(std::move(values)) {
  MemoryTracker::allocate(data_.size() * sizeof(double));
}

Buffer::Buffer(const Buffer& other) : data_(other.data_) {
  MemoryTracker::allocate(data_.size() * sizeof(double));
}

Buffer::Buffer(Buffer&& other) noexcept : data_(std::move(other.data_)) { other.data_.clear(); }

Buffer& Buffer::operator=(const Buffer& other) {
  if (this != &other) {
    MemoryTracker::release(data_.size() * sizeof(double));
    data_ = other.data_;
    MemoryTracker::allocate(data_.size() * sizeof(double));
  }
  return *this;
}

Buffer& Buffer::operator=(Buffer&& other) noexcept {
  if (this != &other) {
    MemoryTracker::release(data_.size() * sizeof(double));
    data_ = std::move(other.data_);
    other.data_.clear();
  }
  return *this;
}

Buffer::~Buffer() { MemoryTracker::release(data_.size() * sizeof(double)); }

void Buffer::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

double* detail::Node::grad_data() {
  if (grad.empty()) grad = Buffer(value.size(), 0.0);
  return grad.data();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  node->value = Buffer(shape_size(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("Tensor::from: shape " + shape_string(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->value = Buffer(std::move(values));
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

detail::Node& Tensor::checked() const {
  if (!node_) throw ContractError("use of an undefined Tensor");
  return *node_;
}

const Shape& Tensor::shape() const { return checked().shape; }
std::size_t Tensor::size() const { return checked().value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  if (s.size() == 1) return 1;
  if (s.size() != 2) throw DimensionError("rows() on tensor of shape " + shape_string(s));
  return s[0];
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  if (s.size() == 1) return s[0];
  if (s.size() != 2) throw DimensionError("cols() on tensor of shape " + shape_string(s));
  return s[1];
}

std::span<const double> Tensor::values() const { return checked().value.span(); }

std::span<double> Tensor::mutable_values() {
  auto& n = checked();
  if (!n.is_leaf()) throw ContractError("mutable_values() on a non-leaf tensor");
  return n.value.span();
}

double Tensor::at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return values()[0];
}

bool Tensor::requires_grad() const { return checked().requires_grad; }
void Tensor::set_requires_grad(bool flag) { checked().requires_grad = flag; }
bool Tensor::has_grad() const { return !checked().grad.empty(); }

std::span<const double> Tensor::grad() const {
  auto& n = checked();
  if (n.grad.empty()) throw ContractError("tensor has no gradient");
  return n.grad.span();
}

std::span<double> Tensor::mutable_grad() {
  auto& n = checked();
  n.grad_data();
  return n.grad.span();
}

void Tensor::zero_grad() {
  auto& n = checked();
  if (n.grad.empty()) n.grad = Buffer(n.value.size(), 0.0);
  else n.grad.fill(0.0);
}

void Tensor::clear_grad() { checked().grad = Buffer(); }

void Tensor::check_finite(const std::string& what) const {
  for (double v : values()) {
    if (!std::isfinite(v)) throw ValidationError(what + ": non-finite value in tensor");
  }
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<detail::Node>();
  node->shape = shape();
  node->value = checked().value;
  return Tensor(std::move(node));
}

bool grad_enabled() noexcept { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

namespace {

template <typename Range>
Tensor build_result(Shape shape, Buffer values, const Range& inputs, BackwardFn backward) {
  if (shape_size(shape) != values.size()) {
    throw DimensionError("op result shape " + shape_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  bool needs = false;
  if (t_grad_enabled) {
    for (const auto& t : inputs) needs = needs || t.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor make_result(Shape shape, Buffer values, std::initializer_list<Tensor> inputs,
                   BackwardFn backward) {
  return build_result(std::move(shape), std::move(values), inputs, std::move(backward));
}

Tensor make_result(Shape shape, Buffer values, const std::vector<Tensor>& inputs,
                   BackwardFn backward) {
  return build_result(std::move(shape), std::move(values), inputs, std::move(backward));
}

}  // namespace eqnet::numerics
