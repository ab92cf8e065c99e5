#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace racnn {

class Rng;

namespace detail {

struct TensorNode {
  std::vector<int64_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool tape_output = false;  // produced by a recorded op

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
  }
  // True if backward must deposit a gradient here.
  bool wants_grad() const { return requires_grad || tape_output; }
};

}  // namespace detail

// Dense row-major n-d array of doubles with an optional gradient buffer.
// Tensor is a shared handle: copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<int64_t> shape, double value,
                     bool requires_grad = false);
  static Tensor from(std::vector<int64_t> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double v);
  // Zero-mean Gaussian entries with the given standard deviation.
  static Tensor gaussian(std::vector<int64_t> shape, double stddev, Rng& rng,
                         bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const std::vector<int64_t>& shape() const { return node_->shape; }
  int64_t ndim() const { return static_cast<int64_t>(node_->shape.size()); }
  int64_t dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return node_->numel(); }

  double* data() { return node_->data.data(); }
  const double* data() const { return node_->data.data(); }
  std::vector<double>& data_vec() { return node_->data; }
  const std::vector<double>& data_vec() const { return node_->data; }

  bool has_grad() const { return !node_->grad.empty(); }
  double* grad() { return node_->grad.data(); }
  const double* grad() const { return node_->grad.data(); }
  const std::vector<double>& grad_vec() const { return node_->grad; }
  void ensure_grad() { node_->ensure_grad(); }
  void zero_grad() {
    if (!node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  double item() const;
  double at(std::initializer_list<int64_t> idx) const;
  double& at(std::initializer_list<int64_t> idx);

  // True when both handles alias the same storage.
  bool same_storage(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<detail::TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::TensorNode> node_;
};

int64_t shape_numel(const std::vector<int64_t>& shape);
std::string shape_str(const std::vector<int64_t>& shape);

// Tape of executed differentiable ops, appended in execution order (which is
// a topological order by construction). backward() replays it once, reversed.
class Graph {
 public:
  using BackFn = std::function<void()>;

  void record(BackFn fn, std::shared_ptr<detail::TensorNode> out) {
    out->tape_output = true;
    entries_.push_back({std::move(fn), std::move(out)});
  }

  // Seeds d(loss)/d(loss) = 1 and runs every recorded op in reverse order.
  // Gradients of op outputs are reset at the start of each call, so leaf
  // gradients accumulate across calls while intermediate ones do not.
  void backward(const Tensor& loss);

  void clear() { entries_.clear(); }
  size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    BackFn fn;
    std::shared_ptr<detail::TensorNode> out;
  };
  std::vector<Entry> entries_;
};

}  // namespace racnn
