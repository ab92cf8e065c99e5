#include "racnn/tensor.hpp"

#include <sstream>
#include <stdexcept>

#include "racnn/rng.hpp"

namespace racnn {

int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

static std::shared_ptr<detail::TensorNode> make_node(std::vector<int64_t> shape,
                                                     bool requires_grad) {
  auto node = std::make_shared<detail::TensorNode>();
  int64_t n = shape_numel(shape);
  node->shape = std::move(shape);
  node->data.assign(static_cast<size_t>(n), 0.0);
  node->requires_grad = requires_grad;
  return node;
}

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  return Tensor(make_node(std::move(shape), requires_grad));
}

Tensor Tensor::full(std::vector<int64_t> shape, double value, bool requires_grad) {
  auto node = make_node(std::move(shape), requires_grad);
  for (double& v : node->data) v = value;
  return Tensor(std::move(node));
}

Tensor Tensor::from(std::vector<int64_t> shape, std::vector<double> values,
                    bool requires_grad) {
  int64_t n = shape_numel(shape);
  if (n != static_cast<int64_t>(values.size())) {
    throw std::invalid_argument("tensor data size " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<detail::TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v) { return from({1}, {v}); }

Tensor Tensor::gaussian(std::vector<int64_t> shape, double stddev, Rng& rng,
                        bool requires_grad) {
  auto node = make_node(std::move(shape), requires_grad);
  for (double& v : node->data) v = rng.normal(0.0, stddev);
  return Tensor(std::move(node));
}

double Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item() requires a scalar tensor, got shape " +
                                shape_str(shape()));
  }
  return node_->data[0];
}

static size_t flat_index(const std::vector<int64_t>& shape,
                         std::initializer_list<int64_t> idx) {
  if (idx.size() != shape.size())
    throw std::invalid_argument("index rank mismatch");
  size_t flat = 0;
  size_t d = 0;
  for (int64_t i : idx) {
    if (i < 0 || i >= shape[d]) throw std::out_of_range("tensor index out of range");
    flat = flat * static_cast<size_t>(shape[d]) + static_cast<size_t>(i);
    ++d;
  }
  return flat;
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  return node_->data[flat_index(node_->shape, idx)];
}

double& Tensor::at(std::initializer_list<int64_t> idx) {
  return node_->data[flat_index(node_->shape, idx)];
}

void Graph::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a defined scalar tensor");
  }
  const auto& target = loss.node();
  bool found = false;
  for (const Entry& e : entries_) {
    if (e.out == target) {
      found = true;
      break;
    }
  }
  if (!found) {
    throw std::invalid_argument("backward: loss was not produced by this graph");
  }
  // Intermediate grads are per-pass scratch; reset them so a replay of the
  // tape deposits exactly the same contributions into leaves again.
  for (Entry& e : entries_) {
    e.out->grad.assign(e.out->data.size(), 0.0);
  }
  target->grad[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    it->fn();
  }
}

}  // namespace racnn
