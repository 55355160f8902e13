#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "ganlab/rng.hpp"

namespace ganlab {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily, same length as data
  bool requires_grad = false;
  bool consumed = false;  // set once a backward pass has released this node
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;  // pulls node.grad into parents

  std::size_t size() const { return data.size(); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// Dense 64-bit tensor participating in a build-and-consume gradient tape.
// Copies are shallow: two Tensors may share one node, which is exactly how
// layer sharing between networks is expressed.
class Tensor {
 public:
  Tensor() : node_(std::make_shared<detail::TensorNode>()) {}

  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false)
      : node_(std::make_shared<detail::TensorNode>()) {
    if (shape_size(shape) != data.size()) {
      throw std::invalid_argument("Tensor: shape " + shape_str(shape) +
                                  " does not match data length " +
                                  std::to_string(data.size()));
    }
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
  }

  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value),
                  requires_grad);
  }

  static Tensor scalar(double value, bool requires_grad = false) {
    return Tensor({1}, {value}, requires_grad);
  }

  // Trainable parameter drawn from N(mean, std).
  static Tensor randn(Shape shape, SeededRng& rng, double mean = 0.0,
                      double stddev = 1.0, bool requires_grad = true) {
    const std::size_t n = shape_size(shape);
    return Tensor(std::move(shape), rng.normal_vector(n, mean, stddev),
                  requires_grad);
  }

  const Shape& shape() const { return node_->shape; }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(1); }

  std::size_t dim(std::size_t i) const {
    if (i >= node_->shape.size()) {
      throw std::out_of_range("Tensor::dim: axis out of range");
    }
    return node_->shape[i];
  }

  bool is_scalar() const { return node_->data.size() == 1; }

  double value() const {
    if (!is_scalar()) {
      throw std::invalid_argument("Tensor::value: tensor is not a scalar");
    }
    return node_->data[0];
  }

  std::vector<double>& data() { return node_->data; }
  const std::vector<double>& data() const { return node_->data; }

  double at(std::size_t i, std::size_t j) const {
    return node_->data[i * cols() + j];
  }
  double& at(std::size_t i, std::size_t j) {
    return node_->data[i * cols() + j];
  }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  const std::vector<double>& grad() const {
    if (!has_grad()) {
      throw std::runtime_error("Tensor::grad: no gradient has been computed");
    }
    return node_->grad;
  }

  void zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

  // New leaf sharing no history with this tensor (data copied).
  Tensor detach() const {
    return Tensor(node_->shape, node_->data, false);
  }

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  bool all_finite() const {
    for (const double v : node_->data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  std::shared_ptr<detail::TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<detail::TensorNode> node_;

  friend Tensor make_op(Shape shape, std::vector<double> data,
                        std::vector<Tensor> parents,
                        std::function<void(detail::TensorNode&)> backprop);
};

inline Tensor make_op(Shape shape, std::vector<double> data,
                      std::vector<Tensor> parents,
                      std::function<void(detail::TensorNode&)> backprop) {
  Tensor out(std::move(shape), std::move(data), false);
  bool any_grad = false;
  for (const auto& p : parents) {
    if (p.node()->requires_grad) any_grad = true;
    if (p.node()->consumed) {
      throw std::runtime_error(
          "tensor op: input belongs to a consumed tape; rebuild the graph");
    }
  }
  if (any_grad) {
    out.node_->requires_grad = true;
    for (const auto& p : parents) out.node_->parents.push_back(p.node());
    out.node_->backprop = std::move(backprop);
  }
  return out;
}

namespace detail {

inline void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

inline void accumulate(TensorNode& node, const std::vector<double>& delta) {
  node.ensure_grad();
  for (std::size_t i = 0; i < delta.size(); ++i) node.grad[i] += delta[i];
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.data()[i] + b.data()[i];
  }
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b},
                 [an, bn](detail::TensorNode& n) {
                   if (an->requires_grad) detail::accumulate(*an, n.grad);
                   if (bn->requires_grad) detail::accumulate(*bn, n.grad);
                 });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.data()[i] - b.data()[i];
  }
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b},
                 [an, bn](detail::TensorNode& n) {
                   if (an->requires_grad) detail::accumulate(*an, n.grad);
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     for (std::size_t i = 0; i < n.grad.size(); ++i) {
                       bn->grad[i] -= n.grad[i];
                     }
                   }
                 });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.data()[i] * b.data()[i];
  }
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b},
                 [an, bn](detail::TensorNode& n) {
                   if (an->requires_grad) {
                     an->ensure_grad();
                     for (std::size_t i = 0; i < n.grad.size(); ++i) {
                       an->grad[i] += n.grad[i] * bn->data[i];
                     }
                   }
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     for (std::size_t i = 0; i < n.grad.size(); ++i) {
                       bn->grad[i] += n.grad[i] * an->data[i];
                     }
                   }
                 });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [an, c](detail::TensorNode& n) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < n.grad.size(); ++i) {
                     an->grad[i] += n.grad[i] * c;
                   }
                 });
}

inline Tensor one_minus(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 - a.data()[i];
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [an](detail::TensorNode& n) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < n.grad.size(); ++i) {
                     an->grad[i] -= n.grad[i];
                   }
                 });
}

// X (m x k) times W^T where W is (n x k), plus optional row-broadcast bias
// (length n). One fused node keeps GAN step graphs small.
inline Tensor linear(const Tensor& x, const Tensor& w) {
  if (x.shape().size() != 2 || w.shape().size() != 2 ||
      x.cols() != w.cols()) {
    throw std::invalid_argument("linear: need X(m,k), W(n,k); got " +
                                shape_str(x.shape()) + " and " +
                                shape_str(w.shape()));
  }
  const std::size_t m = x.rows(), k = x.cols(), n = w.rows();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      const double* xi = x.data().data() + i * k;
      const double* wj = w.data().data() + j * k;
      for (std::size_t t = 0; t < k; ++t) acc += xi[t] * wj[t];
      out[i * n + j] = acc;
    }
  }
  auto xn = x.node(), wn = w.node();
  return make_op(
      {m, n}, std::move(out), {x, w}, [xn, wn, m, k, n](detail::TensorNode& nd) {
        if (xn->requires_grad) {
          xn->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              const double g = nd.grad[i * n + j];
              if (g == 0.0) continue;
              double* xi = xn->grad.data() + i * k;
              const double* wj = wn->data.data() + j * k;
              for (std::size_t t = 0; t < k; ++t) xi[t] += g * wj[t];
            }
          }
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
              const double g = nd.grad[i * n + j];
              if (g == 0.0) continue;
              double* wj = wn->grad.data() + j * k;
              const double* xi = xn->data.data() + i * k;
              for (std::size_t t = 0; t < k; ++t) wj[t] += g * xi[t];
            }
          }
        }
      });
}

inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  Tensor y = linear(x, w);
  if (bias.shape().size() != 1 || bias.dim(0) != y.cols()) {
    throw std::invalid_argument("linear: bias length must equal output width");
  }
  const std::size_t m = y.rows(), n = y.cols();
  std::vector<double> out(y.data());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bias.data()[j];
  }
  auto yn = y.node(), bn = bias.node();
  return make_op(y.shape(), std::move(out), {y, bias},
                 [yn, bn, m, n](detail::TensorNode& nd) {
                   if (yn->requires_grad) detail::accumulate(*yn, nd.grad);
                   if (bn->requires_grad) {
                     bn->ensure_grad();
                     for (std::size_t i = 0; i < m; ++i) {
                       for (std::size_t j = 0; j < n; ++j) {
                         bn->grad[j] += nd.grad[i * n + j];
                       }
                     }
                   }
                 });
}

inline Tensor leaky_relu(const Tensor& a, double slope = 0.2) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = a.data()[i];
    out[i] = v >= 0.0 ? v : slope * v;
  }
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [an, slope](detail::TensorNode& n) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < n.grad.size(); ++i) {
                     an->grad[i] += n.grad[i] * (an->data[i] >= 0.0 ? 1.0 : slope);
                   }
                 });
}

inline Tensor tanh_act(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.data()[i]);
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [an](detail::TensorNode& n) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < n.grad.size(); ++i) {
                     const double t = n.data[i];
                     an->grad[i] += n.grad[i] * (1.0 - t * t);
                   }
                 });
}

inline double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = stable_sigmoid(a.data()[i]);
  }
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [an](detail::TensorNode& n) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < n.grad.size(); ++i) {
                     const double s = n.data[i];
                     an->grad[i] += n.grad[i] * s * (1.0 - s);
                   }
                 });
}

// Row-wise softmax with max subtraction; rows sum to 1 to machine precision.
inline Tensor softmax_rows(const Tensor& a) {
  if (a.shape().size() != 2) {
    throw std::invalid_argument("softmax_rows: expected a 2-d tensor");
  }
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = a.data().data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      sum += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= sum;
  }
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [an, m, n](detail::TensorNode& nd) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < m; ++i) {
                     const double* s = nd.data.data() + i * n;
                     const double* g = nd.grad.data() + i * n;
                     double dot = 0.0;
                     for (std::size_t j = 0; j < n; ++j) dot += s[j] * g[j];
                     double* da = an->grad.data() + i * n;
                     for (std::size_t j = 0; j < n; ++j) {
                       da[j] += s[j] * (g[j] - dot);
                     }
                   }
                 });
}

constexpr double kLogFloor = 1e-7;

// log with the argument floored at `floor`; a floored entry contributes zero
// gradient. `floor_hits`, when given, counts the clamped entries so loss
// saturation stays observable.
inline Tensor log_floored(const Tensor& a, double floor = kLogFloor,
                          std::size_t* floor_hits = nullptr) {
  std::vector<double> out(a.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = a.data()[i];
    if (v < floor) ++hits;
    out[i] = std::log(std::max(v, floor));
  }
  if (floor_hits != nullptr) *floor_hits += hits;
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [an, floor](detail::TensorNode& n) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < n.grad.size(); ++i) {
                     if (an->data[i] >= floor) {
                       an->grad[i] += n.grad[i] / an->data[i];
                     }
                   }
                 });
}

inline Tensor mean_all(const Tensor& a) {
  const std::size_t n = a.size();
  if (n == 0) throw std::invalid_argument("mean_all: empty tensor");
  double sum = 0.0;
  for (const double v : a.data()) sum += v;
  auto an = a.node();
  return make_op({1}, {sum / static_cast<double>(n)}, {a},
                 [an, n](detail::TensorNode& nd) {
                   an->ensure_grad();
                   const double g = nd.grad[0] / static_cast<double>(n);
                   for (std::size_t i = 0; i < n; ++i) an->grad[i] += g;
                 });
}

inline Tensor sum_all(const Tensor& a) {
  double sum = 0.0;
  for (const double v : a.data()) sum += v;
  auto an = a.node();
  return make_op({1}, {sum}, {a},
                 [an](detail::TensorNode& nd) {
                   an->ensure_grad();
                   for (std::size_t i = 0; i < an->grad.size(); ++i) {
                     an->grad[i] += nd.grad[0];
                   }
                 });
}

// Reverse pass from a scalar loss. Gradients land in each reachable
// parameter's grad buffer (accumulating), after which the graph is released:
// interior nodes are marked consumed and their edges dropped, so the next
// step must rebuild its tape.
inline void backward(const Tensor& loss) {
  if (!loss.is_scalar()) {
    throw std::invalid_argument("backward: loss must be a scalar");
  }
  auto root = loss.node();
  if (root->consumed) {
    throw std::runtime_error("backward: tape already consumed");
  }
  if (!root->requires_grad) {
    throw std::runtime_error(
        "backward: loss is detached from every trainable parameter");
  }

  std::vector<detail::TensorNode*> order;
  std::unordered_set<detail::TensorNode*> seen;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::TensorNode* parent = node->parents[next++].get();
      if (parent->consumed) {
        throw std::runtime_error(
            "backward: graph references a consumed tape node");
      }
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::TensorNode* node = *it;
    if (node->backprop) {
      node->ensure_grad();
      node->backprop(*node);
    }
  }
  // Consume the tape: leaves (parameters, inputs) stay usable.
  for (detail::TensorNode* node : order) {
    if (node->backprop) {
      node->backprop = nullptr;
      node->parents.clear();
      node->consumed = true;
    }
  }
}

}  // namespace ganlab
