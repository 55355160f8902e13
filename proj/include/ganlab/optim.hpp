#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ganlab/tensor.hpp"

namespace ganlab {

struct AdamConfig {
  double lr = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Parameter identity is the tensor's node, so a
// tensor shared between two networks gets exactly one optimizer slot.
class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i].size(), 0.0);
      v_[i].assign(params_[i].size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i];
      if (!p.has_grad()) continue;
      const auto& g = p.grad();
      auto& m = m_[i];
      auto& v = v_[i];
      auto& x = p.data();
      for (std::size_t j = 0; j < x.size(); ++j) {
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        x[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
  }

  std::size_t steps_taken() const { return t_; }
  const std::vector<Tensor>& params() const { return params_; }

  // Checkpoint access: per-parameter first and second moment buffers.
  std::vector<std::vector<double>>& moment1() { return m_; }
  std::vector<std::vector<double>>& moment2() { return v_; }
  void set_steps_taken(std::size_t t) { t_ = t; }

 private:
  std::vector<Tensor> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

struct SgdConfig {
  double lr = 0.0002;
  double momentum = 0.9;
};

class SgdMomentum {
 public:
  explicit SgdMomentum(std::vector<Tensor> params, SgdConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    vel_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      vel_[i].assign(params_[i].size(), 0.0);
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Tensor& p = params_[i];
      if (!p.has_grad()) continue;
      const auto& g = p.grad();
      auto& v = vel_[i];
      auto& x = p.data();
      for (std::size_t j = 0; j < x.size(); ++j) {
        v[j] = cfg_.momentum * v[j] + g[j];
        x[j] -= cfg_.lr * v[j];
      }
    }
  }

 private:
  std::vector<Tensor> params_;
  SgdConfig cfg_;
  std::vector<std::vector<double>> vel_;
};

}  // namespace ganlab
