#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "foresee/errors.hpp"
#include "foresee/tensor.hpp"

namespace foresee {

enum class OptimizerKind { Adam, Adagrad };

inline const char* to_string(OptimizerKind k) {
  return k == OptimizerKind::Adam ? "adam" : "adagrad";
}

// Adam (bias-corrected) or Adagrad over a fixed parameter list. step()
// consumes the accumulated gradients and zeroes them afterwards; state
// buffers mirror the parameter shapes exactly.
template <class T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::vector<Tensor<T>> params, T learning_rate)
      : kind_(kind), params_(std::move(params)), lr_(learning_rate) {
    for (auto& p : params_) {
      if (!p.requires_grad()) p.set_requires_grad(true);
      slot1_.emplace_back(p.shape());
      if (kind_ == OptimizerKind::Adam) slot2_.emplace_back(p.shape());
    }
  }

  OptimizerKind kind() const { return kind_; }
  T learning_rate() const { return lr_; }
  void set_learning_rate(T lr) { lr_ = lr; }
  long step_count() const { return t_; }

  // Adam first/second moments (m, v), or the Adagrad squared-gradient
  // accumulator in slot 1.
  const std::vector<Tensor<T>>& moment1() const { return slot1_; }
  const std::vector<Tensor<T>>& moment2() const { return slot2_; }

  void step() {
    ++t_;
    if (kind_ == OptimizerKind::Adam)
      adam_update();
    else
      adagrad_update();
    for (auto& p : params_) p.zero_grad();
  }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kAdamEps = 1e-8;
  static constexpr double kAdagradEps = 1e-10;

 private:
  void adam_update() {
    const T b1 = T(kBeta1), b2 = T(kBeta2), eps = T(kAdamEps);
    const T corr1 = T(1) - static_cast<T>(std::pow(kBeta1, static_cast<double>(t_)));
    const T corr2 = T(1) - static_cast<T>(std::pow(kBeta2, static_cast<double>(t_)));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Tensor<T>& p = params_[k];
      const T* g = p.grad();
      T* m = slot1_[k].data();
      T* v = slot2_[k].data();
      const std::size_t n = p.size();
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = b1 * m[i] + (T(1) - b1) * g[i];
        v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
        const T m_hat = m[i] / corr1;
        const T v_hat = v[i] / corr2;
        p[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }

  void adagrad_update() {
    const T eps = T(kAdagradEps);
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Tensor<T>& p = params_[k];
      const T* g = p.grad();
      T* acc = slot1_[k].data();
      const std::size_t n = p.size();
      for (std::size_t i = 0; i < n; ++i) {
        acc[i] += g[i] * g[i];
        p[i] -= lr_ * g[i] / (std::sqrt(acc[i]) + eps);
      }
    }
  }

  OptimizerKind kind_;
  std::vector<Tensor<T>> params_;
  T lr_;
  long t_ = 0;
  std::vector<Tensor<T>> slot1_;
  std::vector<Tensor<T>> slot2_;

  template <class U>
  friend void save_optimizer_state(const Optimizer<U>&, const std::string&);
  template <class U>
  friend void load_optimizer_state(Optimizer<U>&, const std::string&);
};

// Spec-named entry points over the class above.
template <class T>
void adam_step(Optimizer<T>& opt) {
  if (opt.kind() != OptimizerKind::Adam) throw ContractError("adam_step: optimizer is not Adam");
  opt.step();
}

template <class T>
void adagrad_step(Optimizer<T>& opt) {
  if (opt.kind() != OptimizerKind::Adagrad)
    throw ContractError("adagrad_step: optimizer is not Adagrad");
  opt.step();
}

}  // namespace foresee
