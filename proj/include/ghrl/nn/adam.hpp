#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ghrl::nn {

// Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8 by default).
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t num_params, double lr);

  void step(std::span<double> params, std::span<const double> grads);

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::uint64_t steps() const { return t_; }
  std::size_t size() const { return m_.size(); }

  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // Raw moments, exposed for checkpointing.
  std::vector<double>& first_moment() { return m_; }
  std::vector<double>& second_moment() { return v_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

  friend bool operator==(const Adam&, const Adam&) = default;

 private:
  double lr_ = 1e-3;
  std::uint64_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace ghrl::nn
