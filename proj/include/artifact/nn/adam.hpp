#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "artifact/nn/net.hpp"
#include "artifact/nn/tensor.hpp"

namespace artifact::nn {

// Adam with bias correction. Moments are kept in double so float training
// and double gradient checking share one code path.
template <typename S>
class Adam {
 public:
  explicit Adam(const std::vector<Param<S>>& params, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i].assign(params[i].value.numel(), 0.0);
      v_[i].assign(params[i].value.numel(), 0.0);
    }
  }

  void step(std::vector<Param<S>>& params, double lr) {
    if (params.size() != m_.size()) throw std::runtime_error("adam: parameter set changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& prm = params[i];
      const std::size_t n = prm.value.numel();
      if (n != m_[i].size()) throw std::runtime_error("adam: parameter shape changed");
      for (std::size_t j = 0; j < n; ++j) {
        const double g = static_cast<double>(prm.grad.ptr()[j]);
        double& m = m_[i][j];
        double& v = v_[i][j];
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g * g;
        const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + eps_);
        if (update != 0.0)
          prm.value.ptr()[j] = static_cast<S>(static_cast<double>(prm.value.ptr()[j]) - update);
      }
    }
  }

  std::uint64_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace artifact::nn
