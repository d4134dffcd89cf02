#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "artifact/nn/tensor.hpp"

namespace artifact::nn {

namespace detail {

// log-softmax in double with max-shift; writes K log-probabilities.
inline void log_softmax(const double* z, int K, std::vector<double>& logp) {
  double zmax = z[0];
  for (int c = 1; c < K; ++c) zmax = std::max(zmax, z[c]);
  double sum = 0;
  for (int c = 0; c < K; ++c) sum += std::exp(z[c] - zmax);
  const double lse = zmax + std::log(sum);
  logp.resize(K);
  for (int c = 0; c < K; ++c) logp[c] = z[c] - lse;
}

template <typename S>
void to_double(const Tensor<S>& logits, std::vector<double>& z) {
  z.resize(logits.numel());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double v = static_cast<double>(logits.ptr()[i]);
    if (!std::isfinite(v)) throw std::runtime_error("smoothed_ce: non-finite logit");
    z[i] = v;
  }
}

}  // namespace detail

// Label-smoothed categorical cross entropy over one logit vector.
// Target q_c = (1-eps)[c == true_class] + eps/K.
template <typename S>
double smoothed_ce(const Tensor<S>& logits, int true_class, double eps, int K) {
  if (K != static_cast<int>(logits.numel()))
    throw std::runtime_error("smoothed_ce: K does not match logits length");
  if (true_class < 0 || true_class >= K)
    throw std::runtime_error("smoothed_ce: true_class out of range");
  if (eps < 0 || eps >= 1) throw std::runtime_error("smoothed_ce: eps must be in [0,1)");
  std::vector<double> z, logp;
  detail::to_double(logits, z);
  detail::log_softmax(z.data(), K, logp);
  const double uniform = eps / K;
  double loss = 0;
  for (int c = 0; c < K; ++c) {
    double q = uniform;
    if (c == true_class) q += 1.0 - eps;
    loss -= q * logp[c];
  }
  return loss;
}

// d loss / d logits = softmax(logits) - q. Written in the tensor's scalar
// type; internal arithmetic in double.
template <typename S>
void smoothed_ce_grad(const Tensor<S>& logits, int true_class, double eps, int K,
                      Tensor<S>& dlogits) {
  if (K != static_cast<int>(logits.numel()))
    throw std::runtime_error("smoothed_ce_grad: K does not match logits length");
  if (true_class < 0 || true_class >= K)
    throw std::runtime_error("smoothed_ce_grad: true_class out of range");
  std::vector<double> z, logp;
  detail::to_double(logits, z);
  detail::log_softmax(z.data(), K, logp);
  ensure_shape(dlogits, logits.dims);
  const double uniform = eps / K;
  for (int c = 0; c < K; ++c) {
    double q = uniform;
    if (c == true_class) q += 1.0 - eps;
    dlogits.ptr()[c] = static_cast<S>(std::exp(logp[c]) - q);
  }
}

// Softmax probabilities in double, for score conversion and reports.
template <typename S>
std::vector<double> softmax_probs(const Tensor<S>& logits) {
  std::vector<double> z, logp;
  detail::to_double(logits, z);
  detail::log_softmax(z.data(), static_cast<int>(z.size()), logp);
  std::vector<double> p(logp.size());
  for (std::size_t c = 0; c < p.size(); ++c) p[c] = std::exp(logp[c]);
  return p;
}

}  // namespace artifact::nn
