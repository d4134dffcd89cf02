#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "artifact/nn/tensor.hpp"

namespace artifact::nn {

template <typename S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename S>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline int conv_out_dim(int in, int kernel, int stride) {
  if (in < kernel) throw std::runtime_error("conv: input smaller than kernel");
  return (in - kernel) / stride + 1;
}

// --- valid convolution (no padding), stride >= 1, via im2col + GEMM ---
// x: [C,H,W], w: [K,C,k,k], b: [K], y: [K,Ho,Wo]

template <typename S>
void im2col(const Tensor<S>& x, int C, int H, int W, int k, int stride, Tensor<S>& col) {
  const int Ho = conv_out_dim(H, k, stride);
  const int Wo = conv_out_dim(W, k, stride);
  ensure_shape(col, {C * k * k, Ho * Wo});
  S* out = col.ptr();
  for (int c = 0; c < C; ++c) {
    const S* plane = x.ptr() + static_cast<std::size_t>(c) * H * W;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        for (int oy = 0; oy < Ho; ++oy) {
          const S* src = plane + (oy * stride + ky) * W + kx;
          for (int ox = 0; ox < Wo; ++ox) *out++ = src[ox * stride];
        }
      }
    }
  }
}

template <typename S>
void col2im(const Tensor<S>& col, int C, int H, int W, int k, int stride, Tensor<S>& dx) {
  const int Ho = conv_out_dim(H, k, stride);
  const int Wo = conv_out_dim(W, k, stride);
  ensure_shape(dx, {C, H, W});
  dx.zero();
  const S* in = col.ptr();
  for (int c = 0; c < C; ++c) {
    S* plane = dx.ptr() + static_cast<std::size_t>(c) * H * W;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        for (int oy = 0; oy < Ho; ++oy) {
          S* dst = plane + (oy * stride + ky) * W + kx;
          for (int ox = 0; ox < Wo; ++ox) dst[ox * stride] += *in++;
        }
      }
    }
  }
}

template <typename S>
void conv_forward(const Tensor<S>& x, int C, int H, int W, const Tensor<S>& w, const Tensor<S>& b,
                  int k, int stride, Tensor<S>& y, Tensor<S>& col) {
  const int K = w.dims[0];
  const int Ho = conv_out_dim(H, k, stride);
  const int Wo = conv_out_dim(W, k, stride);
  ensure_shape(y, {K, Ho, Wo});
  const int hw = Ho * Wo;
  if (k == 1 && stride == 1) {
    // pointwise: plain GEMM over the spatial axis
    ConstMatMap<S> W_(w.ptr(), K, C);
    ConstMatMap<S> X_(x.ptr(), C, hw);
    MatMap<S> Y_(y.ptr(), K, hw);
    Y_.noalias() = W_ * X_;
  } else {
    im2col(x, C, H, W, k, stride, col);
    ConstMatMap<S> W_(w.ptr(), K, C * k * k);
    ConstMatMap<S> Col_(col.ptr(), C * k * k, hw);
    MatMap<S> Y_(y.ptr(), K, hw);
    Y_.noalias() = W_ * Col_;
  }
  for (int kk = 0; kk < K; ++kk) {
    S* row = y.ptr() + static_cast<std::size_t>(kk) * hw;
    const S bias = b.ptr()[kk];
    for (int i = 0; i < hw; ++i) row[i] += bias;
  }
}

// dw/db accumulate; dx is overwritten (skipped when need_dx is false).
template <typename S>
void conv_backward(const Tensor<S>& x, int C, int H, int W, const Tensor<S>& w, int k, int stride,
                   const Tensor<S>& dy, Tensor<S>& dx, Tensor<S>& dw, Tensor<S>& db,
                   Tensor<S>& col, Tensor<S>& dcol, bool need_dx) {
  const int K = w.dims[0];
  const int Ho = conv_out_dim(H, k, stride);
  const int Wo = conv_out_dim(W, k, stride);
  const int hw = Ho * Wo;
  ConstMatMap<S> Dy_(dy.ptr(), K, hw);
  for (int kk = 0; kk < K; ++kk) {
    S acc = 0;
    const S* row = dy.ptr() + static_cast<std::size_t>(kk) * hw;
    for (int i = 0; i < hw; ++i) acc += row[i];
    db.ptr()[kk] += acc;
  }
  if (k == 1 && stride == 1) {
    ConstMatMap<S> X_(x.ptr(), C, hw);
    MatMap<S> Dw_(dw.ptr(), K, C);
    Dw_.noalias() += Dy_ * X_.transpose();
    if (need_dx) {
      ensure_shape(dx, {C, H, W});
      ConstMatMap<S> W_(w.ptr(), K, C);
      MatMap<S> Dx_(dx.ptr(), C, hw);
      Dx_.noalias() = W_.transpose() * Dy_;
    }
    return;
  }
  im2col(x, C, H, W, k, stride, col);
  ConstMatMap<S> Col_(col.ptr(), C * k * k, hw);
  MatMap<S> Dw_(dw.ptr(), K, C * k * k);
  Dw_.noalias() += Dy_ * Col_.transpose();
  if (need_dx) {
    ensure_shape(dcol, {C * k * k, hw});
    ConstMatMap<S> W_(w.ptr(), K, C * k * k);
    MatMap<S> Dcol_(dcol.ptr(), C * k * k, hw);
    Dcol_.noalias() = W_.transpose() * Dy_;
    col2im(dcol, C, H, W, k, stride, dx);
  }
}

// --- depthwise convolution, stride 1, odd kernel, zero SAME padding ---
// x: [C,H,W], w: [C,k,k], b: [C], y: [C,H,W]

template <typename S>
void dwconv_forward(const Tensor<S>& x, int C, int H, int W, const Tensor<S>& w,
                    const Tensor<S>& b, int k, Tensor<S>& y) {
  const int pad = k / 2;
  ensure_shape(y, {C, H, W});
  for (int c = 0; c < C; ++c) {
    const S* plane = x.ptr() + static_cast<std::size_t>(c) * H * W;
    const S* ker = w.ptr() + static_cast<std::size_t>(c) * k * k;
    S* out = y.ptr() + static_cast<std::size_t>(c) * H * W;
    const S bias = b.ptr()[c];
    for (int oy = 0; oy < H; ++oy) {
      for (int ox = 0; ox < W; ++ox) {
        S acc = bias;
        const int y0 = oy - pad, x0 = ox - pad;
        const int ky_lo = y0 < 0 ? -y0 : 0;
        const int ky_hi = y0 + k > H ? H - y0 : k;
        const int kx_lo = x0 < 0 ? -x0 : 0;
        const int kx_hi = x0 + k > W ? W - x0 : k;
        for (int ky = ky_lo; ky < ky_hi; ++ky) {
          const S* src = plane + (y0 + ky) * W + x0;
          const S* kr = ker + ky * k;
          for (int kx = kx_lo; kx < kx_hi; ++kx) acc += src[kx] * kr[kx];
        }
        out[oy * W + ox] = acc;
      }
    }
  }
}

template <typename S>
void dwconv_backward(const Tensor<S>& x, int C, int H, int W, const Tensor<S>& w, int k,
                     const Tensor<S>& dy, Tensor<S>& dx, Tensor<S>& dw, Tensor<S>& db) {
  const int pad = k / 2;
  ensure_shape(dx, {C, H, W});
  dx.zero();
  for (int c = 0; c < C; ++c) {
    const S* plane = x.ptr() + static_cast<std::size_t>(c) * H * W;
    const S* ker = w.ptr() + static_cast<std::size_t>(c) * k * k;
    const S* dout = dy.ptr() + static_cast<std::size_t>(c) * H * W;
    S* dplane = dx.ptr() + static_cast<std::size_t>(c) * H * W;
    S* dker = dw.ptr() + static_cast<std::size_t>(c) * k * k;
    S dbias = 0;
    for (int oy = 0; oy < H; ++oy) {
      for (int ox = 0; ox < W; ++ox) {
        const S g = dout[oy * W + ox];
        dbias += g;
        const int y0 = oy - pad, x0 = ox - pad;
        const int ky_lo = y0 < 0 ? -y0 : 0;
        const int ky_hi = y0 + k > H ? H - y0 : k;
        const int kx_lo = x0 < 0 ? -x0 : 0;
        const int kx_hi = x0 + k > W ? W - x0 : k;
        for (int ky = ky_lo; ky < ky_hi; ++ky) {
          const S* src = plane + (y0 + ky) * W + x0;
          S* dst = dplane + (y0 + ky) * W + x0;
          const S* kr = ker + ky * k;
          S* dkr = dker + ky * k;
          for (int kx = kx_lo; kx < kx_hi; ++kx) {
            dkr[kx] += src[kx] * g;
            dst[kx] += kr[kx] * g;
          }
        }
      }
    }
    db.ptr()[c] += dbias;
  }
}

// --- channel-wise layer normalization at each spatial position ---
// Normalizes over C; gamma/beta are per-channel. Also used on plain
// vectors with H = W = 1.

template <typename S>
void layernorm_forward(const Tensor<S>& x, int C, int HW, const Tensor<S>& gamma,
                       const Tensor<S>& beta, Tensor<S>& y, Tensor<S>& xhat, Tensor<S>& inv_std,
                       S eps = S(1e-6)) {
  ensure_shape(y, x.dims);
  ensure_shape(xhat, x.dims);
  ensure_shape(inv_std, {HW});
  for (int p = 0; p < HW; ++p) {
    S mean = 0;
    for (int c = 0; c < C; ++c) mean += x.ptr()[static_cast<std::size_t>(c) * HW + p];
    mean /= static_cast<S>(C);
    S var = 0;
    for (int c = 0; c < C; ++c) {
      const S d = x.ptr()[static_cast<std::size_t>(c) * HW + p] - mean;
      var += d * d;
    }
    var /= static_cast<S>(C);
    const S inv = S(1) / std::sqrt(var + eps);
    inv_std.ptr()[p] = inv;
    for (int c = 0; c < C; ++c) {
      const std::size_t idx = static_cast<std::size_t>(c) * HW + p;
      const S xh = (x.ptr()[idx] - mean) * inv;
      xhat.ptr()[idx] = xh;
      y.ptr()[idx] = gamma.ptr()[c] * xh + beta.ptr()[c];
    }
  }
}

template <typename S>
void layernorm_backward(const Tensor<S>& dy, int C, int HW, const Tensor<S>& gamma,
                        const Tensor<S>& xhat, const Tensor<S>& inv_std, Tensor<S>& dx,
                        Tensor<S>& dgamma, Tensor<S>& dbeta) {
  ensure_shape(dx, dy.dims);
  for (int c = 0; c < C; ++c) {
    S dg = 0, db = 0;
    const S* dyp = dy.ptr() + static_cast<std::size_t>(c) * HW;
    const S* xh = xhat.ptr() + static_cast<std::size_t>(c) * HW;
    for (int p = 0; p < HW; ++p) {
      dg += dyp[p] * xh[p];
      db += dyp[p];
    }
    dgamma.ptr()[c] += dg;
    dbeta.ptr()[c] += db;
  }
  for (int p = 0; p < HW; ++p) {
    S sum_dxhat = 0, sum_dxhat_xhat = 0;
    for (int c = 0; c < C; ++c) {
      const std::size_t idx = static_cast<std::size_t>(c) * HW + p;
      const S dxh = dy.ptr()[idx] * gamma.ptr()[c];
      sum_dxhat += dxh;
      sum_dxhat_xhat += dxh * xhat.ptr()[idx];
    }
    const S inv = inv_std.ptr()[p];
    for (int c = 0; c < C; ++c) {
      const std::size_t idx = static_cast<std::size_t>(c) * HW + p;
      const S dxh = dy.ptr()[idx] * gamma.ptr()[c];
      dx.ptr()[idx] =
          inv * (dxh - (sum_dxhat + xhat.ptr()[idx] * sum_dxhat_xhat) / static_cast<S>(C));
    }
  }
}

// --- GELU (exact erf form) ---

template <typename S>
void gelu_forward(const Tensor<S>& x, Tensor<S>& y) {
  ensure_shape(y, x.dims);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const S v = x.ptr()[i];
    y.ptr()[i] = S(0.5) * v * (S(1) + std::erf(v * S(0.7071067811865476)));
  }
}

template <typename S>
void gelu_backward(const Tensor<S>& x, const Tensor<S>& dy, Tensor<S>& dx) {
  ensure_shape(dx, x.dims);
  const std::size_t n = x.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const S v = x.ptr()[i];
    const S cdf = S(0.5) * (S(1) + std::erf(v * S(0.7071067811865476)));
    const S pdf = std::exp(S(-0.5) * v * v) * S(0.3989422804014327);
    dx.ptr()[i] = dy.ptr()[i] * (cdf + v * pdf);
  }
}

// --- linear head ---
// x: [C], w: [K,C], b: [K], y: [K]

template <typename S>
void linear_forward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& b, Tensor<S>& y) {
  const int K = w.dims[0], C = w.dims[1];
  ensure_shape(y, {K});
  ConstMatMap<S> W_(w.ptr(), K, C);
  ConstMatMap<S> X_(x.ptr(), C, 1);
  MatMap<S> Y_(y.ptr(), K, 1);
  Y_.noalias() = W_ * X_;
  for (int k = 0; k < K; ++k) y.ptr()[k] += b.ptr()[k];
}

template <typename S>
void linear_backward(const Tensor<S>& x, const Tensor<S>& w, const Tensor<S>& dy, Tensor<S>& dx,
                     Tensor<S>& dw, Tensor<S>& db) {
  const int K = w.dims[0], C = w.dims[1];
  for (int k = 0; k < K; ++k) {
    const S g = dy.ptr()[k];
    db.ptr()[k] += g;
    S* dwrow = dw.ptr() + static_cast<std::size_t>(k) * C;
    const S* xv = x.ptr();
    for (int c = 0; c < C; ++c) dwrow[c] += xv[c] * g;
  }
  ensure_shape(dx, {C});
  ConstMatMap<S> W_(w.ptr(), K, C);
  ConstMatMap<S> Dy_(dy.ptr(), K, 1);
  MatMap<S> Dx_(dx.ptr(), C, 1);
  Dx_.noalias() = W_.transpose() * Dy_;
}

// --- global average pooling ---

template <typename S>
void gap_forward(const Tensor<S>& x, int C, int HW, Tensor<S>& y) {
  ensure_shape(y, {C});
  for (int c = 0; c < C; ++c) {
    S acc = 0;
    const S* p = x.ptr() + static_cast<std::size_t>(c) * HW;
    for (int i = 0; i < HW; ++i) acc += p[i];
    y.ptr()[c] = acc / static_cast<S>(HW);
  }
}

template <typename S>
void gap_backward(const Tensor<S>& dy, int C, int H, int W, Tensor<S>& dx) {
  const int HW = H * W;
  ensure_shape(dx, {C, H, W});
  for (int c = 0; c < C; ++c) {
    const S g = dy.ptr()[c] / static_cast<S>(HW);
    S* p = dx.ptr() + static_cast<std::size_t>(c) * HW;
    for (int i = 0; i < HW; ++i) p[i] = g;
  }
}

}  // namespace artifact::nn
