#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "artifact/image.hpp"
#include "artifact/nn/ops.hpp"
#include "artifact/nn/tensor.hpp"
#include "artifact/rng.hpp"
#include "artifact/taxonomy.hpp"

namespace artifact::nn {

enum class HeadMode { Binary, MultiClass };

inline const char* to_string(HeadMode m) {
  return m == HeadMode::Binary ? "binary" : "multi";
}

inline HeadMode head_mode_from_string(const std::string& s) {
  if (s == "binary") return HeadMode::Binary;
  if (s == "multi") return HeadMode::MultiClass;
  throw std::runtime_error("unknown head mode: " + s);
}

// Hierarchical CNN with a patchify stem. The stride-reduced stem keeps the
// stem kernel (and every weight shape) intact and halves only the stride,
// so checkpoints transfer between the two settings.
struct ModelConfig {
  int stem_kernel = 4;
  int stem_stride = 4;
  bool fsr = false;
  std::vector<int> stage_depths{1, 1, 2, 1};
  std::vector<int> stage_widths{32, 64, 128, 256};
  HeadMode head_mode = HeadMode::MultiClass;
  int num_classes = 7;
  int input_size = 200;

  void check() const {
    if (stem_kernel < 1) throw std::runtime_error("model config: stem_kernel must be positive");
    if (fsr) {
      if (stem_kernel % 2 != 0 || stem_stride != stem_kernel / 2)
        throw std::runtime_error("model config: fsr requires stem_stride = stem_kernel/2");
    } else if (stem_stride != stem_kernel) {
      throw std::runtime_error("model config: baseline stem requires stem_stride = stem_kernel");
    }
    if (stage_depths.empty() || stage_depths.size() != stage_widths.size())
      throw std::runtime_error("model config: stage_depths/stage_widths must be equal non-empty");
    for (int d : stage_depths)
      if (d < 1) throw std::runtime_error("model config: stage depth must be >= 1");
    for (int w : stage_widths)
      if (w < 1) throw std::runtime_error("model config: stage width must be >= 1");
    if (head_mode == HeadMode::Binary && num_classes != 2)
      throw std::runtime_error("model config: binary head requires num_classes = 2");
    if (num_classes < 2) throw std::runtime_error("model config: num_classes must be >= 2");
    if (input_size < stem_kernel)
      throw std::runtime_error("model config: input_size smaller than stem_kernel");
  }
};

inline int stem_output_shape(const ModelConfig& cfg, int input) {
  if (input < cfg.stem_kernel) throw std::runtime_error("stem_output_shape: input below kernel");
  return (input - cfg.stem_kernel) / cfg.stem_stride + 1;
}

template <typename S>
struct Param {
  std::string name;
  Tensor<S> value;
  Tensor<S> grad;
};

template <typename S>
struct Workspace {
  Tensor<S> x;
  Tensor<S> stem_out, stem_ln, stem_xhat, stem_inv;

  struct BlockCache {
    Tensor<S> in, dw, ln, xhat, inv, pw1, gelu, out;
  };
  struct DownCache {
    Tensor<S> ln, xhat, inv, out;
  };
  std::vector<std::vector<BlockCache>> blocks;
  std::vector<DownCache> downs;

  Tensor<S> gap, head_ln, head_xhat, head_inv, logits;
  // scratch shared across layers
  Tensor<S> col, dcol, ga, gb, gc;

  int stem_h = 0, stem_w = 0;
  std::vector<int> stage_h, stage_w;  // feature dims entering each stage
};

template <typename S>
class Net {
 public:
  Net(ModelConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.check();
    build();
    init_params(init_seed);
  }

  const ModelConfig& config() const { return cfg_; }
  std::vector<Param<S>>& params() { return params_; }
  const std::vector<Param<S>>& params() const { return params_; }

  int param_index(const std::string& name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::runtime_error("unknown parameter: " + name);
    return it->second;
  }

  void zero_grads() {
    for (auto& p : params_) p.grad.zero();
  }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.numel();
    return n;
  }

  // x: [3,H,W], already normalized. Returns logits living in ws.
  const Tensor<S>& forward(const Tensor<S>& x, Workspace<S>& ws) {
    if (x.dims.size() != 3 || x.dims[0] != 3)
      throw std::runtime_error("forward: expected a [3,H,W] input, got " + x.shape_str());
    const int H = x.dims[1], W = x.dims[2];
    if (H < cfg_.stem_kernel || W < cfg_.stem_kernel)
      throw std::runtime_error("forward: spatial dims below stem kernel");
    ws.x = x;

    const int ns = static_cast<int>(cfg_.stage_depths.size());
    ws.blocks.resize(ns);
    for (int s = 0; s < ns; ++s) ws.blocks[s].resize(cfg_.stage_depths[s]);
    ws.downs.resize(ns - 1);
    ws.stage_h.assign(ns, 0);
    ws.stage_w.assign(ns, 0);

    // stem: valid conv + channel norm
    int h = conv_out_dim(H, cfg_.stem_kernel, cfg_.stem_stride);
    int w = conv_out_dim(W, cfg_.stem_kernel, cfg_.stem_stride);
    conv_forward(ws.x, 3, H, W, p(stem_w_).value, p(stem_b_).value, cfg_.stem_kernel,
                 cfg_.stem_stride, ws.stem_out, ws.col);
    ws.stem_h = h;
    ws.stem_w = w;
    layernorm_forward(ws.stem_out, cfg_.stage_widths[0], h * w, p(stem_ln_g_).value,
                      p(stem_ln_b_).value, ws.stem_ln, ws.stem_xhat, ws.stem_inv);

    const Tensor<S>* cur = &ws.stem_ln;
    for (int s = 0; s < ns; ++s) {
      ws.stage_h[s] = h;
      ws.stage_w[s] = w;
      const int C = cfg_.stage_widths[s];
      for (int b = 0; b < cfg_.stage_depths[s]; ++b) {
        auto& bc = ws.blocks[s][b];
        const auto& br = stages_[s][b];
        bc.in = *cur;
        dwconv_forward(bc.in, C, h, w, p(br.dw_w).value, p(br.dw_b).value, kDwKernel, bc.dw);
        layernorm_forward(bc.dw, C, h * w, p(br.ln_g).value, p(br.ln_b).value, bc.ln, bc.xhat,
                          bc.inv);
        conv_forward(bc.ln, C, h, w, p(br.pw1_w).value, p(br.pw1_b).value, 1, 1, bc.pw1, ws.col);
        gelu_forward(bc.pw1, bc.gelu);
        conv_forward(bc.gelu, kExpand * C, h, w, p(br.pw2_w).value, p(br.pw2_b).value, 1, 1,
                     bc.out, ws.col);
        S* o = bc.out.ptr();
        const S* r = bc.in.ptr();
        const std::size_t n = bc.out.numel();
        for (std::size_t i = 0; i < n; ++i) o[i] += r[i];
        cur = &bc.out;
      }
      if (s + 1 < ns) {
        auto& dc = ws.downs[s];
        const auto& dr = downs_[s];
        layernorm_forward(*cur, C, h * w, p(dr.ln_g).value, p(dr.ln_b).value, dc.ln, dc.xhat,
                          dc.inv);
        const int nh = conv_out_dim(h, 2, 2);
        const int nw = conv_out_dim(w, 2, 2);
        conv_forward(dc.ln, C, h, w, p(dr.conv_w).value, p(dr.conv_b).value, 2, 2, dc.out, ws.col);
        h = nh;
        w = nw;
        cur = &dc.out;
      }
    }

    const int Cl = cfg_.stage_widths.back();
    gap_forward(*cur, Cl, h * w, ws.gap);
    layernorm_forward(ws.gap, Cl, 1, p(head_ln_g_).value, p(head_ln_b_).value, ws.head_ln,
                      ws.head_xhat, ws.head_inv);
    linear_forward(ws.head_ln, p(head_fc_w_).value, p(head_fc_b_).value, ws.logits);
    return ws.logits;
  }

  // dlogits: [num_classes]. Accumulates into Param::grad. Must follow a
  // forward call that filled ws.
  void backward(const Tensor<S>& dlogits, Workspace<S>& ws) {
    const int ns = static_cast<int>(cfg_.stage_depths.size());
    const int Cl = cfg_.stage_widths.back();
    int h = ws.stage_h[ns - 1], w = ws.stage_w[ns - 1];

    linear_backward(ws.head_ln, p(head_fc_w_).value, dlogits, ws.ga, p(head_fc_w_).grad,
                    p(head_fc_b_).grad);
    layernorm_backward(ws.ga, Cl, 1, p(head_ln_g_).value, ws.head_xhat, ws.head_inv, ws.gb,
                       p(head_ln_g_).grad, p(head_ln_b_).grad);
    gap_backward(ws.gb, Cl, h, w, ws.ga);

    // ws.ga holds d(stage output) at the current resolution from here on
    for (int s = ns - 1; s >= 0; --s) {
      const int C = cfg_.stage_widths[s];
      h = ws.stage_h[s];
      w = ws.stage_w[s];
      if (s < ns - 1) {
        // invert the downsample that fed stage s+1
        const auto& dr = downs_[s];
        auto& dc = ws.downs[s];
        conv_backward(dc.ln, C, h, w, p(dr.conv_w).value, 2, 2, ws.ga, ws.gb, p(dr.conv_w).grad,
                      p(dr.conv_b).grad, ws.col, ws.dcol, true);
        layernorm_backward(ws.gb, C, h * w, p(dr.ln_g).value, dc.xhat, dc.inv, ws.ga,
                           p(dr.ln_g).grad, p(dr.ln_b).grad);
      }
      for (int b = cfg_.stage_depths[s] - 1; b >= 0; --b) {
        const auto& br = stages_[s][b];
        auto& bc = ws.blocks[s][b];
        // ws.ga = d(block output); residual contributes ws.ga to d(input)
        conv_backward(bc.gelu, kExpand * C, h, w, p(br.pw2_w).value, 1, 1, ws.ga, ws.gb,
                      p(br.pw2_w).grad, p(br.pw2_b).grad, ws.col, ws.dcol, true);
        gelu_backward(bc.pw1, ws.gb, ws.gc);
        conv_backward(bc.ln, C, h, w, p(br.pw1_w).value, 1, 1, ws.gc, ws.gb, p(br.pw1_w).grad,
                      p(br.pw1_b).grad, ws.col, ws.dcol, true);
        layernorm_backward(ws.gb, C, h * w, p(br.ln_g).value, bc.xhat, bc.inv, ws.gc,
                           p(br.ln_g).grad, p(br.ln_b).grad);
        dwconv_backward(bc.in, C, h, w, p(br.dw_w).value, kDwKernel, ws.gc, ws.gb, p(br.dw_w).grad,
                        p(br.dw_b).grad);
        S* a = ws.ga.ptr();
        const S* bgrad = ws.gb.ptr();
        const std::size_t n = ws.ga.numel();
        for (std::size_t i = 0; i < n; ++i) a[i] += bgrad[i];
      }
    }

    // stem: norm then conv; input gradient not needed
    layernorm_backward(ws.ga, cfg_.stage_widths[0], ws.stem_h * ws.stem_w, p(stem_ln_g_).value,
                       ws.stem_xhat, ws.stem_inv, ws.gb, p(stem_ln_g_).grad, p(stem_ln_b_).grad);
    conv_backward(ws.x, 3, ws.x.dims[1], ws.x.dims[2], p(stem_w_).value, cfg_.stem_kernel,
                  cfg_.stem_stride, ws.gb, ws.gc, p(stem_w_).grad, p(stem_b_).grad, ws.col,
                  ws.dcol, false);
  }

 private:
  static constexpr int kDwKernel = 7;
  static constexpr int kExpand = 4;

  struct BlockRef {
    int dw_w, dw_b, ln_g, ln_b, pw1_w, pw1_b, pw2_w, pw2_b;
  };
  struct DownRef {
    int ln_g, ln_b, conv_w, conv_b;
  };

  Param<S>& p(int idx) { return params_[idx]; }

  int add_param(const std::string& name, std::vector<int> dims) {
    Param<S> prm;
    prm.name = name;
    prm.value.resize(dims);
    prm.grad.resize(std::move(dims));
    params_.push_back(std::move(prm));
    const int idx = static_cast<int>(params_.size()) - 1;
    by_name_[params_.back().name] = idx;
    return idx;
  }

  void build() {
    const int ns = static_cast<int>(cfg_.stage_depths.size());
    const int c0 = cfg_.stage_widths[0];
    stem_w_ = add_param("stem.conv.w", {c0, 3, cfg_.stem_kernel, cfg_.stem_kernel});
    stem_b_ = add_param("stem.conv.b", {c0});
    stem_ln_g_ = add_param("stem.ln.g", {c0});
    stem_ln_b_ = add_param("stem.ln.b", {c0});
    stages_.resize(ns);
    downs_.resize(ns - 1);
    for (int s = 0; s < ns; ++s) {
      const int C = cfg_.stage_widths[s];
      stages_[s].resize(cfg_.stage_depths[s]);
      for (int b = 0; b < cfg_.stage_depths[s]; ++b) {
        const std::string base = "stage" + std::to_string(s) + ".block" + std::to_string(b) + ".";
        auto& br = stages_[s][b];
        br.dw_w = add_param(base + "dw.w", {C, kDwKernel, kDwKernel});
        br.dw_b = add_param(base + "dw.b", {C});
        br.ln_g = add_param(base + "ln.g", {C});
        br.ln_b = add_param(base + "ln.b", {C});
        br.pw1_w = add_param(base + "pw1.w", {kExpand * C, C, 1, 1});
        br.pw1_b = add_param(base + "pw1.b", {kExpand * C});
        br.pw2_w = add_param(base + "pw2.w", {C, kExpand * C, 1, 1});
        br.pw2_b = add_param(base + "pw2.b", {C});
      }
      if (s + 1 < ns) {
        const std::string base = "down" + std::to_string(s) + ".";
        auto& dr = downs_[s];
        dr.ln_g = add_param(base + "ln.g", {C});
        dr.ln_b = add_param(base + "ln.b", {C});
        dr.conv_w = add_param(base + "conv.w", {cfg_.stage_widths[s + 1], C, 2, 2});
        dr.conv_b = add_param(base + "conv.b", {cfg_.stage_widths[s + 1]});
      }
    }
    const int cl = cfg_.stage_widths.back();
    head_ln_g_ = add_param("head.ln.g", {cl});
    head_ln_b_ = add_param("head.ln.b", {cl});
    head_fc_w_ = add_param("head.fc.w", {cfg_.num_classes, cl});
    head_fc_b_ = add_param("head.fc.b", {cfg_.num_classes});
  }

  void init_params(std::uint64_t init_seed) {
    for (auto& prm : params_) {
      const bool weight = prm.name.size() > 2 && prm.name.rfind(".w") == prm.name.size() - 2;
      const bool ln_gain = prm.name.rfind(".ln.g") != std::string::npos &&
                           prm.name.rfind(".ln.g") == prm.name.size() - 5;
      if (weight) {
        Rng rng = derive_rng(init_seed, prm.name);
        for (auto& v : prm.value.data) {
          double z;
          do {
            z = rng.normal();
          } while (z < -2.0 || z > 2.0);
          v = static_cast<S>(0.02 * z);
        }
      } else if (ln_gain) {
        for (auto& v : prm.value.data) v = S(1);
      }  // biases and ln shifts stay zero
    }
  }

  ModelConfig cfg_;
  std::vector<Param<S>> params_;
  std::map<std::string, int> by_name_;
  int stem_w_ = -1, stem_b_ = -1, stem_ln_g_ = -1, stem_ln_b_ = -1;
  std::vector<std::vector<BlockRef>> stages_;
  std::vector<DownRef> downs_;
  int head_ln_g_ = -1, head_ln_b_ = -1, head_fc_w_ = -1, head_fc_b_ = -1;
};

// Builds a model consistent with the taxonomy the head will be read against.
template <typename S>
Net<S> build_model(const ModelConfig& cfg, const ClassTaxonomy& taxonomy,
                   std::uint64_t init_seed) {
  if (cfg.head_mode == HeadMode::MultiClass && cfg.num_classes > taxonomy.num_classes())
    throw std::runtime_error("build_model: num_classes exceeds taxonomy size");
  return Net<S>(cfg, init_seed);
}

// Planar CHW tensor from an interleaved RGB raster, mapped to roughly
// zero-mean unit-range values: (v/255 - 0.5) / 0.25.
template <typename S>
void image_to_tensor(const Image& img, Tensor<S>& out) {
  ensure_shape(out, {3, img.height, img.width});
  const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
  for (int c = 0; c < 3; ++c) {
    S* dst = out.ptr() + c * plane;
    const std::uint8_t* src = img.pixels.data() + c;
    for (std::size_t i = 0; i < plane; ++i)
      dst[i] = (static_cast<S>(src[i * 3]) / S(255) - S(0.5)) / S(0.25);
  }
}

}  // namespace artifact::nn
