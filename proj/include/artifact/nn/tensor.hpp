#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace artifact::nn {

// Dense row-major buffer with an explicit dims vector. Ops interpret dims
// by convention (activations CHW, conv weights [K,C,kh,kw], linear [K,C]).
template <typename S>
struct Tensor {
  std::vector<int> dims;
  std::vector<S> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> d) { resize(std::move(d)); }

  void resize(std::vector<int> d) {
    dims = std::move(d);
    data.assign(numel(), S(0));
  }

  std::size_t numel() const {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return dims.empty() ? 0 : n;
  }

  void zero() { std::fill(data.begin(), data.end(), S(0)); }

  S* ptr() { return data.data(); }
  const S* ptr() const { return data.data(); }

  bool same_shape(const Tensor& o) const { return dims == o.dims; }

  std::string shape_str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(dims[i]);
    }
    return s + "]";
  }
};

template <typename S>
inline void ensure_shape(Tensor<S>& t, std::vector<int> dims) {
  if (t.dims != dims) t.resize(std::move(dims));
}

}  // namespace artifact::nn
