#ifndef GANOV_TENSOR_HPP
#define GANOV_TENSOR_HPP

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ganov/errors.hpp"

namespace ganov {

// Dense float32 tensor, row-major. Images are NCHW with values in [-1,1].
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(numel_of(shape)), 0.0f);
  }

  static int64_t numel_of(const std::vector<int64_t>& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t dim(size_t i) const { return shape.at(i); }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  void fill(float v) { std::fill(data.begin(), data.end(), v); }

  // Reinterpret without copying; element count must match.
  Tensor reshaped(std::vector<int64_t> s) const {
    if (numel_of(s) != numel())
      throw ValidationError("reshape: element count mismatch");
    Tensor t;
    t.shape = std::move(s);
    t.data = data;
    return t;
  }

  // Slice along the leading axis: rows [begin, begin+count).
  Tensor slice0(int64_t begin, int64_t count) const {
    int64_t stride = numel() / shape.at(0);
    Tensor t;
    t.shape = shape;
    t.shape[0] = count;
    t.data.assign(data.begin() + begin * stride,
                  data.begin() + (begin + count) * stride);
    return t;
  }

  std::string shape_str() const {
    std::string s = "(";
    for (size_t i = 0; i < shape.size(); ++i)
      s += (i ? "," : "") + std::to_string(shape[i]);
    return s + ")";
  }
};

inline bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape;
}

}  // namespace ganov

#endif
