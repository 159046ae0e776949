#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "spikenas/errors.hpp"

namespace spikenas {

// Dense row-major tensor. Rank is dynamic; the kernels use (n, c, h, w) for
// feature maps and (n, f) for flattened features. Value semantics: copies
// copy the buffer, moves are cheap.
template <class S>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int64_t> dims) : dims_(std::move(dims)) {
    data_.assign(static_cast<size_t>(count(dims_)), S(0));
  }

  TensorT(std::vector<int64_t> dims, std::vector<S> values)
      : dims_(std::move(dims)), data_(std::move(values)) {
    if (count(dims_) != static_cast<int64_t>(data_.size()))
      throw ShapeError("tensor: dims do not match value count");
  }

  static TensorT zeros(std::vector<int64_t> dims) { return TensorT(std::move(dims)); }

  static TensorT full(std::vector<int64_t> dims, S value) {
    TensorT t(std::move(dims));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  int rank() const { return static_cast<int>(dims_.size()); }
  const std::vector<int64_t>& dims() const { return dims_; }
  int64_t dim(int i) const { return dims_.at(static_cast<size_t>(i)); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }

  S& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const S& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // (n, f) indexing
  S& at2(int64_t n, int64_t f) { return data_[static_cast<size_t>(n * dims_[1] + f)]; }
  const S& at2(int64_t n, int64_t f) const { return data_[static_cast<size_t>(n * dims_[1] + f)]; }

  // (n, c, h, w) indexing
  S& at4(int64_t n, int64_t c, int64_t h, int64_t w) {
    return data_[static_cast<size_t>(((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
  }
  const S& at4(int64_t n, int64_t c, int64_t h, int64_t w) const {
    return data_[static_cast<size_t>(((n * dims_[1] + c) * dims_[2] + h) * dims_[3] + w)];
  }

  // Reinterprets the buffer with new dims of equal element count.
  TensorT reshaped(std::vector<int64_t> dims) const {
    if (count(dims) != numel()) throw ShapeError("reshape: element count mismatch");
    TensorT t;
    t.dims_ = std::move(dims);
    t.data_ = data_;
    return t;
  }

  void fill(S value) { std::fill(data_.begin(), data_.end(), value); }
  void zero() { fill(S(0)); }

  void add_scaled(const TensorT& other, S scale) {
    if (other.numel() != numel()) throw ShapeError("add_scaled: size mismatch");
    for (int64_t i = 0; i < numel(); ++i) data_[static_cast<size_t>(i)] += scale * other[i];
  }

  void add_scalar(S value) {
    for (auto& v : data_) v += value;
  }

  bool all_finite() const {
    for (const auto& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  double sum() const {
    double acc = 0.0;
    for (const auto& v : data_) acc += static_cast<double>(v);
    return acc;
  }

  bool same_dims(const TensorT& other) const { return dims_ == other.dims_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < dims_.size(); ++i) os << (i ? "," : "") << dims_[i];
    os << ")";
    return os.str();
  }

  template <class T>
  TensorT<T> cast() const {
    TensorT<T> out(dims_);
    for (int64_t i = 0; i < numel(); ++i) out[i] = static_cast<T>(data_[static_cast<size_t>(i)]);
    return out;
  }

 private:
  static int64_t count(const std::vector<int64_t>& dims) {
    int64_t n = 1;
    for (int64_t d : dims) {
      if (d < 0) throw ShapeError("tensor: negative dimension");
      n *= d;
    }
    return dims.empty() ? 0 : n;
  }

  std::vector<int64_t> dims_;
  std::vector<S> data_;
};

using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

}  // namespace spikenas
