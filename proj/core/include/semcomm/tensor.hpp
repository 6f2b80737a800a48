#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace semcomm {

// Dense NCHW tensor with value semantics. The batch dimension comes
// first; (c, h, w) describe one item.
template <typename T>
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int n, int c, int h, int w)
      : n_(n), c_(c), h_(h), w_(w), v_(checked_size(n, c, h, w)) {}

  int n() const { return n_; }
  int c() const { return c_; }
  int h() const { return h_; }
  int w() const { return w_; }
  std::size_t size() const { return v_.size(); }
  std::size_t item_size() const {
    return static_cast<std::size_t>(c_) * h_ * w_;
  }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  T* item(int i) { return v_.data() + i * item_size(); }
  const T* item(int i) const { return v_.data() + i * item_size(); }

  T& at(int n, int c, int h, int w) {
    assert(n < n_ && c < c_ && h < h_ && w < w_);
    return v_[((static_cast<std::size_t>(n) * c_ + c) * h_ + h) * w_ + w];
  }
  const T& at(int n, int c, int h, int w) const {
    assert(n < n_ && c < c_ && h < h_ && w < w_);
    return v_[((static_cast<std::size_t>(n) * c_ + c) * h_ + h) * w_ + w];
  }

  bool same_shape(const Tensor4& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  void fill(T value) { v_.assign(v_.size(), value); }

  std::vector<T>& storage() { return v_; }
  const std::vector<T>& storage() const { return v_; }

 private:
  static std::size_t checked_size(int n, int c, int h, int w) {
    if (n < 0 || c < 0 || h < 0 || w < 0)
      throw std::invalid_argument("Tensor4: negative dimension");
    return static_cast<std::size_t>(n) * c * h * w;
  }

  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> v_;
};

// A batch of normalized images in [-1, 1]; labels are optional and, when
// present, run parallel to the batch dimension.
struct ImageBatch {
  Tensor4<float> data;
  std::vector<int> labels;  // empty means unlabeled

  int size() const { return data.n(); }
  bool has_labels() const { return !labels.empty(); }
};

}  // namespace semcomm
