// Minimal CNN layer zoo: strided convolution, transposed convolution,
// ReLU, tanh, and a dense head. Templated on the scalar so training
// runs in float while gradient checks instantiate double.
//
// Convolutions lower to GEMM via im2col. A transposed convolution is
// the adjoint of the convolution with the same (kernel, stride, pad)
// geometry, so its forward scatters with col2im and its backward
// gathers with im2col.
//
// Gradients are written, not accumulated: one backward per forward.
#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "semcomm/rng.hpp"
#include "semcomm/tensor.hpp"

namespace semcomm::nn {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RowMajorMap =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstRowMajorMap = Eigen::Map<
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
struct ParamRef {
  std::string name;
  std::span<T> value;
  std::span<T> grad;
};

// Floor convolution arithmetic; the possible one-pixel remainder is
// what decoder stages compensate for with output padding.
inline int conv_out_size(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0) {
    throw std::invalid_argument(
        "kernel does not fit the padded input: in=" + std::to_string(in) +
        " k=" + std::to_string(kernel) + " s=" + std::to_string(stride) +
        " p=" + std::to_string(pad));
  }
  return span / stride + 1;
}

inline int tconv_out_size(int in, int kernel, int stride, int pad,
                          int output_pad) {
  if (output_pad < 0 || output_pad >= stride) {
    throw std::invalid_argument("output padding must be in [0, stride)");
  }
  const int out = (in - 1) * stride - 2 * pad + kernel + output_pad;
  if (out < 1) {
    throw std::invalid_argument("transposed convolution output collapses");
  }
  return out;
}

// One image: x is (C, H, W) planes, col is column major with shape
// (C*k*k) x (out_h*out_w); column (ho, wo) holds the receptive field.
template <typename T>
void im2col(const T* x, int c, int h, int w, int kernel, int stride, int pad,
            int out_h, int out_w, T* col) {
  const std::size_t rows = static_cast<std::size_t>(c) * kernel * kernel;
  for (int ho = 0; ho < out_h; ++ho) {
    for (int wo = 0; wo < out_w; ++wo) {
      T* column = col + static_cast<std::size_t>(ho * out_w + wo) * rows;
      std::size_t r = 0;
      for (int ci = 0; ci < c; ++ci) {
        for (int kh = 0; kh < kernel; ++kh) {
          const int hi = ho * stride - pad + kh;
          for (int kw = 0; kw < kernel; ++kw, ++r) {
            const int wi = wo * stride - pad + kw;
            column[r] = (hi >= 0 && hi < h && wi >= 0 && wi < w)
                            ? x[(static_cast<std::size_t>(ci) * h + hi) * w + wi]
                            : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds columns back into the image.
template <typename T>
void col2im_add(const T* col, int c, int h, int w, int kernel, int stride,
                int pad, int out_h, int out_w, T* x) {
  const std::size_t rows = static_cast<std::size_t>(c) * kernel * kernel;
  for (int ho = 0; ho < out_h; ++ho) {
    for (int wo = 0; wo < out_w; ++wo) {
      const T* column = col + static_cast<std::size_t>(ho * out_w + wo) * rows;
      std::size_t r = 0;
      for (int ci = 0; ci < c; ++ci) {
        for (int kh = 0; kh < kernel; ++kh) {
          const int hi = ho * stride - pad + kh;
          for (int kw = 0; kw < kernel; ++kw, ++r) {
            const int wi = wo * stride - pad + kw;
            if (hi >= 0 && hi < h && wi >= 0 && wi < w) {
              x[(static_cast<std::size_t>(ci) * h + hi) * w + wi] += column[r];
            }
          }
        }
      }
    }
  }
}

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor4<T> forward(const Tensor4<T>& x) = 0;
  virtual Tensor4<T> backward(const Tensor4<T>& dy) = 0;
  virtual void collect_params(const std::string& prefix,
                              std::vector<ParamRef<T>>& out) {
    (void)prefix;
    (void)out;
  }
  // Fills weights then biases from the stream; no-op for stateless layers.
  virtual void init(rng::Stream& stream) { (void)stream; }
};

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(int in_ch, int out_ch, int kernel, int stride, int pad)
      : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride),
        pad_(pad),
        w_(static_cast<std::size_t>(out_ch) * in_ch * kernel * kernel),
        b_(static_cast<std::size_t>(out_ch)), gw_(w_.size()), gb_(b_.size()) {}

  Tensor4<T> forward(const Tensor4<T>& x) override {
    if (x.c() != in_ch_) {
      throw std::invalid_argument("conv expects " + std::to_string(in_ch_) +
                                  " channels, got " + std::to_string(x.c()));
    }
    n_ = x.n();
    h_ = x.h();
    w_in_ = x.w();
    out_h_ = conv_out_size(h_, kernel_, stride_, pad_);
    out_w_ = conv_out_size(w_in_, kernel_, stride_, pad_);
    const std::size_t rows = static_cast<std::size_t>(in_ch_) * kernel_ * kernel_;
    const std::size_t per_image = static_cast<std::size_t>(out_h_) * out_w_;
    col_.resize(static_cast<Eigen::Index>(rows),
                static_cast<Eigen::Index>(per_image * n_));
    for (int n = 0; n < n_; ++n) {
      im2col(x.data() + static_cast<std::size_t>(n) * x.item_size(), in_ch_, h_,
             w_in_, kernel_, stride_, pad_, out_h_, out_w_,
             col_.data() + static_cast<std::size_t>(n) * per_image * rows);
    }
    ConstRowMajorMap<T> wm(w_.data(), out_ch_, static_cast<Eigen::Index>(rows));
    out_mat_.noalias() = wm * col_;

    Tensor4<T> y(n_, out_ch_, out_h_, out_w_);
    T* yd = y.data();
    for (int n = 0; n < n_; ++n) {
      for (int o = 0; o < out_ch_; ++o) {
        const T bias = b_[static_cast<std::size_t>(o)];
        for (std::size_t s = 0; s < per_image; ++s) {
          *yd++ = out_mat_(o, static_cast<Eigen::Index>(
                                  static_cast<std::size_t>(n) * per_image + s)) +
                  bias;
        }
      }
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) override {
    const std::size_t rows = static_cast<std::size_t>(in_ch_) * kernel_ * kernel_;
    const std::size_t per_image = static_cast<std::size_t>(out_h_) * out_w_;
    dout_mat_.resize(out_ch_, static_cast<Eigen::Index>(per_image * n_));
    const T* dyd = dy.data();
    for (int n = 0; n < n_; ++n) {
      for (int o = 0; o < out_ch_; ++o) {
        for (std::size_t s = 0; s < per_image; ++s) {
          dout_mat_(o, static_cast<Eigen::Index>(
                           static_cast<std::size_t>(n) * per_image + s)) = *dyd++;
        }
      }
    }
    RowMajorMap<T> gwm(gw_.data(), out_ch_, static_cast<Eigen::Index>(rows));
    gwm.noalias() = dout_mat_ * col_.transpose();
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(gb_.data(), out_ch_) =
        dout_mat_.rowwise().sum();

    ConstRowMajorMap<T> wm(w_.data(), out_ch_, static_cast<Eigen::Index>(rows));
    colg_.noalias() = wm.transpose() * dout_mat_;
    Tensor4<T> dx(n_, in_ch_, h_, w_in_);
    dx.fill(T(0));
    for (int n = 0; n < n_; ++n) {
      col2im_add(colg_.data() + static_cast<std::size_t>(n) * per_image * rows,
                 in_ch_, h_, w_in_, kernel_, stride_, pad_, out_h_, out_w_,
                 dx.data() + static_cast<std::size_t>(n) * dx.item_size());
    }
    return dx;
  }

  void collect_params(const std::string& prefix,
                      std::vector<ParamRef<T>>& out) override {
    out.push_back({prefix + ".weight", std::span<T>(w_), std::span<T>(gw_)});
    out.push_back({prefix + ".bias", std::span<T>(b_), std::span<T>(gb_)});
  }

  void init(rng::Stream& stream) override {
    const double bound =
        1.0 / std::sqrt(static_cast<double>(in_ch_) * kernel_ * kernel_);
    for (auto& v : w_) v = static_cast<T>(stream.uniform(-bound, bound));
    for (auto& v : b_) v = static_cast<T>(stream.uniform(-bound, bound));
  }

 private:
  int in_ch_, out_ch_, kernel_, stride_, pad_;
  int n_ = 0, h_ = 0, w_in_ = 0, out_h_ = 0, out_w_ = 0;
  std::vector<T> w_, b_, gw_, gb_;
  MatX<T> col_, out_mat_, dout_mat_, colg_;
};

template <typename T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(int in_ch, int out_ch, int kernel, int stride, int pad,
                  int output_pad)
      : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride),
        pad_(pad), output_pad_(output_pad),
        w_(static_cast<std::size_t>(in_ch) * out_ch * kernel * kernel),
        b_(static_cast<std::size_t>(out_ch)), gw_(w_.size()), gb_(b_.size()) {}

  Tensor4<T> forward(const Tensor4<T>& x) override {
    if (x.c() != in_ch_) {
      throw std::invalid_argument("tconv expects " + std::to_string(in_ch_) +
                                  " channels, got " + std::to_string(x.c()));
    }
    n_ = x.n();
    h_ = x.h();
    w_in_ = x.w();
    out_h_ = tconv_out_size(h_, kernel_, stride_, pad_, output_pad_);
    out_w_ = tconv_out_size(w_in_, kernel_, stride_, pad_, output_pad_);

    const std::size_t per_image = static_cast<std::size_t>(h_) * w_in_;
    x_mat_.resize(in_ch_, static_cast<Eigen::Index>(per_image * n_));
    const T* xd = x.data();
    for (int n = 0; n < n_; ++n) {
      for (int i = 0; i < in_ch_; ++i) {
        for (std::size_t s = 0; s < per_image; ++s) {
          x_mat_(i, static_cast<Eigen::Index>(
                        static_cast<std::size_t>(n) * per_image + s)) = *xd++;
        }
      }
    }

    const std::size_t rows = static_cast<std::size_t>(out_ch_) * kernel_ * kernel_;
    ConstRowMajorMap<T> wm(w_.data(), in_ch_, static_cast<Eigen::Index>(rows));
    colg_.noalias() = wm.transpose() * x_mat_;

    Tensor4<T> y(n_, out_ch_, out_h_, out_w_);
    T* yd = y.data();
    const std::size_t plane = static_cast<std::size_t>(out_h_) * out_w_;
    for (int n = 0; n < n_; ++n) {
      for (int o = 0; o < out_ch_; ++o) {
        const T bias = b_[static_cast<std::size_t>(o)];
        for (std::size_t s = 0; s < plane; ++s) *yd++ = bias;
      }
    }
    for (int n = 0; n < n_; ++n) {
      col2im_add(colg_.data() + static_cast<std::size_t>(n) * per_image * rows,
                 out_ch_, out_h_, out_w_, kernel_, stride_, pad_, h_, w_in_,
                 y.data() + static_cast<std::size_t>(n) * y.item_size());
    }
    return y;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) override {
    const std::size_t rows = static_cast<std::size_t>(out_ch_) * kernel_ * kernel_;
    const std::size_t per_image = static_cast<std::size_t>(h_) * w_in_;
    col_dy_.resize(static_cast<Eigen::Index>(rows),
                   static_cast<Eigen::Index>(per_image * n_));
    for (int n = 0; n < n_; ++n) {
      im2col(dy.data() + static_cast<std::size_t>(n) * dy.item_size(), out_ch_,
             out_h_, out_w_, kernel_, stride_, pad_, h_, w_in_,
             col_dy_.data() + static_cast<std::size_t>(n) * per_image * rows);
    }

    ConstRowMajorMap<T> wm(w_.data(), in_ch_, static_cast<Eigen::Index>(rows));
    dx_mat_.noalias() = wm * col_dy_;
    Tensor4<T> dx(n_, in_ch_, h_, w_in_);
    T* dxd = dx.data();
    for (int n = 0; n < n_; ++n) {
      for (int i = 0; i < in_ch_; ++i) {
        for (std::size_t s = 0; s < per_image; ++s) {
          *dxd++ = dx_mat_(i, static_cast<Eigen::Index>(
                                  static_cast<std::size_t>(n) * per_image + s));
        }
      }
    }

    RowMajorMap<T> gwm(gw_.data(), in_ch_, static_cast<Eigen::Index>(rows));
    gwm.noalias() = x_mat_ * col_dy_.transpose();

    const T* dyd = dy.data();
    const std::size_t plane = static_cast<std::size_t>(out_h_) * out_w_;
    std::fill(gb_.begin(), gb_.end(), T(0));
    for (int n = 0; n < n_; ++n) {
      for (int o = 0; o < out_ch_; ++o) {
        T acc = T(0);
        for (std::size_t s = 0; s < plane; ++s) acc += *dyd++;
        gb_[static_cast<std::size_t>(o)] += acc;
      }
    }
    return dx;
  }

  void collect_params(const std::string& prefix,
                      std::vector<ParamRef<T>>& out) override {
    out.push_back({prefix + ".weight", std::span<T>(w_), std::span<T>(gw_)});
    out.push_back({prefix + ".bias", std::span<T>(b_), std::span<T>(gb_)});
  }

  void init(rng::Stream& stream) override {
    const double bound =
        1.0 / std::sqrt(static_cast<double>(in_ch_) * kernel_ * kernel_);
    for (auto& v : w_) v = static_cast<T>(stream.uniform(-bound, bound));
    for (auto& v : b_) v = static_cast<T>(stream.uniform(-bound, bound));
  }

 private:
  int in_ch_, out_ch_, kernel_, stride_, pad_, output_pad_;
  int n_ = 0, h_ = 0, w_in_ = 0, out_h_ = 0, out_w_ = 0;
  std::vector<T> w_, b_, gw_, gb_;
  MatX<T> x_mat_, colg_, col_dy_, dx_mat_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  Tensor4<T> forward(const Tensor4<T>& x) override {
    y_ = x;
    T* p = y_.data();
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (p[i] < T(0)) p[i] = T(0);
    }
    return y_;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) override {
    Tensor4<T> dx = dy;
    const T* y = y_.data();
    T* p = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (y[i] <= T(0)) p[i] = T(0);
    }
    return dx;
  }

 private:
  Tensor4<T> y_;
};

template <typename T>
class Tanh final : public Layer<T> {
 public:
  Tensor4<T> forward(const Tensor4<T>& x) override {
    y_ = x;
    T* p = y_.data();
    for (std::size_t i = 0; i < y_.size(); ++i) {
      p[i] = std::tanh(p[i]);
    }
    return y_;
  }

  Tensor4<T> backward(const Tensor4<T>& dy) override {
    Tensor4<T> dx = dy;
    const T* y = y_.data();
    T* p = dx.data();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      p[i] *= T(1) - y[i] * y[i];
    }
    return dx;
  }

 private:
  Tensor4<T> y_;
};

// Dense layer over the flattened per-image features. Logits are stored
// row major: logits[n * out_features + o].
template <typename T>
class Linear {
 public:
  Linear(int in_features, int out_features)
      : in_(in_features), out_(out_features),
        w_(static_cast<std::size_t>(out_features) * in_features),
        b_(static_cast<std::size_t>(out_features)), gw_(w_.size()),
        gb_(b_.size()) {}

  std::vector<T> forward(const Tensor4<T>& x) {
    if (static_cast<int>(x.item_size()) != in_) {
      throw std::invalid_argument("dense layer expects " + std::to_string(in_) +
                                  " features, got " +
                                  std::to_string(x.item_size()));
    }
    x_ = x;
    const int n = x.n();
    Eigen::Map<const MatX<T>> xm(x.data(), in_, n);
    ConstRowMajorMap<T> wm(w_.data(), out_, in_);
    std::vector<T> logits(static_cast<std::size_t>(n) * out_);
    Eigen::Map<MatX<T>> lm(logits.data(), out_, n);
    lm.noalias() = wm * xm;
    lm.colwise() += Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>(
        b_.data(), out_);
    return logits;
  }

  Tensor4<T> backward(const std::vector<T>& dlogits) {
    const int n = x_.n();
    if (dlogits.size() != static_cast<std::size_t>(n) * out_) {
      throw std::invalid_argument("dense backward size mismatch");
    }
    Eigen::Map<const MatX<T>> dlm(dlogits.data(), out_, n);
    Eigen::Map<const MatX<T>> xm(x_.data(), in_, n);
    RowMajorMap<T> gwm(gw_.data(), out_, in_);
    gwm.noalias() = dlm * xm.transpose();
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>(gb_.data(), out_) =
        dlm.rowwise().sum();

    Tensor4<T> dx(x_.n(), x_.c(), x_.h(), x_.w());
    Eigen::Map<MatX<T>> dxm(dx.data(), in_, n);
    ConstRowMajorMap<T> wm(w_.data(), out_, in_);
    dxm.noalias() = wm.transpose() * dlm;
    return dx;
  }

  void collect_params(const std::string& prefix, std::vector<ParamRef<T>>& out) {
    out.push_back({prefix + ".weight", std::span<T>(w_), std::span<T>(gw_)});
    out.push_back({prefix + ".bias", std::span<T>(b_), std::span<T>(gb_)});
  }

  void init(rng::Stream& stream) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
    for (auto& v : w_) v = static_cast<T>(stream.uniform(-bound, bound));
    for (auto& v : b_) v = static_cast<T>(stream.uniform(-bound, bound));
  }

  int in_features() const { return in_; }
  int out_features() const { return out_; }

 private:
  int in_, out_;
  std::vector<T> w_, b_, gw_, gb_;
  Tensor4<T> x_;
};

}  // namespace semcomm::nn
