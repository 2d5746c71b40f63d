#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Core>

#include "cvfp/core/architecture.hpp"
#include "cvfp/core/error.hpp"
#include "cvfp/core/tensor.hpp"

namespace cvfp {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;
template <class T>
using RowMatrixMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Geometry of one 1D convolution over a (batch, channels, length) input.
struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_channels = 0;
  std::size_t in_length = 0;
  std::size_t filters = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;

  std::size_t out_length() const { return conv_output_length(in_length, kernel, stride); }
  std::size_t patch() const { return in_channels * kernel; }
  std::size_t columns() const { return batch * out_length(); }
  std::size_t weight_count() const { return filters * in_channels * kernel; }
};

namespace detail {

inline ConvGeometry make_geometry(const Shape3& in, std::size_t filters, std::size_t kernel, std::size_t stride) {
  require(stride >= 1, ErrorCode::InvalidArgument, "stride must be >= 1");
  require(kernel >= 1 && filters >= 1, ErrorCode::InvalidArgument, "kernel and filters must be >= 1");
  require(kernel <= in.length, ErrorCode::ShapeMismatch,
          "kernel " + std::to_string(kernel) + " exceeds input length " + std::to_string(in.length));
  return {in.batch, in.channels, in.length, filters, kernel, stride};
}

/// Writes patches of one plane into rows [row0, row0 + patch) of cols, one column per output position.
template <class T>
void im2col(std::span<const T> plane, const ConvGeometry& g, Matrix<T>& cols, Eigen::Index row0) {
  const std::size_t lout = g.out_length();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < lout; ++o) {
      T* col = cols.data() + (b * lout + o) * cols.rows() + row0;
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        const T* src = plane.data() + (b * g.in_channels + c) * g.in_length + o * g.stride;
        for (std::size_t k = 0; k < g.kernel; ++k) *col++ = src[k];
      }
    }
  }
}

template <class T>
void col2im_add(const Matrix<T>& cols, Eigen::Index row0, const ConvGeometry& g, std::span<T> plane) {
  const std::size_t lout = g.out_length();
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t o = 0; o < lout; ++o) {
      const T* col = cols.data() + (b * lout + o) * cols.rows() + row0;
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        T* dst = plane.data() + (b * g.in_channels + c) * g.in_length + o * g.stride;
        for (std::size_t k = 0; k < g.kernel; ++k) dst[k] += *col++;
      }
    }
  }
}

/// Rows [row0, row0 + filters) of a (rows x batch*lout) product into a (batch, filters, lout) plane.
template <class T>
void scatter_rows(const Matrix<T>& y, Eigen::Index row0, const ConvGeometry& g, std::span<T> plane) {
  const std::size_t lout = g.out_length();
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t o = 0; o < lout; ++o) {
      const T* col = y.data() + (b * lout + o) * y.rows() + row0;
      for (std::size_t f = 0; f < g.filters; ++f) plane[(b * g.filters + f) * lout + o] = col[f];
    }
}

template <class T>
void gather_rows(std::span<const T> plane, const ConvGeometry& g, Matrix<T>& y, Eigen::Index row0) {
  const std::size_t lout = g.out_length();
  for (std::size_t b = 0; b < g.batch; ++b)
    for (std::size_t o = 0; o < lout; ++o) {
      T* col = y.data() + (b * lout + o) * y.rows() + row0;
      for (std::size_t f = 0; f < g.filters; ++f) col[f] = plane[(b * g.filters + f) * lout + o];
    }
}

/// [Wr -Wi; Wi Wr], so one real product yields both output planes.
template <class T>
Matrix<T> stacked_complex_weights(std::span<const T> w_re, std::span<const T> w_im, const ConvGeometry& g) {
  const auto f = static_cast<Eigen::Index>(g.filters);
  const auto p = static_cast<Eigen::Index>(g.patch());
  RowMatrixMap<T> wr(w_re.data(), f, p);
  RowMatrixMap<T> wi(w_im.data(), f, p);
  Matrix<T> m(2 * f, 2 * p);
  m.topLeftCorner(f, p) = wr;
  m.topRightCorner(f, p) = -wi;
  m.bottomLeftCorner(f, p) = wi;
  m.bottomRightCorner(f, p) = wr;
  return m;
}

}  // namespace detail

/// Complex valid-mode convolution (cross-correlation), no bias. Weights are (filters, in_channels,
/// kernel) planes. Output length is floor((L - K) / S) + 1.
template <std::floating_point T>
ComplexTensor<T> complex_conv1d(const ComplexTensor<T>& x, std::span<const T> w_re, std::span<const T> w_im,
                                std::size_t filters, std::size_t kernel, std::size_t stride) {
  const auto g = detail::make_geometry(x.shape(), filters, kernel, stride);
  require(w_re.size() == g.weight_count() && w_im.size() == g.weight_count(), ErrorCode::ShapeMismatch,
          "complex weight planes must hold filters*in_channels*kernel values");
  const auto p = static_cast<Eigen::Index>(g.patch());
  Matrix<T> cols(2 * p, static_cast<Eigen::Index>(g.columns()));
  detail::im2col(x.real_plane(), g, cols, 0);
  detail::im2col(x.imag_plane(), g, cols, p);
  const Matrix<T> y = detail::stacked_complex_weights(w_re, w_im, g) * cols;
  ComplexTensor<T> out(Shape3{g.batch, g.filters, g.out_length()});
  detail::scatter_rows(y, 0, g, out.real_plane());
  detail::scatter_rows(y, static_cast<Eigen::Index>(g.filters), g, out.imag_plane());
  return out;
}

/// Given dC/dRe(y) and dC/dIm(y), writes dC/dRe(w), dC/dIm(w) and, when requested, dC/dx.
template <std::floating_point T>
void complex_conv1d_backward(const ComplexTensor<T>& x, std::span<const T> w_re, std::span<const T> w_im,
                             std::size_t filters, std::size_t kernel, std::size_t stride,
                             const ComplexTensor<T>& grad_out, std::span<T> grad_w_re, std::span<T> grad_w_im,
                             ComplexTensor<T>* grad_x) {
  const auto g = detail::make_geometry(x.shape(), filters, kernel, stride);
  require(grad_out.shape() == (Shape3{g.batch, g.filters, g.out_length()}), ErrorCode::ShapeMismatch,
          "complex conv gradient shape");
  require(grad_w_re.size() == g.weight_count() && grad_w_im.size() == g.weight_count(), ErrorCode::ShapeMismatch,
          "complex conv weight gradient size");
  const auto f = static_cast<Eigen::Index>(g.filters);
  const auto p = static_cast<Eigen::Index>(g.patch());
  const auto n = static_cast<Eigen::Index>(g.columns());

  Matrix<T> cols(2 * p, n);
  detail::im2col(x.real_plane(), g, cols, 0);
  detail::im2col(x.imag_plane(), g, cols, p);
  Matrix<T> gy(2 * f, n);
  detail::gather_rows(grad_out.real_plane(), g, gy, 0);
  detail::gather_rows(grad_out.imag_plane(), g, gy, f);

  const Matrix<T> gm = gy * cols.transpose();
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gwr(grad_w_re.data(), f, p);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gwi(grad_w_im.data(), f, p);
  gwr = gm.topLeftCorner(f, p) + gm.bottomRightCorner(f, p);
  gwi = gm.bottomLeftCorner(f, p) - gm.topRightCorner(f, p);

  if (grad_x) {
    const Matrix<T> gcols = detail::stacked_complex_weights(w_re, w_im, g).transpose() * gy;
    *grad_x = ComplexTensor<T>(x.shape());
    detail::col2im_add(gcols, 0, g, grad_x->real_plane());
    detail::col2im_add(gcols, p, g, grad_x->imag_plane());
  }
}

/// Real valid-mode convolution with per-filter bias (activation applied by the caller).
template <std::floating_point T>
RealTensor<T> real_conv1d(const RealTensor<T>& x, std::span<const T> weights, std::span<const T> bias,
                          std::size_t filters, std::size_t kernel, std::size_t stride) {
  const auto g = detail::make_geometry(x.shape(), filters, kernel, stride);
  require(weights.size() == g.weight_count() && bias.size() == filters, ErrorCode::ShapeMismatch,
          "real conv parameter size");
  const auto f = static_cast<Eigen::Index>(g.filters);
  const auto p = static_cast<Eigen::Index>(g.patch());
  Matrix<T> cols(p, static_cast<Eigen::Index>(g.columns()));
  detail::im2col(x.data(), g, cols, 0);
  Matrix<T> y = RowMatrixMap<T>(weights.data(), f, p) * cols;
  y.colwise() += Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>>(bias.data(), f);
  RealTensor<T> out(Shape3{g.batch, g.filters, g.out_length()});
  detail::scatter_rows(y, 0, g, out.data());
  return out;
}

template <std::floating_point T>
void real_conv1d_backward(const RealTensor<T>& x, std::span<const T> weights, std::size_t filters,
                          std::size_t kernel, std::size_t stride, const RealTensor<T>& grad_out,
                          std::span<T> grad_w, std::span<T> grad_b, RealTensor<T>* grad_x) {
  const auto g = detail::make_geometry(x.shape(), filters, kernel, stride);
  require(grad_out.shape() == (Shape3{g.batch, g.filters, g.out_length()}), ErrorCode::ShapeMismatch,
          "real conv gradient shape");
  const auto f = static_cast<Eigen::Index>(g.filters);
  const auto p = static_cast<Eigen::Index>(g.patch());
  const auto n = static_cast<Eigen::Index>(g.columns());
  Matrix<T> cols(p, n);
  detail::im2col(x.data(), g, cols, 0);
  Matrix<T> gy(f, n);
  detail::gather_rows(grad_out.data(), g, gy, 0);

  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(grad_w.data(), f, p);
  gw = gy * cols.transpose();
  Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>>(grad_b.data(), f) = gy.rowwise().sum();
  if (grad_x) {
    const Matrix<T> gcols = RowMatrixMap<T>(weights.data(), f, p).transpose() * gy;
    *grad_x = RealTensor<T>(x.shape());
    detail::col2im_add(gcols, 0, g, grad_x->data());
  }
}

/// y = W x + b over flattened features; W is (out, in) row-major.
template <std::floating_point T>
RealTensor<T> dense(const RealTensor<T>& x, std::span<const T> weights, std::span<const T> bias, std::size_t out) {
  const auto in = static_cast<Eigen::Index>(x.shape().channels * x.shape().length);
  const auto batch = static_cast<Eigen::Index>(x.shape().batch);
  require(weights.size() == out * static_cast<std::size_t>(in) && bias.size() == out, ErrorCode::ShapeMismatch,
          "dense parameter size");
  RealTensor<T> y(Shape3{x.shape().batch, out, 1});
  Eigen::Map<const Matrix<T>> xm(x.data().data(), in, batch);
  Eigen::Map<Matrix<T>> ym(y.data().data(), static_cast<Eigen::Index>(out), batch);
  ym.noalias() = RowMatrixMap<T>(weights.data(), static_cast<Eigen::Index>(out), in) * xm;
  ym.colwise() += Eigen::Map<const Eigen::Vector<T, Eigen::Dynamic>>(bias.data(), static_cast<Eigen::Index>(out));
  return y;
}

template <std::floating_point T>
void dense_backward(const RealTensor<T>& x, std::span<const T> weights, std::size_t out,
                    const RealTensor<T>& grad_out, std::span<T> grad_w, std::span<T> grad_b,
                    RealTensor<T>* grad_x) {
  const auto in = static_cast<Eigen::Index>(x.shape().channels * x.shape().length);
  const auto batch = static_cast<Eigen::Index>(x.shape().batch);
  const auto o = static_cast<Eigen::Index>(out);
  require(grad_out.shape() == (Shape3{x.shape().batch, out, 1}), ErrorCode::ShapeMismatch, "dense gradient shape");
  Eigen::Map<const Matrix<T>> xm(x.data().data(), in, batch);
  Eigen::Map<const Matrix<T>> gm(grad_out.data().data(), o, batch);
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(grad_w.data(), o, in);
  gw.noalias() = gm * xm.transpose();
  Eigen::Map<Eigen::Vector<T, Eigen::Dynamic>>(grad_b.data(), o) = gm.rowwise().sum();
  if (grad_x) {
    *grad_x = RealTensor<T>(x.shape());
    Eigen::Map<Matrix<T>> gx(grad_x->data().data(), in, batch);
    gx.noalias() = RowMatrixMap<T>(weights.data(), o, in).transpose() * gm;
  }
}

}  // namespace cvfp
