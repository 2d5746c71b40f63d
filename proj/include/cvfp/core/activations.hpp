#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "cvfp/core/error.hpp"
#include "cvfp/core/tensor.hpp"

namespace cvfp {

namespace detail {
template <class T>
void check_bias(const ComplexTensor<T>& z, std::span<const T> bias) {
  require(bias.size() == z.shape().channels, ErrorCode::ShapeMismatch,
          "modrelu bias has " + std::to_string(bias.size()) + " entries for " +
              std::to_string(z.shape().channels) + " channels");
}
}  // namespace detail

/// max(|z| - b, 0) * exp(j arg z), one radius b per channel. Exactly zero on |z| <= b.
template <std::floating_point T>
ComplexTensor<T> modrelu(const ComplexTensor<T>& z, std::span<const T> bias) {
  detail::check_bias(z, bias);
  const auto& s = z.shape();
  ComplexTensor<T> out(s);
  const auto zr = z.real_plane();
  const auto zi = z.imag_plane();
  auto yr = out.real_plane();
  auto yi = out.imag_plane();
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      const T radius = bias[c];
      const std::size_t base = s.offset(b, c, 0);
      for (std::size_t l = 0; l < s.length; ++l) {
        const std::size_t i = base + l;
        const T mag = std::sqrt(zr[i] * zr[i] + zi[i] * zi[i]);
        if (mag > radius && mag > T{0}) {
          const T scale = (mag - radius) / mag;
          yr[i] = scale * zr[i];
          yi[i] = scale * zi[i];
        }
      }
    }
  }
  return out;
}

/// Gradients w.r.t. real and imaginary parts of z and w.r.t. each radius. The boundary
/// |z| = b and the origin take the zero subgradient.
template <std::floating_point T>
void modrelu_backward(const ComplexTensor<T>& z, std::span<const T> bias, const ComplexTensor<T>& grad_out,
                      ComplexTensor<T>& grad_z, std::span<T> grad_bias) {
  detail::check_bias(z, bias);
  require(grad_out.shape() == z.shape(), ErrorCode::ShapeMismatch, "modrelu gradient shape");
  require(grad_bias.size() == bias.size(), ErrorCode::ShapeMismatch, "modrelu bias gradient size");
  const auto& s = z.shape();
  grad_z = ComplexTensor<T>(s);
  const auto zr = z.real_plane();
  const auto zi = z.imag_plane();
  const auto gr = grad_out.real_plane();
  const auto gi = grad_out.imag_plane();
  auto dr = grad_z.real_plane();
  auto di = grad_z.imag_plane();
  for (std::size_t c = 0; c < s.channels; ++c) grad_bias[c] = T{0};
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      const T radius = bias[c];
      T bias_acc{0};
      const std::size_t base = s.offset(b, c, 0);
      for (std::size_t l = 0; l < s.length; ++l) {
        const std::size_t i = base + l;
        const T mag = std::sqrt(zr[i] * zr[i] + zi[i] * zi[i]);
        if (!(mag > radius && mag > T{0})) continue;
        const T scale = (mag - radius) / mag;
        const T proj = zr[i] * gr[i] + zi[i] * gi[i];
        const T k = radius / (mag * mag * mag) * proj;
        dr[i] = scale * gr[i] + k * zr[i];
        di[i] = scale * gi[i] + k * zi[i];
        bias_acc -= proj / mag;
      }
      grad_bias[c] += bias_acc;
    }
  }
}

/// max(Re z, 0) + j max(Im z, 0).
template <std::floating_point T>
ComplexTensor<T> crelu(const ComplexTensor<T>& z) {
  ComplexTensor<T> out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    out.real_plane()[i] = std::max(z.real_plane()[i], T{0});
    out.imag_plane()[i] = std::max(z.imag_plane()[i], T{0});
  }
  return out;
}

template <std::floating_point T>
void crelu_backward(const ComplexTensor<T>& z, const ComplexTensor<T>& grad_out, ComplexTensor<T>& grad_z) {
  require(grad_out.shape() == z.shape(), ErrorCode::ShapeMismatch, "crelu gradient shape");
  grad_z = ComplexTensor<T>(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    grad_z.real_plane()[i] = z.real_plane()[i] > T{0} ? grad_out.real_plane()[i] : T{0};
    grad_z.imag_plane()[i] = z.imag_plane()[i] > T{0} ? grad_out.imag_plane()[i] : T{0};
  }
}

template <std::floating_point T>
void relu_inplace(RealTensor<T>& x) {
  for (auto& v : x.data()) v = std::max(v, T{0});
}

/// Zeroes grad wherever the pre-activation was not positive.
template <std::floating_point T>
void relu_backward_inplace(const RealTensor<T>& pre, RealTensor<T>& grad) {
  require(pre.shape() == grad.shape(), ErrorCode::ShapeMismatch, "relu gradient shape");
  for (std::size_t i = 0; i < pre.size(); ++i)
    if (!(pre.data()[i] > T{0})) grad.data()[i] = T{0};
}

/// Re(z)^2 + Im(z)^2, the complex-to-real boundary.
template <std::floating_point T>
RealTensor<T> squared_modulus(const ComplexTensor<T>& z) {
  RealTensor<T> out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const T r = z.real_plane()[i];
    const T m = z.imag_plane()[i];
    out.data()[i] = r * r + m * m;
  }
  return out;
}

template <std::floating_point T>
ComplexTensor<T> squared_modulus_backward(const ComplexTensor<T>& z, const RealTensor<T>& grad_out) {
  require(grad_out.shape() == z.shape(), ErrorCode::ShapeMismatch, "squared modulus gradient shape");
  ComplexTensor<T> grad(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    grad.real_plane()[i] = T{2} * z.real_plane()[i] * grad_out.data()[i];
    grad.imag_plane()[i] = T{2} * z.imag_plane()[i] * grad_out.data()[i];
  }
  return grad;
}

/// Mean over the length dimension; result has length 1.
template <std::floating_point T>
RealTensor<T> temporal_average(const RealTensor<T>& x) {
  const auto& s = x.shape();
  RealTensor<T> out(Shape3{s.batch, s.channels, 1});
  const T inv = T{1} / static_cast<T>(s.length);
  for (std::size_t b = 0; b < s.batch; ++b) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      T acc{0};
      for (std::size_t l = 0; l < s.length; ++l) acc += x(b, c, l);
      out(b, c, 0) = acc * inv;
    }
  }
  return out;
}

template <std::floating_point T>
RealTensor<T> temporal_average_backward(const Shape3& input_shape, const RealTensor<T>& grad_out) {
  require(grad_out.shape() == (Shape3{input_shape.batch, input_shape.channels, 1}), ErrorCode::ShapeMismatch,
          "temporal average gradient shape");
  RealTensor<T> grad(input_shape);
  const T inv = T{1} / static_cast<T>(input_shape.length);
  for (std::size_t b = 0; b < input_shape.batch; ++b)
    for (std::size_t c = 0; c < input_shape.channels; ++c) {
      const T g = grad_out(b, c, 0) * inv;
      for (std::size_t l = 0; l < input_shape.length; ++l) grad(b, c, l) = g;
    }
  return grad;
}

}  // namespace cvfp
