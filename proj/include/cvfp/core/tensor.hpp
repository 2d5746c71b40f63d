#pragma once

#include <complex>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cvfp/core/error.hpp"

namespace cvfp {

/// (batch, channels, length), row-major with length fastest.
struct Shape3 {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t length = 0;

  constexpr std::size_t size() const { return batch * channels * length; }
  constexpr std::size_t offset(std::size_t b, std::size_t c, std::size_t l) const {
    return (b * channels + c) * length + l;
  }
  friend constexpr bool operator==(const Shape3&, const Shape3&) = default;
};

inline std::string to_string(const Shape3& s) {
  return "(" + std::to_string(s.batch) + ", " + std::to_string(s.channels) + ", " +
         std::to_string(s.length) + ")";
}

namespace detail {
inline void check_positive(const Shape3& s) {
  require(s.batch > 0 && s.channels > 0 && s.length > 0, ErrorCode::ShapeMismatch,
          "tensor dimensions must be positive, got " + to_string(s));
}
}  // namespace detail

template <std::floating_point T>
class RealTensor {
 public:
  using value_type = T;

  RealTensor() = default;
  explicit RealTensor(Shape3 shape, T fill = T{0}) : shape_(shape) {
    detail::check_positive(shape_);
    values_.assign(shape_.size(), fill);
  }

  const Shape3& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& operator()(std::size_t b, std::size_t c, std::size_t l) { return values_[shape_.offset(b, c, l)]; }
  T operator()(std::size_t b, std::size_t c, std::size_t l) const {
    return values_[shape_.offset(b, c, l)];
  }

  std::span<T> data() { return values_; }
  std::span<const T> data() const { return values_; }

  /// All channels*length values of one batch element.
  std::span<const T> sample(std::size_t b) const {
    return std::span<const T>(values_).subspan(b * shape_.channels * shape_.length,
                                               shape_.channels * shape_.length);
  }

 private:
  Shape3 shape_{};
  std::vector<T> values_;
};

/// Complex activations kept as two planes of identical shape.
template <std::floating_point T>
class ComplexTensor {
 public:
  using value_type = T;

  ComplexTensor() = default;
  explicit ComplexTensor(Shape3 shape) : shape_(shape) {
    detail::check_positive(shape_);
    re_.assign(shape_.size(), T{0});
    im_.assign(shape_.size(), T{0});
  }

  const Shape3& shape() const { return shape_; }
  std::size_t size() const { return re_.size(); }
  bool empty() const { return re_.empty(); }

  T& re(std::size_t b, std::size_t c, std::size_t l) { return re_[shape_.offset(b, c, l)]; }
  T& im(std::size_t b, std::size_t c, std::size_t l) { return im_[shape_.offset(b, c, l)]; }
  T re(std::size_t b, std::size_t c, std::size_t l) const { return re_[shape_.offset(b, c, l)]; }
  T im(std::size_t b, std::size_t c, std::size_t l) const { return im_[shape_.offset(b, c, l)]; }

  std::complex<T> at(std::size_t b, std::size_t c, std::size_t l) const {
    const auto i = shape_.offset(b, c, l);
    return {re_[i], im_[i]};
  }
  void set(std::size_t b, std::size_t c, std::size_t l, std::complex<T> z) {
    const auto i = shape_.offset(b, c, l);
    re_[i] = z.real();
    im_[i] = z.imag();
  }

  std::span<T> real_plane() { return re_; }
  std::span<T> imag_plane() { return im_; }
  std::span<const T> real_plane() const { return re_; }
  std::span<const T> imag_plane() const { return im_; }

 private:
  Shape3 shape_{};
  std::vector<T> re_;
  std::vector<T> im_;
};

template <std::floating_point U, std::floating_point T>
ComplexTensor<U> tensor_cast(const ComplexTensor<T>& x) {
  ComplexTensor<U> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.real_plane()[i] = static_cast<U>(x.real_plane()[i]);
    out.imag_plane()[i] = static_cast<U>(x.imag_plane()[i]);
  }
  return out;
}

}  // namespace cvfp
