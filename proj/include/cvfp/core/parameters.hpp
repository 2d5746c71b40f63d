#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cvfp/core/architecture.hpp"
#include "cvfp/core/error.hpp"

namespace cvfp {

/// One named array. Complex arrays hold the real plane followed by the imaginary plane.
template <std::floating_point T>
struct ParamArray {
  std::string name;
  std::vector<std::size_t> shape;
  bool is_complex = false;
  /// Participates in l2 regularization (weights yes, biases and ModReLU radii no).
  bool decay = true;
  std::vector<T> values;

  std::size_t elements() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
  std::span<T> real_plane() { return std::span<T>(values).first(elements()); }
  std::span<const T> real_plane() const { return std::span<const T>(values).first(elements()); }
  std::span<T> imag_plane() { return std::span<T>(values).subspan(elements(), elements()); }
  std::span<const T> imag_plane() const { return std::span<const T>(values).subspan(elements(), elements()); }
};

template <std::floating_point T>
struct LayerParams {
  std::vector<ParamArray<T>> arrays;

  ParamArray<T>& at(std::string_view name) {
    for (auto& a : arrays)
      if (a.name == name) return a;
    throw Error(ErrorCode::ParameterMismatch, "no parameter array '" + std::string(name) + "'");
  }
  const ParamArray<T>& at(std::string_view name) const { return const_cast<LayerParams*>(this)->at(name); }
  bool has(std::string_view name) const {
    for (const auto& a : arrays)
      if (a.name == name) return true;
    return false;
  }
};

namespace detail {
inline std::uint64_t next_parameter_uid() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}
}  // namespace detail

/// Every learnable real scalar of a network, grouped per layer in declaration order.
///
/// `uid` identifies the set and `revision` increases on every in-place update, so a forward
/// cache can detect that it no longer matches the parameters it was built from.
template <std::floating_point T>
class ParameterSet {
 public:
  std::vector<LayerParams<T>> layers;

  ParameterSet() : uid_(detail::next_parameter_uid()) {}
  ParameterSet(const ParameterSet& o) : layers(o.layers), uid_(detail::next_parameter_uid()) {}
  ParameterSet& operator=(const ParameterSet& o) {
    layers = o.layers;
    uid_ = detail::next_parameter_uid();
    revision_ = 0;
    return *this;
  }
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  std::uint64_t uid() const { return uid_; }
  std::uint64_t revision() const { return revision_; }
  /// Call after mutating values in place.
  void touch() { ++revision_; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& l : layers)
      for (const auto& a : l.arrays) n += a.values.size();
    return n;
  }

  template <class F>
  void for_each_array(F&& f) {
    for (std::size_t i = 0; i < layers.size(); ++i)
      for (auto& a : layers[i].arrays) f(i, a);
  }
  template <class F>
  void for_each_array(F&& f) const {
    for (std::size_t i = 0; i < layers.size(); ++i)
      for (const auto& a : layers[i].arrays) f(i, a);
  }

  /// Same structure and names, values converted.
  template <std::floating_point U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    out.layers.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i)
      for (const auto& a : layers[i].arrays)
        out.layers[i].arrays.push_back(
            {a.name, a.shape, a.is_complex, a.decay, std::vector<U>(a.values.begin(), a.values.end())});
    return out;
  }

  ParameterSet zeros_like() const {
    ParameterSet out;
    out.layers = layers;
    out.for_each_array([](std::size_t, ParamArray<T>& a) { std::fill(a.values.begin(), a.values.end(), T{0}); });
    return out;
  }

 private:
  std::uint64_t uid_;
  std::uint64_t revision_ = 0;
};

/// Zero-valued parameters with the layout implied by the architecture.
template <std::floating_point T>
ParameterSet<T> make_parameters(const NetworkSpec& net) {
  const auto shapes = infer_shapes(net);
  ParameterSet<T> params;
  params.layers.resize(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const std::size_t in_ch = shapes[i].channels;
    auto& arrays = params.layers[i].arrays;
    auto add = [&](std::string name, std::vector<std::size_t> shape, bool is_complex, bool decay) {
      ParamArray<T> a{std::move(name), std::move(shape), is_complex, decay, {}};
      a.values.assign(a.elements() * (is_complex ? 2 : 1), T{0});
      arrays.push_back(std::move(a));
    };
    const auto& layer = net.layers[i];
    if (const auto* c = std::get_if<ComplexConv1D>(&layer)) {
      add("weight", {c->filters, in_ch, c->kernel}, true, true);
      if (c->activation == Activation::ModReLU) add("modrelu_bias", {c->filters}, false, false);
    } else if (const auto* r = std::get_if<RealConv1D>(&layer)) {
      add("weight", {r->filters, in_ch, r->kernel}, false, true);
      add("bias", {r->filters}, false, false);
    } else if (const auto* d = std::get_if<RealDense>(&layer)) {
      add("weight", {d->units, in_ch}, false, true);
      add("bias", {d->units}, false, false);
    } else if (const auto* o = std::get_if<OutputDense>(&layer)) {
      add("weight", {o->classes, in_ch}, false, true);
      add("bias", {o->classes}, false, false);
    }
  }
  return params;
}

/// Complex weights: Rayleigh magnitude with sigma = 1/sqrt(fan_in), uniform phase, so each layer
/// keeps E|z|^2 of its input.
/// Real weights: Glorot uniform. Biases and ModReLU radii start at zero.
template <std::floating_point T, class Rng>
ParameterSet<T> initialize_parameters(const NetworkSpec& net, Rng& rng) {
  auto params = make_parameters<T>(net);
  const auto shapes = infer_shapes(net);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const std::size_t in_ch = shapes[i].channels;
    const auto& layer = net.layers[i];
    auto& weight_holder = params.layers[i];
    if (weight_holder.arrays.empty()) continue;
    auto& w = weight_holder.at("weight");
    if (const auto* c = std::get_if<ComplexConv1D>(&layer)) {
      const double fan_in = static_cast<double>(in_ch * c->kernel);
      const double sigma = 1.0 / std::sqrt(fan_in);
      auto re = w.real_plane();
      auto im = w.imag_plane();
      for (std::size_t k = 0; k < re.size(); ++k) {
        const double u = std::max(unit(rng), 1e-300);
        const double mag = sigma * std::sqrt(-2.0 * std::log(u));
        const double phase = 2.0 * std::numbers::pi * unit(rng) - std::numbers::pi;
        re[k] = static_cast<T>(mag * std::cos(phase));
        im[k] = static_cast<T>(mag * std::sin(phase));
      }
    } else {
      double fan_in = static_cast<double>(in_ch);
      double fan_out = 0.0;
      if (const auto* r = std::get_if<RealConv1D>(&layer)) {
        fan_in *= static_cast<double>(r->kernel);
        fan_out = static_cast<double>(r->filters * r->kernel);
      } else {
        fan_out = static_cast<double>(w.shape[0]);
      }
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : w.values) v = static_cast<T>(limit * (2.0 * unit(rng) - 1.0));
    }
  }
  return params;
}

}  // namespace cvfp
