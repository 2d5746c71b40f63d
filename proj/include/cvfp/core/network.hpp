#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cvfp/core/activations.hpp"
#include "cvfp/core/architecture.hpp"
#include "cvfp/core/conv.hpp"
#include "cvfp/core/error.hpp"
#include "cvfp/core/parameters.hpp"
#include "cvfp/core/tensor.hpp"

namespace cvfp {

template <std::floating_point T>
using ActivationTensor = std::variant<ComplexTensor<T>, RealTensor<T>>;

template <std::floating_point T>
struct LayerCache {
  ActivationTensor<T> input;
  /// Output before the nonlinearity, for layers that have one.
  ActivationTensor<T> pre;
};

template <std::floating_point T>
struct ForwardCache {
  std::vector<LayerCache<T>> layers;
  std::uint64_t params_uid = 0;
  std::uint64_t params_revision = 0;
  std::string architecture;
  Shape3 input_shape{};
  /// Layers evaluated; a full forward covers all of them.
  std::size_t depth = 0;
  /// Whether the last evaluated layer's nonlinearity was applied.
  bool last_activated = true;
};

template <std::floating_point T>
struct ForwardResult {
  RealTensor<T> scores;
  ForwardCache<T> cache;
};

namespace detail {

inline void check_params(const NetworkSpec& net, std::size_t layer_count_in_params, std::size_t scalars) {
  require(layer_count_in_params == net.layers.size(), ErrorCode::ParameterMismatch,
          "parameter set has " + std::to_string(layer_count_in_params) + " layers, network has " +
              std::to_string(net.layers.size()));
  require(scalars == count_parameters(net), ErrorCode::ParameterMismatch,
          "parameter set holds " + std::to_string(scalars) + " scalars, network needs " +
              std::to_string(count_parameters(net)));
}

template <class T>
RealTensor<T> to_real_channels(const ComplexTensor<T>& x) {
  const auto& s = x.shape();
  RealTensor<T> out(Shape3{s.batch, 2 * s.channels, s.length});
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t c = 0; c < s.channels; ++c)
      for (std::size_t l = 0; l < s.length; ++l) {
        out(b, c, l) = x.re(b, c, l);
        out(b, s.channels + c, l) = x.im(b, c, l);
      }
  return out;
}

template <class T>
ComplexTensor<T> from_real_channels(const RealTensor<T>& g, std::size_t complex_channels) {
  const auto& s = g.shape();
  ComplexTensor<T> out(Shape3{s.batch, complex_channels, s.length});
  for (std::size_t b = 0; b < s.batch; ++b)
    for (std::size_t c = 0; c < complex_channels; ++c)
      for (std::size_t l = 0; l < s.length; ++l) {
        out.re(b, c, l) = g(b, c, l);
        out.im(b, c, l) = g(b, complex_channels + c, l);
      }
  return out;
}

template <class T>
const ComplexTensor<T>& as_complex(const ActivationTensor<T>& a, std::size_t layer) {
  const auto* p = std::get_if<ComplexTensor<T>>(&a);
  require(p != nullptr, ErrorCode::StaleCache, "layer " + std::to_string(layer) + " expected a complex activation");
  return *p;
}

template <class T>
const RealTensor<T>& as_real(const ActivationTensor<T>& a, std::size_t layer) {
  const auto* p = std::get_if<RealTensor<T>>(&a);
  require(p != nullptr, ErrorCode::StaleCache, "layer " + std::to_string(layer) + " expected a real activation");
  return *p;
}

template <class T>
ActivationTensor<T> layer_forward(const LayerSpec& spec, const LayerParams<T>& p, const ActivationTensor<T>& in,
                                  std::size_t index, LayerCache<T>* cache, bool activate) {
  return std::visit(
      [&](const auto& l) -> ActivationTensor<T> {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ComplexConv1D>) {
          const auto& x = as_complex(in, index);
          const auto& w = p.at("weight");
          auto z = complex_conv1d<T>(x, w.real_plane(), w.imag_plane(), l.filters, l.kernel, l.stride);
          ActivationTensor<T> out;
          if (!activate || l.activation == Activation::None) {
            out = z;
          } else if (l.activation == Activation::ModReLU) {
            out = modrelu<T>(z, p.at("modrelu_bias").real_plane());
          } else {
            out = crelu<T>(z);
          }
          if (cache) cache->pre = std::move(z);
          return out;
        } else if constexpr (std::is_same_v<L, SquaredModulus>) {
          return squared_modulus<T>(as_complex(in, index));
        } else if constexpr (std::is_same_v<L, TemporalAverage>) {
          return temporal_average<T>(as_real(in, index));
        } else if constexpr (std::is_same_v<L, RealConv1D>) {
          const auto& w = p.at("weight");
          auto y = real_conv1d<T>(as_real(in, index), w.real_plane(), p.at("bias").real_plane(), l.filters,
                                  l.kernel, l.stride);
          RealTensor<T> out = y;
          if (activate) relu_inplace(out);
          if (cache) cache->pre = std::move(y);
          return out;
        } else if constexpr (std::is_same_v<L, RealDense>) {
          auto y = dense<T>(as_real(in, index), p.at("weight").real_plane(), p.at("bias").real_plane(), l.units);
          RealTensor<T> out = y;
          if (activate) relu_inplace(out);
          if (cache) cache->pre = std::move(y);
          return out;
        } else {
          return dense<T>(as_real(in, index), p.at("weight").real_plane(), p.at("bias").real_plane(), l.classes);
        }
      },
      spec);
}

/// Returns the gradient w.r.t. the layer input (empty when !need_input_grad).
template <class T>
ActivationTensor<T> layer_backward(const LayerSpec& spec, const LayerParams<T>& p, const LayerCache<T>& cache,
                                   ActivationTensor<T> grad, std::size_t index, LayerParams<T>& g,
                                   bool through_activation, bool need_input_grad) {
  return std::visit(
      [&](const auto& l) -> ActivationTensor<T> {
        using L = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<L, ComplexConv1D>) {
          const auto& x = as_complex(cache.input, index);
          const auto& z = as_complex(cache.pre, index);
          ComplexTensor<T> gz = std::get<ComplexTensor<T>>(std::move(grad));
          if (through_activation && l.activation == Activation::ModReLU) {
            ComplexTensor<T> tmp;
            modrelu_backward<T>(z, p.at("modrelu_bias").real_plane(), gz, tmp, g.at("modrelu_bias").real_plane());
            gz = std::move(tmp);
          } else if (through_activation && l.activation == Activation::CReLU) {
            ComplexTensor<T> tmp;
            crelu_backward<T>(z, gz, tmp);
            gz = std::move(tmp);
          }
          const auto& w = p.at("weight");
          auto& gw = g.at("weight");
          ComplexTensor<T> gx;
          complex_conv1d_backward<T>(x, w.real_plane(), w.imag_plane(), l.filters, l.kernel, l.stride, gz,
                                     gw.real_plane(), gw.imag_plane(), need_input_grad ? &gx : nullptr);
          return gx;
        } else if constexpr (std::is_same_v<L, SquaredModulus>) {
          return squared_modulus_backward<T>(as_complex(cache.input, index), std::get<RealTensor<T>>(grad));
        } else if constexpr (std::is_same_v<L, TemporalAverage>) {
          return temporal_average_backward<T>(as_real(cache.input, index).shape(), std::get<RealTensor<T>>(grad));
        } else if constexpr (std::is_same_v<L, RealConv1D>) {
          RealTensor<T> gy = std::get<RealTensor<T>>(std::move(grad));
          if (through_activation) relu_backward_inplace(as_real(cache.pre, index), gy);
          RealTensor<T> gx;
          real_conv1d_backward<T>(as_real(cache.input, index), p.at("weight").real_plane(), l.filters, l.kernel,
                                  l.stride, gy, g.at("weight").real_plane(), g.at("bias").real_plane(),
                                  need_input_grad ? &gx : nullptr);
          return gx;
        } else {
          RealTensor<T> gy = std::get<RealTensor<T>>(std::move(grad));
          std::size_t out = 0;
          if constexpr (std::is_same_v<L, RealDense>) {
            if (through_activation) relu_backward_inplace(as_real(cache.pre, index), gy);
            out = l.units;
          } else {
            out = l.classes;
          }
          RealTensor<T> gx;
          dense_backward<T>(as_real(cache.input, index), p.at("weight").real_plane(), out, gy,
                            g.at("weight").real_plane(), g.at("bias").real_plane(), need_input_grad ? &gx : nullptr);
          return gx;
        }
      },
      spec);
}

}  // namespace detail

/// Evaluates layers [0, depth). The last evaluated layer skips its nonlinearity when
/// activate_last is false. Used directly for filter visualization.
template <std::floating_point T>
std::pair<ActivationTensor<T>, ForwardCache<T>> forward_prefix(const NetworkSpec& net, const ParameterSet<T>& params,
                                                               const ComplexTensor<T>& batch, std::size_t depth,
                                                               bool activate_last = true, bool keep_cache = true) {
  const auto shapes = infer_shapes(net);
  detail::check_params(net, params.layers.size(), params.scalar_count());
  require(depth >= 1 && depth <= net.layers.size(), ErrorCode::InvalidArgument, "forward depth out of range");
  require(batch.shape().length == net.input_length && batch.shape().channels == net.input_channels,
          ErrorCode::ShapeMismatch,
          "batch " + to_string(batch.shape()) + " does not match network input (" +
              std::to_string(net.input_channels) + " channels, length " + std::to_string(net.input_length) + ")");

  ForwardCache<T> cache;
  cache.params_uid = params.uid();
  cache.params_revision = params.revision();
  cache.architecture = describe(net);
  cache.input_shape = batch.shape();
  cache.depth = depth;
  cache.last_activated = activate_last;
  if (keep_cache) cache.layers.resize(depth);

  ActivationTensor<T> act;
  if (net.mode == NetworkMode::Real2Ch) {
    act = detail::to_real_channels(batch);
  } else {
    act = batch;
  }
  for (std::size_t i = 0; i < depth; ++i) {
    LayerCache<T>* lc = keep_cache ? &cache.layers[i] : nullptr;
    const bool activate = activate_last || i + 1 < depth;
    auto next = detail::layer_forward(net.layers[i], params.layers[i], act, i, lc, activate);
    if (lc) lc->input = std::move(act);
    act = std::move(next);
  }
  return {std::move(act), std::move(cache)};
}

/// Class scores of shape (batch, classes, 1) plus everything backward needs.
template <std::floating_point T>
ForwardResult<T> forward(const NetworkSpec& net, const ParameterSet<T>& params, const ComplexTensor<T>& batch,
                         bool keep_cache = true) {
  auto [out, cache] = forward_prefix(net, params, batch, net.layers.size(), true, keep_cache);
  return {std::get<RealTensor<T>>(std::move(out)), std::move(cache)};
}

template <std::floating_point T>
RealTensor<T> predict(const NetworkSpec& net, const ParameterSet<T>& params, const ComplexTensor<T>& batch) {
  return forward(net, params, batch, false).scores;
}

template <std::floating_point T>
struct BackwardResult {
  ParameterSet<T> grads;
  /// dC/dRe(x), dC/dIm(x) of the network input, when requested.
  std::optional<ComplexTensor<T>> input_grad;
};

/// Backpropagates from the output of the cached prefix. `grad_out` must match that output.
template <std::floating_point T>
BackwardResult<T> backward_prefix(const NetworkSpec& net, const ParameterSet<T>& params, const ForwardCache<T>& cache,
                                  ActivationTensor<T> grad_out, bool want_input_grad) {
  detail::check_params(net, params.layers.size(), params.scalar_count());
  require(cache.layers.size() == cache.depth && cache.depth >= 1, ErrorCode::StaleCache,
          "cache was built without intermediate activations");
  require(cache.depth <= net.layers.size() && cache.architecture == describe(net), ErrorCode::StaleCache,
          "cache belongs to a different architecture");
  require(cache.params_uid == params.uid() && cache.params_revision == params.revision(), ErrorCode::StaleCache,
          "parameters changed since the forward pass");

  BackwardResult<T> result{params.zeros_like(), std::nullopt};
  ActivationTensor<T> grad = std::move(grad_out);
  for (std::size_t i = cache.depth; i-- > 0;) {
    const bool through_activation = cache.last_activated || i + 1 < cache.depth;
    const bool need_input = i > 0 || want_input_grad;
    grad = detail::layer_backward(net.layers[i], params.layers[i], cache.layers[i], std::move(grad), i,
                                  result.grads.layers[i], through_activation, need_input);
  }
  if (want_input_grad) {
    if (net.mode == NetworkMode::Real2Ch) {
      result.input_grad = detail::from_real_channels(std::get<RealTensor<T>>(grad), net.input_channels);
    } else {
      result.input_grad = std::get<ComplexTensor<T>>(std::move(grad));
    }
  }
  return result;
}

/// One real gradient per real parameter scalar, given dC/dscores.
template <std::floating_point T>
ParameterSet<T> backward(const NetworkSpec& net, const ParameterSet<T>& params, const ForwardCache<T>& cache,
                         const RealTensor<T>& score_grad) {
  require(cache.depth == net.layers.size() && cache.last_activated, ErrorCode::StaleCache,
          "cache does not come from a full forward pass");
  const Shape3 expected{cache.input_shape.batch, num_classes(net), 1};
  require(score_grad.shape() == expected, ErrorCode::ShapeMismatch,
          "score gradient " + to_string(score_grad.shape()) + " expected " + to_string(expected));
  return backward_prefix<T>(net, params, cache, score_grad, false).grads;
}

}  // namespace cvfp
