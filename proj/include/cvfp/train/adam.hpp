#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cvfp/core/error.hpp"
#include "cvfp/core/parameters.hpp"

namespace cvfp {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <std::floating_point T>
struct AdamState {
  ParameterSet<T> first_moment;
  ParameterSet<T> second_moment;
  std::uint64_t step = 0;

  static AdamState fresh(const ParameterSet<T>& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }
};

/// In-place Adam with bias correction. l2_lambda * w is added to the gradient of every decaying
/// array (weights, not biases) before the moment update.
template <std::floating_point T>
void adam_step(ParameterSet<T>& params, const ParameterSet<T>& grads, AdamState<T>& state, const AdamConfig& cfg,
               double l2_lambda) {
  require(grads.layers.size() == params.layers.size() && state.first_moment.layers.size() == params.layers.size() &&
              state.second_moment.layers.size() == params.layers.size(),
          ErrorCode::ParameterMismatch, "adam: gradient/state layout does not match parameters");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& gl = grads.layers[i].arrays;
    require(gl.size() == params.layers[i].arrays.size(), ErrorCode::ParameterMismatch,
            "adam: layer " + std::to_string(i) + " array count mismatch");
    for (std::size_t a = 0; a < gl.size(); ++a) {
      const auto& p = params.layers[i].arrays[a];
      require(gl[a].values.size() == p.values.size() &&
                  state.first_moment.layers[i].arrays[a].values.size() == p.values.size() &&
                  state.second_moment.layers[i].arrays[a].values.size() == p.values.size(),
              ErrorCode::ParameterMismatch, "adam: layer " + std::to_string(i) + " '" + p.name + "' size mismatch");
      for (T g : gl[a].values)
        if (!std::isfinite(g))
          throw Error(ErrorCode::NonFinite, "gradient of layer " + std::to_string(i) + " '" + p.name + "'");
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    for (std::size_t a = 0; a < params.layers[i].arrays.size(); ++a) {
      auto& p = params.layers[i].arrays[a];
      const auto& g = grads.layers[i].arrays[a].values;
      auto& m = state.first_moment.layers[i].arrays[a].values;
      auto& v = state.second_moment.layers[i].arrays[a].values;
      const T decay = p.decay ? static_cast<T>(l2_lambda) : T{0};
      for (std::size_t k = 0; k < p.values.size(); ++k) {
        const T grad = g[k] + decay * p.values[k];
        m[k] = b1 * m[k] + (T{1} - b1) * grad;
        v[k] = b2 * v[k] + (T{1} - b2) * grad * grad;
        const double m_hat = static_cast<double>(m[k]) / correction1;
        const double v_hat = static_cast<double>(v[k]) / correction2;
        p.values[k] -= static_cast<T>(cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
      }
    }
  }
  params.touch();
}

}  // namespace cvfp
