#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "cvfp/core/error.hpp"
#include "cvfp/core/tensor.hpp"

namespace cvfp {

template <std::floating_point T>
struct LossResult {
  T loss{0};
  /// dloss/dscores, (softmax - onehot) / batch.
  RealTensor<T> grad;
};

/// Mean softmax cross-entropy over the batch. Scores are (batch, classes, 1).
template <std::floating_point T>
LossResult<T> cross_entropy_loss(const RealTensor<T>& scores, std::span<const std::size_t> labels) {
  const auto& s = scores.shape();
  require(s.length == 1, ErrorCode::ShapeMismatch, "scores must have length 1");
  require(labels.size() == s.batch, ErrorCode::ShapeMismatch, "one label per batch row required");
  LossResult<T> out{T{0}, RealTensor<T>(s)};
  const T inv_batch = T{1} / static_cast<T>(s.batch);
  double total = 0.0;
  for (std::size_t b = 0; b < s.batch; ++b) {
    require(labels[b] < s.channels, ErrorCode::LabelOutOfRange,
            "label " + std::to_string(labels[b]) + " with " + std::to_string(s.channels) + " classes");
    T peak = scores(b, 0, 0);
    for (std::size_t k = 1; k < s.channels; ++k) peak = std::max(peak, scores(b, k, 0));
    T denom{0};
    for (std::size_t k = 0; k < s.channels; ++k) denom += std::exp(scores(b, k, 0) - peak);
    const T log_denom = std::log(denom);
    total += static_cast<double>(log_denom - (scores(b, labels[b], 0) - peak));
    for (std::size_t k = 0; k < s.channels; ++k) {
      const T p = std::exp(scores(b, k, 0) - peak - log_denom);
      out.grad(b, k, 0) = (p - (k == labels[b] ? T{1} : T{0})) * inv_batch;
    }
  }
  out.loss = static_cast<T>(total / static_cast<double>(s.batch));
  return out;
}

/// Row-wise argmax; ties go to the lowest class index.
template <std::floating_point T>
std::size_t argmax_row(const RealTensor<T>& scores, std::size_t b) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.shape().channels; ++k)
    if (scores(b, k, 0) > scores(b, best, 0)) best = k;
  return best;
}

}  // namespace cvfp
