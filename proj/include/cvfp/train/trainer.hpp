#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cvfp/core/architecture.hpp"
#include "cvfp/core/network.hpp"
#include "cvfp/core/parameters.hpp"
#include "cvfp/data/dataset.hpp"
#include "cvfp/sim/random.hpp"
#include "cvfp/train/adam.hpp"
#include "cvfp/train/loss.hpp"

namespace cvfp {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 100;
  AdamConfig adam{};
  double l2_lambda = 1e-3;
  std::uint64_t seed = 1;
  bool shuffle = true;

  void validate() const {
    require(epochs >= 1, ErrorCode::Config, "epochs must be at least 1");
    require(batch_size >= 1, ErrorCode::Config, "batch_size must be at least 1");
    require(l2_lambda >= 0.0 && std::isfinite(l2_lambda), ErrorCode::Config, "l2_lambda must be finite and >= 0");
    require(adam.lr > 0.0 && adam.eps > 0.0, ErrorCode::Config, "adam lr and eps must be positive");
    require(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0, ErrorCode::Config,
            "adam betas must lie in [0, 1)");
  }
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;

  friend bool operator==(const EpochStats&, const EpochStats&) = default;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,train_loss,train_acc,test_acc\n";
    for (const auto& e : epochs) {
      os << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ',';
      if (e.test_accuracy) os << *e.test_accuracy;
      os << '\n';
    }
    return os.str();
  }
};

template <std::floating_point T>
struct TrainResult {
  ParameterSet<T> params;
  TrainHistory history;
};

struct AccuracyCell {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct Evaluation {
  AccuracyCell overall;
  std::map<std::string, AccuracyCell> by_packet_type;
  std::map<std::string, AccuracyCell> by_snr_band;
  std::vector<std::size_t> predictions;

  double accuracy() const { return overall.accuracy(); }
  /// Accuracy for one packet type, or nullopt when the dataset holds none.
  std::optional<double> packet_type_accuracy(PacketType t) const {
    auto it = by_packet_type.find(std::string(to_string(t)));
    if (it == by_packet_type.end() || it->second.total == 0) return std::nullopt;
    return it->second.accuracy();
  }
};

namespace detail {

inline void check_labels(const NetworkSpec& net, const Dataset& ds) {
  require(!ds.empty(), ErrorCode::InvalidArgument, "dataset is empty");
  const std::size_t classes = num_classes(net);
  for (const auto& r : ds.records)
    require(r.device_label < classes, ErrorCode::LabelOutOfRange,
            "label " + std::to_string(r.device_label) + " but network has " + std::to_string(classes) + " classes");
}

inline std::vector<std::size_t> batch_labels(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<std::size_t> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = ds.records[idx[i]].device_label;
  return out;
}

}  // namespace detail

/// Forward pass over the whole dataset in chunks; argmax ties go to the lowest class index.
template <std::floating_point T>
Evaluation evaluate(const NetworkSpec& net, const ParameterSet<T>& params, const Dataset& ds,
                    std::size_t chunk = 256) {
  detail::check_labels(net, ds);
  Evaluation ev;
  ev.predictions.resize(ds.size());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    const std::size_t end = std::min(ds.size(), start + chunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto scores = predict(net, params, make_batch<T>(ds, idx));
    for (std::size_t b = 0; b < idx.size(); ++b) {
      const auto& r = ds.records[idx[b]];
      const std::size_t pred = argmax_row(scores, b);
      ev.predictions[idx[b]] = pred;
      const bool hit = pred == r.device_label;
      for (AccuracyCell* cell : {&ev.overall, &ev.by_packet_type[std::string(to_string(r.packet_type))],
                                 &ev.by_snr_band[snr_band_label(r.natural_snr_db)]}) {
        cell->total += 1;
        cell->correct += hit ? 1 : 0;
      }
    }
  }
  return ev;
}

/// Mean cross-entropy over the dataset.
template <std::floating_point T>
double dataset_loss(const NetworkSpec& net, const ParameterSet<T>& params, const Dataset& ds,
                    std::size_t chunk = 256) {
  detail::check_labels(net, ds);
  double total = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += chunk) {
    const std::size_t end = std::min(ds.size(), start + chunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto labels = detail::batch_labels(ds, idx);
    const auto scores = predict(net, params, make_batch<T>(ds, idx));
    total += static_cast<double>(cross_entropy_loss(scores, labels).loss) * static_cast<double>(idx.size());
  }
  return total / static_cast<double>(ds.size());
}

/// Minibatch Adam. The shuffle order depends only on (seed, epoch), so two runs with the same
/// inputs produce identical histories. The last batch of an epoch may be short.
/// train_loss and train_accuracy are running means over the batches of the epoch.
template <std::floating_point T>
TrainResult<T> train(const NetworkSpec& net, ParameterSet<T> params, const Dataset& ds, const TrainConfig& cfg,
                     const Dataset* held_out = nullptr) {
  cfg.validate();
  detail::check_labels(net, ds);
  if (held_out) detail::check_labels(net, *held_out);

  auto state = AdamState<T>::fresh(params);
  TrainHistory history;
  std::vector<std::size_t> order(ds.size());
  std::vector<std::size_t> idx;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) {
      Rng rng(derive_seed(cfg.seed, {seed_tag("shuffle"), epoch}));
      // Fisher-Yates with explicit draws; std::shuffle's draw pattern is implementation-defined.
      for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
      }
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += cfg.batch_size, ++b) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
      const auto labels = detail::batch_labels(ds, idx);
      auto fwd = forward(net, params, make_batch<T>(ds, idx));
      auto loss = cross_entropy_loss(fwd.scores, labels);
      if (!std::isfinite(loss.loss))
        throw Error(ErrorCode::NonFinite,
                    "non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b));
      loss_sum += static_cast<double>(loss.loss) * static_cast<double>(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) correct += argmax_row(fwd.scores, i) == labels[i] ? 1 : 0;
      const auto grads = backward(net, params, fwd.cache, loss.grad);
      try {
        adam_step(params, grads, state, cfg.adam, cfg.l2_lambda);
      } catch (const Error& e) {
        throw Error(e.code(), e.message() + " at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(b));
      }
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(ds.size());
    st.train_accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
    if (held_out) st.test_accuracy = evaluate(net, params, *held_out).accuracy();
    history.epochs.push_back(st);
  }
  return {std::move(params), std::move(history)};
}

}  // namespace cvfp
