#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cvfp/core/error.hpp"
#include "cvfp/core/network.hpp"
#include "cvfp/core/parameters.hpp"

namespace cvfp {

struct FilterWaveform {
  std::size_t filter = 0;
  std::vector<std::complex<double>> samples;
  /// Objective after every step, starting with the initial noise (steps + 1 entries).
  std::vector<double> objective;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;

  double initial_objective() const { return objective.front(); }
  double final_objective() const { return objective.back(); }
};

struct VisualizationResult {
  std::size_t layer = 0;
  std::size_t steps = 0;
  std::size_t receptive_field = 0;
  std::vector<FilterWaveform> filters;

  /// Writes filter_NNN.csv (index,I,Q,magnitude,phase) per filter and objective_summary.csv.
  void write(const std::filesystem::path& dir) const;
};

struct VisualizeOptions {
  std::size_t steps = 200;
  double step_size = 0.1;
  /// Halvings tried before a step is given up (the input is then left unchanged for that step).
  std::size_t max_halvings = 30;
};

namespace detail {

inline double mean_power(std::span<const std::complex<double>> x) {
  double p = 0.0;
  for (auto z : x) p += std::norm(z);
  return p / static_cast<double>(x.size());
}

inline void unit_power(std::vector<std::complex<double>>& x) {
  const double s = 1.0 / std::sqrt(mean_power(x));
  for (auto& z : x) z *= s;
}

/// Per-row objective mean_l |y[b, channel[b], l]|^2 of the pre-activation output, plus optionally
/// its input gradient.
inline std::vector<double> filter_objectives(const NetworkSpec& net, const ParameterSet<double>& p,
                                             const std::vector<std::vector<std::complex<double>>>& xs,
                                             std::size_t layer, const std::vector<std::size_t>& channel,
                                             std::vector<std::vector<std::complex<double>>>* grad) {
  const std::size_t n = xs.size();
  const std::size_t length = net.input_length;
  ComplexTensor<double> batch(Shape3{n, 1, length});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t l = 0; l < length; ++l) batch.set(b, 0, l, xs[b][l]);
  auto [out, cache] = forward_prefix(net, p, batch, layer + 1, false, grad != nullptr);
  const auto& y = std::get<ComplexTensor<double>>(out);
  const std::size_t positions = y.shape().length;
  std::vector<double> obj(n, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t l = 0; l < positions; ++l) obj[b] += std::norm(y.at(b, channel[b], l));
    obj[b] /= static_cast<double>(positions);
  }
  if (grad) {
    ComplexTensor<double> g(y.shape());
    const double scale = 2.0 / static_cast<double>(positions);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t l = 0; l < positions; ++l) g.set(b, channel[b], l, scale * y.at(b, channel[b], l));
    auto res = backward_prefix<double>(net, p, cache, std::move(g), true);
    grad->assign(n, std::vector<std::complex<double>>(length));
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t l = 0; l < length; ++l) (*grad)[b][l] = res.input_grad->at(b, 0, l);
  }
  return obj;
}

}  // namespace detail

/// Gradient ascent from unit-power complex Gaussian noise towards the input that maximizes the
/// mean squared modulus of each filter's pre-activation output in `layer`. The step is
/// step_size along the RMS-normalized gradient, halved until the objective does not decrease,
/// and the input is renormalized to unit power after every step.
template <std::floating_point T, class Rng>
VisualizationResult visualize_filters(const NetworkSpec& net, const ParameterSet<T>& params, std::size_t layer,
                                      Rng& rng, const VisualizeOptions& opt = {}) {
  require(layer < net.layers.size(), ErrorCode::InvalidArgument,
          "layer " + std::to_string(layer) + " out of range (network has " + std::to_string(net.layers.size()) +
              " layers)");
  const auto* conv = std::get_if<ComplexConv1D>(&net.layers[layer]);
  require(conv != nullptr && net.mode == NetworkMode::Complex, ErrorCode::InvalidArgument,
          "layer " + std::to_string(layer) + " is not a complex convolution");
  require(net.input_channels == 1, ErrorCode::InvalidArgument, "visualization needs a single-channel input");
  require(opt.step_size > 0.0, ErrorCode::InvalidArgument, "step size must be positive");

  const auto p = params.template cast<double>();
  const std::size_t filters = conv->filters;
  const std::size_t length = net.input_length;

  VisualizationResult result;
  result.layer = layer;
  result.steps = opt.steps;
  result.receptive_field = receptive_field(net, layer);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<std::complex<double>>> xs(filters, std::vector<std::complex<double>>(length));
  for (auto& x : xs) {
    for (auto& z : x) z = {gauss(rng), gauss(rng)};
    detail::unit_power(x);
  }
  result.filters.resize(filters);
  for (std::size_t f = 0; f < filters; ++f) result.filters[f].filter = f;

  std::vector<std::size_t> all(filters);
  for (std::size_t f = 0; f < filters; ++f) all[f] = f;
  std::vector<std::vector<std::complex<double>>> grads;
  auto obj = detail::filter_objectives(net, p, xs, layer, all, &grads);
  for (std::size_t f = 0; f < filters; ++f) result.filters[f].objective.push_back(obj[f]);

  for (std::size_t step = 0; step < opt.steps; ++step) {
    std::vector<double> eta(filters, opt.step_size);
    std::vector<bool> done(filters, false);
    std::vector<std::vector<std::complex<double>>> accepted = xs;
    std::vector<double> accepted_obj = obj;
    for (std::size_t f = 0; f < filters; ++f) {
      const double rms = std::sqrt(detail::mean_power(grads[f]));
      if (!(rms > 0.0) || !std::isfinite(rms)) done[f] = true;
    }
    for (std::size_t attempt = 0; attempt <= opt.max_halvings; ++attempt) {
      std::vector<std::size_t> pending;
      for (std::size_t f = 0; f < filters; ++f)
        if (!done[f]) pending.push_back(f);
      if (pending.empty()) break;
      // Candidates are evaluated in one batch; row b belongs to filter pending[b].
      std::vector<std::vector<std::complex<double>>> cand(pending.size());
      for (std::size_t b = 0; b < pending.size(); ++b) {
        const std::size_t f = pending[b];
        const double rms = std::sqrt(detail::mean_power(grads[f]));
        cand[b] = xs[f];
        for (std::size_t l = 0; l < length; ++l) cand[b][l] += (eta[f] / rms) * grads[f][l];
        detail::unit_power(cand[b]);
      }
      const auto cand_obj = detail::filter_objectives(net, p, cand, layer, pending, nullptr);
      for (std::size_t b = 0; b < pending.size(); ++b) {
        const std::size_t f = pending[b];
        if (cand_obj[b] >= obj[f]) {
          accepted[f] = std::move(cand[b]);
          accepted_obj[f] = cand_obj[b];
          done[f] = true;
        } else {
          eta[f] *= 0.5;
        }
      }
    }
    for (std::size_t f = 0; f < filters; ++f) {
      if (accepted_obj[f] >= obj[f] && accepted[f] != xs[f]) ++result.filters[f].accepted_steps;
      else ++result.filters[f].rejected_steps;
    }
    xs = std::move(accepted);
    obj = detail::filter_objectives(net, p, xs, layer, all, &grads);
    for (std::size_t f = 0; f < filters; ++f) result.filters[f].objective.push_back(obj[f]);
  }
  for (std::size_t f = 0; f < filters; ++f) result.filters[f].samples = std::move(xs[f]);
  return result;
}

inline void VisualizationResult::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto open = [](const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    out << std::setprecision(17);
    return out;
  };
  for (const auto& f : filters) {
    std::ostringstream name;
    name << "filter_" << std::setw(3) << std::setfill('0') << f.filter << ".csv";
    auto out = open(dir / name.str());
    out << "index,I,Q,magnitude,phase\n";
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
      const auto z = f.samples[i];
      out << i << ',' << z.real() << ',' << z.imag() << ',' << std::abs(z) << ',' << std::arg(z) << '\n';
    }
    require(out.good(), ErrorCode::Io, "write failed for " + (dir / name.str()).string());
  }
  auto out = open(dir / "objective_summary.csv");
  out << "filter,objective_start,objective_end,accepted_steps,rejected_steps\n";
  for (const auto& f : filters)
    out << f.filter << ',' << f.initial_objective() << ',' << f.final_objective() << ',' << f.accepted_steps << ','
        << f.rejected_steps << '\n';
  require(out.good(), ErrorCode::Io, "write failed for objective_summary.csv");
}

}  // namespace cvfp
