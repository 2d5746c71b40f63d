#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "cvfp/core/error.hpp"

namespace cvfp {

inline constexpr double kSampleRateHz = 20e6;
inline constexpr std::size_t kSamplesPerSymbol = 20;
inline constexpr std::size_t kPreambleSymbols = 16;
inline constexpr std::size_t kPreambleSamples = kPreambleSymbols * kSamplesPerSymbol;

struct Waveform {
  std::vector<std::complex<double>> iq;
  double sample_rate_hz = kSampleRateHz;
  std::size_t samples_per_symbol = kSamplesPerSymbol;

  std::size_t size() const { return iq.size(); }
  friend bool operator==(const Waveform&, const Waveform&) = default;
};

inline double mean_power(const Waveform& w) {
  if (w.iq.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& z : w.iq) acc += std::norm(z);
  return acc / static_cast<double>(w.iq.size());
}

/// Scales to mean |x|^2 = 1.
inline Waveform normalize_power(Waveform w) {
  const double p = mean_power(w);
  require(p > 0.0, ErrorCode::ZeroPower, "cannot normalize a zero-power waveform");
  const double scale = 1.0 / std::sqrt(p);
  for (auto& z : w.iq) z *= scale;
  return w;
}

/// The first 320 samples (16 symbols).
inline Waveform extract_preamble(const Waveform& w) {
  require(w.size() >= kPreambleSamples, ErrorCode::ShapeMismatch,
          "waveform of " + std::to_string(w.size()) + " samples is shorter than the 320-sample preamble");
  Waveform out = w;
  out.iq.resize(kPreambleSamples);
  return out;
}

/// Removes the symbols in [first, last] (1-indexed, inclusive).
inline Waveform delete_symbols(const Waveform& w, std::size_t first, std::size_t last) {
  require(first >= 1 && first <= last, ErrorCode::InvalidArgument, "symbol range must satisfy 1 <= first <= last");
  const std::size_t sps = w.samples_per_symbol;
  require(last * sps <= w.size(), ErrorCode::ShapeMismatch, "symbol range exceeds the waveform");
  Waveform out = w;
  out.iq.erase(out.iq.begin() + static_cast<std::ptrdiff_t>((first - 1) * sps),
               out.iq.begin() + static_cast<std::ptrdiff_t>(last * sps));
  return out;
}

inline Waveform rotate_phase(Waveform w, double radians) {
  const auto r = std::polar(1.0, radians);
  for (auto& z : w.iq) z *= r;
  return w;
}

}  // namespace cvfp
