#pragma once

#include <cmath>
#include <limits>

#include "cvfp/core/error.hpp"
#include "cvfp/sim/random.hpp"
#include "cvfp/sim/waveform.hpp"

namespace cvfp {

inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

inline bool is_noiseless(double snr_db) { return std::isinf(snr_db) && snr_db > 0; }

/// Adds circular Gaussian noise of per-sample variance P / 10^(snr/10), P the mean input power.
/// +inf dB is a passthrough.
inline Waveform awgn_channel(const Waveform& w, double snr_db, Rng& rng) {
  const double p = mean_power(w);
  require(p > 0.0, ErrorCode::ZeroPower, "AWGN reference power is zero");
  if (is_noiseless(snr_db)) return w;
  require(std::isfinite(snr_db), ErrorCode::InvalidArgument, "SNR must be finite or +inf");
  const double variance = p / std::pow(10.0, snr_db / 10.0);
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  Waveform out = w;
  for (auto& z : out.iq) {
    const double re = n(rng);
    const double im = n(rng);
    z += std::complex<double>(re, im);
  }
  return out;
}

}  // namespace cvfp
