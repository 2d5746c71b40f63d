#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "cvfp/sim/waveform.hpp"

namespace cvfp {

namespace detail {

/// 64-point inverse DFT of subcarriers -26..26 (index 0 = subcarrier -26), unscaled.
inline std::array<std::complex<double>, 64> ofdm_symbol(const std::array<std::complex<double>, 53>& carriers) {
  std::array<std::complex<double>, 64> out{};
  for (std::size_t n = 0; n < 64; ++n) {
    std::complex<double> acc{};
    for (int k = -26; k <= 26; ++k) {
      const auto x = carriers[static_cast<std::size_t>(k + 26)];
      if (x == std::complex<double>{}) continue;
      acc += x * std::polar(1.0, 2.0 * std::numbers::pi * k * static_cast<double>(n) / 64.0);
    }
    out[n] = acc;
  }
  return out;
}

}  // namespace detail

/// 802.11a legacy preamble at 20 MHz: ten 16-sample short symbols, a 32-sample guard and two
/// 64-sample long symbols, scaled to unit average power. 320 samples.
inline Waveform gen_wifi_preamble() {
  const std::complex<double> p{1.0, 1.0};
  const std::complex<double> m{-1.0, -1.0};
  const std::complex<double> z{};
  const double s = std::sqrt(13.0 / 6.0);
  std::array<std::complex<double>, 53> short_seq = {
      z, z, p, z, z, z, m, z, z, z, p, z, z, z, m, z, z, z, m, z, z, z, p, z, z, z, z,
      z, z, z, m, z, z, z, m, z, z, z, p, z, z, z, p, z, z, z, p, z, z, z, p, z, z};
  for (auto& c : short_seq) c *= s;
  constexpr std::array<int, 53> long_pm = {1, 1,  -1, -1, 1,  1,  -1, 1,  -1, 1,  1,  1,  1,  1,  1, -1, -1, 1,
                                           1, -1, 1,  -1, 1,  1,  1,  1,  0,  1,  -1, -1, 1,  1,  -1, 1, -1, 1,
                                           -1, -1, -1, -1, -1, 1,  1,  -1, -1, 1,  -1, 1,  -1, 1,  1,  1,  1};
  std::array<std::complex<double>, 53> long_seq{};
  for (std::size_t i = 0; i < 53; ++i) long_seq[i] = static_cast<double>(long_pm[i]);

  const auto short_sym = detail::ofdm_symbol(short_seq);
  const auto long_sym = detail::ofdm_symbol(long_seq);
  Waveform w;
  w.iq.reserve(320);
  for (std::size_t n = 0; n < 160; ++n) w.iq.push_back(short_sym[n % 16]);
  for (std::size_t n = 32; n < 64; ++n) w.iq.push_back(long_sym[n]);
  for (int rep = 0; rep < 2; ++rep)
    for (std::size_t n = 0; n < 64; ++n) w.iq.push_back(long_sym[n]);
  return normalize_power(w);
}

}  // namespace cvfp
