#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

#include "cvfp/sim/random.hpp"
#include "cvfp/sim/waveform.hpp"

namespace cvfp {

/// Ground-truth transmitter fingerprint.
struct DeviceProfile {
  std::uint32_t device_id = 0;
  double cfo_hz = 0.0;
  double iq_gain_db = 0.0;
  double iq_phase_rad = 0.0;
  std::complex<double> pa_a1{1.0, 0.0};
  std::complex<double> pa_a3{};
  std::complex<double> pa_a5{};
  double phase_noise_linewidth_hz = 0.0;

  static DeviceProfile identity(std::uint32_t id = 0) { return DeviceProfile{id}; }
  friend bool operator==(const DeviceProfile&, const DeviceProfile&) = default;
};

/// Population from which device profiles are drawn.
struct ProfileDistribution {
  double cfo_max_hz = 20e3;
  double iq_gain_db_std = 0.5;
  double iq_phase_std_deg = 2.0;
  double pa_a3_scale = 0.3;
  double pa_a5_scale = 0.03;
  double linewidth_max_hz = 100.0;
};

/// Stages of the transmit chain; each can be disabled for ablations.
struct ImpairmentToggles {
  bool pa = true;
  bool iq_imbalance = true;
  bool cfo = true;
  bool phase_noise = true;
};

inline DeviceProfile draw_profile(std::uint32_t device_id, const ProfileDistribution& d, Rng& rng) {
  DeviceProfile p;
  p.device_id = device_id;
  std::uniform_real_distribution<double> cfo(-d.cfo_max_hz, d.cfo_max_hz);
  std::normal_distribution<double> gain(0.0, d.iq_gain_db_std);
  std::normal_distribution<double> skew(0.0, d.iq_phase_std_deg * std::numbers::pi / 180.0);
  std::uniform_real_distribution<double> linewidth(0.0, d.linewidth_max_hz);
  p.cfo_hz = cfo(rng);
  p.iq_gain_db = gain(rng);
  p.iq_phase_rad = skew(rng);
  p.pa_a1 = {1.0, 0.0};
  p.pa_a3 = complex_gaussian(rng, d.pa_a3_scale * d.pa_a3_scale);
  p.pa_a5 = complex_gaussian(rng, d.pa_a5_scale * d.pa_a5_scale);
  p.phase_noise_linewidth_hz = linewidth(rng);
  return p;
}

/// PA nonlinearity, then I/Q imbalance, then CFO rotation, then a Wiener phase-noise walk.
inline Waveform apply_impairments(const Waveform& w, const DeviceProfile& p, Rng& rng,
                                  const ImpairmentToggles& on = {}) {
  Waveform out = w;
  if (on.pa) {
    for (auto& x : out.iq) {
      const double m2 = std::norm(x);
      x = p.pa_a1 * x + p.pa_a3 * x * m2 + p.pa_a5 * x * (m2 * m2);
    }
  }
  if (on.iq_imbalance) {
    const double g = std::pow(10.0, p.iq_gain_db / 20.0);
    const double c = std::cos(p.iq_phase_rad);
    const double s = std::sin(p.iq_phase_rad);
    for (auto& x : out.iq) x = {g * x.real(), x.imag() * c - x.real() * s};
  }
  if (on.cfo && p.cfo_hz != 0.0) {
    const double step = 2.0 * std::numbers::pi * p.cfo_hz / out.sample_rate_hz;
    for (std::size_t n = 0; n < out.iq.size(); ++n) out.iq[n] *= std::polar(1.0, step * static_cast<double>(n));
  }
  if (on.phase_noise && p.phase_noise_linewidth_hz > 0.0) {
    std::normal_distribution<double> increment(
        0.0, std::sqrt(2.0 * std::numbers::pi * p.phase_noise_linewidth_hz / out.sample_rate_hz));
    double theta = 0.0;
    for (std::size_t n = 0; n < out.iq.size(); ++n) {
      if (n > 0) theta += increment(rng);
      out.iq[n] *= std::polar(1.0, theta);
    }
  }
  return out;
}

}  // namespace cvfp
