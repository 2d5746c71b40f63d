#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "cvfp/sim/adsb.hpp"
#include "cvfp/sim/channel.hpp"
#include "cvfp/sim/crc24.hpp"
#include "cvfp/sim/impairments.hpp"
#include "cvfp/sim/waveform.hpp"
#include "cvfp/sim/wifi.hpp"

using namespace cvfp;

namespace {

// Polynomial long division of m(x) * x^24 by x^24 + 0xFFF409, written independently of the
// shift-register form.
std::uint32_t long_division_crc(std::vector<std::uint8_t> bits) {
  const std::vector<std::uint8_t> generator = [] {
    std::vector<std::uint8_t> g{1};
    auto rest = to_bits(kModeSGenerator, 24);
    g.insert(g.end(), rest.begin(), rest.end());
    return g;
  }();
  const std::size_t n = bits.size();
  bits.resize(n + 24, 0);
  for (std::size_t i = 0; i < n; ++i)
    if (bits[i])
      for (std::size_t j = 0; j < generator.size(); ++j) bits[i + j] ^= generator[j];
  std::uint32_t r = 0;
  for (std::size_t i = n; i < n + 24; ++i) r = (r << 1) | bits[i];
  return r;
}

double mse(const Waveform& a, const Waveform& b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(a.iq[i] - b.iq[i]);
  return s / static_cast<double>(n);
}

}  // namespace

TEST(Crc24, TrivialMessages) {
  EXPECT_EQ(crc24(std::vector<std::uint8_t>(88, 0)), 0u);
  std::vector<std::uint8_t> g{1};
  auto rest = to_bits(kModeSGenerator, 24);
  g.insert(g.end(), rest.begin(), rest.end());
  EXPECT_EQ(crc24(g), 0u);
}

TEST(Crc24, MatchesLongDivisionOracle) {
  Rng rng(2024);
  std::uniform_int_distribution<int> len(1, 112);
  for (int t = 0; t < 10000; ++t) {
    std::vector<std::uint8_t> m(static_cast<std::size_t>(t < 5000 ? 32 : len(rng)));
    for (auto& b : m) b = static_cast<std::uint8_t>(rng() & 1u);
    ASSERT_EQ(crc24(m), long_division_crc(m)) << "message " << t;
  }
}

TEST(Crc24, GeneratedPacketsVerifyAndSingleFlipsFail) {
  Rng rng(5);
  for (auto mode : {PacketType::ModeS, PacketType::ModeSExtended}) {
    for (int t = 0; t < 20; ++t) {
      const auto p = gen_adsb_packet(mode, static_cast<std::uint32_t>(rng() & 0xFFFFFF), rng);
      auto frame = p.data_bits();
      ASSERT_EQ(frame.size() + kPreambleSymbols, symbol_count(mode));
      EXPECT_TRUE(crc24_valid(frame));
      for (std::size_t i = 0; i < frame.size(); ++i) {
        frame[i] ^= 1;
        EXPECT_FALSE(crc24_valid(frame)) << "bit " << i;
        frame[i] ^= 1;
      }
    }
  }
}

TEST(Adsb, PacketLayout) {
  Rng rng(1);
  const auto p = gen_adsb_packet(PacketType::ModeS, 0xABCDEF, rng);
  const auto bits = p.data_bits();
  EXPECT_EQ(bits.size(), 48u);
  EXPECT_EQ(std::vector<std::uint8_t>(bits.begin(), bits.begin() + 24), to_bits(0xABCDEF, 24));
  EXPECT_EQ(gen_adsb_packet(PacketType::ModeSExtended, 1, rng).data_bits().size(), 104u);
  EXPECT_THROW(gen_adsb_packet(PacketType::ModeS, 1u << 24, rng), Error);
}

TEST(Adsb, PpmLengthsAndPolarity) {
  Rng rng(3);
  EXPECT_EQ(ppm_modulate(gen_adsb_packet(PacketType::ModeS, 7, rng)).size(), 1280u);
  EXPECT_EQ(ppm_modulate(gen_adsb_packet(PacketType::ModeSExtended, 7, rng)).size(), 2400u);
  const std::vector<std::uint8_t> one{1};
  const auto w = ppm_modulate(std::span<const std::uint8_t>(one));
  ASSERT_EQ(w.size(), 20u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(w.iq[i], std::complex<double>(1, 0));
  for (std::size_t i = 10; i < 20; ++i) EXPECT_EQ(w.iq[i], std::complex<double>(0, 0));
}

TEST(Adsb, PreambleIdenticalAcrossDevicesAndModes) {
  Rng rng(4);
  const auto ref = ppm_modulate(gen_adsb_packet(PacketType::ModeS, 0x123456, rng));
  for (int t = 0; t < 20; ++t) {
    const auto mode = t % 2 ? PacketType::ModeS : PacketType::ModeSExtended;
    const auto w = ppm_modulate(gen_adsb_packet(mode, static_cast<std::uint32_t>(rng() & 0xFFFFFF), rng));
    for (std::size_t i = 0; i < kPreambleSamples; ++i) ASSERT_EQ(w.iq[i], ref.iq[i]);
  }
}

TEST(Adsb, SameContentSameWaveform) {
  Rng a(9), b(9);
  EXPECT_EQ(ppm_modulate(gen_adsb_packet(PacketType::ModeSExtended, 42, a)),
            ppm_modulate(gen_adsb_packet(PacketType::ModeSExtended, 42, b)));
}

TEST(Adsb, IcaoBitFlipIsLocal) {
  Rng rng(11);
  for (auto mode : {PacketType::ModeS, PacketType::ModeSExtended}) {
    const auto p = gen_adsb_packet(mode, 0x5A5A5A, rng);
    for (int bit = 0; bit < 24; ++bit) {
      auto q = p;
      q.icao ^= 1u << bit;
      auto message = to_bits(q.icao, 24);
      message.insert(message.end(), q.payload_bits.begin(), q.payload_bits.end());
      q.crc24 = crc24(message);
      const auto wa = ppm_modulate(p);
      const auto wb = ppm_modulate(q);
      const std::size_t parity_start = (symbol_count(mode) - kParitySymbols) * kSamplesPerSymbol;
      for (std::size_t i = 0; i < wa.size(); ++i) {
        const bool in_icao = i >= (kIcaoFirstSymbol - 1) * kSamplesPerSymbol && i < kIcaoLastSymbol * kSamplesPerSymbol;
        if (!in_icao && i < parity_start) {
          ASSERT_EQ(wa.iq[i], wb.iq[i]) << "sample " << i;
        }
      }
    }
  }
}

TEST(Adsb, PruneExtendedOffsets) {
  Rng rng(12);
  const auto w = ppm_modulate(gen_adsb_packet(PacketType::ModeSExtended, 99, rng));
  const auto zero = prune_extended(w, OffsetMode::Zero, rng);
  const auto last = prune_extended(w, OffsetMode::Last, rng);
  ASSERT_EQ(zero.size(), 1280u);
  ASSERT_EQ(last.size(), 1280u);
  for (std::size_t i = 0; i < 1280; ++i) {
    EXPECT_EQ(zero.iq[i], w.iq[i]);
    EXPECT_EQ(last.iq[i], w.iq[1120 + i]);
  }
  Rng r1(77), r2(77);
  for (int t = 0; t < 30; ++t) {
    const auto a = prune_extended(w, OffsetMode::Random, r1);
    EXPECT_EQ(a, prune_extended(w, OffsetMode::Random, r2));
    bool found = false;
    for (std::size_t s = 0; s <= 56 && !found; ++s)
      found = std::equal(a.iq.begin(), a.iq.end(), w.iq.begin() + static_cast<std::ptrdiff_t>(s * 20));
    EXPECT_TRUE(found);
  }
  Rng rs(1);
  EXPECT_THROW(prune_extended(ppm_modulate(gen_adsb_packet(PacketType::ModeS, 1, rs)), OffsetMode::Zero, rs), Error);
}

TEST(Waveform, PreambleAndDeletion) {
  Rng rng(13);
  const auto w = ppm_modulate(gen_adsb_packet(PacketType::ModeS, 3, rng));
  const auto pre = extract_preamble(w);
  ASSERT_EQ(pre.size(), 320u);
  EXPECT_TRUE(std::equal(pre.iq.begin(), pre.iq.end(), w.iq.begin()));
  Waveform short_w;
  short_w.iq.assign(100, {1, 0});
  EXPECT_THROW(extract_preamble(short_w), Error);

  const auto del = delete_symbols(w, kIcaoFirstSymbol, kIcaoLastSymbol);
  ASSERT_EQ(del.size(), 1280u - 480u);
  for (std::size_t i = 0; i < 320; ++i) EXPECT_EQ(del.iq[i], w.iq[i]);
  for (std::size_t i = 320; i < del.size(); ++i) EXPECT_EQ(del.iq[i], w.iq[i + 480]);
}

TEST(Waveform, NormalizePower) {
  Waveform w;
  w.iq.assign(50, std::polar(2.0, 0.3));
  const auto n = normalize_power(w);
  for (const auto& z : n.iq) EXPECT_NEAR(std::abs(z), 1.0, 1e-15);
  EXPECT_EQ(normalize_power(n), n);

  Rng rng(14);
  Waveform r;
  for (int i = 0; i < 1000; ++i) r.iq.push_back(complex_gaussian(rng, 3.7));
  EXPECT_NEAR(mean_power(normalize_power(r)), 1.0, 1e-12);
  Waveform zero;
  zero.iq.assign(10, {0, 0});
  EXPECT_THROW(normalize_power(zero), Error);
}

TEST(Wifi, PreambleStructure) {
  const auto w = gen_wifi_preamble();
  ASSERT_EQ(w.size(), 320u);
  EXPECT_NEAR(mean_power(w), 1.0, 1e-12);
  for (std::size_t i = 16; i < 160; ++i) EXPECT_NEAR(std::abs(w.iq[i] - w.iq[i - 16]), 0.0, 1e-12);
  // Two identical long symbols, and the guard repeats the tail of the long symbol.
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(std::abs(w.iq[192 + i] - w.iq[256 + i]), 0.0, 1e-12);
  for (std::size_t i = 0; i < 32; ++i) EXPECT_NEAR(std::abs(w.iq[160 + i] - w.iq[192 + 32 + i]), 0.0, 1e-12);
  EXPECT_EQ(gen_wifi_preamble(), w);
}

TEST(Impairments, IdentityProfileIsIdentity) {
  Rng rng(15);
  const auto w = ppm_modulate(gen_adsb_packet(PacketType::ModeS, 5, rng));
  EXPECT_EQ(apply_impairments(w, DeviceProfile::identity(), rng), w);
}

TEST(Impairments, PureCfoPreservesMagnitude) {
  Rng rng(16);
  const auto w = gen_wifi_preamble();
  auto p = DeviceProfile::identity();
  p.cfo_hz = 15e3;
  const auto y = apply_impairments(w, p, rng);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(std::abs(y.iq[i]), std::abs(w.iq[i]), 1e-12);
  EXPECT_GT(mse(w, y, w.size()), 1e-4);
}

TEST(Impairments, CubicPaOnUnitSamples) {
  Rng rng(17);
  const auto w = ppm_modulate(gen_adsb_packet(PacketType::ModeS, 5, rng));
  auto p = DeviceProfile::identity();
  p.pa_a3 = {-0.1, 0.0};
  const auto y = apply_impairments(w, p, rng);
  for (std::size_t i = 0; i < w.size(); ++i)
    EXPECT_NEAR(std::abs(y.iq[i]), std::abs(w.iq[i]) > 0 ? 0.9 : 0.0, 1e-12);
}

TEST(Impairments, IqImbalanceModel) {
  Rng rng(18);
  Waveform w;
  w.iq = {{1.0, 0.0}, {0.0, 1.0}, {0.5, -0.25}};
  auto p = DeviceProfile::identity();
  p.iq_gain_db = 20.0 * std::log10(1.1);
  p.iq_phase_rad = 0.1;
  const auto y = apply_impairments(w, p, rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double in_i = w.iq[i].real(), in_q = w.iq[i].imag();
    EXPECT_NEAR(y.iq[i].real(), 1.1 * in_i, 1e-12);
    EXPECT_NEAR(y.iq[i].imag(), in_q * std::cos(0.1) - in_i * std::sin(0.1), 1e-12);
  }
}

TEST(Impairments, DeterministicAndDevicesSeparable) {
  ProfileDistribution dist;
  Rng prng(19);
  const auto a = draw_profile(0, dist, prng);
  const auto b = draw_profile(1, dist, prng);
  Rng base(20);
  const auto w = shape_pulses(ppm_modulate(gen_adsb_packet(PacketType::ModeS, 1, base)),
                              std::vector<double>{0.1, 0.2, 0.4, 0.2, 0.1});
  Rng r1(21), r2(21), r3(21);
  const auto ya = apply_impairments(w, a, r1);
  EXPECT_EQ(ya, apply_impairments(w, a, r2));
  const auto yb = apply_impairments(w, b, r3);
  EXPECT_GT(mse(normalize_power(extract_preamble(ya)), normalize_power(extract_preamble(yb)), kPreambleSamples),
            1e-6);
}

TEST(Impairments, PhaseNoiseIsUnitModulusWalk) {
  Rng rng(22);
  Waveform w;
  w.iq.assign(4000, {1.0, 0.0});
  auto p = DeviceProfile::identity();
  p.phase_noise_linewidth_hz = 5e4;
  const auto y = apply_impairments(w, p, rng);
  EXPECT_NEAR(std::abs(y.iq[0] - w.iq[0]), 0.0, 1e-12);
  double var = 0;
  for (std::size_t i = 1; i < y.size(); ++i) {
    EXPECT_NEAR(std::abs(y.iq[i]), 1.0, 1e-12);
    const double d = std::arg(y.iq[i] / y.iq[i - 1]);
    var += d * d;
  }
  var /= static_cast<double>(y.size() - 1);
  const double expected = 2.0 * std::numbers::pi * 5e4 / kSampleRateHz;
  EXPECT_NEAR(var, expected, 0.1 * expected);
}

TEST(Awgn, PassthroughAndErrors) {
  Rng rng(23);
  const auto w = gen_wifi_preamble();
  EXPECT_EQ(awgn_channel(w, kNoNoise, rng), w);
  Waveform zero;
  zero.iq.assign(8, {0, 0});
  EXPECT_THROW(awgn_channel(zero, 10.0, rng), Error);
}

TEST(Awgn, EmpiricalNoisePower) {
  Rng rng(24);
  Waveform w;
  w.iq.assign(100000, {1.0, 0.0});
  for (double snr : {0.0, 20.0}) {
    const auto y = awgn_channel(w, snr, rng);
    double noise = 0;
    for (std::size_t i = 0; i < w.size(); ++i) noise += std::norm(y.iq[i] - w.iq[i]);
    noise /= static_cast<double>(w.size());
    const double measured_db = 10.0 * std::log10(1.0 / noise);
    if (snr == 0.0) {
      EXPECT_NEAR(noise, 1.0, 0.05);
    }
    EXPECT_NEAR(measured_db, snr, 0.2);
  }
}

TEST(Random, DeriveSeedSeparatesStreams) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
  EXPECT_NE(seed_tag("train"), seed_tag("test"));
}
