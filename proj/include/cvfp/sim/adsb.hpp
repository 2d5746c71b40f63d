#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "cvfp/core/error.hpp"
#include "cvfp/sim/crc24.hpp"
#include "cvfp/sim/random.hpp"
#include "cvfp/sim/waveform.hpp"

namespace cvfp {

enum class PacketType : std::uint8_t { ModeS = 0, ModeSExtended = 1, WifiPreamble = 2 };

constexpr std::string_view to_string(PacketType t) {
  switch (t) {
    case PacketType::ModeS: return "ModeS";
    case PacketType::ModeSExtended: return "ModeSExtended";
    case PacketType::WifiPreamble: return "WifiPreamble";
  }
  return "unknown";
}

inline constexpr std::size_t kModeSSymbols = 64;
inline constexpr std::size_t kModeSExtendedSymbols = 120;
inline constexpr std::size_t kIcaoFirstSymbol = 17;  // 1-indexed
inline constexpr std::size_t kIcaoLastSymbol = 40;
inline constexpr std::size_t kParitySymbols = 24;

constexpr std::size_t symbol_count(PacketType mode) {
  return mode == PacketType::ModeSExtended ? kModeSExtendedSymbols : kModeSSymbols;
}

/// Half-symbol chips of the 16 fixed preamble symbols: a 4-pulse synchronization pattern over
/// symbols 1-8, then a fixed PPM-coded sync word over symbols 9-16.
inline const std::array<std::uint8_t, 2 * kPreambleSymbols>& preamble_chips() {
  static const std::array<std::uint8_t, 2 * kPreambleSymbols> chips = [] {
    std::array<std::uint8_t, 2 * kPreambleSymbols> c{};
    constexpr std::array<std::uint8_t, 16> pulses = {1, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0};
    constexpr std::array<std::uint8_t, 8> sync = {1, 0, 0, 0, 1, 1, 0, 1};
    for (std::size_t i = 0; i < pulses.size(); ++i) c[i] = pulses[i];
    for (std::size_t i = 0; i < sync.size(); ++i) {
      c[16 + 2 * i] = sync[i];
      c[17 + 2 * i] = static_cast<std::uint8_t>(1 - sync[i]);
    }
    return c;
  }();
  return chips;
}

struct AdsbPacket {
  PacketType mode = PacketType::ModeS;
  std::uint32_t icao = 0;
  std::vector<std::uint8_t> payload_bits;
  std::uint32_t crc24 = 0;

  std::size_t symbols() const { return symbol_count(mode); }

  /// Everything after the preamble: address, payload, parity.
  std::vector<std::uint8_t> data_bits() const {
    auto bits = to_bits(icao, 24);
    bits.insert(bits.end(), payload_bits.begin(), payload_bits.end());
    const auto parity = to_bits(crc24, 24);
    bits.insert(bits.end(), parity.begin(), parity.end());
    return bits;
  }
};

inline std::size_t payload_bit_count(PacketType mode) {
  require(mode != PacketType::WifiPreamble, ErrorCode::InvalidMode, "not an ADS-B packet type");
  return symbol_count(mode) - kPreambleSymbols - 24 - kParitySymbols;
}

/// Address in symbols 17-40, random payload, parity over address and payload.
inline AdsbPacket gen_adsb_packet(PacketType mode, std::uint32_t icao, Rng& rng) {
  require(icao < (1u << 24), ErrorCode::InvalidArgument, "ICAO address must fit in 24 bits");
  AdsbPacket p;
  p.mode = mode;
  p.icao = icao;
  p.payload_bits.resize(payload_bit_count(mode));
  std::bernoulli_distribution coin(0.5);
  for (auto& b : p.payload_bits) b = coin(rng) ? 1 : 0;
  auto message = to_bits(icao, 24);
  message.insert(message.end(), p.payload_bits.begin(), p.payload_bits.end());
  p.crc24 = crc24(message);
  return p;
}

namespace detail {
inline void append_chips(Waveform& w, std::uint8_t early, std::uint8_t late) {
  const std::size_t half = w.samples_per_symbol / 2;
  for (std::size_t i = 0; i < half; ++i) w.iq.emplace_back(early ? 1.0 : 0.0, 0.0);
  for (std::size_t i = half; i < w.samples_per_symbol; ++i) w.iq.emplace_back(late ? 1.0 : 0.0, 0.0);
}
}  // namespace detail

/// Rectangular pulse-position modulation: bit 1 puts the pulse in the first half-symbol.
inline Waveform ppm_modulate(std::span<const std::uint8_t> bits) {
  Waveform w;
  w.iq.reserve(bits.size() * w.samples_per_symbol);
  for (auto b : bits) detail::append_chips(w, b ? 1 : 0, b ? 0 : 1);
  return w;
}

inline Waveform ppm_modulate(const AdsbPacket& packet) {
  Waveform w;
  w.iq.reserve(packet.symbols() * w.samples_per_symbol);
  const auto& chips = preamble_chips();
  for (std::size_t s = 0; s < kPreambleSymbols; ++s) detail::append_chips(w, chips[2 * s], chips[2 * s + 1]);
  for (auto b : packet.data_bits()) detail::append_chips(w, b ? 1 : 0, b ? 0 : 1);
  return w;
}

/// Centered FIR smoothing of the pulse train (transmit reconstruction filter). Odd tap count.
inline Waveform shape_pulses(const Waveform& w, std::span<const double> taps) {
  require(taps.size() % 2 == 1, ErrorCode::InvalidArgument, "pulse shaping needs an odd number of taps");
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(w.size());
  Waveform out = w;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::complex<double> acc{};
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(taps.size()); ++k) {
      const std::ptrdiff_t j = i + k - half;
      if (j >= 0 && j < n) acc += taps[static_cast<std::size_t>(k)] * w.iq[static_cast<std::size_t>(j)];
    }
    out.iq[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

enum class OffsetMode { Zero, Random, Last };

/// 64-symbol window of a 120-symbol waveform.
inline Waveform prune_extended(const Waveform& w, OffsetMode mode, Rng& rng) {
  const std::size_t sps = w.samples_per_symbol;
  require(w.size() == kModeSExtendedSymbols * sps, ErrorCode::ShapeMismatch,
          "prune_extended expects 2400 samples, got " + std::to_string(w.size()));
  constexpr std::size_t max_start = kModeSExtendedSymbols - kModeSSymbols;
  std::size_t start_symbol = 0;
  switch (mode) {
    case OffsetMode::Zero: start_symbol = 0; break;
    case OffsetMode::Last: start_symbol = max_start; break;
    case OffsetMode::Random: start_symbol = std::uniform_int_distribution<std::size_t>(0, max_start)(rng); break;
  }
  Waveform out = w;
  out.iq.assign(w.iq.begin() + static_cast<std::ptrdiff_t>(start_symbol * sps),
                w.iq.begin() + static_cast<std::ptrdiff_t>((start_symbol + kModeSSymbols) * sps));
  return out;
}

}  // namespace cvfp
