#pragma once

#include <string>
#include <string_view>
#include <utility>

#include <nlohmann/json.hpp>

#include "cvfp/core/architecture.hpp"
#include "cvfp/core/parameters.hpp"
#include "cvfp/data/binary.hpp"
#include "cvfp/data/digest.hpp"

namespace cvfp {

inline constexpr std::string_view kCheckpointMagic = "CVFPCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout (little-endian):
///   "CVFPCKPT" | u32 version | u64 len + network JSON | u8 scalar bytes (4|8) | u32 array count |
///   per array, in declaration order: u32 layer, u16 len + name, u8 complex, u8 decay, u32 rank,
///   rank x u64 dims, values (real plane then imaginary plane) |
///   32-byte SHA-256 of all preceding bytes.
template <std::floating_point T>
std::string encode_checkpoint(const NetworkSpec& net, const ParameterSet<T>& params) {
  require(params.scalar_count() == count_parameters(net), ErrorCode::ParameterMismatch,
          "parameters do not match the network");
  binary::Writer w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.text(to_json(net).dump());
  w.u8(sizeof(T));
  std::uint32_t arrays = 0;
  params.for_each_array([&](std::size_t, const ParamArray<T>&) { ++arrays; });
  w.u32(arrays);
  params.for_each_array([&](std::size_t layer, const ParamArray<T>& a) {
    w.u32(static_cast<std::uint32_t>(layer));
    w.u16(static_cast<std::uint16_t>(a.name.size()));
    w.bytes(a.name);
    w.u8(a.is_complex ? 1 : 0);
    w.u8(a.decay ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) w.u64(d);
    for (T v : a.values) {
      if constexpr (sizeof(T) == 4) {
        w.f32(v);
      } else {
        w.f64(static_cast<double>(v));
      }
    }
  });
  const auto digest = sha256(w.buffer());
  w.bytes(std::string_view(reinterpret_cast<const char*>(digest.data()), digest.size()));
  return w.buffer();
}

/// Values stored at a different precision are converted; same precision round-trips bit-exactly.
template <std::floating_point T>
std::pair<NetworkSpec, ParameterSet<T>> decode_checkpoint(std::string_view bytes) {
  binary::Reader r(bytes);
  require(r.bytes(kCheckpointMagic.size()) == kCheckpointMagic, ErrorCode::Io, "not a checkpoint file (bad magic)");
  const auto version = r.u32();
  require(version == kCheckpointVersion, ErrorCode::VersionMismatch,
          "checkpoint version " + std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion));
  NetworkSpec net;
  try {
    net = network_from_json(nlohmann::json::parse(r.text()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("checkpoint network description: ") + e.what());
  }
  const auto width = r.u8();
  require(width == 4 || width == 8, ErrorCode::Io, "unsupported scalar width " + std::to_string(width));
  auto params = make_parameters<T>(net);
  std::uint32_t expected = 0;
  params.for_each_array([&](std::size_t, const ParamArray<T>&) { ++expected; });
  require(r.u32() == expected, ErrorCode::ParameterMismatch, "checkpoint array count does not match the network");

  params.for_each_array([&](std::size_t layer, ParamArray<T>& a) {
    require(r.u32() == layer, ErrorCode::ParameterMismatch, "checkpoint arrays out of declaration order");
    const auto name_len = r.u16();
    require(r.bytes(name_len) == a.name, ErrorCode::ParameterMismatch, "unexpected array name in layer " +
                                                                           std::to_string(layer));
    require((r.u8() != 0) == a.is_complex, ErrorCode::ParameterMismatch, "complex flag mismatch for " + a.name);
    a.decay = r.u8() != 0;
    const auto rank = r.u32();
    require(rank == a.shape.size(), ErrorCode::ParameterMismatch, "rank mismatch for " + a.name);
    for (auto d : a.shape) require(r.u64() == d, ErrorCode::ParameterMismatch, "shape mismatch for " + a.name);
    for (auto& v : a.values) v = static_cast<T>(width == 4 ? static_cast<double>(r.f32()) : r.f64());
  });
  const std::size_t body = r.position();
  const auto stored = r.bytes(32);
  const auto actual = sha256(bytes.substr(0, body));
  require(stored == std::string_view(reinterpret_cast<const char*>(actual.data()), actual.size()),
          ErrorCode::DigestMismatch, "checkpoint content digest mismatch");
  return {std::move(net), std::move(params)};
}

template <std::floating_point T>
void save_checkpoint(const std::string& path, const NetworkSpec& net, const ParameterSet<T>& params) {
  binary::write_file(path, encode_checkpoint(net, params));
}

template <std::floating_point T = float>
std::pair<NetworkSpec, ParameterSet<T>> load_checkpoint(const std::string& path) {
  return decode_checkpoint<T>(binary::read_file(path));
}

}  // namespace cvfp
