#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cvfp/data/binary.hpp"
#include "cvfp/data/dataset.hpp"
#include "cvfp/data/digest.hpp"

namespace cvfp {

inline constexpr std::string_view kDatasetMagic = "CVFPDSET";

/// Layout (little-endian):
///   "CVFPDSET" | u32 version | u64 len + manifest JSON | u64 record count |
///   per record: u64 record_index, u32 label, u8 packet type, f64 natural SNR, f64 SNR_aug,
///               u32 samples, samples x (f32 I, f32 Q) |
///   32-byte SHA-256 of all preceding bytes.
inline std::string encode_dataset(const Dataset& ds) {
  binary::Writer w;
  w.bytes(kDatasetMagic);
  w.u32(ds.manifest.format_version);
  w.text(ds.manifest.to_json().dump());
  w.u64(ds.records.size());
  for (const auto& r : ds.records) {
    w.u64(r.record_index);
    w.u32(r.device_label);
    w.u8(static_cast<std::uint8_t>(r.packet_type));
    w.f64(r.natural_snr_db);
    w.f64(r.snr_aug_db);
    w.u32(static_cast<std::uint32_t>(r.iq.size()));
    for (const auto& z : r.iq) {
      w.f32(z.real());
      w.f32(z.imag());
    }
  }
  const auto digest = sha256(w.buffer());
  w.bytes(std::string_view(reinterpret_cast<const char*>(digest.data()), digest.size()));
  return w.buffer();
}

inline Dataset decode_dataset(std::string_view bytes) {
  binary::Reader r(bytes);
  require(r.bytes(kDatasetMagic.size()) == kDatasetMagic, ErrorCode::Io, "not a dataset file (bad magic)");
  const auto version = r.u32();
  require(version == kDatasetFormatVersion, ErrorCode::VersionMismatch,
          "dataset format version " + std::to_string(version) + ", expected " +
              std::to_string(kDatasetFormatVersion));
  Dataset ds;
  const auto manifest_text = r.text();
  nlohmann::json mj;
  try {
    mj = nlohmann::json::parse(manifest_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, std::string("dataset manifest is not valid JSON: ") + e.what());
  }
  ds.manifest = DatasetManifest::from_json(mj);
  require(ds.manifest.format_version == version, ErrorCode::VersionMismatch, "manifest and header versions differ");
  require(sha256_hex(ds.manifest.config_text) == ds.manifest.config_digest, ErrorCode::DigestMismatch,
          "manifest config digest does not match its config text");

  const auto count = r.u64();
  // Each record needs at least its 29-byte header; reject absurd counts before reserving.
  require(count <= r.remaining() / 29, ErrorCode::Truncated, "record count exceeds file size");
  ds.records.resize(static_cast<std::size_t>(count));
  for (auto& rec : ds.records) {
    rec.record_index = r.u64();
    rec.device_label = r.u32();
    const auto type = r.u8();
    require(type <= 2, ErrorCode::Io, "unknown packet type " + std::to_string(type));
    rec.packet_type = static_cast<PacketType>(type);
    rec.natural_snr_db = r.f64();
    rec.snr_aug_db = r.f64();
    const auto n = r.u32();
    require(n <= r.remaining() / 8, ErrorCode::Truncated, "record samples exceed file size");
    rec.iq.resize(n);
    for (auto& z : rec.iq) {
      const float re = r.f32();
      const float im = r.f32();
      z = {re, im};
    }
    require(rec.device_label < ds.manifest.num_devices, ErrorCode::Io, "record label exceeds device count");
  }
  const std::size_t body = r.position();
  const auto stored = r.bytes(32);
  const auto actual = sha256(bytes.substr(0, body));
  require(stored == std::string_view(reinterpret_cast<const char*>(actual.data()), actual.size()),
          ErrorCode::DigestMismatch, "dataset content digest mismatch");
  require(r.remaining() == 0, ErrorCode::Io, "trailing bytes after dataset digest");
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) { binary::write_file(path, encode_dataset(ds)); }

inline Dataset load_dataset(const std::string& path) { return decode_dataset(binary::read_file(path)); }

}  // namespace cvfp
