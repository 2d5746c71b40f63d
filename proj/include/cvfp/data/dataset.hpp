#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvfp/core/error.hpp"
#include "cvfp/core/tensor.hpp"
#include "cvfp/data/digest.hpp"
#include "cvfp/sim/adsb.hpp"
#include "cvfp/sim/channel.hpp"
#include "cvfp/sim/impairments.hpp"
#include "cvfp/sim/random.hpp"
#include "cvfp/sim/waveform.hpp"
#include "cvfp/sim/wifi.hpp"

namespace cvfp {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

enum class Protocol { Adsb, Wifi };

inline std::string to_string(Protocol p) { return p == Protocol::Adsb ? "adsb" : "wifi"; }
inline Protocol protocol_from_string(std::string_view s) {
  if (s == "adsb") return Protocol::Adsb;
  if (s == "wifi") return Protocol::Wifi;
  throw Error(ErrorCode::Config, "unknown protocol '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Natural SNR bands. Records draw their SNR uniformly inside the band.

enum class SnrBand { Low, Medium, High, Clean };

struct SnrRange {
  double lo = 0.0;
  double hi = 0.0;
};

inline SnrRange snr_range(SnrBand band) {
  switch (band) {
    case SnrBand::Low: return {-2.0, 2.0};
    case SnrBand::Medium: return {2.0, 5.0};
    case SnrBand::High: return {5.0, 15.0};
    case SnrBand::Clean: return {kNoNoise, kNoNoise};
  }
  return {};
}

inline std::string to_string(SnrBand b) {
  switch (b) {
    case SnrBand::Low: return "low";
    case SnrBand::Medium: return "medium";
    case SnrBand::High: return "high";
    case SnrBand::Clean: return "clean";
  }
  return "clean";
}

inline SnrBand snr_band_from_string(std::string_view s) {
  if (s == "low") return SnrBand::Low;
  if (s == "medium") return SnrBand::Medium;
  if (s == "high") return SnrBand::High;
  if (s == "clean") return SnrBand::Clean;
  throw Error(ErrorCode::Config, "unknown SNR band '" + std::string(s) + "'");
}

/// Band label of a measured natural SNR: low < 2 dB, medium 2-5 dB, high > 5 dB.
inline std::string snr_band_label(double snr_db) {
  if (is_noiseless(snr_db)) return "clean";
  if (snr_db < 2.0) return "low";
  if (snr_db <= 5.0) return "medium";
  return "high";
}

// ---------------------------------------------------------------------------
// Which part of each packet a record keeps.

enum class InputKind { Preamble, Offset, DeleteSymbols };

struct InputMode {
  InputKind kind = InputKind::Preamble;
  OffsetMode offset = OffsetMode::Zero;

  static InputMode preamble() { return {InputKind::Preamble, OffsetMode::Zero}; }
  static InputMode with_offset(OffsetMode m) { return {InputKind::Offset, m}; }
  static InputMode delete_address() { return {InputKind::DeleteSymbols, OffsetMode::Zero}; }

  friend bool operator==(const InputMode&, const InputMode&) = default;
};

inline std::string to_string(const InputMode& m) {
  switch (m.kind) {
    case InputKind::Preamble: return "preamble";
    case InputKind::DeleteSymbols: return "delete_symbols:17-40";
    case InputKind::Offset:
      switch (m.offset) {
        case OffsetMode::Zero: return "offset:zero";
        case OffsetMode::Random: return "offset:random";
        case OffsetMode::Last: return "offset:last";
      }
  }
  return "preamble";
}

/// "full_packet" names the zero-offset window: Mode S whole, Extended cut to its first 64 symbols.
inline InputMode input_mode_from_string(std::string_view s) {
  if (s == "preamble") return InputMode::preamble();
  if (s == "full_packet" || s == "offset:zero") return InputMode::with_offset(OffsetMode::Zero);
  if (s == "offset:random") return InputMode::with_offset(OffsetMode::Random);
  if (s == "offset:last") return InputMode::with_offset(OffsetMode::Last);
  if (s == "delete_symbols" || s == "delete_symbols:17-40") return InputMode::delete_address();
  throw Error(ErrorCode::Config, "unknown input mode '" + std::string(s) + "'");
}

inline std::size_t record_length(Protocol protocol, const InputMode& m) {
  if (protocol == Protocol::Wifi || m.kind == InputKind::Preamble) return kPreambleSamples;
  if (m.kind == InputKind::DeleteSymbols)
    return (kModeSSymbols - (kIcaoLastSymbol - kIcaoFirstSymbol + 1)) * kSamplesPerSymbol;
  return kModeSSymbols * kSamplesPerSymbol;
}

// ---------------------------------------------------------------------------

/// Everything that determines the generated records. Its canonical JSON text is hashed into the
/// manifest digest.
struct GenerationConfig {
  Protocol protocol = Protocol::Adsb;
  std::size_t num_devices = 20;
  std::size_t train_per_device = 100;
  std::size_t test_per_device = 50;
  SnrBand snr_band = SnrBand::High;
  InputMode input_mode = InputMode::preamble();
  std::uint64_t master_seed = 1;
  ProfileDistribution profiles{};
  ImpairmentToggles toggles{};
  /// Transmit reconstruction filter applied to ADS-B pulse trains before the PA. Empty disables it.
  std::vector<double> pulse_taps = {0.1, 0.2, 0.4, 0.2, 0.1};
  /// Uniform carrier phase per record, as seen by an unsynchronized receiver.
  bool random_carrier_phase = true;

  nlohmann::json to_json() const {
    return {{"protocol", to_string(protocol)},
            {"num_devices", num_devices},
            {"train_per_device", train_per_device},
            {"test_per_device", test_per_device},
            {"snr_band", to_string(snr_band)},
            {"input_mode", to_string(input_mode)},
            {"master_seed", master_seed},
            {"profiles",
             {{"cfo_max_hz", profiles.cfo_max_hz},
              {"iq_gain_db_std", profiles.iq_gain_db_std},
              {"iq_phase_std_deg", profiles.iq_phase_std_deg},
              {"pa_a3_scale", profiles.pa_a3_scale},
              {"pa_a5_scale", profiles.pa_a5_scale},
              {"linewidth_max_hz", profiles.linewidth_max_hz}}},
            {"toggles",
             {{"pa", toggles.pa},
              {"iq_imbalance", toggles.iq_imbalance},
              {"cfo", toggles.cfo},
              {"phase_noise", toggles.phase_noise}}},
            {"pulse_taps", pulse_taps},
            {"random_carrier_phase", random_carrier_phase}};
  }

  std::string canonical_text() const { return to_json().dump(); }
  std::string digest() const { return sha256_hex(canonical_text()); }
};

struct SignalRecord {
  std::vector<std::complex<float>> iq;
  std::uint32_t device_label = 0;
  PacketType packet_type = PacketType::ModeS;
  double natural_snr_db = kNoNoise;
  double snr_aug_db = kNoNoise;
  /// Index into the per-device record stream; train and test use disjoint ranges.
  std::uint64_t record_index = 0;

  friend bool operator==(const SignalRecord&, const SignalRecord&) = default;
};

struct DatasetManifest {
  std::uint32_t format_version = kDatasetFormatVersion;
  std::string protocol;
  std::string split;
  std::size_t num_devices = 0;
  std::size_t train_per_device = 0;
  std::size_t test_per_device = 0;
  std::string snr_band;
  std::string input_mode;
  std::uint64_t master_seed = 0;
  std::string config_digest;
  std::string config_text;
  /// Noise-augmentation levels applied to this split, in order ("10", "inf", ...).
  std::vector<std::string> augmentation;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

  nlohmann::json to_json() const {
    return {{"format_version", format_version}, {"protocol", protocol},
            {"split", split},                   {"num_devices", num_devices},
            {"train_per_device", train_per_device}, {"test_per_device", test_per_device},
            {"snr_band", snr_band},             {"input_mode", input_mode},
            {"master_seed", master_seed},       {"config_digest", config_digest},
            {"config_text", config_text},       {"augmentation", augmentation}};
  }

  static DatasetManifest from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
      m.format_version = j.at("format_version").get<std::uint32_t>();
      m.protocol = j.at("protocol").get<std::string>();
      m.split = j.at("split").get<std::string>();
      m.num_devices = j.at("num_devices").get<std::size_t>();
      m.train_per_device = j.at("train_per_device").get<std::size_t>();
      m.test_per_device = j.at("test_per_device").get<std::size_t>();
      m.snr_band = j.at("snr_band").get<std::string>();
      m.input_mode = j.at("input_mode").get<std::string>();
      m.master_seed = j.at("master_seed").get<std::uint64_t>();
      m.config_digest = j.at("config_digest").get<std::string>();
      m.config_text = j.at("config_text").get<std::string>();
      m.augmentation = j.at("augmentation").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Io, std::string("malformed dataset manifest: ") + e.what());
    }
    return m;
  }
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<SignalRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DeviceSet {
  std::vector<DeviceProfile> profiles;
  std::vector<std::uint32_t> icao;
};

struct BuiltDatasets {
  Dataset train;
  Dataset test;
  DeviceSet devices;
};

enum class Split { Train, Test };

/// Shortest round-trip text of an SNR level ("10", "2.5", "inf").
inline std::string snr_label(double snr_db) {
  if (is_noiseless(snr_db)) return "inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, snr_db);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void check_generation(const GenerationConfig& cfg) {
  require(cfg.num_devices >= 2, ErrorCode::InvalidArgument, "at least two devices are required");
  require(cfg.num_devices < (1u << 24), ErrorCode::InvalidArgument, "too many devices for distinct ICAO addresses");
  if (cfg.protocol == Protocol::Wifi)
    require(cfg.input_mode.kind == InputKind::Preamble, ErrorCode::InvalidMode,
            "WiFi records are preamble-only; '" + to_string(cfg.input_mode) + "' needs ADS-B");
}

inline std::vector<std::complex<float>> to_float(const Waveform& w) {
  std::vector<std::complex<float>> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    out[i] = {static_cast<float>(w.iq[i].real()), static_cast<float>(w.iq[i].imag())};
  return out;
}

inline Waveform from_float(const std::vector<std::complex<float>>& iq) {
  Waveform w;
  w.iq.resize(iq.size());
  for (std::size_t i = 0; i < iq.size(); ++i) w.iq[i] = {iq[i].real(), iq[i].imag()};
  return w;
}

}  // namespace detail

/// Profiles and ICAO addresses, a function of the master seed and profile distribution only.
inline DeviceSet draw_devices(const GenerationConfig& cfg) {
  detail::check_generation(cfg);
  Rng rng(derive_seed(cfg.master_seed, {seed_tag("devices")}));
  DeviceSet set;
  std::set<std::uint32_t> used;
  std::uniform_int_distribution<std::uint32_t> address(0, (1u << 24) - 1);
  for (std::size_t d = 0; d < cfg.num_devices; ++d) {
    set.profiles.push_back(draw_profile(static_cast<std::uint32_t>(d), cfg.profiles, rng));
    std::uint32_t a = address(rng);
    while (!used.insert(a).second) a = address(rng);
    set.icao.push_back(a);
  }
  return set;
}

/// One received record: modulate, impair, rotate, add channel noise, cut the input window,
/// normalize. Seeded by (master, device, record index) so any record can be regenerated alone.
inline SignalRecord generate_record(const GenerationConfig& cfg, const DeviceSet& devices, std::uint32_t device,
                                    std::uint64_t record_index) {
  Rng rng(derive_seed(cfg.master_seed, {seed_tag("record"), device, record_index}));
  const auto& profile = devices.profiles.at(device);
  Waveform w;
  PacketType type = PacketType::WifiPreamble;
  if (cfg.protocol == Protocol::Adsb) {
    type = std::bernoulli_distribution(0.5)(rng) ? PacketType::ModeSExtended : PacketType::ModeS;
    w = ppm_modulate(gen_adsb_packet(type, devices.icao.at(device), rng));
    if (!cfg.pulse_taps.empty()) w = shape_pulses(w, cfg.pulse_taps);
  } else {
    w = gen_wifi_preamble();
  }
  w = apply_impairments(w, profile, rng, cfg.toggles);
  if (cfg.random_carrier_phase)
    w = rotate_phase(std::move(w), std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng));

  const auto range = snr_range(cfg.snr_band);
  const double snr = cfg.snr_band == SnrBand::Clean ? kNoNoise
                                                    : std::uniform_real_distribution<double>(range.lo, range.hi)(rng);
  w = awgn_channel(w, snr, rng);

  const auto& mode = cfg.input_mode;
  if (mode.kind == InputKind::Preamble) {
    w = extract_preamble(w);
  } else if (type == PacketType::ModeSExtended) {
    w = prune_extended(w, mode.kind == InputKind::Offset ? mode.offset : OffsetMode::Zero, rng);
  }
  if (mode.kind == InputKind::DeleteSymbols) w = delete_symbols(w, kIcaoFirstSymbol, kIcaoLastSymbol);
  w = normalize_power(std::move(w));

  SignalRecord r;
  r.iq = detail::to_float(w);
  r.device_label = device;
  r.packet_type = type;
  r.natural_snr_db = snr;
  r.record_index = record_index;
  return r;
}

/// One split. Train records use stream indices [0, train), test records [train, train + test).
inline Dataset build_split(const GenerationConfig& cfg, const DeviceSet& devices, Split split) {
  detail::check_generation(cfg);
  Dataset ds;
  auto& m = ds.manifest;
  m.protocol = to_string(cfg.protocol);
  m.split = split == Split::Train ? "train" : "test";
  m.num_devices = cfg.num_devices;
  m.train_per_device = cfg.train_per_device;
  m.test_per_device = cfg.test_per_device;
  m.snr_band = to_string(cfg.snr_band);
  m.input_mode = to_string(cfg.input_mode);
  m.master_seed = cfg.master_seed;
  m.config_text = cfg.canonical_text();
  m.config_digest = sha256_hex(m.config_text);

  const std::size_t first = split == Split::Train ? 0 : cfg.train_per_device;
  const std::size_t count = split == Split::Train ? cfg.train_per_device : cfg.test_per_device;
  ds.records.reserve(count * cfg.num_devices);
  for (std::size_t d = 0; d < cfg.num_devices; ++d)
    for (std::size_t r = 0; r < count; ++r)
      ds.records.push_back(generate_record(cfg, devices, static_cast<std::uint32_t>(d), first + r));
  return ds;
}

/// Train and test splits over one shared set of device profiles.
inline BuiltDatasets build_dataset(const GenerationConfig& cfg) {
  BuiltDatasets out;
  out.devices = draw_devices(cfg);
  out.train = build_split(cfg, out.devices, Split::Train);
  out.test = build_split(cfg, out.devices, Split::Test);
  return out;
}

/// Adds white Gaussian noise at snr_aug_db to every record, then restores unit power.
/// +inf returns the dataset unchanged.
inline Dataset augment_noise(const Dataset& ds, double snr_aug_db, Rng& rng) {
  if (is_noiseless(snr_aug_db)) return ds;
  require(std::isfinite(snr_aug_db), ErrorCode::InvalidArgument, "augmentation SNR must be finite or +inf");
  const std::uint64_t base = rng();
  Dataset out = ds;
  out.manifest.augmentation.push_back(snr_label(snr_aug_db));
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    Rng local(derive_seed(base, {i}));
    auto w = awgn_channel(detail::from_float(r.iq), snr_aug_db, local);
    r.iq = detail::to_float(normalize_power(std::move(w)));
    r.snr_aug_db = snr_aug_db;
  }
  return out;
}

/// (batch, 1, length) tensor from the listed records, which must share one length.
template <std::floating_point T>
ComplexTensor<T> make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  require(!indices.empty(), ErrorCode::InvalidArgument, "empty batch");
  const std::size_t length = ds.records.at(indices[0]).iq.size();
  ComplexTensor<T> batch(Shape3{indices.size(), 1, length});
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& iq = ds.records.at(indices[b]).iq;
    require(iq.size() == length, ErrorCode::ShapeMismatch, "records in a batch must share one length");
    for (std::size_t l = 0; l < length; ++l) {
      batch.re(b, 0, l) = static_cast<T>(iq[l].real());
      batch.im(b, 0, l) = static_cast<T>(iq[l].imag());
    }
  }
  return batch;
}

}  // namespace cvfp
