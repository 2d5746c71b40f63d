#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvfp/core/architecture.hpp"
#include "cvfp/core/error.hpp"
#include "cvfp/data/dataset.hpp"
#include "cvfp/experiments/experiments.hpp"

namespace cvfp {

/// Everything a command needs, resolved from defaults, then a JSON file, then flags.
struct RunConfig {
  ExperimentConfig experiment{};
  Protocol protocol = Protocol::Adsb;
  InputMode input_mode = InputMode::preamble();
  /// Named architecture; ignored when custom_architecture is set.
  std::string architecture = "adsb-complex";
  std::optional<NetworkSpec> custom_architecture;
  /// Noise added by gen-data to the written train / test splits.
  double augment_train = kNoNoise;
  double augment_test = kNoNoise;
  bool full_scale = false;
  std::string output_dir = "out";

  GenerationConfig generation() const {
    return experiment.generation(protocol, experiment.snr_band, input_mode);
  }

  std::size_t classes() const {
    return protocol == Protocol::Wifi ? experiment.wifi_devices : experiment.num_devices;
  }

  /// The network for `classes` devices and records of `input_length` samples.
  NetworkSpec network(std::size_t classes, std::size_t input_length) const {
    if (custom_architecture) return *custom_architecture;
    const bool post = architecture.starts_with("postpreamble");
    return arch::by_name(architecture, classes, experiment.activation, post ? input_length : 0);
  }

  nlohmann::json to_json() const;
};

namespace detail {

inline nlohmann::json snr_json(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

inline double snr_from_json(const nlohmann::json& j, const std::string& key) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "Infinity" || s == "+inf") return kNoNoise;
    throw Error(ErrorCode::Config, "'" + key + "': expected a number or \"inf\", got \"" + s + "\"");
  }
  require(j.is_number(), ErrorCode::Config, "'" + key + "': expected a number or \"inf\"");
  return j.get<double>();
}

inline void only_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<std::string_view> keys) {
  require(j.is_object(), ErrorCode::Config, where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto k : keys) ok = ok || key == k;
    require(ok, ErrorCode::Config, "unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::Config, "'" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline nlohmann::json RunConfig::to_json() const {
  const auto& e = experiment;
  nlohmann::json aug_train = nlohmann::json::array(), aug_test = nlohmann::json::array();
  for (double v : e.train_aug) aug_train.push_back(detail::snr_json(v));
  for (double v : e.test_aug) aug_test.push_back(detail::snr_json(v));
  const auto g = generation().to_json();
  nlohmann::json j = {
      {"scale", full_scale ? "full" : "desk"},
      {"protocol", to_string(protocol)},
      {"num_devices", e.num_devices},
      {"wifi_devices", e.wifi_devices},
      {"train_per_device", e.train_per_device},
      {"test_per_device", e.test_per_device},
      {"snr_band", to_string(e.snr_band)},
      {"input_mode", to_string(input_mode)},
      {"activation", std::string(to_string(e.activation))},
      {"master_seed", e.master_seed},
      {"train",
       {{"epochs", e.train.epochs},
        {"batch_size", e.train.batch_size},
        {"lr", e.train.adam.lr},
        {"beta1", e.train.adam.beta1},
        {"beta2", e.train.adam.beta2},
        {"eps", e.train.adam.eps},
        {"l2_lambda", e.train.l2_lambda},
        {"shuffle", e.train.shuffle}}},
      {"profiles", g.at("profiles")},
      {"toggles", g.at("toggles")},
      {"pulse_taps", e.pulse_taps},
      {"random_carrier_phase", e.random_carrier_phase},
      {"augment_train", detail::snr_json(augment_train)},
      {"augment_test", detail::snr_json(augment_test)},
      {"train_aug", aug_train},
      {"test_aug", aug_test},
      {"aug_train_band", to_string(e.aug_train_band)},
      {"aug_test_band", to_string(e.aug_test_band)},
      {"shuffled_control", e.shuffled_control},
      {"jobs", e.jobs},
      {"output_dir", output_dir}};
  if (custom_architecture) j["architecture"] = cvfp::to_json(*custom_architecture);
  else j["architecture"] = architecture;
  return j;
}

/// Applies the keys present in `j` on top of `cfg`. Unknown keys are rejected.
inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  using detail::get_as;
  detail::only_keys(j, "config",
                    {"scale", "protocol", "num_devices", "wifi_devices", "train_per_device", "test_per_device",
                     "snr_band", "input_mode", "architecture", "activation", "master_seed", "train", "profiles",
                     "toggles", "pulse_taps", "random_carrier_phase", "augment_train", "augment_test", "train_aug",
                     "test_aug", "aug_train_band", "aug_test_band", "shuffled_control", "jobs", "output_dir"});
  auto& e = cfg.experiment;
  try {
    // Scale first so explicit counts in the same file win over it.
    if (j.contains("scale")) {
      const auto s = get_as<std::string>(j.at("scale"), "scale");
      require(s == "desk" || s == "full", ErrorCode::Config, "'scale' must be \"desk\" or \"full\"");
      if (s == "full" && !cfg.full_scale) {
        const auto p = ExperimentConfig::full_scale();
        e.num_devices = p.num_devices;
        e.train_per_device = p.train_per_device;
        e.test_per_device = p.test_per_device;
        e.train.epochs = p.train.epochs;
      }
      cfg.full_scale = s == "full";
    }
    for (const auto& [key, v] : j.items()) {
      if (key == "protocol") cfg.protocol = protocol_from_string(get_as<std::string>(v, key));
      else if (key == "num_devices") e.num_devices = get_as<std::size_t>(v, key);
      else if (key == "wifi_devices") e.wifi_devices = get_as<std::size_t>(v, key);
      else if (key == "train_per_device") e.train_per_device = get_as<std::size_t>(v, key);
      else if (key == "test_per_device") e.test_per_device = get_as<std::size_t>(v, key);
      else if (key == "snr_band") e.snr_band = snr_band_from_string(get_as<std::string>(v, key));
      else if (key == "input_mode") cfg.input_mode = input_mode_from_string(get_as<std::string>(v, key));
      else if (key == "activation") e.activation = activation_from_string(get_as<std::string>(v, key));
      else if (key == "master_seed") e.master_seed = get_as<std::uint64_t>(v, key);
      else if (key == "pulse_taps") e.pulse_taps = get_as<std::vector<double>>(v, key);
      else if (key == "random_carrier_phase") e.random_carrier_phase = get_as<bool>(v, key);
      else if (key == "augment_train") cfg.augment_train = detail::snr_from_json(v, key);
      else if (key == "augment_test") cfg.augment_test = detail::snr_from_json(v, key);
      else if (key == "aug_train_band") e.aug_train_band = snr_band_from_string(get_as<std::string>(v, key));
      else if (key == "aug_test_band") e.aug_test_band = snr_band_from_string(get_as<std::string>(v, key));
      else if (key == "shuffled_control") e.shuffled_control = get_as<bool>(v, key);
      else if (key == "jobs") e.jobs = get_as<std::size_t>(v, key);
      else if (key == "output_dir") cfg.output_dir = get_as<std::string>(v, key);
      else if (key == "train_aug" || key == "test_aug") {
        require(v.is_array() && !v.empty(), ErrorCode::Config, "'" + key + "' must be a non-empty array");
        std::vector<double> levels;
        for (const auto& x : v) levels.push_back(detail::snr_from_json(x, key));
        (key == "train_aug" ? e.train_aug : e.test_aug) = levels;
      } else if (key == "architecture") {
        if (v.is_string()) {
          cfg.architecture = v.get<std::string>();
          cfg.custom_architecture.reset();
        } else {
          cfg.custom_architecture = network_from_json(v);
        }
      } else if (key == "train") {
        detail::only_keys(v, "'train'", {"epochs", "batch_size", "lr", "beta1", "beta2", "eps", "l2_lambda", "shuffle"});
        for (const auto& [k, x] : v.items()) {
          const auto name = "train." + k;
          if (k == "epochs") e.train.epochs = get_as<std::size_t>(x, name);
          else if (k == "batch_size") e.train.batch_size = get_as<std::size_t>(x, name);
          else if (k == "lr") e.train.adam.lr = get_as<double>(x, name);
          else if (k == "beta1") e.train.adam.beta1 = get_as<double>(x, name);
          else if (k == "beta2") e.train.adam.beta2 = get_as<double>(x, name);
          else if (k == "eps") e.train.adam.eps = get_as<double>(x, name);
          else if (k == "l2_lambda") e.train.l2_lambda = get_as<double>(x, name);
          else if (k == "shuffle") e.train.shuffle = get_as<bool>(x, name);
        }
      } else if (key == "profiles") {
        detail::only_keys(v, "'profiles'",
                          {"cfo_max_hz", "iq_gain_db_std", "iq_phase_std_deg", "pa_a3_scale", "pa_a5_scale",
                           "linewidth_max_hz"});
        auto& p = e.profiles;
        for (const auto& [k, x] : v.items()) {
          const double d = get_as<double>(x, "profiles." + k);
          if (k == "cfo_max_hz") p.cfo_max_hz = d;
          else if (k == "iq_gain_db_std") p.iq_gain_db_std = d;
          else if (k == "iq_phase_std_deg") p.iq_phase_std_deg = d;
          else if (k == "pa_a3_scale") p.pa_a3_scale = d;
          else if (k == "pa_a5_scale") p.pa_a5_scale = d;
          else if (k == "linewidth_max_hz") p.linewidth_max_hz = d;
        }
      } else if (key == "toggles") {
        detail::only_keys(v, "'toggles'", {"pa", "iq_imbalance", "cfo", "phase_noise"});
        auto& t = e.toggles;
        for (const auto& [k, x] : v.items()) {
          const bool b = get_as<bool>(x, "toggles." + k);
          if (k == "pa") t.pa = b;
          else if (k == "iq_imbalance") t.iq_imbalance = b;
          else if (k == "cfo") t.cfo = b;
          else if (k == "phase_noise") t.phase_noise = b;
        }
      }
    }
  } catch (const Error& err) {
    if (err.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, err.message());
  }
}

/// Checks cross-field constraints once all layers are applied.
inline void validate(const RunConfig& cfg) {
  const auto& e = cfg.experiment;
  require(e.num_devices >= 1 && e.wifi_devices >= 1, ErrorCode::Config, "device counts must be at least 1");
  require(e.train_per_device >= 1 && e.test_per_device >= 1, ErrorCode::Config,
          "record counts per device must be at least 1");
  require(e.jobs >= 1, ErrorCode::Config, "jobs must be at least 1");
  for (double v : {cfg.augment_train, cfg.augment_test})
    require(!std::isnan(v) && v != -kNoNoise, ErrorCode::Config, "augmentation SNR must be finite or inf");
  for (const auto* levels : {&e.train_aug, &e.test_aug})
    for (double v : *levels)
      require(!std::isnan(v) && v != -kNoNoise, ErrorCode::Config, "augmentation SNR must be finite or inf");
  try {
    e.train.validate();
  } catch (const Error& err) {
    throw Error(ErrorCode::Config, err.message());
  }
  if (!cfg.custom_architecture) {
    const auto& names = arch::names();
    require(std::find(names.begin(), names.end(), cfg.architecture) != names.end(), ErrorCode::Config,
            "unknown architecture '" + cfg.architecture + "'");
  }
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open config " + path);
  std::ostringstream s;
  s << in.rdbuf();
  try {
    return nlohmann::json::parse(s.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
}

}  // namespace cvfp
