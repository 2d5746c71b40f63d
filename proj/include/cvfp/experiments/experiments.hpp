#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvfp/core/architecture.hpp"
#include "cvfp/core/parameters.hpp"
#include "cvfp/data/dataset.hpp"
#include "cvfp/experiments/report.hpp"
#include "cvfp/sim/random.hpp"
#include "cvfp/train/trainer.hpp"

namespace cvfp {

/// Shared knobs of the scripted studies. Defaults are the desk scale; full_scale() switches to
/// 100 devices, 400/400 records and 200 epochs.
struct ExperimentConfig {
  std::size_t num_devices = 20;
  std::size_t wifi_devices = 19;
  std::size_t train_per_device = 100;
  std::size_t test_per_device = 50;
  std::uint64_t master_seed = 1;
  TrainConfig train = [] {
    TrainConfig t;
    t.epochs = 50;
    return t;
  }();
  ProfileDistribution profiles{};
  ImpairmentToggles toggles{};
  std::vector<double> pulse_taps = GenerationConfig{}.pulse_taps;
  bool random_carrier_phase = true;
  Activation activation = Activation::ModReLU;
  /// Natural SNR of the complex-vs-real and ID-robustness studies.
  SnrBand snr_band = SnrBand::High;
  /// Base pair of the noise-augmentation grid.
  SnrBand aug_train_band = SnrBand::High;
  SnrBand aug_test_band = SnrBand::Low;
  std::vector<double> train_aug = {10.0, 15.0, 20.0, 25.0, kNoNoise};
  std::vector<double> test_aug = {20.0, 50.0, 100.0, kNoNoise};
  bool shuffled_control = true;
  std::size_t jobs = 1;

  static ExperimentConfig full_scale() {
    ExperimentConfig c;
    c.num_devices = 100;
    c.train_per_device = 400;
    c.test_per_device = 400;
    c.train.epochs = 200;
    return c;
  }

  GenerationConfig generation(Protocol protocol, SnrBand band, InputMode mode) const {
    GenerationConfig g;
    g.protocol = protocol;
    g.num_devices = protocol == Protocol::Wifi ? wifi_devices : num_devices;
    g.train_per_device = train_per_device;
    g.test_per_device = test_per_device;
    g.snr_band = band;
    g.input_mode = mode;
    g.master_seed = master_seed;
    g.profiles = profiles;
    g.toggles = toggles;
    g.pulse_taps = pulse_taps;
    g.random_carrier_phase = random_carrier_phase;
    return g;
  }

  nlohmann::json to_json() const {
    auto levels = [](const std::vector<double>& v) {
      std::vector<std::string> out;
      for (double x : v) out.push_back(snr_label(x));
      return out;
    };
    const auto g = generation(Protocol::Adsb, snr_band, InputMode::preamble()).to_json();
    return {{"num_devices", num_devices},
            {"wifi_devices", wifi_devices},
            {"train_per_device", train_per_device},
            {"test_per_device", test_per_device},
            {"master_seed", master_seed},
            {"epochs", train.epochs},
            {"batch_size", train.batch_size},
            {"lr", train.adam.lr},
            {"beta1", train.adam.beta1},
            {"beta2", train.adam.beta2},
            {"eps", train.adam.eps},
            {"l2_lambda", train.l2_lambda},
            {"shuffle", train.shuffle},
            {"profiles", g.at("profiles")},
            {"toggles", g.at("toggles")},
            {"pulse_taps", pulse_taps},
            {"random_carrier_phase", random_carrier_phase},
            {"activation", std::string(to_string(activation))},
            {"snr_band", to_string(snr_band)},
            {"aug_train_band", to_string(aug_train_band)},
            {"aug_test_band", to_string(aug_test_band)},
            {"train_aug", levels(train_aug)},
            {"test_aug", levels(test_aug)},
            {"shuffled_control", shuffled_control}};
  }
};

using ProgressFn = std::function<void(const std::string&)>;

namespace detail {

inline std::uint64_t init_seed(const ExperimentConfig& c) { return derive_seed(c.master_seed, {seed_tag("init")}); }
inline std::uint64_t shuffle_seed(const ExperimentConfig& c) {
  return derive_seed(c.master_seed, {seed_tag("shuffle")});
}

inline void note(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

/// Runs independent jobs, at most `jobs` at a time; results come back in submission order.
template <class R>
std::vector<R> run_cells(std::vector<std::function<R()>> tasks, std::size_t jobs) {
  std::vector<R> out;
  out.reserve(tasks.size());
  if (jobs <= 1) {
    for (auto& t : tasks) out.push_back(t());
    return out;
  }
  std::vector<std::future<R>> running;
  std::size_t next = 0;
  std::vector<std::optional<R>> slots(tasks.size());
  std::vector<std::pair<std::size_t, std::future<R>>> active;
  while (next < tasks.size() || !active.empty()) {
    while (next < tasks.size() && active.size() < jobs) {
      active.emplace_back(next, std::async(std::launch::async, tasks[next]));
      ++next;
    }
    // Drain the oldest; keeps bookkeeping simple and order deterministic.
    auto [idx, fut] = std::move(active.front());
    active.erase(active.begin());
    slots[idx] = fut.get();
  }
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct CellResult {
  ScenarioRow row;
  TrainHistory history;
};

inline ScenarioRow describe_row(const std::string& scenario, const NetworkSpec& net, const Dataset& train,
                                const Dataset& test, const Evaluation& train_ev, const Evaluation& test_ev) {
  ScenarioRow row;
  row.scenario = scenario;
  row.architecture = describe(net);
  row.parameters = count_parameters(net);
  row.train_accuracy = train_ev.accuracy();
  row.test_accuracy = test_ev.accuracy();
  row.mode_s_accuracy = test_ev.packet_type_accuracy(PacketType::ModeS);
  row.extended_accuracy = test_ev.packet_type_accuracy(PacketType::ModeSExtended);
  row.train_digest = train.manifest.config_digest;
  row.test_digest = test.manifest.config_digest;
  return row;
}

/// Initializes from the shared init seed, trains with the shared shuffle seed, and scores both splits.
inline CellResult train_and_score(const std::string& scenario, const NetworkSpec& net, const Dataset& train_ds,
                                  const Dataset& test_ds, const ExperimentConfig& cfg) {
  Rng init(init_seed(cfg));
  auto params = initialize_parameters<float>(net, init);
  TrainConfig tc = cfg.train;
  tc.seed = shuffle_seed(cfg);
  auto trained = cvfp::train(net, std::move(params), train_ds, tc);
  const auto train_ev = evaluate(net, trained.params, train_ds);
  const auto test_ev = evaluate(net, trained.params, test_ds);
  return {describe_row(scenario, net, train_ds, test_ds, train_ev, test_ev), std::move(trained.history)};
}

inline double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Complex net against real2ch nets at 1x / 1.4x / 2x channels on identical preamble data,
/// for ADS-B and WiFi, plus a label-shuffled control.
inline ExperimentReport run_complex_vs_real(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.name = "complex_vs_real";
  report.config = cfg.to_json();
  report.seeds = {{"master", cfg.master_seed}, {"init", detail::init_seed(cfg)}, {"shuffle", detail::shuffle_seed(cfg)}};

  std::vector<std::function<detail::CellResult()>> tasks;
  std::vector<BuiltDatasets> data;
  data.reserve(2);
  for (auto protocol : {Protocol::Adsb, Protocol::Wifi}) {
    detail::note(progress, "generating " + to_string(protocol) + " preamble datasets");
    data.push_back(build_dataset(cfg.generation(protocol, cfg.snr_band, InputMode::preamble())));
  }
  const std::vector<std::pair<std::string, double>> nets = {
      {"complex", 0.0}, {"real-1x", 1.0}, {"real-1.4x", 1.4}, {"real-2x", 2.0}};
  for (std::size_t p = 0; p < 2; ++p) {
    const bool adsb = p == 0;
    const auto& d = data[p];
    const std::size_t classes = d.train.manifest.num_devices;
    const std::size_t reference_classes = adsb ? 100 : 19;
    for (const auto& [label, scale] : nets) {
      const auto make = [&, scale = scale](std::size_t k) {
        if (scale == 0.0) return adsb ? arch::adsb_complex(k, cfg.activation) : arch::wifi_complex(k, cfg.activation);
        return adsb ? arch::adsb_real(scale, k) : arch::wifi_real(scale, k);
      };
      const auto net = make(classes);
      const std::size_t reference_count = count_parameters(make(reference_classes));
      const std::string scenario = std::string(adsb ? "adsb/" : "wifi/") + label;
      tasks.push_back([&, net, scenario, reference_count] {
        detail::note(progress, "training " + scenario);
        auto r = detail::train_and_score(scenario, net, d.train, d.test, cfg);
        r.row.reference_parameters = reference_count;
        return r;
      });
    }
  }
  Dataset shuffled;
  if (cfg.shuffled_control) {
    shuffled = data[0].train;
    Rng rng(derive_seed(cfg.master_seed, {seed_tag("label-shuffle")}));
    for (std::size_t i = shuffled.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng() % i);
      std::swap(shuffled.records[i - 1].device_label, shuffled.records[j].device_label);
    }
    shuffled.manifest.augmentation.push_back("label-shuffle");
    report.seeds["label_shuffle"] = derive_seed(cfg.master_seed, {seed_tag("label-shuffle")});
    const auto net = arch::adsb_complex(data[0].train.manifest.num_devices, cfg.activation);
    tasks.push_back([&, net] {
      detail::note(progress, "training adsb/complex-shuffled-labels");
      return detail::train_and_score("adsb/complex-shuffled-labels", net, shuffled, data[0].test, cfg);
    });
  }
  for (auto& r : detail::run_cells(std::move(tasks), cfg.jobs)) report.add(std::move(r.row));
  report.wall_clock_seconds = detail::elapsed_since(t0);
  return report;
}

/// Post-preamble scenarios showing how exposed ID content inflates accuracy, plus the two
/// medium-SNR runs that separate ID-driven from fingerprint-driven accuracy.
inline ExperimentReport run_id_robustness(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.name = "id_robustness";
  report.config = cfg.to_json();
  report.seeds = {{"master", cfg.master_seed}, {"init", detail::init_seed(cfg)}, {"shuffle", detail::shuffle_seed(cfg)}};

  struct Scenario {
    std::string name;
    InputMode mode;
    SnrBand band;
    int net;  // 0 preamble net, 1 post-preamble net, 2 two-symbol kernel net
  };
  const SnrBand other = SnrBand::Medium;
  const std::vector<Scenario> scenarios = {
      {"no_offset", InputMode::with_offset(OffsetMode::Zero), cfg.snr_band, 1},
      {"random_offset", InputMode::with_offset(OffsetMode::Random), cfg.snr_band, 1},
      {"last_offset", InputMode::with_offset(OffsetMode::Last), cfg.snr_band, 1},
      {"preamble_only", InputMode::preamble(), cfg.snr_band, 0},
      {"delete_symbols_17_40", InputMode::delete_address(), cfg.snr_band, 1},
      {"kernel_2_symbols", InputMode::with_offset(OffsetMode::Zero), cfg.snr_band, 2},
      {"no_offset@" + to_string(other), InputMode::with_offset(OffsetMode::Zero), other, 1},
      {"preamble_only@" + to_string(other), InputMode::preamble(), other, 0},
  };

  // One dataset per (mode, band); the kernel-2 scenario reuses the no-offset data.
  std::map<std::string, BuiltDatasets> data;
  for (const auto& s : scenarios) {
    const auto key = to_string(s.mode) + "@" + to_string(s.band);
    if (data.count(key)) continue;
    detail::note(progress, "generating " + key);
    data.emplace(key, build_dataset(cfg.generation(Protocol::Adsb, s.band, s.mode)));
  }
  std::vector<std::function<detail::CellResult()>> tasks;
  for (const auto& s : scenarios) {
    const auto& d = data.at(to_string(s.mode) + "@" + to_string(s.band));
    const std::size_t classes = cfg.num_devices;
    const std::size_t length = d.train.records.front().iq.size();
    NetworkSpec net;
    if (s.net == 0) net = arch::adsb_complex(classes, cfg.activation);
    else if (s.net == 1) net = arch::post_preamble(classes, length, 100, 50, cfg.activation);
    else net = arch::post_preamble_two_symbol(classes, length, cfg.activation);
    tasks.push_back([&d, &cfg, &progress, net, name = s.name] {
      detail::note(progress, "training " + name);
      return detail::train_and_score(name, net, d.train, d.test, cfg);
    });
  }
  for (auto& r : detail::run_cells(std::move(tasks), cfg.jobs)) report.add(std::move(r.row));
  report.wall_clock_seconds = detail::elapsed_since(t0);
  return report;
}

/// Train on one natural SNR band, test on another, over the six off-diagonal pairs.
inline ExperimentReport run_snr_matrix(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.name = "snr_matrix";
  report.config = cfg.to_json();
  report.seeds = {{"master", cfg.master_seed}, {"init", detail::init_seed(cfg)}, {"shuffle", detail::shuffle_seed(cfg)}};

  std::map<SnrBand, BuiltDatasets> data;
  for (auto band : {SnrBand::Low, SnrBand::Medium, SnrBand::High}) {
    detail::note(progress, "generating preamble datasets @" + to_string(band));
    data.emplace(band, build_dataset(cfg.generation(Protocol::Adsb, band, InputMode::preamble())));
  }
  // (test, train) pairs, mismatched bands only.
  const std::vector<std::pair<SnrBand, SnrBand>> pairs = {
      {SnrBand::Low, SnrBand::High},    {SnrBand::Low, SnrBand::Medium}, {SnrBand::Medium, SnrBand::High},
      {SnrBand::Medium, SnrBand::Low},  {SnrBand::High, SnrBand::Medium}, {SnrBand::High, SnrBand::Low}};
  const auto net = arch::adsb_complex(cfg.num_devices, cfg.activation);
  std::vector<std::function<detail::CellResult()>> tasks;
  for (const auto& [test_band, train_band] : pairs) {
    const std::string name = "test=" + to_string(test_band) + "|train=" + to_string(train_band);
    const Dataset* tr = &data.at(train_band).train;
    const Dataset* te = &data.at(test_band).test;
    tasks.push_back([=, &cfg, &progress] {
      detail::note(progress, "training " + name);
      return detail::train_and_score(name, net, *tr, *te, cfg);
    });
  }
  for (auto& r : detail::run_cells(std::move(tasks), cfg.jobs)) report.add(std::move(r.row));
  report.wall_clock_seconds = detail::elapsed_since(t0);
  return report;
}

inline std::string aug_scenario(double train_aug, double test_aug) {
  return "train_aug=" + snr_label(train_aug) + "|test_aug=" + snr_label(test_aug);
}

/// Grid of train SNR_aug x test SNR_aug on a fixed base pair. One model per train level is
/// scored on every augmented test set; a separate unaugmented run is reported as "baseline".
inline ExperimentReport run_noise_aug_grid(const ExperimentConfig& cfg, const ProgressFn& progress = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.name = "noise_aug";
  report.config = cfg.to_json();
  report.seeds = {{"master", cfg.master_seed}, {"init", detail::init_seed(cfg)}, {"shuffle", detail::shuffle_seed(cfg)}};

  detail::note(progress, "generating base pair");
  const auto train_cfg = cfg.generation(Protocol::Adsb, cfg.aug_train_band, InputMode::preamble());
  const auto test_cfg = cfg.generation(Protocol::Adsb, cfg.aug_test_band, InputMode::preamble());
  const auto devices = draw_devices(train_cfg);
  const auto base_train = build_split(train_cfg, devices, Split::Train);
  const auto base_test = build_split(test_cfg, devices, Split::Test);

  const auto aug_seed = [&](const char* split, double level) {
    return derive_seed(cfg.master_seed, {seed_tag(split), std::bit_cast<std::uint64_t>(level)});
  };
  std::vector<Dataset> tests;
  for (double level : cfg.test_aug) {
    Rng rng(aug_seed("aug-test", level));
    tests.push_back(augment_noise(base_test, level, rng));
  }
  const auto net = arch::adsb_complex(cfg.num_devices, cfg.activation);

  struct TrainCell {
    std::vector<ScenarioRow> rows;
  };
  std::vector<std::function<TrainCell()>> tasks;
  for (double level : cfg.train_aug) {
    tasks.push_back([&, level] {
      detail::note(progress, "training train_aug=" + snr_label(level));
      Rng rng(aug_seed("aug-train", level));
      const auto train_ds = augment_noise(base_train, level, rng);
      Rng init(detail::init_seed(cfg));
      TrainConfig tc = cfg.train;
      tc.seed = detail::shuffle_seed(cfg);
      const auto trained = train(net, initialize_parameters<float>(net, init), train_ds, tc);
      const auto train_ev = evaluate(net, trained.params, train_ds);
      TrainCell cell;
      for (std::size_t t = 0; t < tests.size(); ++t) {
        auto row = detail::describe_row(aug_scenario(level, cfg.test_aug[t]), net, train_ds, tests[t], train_ev,
                                        evaluate(net, trained.params, tests[t]));
        cell.rows.push_back(std::move(row));
      }
      return cell;
    });
  }
  tasks.push_back([&] {
    detail::note(progress, "training unaugmented baseline");
    TrainCell cell;
    cell.rows.push_back(detail::train_and_score("baseline", net, base_train, base_test, cfg).row);
    return cell;
  });
  for (auto& cell : detail::run_cells(std::move(tasks), cfg.jobs))
    for (auto& row : cell.rows) report.add(std::move(row));
  report.seeds["aug_train"] = aug_seed("aug-train", 0.0);
  report.wall_clock_seconds = detail::elapsed_since(t0);
  return report;
}

}  // namespace cvfp
