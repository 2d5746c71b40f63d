#pragma once

// Needs CLI11: the single header under vendor/ or an installed <CLI/CLI.hpp>.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "cvfp/cli/config.hpp"
#include "cvfp/data/checkpoint.hpp"
#include "cvfp/data/dataset_file.hpp"
#include "cvfp/experiments/experiments.hpp"
#include "cvfp/experiments/visualize.hpp"
#include "cvfp/train/trainer.hpp"

namespace cvfp {

namespace fs = std::filesystem;

/// Values given on the command line; each one present replaces the config value.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> devices, wifi_devices, train_per_device, test_per_device, epochs, batch_size, jobs;
  std::optional<double> lr;
  std::optional<std::string> protocol, snr_band, input_mode, architecture, activation, out;
  std::optional<std::string> augment_train, augment_test;
  bool full_scale = false;
};

namespace detail {

inline void write_text(const fs::path& path, const std::string& text) {
  binary::write_file(path.string(), text);
}

inline double parse_snr_flag(const std::string& s, const std::string& flag) {
  if (s == "inf") return kNoNoise;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    require(used == s.size(), ErrorCode::Config, "");
    return v;
  } catch (...) {
    throw Error(ErrorCode::Config, flag + ": expected a number or inf, got '" + s + "'");
  }
}

inline RunConfig resolve(const std::string& config_path, const Overrides& o) {
  RunConfig cfg;
  if (o.full_scale) apply_json(cfg, {{"scale", "full"}});
  if (!config_path.empty()) apply_json(cfg, read_json_file(config_path));
  auto& e = cfg.experiment;
  try {
    if (o.seed) e.master_seed = *o.seed;
    if (o.devices) e.num_devices = *o.devices;
    if (o.wifi_devices) e.wifi_devices = *o.wifi_devices;
    if (o.train_per_device) e.train_per_device = *o.train_per_device;
    if (o.test_per_device) e.test_per_device = *o.test_per_device;
    if (o.epochs) e.train.epochs = *o.epochs;
    if (o.batch_size) e.train.batch_size = *o.batch_size;
    if (o.jobs) e.jobs = *o.jobs;
    if (o.lr) e.train.adam.lr = *o.lr;
    if (o.protocol) cfg.protocol = protocol_from_string(*o.protocol);
    if (o.snr_band) e.snr_band = snr_band_from_string(*o.snr_band);
    if (o.input_mode) cfg.input_mode = input_mode_from_string(*o.input_mode);
    if (o.activation) e.activation = activation_from_string(*o.activation);
    if (o.architecture) {
      cfg.architecture = *o.architecture;
      cfg.custom_architecture.reset();
    }
    if (o.out) cfg.output_dir = *o.out;
    if (o.augment_train) cfg.augment_train = parse_snr_flag(*o.augment_train, "--augment-train");
    if (o.augment_test) cfg.augment_test = parse_snr_flag(*o.augment_test, "--augment-test");
  } catch (const Error& err) {
    if (err.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, err.message());
  }
  validate(cfg);
  return cfg;
}

inline fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
  write_text(dir / "resolved_config.json", cfg.to_json().dump(2) + "\n");
  return dir;
}

inline std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

inline std::string evaluation_csv(const Evaluation& ev) {
  std::ostringstream os;
  os << std::setprecision(17) << "group,key,correct,total,accuracy\n";
  os << "overall,all," << ev.overall.correct << ',' << ev.overall.total << ',' << ev.accuracy() << '\n';
  for (const auto& [k, c] : ev.by_packet_type)
    os << "packet_type," << k << ',' << c.correct << ',' << c.total << ',' << c.accuracy() << '\n';
  for (const auto& [k, c] : ev.by_snr_band)
    os << "snr_band," << k << ',' << c.correct << ',' << c.total << ',' << c.accuracy() << '\n';
  return os.str();
}

inline void add_run_options(CLI::App* cmd, std::string& config, Overrides& o) {
  cmd->add_option("-c,--config", config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--devices", o.devices, "number of ADS-B devices");
  cmd->add_option("--wifi-devices", o.wifi_devices, "number of WiFi devices");
  cmd->add_option("--train-per-device", o.train_per_device, "train records per device");
  cmd->add_option("--test-per-device", o.test_per_device, "test records per device");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--batch-size", o.batch_size, "minibatch size");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--protocol", o.protocol, "adsb or wifi");
  cmd->add_option("--snr-band", o.snr_band, "low, medium, high or clean");
  cmd->add_option("--input-mode", o.input_mode, "preamble, offset:zero|random|last, delete_symbols");
  cmd->add_option("--arch", o.architecture, "named architecture");
  cmd->add_option("--activation", o.activation, "modrelu, crelu or none");
  cmd->add_option("--augment-train", o.augment_train, "SNR_aug of the written train split (dB or inf)");
  cmd->add_option("--augment-test", o.augment_test, "SNR_aug of the written test split (dB or inf)");
  cmd->add_option("-o,--out", o.out, "output directory");
}

}  // namespace detail

inline void cmd_gen_data(const RunConfig& cfg, std::ostream& out) {
  const auto dir = detail::prepare_output(cfg);
  auto built = build_dataset(cfg.generation());
  auto apply = [&](Dataset& ds, double level, const char* tag) {
    if (is_noiseless(level)) return;
    Rng rng(derive_seed(cfg.experiment.master_seed, {seed_tag(tag), std::bit_cast<std::uint64_t>(level)}));
    ds = augment_noise(ds, level, rng);
  };
  apply(built.train, cfg.augment_train, "aug-train");
  apply(built.test, cfg.augment_test, "aug-test");
  save_dataset(built.train, (dir / "train.cvfpds").string());
  save_dataset(built.test, (dir / "test.cvfpds").string());
  detail::write_text(dir / "manifest_train.json", built.train.manifest.to_json().dump(2) + "\n");
  detail::write_text(dir / "manifest_test.json", built.test.manifest.to_json().dump(2) + "\n");
  out << "wrote " << built.train.size() << " train and " << built.test.size() << " test records to "
      << dir.string() << " (digest " << built.train.manifest.config_digest << ")\n";
}

inline void cmd_train(const RunConfig& cfg, const std::string& train_path, const std::string& test_path,
                      std::ostream& out) {
  const auto train_ds = load_dataset(train_path);
  std::optional<Dataset> test_ds;
  if (!test_path.empty()) test_ds = load_dataset(test_path);
  require(!train_ds.empty(), ErrorCode::InvalidArgument, "training set is empty");
  const auto net = cfg.network(train_ds.manifest.num_devices, train_ds.records.front().iq.size());
  const auto dir = detail::prepare_output(cfg);
  Rng init(detail::init_seed(cfg.experiment));
  TrainConfig tc = cfg.experiment.train;
  tc.seed = detail::shuffle_seed(cfg.experiment);
  auto result = train(net, initialize_parameters<float>(net, init), train_ds, tc, test_ds ? &*test_ds : nullptr);
  save_checkpoint((dir / "checkpoint.cvfpck").string(), net, result.params);
  detail::write_text(dir / "history.csv", result.history.to_csv());
  nlohmann::json inputs = {{"train", train_path}, {"train_digest", train_ds.manifest.config_digest},
                           {"architecture", describe(net)}};
  if (test_ds) {
    inputs["test"] = test_path;
    inputs["test_digest"] = test_ds->manifest.config_digest;
  }
  detail::write_text(dir / "inputs.json", inputs.dump(2) + "\n");
  const auto& last = result.history.epochs.back();
  out << std::setprecision(6) << "trained " << describe(net) << " for " << tc.epochs << " epochs: train acc "
      << last.train_accuracy;
  if (last.test_accuracy) out << ", test acc " << *last.test_accuracy;
  out << "\n";
}

inline void cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& out_dir,
                     std::ostream& out) {
  const auto [net, params] = load_checkpoint<float>(checkpoint);
  const auto ds = load_dataset(data);
  const auto ev = evaluate(net, params, ds);
  const auto csv = detail::evaluation_csv(ev);
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    require(!ec, ErrorCode::Io, "cannot create output directory " + out_dir);
    const nlohmann::json resolved = {{"checkpoint", checkpoint},
                                     {"data", data},
                                     {"data_digest", ds.manifest.config_digest},
                                     {"architecture", describe(net)}};
    detail::write_text(fs::path(out_dir) / "resolved_config.json", resolved.dump(2) + "\n");
    detail::write_text(fs::path(out_dir) / "eval.csv", csv);
  }
  out << csv;
}

inline void cmd_experiment(const std::string& name, const RunConfig& cfg, bool quiet, std::ostream& out,
                           std::ostream& err) {
  const ProgressFn progress = quiet ? ProgressFn{} : ProgressFn([&err](const std::string& s) { err << s << "\n"; });
  ExperimentReport report;
  if (name == "complex-vs-real") report = run_complex_vs_real(cfg.experiment, progress);
  else if (name == "id-robustness") report = run_id_robustness(cfg.experiment, progress);
  else if (name == "snr-matrix") report = run_snr_matrix(cfg.experiment, progress);
  else if (name == "noise-aug") report = run_noise_aug_grid(cfg.experiment, progress);
  else throw Error(ErrorCode::Config, "unknown experiment '" + name + "'");
  const auto dir = detail::prepare_output(cfg);
  report.write(dir);
  out << report.summary();
  out << std::fixed << std::setprecision(1) << "wall clock " << report.wall_clock_seconds << " s\n";
}

inline void cmd_visualize(const std::string& checkpoint, std::size_t layer, std::size_t steps, std::uint64_t seed,
                          const std::string& out_dir, std::ostream& out) {
  const auto [net, params] = load_checkpoint<float>(checkpoint);
  Rng rng(derive_seed(seed, {seed_tag("visualize"), layer}));
  VisualizeOptions opt;
  opt.steps = steps;
  const auto res = visualize_filters(net, params, layer, rng, opt);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  require(!ec, ErrorCode::Io, "cannot create output directory " + out_dir);
  res.write(out_dir);
  const nlohmann::json resolved = {
      {"checkpoint", checkpoint}, {"layer", layer}, {"steps", steps}, {"seed", seed}, {"step_size", opt.step_size}};
  detail::write_text(fs::path(out_dir) / "resolved_config.json", resolved.dump(2) + "\n");
  out << "wrote " << res.filters.size() << " filter waveforms (receptive field " << res.receptive_field
      << " samples) to " << out_dir << "\n";
}

/// Parses argv, runs one command, and returns the process exit code. Diagnostics are one line
/// on `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Complex-valued CNN RF fingerprinting toolkit", "cvfp"};
  app.require_subcommand(1);

  std::string config, train_path, test_path, checkpoint, data, eval_out, vis_out, experiment_name, arch_name;
  Overrides gen_o, train_o, exp_o;
  bool quiet = false;
  std::size_t layer = 0, steps = 200, classes = 0, input_length = 0;
  std::uint64_t vis_seed = 1;

  auto* gen = app.add_subcommand("gen-data", "generate train/test dataset files");
  detail::add_run_options(gen, config, gen_o);

  auto* tr = app.add_subcommand("train", "train a network on a dataset file");
  detail::add_run_options(tr, config, train_o);
  tr->add_option("--train", train_path, "training dataset file")->required()->check(CLI::ExistingFile);
  tr->add_option("--test", test_path, "held-out dataset file")->check(CLI::ExistingFile);

  auto* ev = app.add_subcommand("eval", "score a checkpoint on a dataset file");
  ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", data, "dataset file")->required()->check(CLI::ExistingFile);
  ev->add_option("-o,--out", eval_out, "output directory for eval.csv");

  auto* ex = app.add_subcommand("experiment", "run a scripted study");
  ex->add_option("name", experiment_name, "complex-vs-real, id-robustness, snr-matrix or noise-aug")
      ->required()
      ->check(CLI::IsMember({"complex-vs-real", "id-robustness", "snr-matrix", "noise-aug"}));
  detail::add_run_options(ex, config, exp_o);
  ex->add_option("-j,--jobs", exp_o.jobs, "concurrent trainings");
  ex->add_flag("--full-scale", exp_o.full_scale, "100 devices, 400/400 records, 200 epochs");
  ex->add_flag("-q,--quiet", quiet, "no progress lines");

  auto* vis = app.add_subcommand("visualize", "gradient-ascent filter waveforms from a checkpoint");
  vis->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  vis->add_option("--layer", layer, "complex convolution layer index")->capture_default_str();
  vis->add_option("--steps", steps, "ascent steps")->capture_default_str();
  vis->add_option("--seed", vis_seed, "noise seed")->capture_default_str();
  vis->add_option("-o,--out", vis_out, "output directory")->required();

  auto* par = app.add_subcommand("params", "print the real parameter count of an architecture");
  par->add_option("architecture", arch_name, "architecture name")->required();
  par->add_option("--classes", classes, "output classes (default: 100 for ADS-B, 19 for WiFi)");
  par->add_option("--input-length", input_length, "input samples for post-preamble networks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests surface here too.
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return 0;
    }
    err << "cvfp: error: " << detail::one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*gen) {
      cmd_gen_data(detail::resolve(config, gen_o), out);
    } else if (*tr) {
      cmd_train(detail::resolve(config, train_o), train_path, test_path, out);
    } else if (*ev) {
      cmd_eval(checkpoint, data, eval_out, out);
    } else if (*ex) {
      cmd_experiment(experiment_name, detail::resolve(config, exp_o), quiet, out, err);
    } else if (*vis) {
      cmd_visualize(checkpoint, layer, steps, vis_seed, vis_out, out);
    } else if (*par) {
      const std::size_t k = classes ? classes : arch::default_classes(arch_name);
      out << count_parameters(arch::by_name(arch_name, k, Activation::ModReLU, input_length)) << "\n";
    }
  } catch (const std::exception& e) {
    err << "cvfp: error: " << detail::one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace cvfp
