#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cvfp/experiments/experiments.hpp"
#include "cvfp/experiments/visualize.hpp"
#include "test_support.hpp"

using namespace cvfp;

namespace {

ExperimentConfig tiny() {
  ExperimentConfig c;
  c.num_devices = 3;
  c.wifi_devices = 3;
  c.train_per_device = 8;
  c.test_per_device = 4;
  c.train.epochs = 2;
  c.train.batch_size = 10;
  c.train_aug = {10.0, kNoNoise};
  c.test_aug = {20.0, kNoNoise};
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(ExperimentConfig, FullScale) {
  const auto c = ExperimentConfig::full_scale();
  EXPECT_EQ(c.num_devices, 100u);
  EXPECT_EQ(c.train_per_device, 400u);
  EXPECT_EQ(c.test_per_device, 400u);
  EXPECT_EQ(c.train.epochs, 200u);
  const ExperimentConfig d;
  EXPECT_EQ(d.num_devices, 20u);
  EXPECT_EQ(d.train.epochs, 50u);
}

TEST(ExperimentReport, RejectsDuplicateScenario) {
  ExperimentReport r;
  r.name = "x";
  ScenarioRow row;
  row.scenario = "a";
  r.add(row);
  EXPECT_THROW(r.add(row), Error);
  EXPECT_NE(r.find("a"), nullptr);
  EXPECT_EQ(r.find("b"), nullptr);
}

TEST(ComplexVsReal, RowsAndReferenceCounts) {
  const auto report = run_complex_vs_real(tiny());
  ASSERT_EQ(report.rows.size(), 9u);
  const std::vector<std::pair<std::string, std::size_t>> expected = {
      {"adsb/complex", 128400}, {"adsb/real-1x", 78400},   {"adsb/real-1.4x", 133680}, {"adsb/real-2x", 246600},
      {"wifi/complex", 216219}, {"wifi/real-1x", 116219}, {"wifi/real-1.4x", 217899}, {"wifi/real-2x", 430419}};
  for (const auto& [name, count] : expected) {
    const auto& row = report.at(name);
    ASSERT_TRUE(row.reference_parameters.has_value()) << name;
    EXPECT_EQ(*row.reference_parameters, count) << name;
  }
  // Same data for every net of one protocol.
  EXPECT_EQ(report.at("adsb/complex").train_digest, report.at("adsb/real-2x").train_digest);
  EXPECT_EQ(report.at("wifi/complex").test_digest, report.at("wifi/real-1x").test_digest);
  EXPECT_NE(report.at("adsb/complex").train_digest, report.at("wifi/complex").train_digest);
  EXPECT_TRUE(report.find("adsb/complex-shuffled-labels"));
}

TEST(ComplexVsReal, RerunIsIdentical) {
  auto cfg = tiny();
  cfg.shuffled_control = false;
  const auto a = run_complex_vs_real(cfg);
  const auto b = run_complex_vs_real(cfg);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.summary(), b.summary());
}

TEST(ComplexVsReal, ParallelMatchesSerial) {
  auto cfg = tiny();
  const auto serial = run_complex_vs_real(cfg);
  cfg.jobs = 3;
  const auto parallel = run_complex_vs_real(cfg);
  // jobs is echoed in neither file.
  EXPECT_EQ(serial.to_csv(), parallel.to_csv());
}

TEST(IdRobustness, ScenariosAndPerModeColumns) {
  const auto report = run_id_robustness(tiny());
  const std::vector<std::string> names = {"no_offset",        "random_offset",        "last_offset",
                                          "preamble_only",    "delete_symbols_17_40", "kernel_2_symbols",
                                          "no_offset@medium", "preamble_only@medium"};
  ASSERT_EQ(report.rows.size(), names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    EXPECT_EQ(report.rows[i].scenario, names[i]);
    EXPECT_TRUE(report.rows[i].mode_s_accuracy.has_value());
    EXPECT_TRUE(report.rows[i].extended_accuracy.has_value());
  }
  EXPECT_NE(report.at("no_offset").architecture, report.at("kernel_2_symbols").architecture);
  EXPECT_EQ(report.at("no_offset").train_digest, report.at("kernel_2_symbols").train_digest);
  EXPECT_NE(report.at("no_offset").train_digest, report.at("no_offset@medium").train_digest);
}

TEST(SnrMatrix, SixPairs) {
  const auto report = run_snr_matrix(tiny());
  ASSERT_EQ(report.rows.size(), 6u);
  EXPECT_EQ(report.rows[0].scenario, "test=low|train=high");
  EXPECT_EQ(report.at("test=medium|train=low").train_digest, report.at("test=high|train=low").train_digest);
}

TEST(NoiseAug, GridShapeAndBaseline) {
  auto cfg = tiny();
  cfg.train_aug = {10.0, 15.0, 20.0, 25.0, kNoNoise};
  cfg.test_aug = {20.0, 50.0, 100.0, kNoNoise};
  cfg.train.epochs = 1;
  const auto report = run_noise_aug_grid(cfg);
  ASSERT_EQ(report.rows.size(), 21u);
  const auto& infinf = report.at(aug_scenario(kNoNoise, kNoNoise));
  const auto& base = report.at("baseline");
  EXPECT_EQ(infinf.test_accuracy, base.test_accuracy);
  EXPECT_EQ(infinf.train_accuracy, base.train_accuracy);
  EXPECT_TRUE(report.find("train_aug=10|test_aug=20"));
}

TEST(ExperimentReport, WriteIsByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "cvfp_test_report";
  std::filesystem::remove_all(dir);
  auto cfg = tiny();
  const auto a = run_snr_matrix(cfg);
  a.write(dir / "a");
  const auto b = run_snr_matrix(cfg);
  b.write(dir / "b");
  EXPECT_EQ(slurp(dir / "a" / "snr_matrix.csv"), slurp(dir / "b" / "snr_matrix.csv"));
  EXPECT_EQ(slurp(dir / "a" / "snr_matrix_summary.txt"), slurp(dir / "b" / "snr_matrix_summary.txt"));
  EXPECT_NE(slurp(dir / "a" / "snr_matrix_summary.txt").find(a.rows[0].train_digest), std::string::npos);
  std::filesystem::remove_all(dir);
}

class Visualize : public ::testing::Test {
 protected:
  NetworkSpec net = arch::adsb_complex(5);
  ParameterSet<float> params = [this] {
    Rng rng(7);
    return initialize_parameters<float>(net, rng);
  }();
};

TEST_F(Visualize, UnitPowerAndMonotoneObjective) {
  Rng rng(3);
  VisualizeOptions opt;
  opt.steps = 20;
  for (std::size_t layer : {0u, 1u}) {
    const auto res = visualize_filters(net, params, layer, rng, opt);
    ASSERT_EQ(res.filters.size(), 100u);
    for (const auto& f : res.filters) {
      ASSERT_EQ(f.samples.size(), 320u);
      double p = 0.0;
      for (auto z : f.samples) p += std::norm(z);
      EXPECT_NEAR(p / 320.0, 1.0, 1e-9);
      ASSERT_EQ(f.objective.size(), opt.steps + 1);
      for (std::size_t s = 1; s < f.objective.size(); ++s) EXPECT_GE(f.objective[s], f.objective[s - 1]);
      EXPECT_GT(f.final_objective(), f.initial_objective());
    }
  }
}

TEST_F(Visualize, ReceptiveFields) {
  Rng rng(3);
  VisualizeOptions opt;
  opt.steps = 0;
  EXPECT_EQ(visualize_filters(net, params, 0, rng, opt).receptive_field, 40u);
  EXPECT_EQ(visualize_filters(net, params, 1, rng, opt).receptive_field, 120u);
}

TEST_F(Visualize, RejectsNonConvLayer) {
  Rng rng(3);
  try {
    visualize_filters(net, params, 2, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
  EXPECT_THROW(visualize_filters(net, params, 17, rng), Error);
  const auto real = arch::adsb_real(1.0, 5);
  Rng init(1);
  const auto rp = initialize_parameters<float>(real, init);
  EXPECT_THROW(visualize_filters(real, rp, 0, rng), Error);
}

TEST_F(Visualize, CsvLayout) {
  Rng rng(3);
  VisualizeOptions opt;
  opt.steps = 2;
  const auto res = visualize_filters(net, params, 0, rng, opt);
  const auto dir = std::filesystem::temp_directory_path() / "cvfp_test_visualize";
  std::filesystem::remove_all(dir);
  res.write(dir);
  const auto text = slurp(dir / "filter_000.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "index,I,Q,magnitude,phase");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 321);
  EXPECT_TRUE(std::filesystem::exists(dir / "filter_099.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "objective_summary.csv"));
  std::filesystem::remove_all(dir);
}
