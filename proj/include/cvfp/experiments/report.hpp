#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cvfp/core/error.hpp"
#include "cvfp/data/binary.hpp"

namespace cvfp {

struct ScenarioRow {
  std::string scenario;
  std::string architecture;
  std::size_t parameters = 0;
  /// Count of the same architecture at the reference class count (100 ADS-B, 19 WiFi), when it differs.
  std::optional<std::size_t> reference_parameters;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::optional<double> mode_s_accuracy;
  std::optional<double> extended_accuracy;
  std::string train_digest;
  std::string test_digest;
};

/// Rows keyed by scenario, plus everything needed to regenerate them. Wall-clock time is kept
/// out of the written files so that reruns compare byte-identical.
struct ExperimentReport {
  std::string name;
  nlohmann::json config;
  std::vector<ScenarioRow> rows;
  std::map<std::string, std::uint64_t> seeds;
  double wall_clock_seconds = 0.0;

  void add(ScenarioRow row) {
    require(!find(row.scenario), ErrorCode::InvalidArgument, "scenario '" + row.scenario + "' reported twice");
    rows.push_back(std::move(row));
  }

  const ScenarioRow* find(const std::string& scenario) const {
    for (const auto& r : rows)
      if (r.scenario == scenario) return &r;
    return nullptr;
  }

  const ScenarioRow& at(const std::string& scenario) const {
    const auto* r = find(scenario);
    require(r != nullptr, ErrorCode::InvalidArgument, "report has no scenario '" + scenario + "'");
    return *r;
  }

  std::string to_csv() const {
    std::ostringstream os;
    os.precision(10);
    os << "scenario,architecture,parameters,reference_parameters,train_acc,test_acc,mode_s_acc,extended_acc,"
          "train_digest,test_digest\n";
    auto opt = [&](const std::optional<double>& v) {
      if (v) os << *v;
    };
    for (const auto& r : rows) {
      os << r.scenario << ',' << r.architecture << ',' << r.parameters << ',';
      if (r.reference_parameters) os << *r.reference_parameters;
      os << ',' << r.train_accuracy << ',' << r.test_accuracy << ',';
      opt(r.mode_s_accuracy);
      os << ',';
      opt(r.extended_accuracy);
      os << ',' << r.train_digest << ',' << r.test_digest << '\n';
    }
    return os.str();
  }

  std::string summary() const {
    std::ostringstream os;
    os.precision(4);
    os << "experiment: " << name << '\n';
    os << "seeds:";
    for (const auto& [k, v] : seeds) os << ' ' << k << '=' << v;
    os << "\n\n";
    std::size_t width = 8;
    for (const auto& r : rows) width = std::max(width, r.scenario.size());
    os << std::string(width, ' ') << "   train    test  mode_s     ext  params\n";
    for (const auto& r : rows) {
      os << r.scenario << std::string(width - r.scenario.size(), ' ');
      auto pct = [&](std::optional<double> v) {
        std::ostringstream c;
        c.setf(std::ios::fixed);
        c.precision(2);
        if (v) c << 100.0 * *v;
        else c << '-';
        const auto s = c.str();
        os << std::string(8 - std::min<std::size_t>(8, s.size()), ' ') << s;
      };
      pct(r.train_accuracy);
      pct(r.test_accuracy);
      pct(r.mode_s_accuracy);
      pct(r.extended_accuracy);
      os << "  " << r.parameters << '\n';
    }
    os << "\nconfig: " << config.dump() << '\n';
    os << "datasets:\n";
    std::map<std::string, std::string> digests;
    for (const auto& r : rows) {
      digests[r.train_digest] = "train";
      if (!digests.count(r.test_digest)) digests[r.test_digest] = "test";
    }
    for (const auto& [d, role] : digests) os << "  " << d << '\n';
    return os.str();
  }

  /// Writes <dir>/<name>.csv and <dir>/<name>_summary.txt.
  void write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    binary::write_file((dir / (name + ".csv")).string(), to_csv());
    binary::write_file((dir / (name + "_summary.txt")).string(), summary());
  }
};

}  // namespace cvfp
