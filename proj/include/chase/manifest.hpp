#pragma once

#include <optional>
#include <string>

#include "chase/forecast.hpp"
#include "chase/simulator.hpp"

namespace chase {

// Everything needed to reproduce one simulate run. Paths are resolved
// relative to the manifest's directory.
struct RunManifest {
  std::string trace_path;
  std::string profile_path;
  std::uint64_t total_samples = 0;
  std::optional<Timestamp> start_time;  // default: trace start + fit window
  ForecasterSpec forecaster{};
  double eta = 0.5;
  std::optional<std::int64_t> period_s;      // default: trace interval
  std::optional<double> max_power_w;         // default: largest profiled limit
  std::optional<double> max_ci;              // default: max over the 24 h before start
  bool baseline = false;
  bool count_profiling = false;
  std::string out_dir = "out";
};

RunManifest parse_manifest(const std::string& text, const std::string& base_dir = ".");
RunManifest load_manifest(const std::string& path);

// Throws InputError when eta is out of range or a referenced file is missing.
void validate_manifest(const RunManifest& manifest);

}  // namespace chase
