#include "chase/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "chase/error.hpp"

namespace chase {

PowerProfile::PowerProfile(std::string gpu, std::vector<ProfileEntry> entries)
    : gpu_(std::move(gpu)), entries_(std::move(entries)) {
  if (entries_.size() < 2) throw InputError("profile needs at least 2 entries");
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    const auto& e = entries_[k];
    const std::string where = " at entry " + std::to_string(k);
    if (e.limit <= 0) throw InputError("non-positive power limit" + where);
    if (k > 0 && e.limit == entries_[k - 1].limit) {
      throw InputError("duplicate limit " + std::to_string(e.limit) + where);
    }
    if (k > 0 && e.limit < entries_[k - 1].limit) {
      throw InputError("limits must be strictly increasing" + where);
    }
    if (!std::isfinite(e.avg_power) || !(e.avg_power > 0)) {
      throw InputError("non-positive average power" + where);
    }
    if (e.avg_power > static_cast<double>(e.limit) * kCapTolerance) {
      throw InputError("average power exceeds limit by more than 5%" + where);
    }
    if (!std::isfinite(e.throughput) || !(e.throughput > 0)) {
      throw InputError("non-positive throughput" + where);
    }
  }
}

const ProfileEntry& PowerProfile::at(PowerLimit limit) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), limit,
                             [](const ProfileEntry& e, PowerLimit l) { return e.limit < l; });
  if (it == entries_.end() || it->limit != limit) {
    throw InputError("power limit " + std::to_string(limit) + " W not in profile");
  }
  return *it;
}

bool PowerProfile::contains(PowerLimit limit) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [limit](const ProfileEntry& e) { return e.limit == limit; });
}

PowerProfile parse_profile(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed profile JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
    throw InputError("profile requires array field 'entries'");
  }
  std::vector<ProfileEntry> entries;
  std::size_t k = 0;
  for (const auto& item : doc["entries"]) {
    if (!item.is_object() || !item.contains("limit_w") || !item["limit_w"].is_number_integer() ||
        !item.contains("avg_power_w") || !item["avg_power_w"].is_number() ||
        !item.contains("throughput_sps") || !item["throughput_sps"].is_number()) {
      throw InputError("malformed profile entry " + std::to_string(k));
    }
    entries.push_back({item["limit_w"].get<PowerLimit>(), item["avg_power_w"].get<double>(),
                       item["throughput_sps"].get<double>()});
    ++k;
  }
  return PowerProfile(doc.value("gpu", std::string{}), std::move(entries));
}

std::string serialize_profile(const PowerProfile& profile) {
  nlohmann::json doc;
  doc["gpu"] = profile.gpu();
  auto& arr = doc["entries"] = nlohmann::json::array();
  for (const auto& e : profile.entries()) {
    arr.push_back({{"limit_w", e.limit}, {"avg_power_w", e.avg_power}, {"throughput_sps", e.throughput}});
  }
  return doc.dump(2) + "\n";
}

PowerProfile load_profile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_profile(ss.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void save_profile(const PowerProfile& profile, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << serialize_profile(profile);
}

double energy_per_sample(const PowerProfile& profile, PowerLimit limit) {
  const auto& e = profile.at(limit);
  return e.avg_power / e.throughput;
}

SimulatedGpu default_gpu() {
  return {"sim-a40", 100, 300, [](double p) { return 0.97 * p; },
          [](double p) { return 850.0 * (1.0 - std::exp(-p / 120.0)); }};
}

std::vector<PowerLimit> default_power_limits() {
  std::vector<PowerLimit> out;
  for (PowerLimit p = 100; p <= 300; p += 25) out.push_back(p);
  return out;
}

PowerProfile profile_gpu(const SimulatedGpu& gpu, std::span<const PowerLimit> limits,
                         const ProfilingNoise& noise) {
  if (noise.relative_sigma < 0) throw InputError("noise sigma must be non-negative");
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<ProfileEntry> entries;
  entries.reserve(limits.size());
  for (PowerLimit limit : limits) {
    if (limit < gpu.min_limit || limit > gpu.max_limit) {
      throw InputError("power limit " + std::to_string(limit) + " W outside [" +
                       std::to_string(gpu.min_limit) + "," + std::to_string(gpu.max_limit) + "]");
    }
    const auto p = static_cast<double>(limit);
    double power = gpu.power_curve(p);
    double thr = gpu.throughput_curve(p);
    if (noise.relative_sigma > 0) {
      power *= std::max(1.0 + noise.relative_sigma * gauss(rng), 0.01);
      thr *= std::max(1.0 + noise.relative_sigma * gauss(rng), 0.01);
      power = std::min(power, p * PowerProfile::kCapTolerance);
    }
    entries.push_back({limit, power, thr});
  }
  return PowerProfile(gpu.name, std::move(entries));
}

}  // namespace chase
