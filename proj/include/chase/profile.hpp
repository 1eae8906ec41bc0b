#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace chase {

using PowerLimit = std::int64_t;  // W

struct ProfileEntry {
  PowerLimit limit = 0;
  double avg_power = 0.0;   // W
  double throughput = 0.0;  // samples/s

  bool operator==(const ProfileEntry&) const = default;
};

// Measured power draw and training throughput per allowed power limit,
// ordered by limit. Immutable once built.
class PowerProfile {
 public:
  // Measured average power may exceed the cap by at most this factor.
  static constexpr double kCapTolerance = 1.05;

  PowerProfile(std::string gpu, std::vector<ProfileEntry> entries);

  const std::string& gpu() const { return gpu_; }
  std::span<const ProfileEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const ProfileEntry& operator[](std::size_t k) const { return entries_[k]; }

  const ProfileEntry& at(PowerLimit limit) const;
  bool contains(PowerLimit limit) const;
  PowerLimit min_limit() const { return entries_.front().limit; }
  PowerLimit max_limit() const { return entries_.back().limit; }

  bool operator==(const PowerProfile&) const = default;

 private:
  std::string gpu_;
  std::vector<ProfileEntry> entries_;
};

PowerProfile parse_profile(const std::string& text);
std::string serialize_profile(const PowerProfile& profile);
PowerProfile load_profile(const std::string& path);
void save_profile(const PowerProfile& profile, const std::string& path);

// J/sample at a profiled limit.
double energy_per_sample(const PowerProfile& profile, PowerLimit limit);

// Ground-truth behaviour of a GPU under power capping, used in place of real
// measurements.
struct SimulatedGpu {
  std::string name;
  PowerLimit min_limit = 0;
  PowerLimit max_limit = 0;
  std::function<double(double)> power_curve;       // limit -> average W
  std::function<double(double)> throughput_curve;  // limit -> samples/s
};

// 300 W part with avg power 0.97*limit and throughput 850*(1 - exp(-limit/120)).
SimulatedGpu default_gpu();

// {100, 125, ..., 300}
std::vector<PowerLimit> default_power_limits();

struct ProfilingNoise {
  double relative_sigma = 0.0;
  std::uint64_t seed = 0;
};

PowerProfile profile_gpu(const SimulatedGpu& gpu, std::span<const PowerLimit> limits,
                         const ProfilingNoise& noise = {});

}  // namespace chase
