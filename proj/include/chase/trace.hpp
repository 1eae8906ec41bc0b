#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chase {

using Timestamp = std::int64_t;  // UTC epoch seconds

constexpr Timestamp kSecondsPerDay = 86400;

// Half-open time interval [start, end).
struct TimeWindow {
  Timestamp start = 0;
  Timestamp end = 0;
};

// Uniformly sampled carbon intensity series in g CO2/kWh. Sample k covers
// [start + k*interval, start + (k+1)*interval). Immutable once built.
class CarbonTrace {
 public:
  CarbonTrace(Timestamp start_time, std::int64_t interval,
              std::vector<double> intensities);

  Timestamp start_time() const { return start_time_; }
  std::int64_t interval() const { return interval_; }
  std::span<const double> intensities() const { return intensities_; }
  std::size_t size() const { return intensities_.size(); }
  double operator[](std::size_t k) const { return intensities_[k]; }

  Timestamp time_at(std::size_t k) const {
    return start_time_ + static_cast<Timestamp>(k) * interval_;
  }
  Timestamp end_time() const { return time_at(size()); }

  // Samples whose interval overlaps the window; throws InputError when empty.
  CarbonTrace slice(TimeWindow window) const;

  bool operator==(const CarbonTrace&) const = default;

 private:
  Timestamp start_time_;
  std::int64_t interval_;
  std::vector<double> intensities_;
};

enum class TraceFormat { kCsv, kJson };

TraceFormat format_from_path(std::string_view path);

struct ParseOptions {
  // Expected spacing; inferred (CSV) or read from interval_s (JSON) if unset.
  std::optional<std::int64_t> interval;
  // Forward-fill single missing steps with the previous value.
  bool fill_hold = false;
  // Called once per filled step with a human-readable message.
  std::function<void(const std::string&)> on_fill;
};

CarbonTrace parse_trace(std::string_view text, TraceFormat format,
                        const ParseOptions& options = {});

std::string serialize_trace(const CarbonTrace& trace, TraceFormat format);

CarbonTrace load_trace(const std::string& path, const ParseOptions& options = {});
void save_trace(const CarbonTrace& trace, const std::string& path);

struct FileSource {
  std::string path;
};

// Generic JSON endpoint: GET <url>?start=..&end=..&region=..
struct HttpSource {
  std::string url;
  std::string region;
};

using TraceSource = std::variant<FileSource, HttpSource>;

// Base URL override for HTTP sources.
constexpr const char* kEndpointEnvVar = "CHASE_TRACE_ENDPOINT";

CarbonTrace fetch_trace(const TraceSource& source, TimeWindow window);

// Zero-order hold lookup. Throws InputError outside the trace.
double intensity_at(const CarbonTrace& trace, Timestamp t);

// Maximum over samples overlapping the window.
double window_max(const CarbonTrace& trace, TimeWindow window);

}  // namespace chase
