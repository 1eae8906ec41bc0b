#include "chase/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "chase/error.hpp"
#include "chase/numfmt.hpp"

namespace chase {

namespace {

constexpr std::string_view kCsvHeader = "timestamp,intensity_gco2_kwh";

struct RawPoint {
  Timestamp t;
  double ci;
  std::size_t row;  // position in the source document
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

void check_intensity(double ci, std::size_t row) {
  if (!std::isfinite(ci)) {
    throw InputError("non-finite intensity at row " + std::to_string(row));
  }
  if (ci < 0.0) {
    throw InputError("negative intensity at row " + std::to_string(row));
  }
}

std::vector<RawPoint> read_csv(std::string_view text) {
  std::vector<RawPoint> points;
  bool header_seen = false;
  std::size_t row = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kCsvHeader) {
        throw InputError("expected CSV header '" + std::string(kCsvHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw InputError("malformed row " + std::to_string(row) + ": missing ','");
    }
    std::string_view ts = trim(line.substr(0, comma));
    std::string_view cs = trim(line.substr(comma + 1));
    RawPoint p{0, 0.0, row};
    auto r1 = std::from_chars(ts.data(), ts.data() + ts.size(), p.t);
    if (r1.ec != std::errc{} || r1.ptr != ts.data() + ts.size()) {
      throw InputError("malformed timestamp at row " + std::to_string(row));
    }
    auto r2 = std::from_chars(cs.data(), cs.data() + cs.size(), p.ci);
    if (r2.ec != std::errc{} || r2.ptr != cs.data() + cs.size()) {
      throw InputError("malformed intensity at row " + std::to_string(row));
    }
    check_intensity(p.ci, row);
    points.push_back(p);
    ++row;
  }
  if (!header_seen) throw InputError("empty trace document");
  return points;
}

std::vector<RawPoint> read_json(std::string_view text, std::optional<std::int64_t>& interval) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("malformed JSON trace: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("interval_s") || !doc["interval_s"].is_number_integer()) {
    throw InputError("JSON trace requires integer field 'interval_s'");
  }
  auto declared = doc["interval_s"].get<std::int64_t>();
  if (interval && *interval != declared) {
    throw InputError("interval_s " + std::to_string(declared) + " does not match expected " +
                     std::to_string(*interval));
  }
  interval = declared;
  if (!doc.contains("points") || !doc["points"].is_array()) {
    throw InputError("JSON trace requires array field 'points'");
  }
  std::vector<RawPoint> points;
  std::size_t row = 0;
  for (const auto& item : doc["points"]) {
    if (!item.is_object() || !item.contains("t") || !item["t"].is_number_integer() ||
        !item.contains("ci") || !item["ci"].is_number()) {
      throw InputError("malformed point at index " + std::to_string(row));
    }
    RawPoint p{item["t"].get<Timestamp>(), item["ci"].get<double>(), row};
    check_intensity(p.ci, row);
    points.push_back(p);
    ++row;
  }
  return points;
}

CarbonTrace assemble(std::vector<RawPoint> points, std::optional<std::int64_t> interval,
                     const ParseOptions& options) {
  if (points.empty()) throw InputError("empty trace document");
  std::stable_sort(points.begin(), points.end(),
                   [](const RawPoint& a, const RawPoint& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].t == points[i - 1].t) {
      throw InputError("duplicate timestamp at index " + std::to_string(i));
    }
  }
  if (!interval) {
    if (points.size() < 2) {
      throw InputError("cannot infer interval from a single row");
    }
    std::int64_t step = points[1].t - points[0].t;
    for (std::size_t i = 2; i < points.size(); ++i) {
      step = std::min(step, points[i].t - points[i - 1].t);
    }
    interval = step;
  }
  if (*interval <= 0) throw InputError("interval must be positive");
  const std::int64_t step = *interval;

  std::vector<double> values;
  values.reserve(points.size());
  values.push_back(points[0].ci);
  for (std::size_t i = 1; i < points.size(); ++i) {
    const std::int64_t d = points[i].t - points[i - 1].t;
    if (d == step) {
      values.push_back(points[i].ci);
    } else if (options.fill_hold && d == 2 * step) {
      if (options.on_fill) {
        options.on_fill("filled t=" + std::to_string(points[i - 1].t + step) +
                        " with held value " + format_real(points[i - 1].ci));
      }
      values.push_back(points[i - 1].ci);
      values.push_back(points[i].ci);
    } else if (d > step && d % step == 0) {
      throw InputError("gap at index " + std::to_string(i));
    } else {
      throw InputError("non-uniform spacing at index " + std::to_string(i));
    }
  }
  return CarbonTrace(points[0].t, step, std::move(values));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string describe(TimeWindow w) {
  return "[" + std::to_string(w.start) + "," + std::to_string(w.end) + ")";
}

CarbonTrace fetch_http(const HttpSource& src, TimeWindow window) {
  std::string url = src.url;
  if (const char* env = std::getenv(kEndpointEnvVar); env != nullptr && *env != '\0') {
    url = env;
  }
  const std::string context = "endpoint " + url + " window " + describe(window);
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw FetchError("invalid URL for " + context);
  }
  auto path_begin = url.find('/', scheme_end + 3);
  std::string base = url.substr(0, path_begin);
  std::string path = path_begin == std::string::npos ? "/" : url.substr(path_begin);

  httplib::Client client(base);
  client.set_connection_timeout(5);
  client.set_read_timeout(30);
  httplib::Params params{{"start", std::to_string(window.start)},
                         {"end", std::to_string(window.end)},
                         {"region", src.region}};
  auto res = client.Get(path, params, httplib::Headers{});
  if (!res) {
    throw FetchError("network failure (" + httplib::to_string(res.error()) + ") for " + context);
  }
  if (res->status < 200 || res->status >= 300) {
    throw FetchError("HTTP status " + std::to_string(res->status) + " for " + context,
                     res->status);
  }
  try {
    return parse_trace(res->body, TraceFormat::kJson).slice(window);
  } catch (const InputError& e) {
    throw FetchError(std::string("schema mismatch: ") + e.what() + " for " + context);
  }
}

}  // namespace

CarbonTrace::CarbonTrace(Timestamp start_time, std::int64_t interval,
                         std::vector<double> intensities)
    : start_time_(start_time), interval_(interval), intensities_(std::move(intensities)) {
  if (interval_ <= 0) throw InputError("interval must be positive");
  if (intensities_.empty()) throw InputError("trace must contain at least one sample");
  for (std::size_t k = 0; k < intensities_.size(); ++k) {
    check_intensity(intensities_[k], k);
  }
}

CarbonTrace CarbonTrace::slice(TimeWindow window) const {
  if (window.end <= window.start || window.end <= start_time_ || window.start >= end_time()) {
    throw InputError("window " + describe(window) + " does not overlap trace");
  }
  auto first = window.start <= start_time_
                   ? std::size_t{0}
                   : static_cast<std::size_t>((window.start - start_time_) / interval_);
  auto last = static_cast<std::size_t>((window.end - start_time_ + interval_ - 1) / interval_);
  last = std::min(last, size());
  return CarbonTrace(time_at(first), interval_,
                     std::vector<double>(intensities_.begin() + static_cast<std::ptrdiff_t>(first),
                                         intensities_.begin() + static_cast<std::ptrdiff_t>(last)));
}

TraceFormat format_from_path(std::string_view path) {
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") return TraceFormat::kJson;
  return TraceFormat::kCsv;
}

CarbonTrace parse_trace(std::string_view text, TraceFormat format, const ParseOptions& options) {
  std::optional<std::int64_t> interval = options.interval;
  auto points = format == TraceFormat::kCsv ? read_csv(text) : read_json(text, interval);
  return assemble(std::move(points), interval, options);
}

std::string serialize_trace(const CarbonTrace& trace, TraceFormat format) {
  if (format == TraceFormat::kCsv) {
    std::string out(kCsvHeader);
    out += '\n';
    for (std::size_t k = 0; k < trace.size(); ++k) {
      out += std::to_string(trace.time_at(k));
      out += ',';
      out += format_real(trace[k]);
      out += '\n';
    }
    return out;
  }
  nlohmann::json doc;
  doc["interval_s"] = trace.interval();
  auto& points = doc["points"] = nlohmann::json::array();
  for (std::size_t k = 0; k < trace.size(); ++k) {
    points.push_back({{"t", trace.time_at(k)}, {"ci", trace[k]}});
  }
  return doc.dump() + "\n";
}

CarbonTrace load_trace(const std::string& path, const ParseOptions& options) {
  try {
    return parse_trace(read_file(path), format_from_path(path), options);
  } catch (const FetchError&) {
    throw;
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

void save_trace(const CarbonTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << serialize_trace(trace, format_from_path(path));
}

CarbonTrace fetch_trace(const TraceSource& source, TimeWindow window) {
  if (const auto* file = std::get_if<FileSource>(&source)) {
    return load_trace(file->path).slice(window);
  }
  return fetch_http(std::get<HttpSource>(source), window);
}

double intensity_at(const CarbonTrace& trace, Timestamp t) {
  if (t < trace.start_time() || t >= trace.end_time()) {
    throw InputError("time " + std::to_string(t) + " outside trace [" +
                     std::to_string(trace.start_time()) + "," +
                     std::to_string(trace.end_time()) + ")");
  }
  return trace[static_cast<std::size_t>((t - trace.start_time()) / trace.interval())];
}

double window_max(const CarbonTrace& trace, TimeWindow window) {
  auto part = trace.slice(window);
  return *std::max_element(part.intensities().begin(), part.intensities().end());
}

}  // namespace chase
