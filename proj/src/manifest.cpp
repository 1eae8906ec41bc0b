#include "chase/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chase/error.hpp"

namespace chase {

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_absolute()) return path;
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace

RunManifest parse_manifest(const std::string& text, const std::string& base_dir) {
  RunManifest m;
  try {
    const auto doc = nlohmann::json::parse(text);
    m.trace_path = resolve(base_dir, doc.at("trace").get<std::string>());
    m.profile_path = resolve(base_dir, doc.at("profile").get<std::string>());
    const auto& job = doc.at("job");
    m.total_samples = job.at("total_samples").get<std::uint64_t>();
    if (job.contains("start_time")) m.start_time = job["start_time"].get<Timestamp>();
    if (doc.contains("forecaster")) {
      const auto& f = doc["forecaster"];
      if (f.contains("model")) m.forecaster.kind = model_kind_from_string(f["model"].get<std::string>());
      m.forecaster.fit_hours = f.value("fit_hours", m.forecaster.fit_hours);
      m.forecaster.oracle = f.value("oracle", false);
      if (f.contains("svr")) {
        const auto& s = f["svr"];
        auto& h = m.forecaster.svr;
        h.c = s.value("C", h.c);
        h.epsilon = s.value("epsilon", h.epsilon);
        h.gamma = s.value("gamma", h.gamma);
        h.tol = s.value("tol", h.tol);
        h.max_iter = s.value("max_iter", h.max_iter);
      }
    }
    if (doc.contains("optimizer")) {
      const auto& o = doc["optimizer"];
      m.eta = o.value("eta", m.eta);
      if (o.contains("period_s")) m.period_s = o["period_s"].get<std::int64_t>();
      if (o.contains("max_power_w")) m.max_power_w = o["max_power_w"].get<double>();
      if (o.contains("max_ci")) m.max_ci = o["max_ci"].get<double>();
    }
    m.baseline = doc.value("baseline", false);
    m.count_profiling = doc.value("count_profiling", false);
    if (doc.contains("out_dir")) m.out_dir = resolve(base_dir, doc["out_dir"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open manifest " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  auto dir = std::filesystem::path(path).parent_path().string();
  return parse_manifest(ss.str(), dir.empty() ? "." : dir);
}

void validate_manifest(const RunManifest& m) {
  if (!(m.eta >= 0.0 && m.eta <= 1.0)) throw InputError("eta must lie in [0,1]");
  if (m.total_samples == 0) throw InputError("job.total_samples must be positive");
  for (const auto* p : {&m.trace_path, &m.profile_path}) {
    if (!std::filesystem::exists(*p)) throw InputError("file not found: " + *p);
  }
}

}  // namespace chase
