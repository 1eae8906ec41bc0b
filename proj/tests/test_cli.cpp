#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "chase/simulator.hpp"
#include "cli.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace chase;

namespace {

const fs::path kData = CHASE_TEST_DATA_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "chase");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("chase_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string golden_manifest() { return (kData / "golden_manifest.json").string(); }

}  // namespace

TEST_CASE("help and usage errors") {
  CHECK(run({"--help"}).code == cli::kExitOk);
  CHECK(run({}).code == cli::kExitInput);
  CHECK(run({"frobnicate"}).code == cli::kExitInput);
  CHECK(run({"simulate"}).code == cli::kExitInput);
}

TEST_CASE("synth-trace is seeded and idempotent") {
  auto dir = scratch("synth");
  auto a = run({"synth-trace", "--out", (dir / "a.csv").string()});
  auto b = run({"synth-trace", "--out", (dir / "b.csv").string(), "--seed", "0"});
  auto c = run({"synth-trace", "--out", (dir / "c.csv").string(), "--seed", "1"});
  REQUIRE(a.code == 0);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
  CHECK(slurp(dir / "a.csv") == slurp(kData / "synthetic_diurnal.csv"));
  CHECK(run({"synth-trace", "--period", "0"}).code == cli::kExitInput);
}

TEST_CASE("trace validate") {
  auto ok = run({"trace", "validate", (kData / "golden_trace.csv").string()});
  CHECK(ok.code == 0);
  CHECK(ok.out.starts_with("ok: 50 points, interval 1800 s"));

  auto dir = scratch("validate");
  std::ofstream(dir / "gap.csv") << "timestamp,intensity_gco2_kwh\n0,400\n3600,500\n5400,510\n";
  auto bad = run({"trace", "validate", (dir / "gap.csv").string(), "--interval", "1800"});
  CHECK(bad.code == cli::kExitInput);
  CHECK(bad.err.find("gap at index 1") != std::string::npos);

  auto filled = run({"trace", "validate", (dir / "gap.csv").string(), "--interval", "1800",
                     "--fill", "hold", "--out", (dir / "filled.json").string()});
  CHECK(filled.code == 0);
  CHECK(filled.err.find("fill: filled t=1800") != std::string::npos);
  CHECK(slurp(dir / "filled.json").find("\"interval_s\":1800") != std::string::npos);
}

TEST_CASE("trace fetch from file and HTTP") {
  auto dir = scratch("fetch");
  auto r = run({"trace", "fetch", "--file", (kData / "golden_trace.csv").string(), "--start",
                "1673827200", "--end", "1673830800", "--out", (dir / "w.csv").string()});
  CHECK(r.code == 0);
  CHECK(slurp(dir / "w.csv") == "timestamp,intensity_gco2_kwh\n1673827200,600\n1673829000,60\n");

  httplib::Server server;
  server.Get("/ok", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"interval_s": 1800, "points": [{"t": 0, "ci": 400}, {"t": 1800, "ci": 500}]})",
                    "application/json");
  });
  server.Get("/missing", [](const httplib::Request&, httplib::Response& res) { res.status = 404; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);

  auto got = run({"trace", "fetch", "--url", base + "/ok", "--region", "r", "--start", "0", "--end", "3600"});
  CHECK(got.code == 0);
  CHECK(got.out == "timestamp,intensity_gco2_kwh\n0,400\n1800,500\n");

  auto missing = run({"trace", "fetch", "--url", base + "/missing", "--start", "0", "--end", "3600"});
  CHECK(missing.code == cli::kExitInput);
  CHECK(missing.err.find("HTTP status 404") != std::string::npos);

  ::setenv(kEndpointEnvVar, (base + "/ok").c_str(), 1);
  auto via_env = run({"trace", "fetch", "--start", "0", "--end", "3600"});
  ::unsetenv(kEndpointEnvVar);
  CHECK(via_env.code == 0);
  CHECK(via_env.out == got.out);

  CHECK(run({"trace", "fetch", "--start", "0", "--end", "1"}).code == cli::kExitInput);
  server.stop();
  th.join();
}

TEST_CASE("forecast eval") {
  const auto trace = (kData / "synthetic_diurnal.csv").string();
  auto table = run({"forecast", "eval", trace, "--fit-hours", "24", "--model", "linear", "--model", "svr"});
  CHECK(table.code == 0);
  CHECK(table.out == slurp(kData / "forecast_eval_golden.txt"));
  CHECK(table.out.find("test: 504 one-step predictions") != std::string::npos);

  auto dir = scratch("eval");
  std::ofstream(dir / "flat.csv") << [] {
    std::string s = "timestamp,intensity_gco2_kwh\n";
    for (int i = 0; i < 100; ++i) s += std::to_string(1673740800 + i * 1800) + ",480\n";
    return s;
  }();
  auto flat = run({"forecast", "eval", (dir / "flat.csv").string(), "--model", "linear", "--json",
                   "--out-dir", dir.string()});
  REQUIRE(flat.code == 0);
  auto doc = nlohmann::json::parse(flat.out);
  CHECK(doc["models"][0]["model"] == "linear");
  CHECK(doc["models"][0]["mape_pct"].get<double>() == doctest::Approx(0.0));
  CHECK(doc["models"][1]["mape_pct"].get<double>() == 0.0);
  CHECK(nlohmann::json::parse(slurp(dir / "forecast_eval.json")) == doc);

  CHECK(run({"forecast", "eval", trace, "--fit-hours", "0"}).code == cli::kExitInput);
  CHECK(run({"forecast", "eval", trace, "--model", "forest"}).code == cli::kExitInput);
  CHECK(run({"forecast", "eval", (dir / "nope.csv").string()}).code == cli::kExitInput);
}

TEST_CASE("simulate the golden manifest") {
  auto dir = scratch("sim_golden");
  auto r = run({"simulate", golden_manifest(), "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out == "mode=carbon-aware periods=2 time_s=2700 energy_j=607500 carbon_g=61.425\n");
  CHECK(slurp(dir / "timeline.csv") == slurp(kData / "golden_timeline.csv"));
  auto report = parse_report(slurp(dir / "report.json"));
  CHECK(report.total_carbon == doctest::Approx(testing::GoldenScenario::kAwareCarbon));

  // Idempotent: a second run writes identical bytes.
  auto again = scratch("sim_golden2");
  run({"simulate", golden_manifest(), "--out-dir", again.string()});
  CHECK(slurp(dir / "report.json") == slurp(again / "report.json"));
  CHECK(slurp(dir / "timeline.csv") == slurp(again / "timeline.csv"));
}

TEST_CASE("simulate --baseline runs at the maximum limit") {
  auto dir = scratch("sim_base");
  REQUIRE(run({"simulate", golden_manifest(), "--baseline", "--out-dir", dir.string()}).code == 0);
  std::istringstream csv(slurp(dir / "timeline.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    CHECK(cols[1].empty());
    CHECK(cols[3] == "300");
    ++rows;
  }
  CHECK(rows == 2);
}

TEST_CASE("simulate with eta=0 matches the baseline") {
  auto a = scratch("sim_eta0");
  auto b = scratch("sim_eta0_base");
  REQUIRE(run({"simulate", golden_manifest(), "--eta", "0", "--out-dir", a.string()}).code == 0);
  REQUIRE(run({"simulate", golden_manifest(), "--baseline", "--out-dir", b.string()}).code == 0);
  CHECK(same_accounting(parse_report(slurp(a / "report.json")), parse_report(slurp(b / "report.json"))));
}

TEST_CASE("simulate exit codes") {
  auto dir = scratch("sim_codes");
  CHECK(run({"simulate", golden_manifest(), "--eta", "1.5", "--out-dir", dir.string()}).code ==
        cli::kExitInput);
  CHECK(run({"simulate", (dir / "missing.json").string()}).code == cli::kExitInput);

  auto m = nlohmann::json::parse(slurp(kData / "golden_manifest.json"));
  m["trace"] = (kData / "golden_trace.csv").string();
  m["profile"] = (kData / "golden_profile.json").string();
  m["job"]["total_samples"] = 100000000;
  std::ofstream(dir / "long.json") << m.dump();
  auto exhausted = run({"simulate", (dir / "long.json").string(), "--out-dir", dir.string()});
  CHECK(exhausted.code == cli::kExitSimulation);
  CHECK(exhausted.err.find("trace exhausted") != std::string::npos);

  m["profile"] = (dir / "absent.json").string();
  std::ofstream(dir / "absent.json.manifest") << m.dump();
  CHECK(run({"simulate", (dir / "absent.json.manifest").string()}).code == cli::kExitInput);
}

TEST_CASE("compare") {
  auto aware = scratch("cmp_aware");
  auto base = scratch("cmp_base");
  run({"simulate", golden_manifest(), "--out-dir", aware.string()});
  run({"simulate", golden_manifest(), "--baseline", "--out-dir", base.string()});

  auto same = run({"compare", (base / "report.json").string(), (base / "report.json").string(), "--json"});
  REQUIRE(same.code == 0);
  auto zero = nlohmann::json::parse(same.out);
  CHECK(zero["carbon_reduction_pct"] == 0.0);
  CHECK(zero["time_increase_pct"] == 0.0);
  CHECK(zero["energy_reduction_pct"] == 0.0);

  auto golden = run({"compare", (aware / "report.json").string(), (base / "report.json").string(),
                     "--json", "--out-dir", aware.string()});
  REQUIRE(golden.code == 0);
  auto d = nlohmann::json::parse(golden.out);
  using G = testing::GoldenScenario;
  CHECK(d["carbon_reduction_pct"].get<double>() == doctest::Approx(G::kCarbonReductionPct).epsilon(1e-12));
  CHECK(d["energy_reduction_pct"].get<double>() == doctest::Approx(G::kEnergyReductionPct).epsilon(1e-12));
  // Aware is slower, so the time delta is positive.
  CHECK(d["time_increase_pct"].get<double>() == doctest::Approx(G::kTimeIncreasePct).epsilon(1e-12));
  CHECK(fs::exists(aware / "compare.json"));

  auto text = run({"compare", (aware / "report.json").string(), (base / "report.json").string()});
  CHECK(text.out.find("carbon_reduction_pct 32.7684") != std::string::npos);
  CHECK(text.out.find("time_increase_pct    13.3333") != std::string::npos);

  // Different job: same manifest with a smaller sample budget.
  auto m = nlohmann::json::parse(slurp(kData / "golden_manifest.json"));
  m["trace"] = (kData / "golden_trace.csv").string();
  m["profile"] = (kData / "golden_profile.json").string();
  m["job"]["total_samples"] = 1000;
  auto other = scratch("cmp_other");
  std::ofstream(other / "m.json") << m.dump();
  REQUIRE(run({"simulate", (other / "m.json").string(), "--out-dir", other.string()}).code == 0);
  auto mismatch = run({"compare", (other / "report.json").string(), (base / "report.json").string()});
  CHECK(mismatch.code == cli::kExitInput);
}

TEST_CASE("profile gen") {
  auto dir = scratch("pgen");
  auto r = run({"profile", "gen", "--limits", "100,200,300", "--out", (dir / "p.json").string()});
  REQUIRE(r.code == 0);
  auto p = load_profile((dir / "p.json").string());
  CHECK(p.size() == 3);
  CHECK(p.max_limit() == 300);
  CHECK(run({"profile", "gen", "--limits", "100,400"}).code == cli::kExitInput);
}
