#include "doctest.h"

#include "fallball/experiment.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fallball;
namespace fs = std::filesystem;

namespace {

fs::path scratch_root() {
  static const fs::path root = [] {
    const fs::path p = fs::temp_directory_path() / ("fallball-test-" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    ::setenv("FALLBALL_OUTPUT_ROOT", p.c_str(), 1);
    return p;
  }();
  return root;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Drops the timestamp line so reruns can be compared byte for byte.
std::string without_timestamp(const std::string& text) {
  std::istringstream is(text);
  std::string line, out;
  while (std::getline(is, line)) {
    if (line.find("\"timestamp\"") == std::string::npos) out += line + "\n";
  }
  return out;
}

void expect_config_error(const std::string& text, Errc code, int line) {
  try {
    parse_config(text);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.code() == code);
    CHECK(e.line() == line);
  }
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("parse a minimal config") {
    const ExperimentConfig cfg = parse_config(
        "# comment\n"
        "experiment = lyapunov\n"
        "masses = 2, 1, 3/7\n"
        "energy = 6\n"
        "horizon.events = 100   # trailing comment\n"
        "seeds.count = 3\n"
        "seeds.base = 10\n");
    CHECK(cfg.kind == ExperimentKind::Lyapunov);
    REQUIRE(cfg.masses.size() == 3);
    CHECK(cfg.masses[2] == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
    CHECK(cfg.energy == 6.0);
    CHECK(cfg.horizon_events == 100);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{10, 11, 12});
    CHECK(cfg.integer("lyapunov.reorth_every") == 1);
    CHECK(cfg.output_dir == "fallball-out");
  }

  TEST_CASE("explicit seed list") {
    const ExperimentConfig cfg =
        parse_config("experiment = simulate\nmasses = 2,1\nenergy = 1\nhorizon.time = 3\nseeds.list = 4, 9\n");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 9});
    CHECK(cfg.horizon_time == 3.0);
    expect_config_error("experiment = tau\nmasses = 2,1\nenergy = 1\nseeds.list = 4\n", Errc::TypeMismatch, 4);
    expect_config_error("experiment = simulate\nmasses = 2,1\nenergy = 1\nhorizon.events = 1\nseeds.count = 2\nseeds.list = 4\n",
                        Errc::ParseError, 6);
  }

  TEST_CASE("invalid masses are rejected") {
    try {
      parse_config("experiment = simulate\nmasses = 1, 2\nenergy = 1\nhorizon.events = 10\n");
      FAIL("expected NonDecreasingMasses");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NonDecreasingMasses);
    }
  }

  TEST_CASE("missing, unknown and mistyped keys") {
    expect_config_error("experiment = simulate\nmasses = 2,1\nhorizon.events = 10\n", Errc::MissingRequired, 0);
    expect_config_error("experiment = heart\nmasses = 2,1\nenergy = 1\n", Errc::MissingRequired, 0);
    expect_config_error("experiment = simulate\nmasses = 2,1\nenergy = 1\nhorizon.events = 10\nfoo.bar = 2\n",
                        Errc::UnknownKey, 5);
    expect_config_error("experiment = simulate\nmasses = 2,1\nenergy = lots\nhorizon.events = 10\n", Errc::TypeMismatch,
                        3);
    expect_config_error("experiment = simulate\nmasses = 2,1\nenergy = 1\nhorizon.events = 1.5\n", Errc::TypeMismatch,
                        4);
    expect_config_error("experiment = simulate\nmasses\n", Errc::ParseError, 2);
    expect_config_error("experiment = simulate\nmasses = 2,1\nmasses = 2,1\n", Errc::ParseError, 3);
    expect_config_error("experiment = nothing\nmasses = 2,1\n", Errc::TypeMismatch, 1);
    expect_config_error("experiment = wedge-unfold\nmasses = 2,1\n", Errc::TypeMismatch, 2);
  }

  TEST_CASE("wedge-unfold needs no energy") {
    const ExperimentConfig cfg = parse_config("experiment = wedge-unfold\nmasses = 5/4, 3/4, 1/2\n");
    CHECK(cfg.kind == ExperimentKind::WedgeUnfold);
    CHECK(!cfg.has("energy"));
  }

  TEST_CASE("hash ignores jobs and output directory") {
    const std::string base = "experiment = simulate\nmasses = 2,1\nenergy = 1\nhorizon.events = 10\n";
    const auto a = parse_config(base);
    const auto b = parse_config(base + "jobs = 4\noutput.dir = elsewhere\n");
    const auto c = parse_config(base + "seeds.count = 2\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
  }

  TEST_CASE("schema covers the required keys") {
    for (auto kind : {ExperimentKind::Simulate, ExperimentKind::Lyapunov, ExperimentKind::Noncontraction,
                      ExperimentKind::Tau, ExperimentKind::Heart, ExperimentKind::Counts,
                      ExperimentKind::Sufficiency, ExperimentKind::WedgeEquivalence, ExperimentKind::WedgeUnfold,
                      ExperimentKind::IdentityCheck}) {
      CHECK(parse_experiment_kind(to_string(kind)) == kind);
      for (const auto& key : required_keys(kind)) {
        bool found = false;
        for (const auto& k : config_schema()) found = found || k.name == key;
        CHECK_MESSAGE(found, key);
      }
    }
  }

  TEST_CASE("zero-event simulate writes header-only logs") {
    const fs::path root = scratch_root();
    const ExperimentConfig cfg = parse_config(
        "experiment = simulate\nmasses = 3,2,1\nenergy = 6\nhorizon.events = 0\nseeds.count = 2\n"
        "output.dir = sim0\n");
    const RunResult r = run_experiment(cfg);
    CHECK(r.exit_code == 0);
    CHECK(r.output_dir == root / "sim0");
    for (int seed : {0, 1}) {
      const std::string events = slurp(r.output_dir / ("seed-" + std::to_string(seed)) / "events.jsonl");
      CHECK(std::count(events.begin(), events.end(), '\n') == 1);
      CHECK(events.find("\"config_hash\":\"" + cfg.hash() + "\"") != std::string::npos);
    }
    const std::string report = slurp(r.output_dir / "report.json");
    CHECK(report.find("\"status\": \"ok\"") != std::string::npos);
    CHECK(fs::exists(r.output_dir / "tables" / "orbits.csv"));
  }

  TEST_CASE("identity check writes a residual table") {
    scratch_root();
    const ExperimentConfig cfg = parse_config(
        "experiment = identity-check\nmasses = 3,2,1\nenergy = 6\nhorizon.events = 3000\noutput.dir = ident\n");
    const RunResult r = run_experiment(cfg);
    CHECK(r.exit_code == 0);
    const std::string table = slurp(r.output_dir / "tables" / "residuals.csv");
    CHECK(table.rfind("# version=", 0) == 0);
    CHECK(table.find("sandwich") != std::string::npos);
    CHECK(table.find("sum-general") != std::string::npos);
  }

  TEST_CASE("reruns are byte-identical apart from the timestamp") {
    scratch_root();
    const std::string base = "experiment = lyapunov\nmasses = 3,2,1\nenergy = 6\nhorizon.events = 2000\nseeds.count = 3\n";
    const RunResult a = run_experiment(parse_config(base + "output.dir = rerun-a\n"));
    const RunResult b = run_experiment(parse_config(base + "output.dir = rerun-b\n"));
    const RunResult c = run_experiment(parse_config(base + "output.dir = rerun-c\njobs = 3\n"));
    for (const auto& entry : fs::recursive_directory_iterator(a.output_dir)) {
      if (!entry.is_regular_file()) continue;
      const fs::path rel = fs::relative(entry.path(), a.output_dir);
      const std::string x = slurp(entry.path());
      if (rel == "report.json") {
        CHECK(without_timestamp(x) != without_timestamp(slurp(b.output_dir / rel)));  // output.dir differs
        continue;
      }
      CHECK_MESSAGE(x == slurp(b.output_dir / rel), rel.string());
      CHECK_MESSAGE(x == slurp(c.output_dir / rel), rel.string());
    }
    // Same output directory twice: the report differs only in its timestamp.
    const std::string cfg = base + "output.dir = rerun-same\n";
    run_experiment(parse_config(cfg));
    const std::string first = slurp(scratch_root() / "rerun-same" / "report.json");
    run_experiment(parse_config(cfg));
    CHECK(without_timestamp(first) == without_timestamp(slurp(scratch_root() / "rerun-same" / "report.json")));
  }
}
