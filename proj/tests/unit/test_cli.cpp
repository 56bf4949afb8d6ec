#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "depin/cli.hpp"
#include "depin/errors.hpp"
#include "depin/io.hpp"
#include "depin/verify.hpp"

using namespace depin;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("depin_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "depin");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config: parse, comments, overrides and snapshot round trip") {
    std::istringstream in(
        "# sample\n"
        "seed = 42\n"
        "equation = dislocation  # trailing comment\n"
        "R = 0.05\n"
        "R_list = 0.02, 0.04, 0.08\n"
        "varpi = auto\n");
    const RunConfig c = parse_config(in);
    CHECK(c.seed == 42);
    CHECK(c.equation == Equation::dislocation);
    CHECK(c.R == 0.05);
    CHECK(c.R_list == std::vector<double>{0.02, 0.04, 0.08});

    std::istringstream again(to_text(c));
    const RunConfig d = parse_config(again);
    CHECK(to_text(d) == to_text(c));
    CHECK(d.R_list == c.R_list);
  }

  TEST_CASE("config: unknown, duplicate and malformed keys are rejected") {
    std::istringstream unknown("bogus = 1\n");
    CHECK_THROWS_AS(parse_config(unknown), ValidationError);
    std::istringstream dup("R = 0.1\nR = 0.2\n");
    CHECK_THROWS_AS(parse_config(dup), ValidationError);
    std::istringstream bad("R = abc\n");
    CHECK_THROWS_AS(parse_config(bad), ValidationError);
    std::istringstream no_eq("R 0.1\n");
    CHECK_THROWS_AS(parse_config(no_eq), ValidationError);
    RunConfig c;
    c.beta = 1.5;
    try {
      c.validate();
      FAIL("beta = 1.5 accepted");
    } catch (const ValidationError& e) {
      CHECK(e.field() == "beta");
    }
  }

  TEST_CASE("state dump round trips bit for bit") {
    TempDir dir("state");
    std::vector<double> v(16 * 16);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i) - 3.0 + 1e-17 * i;
    const InterfaceState s(2, 16, 1.25, v);
    write_state(dir.path / "s", s);
    const InterfaceState r = read_state(dir.path / "s");
    CHECK(r.dim() == 2);
    CHECK(r.n() == 16);
    CHECK(r.t() == 1.25);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(r[i] == s[i]);
    std::ofstream(dir.path / "s.bin", std::ios::binary | std::ios::trunc) << "short";
    CHECK_THROWS(read_state(dir.path / "s"));
  }

  TEST_CASE("format_double round trips") {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) {
      CHECK(std::stod(format_double(x)) == x);
    }
  }

  TEST_CASE("gen: CSV with one row per precipitate, byte identical per seed") {
    TempDir a("gen_a"), b("gen_b");
    const auto ra = cli({"gen", "--seed", "7", "--out", a.path.string(), "--set", "count=5",
                         "--set", "layout=random"});
    const auto rb = cli({"gen", "--seed", "7", "--out", b.path.string(), "--set", "count=5",
                         "--set", "layout=random"});
    REQUIRE(ra.code == kExitOk);
    REQUIRE(rb.code == kExitOk);
    const std::string csv = slurp(a.path / "precipitates.csv");
    CHECK(csv == slurp(b.path / "precipitates.csv"));
    std::istringstream lines(csv);
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) ++n;
    CHECK(n == 6);
    CHECK(fs::exists(a.path / "resolved_config.cfg"));
  }

  TEST_CASE("resolved config reproduces the run") {
    TempDir a("resolved_a"), b("resolved_b");
    REQUIRE(cli({"gen", "--seed", "3", "--out", a.path.string(), "--set", "count=4"}).code == kExitOk);
    const fs::path cfg = a.path / "resolved_config.cfg";
    REQUIRE(cli({"gen", "--config", cfg.string(), "--out", b.path.string()}).code == kExitOk);
    CHECK(slurp(a.path / "precipitates.csv") == slurp(b.path / "precipitates.csv"));
  }

  TEST_CASE("invalid beta exits with code 2 naming the field") {
    TempDir dir("beta");
    const auto r = cli({"gen", "--out", dir.path.string(), "--set", "beta=1.5"});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find("beta") != std::string::npos);
    CHECK(cli({"gen", "--out", dir.path.string(), "--set", "nonsense=1"}).code == kExitValidation);
    CHECK(cli({"frobnicate"}).code == kExitValidation);
    CHECK(cli({"gen", "--equation", "qew9", "--out", dir.path.string()}).code == kExitValidation);
  }

  TEST_CASE("bounds: dislocation and twin JSON") {
    TempDir dir("bounds");
    REQUIRE(cli({"bounds", "--equation", "dislocation", "--out", dir.path.string()}).code == kExitOk);
    auto j = nlohmann::json::parse(slurp(dir.path / "bounds.json"));
    CHECK(j["lower"].get<double>() == doctest::Approx(0.1));
    CHECK(j["upper"].get<double>() == doctest::Approx(0.1));
    CHECK(j["feasible"].get<bool>());

    REQUIRE(cli({"bounds", "--equation", "twin", "--out", dir.path.string()}).code == kExitOk);
    j = nlohmann::json::parse(slurp(dir.path / "bounds.json"));
    CHECK(j["upper"].get<double>() == doctest::Approx(0.01));

    REQUIRE(cli({"bounds", "--equation", "twin", "--set", "R=0.45", "--out", dir.path.string()}).code ==
            kExitOk);
    j = nlohmann::json::parse(slurp(dir.path / "bounds.json"));
    CHECK_FALSE(j["feasible"].get<bool>());
  }

  TEST_CASE("simulate: free propagation, resume and classification") {
    TempDir dir("simulate");
    const std::string out = dir.path.string();
    const auto r = cli({"simulate", "--equation", "qew1", "--out", out, "--set", "count=0", "--set",
                        "force=0.5", "--set", "t_max=1", "--set", "n_grid=64"});
    REQUIRE(r.code == kExitOk);
    const InterfaceState s = read_state(dir.path / "final_state");
    CHECK(s.mean() == doctest::Approx(0.5).epsilon(1e-10));
    const auto j = nlohmann::json::parse(slurp(dir.path / "classification.json"));
    CHECK(j["classification"]["verdict"] == "Propagating");
    CHECK(fs::exists(dir.path / "trajectory.csv"));

    TempDir next("simulate_resume");
    const auto r2 = cli({"simulate", "--equation", "qew1", "--out", next.path.string(), "--resume",
                         (dir.path / "final_state").string(), "--set", "count=0", "--set", "force=0.5",
                         "--set", "t_max=2", "--set", "n_grid=64"});
    REQUIRE(r2.code == kExitOk);
    const InterfaceState s2 = read_state(next.path / "final_state");
    CHECK(s2.t() == doctest::Approx(2.0));
    CHECK(s2.mean() == doctest::Approx(1.0).epsilon(1e-10));

    // A saved state of the wrong size is rejected.
    CHECK(cli({"simulate", "--equation", "qew1", "--out", next.path.string(), "--resume",
               (dir.path / "final_state").string(), "--set", "count=0", "--set", "t_max=3"})
              .code == kExitValidation);
  }

  TEST_CASE("simulate: single precipitate below the lower bound is pinned") {
    TempDir dir("simulate_pinned");
    const auto r = cli({"simulate", "--equation", "dislocation", "--out", dir.path.string(), "--set",
                        "force=0.05", "--set", "t_max=20", "--set", "n_grid=128", "--set", "R=0.1"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(slurp(dir.path / "classification.json"));
    CHECK(j["classification"]["verdict"] == "Pinned");
  }

  TEST_CASE("sweep: per-cell files, table and fit") {
    TempDir dir("sweep");
    const auto r = cli({"sweep", "--equation", "qew1", "--out", dir.path.string(), "--set",
                        "R_list=0.05,0.1,0.2", "--set", "n_seeds=1", "--set", "n_grid=64"});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(dir.path / "cells" / "cell_000.csv"));
    CHECK(fs::exists(dir.path / "cells" / "cell_002.csv"));
    CHECK(fs::exists(dir.path / "sweep.csv"));
    const auto fit = nlohmann::json::parse(slurp(dir.path / "fit.json"));
    CHECK(fit["slope"].get<double>() == doctest::Approx(1.0).epsilon(0.2));
    CHECK(fit["n_rows"].get<int>() == 3);
  }

  TEST_CASE("verify: green on defaults, fault detected, empty field") {
    TempDir dir("verify");
    const auto ok = cli({"verify", "--out", dir.path.string()});
    CHECK(ok.code == kExitOk);
    CHECK(ok.out.find("FAIL") == std::string::npos);
    CHECK(fs::exists(dir.path / "verify.txt"));

    const auto bad = cli({"verify", "--inject-fault", "--out", dir.path.string()});
    CHECK(bad.code == kExitNumerical);
    CHECK(bad.out.find("FAIL spectral_consistency") != std::string::npos);

    const auto empty = cli({"verify", "--set", "count=0", "--out", dir.path.string()});
    CHECK(empty.code == kExitOk);
  }

  TEST_CASE("help exits cleanly") {
    CHECK(cli({"--help"}).code == kExitOk);
  }
}
