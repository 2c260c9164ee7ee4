#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgnlab/cli.hpp"
#include "sgnlab/config.hpp"
#include "sgnlab/modulation.hpp"

using namespace sgnlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kConfig = R"(# comment
[riemann]
h_minus = 1
h_plus = 1.5   # inline comment
mu = 1

[soliton]
sigma = 1
z2 = 0.4

[solver]
dx = 0.05
)";

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.ini");
}

int config_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

struct Cli {
  int code = 0;
  std::string out, err;
};

Cli cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sgnlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Cli r;
  r.code = run_cli(int(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("sgnlab_cli_test_" + name);
  fs::remove_all(d);
  return d;
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  return json::parse(f);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parses sections and defaults") {
  const auto rc = parse(kConfig);
  CHECK(rc.experiment.h_minus == 1);
  CHECK(rc.experiment.h_plus == 1.5);
  CHECK(rc.experiment.mu == 1);
  CHECK(rc.experiment.wave.z == doctest::Approx(std::sqrt(0.4)).epsilon(1e-15));
  CHECK(rc.experiment.wave.side == Placement::Minus);
  CHECK(rc.experiment.dx == 0.05);
  CHECK(rc.experiment.solver.limiter == Limiter::None);
  CHECK(rc.output_dir == "out");
  CHECK(rc.entries.at("riemann.h_plus") == "1.5");
}

TEST_CASE("config errors carry line numbers") {
  CHECK(config_error_line("[riemann]\nh_minus = 1\nhplus = 1.5\nmu = 1\n") == 3);
  CHECK(config_error_line("[riemann]\nh_minus = 1\nh_plus = 1.5\nmu = 1\n[solvr]\n") == 5);
  CHECK(config_error_line("h_minus = 1\n") == 1);
  CHECK(config_error_line("[riemann]\nh_minus = 1\nh_plus = 1.5x\nmu = 1\n") == 3);
  CHECK(config_error_line("[riemann]\nh_minus = 1\nh_plus = 1.5\nmu = 2\n") == 4);
  CHECK(config_error_line("[riemann]\nh_minus = 1\nh_plus = 1.5\nh_plus = 2\nmu = 1\n") == 4);
  CHECK(config_error_line("[riemann]\nh_minus = 1\nh_plus = 1.5\nmu = 1\n[solver]\nlimiter = superbee\n") == 6);
  CHECK(config_error_line("[riemann]\nh_minus = 1\nh_plus = 1.5\nmu = 1\n[soliton]\nz = 0.5\nz2 = 0.25\n") == 7);
  // missing h_plus points at its section header
  CHECK(config_error_line("\n[riemann]\nh_minus = 1\nmu = 1\n") == 2);
  try {
    parse("[riemann]\nh_minus = 1\nmu = 1\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("test.ini:1") == 0);
    CHECK(std::string(e.what()).find("h_plus") != std::string::npos);
  }
}

TEST_CASE("config hash ignores order, spacing and comments") {
  const auto a = parse(kConfig);
  const auto b = parse("[solver]\ndx=0.05\n[soliton]\nz2 = 0.4\nsigma = 1\n[riemann]\nmu = 1\nh_plus = 1.5\nh_minus = 1\n");
  CHECK(config_hash(a.entries) == config_hash(b.entries));
  const auto c = parse("[riemann]\nh_minus = 1\nh_plus = 1.5\nmu = 1\n[soliton]\nsigma = 1\nz2 = 0.41\n[solver]\ndx = 0.05\n");
  CHECK(config_hash(a.entries) != config_hash(c.entries));
  // FNV-1a reference value for the empty input
  CHECK(config_hash({}) == 14695981039346656037ull);
  CHECK(hash_hex(0xabcull) == "0000000000000abc");
}

TEST_CASE("range parsing") {
  CHECK(parse_range("0:1:3") == std::vector<double>{0, 0.5, 1});
  CHECK(parse_range("2:5:1") == std::vector<double>{2});
  CHECK(parse_range("0:1:0").empty());
  CHECK_THROWS(parse_range("0:1"));
  CHECK_THROWS(parse_range("0:x:3"));
  CHECK_THROWS(parse_range("0:1:-2"));
}

TEST_CASE("predict echoes z over equal depths") {
  const auto dir = fresh_dir("echo");
  const auto r = cli({"predict", "--h-minus", "1", "--h-plus", "1", "--mu", "1", "--sigma", "1", "--z-minus", "0.5",
                      "--out", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("outcome: transmitted") != std::string::npos);
  const auto j = read_json(dir / "prediction.json");
  CHECK(j["prediction"]["z_plus"].get<double>() == doctest::Approx(0.5).epsilon(1e-12));
  const auto m = read_json(dir / "manifest.json");
  CHECK(m["files"] == json::array({"prediction.json"}));
  CHECK(m["code_version"] == code_version());
  CHECK(m["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("predict below the threshold is trapped") {
  const auto dir = fresh_dir("trapped");
  const double zc = z_min_exact(1.5);
  const auto r = cli({"predict", "--h-minus", "1", "--h-plus", "1.5", "--mu", "1", "--sigma", "1", "--z-minus",
                      std::to_string(0.9 * zc), "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = read_json(dir / "prediction.json");
  CHECK(j["prediction"]["outcome"] == "trapped");
  CHECK_FALSE(j["prediction"].contains("z_plus"));
}

TEST_CASE("fitting and exact predictions differ at sixth order") {
  // overtaking a fast DSW with h-/h+ = 1 + z^2/2, so that z+ shrinks with z-
  double prev = 0;
  for (double z : {0.2, 0.1}) {
    double ap[2];
    int k = 0;
    for (const char* method : {"exact", "fitting"}) {
      const auto dir = fresh_dir(std::string("fit_") + method);
      const auto r = cli({"predict", "--h-minus", std::to_string(1 + z * z / 2), "--h-plus", "1", "--mu", "1",
                          "--sigma", "1", "--z-minus", std::to_string(z), "--method", method, "--out", dir.string()});
      REQUIRE(r.code == 0);
      const auto j = read_json(dir / "prediction.json");
      REQUIRE(j["prediction"].contains("a_plus"));
      ap[k++] = j["prediction"]["a_plus"].get<double>();
    }
    const double scaled = std::abs(ap[0] - ap[1]) / std::pow(z, 6);
    CHECK(scaled > 0);
    CHECK(scaled < 5);
    if (prev > 0) CHECK(scaled == doctest::Approx(prev).epsilon(0.2));
    prev = scaled;
  }
}

TEST_CASE("predict usage errors") {
  const auto dir = fresh_dir("usage");
  CHECK(cli({"predict", "--h-minus", "1", "--h-plus", "1.5", "--mu", "2", "--sigma", "1", "--z-minus", "0.5", "--out",
             dir.string()})
            .code == kExitUsage);
  CHECK(cli({"predict", "--h-minus", "-1", "--h-plus", "1.5", "--mu", "1", "--sigma", "1", "--z-minus", "0.5",
             "--out", dir.string()})
            .code == kExitUsage);
  CHECK(cli({"predict", "--h-minus", "1", "--mu", "1", "--sigma", "1", "--z-minus", "0.5", "--out", dir.string()})
            .code == kExitUsage);
  CHECK(cli({"predict", "--h-minus", "1.5", "--h-plus", "1", "--mu", "-1", "--sigma", "1", "--z-minus", "0.5",
             "--method", "fitting", "--out", dir.string()})
            .code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("sweep preset writes both curves deterministically") {
  const auto d1 = fresh_dir("sweep1"), d2 = fresh_dir("sweep2");
  const auto r1 = cli({"sweep", "--fig", "4c", "--z2", "0.2:1.2:6", "--out", d1.string()});
  const auto r2 = cli({"sweep", "--fig", "4c", "--z2", "0.2:1.2:6", "--out", d2.string()});
  REQUIRE(r1.code == 0);
  REQUIRE(r2.code == 0);
  const std::string csv = slurp(d1 / "sweep.csv");
  CHECK(csv == slurp(d2 / "sweep.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  CHECK(csv.find("\n1,1.5,1,1,") != std::string::npos);
  CHECK(csv.find("\n1.5,1,1,1,") != std::string::npos);
  const auto m = read_json(d1 / "manifest.json");
  CHECK(m["files"] == json::array({"sweep.csv"}));
  CHECK(m["config_hash"] == read_json(d2 / "manifest.json")["config_hash"]);
}

TEST_CASE("empty grid writes nothing") {
  const auto dir = fresh_dir("empty");
  const auto r = cli({"sweep", "--fig", "6", "--z2", "0:1:0", "--out", dir.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("empty grid") != std::string::npos);
  CHECK_FALSE(fs::exists(dir));
  CHECK(cli({"compare", "--fig", "5", "--ratios", "1.1:1.2:0", "--out", dir.string()}).code == kExitUsage);
  CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("sweep reports failed rows through the exit code") {
  const auto dir = fresh_dir("fail");
  // fitting invariant is undefined for sigma*mu = -1: every row fails but the table is written
  const auto r = cli({"sweep", "--h-minus", "1.5", "--h-plus", "1", "--mu", "-1", "--sigma", "1", "--z2", "0.2:0.4:2",
                      "--method", "fitting", "--out", dir.string()});
  CHECK(r.code == kExitRowFailure);
  CHECK(fs::exists(dir / "sweep.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("simulate writes snapshots, probes, outcome and manifest") {
  const auto dir = fresh_dir("sim");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.ini");
    f << "[riemann]\nh_minus = 1\nh_plus = 1\nmu = 1\n[soliton]\nz2 = 0.2\n[solver]\ndx = 0.1\nt_end = 4\n"
         "[output]\noutput_every = 2\n";
  }
  const auto out = dir / "out";
  const auto r = cli({"simulate", "--config", (dir / "run.ini").string(), "--out", out.string()});
  REQUIRE(r.code == 0);
  const auto m = read_json(out / "manifest.json");
  std::vector<std::string> files = m["files"];
  CHECK(files.size() == 5);
  for (const auto& f : files) CHECK(fs::exists(out / f));
  CHECK(std::find(files.begin(), files.end(), "snapshots/snap_t4.000000.csv") != files.end());
  const auto o = read_json(out / "outcome.json");
  CHECK(o["status"] == "completed");
  CHECK(o["t_end"].get<double>() == 4);

  const auto out2 = dir / "out2";
  REQUIRE(cli({"simulate", "--config", (dir / "run.ini").string(), "--out", out2.string()}).code == 0);
  CHECK(slurp(out / "probes.csv") == slurp(out2 / "probes.csv"));
  CHECK(slurp(out / "snapshots/snap_t4.000000.csv") == slurp(out2 / "snapshots/snap_t4.000000.csv"));
  CHECK(m["config_hash"] == read_json(out2 / "manifest.json")["config_hash"]);
}

TEST_CASE("simulate rejects bad configs with the path and line") {
  const auto dir = fresh_dir("badcfg");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.ini");
    f << "[riemann]\nh_minus = 1\nmu = 1\n[soliton]\nz2 = 0.2\n";
  }
  const auto r = cli({"simulate", "--config", (dir / "bad.ini").string(), "--out", (dir / "out").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("bad.ini:1:") != std::string::npos);
  CHECK(r.err.find("h_plus") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "out"));

  const auto missing = cli({"simulate", "--config", (dir / "nope.ini").string()});
  CHECK(missing.code == kExitUsage);
  CHECK(missing.err.find("nope.ini") != std::string::npos);
}
