#include <doctest.h>

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "commands.hpp"
#include "run_config.hpp"
#include "shakenwell/errors.hpp"

using namespace shakenwell;
using namespace shakenwell::cli;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

Result shell(const std::string& args) {
  const std::string cmd = std::string(SHAKENWELL_BIN) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::vector<double> fields(const std::string& line) {
  std::vector<double> out;
  std::istringstream is(line);
  for (std::string f; std::getline(is, f, ',');) out.push_back(std::stod(f));
  return out;
}

}  // namespace

TEST_CASE("ini round trip preserves every field") {
  RunConfig c;
  c.mode = "coupler";
  c.V1 = cdouble(0.1, -0.2);
  c.V2 = cdouble(1.0 / 3.0, 0.0);
  c.eps = 0.123456789012345678;
  c.eps_points = 17;
  c.theta = false;
  c.threads = 3;
  c.path_kind = "one-sided";
  c.amplitude = 0.6;
  c.absorber = true;
  c.backend = "pde";
  c.coupler_V = cdouble(0.0, 0.25);
  c.input = "A";
  const auto back = from_ini(to_ini(c));
  CHECK(back == c);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 64);
  RunConfig d = c;
  d.eps = std::nextafter(c.eps, 1.0);
  CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("missing keys keep defaults and unknown keys are rejected") {
  const auto c = from_ini("[drive]\neps = 0.3\n");
  RunConfig expected;
  expected.eps = 0.3;
  CHECK(c == expected);
  CHECK_THROWS_AS(from_ini("[drive]\nbogus = 1\n"), UsageError);
  CHECK_THROWS_AS(from_ini("[drive]\neps = abc\n"), UsageError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), UsageError);
}

TEST_CASE("validation") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  c.mode = "teleport";
  CHECK_THROWS_AS(validate(c), UsageError);
  c = RunConfig{};
  c.eps_min = 1.0;
  c.eps_max = 0.5;
  CHECK_THROWS_AS(validate(c), UsageError);
  c = RunConfig{};
  c.mode = "dynamics";
  c.initial_level = 3;
  CHECK_THROWS_AS(validate(c), UsageError);
  c = RunConfig{};
  c.mode = "coupler";
  c.input = "C";
  CHECK_THROWS_AS(validate(c), UsageError);
}

TEST_CASE("csv header carries mode, schema and hash") {
  RunConfig c;
  std::ostringstream os;
  write_csv_header(os, c, "sweep.v1", "eps,mu1_folded");
  const auto ls = lines(os.str());
  REQUIRE(ls.size() == 2);
  CHECK(ls[0] == "# shakenwell sweep schema=sweep.v1 config_sha256=" + config_hash(c));
  CHECK(ls[1] == "eps,mu1_folded");
}

TEST_CASE("one-sided sweep gap equals omega0 folded into the zone") {
  RunConfig c;
  c.V1 = 0.0;
  c.V2 = cdouble(0.0, 0.5);
  c.eps_min = 0.15;
  c.eps_max = 0.95;
  c.eps_points = 9;
  std::ostringstream os;
  cmd_sweep(c, os);
  const auto ls = lines(os.str());
  REQUIRE(ls.size() == 11);
  CHECK(ls[1] == "eps,mu1_folded,mu2_folded,gap,theta,defect");
  for (std::size_t i = 2; i < ls.size(); ++i) {
    const auto f = fields(ls[i]);
    REQUIRE(f.size() == 6);
    const double eps = f[0];
    double r = std::fmod(c.omega0, eps);
    r = std::min(r, eps - r);
    CHECK(std::abs(f[3] - r) < 1e-8);
  }
}

TEST_CASE("sweep output does not depend on the thread count") {
  RunConfig c;
  c.eps_points = 23;
  c.threads = 1;
  std::ostringstream a, b;
  cmd_sweep(c, a);
  c.threads = 4;
  cmd_sweep(c, b);
  // The header hash covers the thread count; the data rows must be identical.
  auto la = lines(a.str()), lb = lines(b.str());
  la.erase(la.begin());
  lb.erase(lb.begin());
  CHECK(la == lb);
}

TEST_CASE("binary: subcommands, exit codes and outputs") {
  SUBCASE("no subcommand is a usage error") { CHECK(shell("").status == 2); }
  SUBCASE("bad flag value") { CHECK(shell("sweep --eps-points -4").status == 2); }
  SUBCASE("sweep") {
    const auto r = shell("sweep --eps-min 0.2 --eps-max 0.3 --eps-points 3");
    CHECK(r.status == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 5);
    CHECK(ls[0].rfind("# shakenwell sweep schema=sweep.v1 config_sha256=", 0) == 0);
  }
  SUBCASE("dynamics") {
    const auto r = shell("dynamics --t-final 10 --sample 1");
    CHECK(r.status == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 13);
    CHECK(ls[1] == "t,pop1,pop2,norm");
  }
  SUBCASE("coupler") {
    const auto r = shell("coupler --z-final 20 --sample 5");
    CHECK(r.status == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 7);
    CHECK(ls[1] == "z,guide1,guide2,symmetric,antisymmetric,norm");
  }
  SUBCASE("ep-find twolevel") {
    const auto r = shell("ep-find --V1 0 --V2 0+0.5i");
    CHECK(r.status == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["backend"] == "twolevel");
    CHECK(j["ep_found"] == true);
    CHECK(std::abs(j["eps_star"].get<double>() - 0.2) < 1e-6);
    CHECK(j["config_sha256"].get<std::string>().size() == 64);
  }
  SUBCASE("pde resolution failure") {
    CHECK(shell("pde --n-points 64 --t-final 1").status == 2);
  }
  SUBCASE("config file, overrides and print-config") {
    const auto file = std::filesystem::temp_directory_path() / "shakenwell_cli_test.ini";
    RunConfig c;
    c.eps_points = 5;
    c.eps_min = 0.4;
    c.eps_max = 0.5;
    std::ofstream(file) << to_ini(c);
    auto r = shell("--config " + file.string() + " --print-config sweep --eps-points 7");
    CHECK(r.status == 0);
    const auto printed = from_ini(r.out);
    CHECK(printed.eps_points == 7);
    CHECK(printed.eps_min == 0.4);
    r = shell("--config " + file.string() + " sweep");
    CHECK(r.status == 0);
    CHECK(lines(r.out).size() == 7);
    std::filesystem::remove(file);
  }
  SUBCASE("output file") {
    const auto file = std::filesystem::temp_directory_path() / "shakenwell_cli_out.csv";
    const auto r = shell("-o " + file.string() + " sweep --eps-points 3");
    CHECK(r.status == 0);
    CHECK(r.out.empty());
    std::ifstream is(file);
    std::string first;
    std::getline(is, first);
    CHECK(first.rfind("# shakenwell sweep", 0) == 0);
    std::filesystem::remove(file);
  }
}
