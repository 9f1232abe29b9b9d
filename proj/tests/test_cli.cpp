#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "../tools/commands.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = biphoton::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("biphoton_cli_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"zeta-sweep", "--theta-range", "5:1:3"}).code == 2);
  CHECK(run({"zeta-sweep", "--no-such-flag"}).code == 2);
  CHECK(run({"montecarlo"}).code == 2);
  CHECK(run({"beat", "--config", "/nonexistent/scenario.ini"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("infeasible calibration exits with 3") {
  const auto r = run({"fit-imperfections", "--concurrence", "1", "--purity", "0.3"});
  CHECK(r.code == 3);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("zeta sweep schema and first row") {
  const auto r = run({"zeta-sweep", "--theta", "0,1"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string schema, header, first;
  std::getline(lines, schema);
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(schema.rfind("# schema=biphoton.zeta-sweep.v1", 0) == 0);
  CHECK(header == "theta,zeta_unmod,zeta_tri,zeta_cos,zeta_sinc2,fidelity");
  CHECK(first == "0,0.5,0.5,0.5,0.5,1");
}

TEST_CASE("beat command reports minima") {
  const auto r = run({"beat", "--edges", "-100:100:201"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("# minima_ns=") != std::string::npos);
  CHECK(r.out.find("bin_start_ns,bin_end_ns,counts") != std::string::npos);
}

TEST_CASE("fit writes a loadable file") {
  const auto dir = scratch("fit");
  fs::create_directories(dir);
  const auto file = dir / "imperfections.ini";
  REQUIRE(run({"fit-imperfections", "--output", file.string()}).code == 0);
  const auto r = run({"chsh-window", "--imperfections", file.string(), "--window-range", "10:30:3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("window,S_unmodulated,S_modulated,S_ideal") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("montecarlo output is deterministic and worker independent") {
  const auto a = scratch("mc_a"), b = scratch("mc_b");
  const std::vector<std::string> common{"montecarlo", "--pairs", "5000", "--seed", "9", "--events", "binary",
                                        "--delta-f-mhz", "50", "--modulation", "square"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--output", a.string(), "--workers", "1"});
  args_b.insert(args_b.end(), {"--output", b.string(), "--workers", "3"});
  REQUIRE(run(args_a).code == 0);
  REQUIRE(run(args_b).code == 0);
  for (const char* name : {"summary.csv", "counts.csv", "analysis.csv", "events/tomography_0.bin", "events/chsh_100.bin"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}
