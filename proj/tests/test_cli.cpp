#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

// Path to the built binary, injected by the build system.
#ifndef KOLMEX_CLI_PATH
#error "KOLMEX_CLI_PATH must be defined"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

/// Run the CLI with the given arguments, capture stdout and the exit code.
RunResult run(const std::string& args) {
  const std::string cmd = std::string(KOLMEX_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("price emits the full JSON envelope and exits 0") {
  auto r = run("price --model bs-asian --sigma 0.3 --payoff fixed-call "
               "--strike 1.0 --T 0.5 --t 0.0 --s0 1.0 --a0 0.0 --N 2");
  CHECK(r.exit_code == 0);
  auto doc = json::parse(r.out);
  CHECK(doc.at("model") == "bs-asian");
  CHECK(doc.at("payoff") == "fixed-call");
  CHECK(doc.at("N") == 2);
  CHECK(doc.at("values").is_array());
  CHECK(doc.at("values").size() == 3);
  CHECK(doc.at("greeks").contains("delta"));
  CHECK(doc.at("greeks").contains("gamma"));
  // absent sections are explicit nulls, not missing keys
  CHECK(doc.at("slopes").is_null());
  CHECK(doc.at("pass").is_null());
  CHECK(doc.at("quadrature_converged") == true);
}

TEST_CASE("price --format csv uses the documented header") {
  auto r = run("price --model bs-asian --payoff fixed-call --strike 1.0 "
               "--T 0.5 --N 1 --format csv");
  CHECK(r.exit_code == 0);
  std::istringstream is(r.out);
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "order,value,cumulative");
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);  // orders 0 and 1
}

TEST_CASE("missing strike for a fixed-strike call is a configuration error") {
  auto r = run("price --model bs-asian --payoff fixed-call --T 0.5 --N 1");
  CHECK(r.exit_code == 2);
}

TEST_CASE("unknown model and unknown verify suite exit 2") {
  CHECK(run("price --model heston --payoff fixed-call --strike 1 --T 0.5").exit_code == 2);
  CHECK(run("verify brownian").exit_code == 2);
}

TEST_CASE("verify suites pass and print one line per check") {
  for (const char* suite : {"geometry", "kernel", "algebra", "taylor"}) {
    auto r = run(std::string("verify ") + suite);
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
  }
}

TEST_CASE("self-consistency converge passes at fixed moneyness") {
  auto r = run("converge --self-consistency --model bs-asian --sigma 0.3 "
               "--payoff fixed-call --fix-moneyness 0.5 --T 0.25 "
               "--thetas 0.25 0.125 0.0625 0.03125 --orders 0 1");
  CHECK(r.exit_code == 0);
  auto doc = json::parse(r.out);
  CHECK(doc.at("pass") == true);
  REQUIRE(doc.at("slopes").size() == 2);
  // |U_{N+1} - U_N| decays like theta^{(N+1+k)/2}, k = 3 for this family
  CHECK(doc.at("slopes")[0].at("slope").get<double>() == doctest::Approx(2.0).epsilon(0.01));
  CHECK(doc.at("slopes")[1].at("slope").get<double>() == doctest::Approx(2.5).epsilon(0.01));
}

TEST_CASE("a theta grid with fewer than four points exits 2") {
  auto r = run("converge --self-consistency --model bs-asian --payoff fixed-call "
               "--strike 1 --T 0.25 --thetas 0.25 0.125 0.0625 --orders 0");
  CHECK(r.exit_code == 2);
}

TEST_CASE("an exactly ATM family has a vanishing first correction; slope fit fails with 4") {
  // at the forward strike every odd-order term vanishes by parity, so the
  // N=0 self-consistency differences are pure roundoff and the fit aborts
  auto r = run("converge --self-consistency --model bs-asian --sigma 0.3 "
               "--payoff fixed-call --fix-moneyness 0.0 --T 0.25 "
               "--thetas 0.25 0.125 0.0625 0.03125 --orders 0");
  CHECK(r.exit_code == 4);
  auto doc = json::parse(r.out);
  CHECK(doc.at("pass") == false);
}

TEST_CASE("reruns with the same config are byte-identical") {
  const fs::path cfg = temp_file("kolmex_cli_cfg.json");
  {
    std::ofstream out(cfg);
    out << R"({
      "model": {"id": "bs-asian", "sigma": 0.25},
      "payoff": {"id": "fixed-call", "strike": 1.05, "T": 0.75},
      "state": {"t": 0.25, "s0": 1.1, "a0": 0.3},
      "N": 3
    })";
  }
  const std::string args = "price --config " + cfg.string();
  auto a = run(args);
  auto b = run(args);
  CHECK(a.exit_code == 0);
  CHECK(a.out == b.out);
  auto doc = json::parse(a.out);
  CHECK(doc.at("N") == 3);
  CHECK(doc.at("T") == 0.75);
  fs::remove(cfg);
}

TEST_CASE("explicit flags override config-file values") {
  const fs::path cfg = temp_file("kolmex_cli_cfg2.json");
  {
    std::ofstream out(cfg);
    out << R"({
      "model": {"id": "bs-asian", "sigma": 0.25},
      "payoff": {"id": "fixed-call", "strike": 1.05, "T": 0.75},
      "N": 3
    })";
  }
  auto r = run("price --config " + cfg.string() + " --N 1 --strike 0.9");
  CHECK(r.exit_code == 0);
  auto doc = json::parse(r.out);
  CHECK(doc.at("N") == 1);
  CHECK(doc.at("values").size() == 2);
  fs::remove(cfg);
}

TEST_CASE("--output honors KOLMEX_OUTPUT_DIR for relative paths") {
  const fs::path dir = fs::temp_directory_path() / "kolmex_cli_outdir";
  fs::create_directories(dir);
  setenv("KOLMEX_OUTPUT_DIR", dir.c_str(), 1);
  auto r = run("price --model bs-asian --payoff fixed-call --strike 1 --T 0.5 "
               "--N 1 --output price.json");
  unsetenv("KOLMEX_OUTPUT_DIR");
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());
  std::ifstream in(dir / "price.json");
  REQUIRE(in.good());
  auto doc = json::parse(in);
  CHECK(doc.at("N") == 1);
  fs::remove_all(dir);
}

TEST_CASE("mc subcommand reports mean, standard error and path count") {
  auto r = run("mc --model bs-asian --sigma 0.3 --payoff fixed-call --strike 1 "
               "--T 0.25 --paths 20000 --steps-per-unit 400 --seed 7");
  CHECK(r.exit_code == 0);
  auto doc = json::parse(r.out);
  const auto& mc = doc.at("mc");
  CHECK(mc.at("paths") == 20000);
  CHECK(mc.at("std_error").get<double>() > 0.0);
  CHECK(mc.at("mean").get<double>() > 0.0);
}
