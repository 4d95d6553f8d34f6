#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tempdir.hpp"
#include "tlaser/store.hpp"

using namespace tlaser;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string("'") + TLASER_CLI_PATH + "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Run r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("info and unknown flags") {
  TempDir dir;
  write_tns(dir / "a.tns", oracle::random_tensor(3, 4, 2, 1));
  const Run r = run("--json info " + q(dir / "a.tns"));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["dims"] == json({3, 4, 2}));
  CHECK(j["dtype"] == "float64");

  CHECK(run("info " + q(dir / "a.tns") + " --bogus").code == 1);
  CHECK(run("").code == 1);
  CHECK(run("--help").code == 0);
}

TEST_CASE("exit codes: io, domain") {
  TempDir dir;
  CHECK(run("info " + q(dir / "missing.tns")).code == 2);
  std::ofstream(dir / "junk.tns") << "junk";
  CHECK(run("info " + q(dir / "junk.tns")).code == 2);
  write_tns(dir / "w.tns", oracle::random_matrix(8, 8, 2));
  // A matrix needs --kind/--heads before it can be treated as a tensor.
  CHECK(run("spectrum " + q(dir / "w.tns")).code == 1);
  CHECK(run("spectrum " + q(dir / "w.tns") + " --kind attention --heads 3").code == 1);
  CHECK(run("spectrum " + q(dir / "w.tns") + " --kind attention --heads 2").code == 0);
}

TEST_CASE("spectrum, csvd and lanczos JSON") {
  TempDir dir;
  write_tns(dir / "a.tns", oracle::geometric_tensor(20, 12, 3, 0.6, 3));
  const Run s = run("--json spectrum " + q(dir / "a.tns") + " --top 50");
  REQUIRE(s.code == 0);
  const json sj = json::parse(s.out);
  CHECK(sj["top"] == 12);
  CHECK(sj["spectrum"].back()["cumulative_energy_squared"].get<double>() ==
        doctest::Approx(1.0));

  const Run c = run("--json csvd " + q(dir / "a.tns") + " --rank 12 --out " + q(dir / "r.tns"));
  REQUIRE(c.code == 0);
  CHECK(json::parse(c.out)["rel_error"].get<double>() <= 1e-12);
  CHECK(read_tns(dir / "r.tns").dims() == std::vector<std::uint64_t>{20, 12, 3});

  const Run l = run("--json --seed 4 lanczos " + q(dir / "a.tns") + " -k 10 --triplets 2");
  REQUIRE(l.code == 0);
  const json lj = json::parse(l.out);
  CHECK(lj["triplets"].size() == 2);
  CHECK(lj["seed"] == 4);
  CHECK(run("lanczos " + q(dir / "a.tns") + " -k 2 --triplets 2").code == 1);
}

TEST_CASE("compare, roundtrip and compress") {
  TempDir dir;
  write_tns(dir / "q.tns", oracle::random_matrix(16, 16, 5));
  const Run c = run("--json compare --file " + q(dir / "q.tns") +
                    " --kind attention --heads 4 --rank 2");
  REQUIRE(c.code == 0);
  const json cj = json::parse(c.out);
  CHECK(cj["laser"]["params_retained"].get<std::uint64_t>() <=
        cj["tlaser"]["params_retained"].get<std::uint64_t>());

  const Run rt = run("--json roundtrip --file " + q(dir / "q.tns") + " --kind attention --heads 4");
  REQUIRE(rt.code == 0);
  CHECK(json::parse(rt.out)["ok"] == true);

  std::ofstream(dir / "manifest.json") << R"({"layers": [
    {"name": "q", "file": "q.tns", "shape": [16, 16], "kind": "attention", "heads_or_blocks": 4}]})";
  std::ofstream(dir / "config.json") << R"({"layers": [
    {"name": "q", "delta": true, "policy": {"mode": "fixed_ratio", "rho": 0.5}}]})";
  std::ofstream(dir / "bad.json") << R"({"layers": [
    {"name": "q", "delta": true, "policy": {"mode": "energy_squared", "tau": 1.2}}]})";
  const std::string base = "compress --manifest " + q(dir / "manifest.json");
  const Run ok = run("--json " + base + " --config " + q(dir / "config.json") + " --out " +
                     q(dir / "out"));
  REQUIRE(ok.code == 0);
  CHECK(json::parse(ok.out)["layers"][0]["rank_used"] == 2);
  CHECK(fs::exists(dir / "out" / "q.tns"));
  // Output directory now exists and is not empty.
  CHECK(run(base + " --config " + q(dir / "config.json") + " --out " + q(dir / "out")).code == 2);
  CHECK(run(base + " --config " + q(dir / "bad.json") + " --out " + q(dir / "out2")).code == 1);
  CHECK_FALSE(fs::exists(dir / "out2"));
}
