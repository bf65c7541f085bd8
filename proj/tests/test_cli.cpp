#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cli_app.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("fdlab_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = fdlab::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kK2 = "2 1\n0 1\n";
const char* kK2Rc = "model=rc\np=0.5\nlambda=1\n";

}  // namespace

TEST_CASE("exit code 2 on configuration errors") {
  Workspace ws;
  const auto g = ws.write("k2.graph", kK2);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"verify", "--graph", g}).code == 2);
  const auto unknown = ws.write("bad.params", "model=rc\np=0.5\nlambda=1\ncolour=blue\n");
  const Result r = run({"verify", "--graph", g, "--params", unknown});
  CHECK(r.code == 2);
  CHECK(r.err.find("colour") != std::string::npos);
  const auto p = ws.write("k2.params", kK2Rc);
  CHECK(run({"verify", "--graph", g, "--params", p, "--transform", "twist"}).code == 2);
  CHECK(run({"verify", "--graph", g, "--params", p, "--check", "nonsense"}).code == 2);
  CHECK(run({"verify", "--graph", ws.path("missing.graph"), "--params", p}).code == 2);
}

TEST_CASE("verify suite on K2 random cluster passes") {
  Workspace ws;
  const auto g = ws.write("k2.graph", kK2);
  const auto p = ws.write("k2.params", std::string(kK2Rc) + "theta=0.25\n");
  const auto out = ws.path("verify.json");
  const Result r = run({"verify", "--graph", g, "--params", p, "--t1", "2", "--t2", "3",
                        "--seed", "4", "--out", out});
  CHECK(r.code == 0);
  const json j = json::parse(slurp(out));
  CHECK(j["all_passed"].get<bool>());
  CHECK(j["seed"].get<std::uint64_t>() == 4);
  CHECK(j["config_hash"].get<std::string>().size() == 16);
  for (const auto& c : j["checks"]) CHECK_MESSAGE(c["passed"].get<bool>(), c.dump());
  bool saw_counterexample = false;
  for (const auto& c : j["checks"])
    if (c["check"] == "phase-counterexample") {
      saw_counterexample = true;
      CHECK(c["status"] == "skipped");  // one edge gives a single variable
    }
  CHECK(saw_counterexample);
}

TEST_CASE("verify flags plain hardcore as an expected negative") {
  Workspace ws;
  const auto g = ws.write("k2.graph", kK2);
  const auto p = ws.write("hc.params", "model=hardcore\nlambda=1\n");
  const Result r = run({"verify", "--graph", g, "--params", p, "--check", "monotone-system",
                        "--check", "stochastic-monotonicity"});
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  for (const auto& c : j["checks"]) CHECK(c["status"] == "expected-negative pass");
}

TEST_CASE("verify on an Ising model covers the RC transfer") {
  Workspace ws;
  const auto g = ws.write("tri.graph", "3 3\n0 1\n1 2\n0 2\n");
  const auto p = ws.write("ising.params", "model=ising\nbeta=2\nlambda=0.5\n");
  const Result r = run({"verify", "--graph", g, "--params", p, "--check", "rc-ising", "--check",
                        "detailed-balance", "--check", "lift-identity"});
  CHECK(r.code == 0);
  const json j = json::parse(r.out);
  for (const auto& c : j["checks"]) CHECK(c["status"] == "pass");
}

TEST_CASE("sample writes identical files on reruns") {
  Workspace ws;
  const auto g = ws.write("k2.graph", kK2);
  const auto p = ws.write("k2.params", kK2Rc);
  const auto a = ws.path("a"), b = ws.path("b");
  for (const auto& prefix : {a, b})
    REQUIRE(run({"sample", "--graph", g, "--params", p, "--steps", "20000", "--seed", "7",
                 "--record", "0,100,20000", "--out", prefix})
                .code == 0);
  CHECK(slurp(a + ".trajectory.tsv") == slurp(b + ".trajectory.tsv"));
  CHECK(slurp(a + ".occupancy.csv") == slurp(b + ".occupancy.csv"));
  const std::string occ = slurp(a + ".occupancy.csv");
  CHECK(occ.rfind("# config_hash=", 0) == 0);
  CHECK(occ.find("seed=7") != std::string::npos);
  CHECK(occ.find("\n0,1\n") != std::string::npos);
  CHECK_FALSE(fs::exists(a + ".occupancy.csv.tmp"));

  for (const char* dyn : {"field", "algorithm"}) {
    const auto q = ws.write(std::string(dyn) + ".params", std::string(kK2Rc) + "dynamics=" + dyn + "\n");
    CHECK(run({"sample", "--graph", g, "--params", q, "--steps", "50", "--out", ws.path(dyn)}).code == 0);
  }
  const auto bg = ws.write("bip.graph", "3 2 bipartite 1\n0 1\n0 2\n");
  const auto bp = ws.write("bhc.params", "model=bipartite-hardcore\nlambda=1\nbeta=1\ndynamics=censored\n");
  CHECK(run({"sample", "--graph", bg, "--params", bp, "--steps", "50", "--out", ws.path("cens")}).code == 0);
}

TEST_CASE("algorithm with an infeasible start is a clean error") {
  Workspace ws;
  const auto g = ws.write("k2.graph", kK2);
  const auto p = ws.write("hc.params", "model=hardcore\nlambda=1\ndynamics=algorithm\n");
  const Result r = run({"sample", "--graph", g, "--params", p, "--out", ws.path("x")});
  CHECK(r.code == 2);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("mixing table") {
  Workspace ws;
  const auto g = ws.write("k2.graph", kK2);
  const auto p = ws.write("k2.params", std::string(kK2Rc) + "theta=0.5\n");
  const auto out = ws.path("mix.csv");
  CHECK(run({"mixing", "--graph", g, "--params", p, "--eps", "0.1", "--out", out}).code == 0);
  const std::string csv = slurp(out);
  CHECK(csv.find("holds") != std::string::npos);
  CHECK(csv.find(",true\n") != std::string::npos);

  const auto one = ws.write("one.graph", "1 0\n");
  const auto hp = ws.write("hc1.params", "model=hardcore\nlambda=1\ntheta=0.5\n");
  const Result r = run({"mixing", "--graph", one, "--params", hp, "--eps", "0.4"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line, header, row;
  std::getline(in, line);
  std::getline(in, header);
  std::getline(in, row);
  // eps,theta,start,gd_from_start,fd_all_starts,fd_from_ones,delta,tilted,tilted_pinnings,product,holds
  std::vector<std::string> cells;
  std::stringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
  REQUIRE(cells.size() == 11);
  CHECK(cells[3] == "1");
  CHECK(cells[4] == "1");
  CHECK(cells[5] == "1");
  CHECK(cells[7] == "1");
  CHECK(cells[9] == "1");
}

TEST_CASE("analyze and kernel export") {
  Workspace ws;
  const auto g = ws.write("k2.graph", kK2);
  const auto p = ws.write("k2.params", std::string(kK2Rc) + "ei_iterations=20\n");
  const Result r = run({"analyze", "--graph", g, "--params", p, "--transform", "flip"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j.contains("report"));
  CHECK(j["schedule"]["kind"] == "random-cluster");

  const auto bg = ws.write("star.graph", "4 3 bipartite 1\n0 1\n0 2\n0 3\n");
  const auto bp = ws.write("bhc.params", "model=bipartite-hardcore\nlambda=0.5\nbeta=0.5\nei_iterations=10\n");
  const Result b = run({"analyze", "--graph", bg, "--params", bp});
  REQUIRE(b.code == 0);
  const json bj = json::parse(b.out);
  CHECK(bj["uniqueness"]["grid"].size() == 19);

  const auto kp = ws.write("kern.params", std::string(kK2Rc) + "kernel=pcl\ntheta=0.5\n");
  const auto out = ws.path("k.csv");
  CHECK(run({"kernel-export", "--graph", g, "--params", kp, "--out", out}).code == 0);
  const std::string csv = slurp(out);
  CHECK(csv.find("state,0,1,*") != std::string::npos);

  const auto pinf = ws.write("pin.txt", "1\n");
  const auto gp = ws.write("gl.params", std::string(kK2Rc));
  CHECK(run({"kernel-export", "--graph", g, "--params", gp, "--transform", "pin=" + pinf}).code == 0);
  const auto lifted = run({"kernel-export", "--graph", g, "--params", gp, "--transform", "lift=0.5"});
  CHECK(lifted.code == 0);
  CHECK(lifted.out.find("*") != std::string::npos);
}

TEST_CASE("the installed binary reports exit codes") {
  Workspace ws;
  const auto g = ws.write("k2.graph", kK2);
  const auto p = ws.write("k2.params", kK2Rc);
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  const std::string bin = FDLAB_CLI_PATH;
  CHECK(status(bin + " verify --graph " + g + " --params " + p) == 0);
  CHECK(status(bin + " verify --graph " + g) == 2);
  CHECK(status(bin + " --help") == 0);
}
