#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

#include "fdlab/dynamics.hpp"
#include "fdlab/exact.hpp"
#include "instances.hpp"

using namespace fdlab;
using doctest::Approx;

namespace {

ModelPtr k2_rc() {
  return std::make_shared<RandomClusterModel>(Graph::complete(2), std::vector<double>{0.5},
                                              std::vector<double>{1.0, 1.0});
}

/// Chi-square style check: every empirical frequency within `z` standard
/// errors of the exact law.
void check_frequencies(const std::map<std::uint64_t, double>& counts, double total,
                       const DistributionVector& law, double z = 4.5) {
  for (std::size_t i = 0; i < law.size(); ++i) {
    const auto it = counts.find(law.support->state(i).encode());
    const double freq = it == counts.end() ? 0.0 : it->second / total;
    const double se = std::sqrt(law[i] * (1 - law[i]) / total);
    CHECK(std::abs(freq - law[i]) <= z * se + 1e-12);
  }
}

}  // namespace

TEST_CASE("glauber replay and determinism") {
  auto rc = k2_rc();
  const ChainRun a = glauber_run(rc, State::parse("1"), 1000, 7, {0, 10, 500, 1000});
  const ChainRun b = glauber_run(rc, State::parse("1"), 1000, 7, {0, 10, 500, 1000});
  CHECK(a.replay_matches());
  CHECK(a.recorded == b.recorded);
  CHECK(a.final_state == b.final_state);
  CHECK(a.recorded.size() == 4);
  CHECK(a.replay(1000) == a.final_state);
  CHECK_THROWS_AS(glauber_run(std::make_shared<HardcoreModel>(Graph::complete(2), 1.0),
                              State::parse("11"), 10, 1),
                  InvalidArgument);
}

TEST_CASE("single variable: one step is an exact draw") {
  auto m = std::make_shared<HardcoreModel>(Graph(1, {}), 3.0);
  std::map<std::uint64_t, double> counts;
  const int runs = 20000;
  for (int s = 0; s < runs; ++s) counts[glauber_run(m, State::parse("0"), 1, s, {}, false).final_state.encode()]++;
  check_frequencies(counts, runs, stationary_distribution(*m));
}

TEST_CASE("hardcore chain stays in the support") {
  auto hc = std::make_shared<HardcoreModel>(Graph::cycle(5), 2.0);
  const ChainRun r = glauber_run(hc, State::zeros(5), 2000, 3);
  State x = r.initial;
  for (const auto& u : r.log) {
    x.set(u.var, u.value);
    CHECK(hc->in_support(x));
  }
}

TEST_CASE("glauber occupancy on K2 random cluster") {
  auto rc = k2_rc();
  const std::uint64_t steps = 200000;
  const ChainRun r = glauber_run(rc, State::parse("0"), steps, 7);
  double ones = 0;
  State x = r.initial;
  std::size_t k = 0;
  for (std::uint64_t t = 1; t <= steps; ++t) {
    while (k < r.log.size() && r.log[k].step == t) x.set(r.log[k].var, r.log[k].value), ++k;
    ones += x[0];
  }
  // Correlated samples: the 2-state chain has spectral gap 1, so the
  // variance inflation is at most 1 + 2 sum rho^t with rho = 0 here.
  const double se = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / steps);
  CHECK(std::abs(ones / steps - 1.0 / 3.0) < 4 * se);
}

TEST_CASE("lifted glauber matches the lifted law") {
  auto base = k2_rc();
  auto lifted = lift_model(base, 0.4);
  std::map<std::uint64_t, double> counts;
  const int runs = 20000;
  for (int s = 0; s < runs; ++s)
    counts[glauber_run(lifted, State::stars(1), 30, s, {}, false).final_state.encode()]++;
  check_frequencies(counts, runs, stationary_distribution(*lifted));
}

TEST_CASE("field dynamics step") {
  auto rc = std::make_shared<RandomClusterModel>(Graph::path(3), std::vector<double>{0.4, 0.7},
                                                 std::vector<double>{0.5, 0.5, 0.5});
  const double theta = 0.3;
  // From 0_V every variable is free: one step is an exact draw from theta*mu.
  std::map<std::uint64_t, double> counts;
  RngStream rng = make_stream(2, 0, "field");
  const int runs = 40000;
  for (int s = 0; s < runs; ++s) counts[field_dynamics_step(*rc, theta, State::zeros(2), rng).encode()]++;
  check_frequencies(counts, runs, stationary_distribution(*tilt(rc, theta)));

  // The empirical one-step law from 1_V matches the exact field kernel row.
  const Kernel fd = fd_kernel(*rc, theta);
  const std::size_t row = fd.support()->require_index(State::ones(2));
  DistributionVector law{fd.support(), std::vector<double>(fd.row(row), fd.row(row) + fd.size())};
  counts.clear();
  for (int s = 0; s < runs; ++s) counts[field_dynamics_step(*rc, theta, State::ones(2), rng).encode()]++;
  check_frequencies(counts, runs, law);

  // Glauber inner mode stays in the support.
  State x = State::ones(2);
  for (int s = 0; s < 100; ++s) {
    x = field_dynamics_step(*rc, theta, x, rng, GlauberInner{5});
    CHECK(rc->in_support(x));
  }
}

TEST_CASE("simulate_algorithm") {
  // One variable, T1 = T2 = 1: output law equals lift(1) pushed through P_cl P_sGD.
  auto m = std::make_shared<HardcoreModel>(Graph(1, {}), 1.5);
  const double theta = 0.5;
  const auto seq = algorithm_kernel_sequence(*m, theta, 1, 1);
  const SupportPtr lifted = seq[0][0]->support();
  const DistributionVector base = stationary_distribution(*m);
  const DistributionVector start = lift_pushforward(point_mass(base.support, State::ones(1)), theta, lifted);
  const DistributionVector exact = contract_pushforward(propagate(start, seq).back(), base.support);
  std::map<std::uint64_t, double> counts;
  const int runs = 40000;
  for (int s = 0; s < runs; ++s) counts[simulate_algorithm(m, theta, 1, 1, s).output.encode()]++;
  check_frequencies(counts, runs, exact);

  auto hc = std::make_shared<HardcoreModel>(Graph::complete(2), 1.0);
  CHECK_THROWS_AS(simulate_algorithm(hc, theta, 2, 2, 1), InvalidArgument);

  auto rc = k2_rc();
  const AlgorithmRun run = simulate_algorithm(rc, 0.3, 3, 4, 5, {0, 4, 12});
  CHECK(run.lifted.replay_matches());
  for (const auto& [t, y] : run.lifted.recorded) CHECK(rc->in_support(contract(y)));
  CHECK(run.output == contract(run.lifted.final_state));
}

TEST_CASE("algorithm output approaches the field dynamics step as T2 grows") {
  auto rc = k2_rc();
  const double theta = 0.4;
  const DistributionVector mu = stationary_distribution(*rc);
  const Kernel fd = fd_kernel(*rc, theta, mu.support);
  const DistributionVector fd_out = fdlab::apply(point_mass(mu.support, State::ones(1)), fd);
  double prev = 1.0;
  for (std::size_t t2 : {1, 2, 4, 8, 16, 32, 64, 128, 256}) {
    const auto seq = algorithm_kernel_sequence(*rc, theta, 1, t2);
    const SupportPtr lifted = seq[0][0]->support();
    const auto start = lift_pushforward(point_mass(mu.support, State::ones(1)), theta, lifted);
    const double tv = tv_distance(contract_pushforward(propagate(start, seq).back(), mu.support), fd_out);
    CHECK(tv <= prev + 1e-15);
    prev = tv;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("censored glauber") {
  Graph g(4, {{0, 2}, {1, 2}, {1, 3}}, 2);
  auto bhc = std::make_shared<BipartiteHardcoreModel>(g, 1.2, 0.8);
  const State x0 = State::ones(4);
  const ChainRun never = censored_glauber(bhc, x0, NeverSchedule{}, 500, 3);
  CHECK(never.final_state == x0);
  const ChainRun always = censored_glauber(bhc, x0, AlwaysSchedule{}, 500, 3, {100, 500});
  const ChainRun plain = glauber_run(bhc, x0, 500, 3, {100, 500});
  CHECK(always.recorded == plain.recorded);

  const BipartiteSchedule sched(2, 5, 9);
  for (std::uint64_t t = 1; t <= 40; ++t) {
    const std::size_t v = sched.phase_vertex((t - 1) / 5);
    CHECK(sched.allowed(t, v));
    CHECK(sched.allowed(t, 2));
    CHECK(sched.allowed(t, 3));
    CHECK_FALSE(sched.allowed(t, 1 - v));
  }
  const ChainRun c = censored_glauber(bhc, x0, sched, 300, 4);
  CHECK(c.replay_matches());
}

TEST_CASE("trajectory dump format") {
  auto rc = k2_rc();
  const ChainRun r = glauber_run(rc, State::parse("1"), 5, 1, {0, 5});
  std::ostringstream out;
  write_trajectory(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "0\t1");
  std::getline(in, line);
  CHECK(line.rfind("5\t", 0) == 0);
}
