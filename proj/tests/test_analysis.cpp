#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "fdlab/analysis.hpp"
#include "fdlab/exact.hpp"
#include "instances.hpp"
#include "json.hpp"

using namespace fdlab;
using doctest::Approx;

namespace {

ModelPtr product_model(std::vector<double> lambda) {
  // Ising with no edges is a product of Bernoulli(lambda/(1+lambda)).
  const std::size_t n = lambda.size();
  return std::make_shared<IsingModel>(Graph(n, {}), std::vector<double>{}, std::move(lambda));
}

ModelPtr hardcore_k2() { return std::make_shared<HardcoreModel>(Graph::complete(2), 1.0); }

}  // namespace

TEST_CASE("pinning table") {
  auto hc = hardcore_k2();
  PinningTable t(*hc);
  CHECK(t.size() == 9);
  const auto free = t.all_free();
  CHECK(t.marginal_one(free, 0) == Approx(1.0 / 3.0));
  CHECK(t.marginal_one(t.with(free, 0, 0), 1) == Approx(0.5));
  CHECK(t.marginal_one(t.with(free, 0, 1), 1) == 0.0);
  CHECK_FALSE(t.feasible(t.encode({1, 1})));
  CHECK(t.decode(t.encode({1, -1})) == Pinning{1, -1});
  RngStream rng = make_stream(1, 0, "pinning-table");
  auto rc = testing::random_rc(rng, 3, 3);
  PinningTable rt(*rc);
  for (std::uint64_t code = 0; code < rt.size(); ++code) {
    const Pinning p = rt.decode(code);
    if (!rt.feasible(code)) {
      CHECK_FALSE(rc->feasible(p));
      continue;
    }
    for (std::size_t v = 0; v < rc->size(); ++v)
      if (p[v] < 0) CHECK(rt.marginal_one(code, v) == Approx(rc->marginal(p, v)[1]).epsilon(1e-12));
  }
}

TEST_CASE("influence matrix") {
  auto hc = hardcore_k2();
  const InfluenceMatrix psi = influence_matrix(*hc, Pinning{-1, -1});
  CHECK(psi.at(0, 1) == Approx(-0.5));
  CHECK(psi.at(0, 0) == 1.0);
  CHECK(sinf_norm(psi) == Approx(1.5));
  const InfluenceMatrix no_diag = influence_matrix(*hc, Pinning{-1, -1}, false);
  CHECK(sinf_norm(no_diag) == Approx(0.5));

  auto prod = product_model({0.3, 0.7, 1.0});
  const InfluenceMatrix pp = influence_matrix(*prod, Pinning{-1, -1, -1});
  for (std::size_t u = 0; u < 3; ++u)
    for (std::size_t v = 0; v < 3; ++v) CHECK(pp.at(u, v) == Approx(u == v ? 1.0 : 0.0));
  CHECK(spectral_independence(PinningTable(*prod)).eta == Approx(1.0));
  CHECK_THROWS_AS(influence_matrix(*hc, Pinning{1, 1}), InvalidArgument);
}

TEST_CASE("marginal stability") {
  for (double lambda : {0.5, 1.0, 3.0}) {
    auto m = std::make_shared<HardcoreModel>(Graph(1, {}), lambda);
    const MarginalStability s = marginal_stability(PinningTable(*m));
    REQUIRE(s.k.has_value());
    CHECK(*s.k == Approx(1.0 + lambda));
  }
  auto prod = product_model({0.5, 0.25});
  const MarginalStability s = marginal_stability(PinningTable(*prod));
  REQUIRE(s.k.has_value());
  CHECK(*s.k == Approx(1.5));
  // Flipped RC with p >= 2/3 is 2-marginally stable.
  auto rc = std::make_shared<RandomClusterModel>(Graph::complete(3), std::vector<double>{0.7, 0.8, 0.9},
                                                 std::vector<double>{0.5, 0.2, 0.9});
  const MarginalStability f = marginal_stability(PinningTable(*flip(rc)));
  REQUIRE(f.k.has_value());
  CHECK(*f.k <= 2.0 + 1e-12);
  CHECK_THROWS_AS(marginal_stability(PinningTable(*product_model(std::vector<double>(11, 0.5)))),
                  GuardExceeded);
}

TEST_CASE("coupling independence") {
  const CouplingResult hc = coupling_independence(PinningTable(*hardcore_k2()));
  CHECK(hc.c == Approx(1.5));
  const CouplingResult prod = coupling_independence(PinningTable(*product_model({0.3, 0.6, 0.9})));
  CHECK(prod.c == Approx(1.0));
}

TEST_CASE("entropic independence witness") {
  auto prod = product_model({0.3, 0.6});
  const DistributionVector mu = stationary_distribution(*prod);
  // Product nu: tilt each coordinate independently.
  DistributionVector nu = stationary_distribution(*product_model({0.9, 0.2}), mu.support);
  CHECK(*ei_ratio(nu, mu) == Approx(1.0));
  // Point mass ratio formula.
  auto hc = hardcore_k2();
  const DistributionVector hmu = stationary_distribution(*hc);
  const State s = State::parse("01");
  const DistributionVector pm = point_mass(hmu.support, s);
  const double p_joint = hmu.at(s);
  const double expect = (-std::log(1.0 - 1.0 / 3.0) - std::log(1.0 / 3.0)) / (-std::log(p_joint));
  CHECK(*ei_ratio(pm, hmu) == Approx(expect));
  CHECK_FALSE(ei_ratio(hmu, hmu).has_value());
  const EiWitness w = ei_witness(hmu, 50, 3);
  CHECK(w.ratio >= expect - 1e-12);
  const EiWitness w2 = ei_witness(hmu, 50, 3);
  CHECK(w.ratio == w2.ratio);
}

TEST_CASE("flip invariance of the report") {
  RngStream rng = make_stream(2, 0, "flip-invariance");
  for (int trial = 0; trial < 3; ++trial) {
    auto rc = testing::random_rc(rng, 3, 3);
    ReportOptions opt;
    opt.ei_iterations = 30;
    const IndependenceReport a = independence_report(*rc, opt);
    const IndependenceReport b = independence_report(*flip(rc), opt);
    CHECK(a.spectral.eta == Approx(b.spectral.eta).epsilon(1e-10));
    CHECK(a.coupling.c == Approx(b.coupling.c).epsilon(1e-10));
    const auto j = nlohmann::json::parse(a.to_json());
    CHECK(j.contains("spectral"));
    CHECK(j.contains("coupling"));
  }
}

TEST_CASE("kappa closed forms") {
  const AlphaSchedule c = AlphaSchedule::constant(0.1, 2.0);
  CHECK(kappa(c) == Approx(std::exp(-4.0 * 2.0 * std::log(10.0))));
  CHECK(log_kappa(c.scaled(2.0)) == Approx(2.0 * log_kappa(c)));
  const AlphaSchedule pw(0.01, {0.0, 1.0, 3.0}, {1.0, 2.0, 0.5});
  const double l = -std::log(0.01);
  CHECK(pw.integral() == Approx(1.0 + 2.0 * 2.0 + 0.5 * (l - 3.0)));
  CHECK(quadrature_integral(pw) == Approx(pw.integral()).epsilon(1e-10));
  CHECK(log_kappa(AlphaSchedule::constant(0.01, 1.0)) < log_kappa(AlphaSchedule::constant(0.1, 1.0)));
  CHECK_THROWS_AS(AlphaSchedule(0.5, {0.0, 0.0}, {1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(AlphaSchedule(0.5, {0.0}, {-1.0}), InvalidArgument);
}

TEST_CASE("paper schedules") {
  const double theta = rc_theta(0.5, 0.5, 1024);
  CHECK(theta == Approx(0.5 * std::min(1e-7, 0.5 / 27.0) / std::log(1024.0)));
  const AlphaSchedule rc = rc_schedule(0.5, 0.5, 1024);
  CHECK(rc.theta() == Approx(theta));
  CHECK(rc.value().front() == Approx(3.0 / 0.25));
  CHECK(rc.value().back() == Approx(5e4));
  CHECK(rc.start()[1] == Approx(-std::log(0.5 * 0.5 * 0.25)));
  CHECK(std::abs(quadrature_integral(rc) - rc.integral()) <= 1e-9 * rc.integral());

  const AlphaSchedule bhc = bhc_schedule(1.0, 3, 0.1, 64);
  CHECK(bhc.theta() == Approx(bhc_theta(1.0, 3, 64)));
  CHECK(bhc.value().front() == Approx(1e4 * std::pow(2.0, 15) / 0.1));
  CHECK(std::abs(quadrature_integral(bhc) - bhc.integral()) <= 1e-9 * bhc.integral());

  const TBound tb = t_bound(rc, 1e-3, 0.1);
  const double inner = std::log(std::log(1e3)) + std::log(1.0 / (2 * 0.01));
  CHECK(tb.log_value == Approx(-log_kappa(rc) + std::log(inner)).epsilon(1e-9));
  const TBound small = t_bound(AlphaSchedule::constant(0.5, 0.1), 1e-3, 0.1);
  CHECK(small.value == Approx(inner / kappa(AlphaSchedule::constant(0.5, 0.1)) + 1.0));
}

TEST_CASE("uniqueness") {
  CHECK(uniqueness_check(1e-6, 2, 1, 1, 0.0).holds);
  CHECK(uniqueness_check(1e-6, 2, 1, 1, 0.0).max_derivative < 1e-5);
  for (int delta_max : {3, 4, 5}) {
    const double dp = 0.2;
    const double lambda = (1.0 - dp) * lambda_c(delta_max);
    for (const auto& row : uniqueness_grid(lambda, delta_max - 1, lambda, dp / 10.0))
      CHECK_MESSAGE(row.result.holds, "Delta=" << delta_max << " w=" << row.w);
  }
  // Derivative is consistent with finite differences.
  const double x = 0.3, h = 1e-6;
  const double fd = (uniqueness_f(2.0, 3, 1.5, 0.7, x + h) - uniqueness_f(2.0, 3, 1.5, 0.7, x - h)) / (2 * h);
  CHECK(uniqueness_f_prime(2.0, 3, 1.5, 0.7, x) == Approx(fd).epsilon(1e-6));
  // With w = d and beta = lambda, F is the two-step hardcore tree recursion,
  // which stops contracting well above lambda_c(d + 1).
  CHECK_FALSE(uniqueness_check(10.0, 4, 10.0, 4.0, 0.0).holds);
  CHECK(uniqueness_check(0.5, 4, 0.5, 4.0, 0.0).holds);
}

TEST_CASE("independence inequalities on random instances") {
  RngStream rng = make_stream(3, 0, "inequalities");
  for (int trial = 0; trial < 6; ++trial) {
    auto inst = testing::random_monotone(rng, 4);
    if (inst.model->size() < 2) continue;
    ReportOptions opt;
    opt.ei_iterations = 40;
    const IndependenceReport r = independence_report(*inst.model, opt);
    CHECK(r.spectral.eta <= r.coupling.c + 1e-9);
    if (r.stability.k) CHECK(r.ei.ratio <= 384.0 * r.spectral.eta * std::pow(*r.stability.k, 4) + 1e-6);
  }
}
