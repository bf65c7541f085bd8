#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "fdlab/exact.hpp"
#include "fdlab/models.hpp"
#include "instances.hpp"

using namespace fdlab;
using doctest::Approx;

namespace {

std::shared_ptr<const RandomClusterModel> k2_rc() {
  return std::make_shared<RandomClusterModel>(Graph::complete(2), std::vector<double>{0.5},
                                              std::vector<double>{1.0, 1.0});
}

double normalized(const Model& m, const State& s) {
  return stationary_distribution(m).at(s);
}

/// Every fast-path conditional equals the weight-ratio reference.
void check_conditionals(const Model& m) {
  const SupportPtr sup = enumerate_support(m);
  for (const State& x : sup->states())
    for (std::size_t v = 0; v < m.size(); ++v) {
      const SiteLaw fast = m.conditional(x, v), slow = m.conditional_by_weights(x, v);
      for (int k = 0; k < 3; ++k) CHECK(fast[k] == Approx(slow[k]).epsilon(1e-12));
    }
}

}  // namespace

TEST_CASE("graph file parsing") {
  std::istringstream in("# triangle\n3 3\n0 1\n1 2\n0 2\n");
  const Graph g = read_graph(in);
  CHECK(g.num_vertices() == 3);
  CHECK(g.num_edges() == 3);
  CHECK(g.max_degree() == 2);
  std::istringstream bip("3 2 bipartite 1\n0 1\n0 2\n");
  const Graph b = read_graph(bip);
  CHECK(b.bipartite());
  CHECK(b.left_size() == 1);
  std::istringstream bad("2 1 bipartite 1\n1 1\n");
  CHECK_THROWS(read_graph(bad));
  std::istringstream same_side("3 1 bipartite 2\n0 1\n");
  CHECK_THROWS(read_graph(same_side));
}

TEST_CASE("random cluster weights on K2") {
  auto rc = k2_rc();
  CHECK(rc->weight(State::parse("0")) == Approx(4.0));
  CHECK(rc->weight(State::parse("1")) == Approx(2.0));
  CHECK(normalized(*rc, State::parse("0")) == Approx(2.0 / 3.0));
  CHECK(rc_marginal_ratio(*rc, State::parse("0"), 0) == Approx(0.5));
  CHECK(rc->conditional(State::parse("0"), 0)[1] == Approx(1.0 / 3.0));
}

TEST_CASE("random cluster marginal ratio branches") {
  auto tri = std::make_shared<RandomClusterModel>(Graph::complete(3),
                                                  std::vector<double>{0.3, 0.6, 0.7},
                                                  std::vector<double>{0.5, 0.2, 0.9});
  for (std::size_t e = 0; e < 3; ++e) {
    State s = State::ones(3);
    CHECK(rc_marginal_ratio(*tri, s, e) == Approx(tri->p()[e] / (1 - tri->p()[e])));
  }
  auto zero = std::make_shared<RandomClusterModel>(Graph::path(3), std::vector<double>{0.3, 0.8},
                                                   std::vector<double>{0.0, 0.0, 0.0});
  for (std::uint64_t c = 0; c < 4; ++c)
    for (std::size_t e = 0; e < 2; ++e)
      CHECK(rc_marginal_ratio(*zero, State::decode(c, 2, Alphabet::binary), e) ==
            Approx(zero->p()[e] / (1 - zero->p()[e])));
  check_conditionals(*tri);
  CHECK_THROWS_AS(RandomClusterModel(Graph::complete(2), {1.0}, {0.5, 0.5}), InvalidArgument);
}

TEST_CASE("ising weights on K2") {
  IsingModel ising(Graph::complete(2), {2.0}, {1.0, 1.0});
  CHECK(ising.weight(State::parse("00")) == Approx(2.0));
  CHECK(ising.weight(State::parse("11")) == Approx(2.0));
  CHECK(ising.weight(State::parse("01")) == Approx(1.0));
  CHECK(ising.weight(State::parse("10")) == Approx(1.0));
  check_conditionals(ising);
  CHECK_THROWS_AS(IsingModel(Graph::complete(2), {0.5}, {1.0, 1.0}), InvalidArgument);
}

TEST_CASE("hardcore support and conditionals") {
  auto hc = std::make_shared<HardcoreModel>(Graph::complete(2), 1.0);
  CHECK_FALSE(hc->in_support(State::parse("11")));
  CHECK(hc->weight(State::parse("11")) == 0.0);
  CHECK(enumerate_support(*hc)->size() == 3);
  HardcoreModel single(Graph(1, {}), 1.0);
  CHECK(single.conditional(State::parse("0"), 0)[1] == Approx(0.5));
  CHECK(hc->conditional(State::parse("01"), 0)[1] == 0.0);
  check_conditionals(*hc);
}

TEST_CASE("subgraph world and bipartite hardcore fast paths") {
  RngStream rng = make_stream(4, 0, "models");
  for (int trial = 0; trial < 10; ++trial) {
    auto rc = testing::random_rc(rng, 4, 5);
    check_conditionals(*sw_for_rc(*rc));
    Graph g = testing::random_bipartite(rng, 2, 2, 4);
    auto bhc = std::make_shared<BipartiteHardcoreModel>(g, 0.7, 1.3);
    check_conditionals(*bhc);
    auto lm = std::make_shared<LeftMarginalModel>(bhc);
    check_conditionals(*lm);
    const SupportPtr sup = enumerate_support(*lm);
    for (const State& x : sup->states())
      for (std::size_t v = 0; v < lm->size(); ++v) {
        const SiteLaw a = lm->conditional(x, v), b = lm->conditional_by_summation(x, v);
        CHECK(a[0] == Approx(b[0]).epsilon(1e-12));
      }
  }
}

TEST_CASE("left marginal matches summing out the right side") {
  Graph g(3, {{0, 1}, {0, 2}}, 1);
  auto bhc = std::make_shared<BipartiteHardcoreModel>(g, 2.0, 0.5);
  auto lm = left_marginal(bhc);
  const DistributionVector full = stationary_distribution(*bhc);
  const DistributionVector left = stationary_distribution(*lm);
  for (const State& l : left.support->states()) {
    double mass = 0.0;
    for (std::size_t i = 0; i < full.size(); ++i)
      if (full.support->state(i)[0] == l[0]) mass += full[i];
    CHECK(left.at(l) == Approx(mass).epsilon(1e-12));
  }
  // Left vertex out of the set (spin 1): odds lambda / (1+beta)^2 of spin 0.
  CHECK(lm->conditional(State::parse("1"), 0)[0] == Approx(2.0 / (2.0 + 1.5 * 1.5)));
}

TEST_CASE("transforms") {
  RngStream rng = make_stream(9, 0, "transforms");
  auto rc = testing::random_rc(rng, 3, 3);
  const DistributionVector base = stationary_distribution(*rc);

  auto t1 = tilt(rc, 1.0);
  CHECK(l1_distance(stationary_distribution(*t1, base.support), base) < 1e-12);
  auto tt = tilt(tilt(rc, 0.3), 0.5);
  auto t15 = tilt(rc, 0.15);
  CHECK(l1_distance(stationary_distribution(*tt, base.support),
                    stationary_distribution(*t15, base.support)) < 1e-12);

  auto ff = flip(flip(rc));
  for (const State& s : base.support->states()) CHECK(ff->weight(s) == Approx(rc->weight(s)));
  auto f = flip(rc);
  for (const State& s : base.support->states()) CHECK(f->weight(fdlab::flip(s)) == Approx(rc->weight(s)));

  auto hc = std::make_shared<HardcoreModel>(Graph::path(3), 2.0);
  auto th = tilt(hc, 0.25);
  REQUIRE(th->kind() == ModelKind::hardcore);
  CHECK(static_cast<const HardcoreModel&>(*th).lambda() == Approx(0.5));

  Pinning p(rc->size(), -1);
  p[0] = 1;
  auto pinned = pin(rc, p);
  const DistributionVector pd = stationary_distribution(*pinned);
  for (const State& s : pd.support->states()) CHECK(s[0] == 1);
  CHECK(pinned->weight(State::zeros(rc->size())) == 0.0);
  CHECK_THROWS_AS(pin(hc, Pinning{1, 1, -1}), InvalidArgument);

  check_conditionals(*t15);
  check_conditionals(*f);
  check_conditionals(*pinned);
}

TEST_CASE("lifted model") {
  HardcoreModel single(Graph(1, {}), 1.0);
  auto lifted = lift_model(std::make_shared<HardcoreModel>(Graph(1, {}), 1.0), 0.5);
  const SiteLaw q = lifted->conditional(State::parse("0", Alphabet::ternary), 0);
  CHECK(q[0] == Approx(0.5));
  CHECK(q[1] == Approx(0.25));
  CHECK(q[2] == Approx(0.25));
  CHECK(enumerate_support(*lifted)->size() == 3);
  CHECK_THROWS_AS(lift_model(std::make_shared<HardcoreModel>(Graph(1, {}), 1.0), 1.0), InvalidArgument);

  RngStream rng = make_stream(12, 0, "lifted");
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = testing::random_monotone(rng, 3);
    auto l = lift_model(inst.model, 0.35);
    check_conditionals(*l);
    const DistributionVector pi = stationary_distribution(*l);
    double mass = 0.0;
    for (const State& y : pi.support->states()) {
      const State x = contract(y);
      const double expect = inst.model->weight(x) * std::pow(0.35, double(y.count(kOne))) *
                            std::pow(0.65, double(y.count(kStar)));
      CHECK(l->weight(y) == Approx(expect).epsilon(1e-12));
      mass += pi.at(y);
    }
    CHECK(mass == Approx(1.0));
  }
}

TEST_CASE("distributions normalize for every family") {
  RngStream rng = make_stream(13, 0, "normalize");
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = testing::random_monotone(rng, 4);
    for (ModelPtr m : {inst.model, tilt(inst.model, 0.4), flip(inst.model),
                       lift_model(inst.model, 0.6)}) {
      const DistributionVector d = stationary_distribution(*m);
      CHECK(std::abs(d.total() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("lambda_c") {
  CHECK(lambda_c(3) == 4.0);
  CHECK(lambda_c(4) == 27.0 / 16.0);
  CHECK(lambda_c(5) == Approx(256.0 / 243.0));
  CHECK_THROWS_AS(lambda_c(2), InvalidArgument);
}

TEST_CASE("parameter files") {
  std::istringstream in("model=rc\n# comment\np.default=0.5\np.1=0.8\nlambda=0.9\n");
  ParamFile pf = ParamFile::parse(in);
  const auto p = pf.per_index("p", 3);
  CHECK(p == std::vector<double>{0.5, 0.8, 0.5});
  CHECK(pf.per_index("lambda", 2) == std::vector<double>{0.9, 0.9});
  CHECK(pf.unknown_keys({"model", "p", "lambda"}).empty());
  CHECK(pf.unknown_keys({"model", "p"}) == std::vector<std::string>{"lambda"});
  std::istringstream dup("a=1\na=2\n");
  CHECK_THROWS(ParamFile::parse(dup));
  const ModelPtr m = build_model(Graph::path(4), pf);
  CHECK(m->kind() == ModelKind::random_cluster);
  CHECK(static_cast<const RandomClusterModel&>(*m).p()[1] == 0.8);
}

TEST_CASE("coupling samplers reproduce their laws") {
  IsingModel ising(Graph::complete(2), {2.0}, {1.0, 1.0});
  auto rc = rc_for_ising(ising);
  CHECK(rc->p()[0] == Approx(0.5));
  const DistributionVector push = rc_to_ising_pushforward(ising, nullptr);
  const DistributionVector law = stationary_distribution(ising, push.support);
  CHECK(tv_distance(push, law) < 1e-12);

  auto k2 = k2_rc();
  auto sw = sw_for_rc(*k2);
  CHECK(sw->p()[0] == Approx(0.25));
  CHECK(sw->eta()[0] == Approx(0.0));
  CHECK(sw_extra_edge_probs(*k2)[0] == Approx(1.0 / 3.0));
  const DistributionVector rc_push = sw_to_rc_pushforward(*k2, nullptr);
  CHECK(rc_push.at(State::parse("0")) == Approx(2.0 / 3.0));

  // Component containing a zero field is all-zero.
  IsingModel dead(Graph::complete(2), {3.0}, {0.0, 1.0});
  auto rc_dead = rc_for_ising(dead);
  RngStream rng = make_stream(1, 0, "rc-ising");
  for (int i = 0; i < 50; ++i) {
    const State s = rc_to_ising(State::parse("1"), *rc_dead, dead, rng);
    CHECK(s == State::parse("00"));
  }
}
