#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <bit>

#include "fdlab/order.hpp"
#include "fdlab/rng.hpp"

using namespace fdlab;

namespace {

std::vector<double> random_law(RngStream& rng, std::size_t n, double zero_prob = 0.3) {
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) {
    x = uniform01(rng) < zero_prob ? 0.0 : uniform01(rng);
    total += x;
  }
  if (total == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& x : p) x /= total;
  return p;
}

std::size_t brute_force_up_sets(const Poset& poset) {
  std::size_t count = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << poset.size()); ++mask) {
    UpSet u;
    u.members.resize(poset.size());
    for (std::size_t i = 0; i < poset.size(); ++i) u.members[i] = (mask >> i) & 1;
    if (u.is_upward_closed(poset)) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("leq on binary and ternary chains") {
  CHECK(leq(State::parse("01"), State::parse("11")));
  CHECK_FALSE(leq(State::parse("10"), State::parse("01")));
  CHECK_FALSE(leq(State::parse("01"), State::parse("10")));
  CHECK(leq(State::parse("01", Alphabet::ternary), State::parse("1*")));
  CHECK_THROWS_AS(leq(State::parse("01"), State::parse("011")), InvalidArgument);
  CHECK_THROWS_AS(leq(State::parse("01"), State::parse("1*")), InvalidArgument);
}

TEST_CASE("state encoding round trips") {
  for (std::uint64_t code = 0; code < 27; ++code) {
    const State s = State::decode(code, 3, Alphabet::ternary);
    CHECK(s.encode() == code);
    CHECK(State::parse(s.to_string(), Alphabet::ternary) == s);
  }
  CHECK(State::parse("*10").norm1() == 2);
}

TEST_CASE("leq is a partial order on product posets") {
  for (auto [n, a] : {std::pair{3, Alphabet::ternary}, std::pair{5, Alphabet::binary}}) {
    const Poset p = Poset::product(n, a);
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p.leq(i, i));
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (i != j && p.leq(i, j)) CHECK_FALSE(p.leq(j, i));
        if (!p.leq(i, j)) continue;
        for (std::size_t k = 0; k < p.size(); ++k)
          if (p.leq(j, k)) CHECK(p.leq(i, k));
      }
    }
    const auto& lin = p.linear_extension();
    std::vector<std::size_t> pos(p.size());
    for (std::size_t r = 0; r < lin.size(); ++r) pos[lin[r]] = r;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j)
        if (i != j && p.leq(i, j)) CHECK(pos[i] < pos[j]);
  }
}

TEST_CASE("is_increasing") {
  const Poset chain = Poset::product(1, Alphabet::binary);
  const std::vector<double> constant{2.0, 2.0};
  CHECK(is_increasing(chain, constant));
  const std::vector<double> low_indicator{1.0, 0.0};
  const auto v = find_increasing_violation(chain, low_indicator);
  REQUIRE(v.has_value());
  CHECK(chain.element(v->lower).to_string() == "0");
  CHECK(chain.element(v->upper).to_string() == "1");

  const Poset square = Poset::product(2, Alphabet::binary);
  for (const auto& u : enumerate_up_sets(square)) {
    std::vector<double> f(square.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = u.members[i] ? 1.0 : 0.0;
    CHECK(is_increasing(square, f));
  }
}

TEST_CASE("up-set counts") {
  CHECK(enumerate_up_sets(Poset::product(1, Alphabet::binary)).size() == 3);
  CHECK(enumerate_up_sets(Poset::product(1, Alphabet::ternary)).size() == 4);
  CHECK(enumerate_up_sets(Poset::product(2, Alphabet::binary)).size() == 6);
  for (std::size_t n = 1; n <= 4; ++n) {
    const Poset p = Poset::product(n, Alphabet::binary);
    const auto ups = enumerate_up_sets(p);
    CHECK(ups.size() == brute_force_up_sets(p));
    for (const auto& u : ups) CHECK(u.is_upward_closed(p));
  }
  CHECK_THROWS_AS(enumerate_up_sets(Poset::product(4, Alphabet::ternary)), GuardExceeded);
}

TEST_CASE("stochastic dominance examples") {
  const Poset chain = Poset::product(1, Alphabet::binary);
  const std::vector<double> a{0.5, 0.5}, b{0.3, 0.7};
  CHECK(stochastic_dominance(a, b, chain).holds);
  const auto r = stochastic_dominance(b, a, chain);
  CHECK_FALSE(r.holds);
  REQUIRE(r.witness.has_value());
  CHECK(r.witness->count() == 1);
  CHECK(r.witness->members[1]);

  const Poset square = Poset::product(2, Alphabet::binary);  // 00, 10, 01, 11 by code
  std::vector<double> mid(4, 0.0), ends(4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto s = square.element(i).to_string();
    if (s == "01" || s == "10") mid[i] = 0.5;
    if (s == "00" || s == "11") ends[i] = 0.5;
  }
  for (auto method : {DominanceMethod::flow, DominanceMethod::up_sets}) {
    const auto w = stochastic_dominance(mid, ends, square, method);
    CHECK_FALSE(w.holds);
    REQUIRE(w.witness.has_value());
    CHECK(w.witness->mass(mid) == doctest::Approx(1.0));
    CHECK(w.witness->mass(ends) == doctest::Approx(0.5));
    CHECK(w.witness->count() == 3);
  }
  CHECK(stochastic_dominance(mid, mid, square).holds);
}

TEST_CASE("flow and up-set dominance agree on random pairs") {
  RngStream rng = make_stream(11, 0, "dominance-agree");
  const std::vector<Poset> posets{Poset::product(2, Alphabet::binary),
                                  Poset::product(3, Alphabet::binary),
                                  Poset::product(4, Alphabet::binary),
                                  Poset::product(2, Alphabet::ternary)};
  std::size_t agree = 0, positives = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Poset& p = posets[static_cast<std::size_t>(trial) % posets.size()];
    auto a = random_law(rng, p.size());
    std::vector<double> b;
    if (trial % 2 == 0) {
      // Push mass upward to manufacture dominated pairs.
      b = a;
      for (std::size_t r = 0; r < 3; ++r) {
        const std::size_t i = uniform_index(rng, p.size());
        std::vector<std::size_t> ups;
        for (std::size_t j = 0; j < p.size(); ++j)
          if (j != i && p.leq(i, j)) ups.push_back(j);
        if (ups.empty()) continue;
        const std::size_t j = ups[uniform_index(rng, ups.size())];
        const double moved = b[i] * uniform01(rng);
        b[i] -= moved;
        b[j] += moved;
      }
    } else {
      b = random_law(rng, p.size());
    }
    const bool f = stochastic_dominance(a, b, p, DominanceMethod::flow).holds;
    const bool u = stochastic_dominance(a, b, p, DominanceMethod::up_sets).holds;
    agree += f == u;
    positives += f;
  }
  CHECK(agree == 1000);
  CHECK(positives >= 400);
}

TEST_CASE("dominance is transitive on random triples") {
  RngStream rng = make_stream(5, 0, "dominance-transitive");
  const Poset p = Poset::product(3, Alphabet::binary);
  auto push_up = [&](std::vector<double> x) {
    for (int r = 0; r < 4; ++r) {
      const std::size_t i = uniform_index(rng, p.size());
      const std::size_t j = uniform_index(rng, p.size());
      if (!p.leq(i, j)) continue;
      const double moved = x[i] * uniform01(rng);
      x[i] -= moved;
      x[j] += moved;
    }
    return x;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_law(rng, p.size(), 0.0);
    const auto b = push_up(a), c = push_up(b);
    REQUIRE(stochastic_dominance(a, b, p).holds);
    REQUIRE(stochastic_dominance(b, c, p).holds);
    CHECK(stochastic_dominance(a, c, p).holds);
  }
}

TEST_CASE("lift and contract") {
  RngStream rng = make_stream(3, 0, "lift");
  CHECK(lift(State::zeros(4), 0.3, rng) == State::zeros(4, Alphabet::ternary));
  CHECK(contract(State::parse("*10")) == State::parse("110"));
  CHECK(contract(State::zeros(3, Alphabet::ternary)) == State::zeros(3));
  for (std::uint64_t code = 0; code < 16; ++code) {
    const State x = State::decode(code, 4, Alphabet::binary);
    for (double theta : {0.1, 0.5, 0.9}) CHECK(contract(lift(x, theta, rng)) == x);
  }
  CHECK_THROWS_AS(lift(State::ones(2), 1.0, rng), InvalidArgument);
  CHECK_THROWS_AS(lift(State::ones(2), 0.0, rng), InvalidArgument);

  const int trials = 200000;
  const double theta = 0.3;
  int star = 0, all_star = 0;
  for (int t = 0; t < trials; ++t) {
    const State y = lift(State::ones(3), theta, rng);
    star += y[0] == kStar;
    all_star += y == State::stars(3);
  }
  const double p_star = 1.0 - theta, p_all = p_star * p_star * p_star;
  CHECK(std::abs(star / double(trials) - p_star) < 4 * std::sqrt(p_star * theta / trials));
  CHECK(std::abs(all_star / double(trials) - p_all) < 4 * std::sqrt(p_all * (1 - p_all) / trials));
}
