#include "fdlab/order.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fdlab/flow.hpp"

namespace fdlab {

State::State(Alphabet alphabet, std::vector<Spin> values)
    : alphabet_(alphabet), values_(std::move(values)) {
  for (Spin s : values_)
    if (s >= alphabet_size(alphabet_))
      throw InvalidArgument("spin value outside the alphabet");
}

State State::zeros(std::size_t n, Alphabet a) {
  return State(a, std::vector<Spin>(n, kZero));
}

State State::ones(std::size_t n, Alphabet a) {
  return State(a, std::vector<Spin>(n, kOne));
}

State State::stars(std::size_t n) {
  return State(Alphabet::ternary, std::vector<Spin>(n, kStar));
}

State State::parse(std::string_view text, std::optional<Alphabet> force) {
  std::vector<Spin> v;
  v.reserve(text.size());
  bool star = false;
  for (char c : text) {
    switch (c) {
      case '0': v.push_back(kZero); break;
      case '1': v.push_back(kOne); break;
      case '*': v.push_back(kStar); star = true; break;
      default: throw InvalidArgument("state string may only contain 0, 1, *");
    }
  }
  const Alphabet a = force.value_or(star ? Alphabet::ternary : Alphabet::binary);
  return State(a, std::move(v));
}

State State::decode(std::uint64_t code, std::size_t n, Alphabet a) {
  const std::uint64_t radix = alphabet_size(a);
  std::vector<Spin> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = static_cast<Spin>(code % radix);
    code /= radix;
  }
  return State(a, std::move(v));
}

void State::set(std::size_t i, Spin s) {
  if (s >= alphabet_size(alphabet_))
    throw InvalidArgument("spin value outside the alphabet");
  values_[i] = s;
}

std::size_t State::count(Spin s) const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), s));
}

std::size_t State::norm1() const { return size() - count(kZero); }

std::uint64_t State::encode() const {
  const std::uint64_t radix = alphabet_size(alphabet_);
  std::uint64_t code = 0;
  for (std::size_t i = values_.size(); i-- > 0;) code = code * radix + values_[i];
  return code;
}

std::string State::to_string() const {
  std::string s;
  s.reserve(values_.size());
  for (Spin v : values_) s.push_back(v == kZero ? '0' : v == kOne ? '1' : '*');
  return s;
}

bool leq(const State& x, const State& y) {
  if (x.size() != y.size()) throw InvalidArgument("leq: length mismatch");
  if (x.alphabet() != y.alphabet()) throw InvalidArgument("leq: alphabet mismatch");
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > y[i]) return false;
  return true;
}

State flip(const State& x) {
  if (x.alphabet() != Alphabet::binary)
    throw InvalidArgument("flip is defined on binary configurations only");
  std::vector<Spin> v(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v[i] = static_cast<Spin>(1 - x[i]);
  return State(Alphabet::binary, std::move(v));
}

void check_theta_open_unit(double theta, const char* what) {
  if (!(theta > 0.0 && theta < 1.0))
    throw InvalidArgument(std::string(what) + ": theta must lie in (0,1)");
}

State contract(const State& y) {
  std::vector<Spin> v(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) v[i] = y[i] == kZero ? kZero : kOne;
  return State(Alphabet::binary, std::move(v));
}

Poset::Poset(std::vector<State> elements) : elements_(std::move(elements)) {
  const std::size_t n = elements_.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (elements_[i].size() != elements_[0].size() ||
        elements_[i].alphabet() != elements_[0].alphabet())
      throw InvalidArgument("poset elements must share length and alphabet");
  }
  order_.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      order_[i * n + j] = fdlab::leq(elements_[i], elements_[j]) ? 1 : 0;

  // Sorting by coordinate sum is a linear extension of the product order.
  std::vector<std::size_t> sums(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto vals = elements_[i].values();
    sums[i] = std::accumulate(vals.begin(), vals.end(), std::size_t{0});
  }
  linear_.resize(n);
  std::iota(linear_.begin(), linear_.end(), std::size_t{0});
  std::stable_sort(linear_.begin(), linear_.end(),
                   [&](std::size_t a, std::size_t b) { return sums[a] < sums[b]; });
}

Poset Poset::product(std::size_t n, Alphabet a) {
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= alphabet_size(a);
  std::vector<State> el;
  el.reserve(total);
  for (std::uint64_t c = 0; c < total; ++c) el.push_back(State::decode(c, n, a));
  return Poset(std::move(el));
}

std::size_t UpSet::count() const {
  return static_cast<std::size_t>(std::count(members.begin(), members.end(), true));
}

bool UpSet::is_upward_closed(const Poset& poset) const {
  for (std::size_t i = 0; i < poset.size(); ++i) {
    if (!members[i]) continue;
    for (std::size_t j = 0; j < poset.size(); ++j)
      if (poset.leq(i, j) && !members[j]) return false;
  }
  return true;
}

double UpSet::mass(std::span<const double> dist) const {
  double m = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (members[i]) m += dist[i];
  return m;
}

std::optional<ViolatingPair> find_increasing_violation(const Poset& poset,
                                                       std::span<const double> f,
                                                       double tol) {
  if (f.size() != poset.size())
    throw InvalidArgument("function length does not match the poset");
  for (std::size_t i = 0; i < poset.size(); ++i)
    for (std::size_t j = 0; j < poset.size(); ++j)
      if (i != j && poset.leq(i, j) && f[i] > f[j] + tol) return ViolatingPair{i, j};
  return std::nullopt;
}

std::vector<UpSet> enumerate_up_sets(const Poset& poset, UpSetGuard guard) {
  const std::size_t n = poset.size();
  if (n > guard.max_elements)
    throw GuardExceeded("up-set enumeration refused: " + std::to_string(n) +
                        " elements exceeds the guard of " +
                        std::to_string(guard.max_elements) +
                        "; use the flow-based dominance check instead");
  // Decide elements from the top of the linear extension downwards; an
  // element may join only when every strictly larger element already has.
  std::vector<std::size_t> order(poset.linear_extension().rbegin(),
                                 poset.linear_extension().rend());
  std::vector<std::vector<std::size_t>> above(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && poset.leq(i, j)) above[i].push_back(j);

  std::vector<UpSet> out;
  std::vector<bool> members(n, false);
  std::function<void(std::size_t)> recurse = [&](std::size_t k) {
    if (k == n) {
      if (out.size() >= guard.max_up_sets)
        throw GuardExceeded("up-set enumeration exceeded " +
                            std::to_string(guard.max_up_sets) +
                            " up-sets; use the flow-based dominance check instead");
      out.push_back(UpSet{members});
      return;
    }
    const std::size_t x = order[k];
    recurse(k + 1);
    const bool allowed = std::all_of(above[x].begin(), above[x].end(),
                                     [&](std::size_t y) { return members[y]; });
    if (allowed) {
      members[x] = true;
      recurse(k + 1);
      members[x] = false;
    }
  };
  recurse(0);
  return out;
}

namespace {

void check_distribution(std::span<const double> d, std::size_t n, const char* which) {
  if (d.size() != n)
    throw InvalidArgument(std::string(which) + " distribution does not match the poset");
  double s = 0.0;
  for (double x : d) {
    if (x < -kProbabilityTolerance)
      throw InvalidArgument(std::string(which) + " distribution has negative mass");
    s += x;
  }
  if (std::abs(s - 1.0) > kProbabilityTolerance)
    throw InvalidArgument(std::string(which) + " distribution is not normalized");
}

UpSet up_closure(const Poset& poset, const std::vector<bool>& seeds) {
  UpSet u{std::vector<bool>(poset.size(), false)};
  for (std::size_t i = 0; i < poset.size(); ++i) {
    if (!seeds[i]) continue;
    for (std::size_t j = 0; j < poset.size(); ++j)
      if (poset.leq(i, j)) u.members[j] = true;
  }
  return u;
}

}  // namespace

DominanceResult stochastic_dominance(std::span<const double> lower,
                                     std::span<const double> upper,
                                     const Poset& poset, DominanceMethod method,
                                     double tol) {
  const std::size_t n = poset.size();
  check_distribution(lower, n, "lower");
  check_distribution(upper, n, "upper");
  DominanceResult result;

  if (method == DominanceMethod::up_sets) {
    result.flow_value = 1.0;
    result.holds = true;
    for (const UpSet& u : enumerate_up_sets(poset)) {
      const double gap = u.mass(lower) - u.mass(upper);
      if (gap > tol && gap > result.witness_gap) {
        result.holds = false;
        result.witness = u;
        result.witness_gap = gap;
      }
    }
    return result;
  }

  std::vector<std::size_t> left, right;
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i] > 0.0) left.push_back(i);
    if (upper[i] > 0.0) right.push_back(i);
  }
  const std::size_t source = left.size() + right.size();
  const std::size_t sink = source + 1;
  flow::MaxFlow net(sink + 1);
  double total = 0.0;
  for (std::size_t a = 0; a < left.size(); ++a) {
    net.add_edge(source, a, lower[left[a]]);
    total += lower[left[a]];
  }
  for (std::size_t b = 0; b < right.size(); ++b)
    net.add_edge(left.size() + b, sink, upper[right[b]]);
  for (std::size_t a = 0; a < left.size(); ++a)
    for (std::size_t b = 0; b < right.size(); ++b)
      if (poset.leq(left[a], right[b])) net.add_edge(a, left.size() + b, 2.0);

  result.flow_value = net.solve(source, sink);
  result.holds = result.flow_value >= total - tol;
  if (!result.holds) {
    const auto side = net.source_side();
    std::vector<bool> seeds(n, false);
    for (std::size_t a = 0; a < left.size(); ++a)
      if (side[a]) seeds[left[a]] = true;
    UpSet u = up_closure(poset, seeds);
    result.witness_gap = u.mass(lower) - u.mass(upper);
    result.witness = std::move(u);
  }
  return result;
}

}  // namespace fdlab
