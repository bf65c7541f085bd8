#pragma once
// Configurations over {0,1} and {0,1,*}, the componentwise partial orders,
// up-sets, stochastic dominance, and the lift/contract maps.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fdlab {

/// Raised when a caller violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an enumeration or size guard would be exceeded.
class GuardExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Spin = std::uint8_t;
inline constexpr Spin kZero = 0;
inline constexpr Spin kOne = 1;
inline constexpr Spin kStar = 2;

enum class Alphabet : std::uint8_t { binary = 2, ternary = 3 };

inline constexpr std::size_t alphabet_size(Alphabet a) {
  return static_cast<std::size_t>(a);
}

/// A full assignment of spins to variables 0..n-1. Binary states are
/// configurations of a base model; ternary states live in the lifted space
/// where the chain order is 0 < 1 < *.
class State {
 public:
  State() = default;
  State(Alphabet alphabet, std::vector<Spin> values);

  static State zeros(std::size_t n, Alphabet a = Alphabet::binary);
  static State ones(std::size_t n, Alphabet a = Alphabet::binary);
  static State stars(std::size_t n);
  /// Parses "01*0"; the alphabet is ternary iff a '*' occurs or `force` says so.
  static State parse(std::string_view text,
                     std::optional<Alphabet> force = std::nullopt);
  /// Decodes a mixed-radix code (radix = alphabet size, variable 0 is the
  /// least significant digit).
  static State decode(std::uint64_t code, std::size_t n, Alphabet a);

  Alphabet alphabet() const { return alphabet_; }
  std::size_t size() const { return values_.size(); }
  Spin operator[](std::size_t i) const { return values_[i]; }
  void set(std::size_t i, Spin s);
  std::span<const Spin> values() const { return values_; }

  std::size_t count(Spin s) const;
  /// Number of ones after contraction (1 and * both count).
  std::size_t norm1() const;
  std::uint64_t encode() const;
  std::string to_string() const;

  friend bool operator==(const State&, const State&) = default;

 private:
  Alphabet alphabet_ = Alphabet::binary;
  std::vector<Spin> values_;
};

using Configuration = State;
using LiftedConfiguration = State;

/// Componentwise order. Throws InvalidArgument on length/alphabet mismatch.
bool leq(const State& x, const State& y);

/// Complement of a binary configuration (0 <-> 1).
State flip(const State& x);

/// An explicit finite poset given by its element list and the componentwise
/// order restricted to those elements.
class Poset {
 public:
  explicit Poset(std::vector<State> elements);

  std::size_t size() const { return elements_.size(); }
  const State& element(std::size_t i) const { return elements_[i]; }
  const std::vector<State>& elements() const { return elements_; }
  bool leq(std::size_t i, std::size_t j) const { return order_[i * size() + j] != 0; }
  /// Element indices sorted so that i precedes j whenever element i < element j.
  const std::vector<std::size_t>& linear_extension() const { return linear_; }

  /// Product of n chains of the given alphabet (2^n or 3^n elements).
  static Poset product(std::size_t n, Alphabet a);

 private:
  std::vector<State> elements_;
  std::vector<std::uint8_t> order_;
  std::vector<std::size_t> linear_;
};

struct UpSet {
  std::vector<bool> members;

  std::size_t count() const;
  bool is_upward_closed(const Poset& poset) const;
  double mass(std::span<const double> dist) const;
};

struct ViolatingPair {
  std::size_t lower;
  std::size_t upper;
};

/// Returns the first comparable pair x <= y with f(x) > f(y) + tol, if any.
std::optional<ViolatingPair> find_increasing_violation(const Poset& poset,
                                                       std::span<const double> f,
                                                       double tol = 0.0);

inline bool is_increasing(const Poset& poset, std::span<const double> f,
                          double tol = 0.0) {
  return !find_increasing_violation(poset, f, tol).has_value();
}

struct UpSetGuard {
  std::size_t max_elements = 32;
  std::size_t max_up_sets = 1'000'000;
};

/// Every upward-closed subset exactly once, including the empty set and the
/// full set. Throws GuardExceeded when either guard trips.
std::vector<UpSet> enumerate_up_sets(const Poset& poset, UpSetGuard guard = {});

enum class DominanceMethod { flow, up_sets };

struct DominanceResult {
  bool holds = false;
  /// Max-flow value of the Strassen network (flow method) or 1.
  double flow_value = 0.0;
  /// When dominance fails: an up-set U with lower(U) > upper(U).
  std::optional<UpSet> witness;
  double witness_gap = 0.0;
};

inline constexpr double kProbabilityTolerance = 1e-12;

/// Decides lower <=_sd upper over `poset`. The flow method builds the
/// Strassen network source->x (lower(x)), x->y when x <= y, y->sink (upper(y))
/// and accepts iff the max flow reaches 1 - tol.
DominanceResult stochastic_dominance(std::span<const double> lower,
                                     std::span<const double> upper,
                                     const Poset& poset,
                                     DominanceMethod method = DominanceMethod::flow,
                                     double tol = kProbabilityTolerance);

/// Each 1 becomes * with probability 1 - theta; zeros are kept.
template <class Rng>
State lift(const State& x, double theta, Rng& rng);

/// 0 -> 0, 1 -> 1, * -> 1.
State contract(const State& y);

void check_theta_open_unit(double theta, const char* what);

}  // namespace fdlab

#include "fdlab/rng.hpp"

namespace fdlab {

template <class Rng>
State lift(const State& x, double theta, Rng& rng) {
  check_theta_open_unit(theta, "lift");
  if (x.alphabet() != Alphabet::binary)
    throw InvalidArgument("lift expects a binary configuration");
  std::vector<Spin> out(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (x[v] == kZero) {
      out[v] = kZero;
    } else {
      out[v] = uniform01(rng) < theta ? kOne : kStar;
    }
  }
  return State(Alphabet::ternary, std::move(out));
}

}  // namespace fdlab
