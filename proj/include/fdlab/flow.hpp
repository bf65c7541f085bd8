#pragma once
// Network-flow primitives used by the dominance checker (real-valued max
// flow) and by the coupling-independence transport solver (integer min-cost
// flow).

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fdlab::flow {

/// Dinic's algorithm on real capacities. Residual capacities at or below
/// `eps` are treated as saturated.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes, double eps = 1e-15);

  std::size_t add_edge(std::size_t from, std::size_t to, double capacity);
  double solve(std::size_t source, std::size_t sink);
  /// Nodes reachable from the source in the final residual graph.
  std::vector<bool> source_side() const;
  double flow_on(std::size_t edge) const;

 private:
  struct Edge {
    std::size_t to;
    double cap;
    double original;
  };
  bool build_levels(std::size_t s, std::size_t t);
  double augment(std::size_t v, std::size_t t, double pushed);

  double eps_;
  std::size_t source_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

/// Successive shortest paths with Johnson potentials on integer supplies and
/// integer costs. Exact on integers.
class MinCostFlow {
 public:
  explicit MinCostFlow(std::size_t nodes);

  void add_edge(std::size_t from, std::size_t to, std::int64_t capacity,
                std::int64_t cost);

  struct Result {
    std::int64_t flow = 0;
    std::int64_t cost = 0;
  };
  Result solve(std::size_t source, std::size_t sink, std::int64_t demand);

 private:
  struct Edge {
    std::size_t to;
    std::int64_t cap;
    std::int64_t cost;
  };
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

/// Minimum expected cost of a coupling between two discrete laws, solved
/// exactly after scaling both laws to integers summing to `denominator`
/// (largest-remainder rounding).
double transport_cost(const std::vector<double>& from,
                      const std::vector<double>& to,
                      const std::vector<std::vector<std::int64_t>>& cost,
                      std::int64_t denominator = 1'000'000'000'000LL);

/// Largest-remainder rounding of a probability vector to integers with the
/// exact given total.
std::vector<std::int64_t> scale_to_integers(const std::vector<double>& p,
                                            std::int64_t total);

}  // namespace fdlab::flow
