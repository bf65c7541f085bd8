#pragma once
// Random desk-scale instances shared by the unit tests and the acceptance run.

#include <algorithm>
#include <string>
#include <vector>

#include "fdlab/models.hpp"
#include "fdlab/rng.hpp"

namespace fdlab::testing {

struct Instance {
  std::string label;
  ModelPtr model;
  bool monotone;
};

/// Random simple graph on n vertices with at most max_edges edges.
inline Graph random_graph(RngStream& rng, std::size_t n, std::size_t max_edges) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) all.emplace_back(u, v);
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[uniform_index(rng, i)]);
  const std::size_t cap = std::min(max_edges, all.size());
  const std::size_t m = cap == 0 ? 0 : 1 + uniform_index(rng, cap);
  all.resize(m);
  return Graph(n, all);
}

/// Random bipartite graph with the given side sizes (at least one edge).
inline Graph random_bipartite(RngStream& rng, std::size_t left, std::size_t right,
                              std::size_t max_edges) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t u = 0; u < left; ++u)
    for (std::size_t v = 0; v < right; ++v) all.emplace_back(u, left + v);
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[uniform_index(rng, i)]);
  const std::size_t cap = std::min(max_edges, all.size());
  all.resize(1 + uniform_index(rng, cap));
  return Graph(left + right, all, left);
}

inline double uniform_in(RngStream& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::shared_ptr<const RandomClusterModel> random_rc(RngStream& rng, std::size_t n,
                                                           std::size_t max_edges,
                                                           double p_lo = 0.2, double p_hi = 0.8,
                                                           double lambda_hi = 0.9) {
  Graph g = random_graph(rng, n, max_edges);
  std::vector<double> p(g.num_edges()), lambda(n);
  for (auto& x : p) x = uniform_in(rng, p_lo, p_hi);
  for (auto& x : lambda) x = uniform_in(rng, 0.0, lambda_hi);
  return std::make_shared<RandomClusterModel>(g, p, lambda);
}

/// Mix of the monotone families used by the property checks, with at most
/// `max_vars` variables.
inline Instance random_monotone(RngStream& rng, std::size_t max_vars) {
  switch (uniform_index(rng, 4)) {
    case 0: {
      const std::size_t n = 2 + uniform_index(rng, 2);
      auto rc = random_rc(rng, n, max_vars);
      return {"rc", rc, true};
    }
    case 1: {
      const std::size_t n = 2 + uniform_index(rng, 2);
      auto rc = random_rc(rng, n, max_vars);
      return {"flipped-rc", flip(rc), true};
    }
    case 2: {
      const std::size_t left = 1 + uniform_index(rng, std::max<std::size_t>(1, max_vars / 2));
      const std::size_t right = std::max<std::size_t>(1, std::min(max_vars - left, 1 + uniform_index(rng, 2)));
      Graph g = random_bipartite(rng, left, right, 4);
      auto bhc = std::make_shared<BipartiteHardcoreModel>(g, uniform_in(rng, 0.3, 2.0),
                                                          uniform_in(rng, 0.3, 2.0));
      return {"bipartite-hardcore", bhc, true};
    }
    default: {
      const std::size_t n = 2 + uniform_index(rng, std::max<std::size_t>(1, max_vars - 1));
      Graph g = random_graph(rng, std::min(n, max_vars), 3);
      std::vector<double> beta(g.num_edges()), lambda(g.num_vertices());
      for (auto& x : beta) x = uniform_in(rng, 1.1, 3.0);
      for (auto& x : lambda) x = uniform_in(rng, 0.2, 1.0);
      return {"ising", std::make_shared<IsingModel>(g, beta, lambda), true};
    }
  }
}

}  // namespace fdlab::testing
