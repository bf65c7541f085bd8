#include "fdlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace fdlab::flow {

MaxFlow::MaxFlow(std::size_t nodes, double eps)
    : eps_(eps), adj_(nodes), level_(nodes), next_(nodes) {}

std::size_t MaxFlow::add_edge(std::size_t from, std::size_t to, double capacity) {
  const std::size_t id = edges_.size();
  edges_.push_back({to, capacity, capacity});
  adj_[from].push_back(id);
  edges_.push_back({from, 0.0, 0.0});
  adj_[to].push_back(id + 1);
  return id;
}

bool MaxFlow::build_levels(std::size_t s, std::size_t t) {
  std::fill(level_.begin(), level_.end(), -1);
  std::queue<std::size_t> q;
  level_[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    for (std::size_t id : adj_[v]) {
      const Edge& e = edges_[id];
      if (e.cap > eps_ && level_[e.to] < 0) {
        level_[e.to] = level_[v] + 1;
        q.push(e.to);
      }
    }
  }
  return level_[t] >= 0;
}

double MaxFlow::augment(std::size_t v, std::size_t t, double pushed) {
  if (v == t) return pushed;
  for (std::size_t& i = next_[v]; i < adj_[v].size(); ++i) {
    const std::size_t id = adj_[v][i];
    Edge& e = edges_[id];
    if (e.cap <= eps_ || level_[e.to] != level_[v] + 1) continue;
    const double got = augment(e.to, t, std::min(pushed, e.cap));
    if (got > 0.0) {
      e.cap -= got;
      edges_[id ^ 1].cap += got;
      return got;
    }
  }
  return 0.0;
}

double MaxFlow::solve(std::size_t source, std::size_t sink) {
  source_ = source;
  double total = 0.0;
  while (build_levels(source, sink)) {
    std::fill(next_.begin(), next_.end(), 0);
    while (true) {
      const double got =
          augment(source, sink, std::numeric_limits<double>::infinity());
      if (got <= eps_) break;
      total += got;
    }
  }
  return total;
}

std::vector<bool> MaxFlow::source_side() const {
  std::vector<bool> seen(adj_.size(), false);
  std::queue<std::size_t> q;
  seen[source_] = true;
  q.push(source_);
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    for (std::size_t id : adj_[v]) {
      const Edge& e = edges_[id];
      if (e.cap > eps_ && !seen[e.to]) {
        seen[e.to] = true;
        q.push(e.to);
      }
    }
  }
  return seen;
}

double MaxFlow::flow_on(std::size_t edge) const {
  return edges_[edge].original - edges_[edge].cap;
}

MinCostFlow::MinCostFlow(std::size_t nodes) : adj_(nodes) {}

void MinCostFlow::add_edge(std::size_t from, std::size_t to,
                           std::int64_t capacity, std::int64_t cost) {
  adj_[from].push_back(edges_.size());
  edges_.push_back({to, capacity, cost});
  adj_[to].push_back(edges_.size());
  edges_.push_back({from, 0, -cost});
}

MinCostFlow::Result MinCostFlow::solve(std::size_t source, std::size_t sink,
                                       std::int64_t demand) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  const std::size_t n = adj_.size();
  std::vector<std::int64_t> potential(n, 0);

  // Bellman-Ford for initial potentials; costs may be negative on reverse arcs
  // only, which start empty, so plain relaxation from the source suffices.
  {
    std::vector<std::int64_t> dist(n, kInf);
    dist[source] = 0;
    for (std::size_t round = 0; round + 1 < n; ++round) {
      bool changed = false;
      for (std::size_t v = 0; v < n; ++v) {
        if (dist[v] == kInf) continue;
        for (std::size_t id : adj_[v]) {
          const Edge& e = edges_[id];
          if (e.cap > 0 && dist[v] + e.cost < dist[e.to]) {
            dist[e.to] = dist[v] + e.cost;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    for (std::size_t v = 0; v < n; ++v) potential[v] = dist[v] == kInf ? 0 : dist[v];
  }

  Result result;
  std::vector<std::int64_t> dist(n);
  std::vector<std::size_t> via(n);
  while (result.flow < demand) {
    std::fill(dist.begin(), dist.end(), kInf);
    dist[source] = 0;
    using Item = std::pair<std::int64_t, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0, source});
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d > dist[v]) continue;
      for (std::size_t id : adj_[v]) {
        const Edge& e = edges_[id];
        if (e.cap <= 0) continue;
        const std::int64_t nd = d + e.cost + potential[v] - potential[e.to];
        if (nd < dist[e.to]) {
          dist[e.to] = nd;
          via[e.to] = id;
          pq.push({nd, e.to});
        }
      }
    }
    if (dist[sink] == kInf) break;
    for (std::size_t v = 0; v < n; ++v)
      if (dist[v] < kInf) potential[v] += dist[v];

    std::int64_t push = demand - result.flow;
    for (std::size_t v = sink; v != source; v = edges_[via[v] ^ 1].to)
      push = std::min(push, edges_[via[v]].cap);
    for (std::size_t v = sink; v != source; v = edges_[via[v] ^ 1].to) {
      edges_[via[v]].cap -= push;
      edges_[via[v] ^ 1].cap += push;
      result.cost += push * edges_[via[v]].cost;
    }
    result.flow += push;
  }
  return result;
}

std::vector<std::int64_t> scale_to_integers(const std::vector<double>& p,
                                            std::int64_t total) {
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  if (!(sum > 0.0)) throw std::invalid_argument("scale_to_integers: empty law");
  std::vector<std::int64_t> out(p.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double exact = p[i] / sum * static_cast<double>(total);
    const double fl = std::floor(exact);
    out[i] = static_cast<std::int64_t>(fl);
    assigned += out[i];
    remainders.push_back({exact - fl, i});
  }
  std::sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % remainders.size()) {
    ++out[remainders[k].second];
    ++assigned;
  }
  while (assigned > total) {
    // Floating round-up can overshoot by a unit; take it from the largest.
    auto it = std::max_element(out.begin(), out.end());
    --*it;
    --assigned;
  }
  return out;
}

double transport_cost(const std::vector<double>& from,
                      const std::vector<double>& to,
                      const std::vector<std::vector<std::int64_t>>& cost,
                      std::int64_t denominator) {
  const auto a = scale_to_integers(from, denominator);
  const auto b = scale_to_integers(to, denominator);
  const std::size_t m = from.size();
  const std::size_t k = to.size();
  const std::size_t source = m + k;
  const std::size_t sink = source + 1;
  MinCostFlow net(m + k + 2);
  for (std::size_t i = 0; i < m; ++i)
    if (a[i] > 0) net.add_edge(source, i, a[i], 0);
  for (std::size_t j = 0; j < k; ++j)
    if (b[j] > 0) net.add_edge(m + j, sink, b[j], 0);
  for (std::size_t i = 0; i < m; ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < k; ++j)
      if (b[j] > 0) net.add_edge(i, m + j, denominator, cost[i][j]);
  }
  const auto res = net.solve(source, sink, denominator);
  if (res.flow != denominator)
    throw std::runtime_error("transport_cost: infeasible transport");
  return static_cast<double>(res.cost) / static_cast<double>(denominator);
}

}  // namespace fdlab::flow
