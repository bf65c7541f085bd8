#include "fdlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

namespace fdlab {

double LogWeight::value() const { return possible ? std::exp(log) : 0.0; }

LogWeight LogWeight::operator*(const LogWeight& o) const {
  if (!possible || !o.possible) return impossible();
  return from_log(log + o.log);
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s + "]";
}

/// Online log-sum-exp accumulator.
struct LogSum {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  void add(double l) {
    if (l > max) {
      sum = sum * std::exp(max - l) + 1.0;
      max = l;
    } else {
      sum += std::exp(l - max);
    }
  }
  bool empty() const { return sum == 0.0; }
  double log() const { return max + std::log(sum); }
};

SiteLaw normalize_logs(const std::array<LogWeight, 3>& w, std::size_t a) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < a; ++s)
    if (w[s].possible) m = std::max(m, w[s].log);
  if (!std::isfinite(m)) throw InvalidArgument("conditional: no feasible value at this site");
  SiteLaw p{0.0, 0.0, 0.0};
  double z = 0.0;
  for (std::size_t s = 0; s < a; ++s)
    if (w[s].possible) z += p[s] = std::exp(w[s].log - m);
  for (double& x : p) x /= z;
  return p;
}

SiteLaw binary_from_one(double p1) { return {1.0 - p1, p1, 0.0}; }

/// P(1) from two nonnegative weights; throws if both vanish.
double ratio_to_prob(double w0, double w1) {
  if (!(w0 + w1 > 0.0)) throw InvalidArgument("conditional: no feasible value at this site");
  return w1 / (w0 + w1);
}

void require_binary(const Model& m, const char* what) {
  if (m.alphabet() != Alphabet::binary)
    throw InvalidArgument(std::string(what) + " requires a binary model");
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(want) +
                          " values, got " + std::to_string(got));
}

/// Iterates completions of the free positions of `pin`, calling f(state).
/// Stops early when f returns false.
template <class F>
void for_each_completion(const Pinning& pin, Alphabet a, F&& f) {
  const std::size_t radix = alphabet_size(a);
  std::vector<std::size_t> free;
  std::vector<Spin> vals(pin.size(), kZero);
  for (std::size_t i = 0; i < pin.size(); ++i) {
    if (pin[i] < 0) {
      free.push_back(i);
    } else {
      if (static_cast<std::size_t>(pin[i]) >= radix)
        throw InvalidArgument("pinning value outside the alphabet");
      vals[i] = static_cast<Spin>(pin[i]);
    }
  }
  double count = std::pow(static_cast<double>(radix), static_cast<double>(free.size()));
  if (count > static_cast<double>(kEnumerationGuard))
    throw GuardExceeded("enumeration of " + std::to_string(free.size()) +
                        " free variables exceeds the guard of 2^20 completions");
  while (true) {
    if (!f(State(a, vals))) return;
    std::size_t k = 0;
    while (k < free.size()) {
      Spin& s = vals[free[k]];
      if (++s < radix) break;
      s = kZero;
      ++k;
    }
    if (k == free.size()) return;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph

Graph::Graph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges,
             std::optional<std::size_t> left_size)
    : n_(n), edges_(std::move(edges)), adj_(n), left_(left_size) {
  if (n == 0) throw InvalidArgument("graph needs at least one vertex");
  if (left_ && *left_ > n) throw InvalidArgument("left side larger than the vertex set");
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    auto [u, v] = edges_[e];
    if (u >= n || v >= n) throw InvalidArgument("edge endpoint out of range");
    if (u == v) throw InvalidArgument("self-loops are not allowed");
    if (left_ && is_left(u) == is_left(v))
      throw InvalidArgument("edge " + std::to_string(e) + " does not cross the bipartition");
    adj_[u].emplace_back(v, e);
    adj_[v].emplace_back(u, e);
  }
}

std::size_t Graph::max_degree() const {
  std::size_t d = 0;
  for (const auto& a : adj_) d = std::max(d, a.size());
  return d;
}

std::vector<std::size_t> Graph::components(const State& s,
                                           std::optional<std::size_t> skip) const {
  if (s.size() != edges_.size()) throw InvalidArgument("edge state has the wrong length");
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(n_, kUnset);
  std::vector<std::size_t> stack;
  std::size_t next = 0;
  for (std::size_t r = 0; r < n_; ++r) {
    if (label[r] != kUnset) continue;
    label[r] = next;
    stack.push_back(r);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (auto [w, e] : adj_[u]) {
        if (s[e] == kZero || (skip && *skip == e) || label[w] != kUnset) continue;
        label[w] = next;
        stack.push_back(w);
      }
    }
    ++next;
  }
  return label;
}

Graph Graph::complete(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return Graph(n, std::move(e));
}

Graph Graph::path(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t u = 0; u + 1 < n; ++u) e.emplace_back(u, u + 1);
  return Graph(n, std::move(e));
}

Graph Graph::cycle(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t u = 0; u < n; ++u) e.emplace_back(u, (u + 1) % n);
  return Graph(n, std::move(e));
}

Graph read_graph(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw InvalidArgument("graph file is empty");
  std::istringstream head(line);
  long long n = -1, m = -1;
  head >> n >> m;
  if (!head || n <= 0 || m < 0) throw InvalidArgument("graph header must be 'n m [bipartite k]'");
  std::optional<std::size_t> left;
  std::string word;
  if (head >> word) {
    long long k = -1;
    if (word != "bipartite" || !(head >> k) || k < 0)
      throw InvalidArgument("graph header must be 'n m [bipartite k]'");
    left = static_cast<std::size_t>(k);
  }
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (long long i = 0; i < m; ++i) {
    if (!next_line()) throw InvalidArgument("graph file has fewer edges than declared");
    std::istringstream ls(line);
    long long u = -1, v = -1;
    ls >> u >> v;
    if (!ls || u < 0 || v < 0) throw InvalidArgument("malformed edge line: " + line);
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
  }
  if (next_line()) throw InvalidArgument("graph file has more edges than declared");
  return Graph(static_cast<std::size_t>(n), std::move(edges), left);
}

Graph read_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open graph file " + path);
  return read_graph(in);
}

void write_graph(std::ostream& out, const Graph& g) {
  out << g.num_vertices() << ' ' << g.num_edges();
  if (g.bipartite()) out << " bipartite " << g.left_size();
  out << '\n';
  for (auto [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

// ---------------------------------------------------------------------------
// Model defaults

void Model::check_state(const State& x) const {
  if (x.size() != size())
    throw InvalidArgument("state length " + std::to_string(x.size()) +
                          " does not match the model's " + std::to_string(size()) +
                          " variables");
  if (x.alphabet() != alphabet()) throw InvalidArgument("state alphabet does not match the model");
}

SiteLaw Model::conditional(const State& x, std::size_t v) const {
  return conditional_by_weights(x, v);
}

SiteLaw Model::conditional_by_weights(const State& x, std::size_t v) const {
  check_state(x);
  const std::size_t a = alphabet_size(alphabet());
  std::array<LogWeight, 3> w{LogWeight::impossible(), LogWeight::impossible(),
                             LogWeight::impossible()};
  State y = x;
  for (std::size_t s = 0; s < a; ++s) {
    y.set(v, static_cast<Spin>(s));
    w[s] = log_weight(y);
  }
  return normalize_logs(w, a);
}

SiteLaw Model::marginal(const Pinning& pinning, std::size_t v) const {
  require_size(pinning.size(), size(), "marginal pinning");
  Pinning p = pinning;
  p[v] = -1;
  const std::size_t a = alphabet_size(alphabet());
  std::array<LogSum, 3> acc;
  for_each_completion(p, alphabet(), [&](const State& s) {
    const LogWeight w = log_weight(s);
    if (w.possible) acc[s[v]].add(w.log);
    return true;
  });
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < a; ++s)
    if (!acc[s].empty()) m = std::max(m, acc[s].log());
  if (!std::isfinite(m)) throw InvalidArgument("marginal: infeasible pinning");
  SiteLaw out{0.0, 0.0, 0.0};
  double z = 0.0;
  for (std::size_t s = 0; s < a; ++s)
    if (!acc[s].empty()) z += out[s] = std::exp(acc[s].log() - m);
  for (double& x : out) x /= z;
  return out;
}

bool Model::feasible(const Pinning& pinning) const {
  require_size(pinning.size(), size(), "feasibility pinning");
  bool found = false;
  for_each_completion(pinning, alphabet(), [&](const State& s) {
    found = log_weight(s).possible;
    return !found;
  });
  return found;
}

// ---------------------------------------------------------------------------
// Ising

IsingModel::IsingModel(Graph g, std::vector<double> beta, std::vector<double> lambda)
    : g_(std::move(g)), beta_(std::move(beta)), lambda_(std::move(lambda)) {
  require_size(beta_.size(), g_.num_edges(), "ising beta");
  require_size(lambda_.size(), g_.num_vertices(), "ising lambda");
  for (double b : beta_)
    if (!(b > 1.0 && std::isfinite(b))) throw InvalidArgument("ising beta must lie in (1, inf)");
  for (double l : lambda_)
    if (!(l >= 0.0 && l <= 1.0)) throw InvalidArgument("ising lambda must lie in [0, 1]");
}

LogWeight IsingModel::log_weight(const State& x) const {
  check_state(x);
  double l = 0.0;
  for (std::size_t e = 0; e < g_.num_edges(); ++e) {
    auto [u, v] = g_.edge(e);
    if (x[u] == x[v]) l += std::log(beta_[e]);
  }
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (x[v] != kOne) continue;
    if (lambda_[v] == 0.0) return LogWeight::impossible();
    l += std::log(lambda_[v]);
  }
  return LogWeight::from_log(l);
}

SiteLaw IsingModel::conditional(const State& x, std::size_t v) const {
  check_state(x);
  if (lambda_[v] == 0.0) return binary_from_one(0.0);
  double lr = std::log(lambda_[v]);
  for (auto [u, e] : g_.incident(v)) lr += x[u] == kOne ? std::log(beta_[e]) : -std::log(beta_[e]);
  return binary_from_one(1.0 / (1.0 + std::exp(-lr)));
}

std::string IsingModel::describe() const {
  return "ising(beta=" + fmt_list(beta_) + ",lambda=" + fmt_list(lambda_) + ")";
}

// ---------------------------------------------------------------------------
// Random cluster

RandomClusterModel::RandomClusterModel(Graph g, std::vector<double> p, std::vector<double> lambda)
    : g_(std::move(g)), p_(std::move(p)), lambda_(std::move(lambda)) {
  require_size(p_.size(), g_.num_edges(), "random cluster p");
  require_size(lambda_.size(), g_.num_vertices(), "random cluster lambda");
  if (g_.num_edges() == 0) throw InvalidArgument("random cluster model needs at least one edge");
  for (double x : p_)
    if (!(x > 0.0 && x < 1.0)) throw InvalidArgument("random cluster p must lie in (0, 1)");
  for (double l : lambda_)
    if (!(l >= 0.0 && l <= 1.0)) throw InvalidArgument("random cluster lambda must lie in [0, 1]");
}

LogWeight RandomClusterModel::log_weight(const State& s) const {
  check_state(s);
  double l = 0.0;
  for (std::size_t e = 0; e < s.size(); ++e)
    if (s[e] == kOne) l += std::log(p_[e] / (1.0 - p_[e]));
  const auto label = g_.components(s);
  std::vector<double> prod(g_.num_vertices(), 1.0);
  std::vector<bool> used(g_.num_vertices(), false);
  for (std::size_t v = 0; v < label.size(); ++v) {
    prod[label[v]] *= lambda_[v];
    used[label[v]] = true;
  }
  for (std::size_t c = 0; c < prod.size(); ++c)
    if (used[c]) l += std::log1p(prod[c]);
  return LogWeight::from_log(l);
}

double rc_marginal_ratio(const RandomClusterModel& rc, const State& s, std::size_t e) {
  const Graph& g = rc.graph();
  if (e >= g.num_edges()) throw InvalidArgument("rc_marginal_ratio: edge out of range");
  if (s.size() != g.num_edges() || s.alphabet() != Alphabet::binary)
    throw InvalidArgument("rc_marginal_ratio: edge state has the wrong shape");
  const double odds = rc.p()[e] / (1.0 - rc.p()[e]);
  const auto label = g.components(s, e);
  auto [u, v] = g.edge(e);
  if (label[u] == label[v]) return odds;
  double du = 1.0, dv = 1.0;
  for (std::size_t w = 0; w < label.size(); ++w) {
    if (label[w] == label[u]) du *= rc.lambda()[w];
    if (label[w] == label[v]) dv *= rc.lambda()[w];
  }
  return odds * (1.0 + du * dv) / ((1.0 + du) * (1.0 + dv));
}

double RandomClusterModel::marginal_ratio(const State& s, std::size_t e) const {
  return rc_marginal_ratio(*this, s, e);
}

SiteLaw RandomClusterModel::conditional(const State& s, std::size_t e) const {
  check_state(s);
  const double r = rc_marginal_ratio(*this, s, e);
  return binary_from_one(r / (1.0 + r));
}

double RandomClusterModel::lambda_max() const {
  return *std::max_element(lambda_.begin(), lambda_.end());
}

double RandomClusterModel::p_min() const { return *std::min_element(p_.begin(), p_.end()); }

std::string RandomClusterModel::describe() const {
  return "random-cluster(p=" + fmt_list(p_) + ",lambda=" + fmt_list(lambda_) + ")";
}

// ---------------------------------------------------------------------------
// Subgraph world

SubgraphWorldModel::SubgraphWorldModel(Graph g, std::vector<double> p, std::vector<double> eta)
    : g_(std::move(g)), p_(std::move(p)), eta_(std::move(eta)) {
  require_size(p_.size(), g_.num_edges(), "subgraph-world p");
  require_size(eta_.size(), g_.num_vertices(), "subgraph-world eta");
  if (g_.num_edges() == 0) throw InvalidArgument("subgraph-world model needs at least one edge");
  for (double x : p_)
    if (!(x >= 0.0 && x < 1.0)) throw InvalidArgument("subgraph-world p must lie in [0, 1)");
  for (double x : eta_)
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("subgraph-world eta must lie in [0, 1]");
}

LogWeight SubgraphWorldModel::log_weight(const State& s) const {
  check_state(s);
  double l = 0.0;
  std::vector<int> deg(g_.num_vertices(), 0);
  for (std::size_t e = 0; e < s.size(); ++e) {
    if (s[e] != kOne) continue;
    if (p_[e] == 0.0) return LogWeight::impossible();
    l += std::log(p_[e] / (1.0 - p_[e]));
    ++deg[g_.edge(e).first];
    ++deg[g_.edge(e).second];
  }
  for (std::size_t v = 0; v < deg.size(); ++v) {
    if (deg[v] % 2 == 0) continue;
    if (eta_[v] == 0.0) return LogWeight::impossible();
    l += std::log(eta_[v]);
  }
  return LogWeight::from_log(l);
}

SiteLaw SubgraphWorldModel::conditional(const State& s, std::size_t e) const {
  check_state(s);
  auto [u, v] = g_.edge(e);
  auto odd_without = [&](std::size_t w) {
    int d = 0;
    for (auto [x, f] : g_.incident(w))
      if (f != e && s[f] == kOne) ++d;
    return d % 2 == 1;
  };
  const bool ou = odd_without(u), ov = odd_without(v);
  // Adding e toggles the parity at both endpoints.
  const double w0 = (ou ? eta_[u] : 1.0) * (ov ? eta_[v] : 1.0);
  const double w1 = p_[e] / (1.0 - p_[e]) * (ou ? 1.0 : eta_[u]) * (ov ? 1.0 : eta_[v]);
  return binary_from_one(ratio_to_prob(w0, w1));
}

std::string SubgraphWorldModel::describe() const {
  return "subgraph-world(p=" + fmt_list(p_) + ",eta=" + fmt_list(eta_) + ")";
}

// ---------------------------------------------------------------------------
// Hardcore

HardcoreModel::HardcoreModel(Graph g, double lambda) : g_(std::move(g)), lambda_(lambda) {
  if (!(lambda_ > 0.0 && std::isfinite(lambda_)))
    throw InvalidArgument("hardcore lambda must be positive");
}

LogWeight HardcoreModel::log_weight(const State& x) const {
  check_state(x);
  for (auto [u, v] : g_.edges())
    if (x[u] == kOne && x[v] == kOne) return LogWeight::impossible();
  return LogWeight::from_log(static_cast<double>(x.count(kOne)) * std::log(lambda_));
}

SiteLaw HardcoreModel::conditional(const State& x, std::size_t v) const {
  check_state(x);
  for (auto [u, e] : g_.incident(v))
    if (x[u] == kOne) return binary_from_one(0.0);
  return binary_from_one(lambda_ / (1.0 + lambda_));
}

std::string HardcoreModel::describe() const { return "hardcore(lambda=" + fmt(lambda_) + ")"; }

// ---------------------------------------------------------------------------
// Bipartite hardcore

BipartiteHardcoreModel::BipartiteHardcoreModel(Graph g, double lambda, double beta)
    : g_(std::move(g)), lambda_(lambda), beta_(beta) {
  if (!g_.bipartite()) throw InvalidArgument("bipartite hardcore needs a bipartite graph");
  if (!(lambda_ > 0.0 && beta_ > 0.0 && std::isfinite(lambda_) && std::isfinite(beta_)))
    throw InvalidArgument("bipartite hardcore fields must be positive");
}

bool BipartiteHardcoreModel::occupied(const State& x, std::size_t v) const {
  return g_.is_left(v) ? x[v] == kZero : x[v] == kOne;
}

LogWeight BipartiteHardcoreModel::log_weight(const State& x) const {
  check_state(x);
  for (auto [u, v] : g_.edges())
    if (occupied(x, u) && occupied(x, v)) return LogWeight::impossible();
  double l = 0.0;
  for (std::size_t v = 0; v < x.size(); ++v)
    if (occupied(x, v)) l += std::log(g_.is_left(v) ? lambda_ : beta_);
  return LogWeight::from_log(l);
}

SiteLaw BipartiteHardcoreModel::conditional(const State& x, std::size_t v) const {
  check_state(x);
  bool blocked = false;
  for (auto [u, e] : g_.incident(v)) blocked = blocked || occupied(x, u);
  const double f = g_.is_left(v) ? lambda_ : beta_;
  const double p_in = blocked ? 0.0 : f / (1.0 + f);
  return g_.is_left(v) ? SiteLaw{p_in, 1.0 - p_in, 0.0} : binary_from_one(p_in);
}

std::string BipartiteHardcoreModel::describe() const {
  return "bipartite-hardcore(lambda=" + fmt(lambda_) + ",beta=" + fmt(beta_) + ")";
}

// ---------------------------------------------------------------------------
// Left marginal

LeftMarginalModel::LeftMarginalModel(std::shared_ptr<const BipartiteHardcoreModel> bhc)
    : bhc_(std::move(bhc)) {
  if (bhc_->graph().left_size() == 0) throw InvalidArgument("left marginal needs a nonempty left side");
}

LogWeight LeftMarginalModel::log_weight(const State& x) const {
  check_state(x);
  const Graph& g = bhc_->graph();
  const std::size_t right = g.num_vertices() - g.left_size();
  std::vector<bool> blocked(g.num_vertices(), false);
  std::size_t zeros = 0, nblocked = 0;
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (x[v] != kZero) continue;
    ++zeros;
    for (auto [w, e] : g.incident(v))
      if (!blocked[w]) {
        blocked[w] = true;
        ++nblocked;
      }
  }
  return LogWeight::from_log(static_cast<double>(zeros) * std::log(bhc_->lambda()) +
                             static_cast<double>(right - nblocked) * std::log1p(bhc_->beta()));
}

SiteLaw LeftMarginalModel::conditional(const State& x, std::size_t v) const {
  check_state(x);
  const Graph& g = bhc_->graph();
  std::vector<bool> blocked(g.num_vertices(), false);
  for (std::size_t u = 0; u < x.size(); ++u) {
    if (u == v || x[u] != kZero) continue;
    for (auto [w, e] : g.incident(u)) blocked[w] = true;
  }
  std::size_t free_nbrs = 0;
  for (auto [w, e] : g.incident(v))
    if (!blocked[w]) ++free_nbrs;
  const double lam = bhc_->lambda();
  const double p0 = lam / (lam + std::pow(1.0 + bhc_->beta(), static_cast<double>(free_nbrs)));
  return {p0, 1.0 - p0, 0.0};
}

SiteLaw LeftMarginalModel::conditional_by_summation(const State& x, std::size_t v) const {
  check_state(x);
  const Graph& g = bhc_->graph();
  Pinning pin(g.num_vertices(), -1);
  for (std::size_t u = 0; u < x.size(); ++u) pin[u] = static_cast<std::int8_t>(x[u]);
  pin[v] = -1;
  // Summing the joint weight over right-side states with v left free is the
  // joint marginal of v given the left pinning.
  return bhc_->marginal(pin, v);
}

std::string LeftMarginalModel::describe() const { return "left-marginal(" + bhc_->describe() + ")"; }

// ---------------------------------------------------------------------------
// Transforms

TiltedModel::TiltedModel(ModelPtr base, double theta) : base_(std::move(base)), theta_(theta) {
  require_binary(*base_, "tilt");
  if (!(theta_ > 0.0 && std::isfinite(theta_))) throw InvalidArgument("tilt: theta must be positive");
}

LogWeight TiltedModel::log_weight(const State& x) const {
  LogWeight w = base_->log_weight(x);
  if (!w.possible) return w;
  w.log += static_cast<double>(x.norm1()) * std::log(theta_);
  return w;
}

SiteLaw TiltedModel::conditional(const State& x, std::size_t v) const {
  const SiteLaw q = base_->conditional(x, v);
  return binary_from_one(ratio_to_prob(q[0], theta_ * q[1]));
}

std::string TiltedModel::describe() const {
  return "tilt(" + fmt(theta_) + "," + base_->describe() + ")";
}

FlippedModel::FlippedModel(ModelPtr base) : base_(std::move(base)) { require_binary(*base_, "flip"); }

LogWeight FlippedModel::log_weight(const State& x) const { return base_->log_weight(fdlab::flip(x)); }

SiteLaw FlippedModel::conditional(const State& x, std::size_t v) const {
  const SiteLaw q = base_->conditional(fdlab::flip(x), v);
  return {q[1], q[0], 0.0};
}

std::string FlippedModel::describe() const { return "flip(" + base_->describe() + ")"; }

PinnedModel::PinnedModel(ModelPtr base, Pinning pinning)
    : base_(std::move(base)), pinning_(std::move(pinning)) {
  require_size(pinning_.size(), base_->size(), "pin");
  for (auto s : pinning_)
    if (s >= static_cast<std::int8_t>(alphabet_size(base_->alphabet())))
      throw InvalidArgument("pin: value outside the alphabet");
  if (!base_->feasible(pinning_)) throw InvalidArgument("pin: infeasible pinning");
}

LogWeight PinnedModel::log_weight(const State& x) const {
  check_state(x);
  for (std::size_t i = 0; i < pinning_.size(); ++i)
    if (pinning_[i] >= 0 && x[i] != static_cast<Spin>(pinning_[i])) return LogWeight::impossible();
  return base_->log_weight(x);
}

SiteLaw PinnedModel::conditional(const State& x, std::size_t v) const {
  if (pinning_[v] >= 0) {
    SiteLaw p{0.0, 0.0, 0.0};
    p[static_cast<std::size_t>(pinning_[v])] = 1.0;
    return p;
  }
  return base_->conditional(x, v);
}

std::string PinnedModel::describe() const {
  std::string s;
  for (auto p : pinning_) s.push_back(p < 0 ? '-' : p == 0 ? '0' : p == 1 ? '1' : '*');
  return "pin(" + s + "," + base_->describe() + ")";
}

LiftedModel::LiftedModel(ModelPtr base, double theta) : base_(std::move(base)), theta_(theta) {
  require_binary(*base_, "lift");
  check_theta_open_unit(theta_, "lift_model");
}

LogWeight LiftedModel::log_weight(const State& x) const {
  check_state(x);
  LogWeight w = base_->log_weight(contract(x));
  if (!w.possible) return w;
  w.log += static_cast<double>(x.count(kOne)) * std::log(theta_) +
           static_cast<double>(x.count(kStar)) * std::log1p(-theta_);
  return w;
}

SiteLaw LiftedModel::conditional(const State& x, std::size_t v) const {
  check_state(x);
  const SiteLaw q = base_->conditional(contract(x), v);
  return {q[0], theta_ * q[1], (1.0 - theta_) * q[1]};
}

std::string LiftedModel::describe() const {
  return "lift(" + fmt(theta_) + "," + base_->describe() + ")";
}

ModelPtr tilt(ModelPtr m, double theta) {
  if (!(theta > 0.0 && std::isfinite(theta))) throw InvalidArgument("tilt: theta must be positive");
  if (m->kind() == ModelKind::hardcore) {
    const auto& hc = static_cast<const HardcoreModel&>(*m);
    return std::make_shared<HardcoreModel>(hc.graph(), theta * hc.lambda());
  }
  if (m->kind() == ModelKind::tilted) {
    const auto& t = static_cast<const TiltedModel&>(*m);
    return std::make_shared<TiltedModel>(t.base(), theta * t.theta());
  }
  return std::make_shared<TiltedModel>(std::move(m), theta);
}

ModelPtr flip(ModelPtr m) {
  if (m->kind() == ModelKind::flipped) return m->base();
  return std::make_shared<FlippedModel>(std::move(m));
}

ModelPtr pin(ModelPtr m, Pinning pinning) {
  return std::make_shared<PinnedModel>(std::move(m), std::move(pinning));
}

ModelPtr pin_ones(ModelPtr m, const std::vector<std::size_t>& lambda_set) {
  Pinning p(m->size(), -1);
  for (std::size_t v : lambda_set) {
    if (v >= p.size()) throw InvalidArgument("pin: variable index out of range");
    p[v] = 1;
  }
  return pin(std::move(m), std::move(p));
}

ModelPtr lift_model(ModelPtr m, double theta) {
  return std::make_shared<LiftedModel>(std::move(m), theta);
}

ModelPtr left_marginal(ModelPtr m) {
  auto bhc = std::dynamic_pointer_cast<const BipartiteHardcoreModel>(m);
  if (!bhc) throw InvalidArgument("left-marginal applies to a bipartite hardcore model only");
  return std::make_shared<LeftMarginalModel>(std::move(bhc));
}

double tilted_conditional_one(const Model& base, const State& x, std::size_t v, double theta) {
  const SiteLaw q = base.conditional(x, v);
  return ratio_to_prob(q[0], theta * q[1]);
}

// ---------------------------------------------------------------------------
// Parameter files

ParamFile ParamFile::parse(std::istream& in) {
  ParamFile pf;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("parameter line " + std::to_string(lineno) + " lacks '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("empty key on parameter line " + std::to_string(lineno));
    if (!pf.values_.emplace(key, value).second)
      throw InvalidArgument("duplicate parameter key '" + key + "'");
  }
  return pf;
}

ParamFile ParamFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open parameter file " + path);
  return parse(in);
}

std::optional<std::string> ParamFile::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

namespace {
double to_double(const std::string& key, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty())
    throw InvalidArgument("parameter '" + key + "' is not a number: '" + text + "'");
  return v;
}
}  // namespace

double ParamFile::get_double(const std::string& key) const {
  auto v = get(key);
  if (!v) throw InvalidArgument("missing parameter '" + key + "'");
  return to_double(key, *v);
}

double ParamFile::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? to_double(key, *v) : fallback;
}

std::vector<double> ParamFile::per_index(const std::string& name, std::size_t count) const {
  std::optional<double> fallback;
  if (auto d = get(name + ".default")) fallback = to_double(name + ".default", *d);
  else if (auto p = get(name)) fallback = to_double(name, *p);
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string key = name + "." + std::to_string(i);
    if (auto v = get(key)) out[i] = to_double(key, *v);
    else if (fallback) out[i] = *fallback;
    else throw InvalidArgument("missing parameter '" + key + "' (and no '" + name + ".default')");
  }
  for (const auto& [k, v] : values_) {
    if (k.rfind(name + ".", 0) != 0) continue;
    const std::string suffix = k.substr(name.size() + 1);
    if (suffix == "default") continue;
    std::size_t used = 0;
    unsigned long idx = 0;
    try {
      idx = std::stoul(suffix, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != suffix.size() || suffix.empty() || idx >= count)
      throw InvalidArgument("parameter key '" + k + "' does not name an index below " +
                            std::to_string(count));
  }
  return out;
}

std::vector<std::string> ParamFile::unknown_keys(const std::vector<std::string>& prefixes) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    bool known = false;
    for (const auto& p : prefixes) {
      if (k == p || k.rfind(p + ".", 0) == 0) known = true;
    }
    if (!known) out.push_back(k);
  }
  return out;
}

ModelPtr build_model(const Graph& g, const ParamFile& params) {
  const auto kind = params.get("model");
  if (!kind) throw InvalidArgument("parameter file must set 'model'");
  const std::size_t n = g.num_vertices(), m = g.num_edges();
  if (*kind == "ising")
    return std::make_shared<IsingModel>(g, params.per_index("beta", m), params.per_index("lambda", n));
  if (*kind == "rc" || *kind == "random-cluster")
    return std::make_shared<RandomClusterModel>(g, params.per_index("p", m),
                                                params.per_index("lambda", n));
  if (*kind == "subgraph-world" || *kind == "sw")
    return std::make_shared<SubgraphWorldModel>(g, params.per_index("p", m),
                                                params.per_index("eta", n));
  auto scalar = [&](const std::string& name) {
    if (auto d = params.get(name + ".default")) return to_double(name + ".default", *d);
    return params.get_double(name);
  };
  if (*kind == "hardcore") return std::make_shared<HardcoreModel>(g, scalar("lambda"));
  if (*kind == "bipartite-hardcore")
    return std::make_shared<BipartiteHardcoreModel>(g, scalar("lambda"), scalar("beta"));
  throw InvalidArgument("unknown model kind '" + *kind + "'");
}

double lambda_c(int delta) {
  if (delta < 3) throw InvalidArgument("lambda_c needs Delta >= 3");
  const double d = delta;
  return std::pow(d - 1.0, d - 1.0) / std::pow(d - 2.0, d);
}

// ---------------------------------------------------------------------------
// Couplings

std::shared_ptr<const RandomClusterModel> rc_for_ising(const IsingModel& ising) {
  std::vector<double> p(ising.beta().size());
  for (std::size_t e = 0; e < p.size(); ++e) p[e] = 1.0 - 1.0 / ising.beta()[e];
  return std::make_shared<RandomClusterModel>(ising.graph(), std::move(p), ising.lambda());
}

std::shared_ptr<const SubgraphWorldModel> sw_for_rc(const RandomClusterModel& rc) {
  std::vector<double> p(rc.p().size()), eta(rc.lambda().size());
  for (std::size_t e = 0; e < p.size(); ++e) p[e] = rc.p()[e] / 2.0;
  for (std::size_t v = 0; v < eta.size(); ++v)
    eta[v] = (1.0 - rc.lambda()[v]) / (1.0 + rc.lambda()[v]);
  return std::make_shared<SubgraphWorldModel>(rc.graph(), std::move(p), std::move(eta));
}

std::vector<double> sw_extra_edge_probs(const RandomClusterModel& rc) {
  std::vector<double> q(rc.p().size());
  for (std::size_t e = 0; e < q.size(); ++e) q[e] = rc.p()[e] / (2.0 - rc.p()[e]);
  return q;
}

namespace {
bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

void check_same_graph(const Graph& a, const Graph& b, const char* what) {
  if (a.num_vertices() != b.num_vertices() || a.edges() != b.edges())
    throw InvalidArgument(std::string(what) + ": models are defined on different graphs");
}
}  // namespace

State rc_to_ising(const State& edges, const RandomClusterModel& rc, const IsingModel& ising,
                  RngStream& rng) {
  check_same_graph(rc.graph(), ising.graph(), "rc_to_ising");
  for (std::size_t e = 0; e < rc.p().size(); ++e)
    if (!close(rc.p()[e], 1.0 - 1.0 / ising.beta()[e]))
      throw InvalidArgument("rc_to_ising: p_e must equal 1 - 1/beta_e");
  for (std::size_t v = 0; v < rc.lambda().size(); ++v)
    if (!close(rc.lambda()[v], ising.lambda()[v]))
      throw InvalidArgument("rc_to_ising: lambda differs between the models");
  const auto label = ising.graph().components(edges);
  const std::size_t n = label.size();
  std::vector<double> prod(n, 1.0);
  for (std::size_t v = 0; v < n; ++v) prod[label[v]] *= ising.lambda()[v];
  std::vector<Spin> comp_spin(n, kZero);
  std::vector<bool> drawn(n, false);
  std::vector<Spin> out(n);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t c = label[v];
    if (!drawn[c]) {
      drawn[c] = true;
      comp_spin[c] = uniform01(rng) < prod[c] / (1.0 + prod[c]) ? kOne : kZero;
    }
    out[v] = comp_spin[c];
  }
  return State(Alphabet::binary, std::move(out));
}

State sw_to_rc(const State& x, const SubgraphWorldModel& sw, const RandomClusterModel& rc,
               RngStream& rng) {
  check_same_graph(sw.graph(), rc.graph(), "sw_to_rc");
  for (std::size_t e = 0; e < rc.p().size(); ++e)
    if (!close(sw.p()[e], rc.p()[e] / 2.0))
      throw InvalidArgument("sw_to_rc: subgraph-world p must equal p/2");
  for (std::size_t v = 0; v < rc.lambda().size(); ++v)
    if (!close(sw.eta()[v], (1.0 - rc.lambda()[v]) / (1.0 + rc.lambda()[v])))
      throw InvalidArgument("sw_to_rc: eta must equal (1-lambda)/(1+lambda)");
  if (x.size() != rc.graph().num_edges()) throw InvalidArgument("sw_to_rc: edge state has the wrong length");
  const auto q = sw_extra_edge_probs(rc);
  std::vector<Spin> y(x.size());
  for (std::size_t e = 0; e < x.size(); ++e) {
    const bool z = uniform01(rng) < q[e];
    y[e] = (x[e] == kOne || z) ? kOne : kZero;
  }
  return State(Alphabet::binary, std::move(y));
}

}  // namespace fdlab
