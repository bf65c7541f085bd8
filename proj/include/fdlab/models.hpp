#pragma once
// Spin-system models and the transforms that close them under tilting,
// flipping, pinning, lifting and taking the left marginal. Every model
// exposes an unnormalized log-weight and exact single-site conditionals.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fdlab/order.hpp"

namespace fdlab {

/// Unnormalized weight in log form. Zero weight is the explicit
/// `impossible` marker, never -inf arithmetic.
struct LogWeight {
  double log = 0.0;
  bool possible = true;

  static LogWeight impossible() { return {0.0, false}; }
  static LogWeight from_log(double l) { return {l, true}; }
  double value() const;
  LogWeight operator*(const LogWeight& o) const;
};

/// Conditional law of one site: probabilities of spins 0, 1, * (the last
/// entry is 0 for binary models).
using SiteLaw = std::array<double, 3>;

/// Partial assignment: entries -1 are free, otherwise the pinned spin.
using Pinning = std::vector<std::int8_t>;

inline constexpr std::size_t kEnumerationGuard = std::size_t{1} << 20;

class Graph {
 public:
  Graph() = default;
  Graph(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges,
        std::optional<std::size_t> left_size = std::nullopt);

  std::size_t num_vertices() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::pair<std::size_t, std::size_t>& edge(std::size_t e) const { return edges_[e]; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  /// (neighbour, edge id) pairs.
  const std::vector<std::pair<std::size_t, std::size_t>>& incident(std::size_t v) const {
    return adj_[v];
  }
  bool bipartite() const { return left_.has_value(); }
  std::size_t left_size() const { return left_.value_or(0); }
  bool is_left(std::size_t v) const { return left_ && v < *left_; }
  std::size_t max_degree() const;

  /// Component label per vertex for the subgraph (V, S); S is a binary
  /// state over edges, `skip` names an edge to ignore.
  std::vector<std::size_t> components(const State& s,
                                      std::optional<std::size_t> skip = std::nullopt) const;

  static Graph complete(std::size_t n);
  static Graph path(std::size_t n);
  static Graph cycle(std::size_t n);

 private:
  std::size_t n_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj_;
  std::optional<std::size_t> left_;
};

Graph read_graph(std::istream& in);
Graph read_graph_file(const std::string& path);
void write_graph(std::ostream& out, const Graph& g);

enum class ModelKind {
  ising,
  random_cluster,
  subgraph_world,
  hardcore,
  bipartite_hardcore,
  left_marginal,
  tilted,
  flipped,
  pinned,
  lifted
};

class Model;
using ModelPtr = std::shared_ptr<const Model>;

class Model : public std::enable_shared_from_this<Model> {
 public:
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual std::size_t size() const = 0;
  virtual Alphabet alphabet() const { return Alphabet::binary; }
  virtual LogWeight log_weight(const State& x) const = 0;
  virtual std::string describe() const = 0;

  double weight(const State& x) const { return log_weight(x).value(); }
  bool in_support(const State& x) const { return log_weight(x).possible; }

  /// Law of x_v given x on V \ {v}; x[v] is ignored. Throws InvalidArgument
  /// when no value of v is feasible.
  virtual SiteLaw conditional(const State& x, std::size_t v) const;
  /// Reference implementation by weight ratios, used to cross-check fast paths.
  SiteLaw conditional_by_weights(const State& x, std::size_t v) const;

  /// Marginal of v under a partial pinning, by enumerating completions
  /// (refuses more than kEnumerationGuard completions).
  SiteLaw marginal(const Pinning& pinning, std::size_t v) const;
  /// Whether the pinning extends to a support element.
  bool feasible(const Pinning& pinning) const;

  /// The underlying model for transforms, nullptr for base models.
  virtual ModelPtr base() const { return nullptr; }

 protected:
  void check_state(const State& x) const;
};

/// Ferromagnetic Ising: weight prod_{monochromatic e} beta_e prod_{v: x_v=1} lambda_v.
class IsingModel final : public Model {
 public:
  IsingModel(Graph g, std::vector<double> beta, std::vector<double> lambda);
  ModelKind kind() const override { return ModelKind::ising; }
  std::size_t size() const override { return g_.num_vertices(); }
  LogWeight log_weight(const State& x) const override;
  SiteLaw conditional(const State& x, std::size_t v) const override;
  std::string describe() const override;

  const Graph& graph() const { return g_; }
  const std::vector<double>& beta() const { return beta_; }
  const std::vector<double>& lambda() const { return lambda_; }

 private:
  Graph g_;
  std::vector<double> beta_, lambda_;
};

/// Random cluster model over edge subsets (one variable per edge).
class RandomClusterModel final : public Model {
 public:
  RandomClusterModel(Graph g, std::vector<double> p, std::vector<double> lambda);
  ModelKind kind() const override { return ModelKind::random_cluster; }
  std::size_t size() const override { return g_.num_edges(); }
  LogWeight log_weight(const State& s) const override;
  SiteLaw conditional(const State& s, std::size_t e) const override;
  std::string describe() const override;

  /// mu(S + e) / mu(S - e).
  double marginal_ratio(const State& s, std::size_t e) const;

  const Graph& graph() const { return g_; }
  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& lambda() const { return lambda_; }
  double lambda_max() const;
  double p_min() const;

 private:
  Graph g_;
  std::vector<double> p_, lambda_;
};

double rc_marginal_ratio(const RandomClusterModel& rc, const State& s, std::size_t e);

/// Subgraph-world model: prod_{e in S} p_e/(1-p_e) prod_{v odd in S} eta_v.
class SubgraphWorldModel final : public Model {
 public:
  SubgraphWorldModel(Graph g, std::vector<double> p, std::vector<double> eta);
  ModelKind kind() const override { return ModelKind::subgraph_world; }
  std::size_t size() const override { return g_.num_edges(); }
  LogWeight log_weight(const State& s) const override;
  SiteLaw conditional(const State& s, std::size_t e) const override;
  std::string describe() const override;

  const Graph& graph() const { return g_; }
  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& eta() const { return eta_; }

 private:
  Graph g_;
  std::vector<double> p_, eta_;
};

/// Hardcore model with occupancy encoding (1 = in the independent set).
class HardcoreModel final : public Model {
 public:
  HardcoreModel(Graph g, double lambda);
  ModelKind kind() const override { return ModelKind::hardcore; }
  std::size_t size() const override { return g_.num_vertices(); }
  LogWeight log_weight(const State& x) const override;
  SiteLaw conditional(const State& x, std::size_t v) const override;
  std::string describe() const override;

  const Graph& graph() const { return g_; }
  double lambda() const { return lambda_; }

 private:
  Graph g_;
  double lambda_;
};

/// Bipartite hardcore with the flipped-left encoding: a left vertex with
/// spin 1 is outside the independent set, a right vertex with spin 1 is in it.
class BipartiteHardcoreModel final : public Model {
 public:
  BipartiteHardcoreModel(Graph g, double lambda, double beta);
  ModelKind kind() const override { return ModelKind::bipartite_hardcore; }
  std::size_t size() const override { return g_.num_vertices(); }
  LogWeight log_weight(const State& x) const override;
  SiteLaw conditional(const State& x, std::size_t v) const override;
  std::string describe() const override;

  bool occupied(const State& x, std::size_t v) const;
  const Graph& graph() const { return g_; }
  double lambda() const { return lambda_; }
  double beta() const { return beta_; }

 private:
  Graph g_;
  double lambda_, beta_;
};

/// Marginal of a bipartite hardcore model on the left side (variables are
/// the left vertices, same encoding).
class LeftMarginalModel final : public Model {
 public:
  explicit LeftMarginalModel(std::shared_ptr<const BipartiteHardcoreModel> bhc);
  ModelKind kind() const override { return ModelKind::left_marginal; }
  std::size_t size() const override { return bhc_->graph().left_size(); }
  LogWeight log_weight(const State& x) const override;
  SiteLaw conditional(const State& x, std::size_t v) const override;
  std::string describe() const override;
  ModelPtr base() const override { return bhc_; }

  /// Same law by summing over right-side states; cross-check for the closed form.
  SiteLaw conditional_by_summation(const State& x, std::size_t v) const;

 private:
  std::shared_ptr<const BipartiteHardcoreModel> bhc_;
};

class TiltedModel final : public Model {
 public:
  TiltedModel(ModelPtr base, double theta);
  ModelKind kind() const override { return ModelKind::tilted; }
  std::size_t size() const override { return base_->size(); }
  LogWeight log_weight(const State& x) const override;
  SiteLaw conditional(const State& x, std::size_t v) const override;
  std::string describe() const override;
  ModelPtr base() const override { return base_; }
  double theta() const { return theta_; }

 private:
  ModelPtr base_;
  double theta_;
};

class FlippedModel final : public Model {
 public:
  explicit FlippedModel(ModelPtr base);
  ModelKind kind() const override { return ModelKind::flipped; }
  std::size_t size() const override { return base_->size(); }
  LogWeight log_weight(const State& x) const override;
  SiteLaw conditional(const State& x, std::size_t v) const override;
  std::string describe() const override;
  ModelPtr base() const override { return base_; }

 private:
  ModelPtr base_;
};

/// Conditioning on a partial assignment. The variable set is unchanged;
/// pinned sites have a point-mass conditional.
class PinnedModel final : public Model {
 public:
  PinnedModel(ModelPtr base, Pinning pinning);
  ModelKind kind() const override { return ModelKind::pinned; }
  std::size_t size() const override { return base_->size(); }
  Alphabet alphabet() const override { return base_->alphabet(); }
  LogWeight log_weight(const State& x) const override;
  SiteLaw conditional(const State& x, std::size_t v) const override;
  std::string describe() const override;
  ModelPtr base() const override { return base_; }
  const Pinning& pinning() const { return pinning_; }

 private:
  ModelPtr base_;
  Pinning pinning_;
};

/// Lifted law over {0,1,*}^V: mu(contract(x)) theta^{C1} (1-theta)^{C*}.
class LiftedModel final : public Model {
 public:
  LiftedModel(ModelPtr base, double theta);
  ModelKind kind() const override { return ModelKind::lifted; }
  std::size_t size() const override { return base_->size(); }
  Alphabet alphabet() const override { return Alphabet::ternary; }
  LogWeight log_weight(const State& x) const override;
  SiteLaw conditional(const State& x, std::size_t v) const override;
  std::string describe() const override;
  ModelPtr base() const override { return base_; }
  double theta() const { return theta_; }

 private:
  ModelPtr base_;
  double theta_;
};

/// Tilt by theta > 0. Hardcore models are rewritten to hardcore(theta*lambda)
/// and nested tilts collapse.
ModelPtr tilt(ModelPtr m, double theta);
ModelPtr flip(ModelPtr m);
/// Throws InvalidArgument when the pinning is infeasible.
ModelPtr pin(ModelPtr m, Pinning pinning);
/// Pins every variable of `lambda_set` to 1.
ModelPtr pin_ones(ModelPtr m, const std::vector<std::size_t>& lambda_set);
ModelPtr lift_model(ModelPtr m, double theta);
ModelPtr left_marginal(ModelPtr m);

/// Draws from the pinned tilted law (theta*mu)^{sigma_{V\{v}}}_v using the
/// base conditional: P(1) = theta q1 / (theta q1 + q0).
double tilted_conditional_one(const Model& base, const State& x, std::size_t v,
                              double theta);

// ---------------------------------------------------------------------------
// Parameter files and model construction.

/// Flat key=value text with '#' comments. Duplicate keys are rejected.
class ParamFile {
 public:
  static ParamFile parse(std::istream& in);
  static ParamFile load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> get(const std::string& key) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }
  /// Resolves `<name>.<index>` falling back to `<name>.default` and then
  /// `<name>`; throws when neither exists.
  std::vector<double> per_index(const std::string& name, std::size_t count) const;
  /// Keys not starting with any of the given prefixes.
  std::vector<std::string> unknown_keys(const std::vector<std::string>& prefixes) const;

 private:
  std::map<std::string, std::string> values_;
};

/// Builds the base model named by `model=` in the parameter file.
ModelPtr build_model(const Graph& g, const ParamFile& params);

/// Lambda_c(Delta) = (Delta-1)^(Delta-1) / (Delta-2)^Delta for Delta >= 3.
double lambda_c(int delta);

// ---------------------------------------------------------------------------
// Coupling samplers.

/// RC model whose samples transfer to `ising`: p_e = 1 - 1/beta_e, same lambda.
std::shared_ptr<const RandomClusterModel> rc_for_ising(const IsingModel& ising);
/// Subgraph-world model coupled to `rc`: p' = p/2, eta = (1-lambda)/(1+lambda).
std::shared_ptr<const SubgraphWorldModel> sw_for_rc(const RandomClusterModel& rc);
/// q_e = p_e / (2 - p_e).
std::vector<double> sw_extra_edge_probs(const RandomClusterModel& rc);

/// Each component C of (V, S) is all-1 with probability
/// prod lambda / (1 + prod lambda), independently. `rc` must be the model
/// returned by rc_for_ising (checked).
State rc_to_ising(const State& edges, const RandomClusterModel& rc,
                  const IsingModel& ising, RngStream& rng);
/// Y = X union Z with Z_e ~ Bernoulli(q_e). `sw` must be the model returned
/// by sw_for_rc (checked).
State sw_to_rc(const State& x, const SubgraphWorldModel& sw,
               const RandomClusterModel& rc, RngStream& rng);

}  // namespace fdlab
