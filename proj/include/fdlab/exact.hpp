#pragma once
// Exact enumeration oracle: supports, dense kernels for every chain, exact
// propagation, distances, reversibility, monotonicity and comparison checks,
// and exact mixing times.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fdlab/models.hpp"

namespace fdlab {

/// Support states in lexicographic order (variable 0 most significant,
/// 0 < 1 < *), with index lookup in both directions.
class EnumeratedSupport {
 public:
  EnumeratedSupport(std::size_t nvars, Alphabet a, std::vector<State> states);

  std::size_t size() const { return states_.size(); }
  std::size_t nvars() const { return nvars_; }
  Alphabet alphabet() const { return alphabet_; }
  const State& state(std::size_t i) const { return states_[i]; }
  const std::vector<State>& states() const { return states_; }
  std::optional<std::size_t> index_of(const State& s) const;
  /// Throws InvalidArgument when `s` is not in the support.
  std::size_t require_index(const State& s) const;
  /// The componentwise order restricted to the support (built on first use).
  const Poset& poset() const;

 private:
  std::size_t nvars_;
  Alphabet alphabet_;
  std::vector<State> states_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  mutable std::shared_ptr<Poset> poset_;
};

using SupportPtr = std::shared_ptr<const EnumeratedSupport>;

/// Complete support of a model. Refuses more than `guard` support states or
/// more than 16 * guard candidate states.
SupportPtr enumerate_support(const Model& model, std::size_t guard = kEnumerationGuard);

struct DistributionVector {
  SupportPtr support;
  std::vector<double> p;

  std::size_t size() const { return p.size(); }
  double operator[](std::size_t i) const { return p[i]; }
  double total() const;
  double at(const State& s) const;
};

/// Normalized model weights over the support.
DistributionVector stationary_distribution(const Model& model, SupportPtr support = nullptr);
DistributionVector point_mass(SupportPtr support, const State& s);
/// Smallest probability in the distribution (mu_min).
double min_probability(const DistributionVector& d);

/// Dense row-stochastic matrix over a support.
class Kernel {
 public:
  explicit Kernel(SupportPtr support);

  static Kernel identity(SupportPtr support);

  const SupportPtr& support() const { return support_; }
  std::size_t size() const { return n_; }
  double at(std::size_t i, std::size_t j) const { return m_[i * n_ + j]; }
  double& at(std::size_t i, std::size_t j) { return m_[i * n_ + j]; }
  const double* row(std::size_t i) const { return m_.data() + i * n_; }
  double* row(std::size_t i) { return m_.data() + i * n_; }
  const std::vector<double>& data() const { return m_; }
  std::vector<double>& data() { return m_; }

  /// Largest |row sum - 1| and smallest entry.
  double row_sum_error() const;
  /// Throws if any row is off by more than tol or any entry is negative.
  void check_stochastic(double tol = 1e-12) const;

  std::optional<DistributionVector> stationary;

 private:
  SupportPtr support_;
  std::size_t n_;
  std::vector<double> m_;
};

using KernelPtr = std::shared_ptr<const Kernel>;
/// Product of kernels applied left to right (nu -> nu K1 K2 ...).
using KernelStep = std::vector<KernelPtr>;
using KernelSequence = std::vector<KernelStep>;

Kernel multiply(const Kernel& a, const Kernel& b);
Kernel product(const KernelStep& factors);

/// Heat-bath Glauber kernel (uniform site choice over all variables).
Kernel glauber_kernel(const Model& model, SupportPtr support = nullptr);
/// Glauber update at a fixed site i.
Kernel glauber_site_kernel(const Model& model, std::size_t i, SupportPtr support = nullptr);
/// Glauber kernel where sites outside `allowed` keep their value.
Kernel censored_glauber_kernel(const Model& model, const std::vector<bool>& allowed,
                               SupportPtr support = nullptr);
/// Lifted support of mu at theta.
SupportPtr lifted_support(const Model& mu, double theta);
/// X -> lift(contract(X)) on the lifted support.
Kernel pcl_kernel(const Model& mu, double theta, SupportPtr lifted = nullptr);
/// Restricted Glauber on the lifted space: * sites stay, others resample
/// from the tilted conditional of the contracted state.
Kernel sgd_kernel(const Model& mu, double theta, SupportPtr lifted = nullptr);
Kernel sgd_site_kernel(const Model& mu, double theta, std::size_t i, SupportPtr lifted = nullptr);
/// Glauber dynamics on the lifted distribution pi.
Kernel pi_gd_kernel(const Model& mu, double theta, SupportPtr lifted = nullptr);
Kernel pi_gd_site_kernel(const Model& mu, double theta, std::size_t i, SupportPtr lifted = nullptr);
/// Field dynamics kernel (|V| <= 20).
Kernel fd_kernel(const Model& mu, double theta, SupportPtr support = nullptr);

/// Steps t = 0..T1*T2-1: P_cl P_sGD when t mod T2 = 0, else P_sGD.
KernelSequence algorithm_kernel_sequence(const Model& mu, double theta, std::size_t t1,
                                         std::size_t t2);
/// Same pattern with P_piGD in place of P_sGD.
KernelSequence modified_gd_kernel_sequence(const Model& mu, double theta, std::size_t t1,
                                           std::size_t t2);

DistributionVector apply(const DistributionVector& nu, const Kernel& k);
DistributionVector apply(const DistributionVector& nu, const KernelStep& step);

/// nu_0, nu_1, ... ; throws std::runtime_error when the total mass drifts
/// from 1 by more than 1e-9.
std::vector<DistributionVector> propagate(const DistributionVector& nu0,
                                          const KernelSequence& seq);
std::vector<DistributionVector> propagate(const DistributionVector& nu0, const Kernel& k,
                                          std::size_t steps);

double tv_distance(const DistributionVector& a, const DistributionVector& b);
double l1_distance(const DistributionVector& a, const DistributionVector& b);
/// D_KL(a || b); +infinity when a is not absolutely continuous w.r.t. b.
double kl_divergence(const DistributionVector& a, const DistributionVector& b);
inline bool is_infinite_kl(double v) { return v == std::numeric_limits<double>::infinity(); }

/// max |pi(x) K(x,y) - pi(y) K(y,x)|.
double check_detailed_balance(const Kernel& k, const DistributionVector& pi);

/// Pairs (i, j) where j covers i in the order restricted to `elements`.
/// Comparable pairs are exactly the chains of covering pairs, so checking a
/// transitive relation on covers is enough.
std::vector<std::pair<std::size_t, std::size_t>> covering_pairs(const Poset& poset);

struct MonotonicityResult {
  bool holds = true;
  std::optional<std::pair<std::size_t, std::size_t>> rows;
  DominanceResult dominance;
};

/// Row dominance P(x,.) <=_sd P(y,.) for every x <= y in the support.
MonotonicityResult check_stochastic_monotonicity(const Kernel& k);

struct MonotoneSystemResult {
  bool holds = true;
  std::size_t site = 0;
  State lower, upper;  // the two pinnings (site entry is meaningless)
  SiteLaw law_lower{}, law_upper{};
};

/// Single-site conditionals increase along the order of pinnings on V \ {v}.
MonotoneSystemResult check_monotone_system(const Model& model, std::size_t max_vars = 12);

struct McLeqResult {
  bool holds = true;
  std::size_t rays_checked = 0;
  std::size_t random_checked = 0;
  std::optional<UpSet> up_set;    // failing extreme ray, if any
  std::vector<double> nu;         // the failing nu
  DominanceResult dominance;
};

/// nu P <=_sd nu Q for every nu with nu/mu increasing: checked on the extreme
/// rays mu restricted to an up-set, plus `random_trials` random increasing
/// densities as a cross-check.
McLeqResult check_mc_leq(const KernelStep& p, const KernelStep& q, const DistributionVector& mu,
                         std::uint64_t seed = 1, std::size_t random_trials = 100);

inline constexpr std::size_t kMixingCap = 1'000'000;

/// min{t >= 0 : TV(P^t(x0, .), target) <= eps}. Throws GuardExceeded at the cap.
std::size_t exact_mixing_time(const Kernel& k, std::size_t x0, const DistributionVector& target,
                              double eps, std::size_t cap = kMixingCap);
/// Time-inhomogeneous version over a finite sequence.
std::size_t exact_mixing_time(const KernelSequence& seq, const DistributionVector& nu0,
                              const DistributionVector& target, double eps);
/// Worst case over all starts in the support.
std::size_t mixing_time_all_starts(const Kernel& k, const DistributionVector& target, double eps,
                                   std::size_t cap = kMixingCap);

struct TiltedMixing {
  std::size_t value = 0;
  std::vector<std::size_t> worst_pinning;  // Lambda attaining the max
  std::size_t pinnings_checked = 0;
};

/// max over Lambda with mu_Lambda(1_Lambda) > 0 of the all-starts Glauber
/// mixing time of (theta*mu)^{1_Lambda}.
TiltedMixing tilted_mixing_time(const ModelPtr& mu, double theta, double eps,
                                std::size_t cap = kMixingCap);

struct FdMixing {
  std::size_t all_starts = 0;
  /// Only defined when 1_V is in the support.
  std::optional<std::size_t> from_ones;
};
FdMixing fd_mixing_time(const Model& mu, double theta, double eps, std::size_t cap = kMixingCap);

/// Law of lift(X) for X ~ base.
DistributionVector lift_pushforward(const DistributionVector& base, double theta,
                                    SupportPtr lifted);
/// Law of contract(Y) for Y ~ lifted.
DistributionVector contract_pushforward(const DistributionVector& lifted, SupportPtr base);

/// Exact law of rc_to_ising applied to an RC sample with p = 1 - 1/beta.
DistributionVector rc_to_ising_pushforward(const IsingModel& ising, SupportPtr ising_support);
/// Exact law of X union Z for X from the coupled subgraph-world model.
DistributionVector sw_to_rc_pushforward(const RandomClusterModel& rc, SupportPtr rc_support);

/// 17 significant digits, '.' decimal point, locale independent.
std::string format_double(double x);
/// Header row "state,<s1>,<s2>,..." then one row per source state.
void write_csv(std::ostream& out, const Kernel& k);
/// Header row of state strings then one row of probabilities.
void write_csv(std::ostream& out, const DistributionVector& d);

}  // namespace fdlab
