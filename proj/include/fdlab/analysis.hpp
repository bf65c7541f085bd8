#pragma once
// Independence diagnostics (influence matrices, marginal stability, coupling
// independence, entropic-independence witnesses), the alpha(t) schedules and
// their kappa / mixing bound, and the delta-uniqueness check.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fdlab/exact.hpp"
#include "fdlab/models.hpp"

namespace fdlab {

/// Partition sums of every partial pinning of a binary model, indexed by a
/// base-3 code (digit 0 or 1 pins the variable, 2 leaves it free; variable 0
/// is the least significant digit). Weights are relative to the largest one.
class PinningTable {
 public:
  explicit PinningTable(const Model& model, std::size_t max_vars = 12);

  std::size_t nvars() const { return n_; }
  std::size_t size() const { return z_.size(); }
  double z(std::uint64_t code) const { return z_[code]; }
  bool feasible(std::uint64_t code) const { return z_[code] > 0.0; }
  /// P(x_v = 1 | pinning) where v is free in `code`.
  double marginal_one(std::uint64_t code, std::size_t v) const;
  std::uint64_t with(std::uint64_t code, std::size_t v, int value) const;
  int digit(std::uint64_t code, std::size_t v) const;
  std::uint64_t encode(const Pinning& p) const;
  Pinning decode(std::uint64_t code) const;
  std::uint64_t all_free() const { return size() - 1; }

 private:
  std::size_t n_;
  std::vector<std::uint64_t> pow3_;
  std::vector<double> z_;
};

struct InfluenceMatrix {
  std::size_t n = 0;
  Pinning pinning;
  std::vector<double> psi;  // row-major n x n
  double at(std::size_t u, std::size_t v) const { return psi[u * n + v]; }
};

/// Psi(u,v) = mu^{sigma, u<-1}_v(1) - mu^{sigma, u<-0}_v(1) when u can take
/// both values under sigma and mu^sigma_v(1) > 0, else 0.
InfluenceMatrix influence_matrix(const PinningTable& table, const Pinning& pinning,
                                 bool include_diagonal = true);
InfluenceMatrix influence_matrix(const Model& model, const Pinning& pinning,
                                 bool include_diagonal = true);
/// Largest absolute row sum.
double sinf_norm(const InfluenceMatrix& psi);

struct SpectralResult {
  double eta = 0.0;
  Pinning pinning;
  std::size_t pinnings_checked = 0;
};
/// max ||Psi^sigma||_inf over feasible sigma on Lambda with |Lambda| <= n - 2.
SpectralResult spectral_independence(const PinningTable& table, bool include_diagonal = true);

struct MarginalStability {
  /// Nullopt stands for +infinity (some mu^tau_v(0) = 0).
  std::optional<double> k;
  Pinning tau;
  Pinning tau_s;
  std::size_t vertex = 0;
};
/// Smallest K with R^tau_v <= K R^{tau_S}_v and mu^tau_v(0) >= 1/K over all
/// (Lambda, tau, S, v). Requires |V| <= 10.
MarginalStability marginal_stability(const PinningTable& table);

struct CouplingResult {
  double c = 0.0;
  Pinning pinning;
  std::size_t site = 0;
  std::size_t triples_checked = 0;
};
/// Max over (Lambda, sigma, i) of the optimal expected Hamming distance
/// between mu^{sigma, i<-0} and mu^{sigma, i<-1}.
CouplingResult coupling_independence(const PinningTable& table, std::size_t max_states = 512);

struct EiWitness {
  double ratio = 0.0;
  std::vector<double> nu;
  std::string kind;  // candidate family that produced the witness
};
/// Lower bound on the entropic-independence constant: the best ratio
/// sum_i KL(nu_i||mu_i) / KL(nu||mu) found over structured candidates and
/// random-restart coordinate ascent.
EiWitness ei_witness(const DistributionVector& mu, std::size_t iterations, std::uint64_t seed);
/// The ratio for one nu (nullopt when KL(nu||mu) is 0 or infinite).
std::optional<double> ei_ratio(const DistributionVector& nu, const DistributionVector& mu);

// ---------------------------------------------------------------------------
// alpha(t) schedules

/// Piecewise-constant alpha on [0, -log theta]: value[k] on
/// [start[k], start[k+1]), the last piece running to -log theta.
class AlphaSchedule {
 public:
  AlphaSchedule(double theta, std::vector<double> start, std::vector<double> value);
  static AlphaSchedule constant(double theta, double a);

  double theta() const { return theta_; }
  double horizon() const { return -std::log(theta_); }
  const std::vector<double>& start() const { return start_; }
  const std::vector<double>& value() const { return value_; }
  double at(double t) const;
  /// Closed-form integral of alpha over [0, horizon].
  double integral() const;
  AlphaSchedule scaled(double factor) const;

 private:
  double theta_;
  std::vector<double> start_, value_;
};

/// log kappa = -4 * integral of alpha.
double log_kappa(const AlphaSchedule& s);
double kappa(const AlphaSchedule& s);
/// Integral of alpha by adaptive Simpson on the pointwise function.
double quadrature_integral(const AlphaSchedule& s, double tol = 1e-13);

struct TBound {
  double log_value;  // log of the bound, finite even when the bound overflows
  double value;      // +inf when it overflows
};
/// kappa^{-1}(log log(1/mu_min) + log(1/(2 eps^2))) + 1.
TBound t_bound(const AlphaSchedule& s, double mu_min, double eps);

/// theta = p_min min(1e-7, (1-lambda_max)/27) / log n.
double rc_theta(double p_min, double lambda_max, std::size_t n);
/// 3(1-lambda_max)^{-2} up to log(1/theta0), then 5e4, with
/// theta0 = p_min (1-lambda_max)^2 / 2.
AlphaSchedule rc_schedule(double p_min, double lambda_max, std::size_t n);
/// theta = lambda / (e^9 (1+lambda)^Delta Delta log n).
double bhc_theta(double lambda, int delta_max, std::size_t n);
/// 1e4 (1+lambda)^{5 Delta} / delta up to log(1/theta0), then
/// 2e4 (1+lambda)^{5 Delta}, with theta0 = lambda / e^{e^9}.
AlphaSchedule bhc_schedule(double lambda, int delta_max, double delta, std::size_t n);

// ---------------------------------------------------------------------------
// delta-uniqueness

struct UniquenessResult {
  bool holds = false;
  std::vector<double> fixed_points;
  double max_derivative = 0.0;  // F' at the fixed points
};
/// F(x) = lambda (1 + beta (1+x)^{-w})^{-d}; holds iff F'(x) <= 1 - delta at
/// every fixed point in [0, lambda].
UniquenessResult uniqueness_check(double lambda, double d, double beta, double w, double delta);
double uniqueness_f(double lambda, double d, double beta, double w, double x);
double uniqueness_f_prime(double lambda, double d, double beta, double w, double x);

struct UniquenessGridRow {
  double w;
  UniquenessResult result;
};
/// Heuristic: samples w = 2^k for k = -6..12.
std::vector<UniquenessGridRow> uniqueness_grid(double lambda, double d, double beta, double delta);

// ---------------------------------------------------------------------------

struct IndependenceReport {
  SpectralResult spectral;
  MarginalStability stability;
  CouplingResult coupling;
  EiWitness ei;
  bool include_diagonal = true;
  /// Serialized JSON.
  std::string to_json(int indent = 2) const;
};

struct ReportOptions {
  bool include_diagonal = true;
  std::size_t ei_iterations = 200;
  std::uint64_t seed = 1;
  bool stability = true;  // skipped automatically above 10 variables
};
IndependenceReport independence_report(const Model& model, const ReportOptions& opt = {});

}  // namespace fdlab
