#include "fdlab/exact.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "fdlab/rng.hpp"
#include "fdlab/simd.hpp"

namespace fdlab {

namespace {

bool lex_less(const State& a, const State& b) {
  const auto va = a.values();
  const auto vb = b.values();
  return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
}

std::uint64_t ones_mask(const State& x) {
  std::uint64_t m = 0;
  for (std::size_t v = 0; v < x.size(); ++v)
    if (x[v] != kZero) m |= std::uint64_t{1} << v;
  return m;
}

void require_same_support(const SupportPtr& a, const SupportPtr& b, const char* what) {
  if (a == b) return;
  if (!a || !b || a->size() != b->size() || a->states() != b->states())
    throw InvalidArgument(std::string(what) + ": supports differ");
}

/// Kernel that picks site v with probability site_prob[v] and resamples it
/// from cond(x, v); leftover probability stays put.
template <class Cond>
Kernel site_mixture_kernel(SupportPtr sup, const std::vector<double>& site_prob, Cond cond) {
  Kernel k(sup);
  const std::size_t a = alphabet_size(sup->alphabet());
  for (std::size_t i = 0; i < sup->size(); ++i) {
    const State& x = sup->state(i);
    double stay = 1.0;
    for (std::size_t v = 0; v < site_prob.size(); ++v) {
      const double w = site_prob[v];
      if (w == 0.0) continue;
      stay -= w;
      const SiteLaw law = cond(x, v);
      State y = x;
      for (std::size_t s = 0; s < a; ++s) {
        if (law[s] == 0.0) continue;
        y.set(v, static_cast<Spin>(s));
        k.at(i, sup->require_index(y)) += w * law[s];
      }
    }
    if (stay > 1e-15) k.at(i, i) += stay;
  }
  return k;
}

std::vector<double> uniform_sites(std::size_t n) { return std::vector<double>(n, 1.0 / n); }

std::vector<double> single_site(std::size_t n, std::size_t i) {
  if (i >= n) throw InvalidArgument("site index out of range");
  std::vector<double> w(n, 0.0);
  w[i] = 1.0;
  return w;
}

void check_binary(const Model& m, const char* what) {
  if (m.alphabet() != Alphabet::binary)
    throw InvalidArgument(std::string(what) + " needs a binary model");
}

SiteLaw sgd_law(const Model& mu, double theta, const State& x, std::size_t v) {
  if (x[v] == kStar) return {0.0, 0.0, 1.0};
  const double p1 = tilted_conditional_one(mu, contract(x), v, theta);
  return {1.0 - p1, p1, 0.0};
}

SiteLaw pi_law(const Model& mu, double theta, const State& x, std::size_t v) {
  const SiteLaw q = mu.conditional(contract(x), v);
  return {q[0], theta * q[1], (1.0 - theta) * q[1]};
}

DistributionVector lifted_stationary(const Model& mu, double theta, SupportPtr lifted) {
  const DistributionVector base = stationary_distribution(mu);
  return lift_pushforward(base, theta, std::move(lifted));
}

double max_row_tv(const std::vector<double>& m, const std::vector<double>& target,
                  std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    worst = std::max(worst, 0.5 * simd::active().l1_distance(m.data() + i * n, target.data(), n));
  return worst;
}

}  // namespace

// ---------------------------------------------------------------------------
// Supports and distributions

EnumeratedSupport::EnumeratedSupport(std::size_t nvars, Alphabet a, std::vector<State> states)
    : nvars_(nvars), alphabet_(a), states_(std::move(states)) {
  index_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) {
    const State& s = states_[i];
    if (s.size() != nvars_ || s.alphabet() != alphabet_)
      throw InvalidArgument("support state has the wrong shape");
    if (!index_.emplace(s.encode(), i).second)
      throw InvalidArgument("duplicate support state " + s.to_string());
  }
}

std::optional<std::size_t> EnumeratedSupport::index_of(const State& s) const {
  if (s.size() != nvars_ || s.alphabet() != alphabet_) return std::nullopt;
  const auto it = index_.find(s.encode());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EnumeratedSupport::require_index(const State& s) const {
  const auto i = index_of(s);
  if (!i) throw InvalidArgument("state " + s.to_string() + " is not in the support");
  return *i;
}

const Poset& EnumeratedSupport::poset() const {
  if (!poset_) poset_ = std::make_shared<Poset>(states_);
  return *poset_;
}

SupportPtr enumerate_support(const Model& model, std::size_t guard) {
  const std::size_t n = model.size();
  if (model.kind() == ModelKind::lifted) {
    const auto& lm = static_cast<const LiftedModel&>(model);
    return lifted_support(*lm.base(), lm.theta());
  }
  const Alphabet a = model.alphabet();
  const std::size_t r = alphabet_size(a);
  const double candidates = std::pow(static_cast<double>(r), static_cast<double>(n));
  if (candidates > 16.0 * static_cast<double>(guard))
    throw GuardExceeded("support enumeration refused: " + std::to_string(r) + "^" +
                        std::to_string(n) + " candidate states");
  std::vector<State> out;
  std::vector<Spin> vals(n, kZero);
  // Odometer with variable n-1 fastest gives lexicographic order.
  for (bool more = true; more;) {
    State s(a, vals);
    if (model.in_support(s)) {
      out.push_back(std::move(s));
      if (out.size() > guard)
        throw GuardExceeded("support enumeration refused: more than " + std::to_string(guard) +
                            " states");
    }
    more = false;
    for (std::size_t v = n; v-- > 0;) {
      if (vals[v] + 1u < r) {
        ++vals[v];
        more = true;
        break;
      }
      vals[v] = kZero;
    }
  }
  return std::make_shared<EnumeratedSupport>(n, a, std::move(out));
}

double DistributionVector::total() const { return simd::sum(p); }

double DistributionVector::at(const State& s) const {
  const auto i = support->index_of(s);
  return i ? p[*i] : 0.0;
}

DistributionVector stationary_distribution(const Model& model, SupportPtr support) {
  if (!support) support = enumerate_support(model);
  const std::size_t n = support->size();
  if (n == 0) throw InvalidArgument("empty support");
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LogWeight w = model.log_weight(support->state(i));
    if (!w.possible) throw InvalidArgument("support contains a zero-weight state");
    logs[i] = w.log;
  }
  const double m = *std::max_element(logs.begin(), logs.end());
  double z = 0.0;
  for (double& l : logs) z += l = std::exp(l - m);
  for (double& l : logs) l /= z;
  return {std::move(support), std::move(logs)};
}

DistributionVector point_mass(SupportPtr support, const State& s) {
  std::vector<double> p(support->size(), 0.0);
  p[support->require_index(s)] = 1.0;
  return {std::move(support), std::move(p)};
}

double min_probability(const DistributionVector& d) {
  double m = 1.0;
  for (double x : d.p)
    if (x > 0.0) m = std::min(m, x);
  return m;
}

// ---------------------------------------------------------------------------
// Kernels

Kernel::Kernel(SupportPtr support)
    : support_(std::move(support)), n_(support_->size()), m_(n_ * n_, 0.0) {}

Kernel Kernel::identity(SupportPtr support) {
  Kernel k(std::move(support));
  for (std::size_t i = 0; i < k.size(); ++i) k.at(i, i) = 1.0;
  return k;
}

double Kernel::row_sum_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    worst = std::max(worst, std::abs(simd::active().sum(row(i), n_) - 1.0));
  return worst;
}

void Kernel::check_stochastic(double tol) const {
  for (double x : m_)
    if (x < 0.0) throw std::runtime_error("kernel has a negative entry");
  const double err = row_sum_error();
  if (err > tol)
    throw std::runtime_error("kernel rows do not sum to 1 (error " + std::to_string(err) + ")");
}

Kernel multiply(const Kernel& a, const Kernel& b) {
  require_same_support(a.support(), b.support(), "multiply");
  Kernel c(a.support());
  simd::mat_mul(a.data().data(), b.data().data(), c.data().data(), a.size(), a.size(), a.size());
  if (a.stationary && b.stationary) c.stationary = a.stationary;
  return c;
}

Kernel product(const KernelStep& factors) {
  if (factors.empty()) throw InvalidArgument("product of no kernels");
  Kernel acc = *factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) acc = multiply(acc, *factors[i]);
  return acc;
}

Kernel glauber_kernel(const Model& model, SupportPtr support) {
  if (!support) support = enumerate_support(model);
  Kernel k = site_mixture_kernel(support, uniform_sites(model.size()),
                                 [&](const State& x, std::size_t v) { return model.conditional(x, v); });
  k.stationary = stationary_distribution(model, support);
  return k;
}

Kernel glauber_site_kernel(const Model& model, std::size_t i, SupportPtr support) {
  if (!support) support = enumerate_support(model);
  Kernel k = site_mixture_kernel(support, single_site(model.size(), i),
                                 [&](const State& x, std::size_t v) { return model.conditional(x, v); });
  k.stationary = stationary_distribution(model, support);
  return k;
}

Kernel censored_glauber_kernel(const Model& model, const std::vector<bool>& allowed,
                               SupportPtr support) {
  if (allowed.size() != model.size()) throw InvalidArgument("allowed mask has the wrong length");
  if (!support) support = enumerate_support(model);
  std::vector<double> w(model.size(), 0.0);
  for (std::size_t v = 0; v < w.size(); ++v)
    if (allowed[v]) w[v] = 1.0 / static_cast<double>(w.size());
  Kernel k = site_mixture_kernel(support, w,
                                 [&](const State& x, std::size_t v) { return model.conditional(x, v); });
  k.stationary = stationary_distribution(model, support);
  return k;
}

SupportPtr lifted_support(const Model& mu, double theta) {
  check_theta_open_unit(theta, "lifted_support");
  check_binary(mu, "lifted_support");
  const SupportPtr base = enumerate_support(mu);
  std::vector<State> out;
  for (const State& s : base->states()) {
    std::vector<std::size_t> ones;
    for (std::size_t v = 0; v < s.size(); ++v)
      if (s[v] == kOne) ones.push_back(v);
    if (ones.size() >= 64) throw GuardExceeded("lifted support too large");
    const std::uint64_t count = std::uint64_t{1} << ones.size();
    if (out.size() + count > kEnumerationGuard)
      throw GuardExceeded("lifted support exceeds the enumeration guard");
    std::vector<Spin> vals(s.values().begin(), s.values().end());
    for (std::uint64_t m = 0; m < count; ++m) {
      for (std::size_t k = 0; k < ones.size(); ++k) vals[ones[k]] = (m >> k) & 1 ? kStar : kOne;
      out.emplace_back(Alphabet::ternary, vals);
    }
  }
  std::sort(out.begin(), out.end(), lex_less);
  return std::make_shared<EnumeratedSupport>(mu.size(), Alphabet::ternary, std::move(out));
}

Kernel pcl_kernel(const Model& mu, double theta, SupportPtr lifted) {
  if (!lifted) lifted = lifted_support(mu, theta);
  std::map<std::uint64_t, std::vector<std::size_t>> groups;
  std::vector<double> w(lifted->size());
  for (std::size_t j = 0; j < lifted->size(); ++j) {
    const State& y = lifted->state(j);
    groups[contract(y).encode()].push_back(j);
    w[j] = std::pow(theta, static_cast<double>(y.count(kOne))) *
           std::pow(1.0 - theta, static_cast<double>(y.count(kStar)));
  }
  Kernel k(lifted);
  for (std::size_t i = 0; i < lifted->size(); ++i)
    for (std::size_t j : groups.at(contract(lifted->state(i)).encode())) k.at(i, j) = w[j];
  k.stationary = lifted_stationary(mu, theta, lifted);
  return k;
}

Kernel sgd_kernel(const Model& mu, double theta, SupportPtr lifted) {
  if (!lifted) lifted = lifted_support(mu, theta);
  Kernel k = site_mixture_kernel(lifted, uniform_sites(mu.size()), [&](const State& x, std::size_t v) {
    return sgd_law(mu, theta, x, v);
  });
  k.stationary = lifted_stationary(mu, theta, lifted);
  return k;
}

Kernel sgd_site_kernel(const Model& mu, double theta, std::size_t i, SupportPtr lifted) {
  if (!lifted) lifted = lifted_support(mu, theta);
  Kernel k = site_mixture_kernel(lifted, single_site(mu.size(), i), [&](const State& x, std::size_t v) {
    return sgd_law(mu, theta, x, v);
  });
  k.stationary = lifted_stationary(mu, theta, lifted);
  return k;
}

Kernel pi_gd_kernel(const Model& mu, double theta, SupportPtr lifted) {
  if (!lifted) lifted = lifted_support(mu, theta);
  Kernel k = site_mixture_kernel(lifted, uniform_sites(mu.size()), [&](const State& x, std::size_t v) {
    return pi_law(mu, theta, x, v);
  });
  k.stationary = lifted_stationary(mu, theta, lifted);
  return k;
}

Kernel pi_gd_site_kernel(const Model& mu, double theta, std::size_t i, SupportPtr lifted) {
  if (!lifted) lifted = lifted_support(mu, theta);
  Kernel k = site_mixture_kernel(lifted, single_site(mu.size(), i), [&](const State& x, std::size_t v) {
    return pi_law(mu, theta, x, v);
  });
  k.stationary = lifted_stationary(mu, theta, lifted);
  return k;
}

Kernel fd_kernel(const Model& mu, double theta, SupportPtr support) {
  check_theta_open_unit(theta, "fd_kernel");
  check_binary(mu, "fd_kernel");
  const std::size_t n = mu.size();
  if (n > 20) throw GuardExceeded("field-dynamics kernel limited to 20 variables");
  if (!support) support = enumerate_support(mu);
  const std::size_t ns = support->size();

  // Tilted weights relative to their maximum.
  std::vector<double> lw(ns);
  std::vector<std::uint64_t> mask(ns);
  const double lt = std::log(theta);
  for (std::size_t i = 0; i < ns; ++i) {
    const State& y = support->state(i);
    lw[i] = mu.log_weight(y).log + lt * static_cast<double>(y.count(kOne));
    mask[i] = ones_mask(y);
  }
  const double top = *std::max_element(lw.begin(), lw.end());
  std::vector<double> w(ns);
  for (std::size_t i = 0; i < ns; ++i) w[i] = std::exp(lw[i] - top);

  // Z[P] = sum of w over states whose ones contain P.
  const std::size_t full = std::size_t{1} << n;
  std::vector<double> z(full, 0.0);
  for (std::size_t i = 0; i < ns; ++i) z[mask[i]] += w[i];
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t m = 0; m < full; ++m)
      if (!(m & (std::size_t{1} << b))) z[m] += z[m | (std::size_t{1} << b)];

  std::vector<double> pth(n + 1), pone(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    pth[k] = std::pow(theta, static_cast<double>(k));
    pone[k] = std::pow(1.0 - theta, static_cast<double>(k));
  }

  // From x with ones O, the pinned set P is a subset of O, each kept with
  // probability 1 - theta; the result y must contain P.
  Kernel k(support);
  for (std::size_t i = 0; i < ns; ++i) {
    const std::uint64_t o = mask[i];
    const int no = std::popcount(o);
    for (std::size_t j = 0; j < ns; ++j) {
      const std::uint64_t c = o & mask[j];
      double acc = 0.0;
      for (std::uint64_t p = c;; p = (p - 1) & c) {
        const int np = std::popcount(p);
        acc += pth[no - np] * pone[np] / z[p];
        if (p == 0) break;
      }
      k.at(i, j) = acc * w[j];
    }
  }
  k.stationary = stationary_distribution(mu, support);
  return k;
}

namespace {

KernelSequence build_sequence(KernelPtr pcl, KernelPtr inner, std::size_t t1, std::size_t t2) {
  if (t1 < 1 || t2 < 1) throw InvalidArgument("kernel sequences need T1, T2 >= 1");
  KernelSequence seq;
  seq.reserve(t1 * t2);
  for (std::size_t t = 0; t < t1 * t2; ++t) {
    if (t % t2 == 0) seq.push_back({pcl, inner});
    else seq.push_back({inner});
  }
  return seq;
}

}  // namespace

KernelSequence algorithm_kernel_sequence(const Model& mu, double theta, std::size_t t1,
                                         std::size_t t2) {
  const SupportPtr lifted = lifted_support(mu, theta);
  auto pcl = std::make_shared<const Kernel>(pcl_kernel(mu, theta, lifted));
  auto sgd = std::make_shared<const Kernel>(sgd_kernel(mu, theta, lifted));
  return build_sequence(pcl, sgd, t1, t2);
}

KernelSequence modified_gd_kernel_sequence(const Model& mu, double theta, std::size_t t1,
                                           std::size_t t2) {
  const SupportPtr lifted = lifted_support(mu, theta);
  auto pcl = std::make_shared<const Kernel>(pcl_kernel(mu, theta, lifted));
  auto pgd = std::make_shared<const Kernel>(pi_gd_kernel(mu, theta, lifted));
  return build_sequence(pcl, pgd, t1, t2);
}

// ---------------------------------------------------------------------------
// Propagation and distances

DistributionVector apply(const DistributionVector& nu, const Kernel& k) {
  require_same_support(nu.support, k.support(), "apply");
  DistributionVector out{k.support(), std::vector<double>(k.size(), 0.0)};
  simd::vec_mat(nu.p, k.data().data(), k.size(), k.size(), out.p);
  return out;
}

DistributionVector apply(const DistributionVector& nu, const KernelStep& step) {
  DistributionVector cur = nu;
  for (const KernelPtr& k : step) cur = fdlab::apply(cur, *k);
  return cur;
}

namespace {
void check_mass(const DistributionVector& d, std::size_t t) {
  const double err = std::abs(d.total() - 1.0);
  if (err > 1e-9)
    throw std::runtime_error("probability mass drifted by " + std::to_string(err) + " at step " +
                             std::to_string(t));
}
}  // namespace

std::vector<DistributionVector> propagate(const DistributionVector& nu0,
                                          const KernelSequence& seq) {
  std::vector<DistributionVector> out{nu0};
  out.reserve(seq.size() + 1);
  for (std::size_t t = 0; t < seq.size(); ++t) {
    out.push_back(fdlab::apply(out.back(), seq[t]));
    check_mass(out.back(), t + 1);
  }
  return out;
}

std::vector<DistributionVector> propagate(const DistributionVector& nu0, const Kernel& k,
                                          std::size_t steps) {
  std::vector<DistributionVector> out{nu0};
  out.reserve(steps + 1);
  for (std::size_t t = 0; t < steps; ++t) {
    out.push_back(fdlab::apply(out.back(), k));
    check_mass(out.back(), t + 1);
  }
  return out;
}

double l1_distance(const DistributionVector& a, const DistributionVector& b) {
  require_same_support(a.support, b.support, "l1_distance");
  return simd::l1_distance(a.p, b.p);
}

double tv_distance(const DistributionVector& a, const DistributionVector& b) {
  return 0.5 * l1_distance(a, b);
}

double kl_divergence(const DistributionVector& a, const DistributionVector& b) {
  require_same_support(a.support, b.support, "kl_divergence");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.p[i] <= 0.0) continue;
    if (b.p[i] <= 0.0) return std::numeric_limits<double>::infinity();
    s += a.p[i] * std::log(a.p[i] / b.p[i]);
  }
  return std::max(s, 0.0);
}

double check_detailed_balance(const Kernel& k, const DistributionVector& pi) {
  require_same_support(k.support(), pi.support, "check_detailed_balance");
  double worst = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i)
    for (std::size_t j = i + 1; j < k.size(); ++j)
      worst = std::max(worst, std::abs(pi.p[i] * k.at(i, j) - pi.p[j] * k.at(j, i)));
  return worst;
}

// ---------------------------------------------------------------------------
// Order checks

std::vector<std::pair<std::size_t, std::size_t>> covering_pairs(const Poset& poset) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t n = poset.size();
  std::vector<std::size_t> ups;
  for (std::size_t i = 0; i < n; ++i) {
    ups.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && poset.leq(i, j)) ups.push_back(j);
    for (std::size_t j : ups) {
      bool covered = true;
      for (std::size_t k : ups)
        if (k != j && poset.leq(k, j)) {
          covered = false;
          break;
        }
      if (covered) out.emplace_back(i, j);
    }
  }
  return out;
}

MonotonicityResult check_stochastic_monotonicity(const Kernel& k) {
  const Poset& poset = k.support()->poset();
  const std::size_t n = k.size();
  MonotonicityResult res;
  for (const auto& [i, j] : covering_pairs(poset)) {
    DominanceResult d = stochastic_dominance(std::span<const double>(k.row(i), n),
                                             std::span<const double>(k.row(j), n), poset);
    if (!d.holds) {
      res.holds = false;
      res.rows = std::make_pair(i, j);
      res.dominance = std::move(d);
      return res;
    }
  }
  res.dominance.holds = true;
  return res;
}

MonotoneSystemResult check_monotone_system(const Model& model, std::size_t max_vars) {
  const std::size_t n = model.size();
  if (n > max_vars)
    throw GuardExceeded("monotone-system check limited to " + std::to_string(max_vars) +
                        " variables");
  const Alphabet a = model.alphabet();
  const std::size_t r = alphabet_size(a);
  MonotoneSystemResult res;
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<State> pins;
    std::vector<SiteLaw> laws;
    std::size_t total = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) total *= r;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<Spin> vals(n, kZero);
      std::size_t c = code;
      for (std::size_t u = 0; u < n; ++u) {
        if (u == v) continue;
        vals[u] = static_cast<Spin>(c % r);
        c /= r;
      }
      State x(a, vals);
      bool any = false;
      for (std::size_t s = 0; s < r && !any; ++s) {
        x.set(v, static_cast<Spin>(s));
        any = model.in_support(x);
      }
      if (!any) continue;
      x.set(v, kZero);
      laws.push_back(model.conditional(x, v));
      pins.push_back(std::move(x));
    }
    const Poset poset(pins);
    for (const auto& [i, j] : covering_pairs(poset)) {
      for (std::size_t s = 1; s < r; ++s) {
        double ti = 0.0, tj = 0.0;
        for (std::size_t q = s; q < r; ++q) {
          ti += laws[i][q];
          tj += laws[j][q];
        }
        if (ti > tj + kProbabilityTolerance) {
          res.holds = false;
          res.site = v;
          res.lower = pins[i];
          res.upper = pins[j];
          res.law_lower = laws[i];
          res.law_upper = laws[j];
          return res;
        }
      }
    }
  }
  return res;
}

McLeqResult check_mc_leq(const KernelStep& p, const KernelStep& q, const DistributionVector& mu,
                         std::uint64_t seed, std::size_t random_trials) {
  const SupportPtr& sup = mu.support;
  const Poset& poset = sup->poset();
  const std::size_t n = sup->size();
  McLeqResult res;

  auto test = [&](std::vector<double> nu) -> std::optional<DominanceResult> {
    double z = 0.0;
    for (double x : nu) z += x;
    if (z <= 0.0) return std::nullopt;
    for (double& x : nu) x /= z;
    const DistributionVector d{sup, nu};
    DistributionVector a = fdlab::apply(d, p);
    DistributionVector b = fdlab::apply(d, q);
    DominanceResult dom = stochastic_dominance(a.p, b.p, poset);
    if (dom.holds) return std::nullopt;
    res.nu = std::move(nu);
    return dom;
  };

  std::vector<UpSet> ups = enumerate_up_sets(poset);
  std::stable_sort(ups.begin(), ups.end(),
                   [](const UpSet& x, const UpSet& y) { return x.count() < y.count(); });
  for (const UpSet& u : ups) {
    if (u.count() == 0) continue;
    std::vector<double> nu(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (u.members[i]) nu[i] = mu.p[i];
    ++res.rays_checked;
    if (auto fail = test(std::move(nu))) {
      res.holds = false;
      res.up_set = u;
      res.dominance = std::move(*fail);
      return res;
    }
  }

  RngStream rng = make_stream(seed, 0, "mc-leq");
  const auto& order = poset.linear_extension();
  for (std::size_t t = 0; t < random_trials; ++t) {
    std::vector<double> g(n);
    for (double& x : g) x = uniform01(rng);
    // f(x) = max_{y <= x} g(y), filled along a linear extension.
    std::vector<double> f(n, 0.0);
    for (std::size_t i : order) {
      double m = g[i];
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && poset.leq(j, i)) m = std::max(m, g[j]);
      f[i] = m;
    }
    std::vector<double> nu(n);
    for (std::size_t i = 0; i < n; ++i) nu[i] = mu.p[i] * f[i];
    ++res.random_checked;
    if (auto fail = test(std::move(nu))) {
      res.holds = false;
      res.dominance = std::move(*fail);
      return res;
    }
  }
  res.dominance.holds = true;
  return res;
}

// ---------------------------------------------------------------------------
// Mixing times

std::size_t exact_mixing_time(const Kernel& k, std::size_t x0, const DistributionVector& target,
                              double eps, std::size_t cap) {
  require_same_support(k.support(), target.support, "exact_mixing_time");
  if (x0 >= k.size()) throw InvalidArgument("start index out of range");
  DistributionVector nu{k.support(), std::vector<double>(k.size(), 0.0)};
  nu.p[x0] = 1.0;
  for (std::size_t t = 0;; ++t) {
    const double d = tv_distance(nu, target);
    if (d <= eps) return t;
    if (t >= cap)
      throw GuardExceeded("mixing-time cap of " + std::to_string(cap) + " steps exceeded");
    DistributionVector next = fdlab::apply(nu, k);
    if (simd::max_abs_diff(next.p, nu.p) == 0.0)
      throw GuardExceeded("mixing-time cap exceeded: the chain is stationary at TV " +
                          format_double(d) + " > eps");
    nu = std::move(next);
  }
}

std::size_t exact_mixing_time(const KernelSequence& seq, const DistributionVector& nu0,
                              const DistributionVector& target, double eps) {
  DistributionVector nu = nu0;
  for (std::size_t t = 0;; ++t) {
    if (tv_distance(nu, target) <= eps) return t;
    if (t >= seq.size())
      throw GuardExceeded("sequence ended before reaching TV <= eps");
    nu = fdlab::apply(nu, seq[t]);
  }
}

std::size_t mixing_time_all_starts(const Kernel& k, const DistributionVector& target, double eps,
                                   std::size_t cap) {
  require_same_support(k.support(), target.support, "mixing_time_all_starts");
  const std::size_t n = k.size();
  std::vector<double> m(n * n, 0.0), next(n * n);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1.0;
  for (std::size_t t = 0;; ++t) {
    const double d = max_row_tv(m, target.p, n);
    if (d <= eps) return t;
    if (t >= cap)
      throw GuardExceeded("mixing-time cap of " + std::to_string(cap) + " steps exceeded");
    simd::mat_mul(m.data(), k.data().data(), next.data(), n, n, n);
    if (simd::max_abs_diff(next, m) == 0.0)
      throw GuardExceeded("mixing-time cap exceeded: the chain is stationary at TV " +
                          format_double(d) + " > eps");
    m.swap(next);
  }
}

TiltedMixing tilted_mixing_time(const ModelPtr& mu, double theta, double eps, std::size_t cap) {
  check_theta_open_unit(theta, "tilted_mixing_time");
  check_binary(*mu, "tilted_mixing_time");
  const std::size_t n = mu->size();
  if (n > 20) throw GuardExceeded("tilted mixing limited to 20 variables");
  const ModelPtr tilted = tilt(mu, theta);
  TiltedMixing out;
  bool any = false;
  for (std::uint64_t lam = 0; lam < (std::uint64_t{1} << n); ++lam) {
    Pinning pinning(n, -1);
    std::vector<std::size_t> set;
    for (std::size_t v = 0; v < n; ++v)
      if ((lam >> v) & 1) {
        pinning[v] = 1;
        set.push_back(v);
      }
    if (!mu->feasible(pinning)) continue;
    const ModelPtr m = pin(tilted, pinning);
    const SupportPtr sup = enumerate_support(*m);
    const Kernel k = glauber_kernel(*m, sup);
    const std::size_t t = mixing_time_all_starts(k, *k.stationary, eps, cap);
    ++out.pinnings_checked;
    if (!any || t > out.value) {
      out.value = t;
      out.worst_pinning = set;
      any = true;
    }
  }
  return out;
}

FdMixing fd_mixing_time(const Model& mu, double theta, double eps, std::size_t cap) {
  const Kernel k = fd_kernel(mu, theta);
  FdMixing out;
  out.all_starts = mixing_time_all_starts(k, *k.stationary, eps, cap);
  if (const auto i = k.support()->index_of(State::ones(mu.size())))
    out.from_ones = exact_mixing_time(k, *i, *k.stationary, eps, cap);
  return out;
}

// ---------------------------------------------------------------------------
// Pushforwards

DistributionVector lift_pushforward(const DistributionVector& base, double theta,
                                    SupportPtr lifted) {
  DistributionVector out{lifted, std::vector<double>(lifted->size(), 0.0)};
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base.p[i] == 0.0) continue;
    const State& s = base.support->state(i);
    std::vector<std::size_t> ones;
    for (std::size_t v = 0; v < s.size(); ++v)
      if (s[v] == kOne) ones.push_back(v);
    std::vector<Spin> vals(s.values().begin(), s.values().end());
    const std::uint64_t count = std::uint64_t{1} << ones.size();
    for (std::uint64_t m = 0; m < count; ++m) {
      for (std::size_t k = 0; k < ones.size(); ++k) vals[ones[k]] = (m >> k) & 1 ? kStar : kOne;
      const int stars = std::popcount(m);
      const double w = std::pow(theta, static_cast<double>(ones.size() - stars)) *
                       std::pow(1.0 - theta, static_cast<double>(stars));
      out.p[lifted->require_index(State(Alphabet::ternary, vals))] += base.p[i] * w;
    }
  }
  return out;
}

DistributionVector contract_pushforward(const DistributionVector& lifted, SupportPtr base) {
  DistributionVector out{base, std::vector<double>(base->size(), 0.0)};
  for (std::size_t j = 0; j < lifted.size(); ++j)
    if (lifted.p[j] != 0.0)
      out.p[base->require_index(contract(lifted.support->state(j)))] += lifted.p[j];
  return out;
}

DistributionVector rc_to_ising_pushforward(const IsingModel& ising, SupportPtr ising_support) {
  const auto rc = rc_for_ising(ising);
  const DistributionVector mu = stationary_distribution(*rc);
  const std::size_t n = ising.size();
  if (!ising_support) ising_support = enumerate_support(ising);
  DistributionVector out{ising_support, std::vector<double>(ising_support->size(), 0.0)};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto label = ising.graph().components(mu.support->state(i));
    std::size_t nc = 0;
    for (std::size_t l : label) nc = std::max(nc, l + 1);
    if (nc >= 32) throw GuardExceeded("too many components to enumerate");
    std::vector<double> prod(nc, 1.0);
    for (std::size_t v = 0; v < n; ++v) prod[label[v]] *= ising.lambda()[v];
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << nc); ++m) {
      double pr = mu.p[i];
      for (std::size_t c = 0; c < nc; ++c)
        pr *= (m >> c) & 1 ? prod[c] / (1.0 + prod[c]) : 1.0 / (1.0 + prod[c]);
      if (pr == 0.0) continue;
      std::vector<Spin> vals(n);
      for (std::size_t v = 0; v < n; ++v) vals[v] = (m >> label[v]) & 1 ? kOne : kZero;
      out.p[ising_support->require_index(State(Alphabet::binary, vals))] += pr;
    }
  }
  return out;
}

DistributionVector sw_to_rc_pushforward(const RandomClusterModel& rc, SupportPtr rc_support) {
  const auto sw = sw_for_rc(rc);
  const auto q = sw_extra_edge_probs(rc);
  const DistributionVector mu = stationary_distribution(*sw);
  const std::size_t m = rc.size();
  if (m >= 32) throw GuardExceeded("too many edges to enumerate");
  if (!rc_support) rc_support = enumerate_support(rc);
  DistributionVector out{rc_support, std::vector<double>(rc_support->size(), 0.0)};
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const State& x = mu.support->state(i);
    for (std::uint64_t z = 0; z < (std::uint64_t{1} << m); ++z) {
      double pr = mu.p[i];
      std::vector<Spin> vals(m);
      for (std::size_t e = 0; e < m; ++e) {
        const bool ze = (z >> e) & 1;
        pr *= ze ? q[e] : 1.0 - q[e];
        vals[e] = (x[e] == kOne || ze) ? kOne : kZero;
      }
      if (pr == 0.0) continue;
      out.p[rc_support->require_index(State(Alphabet::binary, vals))] += pr;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

void write_csv(std::ostream& out, const Kernel& k) {
  const auto& sup = *k.support();
  out << "state";
  for (const State& s : sup.states()) out << ',' << s.to_string();
  out << '\n';
  for (std::size_t i = 0; i < k.size(); ++i) {
    out << sup.state(i).to_string();
    for (std::size_t j = 0; j < k.size(); ++j) out << ',' << format_double(k.at(i, j));
    out << '\n';
  }
}

void write_csv(std::ostream& out, const DistributionVector& d) {
  for (std::size_t i = 0; i < d.size(); ++i) out << (i ? "," : "") << d.support->state(i).to_string();
  out << '\n';
  for (std::size_t i = 0; i < d.size(); ++i) out << (i ? "," : "") << format_double(d.p[i]);
  out << '\n';
}

}  // namespace fdlab
