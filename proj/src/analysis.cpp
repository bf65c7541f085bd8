#include "fdlab/analysis.hpp"

#include <algorithm>
#include <bit>
#include <limits>

#include "json.hpp"

#include "fdlab/flow.hpp"
#include "fdlab/rng.hpp"

namespace fdlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string pinning_string(const Pinning& p) {
  std::string s;
  for (auto x : p) s += x < 0 ? '-' : static_cast<char>('0' + x);
  return s;
}

double binary_kl(double a, double b) {
  auto term = [](double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return kInf;
    return x * std::log(x / y);
  };
  return term(a, b) + term(1.0 - a, 1.0 - b);
}

}  // namespace

// ---------------------------------------------------------------------------
// Pinning table

PinningTable::PinningTable(const Model& model, std::size_t max_vars) : n_(model.size()) {
  if (model.alphabet() != Alphabet::binary)
    throw InvalidArgument("pinning table needs a binary model");
  if (n_ > max_vars)
    throw GuardExceeded("pinning table limited to " + std::to_string(max_vars) + " variables");
  pow3_.resize(n_ + 1);
  pow3_[0] = 1;
  for (std::size_t i = 0; i < n_; ++i) pow3_[i + 1] = pow3_[i] * 3;

  const std::size_t full = std::size_t{1} << n_;
  std::vector<double> logs(full, -kInf);
  double top = -kInf;
  for (std::size_t m = 0; m < full; ++m) {
    const LogWeight w = model.log_weight(State::decode(m, n_, Alphabet::binary));
    if (!w.possible) continue;
    logs[m] = w.log;
    top = std::max(top, w.log);
  }
  if (top == -kInf) throw InvalidArgument("model has empty support");

  z_.assign(pow3_[n_], 0.0);
  for (std::uint64_t code = 0; code < z_.size(); ++code) {
    std::uint64_t c = code, mask = 0;
    std::size_t free_at = n_;
    for (std::size_t v = 0; v < n_; ++v, c /= 3) {
      const auto d = c % 3;
      if (d == 2) {
        free_at = v;
        break;
      }
      if (d == 1) mask |= std::uint64_t{1} << v;
    }
    if (free_at == n_) {
      z_[code] = logs[mask] == -kInf ? 0.0 : std::exp(logs[mask] - top);
    } else {
      z_[code] = z_[code - 2 * pow3_[free_at]] + z_[code - pow3_[free_at]];
    }
  }
}

int PinningTable::digit(std::uint64_t code, std::size_t v) const {
  return static_cast<int>((code / pow3_[v]) % 3);
}

std::uint64_t PinningTable::with(std::uint64_t code, std::size_t v, int value) const {
  const int d = digit(code, v);
  const int target = value < 0 ? 2 : value;
  return code + static_cast<std::uint64_t>(target) * pow3_[v] - static_cast<std::uint64_t>(d) * pow3_[v];
}

double PinningTable::marginal_one(std::uint64_t code, std::size_t v) const {
  const double zc = z_[code];
  if (zc <= 0.0) throw InvalidArgument("marginal under an infeasible pinning");
  return z_[with(code, v, 1)] / zc;
}

std::uint64_t PinningTable::encode(const Pinning& p) const {
  if (p.size() != n_) throw InvalidArgument("pinning has the wrong length");
  std::uint64_t code = 0;
  for (std::size_t v = 0; v < n_; ++v) {
    if (p[v] > 1) throw InvalidArgument("pinning value must be 0, 1 or free");
    code += static_cast<std::uint64_t>(p[v] < 0 ? 2 : p[v]) * pow3_[v];
  }
  return code;
}

Pinning PinningTable::decode(std::uint64_t code) const {
  Pinning p(n_);
  for (std::size_t v = 0; v < n_; ++v) {
    const int d = digit(code, v);
    p[v] = static_cast<std::int8_t>(d == 2 ? -1 : d);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Influence

namespace {

InfluenceMatrix influence_at(const PinningTable& t, std::uint64_t code, bool diag) {
  const std::size_t n = t.nvars();
  InfluenceMatrix m;
  m.n = n;
  m.pinning = t.decode(code);
  m.psi.assign(n * n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    if (t.digit(code, u) != 2) continue;
    const std::uint64_t c0 = t.with(code, u, 0), c1 = t.with(code, u, 1);
    if (!t.feasible(c0) || !t.feasible(c1)) continue;
    for (std::size_t v = 0; v < n; ++v) {
      if (t.digit(code, v) != 2) continue;
      if (v == u) {
        if (diag) m.psi[u * n + v] = 1.0;
        continue;
      }
      if (t.marginal_one(code, v) <= 0.0) continue;
      m.psi[u * n + v] = t.marginal_one(c1, v) - t.marginal_one(c0, v);
    }
  }
  return m;
}

}  // namespace

InfluenceMatrix influence_matrix(const PinningTable& table, const Pinning& pinning,
                                 bool include_diagonal) {
  const std::uint64_t code = table.encode(pinning);
  if (!table.feasible(code)) throw InvalidArgument("infeasible pinning " + pinning_string(pinning));
  return influence_at(table, code, include_diagonal);
}

InfluenceMatrix influence_matrix(const Model& model, const Pinning& pinning,
                                 bool include_diagonal) {
  return influence_matrix(PinningTable(model), pinning, include_diagonal);
}

double sinf_norm(const InfluenceMatrix& psi) {
  double best = 0.0;
  for (std::size_t u = 0; u < psi.n; ++u) {
    double s = 0.0;
    for (std::size_t v = 0; v < psi.n; ++v) s += std::abs(psi.at(u, v));
    best = std::max(best, s);
  }
  return best;
}

SpectralResult spectral_independence(const PinningTable& table, bool include_diagonal) {
  const std::size_t n = table.nvars();
  SpectralResult res;
  res.pinning = table.decode(table.all_free());
  for (std::uint64_t code = 0; code < table.size(); ++code) {
    std::size_t free = 0;
    for (std::size_t v = 0; v < n; ++v) free += table.digit(code, v) == 2;
    if (free < 2 || !table.feasible(code)) continue;  // |Lambda| <= n - 2
    ++res.pinnings_checked;
    const double eta = sinf_norm(influence_at(table, code, include_diagonal));
    if (eta > res.eta) {
      res.eta = eta;
      res.pinning = table.decode(code);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Marginal stability

MarginalStability marginal_stability(const PinningTable& table) {
  const std::size_t n = table.nvars();
  if (n > 10) throw GuardExceeded("marginal stability limited to 10 variables");
  const std::size_t size = table.size();
  MarginalStability res;
  res.k = 1.0;

  // best[v][code]: smallest R^rho_v over pinnings rho obtained from `code` by
  // freeing pinned variables, with the code that attains it.
  std::vector<std::vector<double>> best(n, std::vector<double>(size, kInf));
  std::vector<std::vector<std::uint64_t>> arg(n, std::vector<std::uint64_t>(size, 0));
  for (std::uint64_t code = size; code-- > 0;) {
    if (!table.feasible(code)) continue;
    for (std::size_t v = 0; v < n; ++v) {
      if (table.digit(code, v) != 2) continue;
      const double z0 = table.z(table.with(code, v, 0));
      const double z1 = table.z(table.with(code, v, 1));
      double b = z0 > 0.0 ? z1 / z0 : kInf;
      std::uint64_t a = code;
      for (std::size_t u = 0; u < n; ++u) {
        if (table.digit(code, u) == 2) continue;
        const std::uint64_t up = table.with(code, u, -1);
        if (best[v][up] < b) {
          b = best[v][up];
          a = arg[v][up];
        }
      }
      best[v][code] = b;
      arg[v][code] = a;
    }
  }

  for (std::uint64_t code = 0; code < size; ++code) {
    if (!table.feasible(code)) continue;
    for (std::size_t v = 0; v < n; ++v) {
      if (table.digit(code, v) != 2) continue;
      const double z0 = table.z(table.with(code, v, 0));
      const double z1 = table.z(table.with(code, v, 1));
      if (z0 <= 0.0) {
        res.k.reset();
        res.tau = table.decode(code);
        res.tau_s = res.tau;
        res.vertex = v;
        return res;
      }
      double k = table.z(code) / z0;
      std::uint64_t witness = code;
      const double r = z1 / z0;
      if (r > 0.0) {
        const double ratio = r / best[v][code];
        if (ratio > k) {
          k = ratio;
          witness = arg[v][code];
        }
      }
      if (k > *res.k) {
        res.k = k;
        res.tau = table.decode(code);
        res.tau_s = table.decode(witness);
        res.vertex = v;
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Coupling independence

CouplingResult coupling_independence(const PinningTable& table, std::size_t max_states) {
  const std::size_t n = table.nvars();
  CouplingResult res;
  res.pinning = table.decode(table.all_free());
  for (std::uint64_t code = 0; code < table.size(); ++code) {
    if (!table.feasible(code)) continue;
    std::vector<std::size_t> free;
    for (std::size_t v = 0; v < n; ++v)
      if (table.digit(code, v) == 2) free.push_back(v);
    if (free.size() < 2) continue;  // |Lambda| <= n - 2
    for (std::size_t i : free) {
      const std::uint64_t c0 = table.with(code, i, 0), c1 = table.with(code, i, 1);
      if (!table.feasible(c0) || !table.feasible(c1)) continue;
      std::vector<std::size_t> rest;
      for (std::size_t v : free)
        if (v != i) rest.push_back(v);
      auto law = [&](std::uint64_t base, std::vector<std::uint64_t>& masks, std::vector<double>& p) {
        const std::uint64_t count = std::uint64_t{1} << rest.size();
        for (std::uint64_t m = 0; m < count; ++m) {
          std::uint64_t c = base;
          for (std::size_t k = 0; k < rest.size(); ++k) c = table.with(c, rest[k], (m >> k) & 1);
          const double w = table.z(c);
          if (w <= 0.0) continue;
          masks.push_back(m);
          p.push_back(w / table.z(base));
        }
        if (masks.size() > max_states)
          throw GuardExceeded("coupling independence: conditional support exceeds " +
                              std::to_string(max_states) + " states");
      };
      std::vector<std::uint64_t> mx, my;
      std::vector<double> px, py;
      law(c0, mx, px);
      law(c1, my, py);
      std::vector<std::vector<std::int64_t>> cost(mx.size(), std::vector<std::int64_t>(my.size()));
      for (std::size_t a = 0; a < mx.size(); ++a)
        for (std::size_t b = 0; b < my.size(); ++b) cost[a][b] = 1 + std::popcount(mx[a] ^ my[b]);
      const double c = flow::transport_cost(px, py, cost);
      ++res.triples_checked;
      if (c > res.c) {
        res.c = c;
        res.pinning = table.decode(code);
        res.site = i;
      }
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Entropic-independence witness

std::optional<double> ei_ratio(const DistributionVector& nu, const DistributionVector& mu) {
  const double kl = kl_divergence(nu, mu);
  if (!(kl > 1e-12) || is_infinite_kl(kl)) return std::nullopt;
  const auto& sup = *mu.support;
  double num = 0.0;
  for (std::size_t v = 0; v < sup.nvars(); ++v) {
    double a = 0.0, b = 0.0;
    for (std::size_t j = 0; j < sup.size(); ++j)
      if (sup.state(j)[v] == kOne) {
        a += nu.p[j];
        b += mu.p[j];
      }
    num += binary_kl(a, b);
  }
  return num / kl;
}

EiWitness ei_witness(const DistributionVector& mu, std::size_t iterations, std::uint64_t seed) {
  const auto& sup = *mu.support;
  if (sup.alphabet() != Alphabet::binary) throw InvalidArgument("ei_witness needs a binary law");
  const std::size_t ns = sup.size();
  EiWitness best;
  auto consider = [&](std::vector<double> w, const char* kind) {
    double z = 0.0;
    for (double x : w) z += x;
    if (!(z > 0.0)) return;
    for (double& x : w) x /= z;
    DistributionVector nu{mu.support, std::move(w)};
    const auto r = ei_ratio(nu, mu);
    if (r && *r > best.ratio) {
      best.ratio = *r;
      best.nu = std::move(nu.p);
      best.kind = kind;
    }
  };

  for (std::size_t j = 0; j < ns; ++j) {
    std::vector<double> w(ns, 0.0);
    w[j] = 1.0;
    consider(std::move(w), "point-mass");
  }
  for (double t : {1e-3, 1e-2, 0.1, 0.5, 2.0, 10.0, 100.0, 1e3}) {
    std::vector<double> w(ns);
    for (std::size_t j = 0; j < ns; ++j)
      w[j] = mu.p[j] * std::pow(t, static_cast<double>(sup.state(j).count(kOne)));
    consider(std::move(w), "tilt");
  }
  try {
    for (const UpSet& u : enumerate_up_sets(sup.poset())) {
      std::vector<double> w(ns, 0.0);
      for (std::size_t j = 0; j < ns; ++j)
        if (u.members[j]) w[j] = mu.p[j];
      consider(std::move(w), "up-set");
    }
  } catch (const GuardExceeded&) {
    // Too many up-sets; the other candidate families still apply.
  }

  // Coordinate ascent on nu = softmax(log mu + h) from random starts.
  std::vector<double> logmu(ns);
  for (std::size_t j = 0; j < ns; ++j) logmu[j] = std::log(mu.p[j]);
  auto eval = [&](const std::vector<double>& h) {
    std::vector<double> w(ns);
    double top = -kInf;
    for (std::size_t j = 0; j < ns; ++j) top = std::max(top, w[j] = logmu[j] + h[j]);
    double z = 0.0;
    for (double& x : w) z += x = std::exp(x - top);
    for (double& x : w) x /= z;
    DistributionVector nu{mu.support, std::move(w)};
    const auto r = ei_ratio(nu, mu);
    return std::make_pair(r.value_or(0.0), std::move(nu.p));
  };
  constexpr std::size_t kRestarts = 8;
  for (std::size_t r = 0; r < kRestarts; ++r) {
    RngStream rng = make_stream(seed, r, "ei-witness");
    std::vector<double> h(ns);
    for (double& x : h) x = 4.0 * uniform01(rng) - 2.0;
    auto [val, nu] = eval(h);
    double step = 1.0;
    std::size_t stale = 0;
    for (std::size_t it = 0; it < iterations; ++it) {
      const std::size_t j = uniform_index(rng, ns);
      bool improved = false;
      for (double dir : {1.0, -1.0}) {
        h[j] += dir * step;
        auto [v2, nu2] = eval(h);
        if (v2 > val) {
          val = v2;
          nu = std::move(nu2);
          improved = true;
          break;
        }
        h[j] -= dir * step;
      }
      if (improved) {
        stale = 0;
      } else if (++stale >= ns) {
        step *= 0.5;
        stale = 0;
      }
    }
    if (val > best.ratio) {
      best.ratio = val;
      best.nu = std::move(nu);
      best.kind = "ascent";
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Schedules

AlphaSchedule::AlphaSchedule(double theta, std::vector<double> start, std::vector<double> value)
    : theta_(theta), start_(std::move(start)), value_(std::move(value)) {
  if (!(theta_ > 0.0 && theta_ < 1.0)) throw InvalidArgument("schedule: theta must lie in (0,1)");
  if (start_.empty() || start_.size() != value_.size())
    throw InvalidArgument("schedule: need matching nonempty breakpoints and values");
  if (start_[0] != 0.0) throw InvalidArgument("schedule: first piece must start at 0");
  const double h = horizon();
  for (std::size_t k = 0; k < start_.size(); ++k) {
    if (!(value_[k] > 0.0) || !std::isfinite(value_[k]))
      throw InvalidArgument("schedule: values must be positive and finite");
    if (k > 0 && !(start_[k] > start_[k - 1]))
      throw InvalidArgument("schedule: breakpoints must increase strictly");
    if (!(start_[k] < h)) throw InvalidArgument("schedule: breakpoint outside [0, -log theta)");
  }
}

AlphaSchedule AlphaSchedule::constant(double theta, double a) { return {theta, {0.0}, {a}}; }

double AlphaSchedule::at(double t) const {
  if (!(t >= 0.0 && t <= horizon())) throw InvalidArgument("schedule evaluated outside its domain");
  const auto it = std::upper_bound(start_.begin(), start_.end(), t);
  return value_[static_cast<std::size_t>(it - start_.begin()) - 1];
}

double AlphaSchedule::integral() const {
  const double h = horizon();
  double s = 0.0;
  for (std::size_t k = 0; k < start_.size(); ++k) {
    const double end = k + 1 < start_.size() ? start_[k + 1] : h;
    s += value_[k] * (end - start_[k]);
  }
  return s;
}

AlphaSchedule AlphaSchedule::scaled(double factor) const {
  std::vector<double> v = value_;
  for (double& x : v) x *= factor;
  return {theta_, start_, std::move(v)};
}

double log_kappa(const AlphaSchedule& s) { return -4.0 * s.integral(); }
double kappa(const AlphaSchedule& s) { return std::exp(log_kappa(s)); }

namespace {

double simpson(double fa, double fm, double fb, double a, double b) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const AlphaSchedule& s, double a, double b, double fa, double fm, double fb,
                double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = s.at(lm), frm = s.at(rm);
  const double left = simpson(fa, flm, fm, a, m);
  const double right = simpson(fm, frm, fb, m, b);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive(s, a, m, fa, flm, fm, left, tol, depth - 1) +
         adaptive(s, m, b, fm, frm, fb, right, tol, depth - 1);
}

}  // namespace

double quadrature_integral(const AlphaSchedule& s, double tol) {
  constexpr int kPanels = 64;
  const double h = s.horizon();
  double rough = 0.0;
  for (int k = 0; k < kPanels; ++k) rough += s.at(h * (k + 0.5) / kPanels) * h / kPanels;
  const double abs_tol = tol * rough;
  double total = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double a = h * k / kPanels;
    const double b = k + 1 == kPanels ? h : h * (k + 1) / kPanels;
    const double fa = s.at(a), fm = s.at(0.5 * (a + b)), fb = s.at(b);
    total += adaptive(s, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), abs_tol, 100);
  }
  return total;
}

TBound t_bound(const AlphaSchedule& s, double mu_min, double eps) {
  if (!(mu_min > 0.0 && mu_min < 1.0)) throw InvalidArgument("t_bound: mu_min must lie in (0,1)");
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("t_bound: eps must lie in (0,1)");
  const double a = std::log(std::log(1.0 / mu_min)) + std::log(1.0 / (2.0 * eps * eps));
  const double inv_log_kappa = -log_kappa(s);
  TBound out;
  out.value = std::exp(inv_log_kappa) * a + 1.0;
  if (a > 0.0) {
    const double x = inv_log_kappa + std::log(a);
    out.log_value = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  } else {
    out.log_value = out.value > 0.0 ? std::log(out.value) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace {

AlphaSchedule two_piece(double theta, double breakpoint, double first, double second) {
  if (breakpoint <= 0.0) return AlphaSchedule::constant(theta, second);
  if (breakpoint >= -std::log(theta)) return AlphaSchedule::constant(theta, first);
  return {theta, {0.0, breakpoint}, {first, second}};
}

}  // namespace

double rc_theta(double p_min, double lambda_max, std::size_t n) {
  if (!(p_min > 0.0 && p_min <= 1.0)) throw InvalidArgument("rc schedule: p_min must lie in (0,1]");
  if (!(lambda_max >= 0.0 && lambda_max < 1.0))
    throw InvalidArgument("rc schedule: lambda_max must lie in [0,1)");
  if (n < 2) throw InvalidArgument("rc schedule: needs n >= 2");
  return p_min * std::min(1e-7, (1.0 - lambda_max) / 27.0) / std::log(static_cast<double>(n));
}

AlphaSchedule rc_schedule(double p_min, double lambda_max, std::size_t n) {
  const double theta = rc_theta(p_min, lambda_max, n);
  const double gap = 1.0 - lambda_max;
  const double theta0 = 0.5 * p_min * gap * gap;
  return two_piece(theta, -std::log(theta0), 3.0 / (gap * gap), 5e4);
}

double bhc_theta(double lambda, int delta_max, std::size_t n) {
  if (!(lambda > 0.0)) throw InvalidArgument("bhc schedule: lambda must be positive");
  if (delta_max < 1) throw InvalidArgument("bhc schedule: Delta must be positive");
  if (n < 2) throw InvalidArgument("bhc schedule: needs n >= 2");
  const double d = static_cast<double>(delta_max);
  return lambda / (std::exp(9.0) * std::pow(1.0 + lambda, d) * d * std::log(static_cast<double>(n)));
}

AlphaSchedule bhc_schedule(double lambda, int delta_max, double delta, std::size_t n) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("bhc schedule: delta must lie in (0,1)");
  const double theta = bhc_theta(lambda, delta_max, n);
  const double c = std::pow(1.0 + lambda, 5.0 * delta_max);
  // log(1/theta0) = e^9 - log(lambda), kept in log form.
  return two_piece(theta, std::exp(9.0) - std::log(lambda), 1e4 * c / delta, 2e4 * c);
}

// ---------------------------------------------------------------------------
// Uniqueness

double uniqueness_f(double lambda, double d, double beta, double w, double x) {
  return lambda * std::pow(1.0 + beta * std::pow(1.0 + x, -w), -d);
}

double uniqueness_f_prime(double lambda, double d, double beta, double w, double x) {
  const double u = std::pow(1.0 + x, -w);
  return lambda * d * w * beta * u / (1.0 + x) * std::pow(1.0 + beta * u, -d - 1.0);
}

UniquenessResult uniqueness_check(double lambda, double d, double beta, double w, double delta) {
  if (!(lambda > 0.0 && d > 0.0 && beta > 0.0 && w > 0.0))
    throw InvalidArgument("uniqueness: lambda, d, beta, w must be positive");
  if (!(delta >= 0.0 && delta < 1.0)) throw InvalidArgument("uniqueness: delta must lie in [0,1)");
  auto g = [&](double x) { return uniqueness_f(lambda, d, beta, w, x) - x; };
  constexpr int kGrid = 4096;
  UniquenessResult res;
  double a = 0.0, ga = g(0.0);
  const double tol = 1e-12 * std::max(1.0, lambda);
  for (int k = 1; k <= kGrid; ++k) {
    const double b = lambda * k / kGrid;
    const double gb = g(b);
    if (ga == 0.0) {
      res.fixed_points.push_back(a);
    } else if ((ga > 0.0) != (gb > 0.0) && gb != 0.0) {
      double lo = a, hi = b;
      for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        ((g(mid) > 0.0) == (ga > 0.0) ? lo : hi) = mid;
      }
      res.fixed_points.push_back(0.5 * (lo + hi));
    }
    a = b;
    ga = gb;
  }
  if (ga == 0.0) res.fixed_points.push_back(a);
  if (res.fixed_points.empty()) throw std::runtime_error("uniqueness: no fixed point found");
  for (double x : res.fixed_points)
    res.max_derivative = std::max(res.max_derivative, uniqueness_f_prime(lambda, d, beta, w, x));
  res.holds = res.max_derivative <= 1.0 - delta;
  return res;
}

std::vector<UniquenessGridRow> uniqueness_grid(double lambda, double d, double beta, double delta) {
  std::vector<UniquenessGridRow> rows;
  for (int k = -6; k <= 12; ++k) {
    const double w = std::ldexp(1.0, k);
    rows.push_back({w, uniqueness_check(lambda, d, beta, w, delta)});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report

std::string IndependenceReport::to_json(int indent) const {
  using nlohmann::json;
  json j;
  j["include_diagonal"] = include_diagonal;
  j["spectral"] = {{"eta", spectral.eta},
                   {"pinning", pinning_string(spectral.pinning)},
                   {"pinnings_checked", spectral.pinnings_checked}};
  json ms;
  if (stability.k) ms["K"] = *stability.k;
  else ms["K"] = "inf";
  ms["tau"] = pinning_string(stability.tau);
  ms["tau_S"] = pinning_string(stability.tau_s);
  ms["vertex"] = stability.vertex;
  j["marginal_stability"] = ms;
  j["coupling"] = {{"C", coupling.c},
                   {"pinning", pinning_string(coupling.pinning)},
                   {"site", coupling.site},
                   {"triples_checked", coupling.triples_checked}};
  j["entropic_witness"] = {{"ratio", ei.ratio}, {"kind", ei.kind}, {"nu", ei.nu}};
  return j.dump(indent);
}

IndependenceReport independence_report(const Model& model, const ReportOptions& opt) {
  const PinningTable table(model);
  IndependenceReport r;
  r.include_diagonal = opt.include_diagonal;
  r.spectral = spectral_independence(table, opt.include_diagonal);
  if (opt.stability && model.size() <= 10) r.stability = marginal_stability(table);
  r.coupling = coupling_independence(table);
  r.ei = ei_witness(stationary_distribution(model), opt.ei_iterations, opt.seed);
  return r;
}

}  // namespace fdlab
