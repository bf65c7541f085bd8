#include "fdlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace fdlab {

namespace {

class Recorder {
 public:
  Recorder(std::vector<std::uint64_t> times, std::uint64_t steps) : times_(std::move(times)) {
    std::sort(times_.begin(), times_.end());
    times_.erase(std::unique(times_.begin(), times_.end()), times_.end());
    while (!times_.empty() && times_.back() > steps) times_.pop_back();
  }
  void offer(std::uint64_t t, const State& x, ChainRun& run) {
    if (next_ < times_.size() && times_[next_] == t) {
      run.recorded.emplace_back(t, x);
      ++next_;
    }
  }

 private:
  std::vector<std::uint64_t> times_;
  std::size_t next_ = 0;
};

void require_feasible_start(const Model& m, const State& x0) {
  if (x0.size() != m.size() || x0.alphabet() != m.alphabet())
    throw InvalidArgument("start state does not match the model");
  if (!m.in_support(x0))
    throw InvalidArgument("infeasible start: " + x0.to_string() + " has zero weight");
}

inline void debug_check_support([[maybe_unused]] const Model& m, [[maybe_unused]] const State& x) {
#ifndef NDEBUG
  if (!m.in_support(x)) throw std::logic_error("chain left the support at " + x.to_string());
#endif
}

ChainRun run_heat_bath(ModelPtr model, const State& x0, std::uint64_t steps, std::uint64_t seed,
                       std::vector<std::uint64_t> record_at, bool keep_log, const Schedule* schedule,
                       std::string_view purpose) {
  require_feasible_start(*model, x0);
  ChainRun run;
  run.model = model;
  run.initial = x0;
  run.seed = seed;
  run.steps = steps;
  if (keep_log) run.log.reserve(steps);
  Recorder rec(std::move(record_at), steps);
  RngStream rng = make_stream(seed, 0, purpose);
  const std::size_t n = model->size();
  State x = x0;
  rec.offer(0, x, run);
  for (std::uint64_t t = 1; t <= steps; ++t) {
    const std::size_t v = uniform_index(rng, n);
    if (schedule == nullptr || schedule->allowed(t, v)) {
      x.set(v, sample_site(model->conditional(x, v), rng));
      debug_check_support(*model, x);
    }
    if (keep_log) run.log.push_back({t, static_cast<std::uint32_t>(v), x[v]});
    rec.offer(t, x, run);
  }
  run.final_state = std::move(x);
  return run;
}

}  // namespace

State ChainRun::replay(std::uint64_t t) const {
  State x = initial;
  for (const UpdateRecord& r : log) {
    if (r.step > t) break;
    x.set(r.var, r.value);
  }
  return x;
}

bool ChainRun::replay_matches() const {
  for (const auto& [t, s] : recorded)
    if (!(replay(t) == s)) return false;
  return replay(steps) == final_state;
}

ChainRun glauber_run(ModelPtr model, const State& x0, std::uint64_t steps, std::uint64_t seed,
                     std::vector<std::uint64_t> record_at, bool keep_log) {
  return run_heat_bath(std::move(model), x0, steps, seed, std::move(record_at), keep_log, nullptr,
                       "glauber");
}

State field_dynamics_step(const Model& model, double theta, const State& x, RngStream& rng,
                          FieldInner inner) {
  check_theta_open_unit(theta, "field_dynamics_step");
  if (model.alphabet() != Alphabet::binary)
    throw InvalidArgument("field dynamics runs on binary models");
  require_feasible_start(model, x);
  const std::size_t n = x.size();
  std::vector<bool> in_s(n);
  for (std::size_t v = 0; v < n; ++v) in_s[v] = x[v] == kZero || uniform01(rng) < theta;

  if (const auto* g = std::get_if<GlauberInner>(&inner)) {
    State y = x;
    for (std::uint64_t k = 0; k < g->steps; ++k) {
      const std::size_t v = uniform_index(rng, n);
      if (!in_s[v]) continue;
      const double p1 = tilted_conditional_one(model, y, v, theta);
      y.set(v, uniform01(rng) < p1 ? kOne : kZero);
    }
    return y;
  }

  Pinning pin(n, -1);
  std::size_t free = 0;
  for (std::size_t v = 0; v < n; ++v) {
    if (in_s[v]) ++free;
    else pin[v] = 1;
  }
  if (free >= 21)
    throw GuardExceeded("exact field-dynamics resample refused: " + std::to_string(free) +
                        " free variables exceeds the 2^20 enumeration guard");
  std::vector<State> states;
  std::vector<double> logs;
  const double lt = std::log(theta);
  // Enumerate completions of the free set in code order.
  std::vector<std::size_t> fv;
  for (std::size_t v = 0; v < n; ++v)
    if (in_s[v]) fv.push_back(v);
  State y = State::ones(n);
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << free); ++code) {
    for (std::size_t k = 0; k < free; ++k) y.set(fv[k], (code >> k) & 1 ? kOne : kZero);
    const LogWeight w = model.log_weight(y);
    if (!w.possible) continue;
    states.push_back(y);
    logs.push_back(w.log + lt * static_cast<double>(y.norm1()));
  }
  const double m = *std::max_element(logs.begin(), logs.end());
  double z = 0.0;
  for (double& l : logs) z += l = std::exp(l - m);
  double u = uniform01(rng) * z;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (u < logs[i]) return states[i];
    u -= logs[i];
  }
  return states.back();
}

AlgorithmRun simulate_algorithm(ModelPtr model, double theta, std::uint64_t t1, std::uint64_t t2,
                                std::uint64_t seed, std::vector<std::uint64_t> record_at) {
  check_theta_open_unit(theta, "simulate_algorithm");
  if (t1 < 1 || t2 < 1) throw InvalidArgument("simulate_algorithm needs T1, T2 >= 1");
  if (model->alphabet() != Alphabet::binary)
    throw InvalidArgument("simulate_algorithm runs on binary models");
  const std::size_t n = model->size();
  const State all_ones = State::ones(n);
  if (!model->in_support(all_ones))
    throw InvalidArgument("infeasible start: the all-ones configuration has zero weight");

  RngStream rng = make_stream(seed, 0, "algorithm");
  AlgorithmRun out;
  ChainRun& run = out.lifted;
  run.model = lift_model(model, theta);
  run.seed = seed;
  run.steps = t1 * t2;
  run.log.reserve(run.steps + t1 * n);
  run.initial = lift(all_ones, theta, rng);
  Recorder rec(std::move(record_at), run.steps);

  State x = run.initial;
  rec.offer(0, x, run);
  for (std::uint64_t t = 0; t < run.steps; ++t) {
    const std::uint64_t step = t + 1;
    if (t % t2 == 0) {
      x = lift(contract(x), theta, rng);
      for (std::size_t v = 0; v < n; ++v)
        run.log.push_back({step, static_cast<std::uint32_t>(v), x[v]});
    }
    const std::size_t v = uniform_index(rng, n);
    if (x[v] != kStar) {
      const double p1 = tilted_conditional_one(*model, contract(x), v, theta);
      x.set(v, uniform01(rng) < p1 ? kOne : kZero);
    }
    run.log.push_back({step, static_cast<std::uint32_t>(v), x[v]});
    debug_check_support(*run.model, x);
    rec.offer(step, x, run);
  }
  out.output = contract(x);
  run.final_state = std::move(x);
  return out;
}

std::vector<bool> Schedule::mask(std::uint64_t t, std::size_t n) const {
  std::vector<bool> m(n);
  for (std::size_t w = 0; w < n; ++w) m[w] = allowed(t, w);
  return m;
}

BipartiteSchedule::BipartiteSchedule(std::size_t left_size, std::uint64_t inner_steps,
                                     std::uint64_t seed)
    : left_(left_size), inner_(inner_steps), seed_(seed) {
  if (left_ == 0) throw InvalidArgument("bipartite schedule needs a nonempty left side");
  if (inner_ == 0) throw InvalidArgument("bipartite schedule needs at least one inner step");
}

std::size_t BipartiteSchedule::phase_vertex(std::uint64_t phase) const {
  const std::uint64_t h = derive_seed(seed_, phase, "censor");
  return static_cast<std::size_t>((static_cast<unsigned __int128>(h) * left_) >> 64);
}

bool BipartiteSchedule::allowed(std::uint64_t t, std::size_t w) const {
  if (w >= left_) return true;
  return w == phase_vertex((t - 1) / inner_);
}

ChainRun censored_glauber(ModelPtr model, const State& x0, const Schedule& schedule,
                          std::uint64_t steps, std::uint64_t seed,
                          std::vector<std::uint64_t> record_at, bool keep_log) {
  return run_heat_bath(std::move(model), x0, steps, seed, std::move(record_at), keep_log,
                       &schedule, "glauber");
}

void write_trajectory(std::ostream& out, const ChainRun& run) {
  for (const auto& [t, s] : run.recorded) out << t << '\t' << s.to_string() << '\n';
}

}  // namespace fdlab
