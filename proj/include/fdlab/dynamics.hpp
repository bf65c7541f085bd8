#pragma once
// Monte Carlo samplers: Glauber dynamics (binary or lifted), field dynamics,
// the lift/contract simulation algorithm and censored Glauber dynamics.
// All randomness flows through streams derived from a root seed.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "fdlab/models.hpp"
#include "fdlab/rng.hpp"

namespace fdlab {

/// One spin assignment performed during step `step` (1-based: the step that
/// produces X^(step)).
struct UpdateRecord {
  std::uint64_t step;
  std::uint32_t var;
  Spin value;
};

struct ChainRun {
  ModelPtr model;
  State initial;
  std::uint64_t seed = 0;
  std::uint64_t steps = 0;
  /// (t, X^(t)) for each requested t <= steps, in increasing t.
  std::vector<std::pair<std::uint64_t, State>> recorded;
  std::vector<UpdateRecord> log;
  State final_state;

  /// X^(t) rebuilt from `initial` and the log.
  State replay(std::uint64_t t) const;
  /// Whether replay reproduces every recorded state and the final state
  /// exactly (meaningful only for runs that kept their log).
  bool replay_matches() const;
};

/// Heat-bath Glauber dynamics: pick v uniformly, resample from the model's
/// conditional (three-valued for lifted models).
ChainRun glauber_run(ModelPtr model, const State& x0, std::uint64_t steps, std::uint64_t seed,
                     std::vector<std::uint64_t> record_at = {}, bool keep_log = true);

/// Draws a spin from a site law with one uniform.
template <class Rng>
Spin sample_site(const SiteLaw& p, Rng& rng) {
  const double u = uniform01(rng);
  if (u < p[0]) return kZero;
  if (u < p[0] + p[1] || p[2] == 0.0) return kOne;
  return kStar;
}

struct ExactInner {};
struct GlauberInner {
  std::uint64_t steps;
};
using FieldInner = std::variant<ExactInner, GlauberInner>;

/// One field-dynamics transition: free each v with probability 1 (x_v = 0)
/// or theta (x_v = 1), then resample from (theta*mu) with the rest pinned
/// to 1, exactly or by inner Glauber steps over all of V.
State field_dynamics_step(const Model& model, double theta, const State& x, RngStream& rng,
                          FieldInner inner = ExactInner{});

struct AlgorithmRun {
  /// Lifted trajectory (model = lift_model(mu, theta)).
  ChainRun lifted;
  /// contract(X^(T1 T2)).
  State output;
};

/// The lift/contract simulation algorithm started at lift(1_V) with T1 outer
/// phases of T2 inner steps each. Recorded times index inner steps.
AlgorithmRun simulate_algorithm(ModelPtr model, double theta, std::uint64_t t1, std::uint64_t t2,
                                std::uint64_t seed, std::vector<std::uint64_t> record_at = {});

/// State-independent rule deciding which variables may update at step t.
class Schedule {
 public:
  virtual ~Schedule() = default;
  /// Whether the update chosen at step t (1-based) on variable w is applied.
  virtual bool allowed(std::uint64_t t, std::size_t w) const = 0;
  /// Allowed mask for step t over n variables.
  std::vector<bool> mask(std::uint64_t t, std::size_t n) const;
};

class AlwaysSchedule final : public Schedule {
 public:
  bool allowed(std::uint64_t, std::size_t) const override { return true; }
};

class NeverSchedule final : public Schedule {
 public:
  bool allowed(std::uint64_t, std::size_t) const override { return false; }
};

/// Two-level bipartite censoring: steps are grouped into phases of
/// `inner_steps`; each phase draws a left vertex v from (seed, phase) and
/// allows updates on {v} and the right side only.
class BipartiteSchedule final : public Schedule {
 public:
  BipartiteSchedule(std::size_t left_size, std::uint64_t inner_steps, std::uint64_t seed);
  bool allowed(std::uint64_t t, std::size_t w) const override;
  std::size_t phase_vertex(std::uint64_t phase) const;

 private:
  std::size_t left_;
  std::uint64_t inner_;
  std::uint64_t seed_;
};

ChainRun censored_glauber(ModelPtr model, const State& x0, const Schedule& schedule,
                          std::uint64_t steps, std::uint64_t seed,
                          std::vector<std::uint64_t> record_at = {}, bool keep_log = true);

/// "t<TAB>state" per recorded time.
void write_trajectory(std::ostream& out, const ChainRun& run);

}  // namespace fdlab
