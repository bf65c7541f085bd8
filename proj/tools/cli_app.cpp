#include "cli_app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fdlab/analysis.hpp"
#include "fdlab/dynamics.hpp"
#include "fdlab/exact.hpp"
#include "fdlab/models.hpp"
#include "fdlab/rng.hpp"

namespace fdlab::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> kKnownKeys = {
    "model", "beta",  "lambda", "p",     "eta",   "theta",        "t1",       "t2",
    "eps",   "steps", "seed",   "start", "dynamics", "record",    "inner",    "delta",
    "ei_iterations", "diagonal", "kernel"};

const std::vector<std::string> kAllChecks = {
    "detailed-balance", "monotone-system", "stochastic-monotonicity", "many-stationary",
    "lift-identity",    "dominance",       "tv-comparison",           "single-vertex",
    "phase-counterexample", "sw-coupling",     "rc-ising",                "censoring"};

/// Raised for configuration problems detected by the front end itself.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

std::string hex64(std::uint64_t h) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    if (!text.empty() && text[0] == '-') throw std::invalid_argument("negative");
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "' must be a non-negative integer, got '" + text + "'");
  }
  if (pos != text.size()) throw ConfigError("'" + key + "' must be a non-negative integer, got '" + text + "'");
  return v;
}

std::vector<std::uint64_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_uint(key, item));
  return out;
}

struct Options {
  std::string command;
  std::string graph, params, out;
  std::vector<std::string> transforms, checks;
  std::optional<std::string> seed, eps, t1, t2, steps, record;
};

struct Context {
  Options opt;
  ParamFile pf;
  Graph graph;
  ModelPtr base;
  ModelPtr model;
  std::string hash;
  std::uint64_t seed = 1;

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const {
    const auto v = pf.get(key);
    return v ? parse_uint(key, *v) : fallback;
  }
  double get_double(const std::string& key, double fallback) const {
    return pf.get_double(key, fallback);
  }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return pf.get(key).value_or(fallback);
  }
  std::string preamble(char comment = '#') const {
    return std::string(1, comment) + " config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
  }
  json header() const {
    return {{"command", opt.command}, {"config_hash", hash}, {"seed", seed}};
  }
};

Pinning parse_pinning(const std::string& text, std::size_t n) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.size() != n)
    throw ConfigError("pinning file must hold " + std::to_string(n) + " characters over {0,1,-}");
  Pinning p(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (s[i] == '-') p[i] = -1;
    else if (s[i] == '0' || s[i] == '1') p[i] = static_cast<std::int8_t>(s[i] - '0');
    else throw ConfigError("pinning file must use only 0, 1 and -");
  }
  return p;
}

double parse_theta(const std::string& what, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(what + " needs a number, got '" + text + "'");
}

ModelPtr apply_transform(ModelPtr m, const std::string& spec, std::string& canon) {
  const auto eq = spec.find('=');
  const std::string name = spec.substr(0, eq);
  const std::string arg = eq == std::string::npos ? "" : spec.substr(eq + 1);
  canon += "transform=" + spec + "\n";
  if (name == "tilt" && !arg.empty()) return tilt(m, parse_theta("tilt", arg));
  if (name == "lift" && !arg.empty()) return lift_model(m, parse_theta("lift", arg));
  if (name == "flip" && arg.empty()) return flip(m);
  if (name == "left-marginal" && arg.empty()) return left_marginal(m);
  if (name == "pin" && !arg.empty()) {
    const std::string text = read_file(arg);
    canon += "pin-file=" + text + "\n";
    return pin(m, parse_pinning(text, m->size()));
  }
  throw ConfigError("unknown transform '" + spec +
                    "' (expected tilt=θ, flip, pin=FILE, lift=θ or left-marginal)");
}

Context make_context(const Options& opt) {
  Context ctx;
  ctx.opt = opt;
  if (opt.params.empty()) throw ConfigError("--params is required");
  if (opt.graph.empty()) throw ConfigError("--graph is required");
  ctx.pf = ParamFile::load(opt.params);
  const auto unknown = ctx.pf.unknown_keys(kKnownKeys);
  if (!unknown.empty()) {
    std::string msg = "unknown configuration key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  auto override_key = [&](const char* key, const std::optional<std::string>& v) {
    if (v) ctx.pf.set(key, *v);
  };
  override_key("seed", opt.seed);
  override_key("eps", opt.eps);
  override_key("t1", opt.t1);
  override_key("t2", opt.t2);
  override_key("steps", opt.steps);
  override_key("record", opt.record);
  ctx.seed = ctx.get_uint("seed", 1);

  const std::string graph_text = read_file(opt.graph);
  std::istringstream gs(graph_text);
  ctx.graph = read_graph(gs);
  ctx.base = build_model(ctx.graph, ctx.pf);

  std::string canon = "command=" + opt.command + "\ngraph=" + graph_text + "\n";
  for (const auto& [k, v] : ctx.pf.values()) canon += k + "=" + v + "\n";
  ctx.model = ctx.base;
  for (const auto& t : opt.transforms) ctx.model = apply_transform(ctx.model, t, canon);
  for (const auto& c : opt.checks) canon += "check=" + c + "\n";
  ctx.hash = hex64(tag_hash(canon));
  return ctx;
}

State parse_start(const Context& ctx, const Model& m) {
  const std::string s = ctx.get_string("start", "ones");
  if (s == "ones") return State::ones(m.size(), m.alphabet());
  if (s == "zeros") return State::zeros(m.size(), m.alphabet());
  if (s == "stars") {
    if (m.alphabet() != Alphabet::ternary) throw ConfigError("start=stars needs a lifted model");
    return State::stars(m.size());
  }
  return State::parse(s, m.alphabet());
}

void emit(const Context& ctx, const std::string& content, std::ostream& out) {
  if (ctx.opt.out.empty()) out << content;
  else write_atomic(ctx.opt.out, content);
}

// ---------------------------------------------------------------------------
// sample

struct Occupancy {
  std::map<std::uint64_t, std::pair<State, std::uint64_t>> counts;
  std::uint64_t total = 0;
  void add(const State& s) {
    auto [it, fresh] = counts.try_emplace(s.encode(), s, 0);
    ++it->second.second;
    ++total;
  }
  std::string csv() const {
    std::vector<const std::pair<State, std::uint64_t>*> rows;
    for (const auto& [code, entry] : counts) rows.push_back(&entry);
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) {
      const auto va = a->first.values(), vb = b->first.values();
      return std::lexicographical_compare(va.begin(), va.end(), vb.begin(), vb.end());
    });
    std::string head, vals;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      head += (i ? "," : "") + rows[i]->first.to_string();
      vals += (i ? "," : "") +
              format_double(static_cast<double>(rows[i]->second) / static_cast<double>(total));
    }
    return head + "\n" + vals + "\n";
  }
};

/// Occupancy of X^(1..T) rebuilt from an update log.
Occupancy occupancy_from_log(const ChainRun& run) {
  Occupancy occ;
  State x = run.initial;
  const auto& log = run.log;
  for (std::size_t k = 0; k < log.size(); ++k) {
    x.set(log[k].var, log[k].value);
    if (k + 1 == log.size() || log[k + 1].step != log[k].step) occ.add(x);
  }
  return occ;
}

int cmd_sample(const Context& ctx, std::ostream& out) {
  const std::string dyn = ctx.get_string("dynamics", "glauber");
  const std::uint64_t steps = ctx.get_uint("steps", 1000);
  std::vector<std::uint64_t> record = parse_list("record", ctx.get_string("record", ""));
  const std::string prefix = ctx.opt.out.empty() ? "sample" : ctx.opt.out;

  ChainRun run;
  Occupancy occ;
  if (dyn == "glauber" || dyn == "censored") {
    if (record.empty()) record.push_back(steps);
    const State x0 = parse_start(ctx, *ctx.model);
    if (dyn == "glauber") {
      run = glauber_run(ctx.model, x0, steps, ctx.seed, record);
    } else {
      if (!ctx.graph.bipartite() || ctx.model->size() != ctx.graph.num_vertices())
        throw ConfigError("censored dynamics needs a bipartite graph whose vertices are the variables");
      const BipartiteSchedule sched(ctx.graph.left_size(), ctx.get_uint("inner", 10), ctx.seed);
      run = censored_glauber(ctx.model, x0, sched, steps, ctx.seed, record);
    }
    occ = occupancy_from_log(run);
  } else if (dyn == "algorithm") {
    const double theta = ctx.get_double("theta", 0.25);
    const std::uint64_t t1 = ctx.get_uint("t1", 2), t2 = ctx.get_uint("t2", 3);
    if (record.empty()) record.push_back(t1 * t2);
    AlgorithmRun alg = simulate_algorithm(ctx.model, theta, t1, t2, ctx.seed, record);
    run = std::move(alg.lifted);
    occ = occupancy_from_log(run);
  } else if (dyn == "field") {
    if (record.empty()) record.push_back(steps);
    const double theta = ctx.get_double("theta", 0.25);
    FieldInner inner = ExactInner{};
    if (ctx.pf.has("inner")) inner = GlauberInner{ctx.get_uint("inner", 0)};
    RngStream rng = make_stream(ctx.seed, 0, "field");
    State x = parse_start(ctx, *ctx.model);
    run.model = ctx.model;
    run.initial = x;
    run.seed = ctx.seed;
    run.steps = steps;
    std::sort(record.begin(), record.end());
    std::size_t next = 0;
    auto offer = [&](std::uint64_t t) {
      while (next < record.size() && record[next] < t) ++next;
      if (next < record.size() && record[next] == t) run.recorded.emplace_back(t, x), ++next;
    };
    offer(0);
    for (std::uint64_t t = 1; t <= steps; ++t) {
      x = field_dynamics_step(*ctx.model, theta, x, rng, inner);
      occ.add(x);
      offer(t);
    }
    run.final_state = x;
  } else {
    throw ConfigError("unknown dynamics '" + dyn + "' (glauber, field, algorithm, censored)");
  }

  std::ostringstream traj;
  traj << ctx.preamble();
  write_trajectory(traj, run);
  write_atomic(prefix + ".trajectory.tsv", traj.str());
  write_atomic(prefix + ".occupancy.csv", ctx.preamble() + occ.csv());

  json j = ctx.header();
  j["dynamics"] = dyn;
  j["steps"] = occ.total;
  j["final_state"] = run.final_state.to_string();
  j["trajectory"] = prefix + ".trajectory.tsv";
  j["occupancy"] = prefix + ".occupancy.csv";
  out << j.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

enum class Expect { yes, no, unknown };

/// Whether the model is a monotone system by construction.
Expect expected_monotone(const Model& m) {
  switch (m.kind()) {
    case ModelKind::ising:
    case ModelKind::random_cluster:
    case ModelKind::bipartite_hardcore:
    case ModelKind::left_marginal:
      return Expect::yes;
    case ModelKind::hardcore:
      return m.size() > 1 ? Expect::no : Expect::yes;
    case ModelKind::subgraph_world:
      return Expect::unknown;
    case ModelKind::tilted:
    case ModelKind::flipped:
    case ModelKind::pinned:
      return expected_monotone(*m.base());
    case ModelKind::lifted:
      return Expect::unknown;
  }
  return Expect::unknown;
}

struct CheckOutcome {
  std::string status;  // pass, expected-negative pass, fail, skipped, info
  bool passed = true;
  json detail = json::object();
};

CheckOutcome pass(json d = json::object()) { return {"pass", true, std::move(d)}; }
CheckOutcome fail(json d = json::object()) { return {"fail", false, std::move(d)}; }
CheckOutcome skipped(const std::string& why) { return {"skipped", true, {{"reason", why}}}; }

json states_json(const SupportPtr& sup, const UpSet& u) {
  json a = json::array();
  for (std::size_t i = 0; i < sup->size(); ++i)
    if (u.members[i]) a.push_back(sup->state(i).to_string());
  return a;
}

struct VerifyData {
  const Context& ctx;
  ModelPtr mu;
  double theta;
  std::size_t t1, t2;
  Expect monotone;

  SupportPtr lifted;
  std::shared_ptr<const Kernel> pcl, sgd, pigd;
  std::optional<DistributionVector> mu_law, pi_law;

  void ensure_lifted() {
    if (lifted) return;
    lifted = lifted_support(*mu, theta);
    pcl = std::make_shared<const Kernel>(pcl_kernel(*mu, theta, lifted));
    sgd = std::make_shared<const Kernel>(sgd_kernel(*mu, theta, lifted));
    pigd = std::make_shared<const Kernel>(pi_gd_kernel(*mu, theta, lifted));
    mu_law = stationary_distribution(*mu);
    pi_law = *pcl->stationary;
  }
  bool ones_feasible() const { return mu->in_support(State::ones(mu->size())); }
  DistributionVector lifted_start() {
    ensure_lifted();
    const DistributionVector one = point_mass(mu_law->support, State::ones(mu->size()));
    return lift_pushforward(one, theta, lifted);
  }
};

CheckOutcome check_detailed_balance_all(VerifyData& d) {
  d.ensure_lifted();
  const Kernel gl = glauber_kernel(*d.mu);
  json det;
  double worst = 0.0;
  auto one = [&](const char* name, const Kernel& k) {
    k.check_stochastic(1e-12);
    const double v = check_detailed_balance(k, *k.stationary);
    det[name] = v;
    worst = std::max(worst, v);
  };
  one("glauber", gl);
  one("pcl", *d.pcl);
  one("sgd", *d.sgd);
  one("pi_gd", *d.pigd);
  det["max_violation"] = worst;
  return worst <= 1e-12 ? pass(det) : fail(det);
}

CheckOutcome check_monotone(VerifyData& d) {
  const MonotoneSystemResult r = check_monotone_system(*d.mu);
  json det = {{"holds", r.holds}};
  if (!r.holds)
    det["witness"] = {{"site", r.site},
                      {"lower", r.lower.to_string()},
                      {"upper", r.upper.to_string()},
                      {"law_lower", r.law_lower},
                      {"law_upper", r.law_upper}};
  switch (d.monotone) {
    case Expect::yes:
      return r.holds ? pass(det) : fail(det);
    case Expect::no:
      if (!r.holds) return {"expected-negative pass", true, det};
      return fail(det);
    case Expect::unknown:
      return {"info", true, det};
  }
  return fail(det);
}

CheckOutcome check_monotonicity(VerifyData& d) {
  if (d.monotone == Expect::unknown) return skipped("model is not a monotone system by construction");
  d.ensure_lifted();
  json det;
  bool all = true;
  std::optional<json> witness;
  for (auto [name, k] : {std::pair<const char*, const Kernel*>{"pi_gd", d.pigd.get()},
                         {"pcl", d.pcl.get()},
                         {"sgd", d.sgd.get()}}) {
    const MonotonicityResult r = check_stochastic_monotonicity(*k);
    det[name] = r.holds;
    if (!r.holds && !witness) {
      witness = json{{"kernel", name},
                     {"lower", d.lifted->state(r.rows->first).to_string()},
                     {"upper", d.lifted->state(r.rows->second).to_string()}};
      if (r.dominance.witness) witness->push_back({"up_set", states_json(d.lifted, *r.dominance.witness)});
    }
    all = all && r.holds;
  }
  if (witness) det["witness"] = *witness;
  if (d.monotone == Expect::yes) return all ? pass(det) : fail(det);
  if (!det["pi_gd"].get<bool>() && witness) return {"expected-negative pass", true, det};
  return fail(det);
}

CheckOutcome check_many_stationary(VerifyData& d, std::size_t horizon) {
  if (!d.ones_feasible()) return skipped("the all-ones configuration has zero weight");
  const auto traj = propagate(d.lifted_start(), *d.pigd, horizon);
  double worst = 0.0;
  for (const auto& nu : traj) worst = std::max(worst, l1_distance(apply(nu, *d.pcl), nu));
  json det = {{"max_l1", worst}, {"horizon", horizon}};
  return worst <= 1e-10 ? pass(det) : fail(det);
}

CheckOutcome check_lift_identity(VerifyData& d, std::size_t horizon) {
  if (!d.ones_feasible()) return skipped("the all-ones configuration has zero weight");
  d.ensure_lifted();
  const Kernel gl = glauber_kernel(*d.mu, d.mu_law->support);
  const auto mu_traj = propagate(point_mass(d.mu_law->support, State::ones(d.mu->size())), gl, horizon);
  const auto pi_traj = propagate(d.lifted_start(), *d.pigd, horizon);
  double worst = 0.0;
  for (std::size_t t = 0; t <= horizon; ++t)
    worst = std::max(worst, tv_distance(lift_pushforward(mu_traj[t], d.theta, d.lifted), pi_traj[t]));
  json det = {{"max_tv", worst}, {"horizon", horizon}};
  return worst <= 1e-10 ? pass(det) : fail(det);
}

CheckOutcome check_dominance(VerifyData& d) {
  if (d.monotone != Expect::yes) return skipped("needs a monotone system");
  if (!d.ones_feasible()) return skipped("the all-ones configuration has zero weight");
  d.ensure_lifted();
  const std::size_t horizon = 2 * d.t1 * d.t2;
  KernelSequence seq;
  for (std::size_t t = 0; t < horizon; ++t) {
    if (t % d.t2 == 0) seq.push_back({d.pcl, d.sgd});
    else seq.push_back({d.sgd});
  }
  const DistributionVector start = d.lifted_start();
  const auto alg = propagate(start, seq);
  const auto gd = propagate(start, *d.pigd, horizon);
  const Poset& poset = d.lifted->poset();
  for (std::size_t t = 0; t <= horizon; ++t) {
    const DominanceResult r = stochastic_dominance(gd[t].p, alg[t].p, poset);
    if (!r.holds) return fail({{"t", t}, {"flow", r.flow_value}});
  }
  return pass({{"horizon", horizon}});
}

CheckOutcome check_tv_comparison(VerifyData& d) {
  if (d.monotone != Expect::yes) return skipped("needs a monotone system");
  if (!d.ones_feasible()) return skipped("the all-ones configuration has zero weight");
  d.ensure_lifted();
  const std::size_t horizon = 2 * d.t1 * d.t2;
  KernelSequence seq;
  for (std::size_t t = 0; t < horizon; ++t) {
    if (t % d.t2 == 0) seq.push_back({d.pcl, d.sgd});
    else seq.push_back({d.sgd});
  }
  const auto alg = propagate(d.lifted_start(), seq);
  const Kernel gl = glauber_kernel(*d.mu, d.mu_law->support);
  const auto gd = propagate(point_mass(d.mu_law->support, State::ones(d.mu->size())), gl, horizon);
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t <= horizon; ++t) {
    const double lhs = tv_distance(gd[t], *d.mu_law);
    const double rhs = tv_distance(contract_pushforward(alg[t], d.mu_law->support), *d.mu_law);
    slack = std::min(slack, rhs - lhs);
  }
  json det = {{"min_slack", slack}, {"horizon", horizon}};
  return slack >= -1e-10 ? pass(det) : fail(det);
}

CheckOutcome check_single_vertex(VerifyData& d) {
  if (d.monotone != Expect::yes) return skipped("needs a monotone system");
  d.ensure_lifted();
  json det = json::array();
  bool all = true;
  for (std::size_t i = 0; i < d.mu->size(); ++i) {
    auto pi = std::make_shared<const Kernel>(pi_gd_site_kernel(*d.mu, d.theta, i, d.lifted));
    auto sg = std::make_shared<const Kernel>(sgd_site_kernel(*d.mu, d.theta, i, d.lifted));
    const McLeqResult r = check_mc_leq({pi}, {sg}, *d.pi_law, d.ctx.seed);
    det.push_back({{"site", i}, {"holds", r.holds}, {"rays", r.rays_checked}});
    all = all && r.holds;
  }
  return all ? pass({{"sites", det}}) : fail({{"sites", det}});
}

CheckOutcome check_phase_counterexample(VerifyData& d) {
  if (d.monotone != Expect::yes) return skipped("needs a monotone system");
  if (d.mu->size() < 2) return skipped("the counterexample needs at least two variables");
  d.ensure_lifted();
  const McLeqResult r = check_mc_leq({d.pigd}, {d.pcl, d.sgd}, *d.pi_law, d.ctx.seed);
  json det = {{"mc_leq_holds", r.holds}, {"rays_checked", r.rays_checked}};
  if (r.up_set) {
    det["witness_up_set"] = states_json(d.lifted, *r.up_set);
    det["witness_is_all_stars"] =
        r.up_set->count() == 1 && r.up_set->members[d.lifted->require_index(State::stars(d.mu->size()))];
  }
  if (!r.holds) return {"expected-negative pass", true, det};
  return fail(det);
}

CheckOutcome check_sw(VerifyData& d) {
  if (d.mu->kind() != ModelKind::random_cluster) return skipped("needs an untransformed random cluster model");
  const auto& rc = static_cast<const RandomClusterModel&>(*d.mu);
  const DistributionVector law = stationary_distribution(rc);
  const double tv = tv_distance(sw_to_rc_pushforward(rc, law.support), law);
  json det = {{"tv", tv}};
  return tv <= 1e-10 ? pass(det) : fail(det);
}

CheckOutcome check_rc_ising(VerifyData& d) {
  if (d.mu->kind() != ModelKind::ising) return skipped("needs an untransformed Ising model");
  const auto& ising = static_cast<const IsingModel&>(*d.mu);
  const DistributionVector law = stationary_distribution(ising);
  const double tv = tv_distance(rc_to_ising_pushforward(ising, law.support), law);
  json det = {{"tv", tv}};
  return tv <= 1e-10 ? pass(det) : fail(det);
}

CheckOutcome check_censoring(VerifyData& d, std::size_t horizon) {
  const Graph& g = d.ctx.graph;
  if (d.monotone != Expect::yes) return skipped("needs a monotone system");
  if (!g.bipartite() || d.mu->size() != g.num_vertices())
    return skipped("needs a bipartite graph whose vertices are the variables");
  if (!d.ones_feasible()) return skipped("the all-ones configuration has zero weight");
  const SupportPtr sup = enumerate_support(*d.mu);
  const DistributionVector law = stationary_distribution(*d.mu, sup);
  const Kernel plain = glauber_kernel(*d.mu, sup);
  const BipartiteSchedule sched(g.left_size(), d.ctx.get_uint("inner", 2), d.ctx.seed);
  DistributionVector a = point_mass(sup, State::ones(d.mu->size())), b = a;
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= horizon; ++t) {
    a = apply(a, plain);
    b = apply(b, censored_glauber_kernel(*d.mu, sched.mask(t, d.mu->size()), sup));
    slack = std::min(slack, tv_distance(b, law) - tv_distance(a, law));
  }
  json det = {{"min_slack", slack}, {"horizon", horizon}};
  return slack >= -1e-12 ? pass(det) : fail(det);
}

int cmd_verify(const Context& ctx, std::ostream& out) {
  if (ctx.model->alphabet() != Alphabet::binary)
    throw ConfigError("verify runs on binary models (drop the lift transform)");
  VerifyData d{ctx, ctx.model, ctx.get_double("theta", 0.25), ctx.get_uint("t1", 2),
               ctx.get_uint("t2", 3), expected_monotone(*ctx.model), {}, {}, {}, {}, {}, {}};
  check_theta_open_unit(d.theta, "verify");
  if (d.t1 < 1 || d.t2 < 1) throw ConfigError("t1 and t2 must be at least 1");
  const std::size_t horizon = ctx.get_uint("steps", 20);

  const bool explicit_checks = !ctx.opt.checks.empty();
  std::vector<std::string> checks = explicit_checks ? ctx.opt.checks : kAllChecks;
  for (const auto& c : checks)
    if (std::find(kAllChecks.begin(), kAllChecks.end(), c) == kAllChecks.end())
      throw ConfigError("unknown check '" + c + "'");

  std::map<std::string, std::function<CheckOutcome()>> table = {
      {"detailed-balance", [&] { return check_detailed_balance_all(d); }},
      {"monotone-system", [&] { return check_monotone(d); }},
      {"stochastic-monotonicity", [&] { return check_monotonicity(d); }},
      {"many-stationary", [&] { return check_many_stationary(d, horizon); }},
      {"lift-identity", [&] { return check_lift_identity(d, horizon); }},
      {"dominance", [&] { return check_dominance(d); }},
      {"tv-comparison", [&] { return check_tv_comparison(d); }},
      {"single-vertex", [&] { return check_single_vertex(d); }},
      {"phase-counterexample", [&] { return check_phase_counterexample(d); }},
      {"sw-coupling", [&] { return check_sw(d); }},
      {"rc-ising", [&] { return check_rc_ising(d); }},
      {"censoring", [&] { return check_censoring(d, horizon); }},
  };

  json report = ctx.header();
  report["theta"] = d.theta;
  report["t1"] = d.t1;
  report["t2"] = d.t2;
  report["model"] = ctx.model->describe();
  json results = json::array();
  bool all = true;
  for (const auto& name : checks) {
    CheckOutcome o;
    try {
      o = table.at(name)();
    } catch (const GuardExceeded& e) {
      if (explicit_checks) throw;
      o = skipped(std::string("guard: ") + e.what());
    }
    all = all && o.passed;
    results.push_back({{"check", name}, {"status", o.status}, {"passed", o.passed}, {"detail", o.detail}});
  }
  report["checks"] = results;
  report["all_passed"] = all;
  emit(ctx, report.dump(2) + "\n", out);
  return all ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// analyze

json schedule_json(const AlphaSchedule& s, double mu_min, double eps) {
  const double closed = s.integral();
  const double quad = quadrature_integral(s);
  const TBound tb = t_bound(s, mu_min, eps);
  return {{"theta", s.theta()},
          {"breakpoints", s.start()},
          {"values", s.value()},
          {"integral", closed},
          {"quadrature", quad},
          {"relative_difference", std::abs(closed - quad) / closed},
          {"log_kappa", log_kappa(s)},
          {"kappa", kappa(s)},
          {"t_bound", std::isfinite(tb.value) ? json(tb.value) : json("overflow")},
          {"log_t_bound", tb.log_value}};
}

const Model* underlying(const Model* m) {
  while (m->base() && m->kind() != ModelKind::left_marginal) m = m->base().get();
  return m;
}

int cmd_analyze(const Context& ctx, std::ostream& out) {
  if (ctx.model->alphabet() != Alphabet::binary) throw ConfigError("analyze runs on binary models");
  ReportOptions ro;
  ro.include_diagonal = ctx.get_string("diagonal", "true") != "false";
  ro.ei_iterations = ctx.get_uint("ei_iterations", 200);
  ro.seed = ctx.seed;
  const IndependenceReport rep = independence_report(*ctx.model, ro);
  json j = ctx.header();
  j["model"] = ctx.model->describe();
  j["report"] = json::parse(rep.to_json());
  const double eps = ctx.get_double("eps", 0.1);
  const double mu_min = min_probability(stationary_distribution(*ctx.model));
  j["mu_min"] = mu_min;

  const Model* u = underlying(ctx.model.get());
  if (u->kind() == ModelKind::random_cluster) {
    const auto& rc = static_cast<const RandomClusterModel&>(*u);
    const std::size_t n = rc.graph().num_vertices();
    if (rc.lambda_max() < 1.0) {
      j["schedule"] = schedule_json(rc_schedule(rc.p_min(), rc.lambda_max(), n), mu_min, eps);
    } else {
      j["schedule"] = {{"available", false}, {"reason", "needs lambda_max < 1"}};
    }
    j["schedule"]["kind"] = "random-cluster";
  } else if (u->kind() == ModelKind::left_marginal || u->kind() == ModelKind::bipartite_hardcore) {
    const auto& bhc = static_cast<const BipartiteHardcoreModel&>(
        u->kind() == ModelKind::left_marginal ? *u->base() : *u);
    const Graph& g = bhc.graph();
    int delta_max = 0;
    for (std::size_t v = 0; v < g.left_size(); ++v)
      delta_max = std::max(delta_max, static_cast<int>(g.incident(v).size()));
    const double delta = ctx.get_double("delta", 0.5);
    j["schedule"] = schedule_json(bhc_schedule(bhc.lambda(), std::max(delta_max, 1), delta,
                                               g.num_vertices()),
                                  mu_min, eps);
    j["schedule"]["kind"] = "bipartite-hardcore";
    if (delta_max >= 2) {
      json grid = json::array();
      for (const auto& row : uniqueness_grid(bhc.lambda(), delta_max - 1, bhc.beta(), delta))
        grid.push_back({{"w", row.w},
                        {"holds", row.result.holds},
                        {"max_derivative", row.result.max_derivative},
                        {"fixed_points", row.result.fixed_points}});
      j["uniqueness"] = {{"heuristic", true}, {"lambda", bhc.lambda()}, {"d", delta_max - 1},
                         {"beta", bhc.beta()}, {"delta", delta}, {"grid", grid}};
      if (delta_max >= 3) j["uniqueness"]["lambda_c"] = lambda_c(delta_max);
    }
  }
  emit(ctx, j.dump(2) + "\n", out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// mixing

int cmd_mixing(const Context& ctx, std::ostream& out) {
  const ModelPtr& mu = ctx.model;
  if (mu->alphabet() != Alphabet::binary) throw ConfigError("mixing runs on binary models");
  const double eps = ctx.get_double("eps", 0.1);
  const double theta = ctx.get_double("theta", 0.25);
  if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("eps must lie in (0,1)");
  check_theta_open_unit(theta, "mixing");

  const SupportPtr sup = enumerate_support(*mu);
  const Kernel gl = glauber_kernel(*mu, sup);
  const State start = parse_start(ctx, *mu);
  const std::size_t t_gd = exact_mixing_time(gl, sup->require_index(start), *gl.stationary, eps);
  const FdMixing fd = fd_mixing_time(*mu, theta, eps / 2.0);
  const double delta = eps / (2.0 * static_cast<double>(std::max<std::size_t>(fd.all_starts, 1)));
  const TiltedMixing tm = tilted_mixing_time(mu, theta, delta);
  const std::size_t product = fd.all_starts * tm.value;
  const bool holds = t_gd <= product;

  std::ostringstream csv;
  csv << ctx.preamble();
  csv << "eps,theta,start,gd_from_start,fd_all_starts,fd_from_ones,delta,tilted,tilted_pinnings,"
         "product,holds\n";
  csv << format_double(eps) << ',' << format_double(theta) << ',' << start.to_string() << ','
      << t_gd << ',' << fd.all_starts << ','
      << (fd.from_ones ? std::to_string(*fd.from_ones) : std::string("na")) << ','
      << format_double(delta) << ',' << tm.value << ',' << tm.pinnings_checked << ',' << product
      << ',' << (holds ? "true" : "false") << '\n';
  emit(ctx, csv.str(), out);
  return holds ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// kernel-export

int cmd_kernel_export(const Context& ctx, std::ostream& out) {
  const std::string which = ctx.get_string("kernel", "glauber");
  const double theta = ctx.get_double("theta", 0.25);
  const Model& mu = *ctx.model;
  std::optional<Kernel> k;
  if (which == "glauber") k = glauber_kernel(mu);
  else if (which == "pcl") k = pcl_kernel(mu, theta);
  else if (which == "sgd") k = sgd_kernel(mu, theta);
  else if (which == "pigd") k = pi_gd_kernel(mu, theta);
  else if (which == "fd") k = fd_kernel(mu, theta);
  else throw ConfigError("unknown kernel '" + which + "' (glauber, pcl, sgd, pigd, fd)");
  std::ostringstream csv;
  csv << ctx.preamble();
  write_csv(csv, *k);
  emit(ctx, csv.str(), out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  CLI::App app{"Laboratory for monotone spin systems, Glauber and field dynamics"};
  app.set_version_flag("--version", "fdlab 1.0");
  Options opt;
  app.add_option("command", opt.command, "sample | verify | analyze | mixing | kernel-export")
      ->required()
      ->check(CLI::IsMember({"sample", "verify", "analyze", "mixing", "kernel-export"}));
  app.add_option("--graph", opt.graph, "Graph file: 'n m [bipartite k]' then one edge per line");
  app.add_option("--params", opt.params, "Flat key=value parameter file");
  app.add_option("--transform", opt.transforms,
                 "Repeatable: tilt=θ | flip | pin=FILE | lift=θ | left-marginal");
  app.add_option("--check", opt.checks, "Repeatable check selector for verify");
  app.add_option("--out", opt.out, "Output file (sample: output prefix)");
  app.add_option("--seed", opt.seed, "Root seed");
  app.add_option("--eps", opt.eps, "Total-variation target");
  app.add_option("--t1", opt.t1, "Outer phases");
  app.add_option("--t2", opt.t2, "Inner steps per phase");
  app.add_option("--steps", opt.steps, "Number of steps");
  app.add_option("--record", opt.record, "Comma-separated times to record");

  std::vector<std::string> argv_store{"fdlab"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    const Context ctx = make_context(opt);
    int code = kExitConfigError;
    if (opt.command == "sample") code = cmd_sample(ctx, out);
    else if (opt.command == "verify") code = cmd_verify(ctx, out);
    else if (opt.command == "analyze") code = cmd_analyze(ctx, out);
    else if (opt.command == "mixing") code = cmd_mixing(ctx, out);
    else if (opt.command == "kernel-export") code = cmd_kernel_export(ctx, out);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    err << "fdlab " << opt.command << ": exit " << code << " in " << secs << " s\n";
    return code;
  } catch (const std::exception& e) {
    err << "fdlab: error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

}  // namespace fdlab::cli
