#include "fallball/experiment.hpp"

#include "fallball/diagnostics.hpp"
#include "fallball/estimators.hpp"
#include "fallball/event_log_io.hpp"
#include "fallball/lyapunov.hpp"
#include "fallball/parallel.hpp"
#include "fallball/sigma.hpp"
#include "fallball/simulation.hpp"
#include "fallball/wedge.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fallball {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<ExperimentKind, const char*> kKindNames[] = {
    {ExperimentKind::Simulate, "simulate"},
    {ExperimentKind::Lyapunov, "lyapunov"},
    {ExperimentKind::Noncontraction, "noncontraction"},
    {ExperimentKind::Tau, "tau"},
    {ExperimentKind::Heart, "heart"},
    {ExperimentKind::Counts, "counts"},
    {ExperimentKind::Sufficiency, "sufficiency"},
    {ExperimentKind::WedgeEquivalence, "wedge-equivalence"},
    {ExperimentKind::WedgeUnfold, "wedge-unfold"},
    {ExperimentKind::IdentityCheck, "identity-check"},
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T value{};
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

// Reals accept a plain decimal or a fraction a/b.
std::optional<double> parse_real(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return parse_number<double>(s);
  const auto num = parse_number<double>(trim(s.substr(0, slash)));
  const auto den = parse_number<double>(trim(s.substr(slash + 1)));
  if (!num || !den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

std::optional<bool> parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  return std::nullopt;
}

bool well_typed(ValueType type, const std::string& raw) {
  switch (type) {
    case ValueType::Real: return parse_real(raw).has_value();
    case ValueType::Int: return parse_number<std::int64_t>(raw).has_value();
    case ValueType::Bool: return parse_bool(raw).has_value();
    case ValueType::String: return !raw.empty();
    case ValueType::RealList:
      for (const auto& item : split_list(raw)) {
        if (!parse_real(item)) return false;
      }
      return !raw.empty();
    case ValueType::IntList:
      for (const auto& item : split_list(raw)) {
        if (!parse_number<std::int64_t>(item) || item.front() == '-') return false;
      }
      return !raw.empty();
  }
  return false;
}

// Lists are stored without spaces so equal configs hash equally.
std::string canonical(ValueType type, const std::string& raw) {
  if (type != ValueType::RealList && type != ValueType::IntList) return raw;
  std::string out;
  for (const auto& item : split_list(raw)) out += (out.empty() ? "" : ",") + item;
  return out;
}

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_schema()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

bool any_of_kinds(ExperimentKind k, std::initializer_list<ExperimentKind> kinds) {
  return std::find(kinds.begin(), kinds.end(), k) != kinds.end();
}

std::string fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

double relative_drift(const MassConfig& cfg, const BallState& a, const BallState& b) {
  const double h0 = hamiltonian(cfg, a);
  return std::abs(hamiltonian(cfg, b) - h0) / std::max(1.0, std::abs(h0));
}

/// Writes each artifact to a temporary file and renames it into place.
class ArtifactWriter {
 public:
  ArtifactWriter(fs::path root, std::string hash) : root_(std::move(root)), hash_(std::move(hash)) {}

  const fs::path& root() const { return root_; }

  // Members appended to every JSONL header.
  std::string header_extra(std::uint64_t seed) const {
    return R"(,"config_hash":")" + hash_ + R"(","run_seed":)" + std::to_string(seed);
  }

  // CSV files open with a comment line carrying the provenance fields.
  std::string csv_preamble(const std::string& seeds) const {
    return "# version=" + std::string(kVersion) + " config_hash=" + hash_ + " seeds=" + seeds + "\n";
  }

  void write(const fs::path& rel, const std::string& content) const {
    const fs::path target = root_ / rel;
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw Error(Errc::Io, "cannot create " + target.parent_path().string() + ": " + ec.message());
    const fs::path tmp = target.string() + ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw Error(Errc::Io, "cannot open " + tmp.string());
      os << content;
      os.flush();
      if (!os) throw Error(Errc::Io, "write failed for " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw Error(Errc::Io, "cannot move " + tmp.string() + " to " + target.string() + ": " + ec.message());
  }

 private:
  fs::path root_;
  std::string hash_;
};

std::string seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (auto s : seeds) out += (out.empty() ? "" : ";") + std::to_string(s);
  return out;
}

std::string event_file(std::uint64_t seed, const std::string& branch, const std::string& stem = "events") {
  return "seed-" + std::to_string(seed) + "/" + stem + (branch.empty() ? "" : "-" + branch) + ".jsonl";
}

Horizon horizon_of(const ExperimentConfig& cfg) {
  Horizon h;
  if (cfg.horizon_events >= 0) h.max_events = cfg.horizon_events;
  if (cfg.horizon_time >= 0) h.max_time = cfg.horizon_time;
  return h;
}

SingularPolicy policy_of(const std::string& s) {
  if (s == "stop") return SingularPolicy::Stop;
  if (s == "branch") return SingularPolicy::Branch;
  return SingularPolicy::Proceed;
}

struct Context {
  const ExperimentConfig& cfg;
  const MassConfig& masses;
  const ArtifactWriter& out;
  Json& results;
  std::vector<std::string>& red_flags;
};

Json singular_json(const SingularOrbitError& e) {
  return {{"kind", to_string(e.kind())}, {"event_index", e.event_index()}, {"time", e.state().t}};
}

// ---------------------------------------------------------------- simulate

void run_simulate(Context& ctx) {
  const auto& seeds = ctx.cfg.seeds;
  SimulationOptions opts;
  opts.policy = policy_of(ctx.cfg.text("simulate.policy"));
  opts.max_branch_depth = static_cast<int>(ctx.cfg.integer("simulate.max_branch_depth"));
  opts.eps_sing = ctx.cfg.real("simulate.eps_sing");
  const Horizon horizon = horizon_of(ctx.cfg);

  struct Slot {
    BallState s0;
    std::vector<EventLog> logs;
    std::optional<Json> singular;
  };
  std::vector<Slot> slots(seeds.size());
  parallel_for(seeds.size(), ctx.cfg.jobs, [&](std::size_t k) {
    slots[k].s0 = sample_state(ctx.masses, seeds[k]);
    try {
      slots[k].logs = simulate(ctx.masses, slots[k].s0, horizon, opts, seeds[k]);
    } catch (const SingularOrbitError& e) {
      slots[k].singular = singular_json(e);
    }
  });

  std::string table = ctx.out.csv_preamble(seed_list(seeds)) +
                      "seed,branch,events,final_time,energy_drift,singular_events,depth_capped\n";
  Json orbits = Json::array();
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const Slot& slot = slots[k];
    if (slot.singular) {
      orbits.push_back({{"seed", seeds[k]}, {"stopped_at_singular", *slot.singular}});
      continue;
    }
    for (const EventLog& log : slot.logs) {
      std::int64_t singular = 0;
      for (const auto& ev : log.events) singular += ev.is_singular() ? 1 : 0;
      const double drift = relative_drift(ctx.masses, log.initial, log.final_state);
      orbits.push_back({{"seed", seeds[k]},
                        {"branch", log.branch},
                        {"events", log.events.size()},
                        {"final_time", log.final_state.t},
                        {"energy_drift", drift},
                        {"singular_events", singular},
                        {"depth_capped", log.depth_capped}});
      table += std::to_string(seeds[k]) + "," + log.branch + "," + std::to_string(log.events.size()) + "," +
               format_real(log.final_state.t) + "," + format_real(drift) + "," + std::to_string(singular) + "," +
               (log.depth_capped ? "true" : "false") + "\n";
      if (ctx.cfg.boolean("output.events")) {
        std::ostringstream os;
        write_jsonl(os, log, ctx.out.header_extra(seeds[k]));
        ctx.out.write(event_file(seeds[k], log.branch), os.str());
      }
    }
  }
  ctx.results["orbits"] = orbits;
  ctx.out.write("tables/orbits.csv", table);
}

// ---------------------------------------------------------------- lyapunov

void run_lyapunov(Context& ctx) {
  const auto& seeds = ctx.cfg.seeds;
  const int every = static_cast<int>(ctx.cfg.integer("lyapunov.reorth_every"));
  std::vector<std::optional<LyapunovResult>> slots(seeds.size());
  std::vector<std::optional<Json>> singular(seeds.size());
  parallel_for(seeds.size(), ctx.cfg.jobs, [&](std::size_t k) {
    try {
      slots[k] = lyapunov_spectrum(ctx.masses, sample_state(ctx.masses, seeds[k]), ctx.cfg.horizon_events, every);
    } catch (const SingularOrbitError& e) {
      singular[k] = singular_json(e);
    }
  });

  const Eigen::Index dim = 2 * (ctx.masses.size() - 1);
  Vector mean = Vector::Zero(dim);
  int used = 0;
  Json per_seed = Json::array();
  std::string table = ctx.out.csv_preamble(seed_list(seeds)) + "seed,index,exponent,exponent_per_time\n";
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (!slots[k]) {
      per_seed.push_back({{"seed", seeds[k]}, {"stopped_at_singular", *singular[k]}});
      continue;
    }
    const LyapunovResult& r = *slots[k];
    mean += r.exponents;
    ++used;
    per_seed.push_back({{"seed", seeds[k]},
                        {"steps", r.steps},
                        {"elapsed_time", r.elapsed_time},
                        {"exponents", to_json(r.exponents)},
                        {"exponents_per_time", to_json(r.per_time())}});
    const Vector pt = r.per_time();
    for (Eigen::Index i = 0; i < dim; ++i) {
      table += std::to_string(seeds[k]) + "," + std::to_string(i + 1) + "," + format_real(r.exponents[i]) + "," +
               format_real(pt[i]) + "\n";
    }
  }
  ctx.results["per_seed"] = per_seed;
  ctx.out.write("tables/spectrum.csv", table);
  if (used == 0) {
    ctx.red_flags.push_back("every orbit met a singular event");
    return;
  }
  mean /= used;
  double pairing = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) pairing = std::max(pairing, std::abs(mean[i] + mean[dim - 1 - i]));
  ctx.results["mean_exponents"] = to_json(mean);
  ctx.results["pairing_defect"] = pairing;
  if (pairing > ctx.cfg.real("lyapunov.pairing_tol")) ctx.red_flags.push_back("spectrum pairing defect above tolerance");
  if (!(mean[0] > 0.0)) ctx.red_flags.push_back("largest exponent is not positive");
}

// ---------------------------------------------------------------- noncontraction

void run_noncontraction(Context& ctx) {
  EnsembleSpec spec;
  spec.orbits = static_cast<int>(ctx.cfg.seeds.size());
  spec.seed = ctx.cfg.seeds.front();
  spec.n_max = ctx.cfg.integer("noncontraction.n_max");
  spec.vectors = static_cast<int>(ctx.cfg.integer("noncontraction.vectors"));
  spec.boundary_fraction = ctx.cfg.real("noncontraction.boundary_fraction");
  spec.jobs = ctx.cfg.jobs;
  const NoncontractionReport r = noncontraction_estimate(ctx.masses, spec);

  const std::size_t half = r.per_n_min.size() / 2;
  double early = std::numeric_limits<double>::infinity();
  double late = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < r.per_n_min.size(); ++n) {
    double& bucket = n <= half ? early : late;
    bucket = std::min(bucket, r.per_n_min[n]);
  }
  const double ratio = early / late;

  ctx.results["zeta"] = r.zeta;
  ctx.results["witness"] = {{"orbit_seed", r.witness.orbit_seed},
                            {"n", r.witness.n},
                            {"vector", to_json(r.witness.vector)},
                            {"value", r.witness.value}};
  ctx.results["min_early"] = early;
  ctx.results["min_late"] = late;
  ctx.results["early_late_ratio"] = ratio;
  ctx.results["skipped_seeds"] = r.skipped_seeds;

  std::string table = ctx.out.csv_preamble(seed_list(ctx.cfg.seeds)) + "n,min_ht_norm\n";
  for (std::size_t n = 0; n < r.per_n_min.size(); ++n) table += std::to_string(n) + "," + format_real(r.per_n_min[n]) + "\n";
  ctx.out.write("tables/per_n_min.csv", table);

  if (!(r.zeta > 0.0)) ctx.red_flags.push_back("zeta is not positive");
  if (!(ratio <= ctx.cfg.real("noncontraction.ratio_limit"))) {
    ctx.red_flags.push_back("running minimum keeps shrinking past the midpoint");
  }
}

// ---------------------------------------------------------------- tau

void run_tau(Context& ctx) {
  TauOptions opts;
  opts.e0 = ctx.cfg.real("tau.e0");
  opts.cutoff_events = ctx.cfg.integer("tau.cutoff_events");
  opts.vectors = static_cast<int>(ctx.cfg.integer("tau.vectors"));
  opts.boundary_fraction = ctx.cfg.real("tau.boundary_fraction");
  const TauEnsembleReport r = tau_ensemble(ctx.masses, static_cast<int>(ctx.cfg.seeds.size()), ctx.cfg.seeds.front(),
                                           opts, ctx.cfg.jobs);
  std::string table = ctx.out.csv_preamble(seed_list(ctx.cfg.seeds)) + "seed,status,tau,events\n";
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    const char* status = !e.result ? "singular" : e.result->exceeded ? "exceeded" : "finite";
    Json entry = {{"seed", e.seed}, {"status", status}};
    if (e.result) {
      entry["tau"] = e.result->tau;
      entry["events"] = e.result->events;
    }
    entries.push_back(entry);
    table += std::to_string(e.seed) + "," + status + "," + (e.result ? format_real(e.result->tau) : "") + "," +
             (e.result ? std::to_string(e.result->events) : "") + "\n";
  }
  ctx.results["entries"] = entries;
  ctx.results["max_tau"] = r.max_tau;
  ctx.results["finite"] = r.finite;
  ctx.results["exceeded"] = r.exceeded;
  ctx.results["singular"] = r.singular;
  ctx.out.write("tables/tau.csv", table);
  if (r.exceeded > 0) ctx.red_flags.push_back("Q stayed below E0 within the cutoff for some orbit");
}

// ---------------------------------------------------------------- heart

void run_heart(Context& ctx) {
  const HeartReport r = heart_probe(ctx.masses, ctx.cfg.seeds, ctx.cfg.horizon_events, ctx.cfg.jobs);
  const double tol = ctx.cfg.real("heart.stability_tol");
  std::string table = ctx.out.csv_preamble(seed_list(ctx.cfg.seeds)) + "pair,c_half,c_full,stability\n";
  bool unstable = false;
  for (std::size_t i = 0; i < r.c_full.size(); ++i) {
    table += std::to_string(i + 1) + "," + format_real(r.c_half[i]) + "," + format_real(r.c_full[i]) + "," +
             format_real(r.stability[i]) + "\n";
    unstable = unstable || !(r.stability[i] <= tol);
  }
  ctx.results["c_half"] = r.c_half;
  ctx.results["c_full"] = r.c_full;
  ctx.results["stability"] = r.stability;
  ctx.results["brackets"] = r.brackets;
  ctx.results["singular_events"] = r.singular_events;
  ctx.out.write("tables/heart.csv", table);
  if (r.red_flag) ctx.red_flags.push_back("some empirical C_i is zero");
  if (unstable) ctx.red_flags.push_back("C_i changed beyond tolerance under horizon doubling");
}

// ---------------------------------------------------------------- counts

void run_counts(Context& ctx) {
  const auto& seeds = ctx.cfg.seeds;
  const double window = ctx.cfg.real("counts.window");
  const bool sliding = ctx.cfg.boolean("counts.sliding");
  const std::int64_t horizon = ctx.cfg.horizon_events;
  SimulationOptions opts;
  opts.policy = SingularPolicy::Proceed;

  struct Slot {
    CountReport half, full;
    double t0 = 0.0;
  };
  std::vector<Slot> slots(seeds.size());
  parallel_for(seeds.size(), ctx.cfg.jobs, [&](std::size_t k) {
    const BallState s0 = sample_state(ctx.masses, seeds[k]);
    std::vector<EventStamp> st;
    st.reserve(static_cast<std::size_t>(horizon));
    simulate_stream(ctx.masses, s0, Horizon::events(horizon), opts, [&](const CollisionEvent& ev, const BallState&) {
      st.push_back(make_stamp(ev));
      return true;
    });
    const std::vector<EventStamp> first(st.begin(), st.begin() + static_cast<std::ptrdiff_t>(st.size() / 2));
    slots[k].t0 = s0.t;
    slots[k].half = collision_count_probe(first, s0.t, window, sliding, false);
    slots[k].full = collision_count_probe(st, s0.t, window, sliding, ctx.cfg.boolean("counts.window_table"));
  });

  std::int64_t half_max = 0, full_max = 0, floor_max = 0;
  std::string table = ctx.out.csv_preamble(seed_list(seeds)) +
                      "seed,half_max_pair,full_max_pair,full_max_pair_start,half_max_floor,full_max_floor\n";
  std::string windows = ctx.out.csv_preamble(seed_list(seeds)) + "seed,start,pair_count,floor_count\n";
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const Slot& s = slots[k];
    half_max = std::max(half_max, s.half.max_pair);
    full_max = std::max(full_max, s.full.max_pair);
    floor_max = std::max(floor_max, s.full.max_floor);
    table += std::to_string(seeds[k]) + "," + std::to_string(s.half.max_pair) + "," + std::to_string(s.full.max_pair) +
             "," + format_real(s.full.max_pair_start) + "," + std::to_string(s.half.max_floor) + "," +
             std::to_string(s.full.max_floor) + "\n";
    for (const WindowRow& row : s.full.rows) {
      windows += std::to_string(seeds[k]) + "," + format_real(row.start) + "," + std::to_string(row.pair_count) + "," +
                 std::to_string(row.floor_count) + "\n";
    }
  }
  const double growth = half_max > 0 ? static_cast<double>(full_max - half_max) / static_cast<double>(half_max) : 0.0;
  ctx.results["window"] = window;
  ctx.results["sliding"] = sliding;
  ctx.results["max_pair_half"] = half_max;
  ctx.results["max_pair_full"] = full_max;
  ctx.results["growth"] = growth;
  ctx.results["max_floor_full"] = floor_max;
  ctx.out.write("tables/counts.csv", table);
  if (ctx.cfg.boolean("counts.window_table")) ctx.out.write("tables/windows.csv", windows);
  if (!(growth < ctx.cfg.real("counts.stability_tol"))) {
    ctx.red_flags.push_back("pair-collision window maximum grew beyond tolerance under horizon doubling");
  }
}

// ---------------------------------------------------------------- sufficiency

void run_sufficiency(Context& ctx) {
  const auto& seeds = ctx.cfg.seeds;
  const double threshold = ctx.cfg.real("sufficiency.threshold");
  const std::int64_t cap = ctx.cfg.integer("sufficiency.n_cap");
  struct Slot {
    std::optional<SufficiencyResult> forward, backward;
    std::string forward_error, backward_error;
  };
  std::vector<Slot> slots(seeds.size());
  parallel_for(seeds.size(), ctx.cfg.jobs, [&](std::size_t k) {
    const BallState s0 = sample_state(ctx.masses, seeds[k]);
    try {
      slots[k].forward = sufficiency_search(ctx.masses, s0, threshold, cap);
    } catch (const Error& e) {
      slots[k].forward_error = e.what();
    }
    try {
      const auto logs = simulate(ctx.masses, s0, Horizon::events(cap));
      slots[k].backward = sufficiency_search_backward(ctx.masses, logs.front(), threshold, cap);
    } catch (const Error& e) {
      slots[k].backward_error = e.what();
    }
  });

  std::string table = ctx.out.csv_preamble(seed_list(seeds)) + "seed,direction,status,n,sigma,sigma_before\n";
  Json entries = Json::array();
  bool monotone = true;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      const auto& res = dir == 0 ? slots[k].forward : slots[k].backward;
      const auto& err = dir == 0 ? slots[k].forward_error : slots[k].backward_error;
      const char* direction = dir == 0 ? "forward" : "backward";
      Json e = {{"seed", seeds[k]}, {"direction", direction}};
      std::string row = std::to_string(seeds[k]) + "," + direction + ",";
      if (res) {
        const char* status = res->exceeded ? "not_reached" : "sufficient";
        e.update({{"status", status}, {"n", res->n}, {"sigma", res->sigma}, {"sigma_before", res->sigma_before}});
        row += std::string(status) + "," + std::to_string(res->n) + "," + format_real(res->sigma) + "," +
               format_real(res->sigma_before);
        monotone = monotone && res->sigma_before <= res->sigma * (1.0 + 1e-12);
      } else {
        e.update({{"status", "error"}, {"error", err}});
        row += "error,,,";
      }
      entries.push_back(e);
      table += row + "\n";
    }
  }
  ctx.results["threshold"] = threshold;
  ctx.results["entries"] = entries;
  ctx.out.write("tables/sufficiency.csv", table);
  if (!monotone) ctx.red_flags.push_back("sigma decreased between consecutive iterates");
}

// ---------------------------------------------------------------- wedge

void run_wedge_equivalence(Context& ctx) {
  const WedgeModel model = build_wedge(ctx.masses);
  const auto& seeds = ctx.cfg.seeds;
  const double tol = ctx.cfg.real("wedge.tolerance");
  struct Slot {
    std::optional<EventLog> log;
    WedgeLog wedge;
    std::optional<Json> singular;
    double time_err = 0.0, pos_err = 0.0, vel_err = 0.0;
    std::int64_t mismatched = 0;
  };
  std::vector<Slot> slots(seeds.size());
  parallel_for(seeds.size(), ctx.cfg.jobs, [&](std::size_t k) {
    Slot& s = slots[k];
    const BallState s0 = sample_state(ctx.masses, seeds[k]);
    try {
      s.log = simulate(ctx.masses, s0, Horizon::events(ctx.cfg.horizon_events), {}, seeds[k]).front();
    } catch (const SingularOrbitError& e) {
      s.singular = singular_json(e);
      return;
    }
    // Each wedge step starts from the mapped post-collision state of the previous ball event.
    WedgePoint p = to_wedge(ctx.masses, s0);
    double t = s0.t;
    s.wedge.initial = p;
    s.wedge.t0 = t;
    for (const CollisionEvent& ev : s.log->events) {
      const WedgeStep step = wedge_step(model, p, t, {}, ev.n);
      s.wedge.events.push_back(step.event);
      const WedgePoint ref = to_wedge(ctx.masses, BallState{ev.t, ev.q_at, ev.v_post});
      if (step.event.face != face_of(ev.kind)) ++s.mismatched;
      s.time_err = std::max(s.time_err, std::abs(step.t - ev.t));
      s.pos_err = std::max(s.pos_err, (step.point.x - ref.x).norm());
      s.vel_err = std::max(s.vel_err, (step.point.u - ref.u).norm());
      p = ref;
      t = ev.t;
    }
    s.wedge.final_point = p;
    s.wedge.final_time = t;
  });

  const Matrix& g = model.gram;
  const double gram_defect = std::abs(g(0, 2) - g(0, 1) * g(1, 2));
  ctx.results["gram"] = {{"e1e2", g(0, 1)}, {"e2e3", g(1, 2)}, {"e1e3", g(0, 2)}, {"defect", gram_defect}};
  ctx.results["special_masses"] = special_mass_check(ctx.masses);
  ctx.results["dihedral_e1"] = model.dihedral_e1;

  std::string table = ctx.out.csv_preamble(seed_list(seeds)) +
                      "seed,events,max_time_error,max_position_error,max_velocity_error,face_mismatches\n";
  Json orbits = Json::array();
  bool bad = false;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const Slot& s = slots[k];
    if (s.singular) {
      orbits.push_back({{"seed", seeds[k]}, {"stopped_at_singular", *s.singular}});
      continue;
    }
    orbits.push_back({{"seed", seeds[k]},
                      {"events", s.log->events.size()},
                      {"max_time_error", s.time_err},
                      {"max_position_error", s.pos_err},
                      {"max_velocity_error", s.vel_err},
                      {"face_mismatches", s.mismatched}});
    table += std::to_string(seeds[k]) + "," + std::to_string(s.log->events.size()) + "," + format_real(s.time_err) +
             "," + format_real(s.pos_err) + "," + format_real(s.vel_err) + "," + std::to_string(s.mismatched) + "\n";
    bad = bad || s.mismatched > 0 || !(std::max({s.time_err, s.pos_err, s.vel_err}) <= tol);
    if (ctx.cfg.boolean("output.events")) {
      std::ostringstream balls, wedge;
      write_jsonl(balls, *s.log, ctx.out.header_extra(seeds[k]));
      write_wedge_jsonl(wedge, model, s.wedge, ctx.out.header_extra(seeds[k]));
      ctx.out.write(event_file(seeds[k], ""), balls.str());
      ctx.out.write(event_file(seeds[k], "", "wedge"), wedge.str());
    }
  }
  ctx.results["orbits"] = orbits;
  ctx.out.write("tables/equivalence.csv", table);
  if (bad) ctx.red_flags.push_back("wedge and ball orbits disagree beyond tolerance");
  if (gram_defect > 1e-14) ctx.red_flags.push_back("wedge is not simple");
}

void run_wedge_unfold(Context& ctx) {
  const WedgeModel model = build_wedge(ctx.masses);
  const WedgeFan fan = unfold(model, ctx.masses);
  const ContinuationReport r = continuation_test(model, ctx.masses, ctx.cfg.real("wedge.delta0"),
                                                 static_cast<int>(ctx.cfg.integer("wedge.halvings")));
  std::ostringstream fan_csv;
  fan_csv << ctx.out.csv_preamble("none");
  write_fan_csv(fan_csv, fan);
  ctx.out.write("tables/fan.csv", fan_csv.str());

  std::string table = ctx.out.csv_preamble("none") +
                      "delta,folded_divergence,unfolded_divergence,reference_gap,reflections_plus,"
                      "reflections_minus,same_word\n";
  for (const auto& row : r.rows) {
    table += format_real(row.delta) + "," + format_real(row.folded_divergence) + "," +
             format_real(row.unfolded_divergence) + "," + format_real(row.reference_gap) + "," +
             std::to_string(row.reflections_plus) + "," + std::to_string(row.reflections_minus) + "," +
             (row.same_word ? "true" : "false") + "\n";
  }
  ctx.out.write("tables/continuation.csv", table);
  ctx.results["dihedral_e1"] = model.dihedral_e1;
  ctx.results["copies"] = fan.copies();
  ctx.results["closed"] = fan.closed;
  ctx.results["accumulated_angle"] = fan.accumulated_angle;
  ctx.results["slope_folded"] = r.slope;
  ctx.results["slope_unfolded"] = r.unfolded_slope;
  const double tol = ctx.cfg.real("wedge.slope_tol");
  if (!(std::abs(r.unfolded_slope - 1.0) <= tol)) {
    ctx.red_flags.push_back("unfolded branch divergence is not linear in the approach distance");
  }
}

// ---------------------------------------------------------------- identities

void run_identity_check(Context& ctx) {
  const auto& seeds = ctx.cfg.seeds;
  const std::int64_t per_kind = ctx.cfg.integer("identity.intervals");
  const double tol = ctx.cfg.real("identity.tolerance");
  const int n = ctx.masses.size();

  struct Row {
    std::uint64_t seed;
    std::string identity;
    int pair;
    std::size_t k1, k2;
    double residual;
  };
  struct Slot {
    std::optional<EventLog> log;
    std::optional<Json> singular;
    std::vector<Row> rows;
  };
  std::vector<Slot> slots(seeds.size());
  parallel_for(seeds.size(), ctx.cfg.jobs, [&](std::size_t k) {
    Slot& s = slots[k];
    try {
      s.log = simulate(ctx.masses, sample_state(ctx.masses, seeds[k]), Horizon::events(ctx.cfg.horizon_events), {},
                       seeds[k])
                  .front();
    } catch (const SingularOrbitError& e) {
      s.singular = singular_json(e);
      return;
    }
    const EventLog& log = *s.log;
    auto take = [&](const std::string& name, int pair, const std::vector<std::pair<std::size_t, std::size_t>>& iv,
                    auto&& eval) {
      const std::size_t stride = std::max<std::size_t>(1, iv.size() / static_cast<std::size_t>(per_kind));
      std::int64_t taken = 0;
      for (std::size_t j = 0; j < iv.size() && taken < per_kind; j += stride) {
        const auto r = eval(iv[j].first, iv[j].second);
        if (!r) continue;
        s.rows.push_back({seeds[k], name, pair, iv[j].first, iv[j].second, *r});
        ++taken;
      }
    };
    for (int pair = 1; pair < n; ++pair) {
      const auto idx = pair_event_indices(log, pair);
      std::vector<std::pair<std::size_t, std::size_t>> single, consecutive, with_return;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        single.emplace_back(idx[j], idx[j]);
        if (j == 0) continue;
        consecutive.emplace_back(idx[j - 1], idx[j]);
        if (pair == 1 && floor_returns_between(log, idx[j - 1], idx[j]) >= 1) with_return.emplace_back(idx[j - 1], idx[j]);
      }
      take("sandwich", pair, single, [&](std::size_t a, std::size_t) { return sandwich_residual(log, a); });
      take("sum-general", pair, consecutive, [&](std::size_t a, std::size_t b) -> std::optional<double> {
        try {
          return expansion_residual(log, ExpansionVariant::general(pair), a, b);
        } catch (const Error&) {
          return std::nullopt;
        }
      });
      if (pair != 1) continue;
      for (FloorWeight w : {FloorWeight::PrintedTwoJ, FloorWeight::Unit}) {
        take(std::string("sum-lowest-") + to_string(w), pair, with_return,
             [&](std::size_t a, std::size_t b) -> std::optional<double> {
               try {
                 return expansion_residual(log, ExpansionVariant::lowest(w), a, b);
               } catch (const Error&) {
                 return std::nullopt;
               }
             });
      }
    }
  });

  std::map<std::string, std::pair<std::int64_t, double>> summary;  // identity -> (count, max |residual|)
  std::string table = ctx.out.csv_preamble(seed_list(seeds)) + "seed,identity,pair,k1,k2,residual\n";
  Json singular = Json::array();
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (slots[k].singular) singular.push_back({{"seed", seeds[k]}, {"stopped_at_singular", *slots[k].singular}});
    for (const Row& r : slots[k].rows) {
      auto& entry = summary[r.identity];
      ++entry.first;
      entry.second = std::max(entry.second, std::abs(r.residual));
      table += std::to_string(r.seed) + "," + r.identity + "," + std::to_string(r.pair) + "," + std::to_string(r.k1) +
               "," + std::to_string(r.k2) + "," + format_real(r.residual) + "\n";
    }
    if (slots[k].log && ctx.cfg.boolean("output.events")) {
      std::ostringstream os;
      write_jsonl(os, *slots[k].log, ctx.out.header_extra(seeds[k]));
      ctx.out.write(event_file(seeds[k], ""), os.str());
    }
  }
  Json identities = Json::object();
  for (const auto& [name, entry] : summary) {
    identities[name] = {{"intervals", entry.first}, {"max_abs_residual", entry.second}, {"zeroed", entry.second < tol}};
  }
  int zeroing = 0;
  Json weights = Json::array();
  for (FloorWeight w : {FloorWeight::PrintedTwoJ, FloorWeight::Unit}) {
    const auto it = summary.find(std::string("sum-lowest-") + to_string(w));
    const bool zeroed = it != summary.end() && it->second.first > 0 && it->second.second < tol;
    zeroing += zeroed ? 1 : 0;
    if (zeroed) weights.push_back(to_string(w));
  }
  ctx.results["identities"] = identities;
  ctx.results["zeroing_floor_weights"] = weights;
  ctx.results["singular"] = singular;
  ctx.out.write("tables/residuals.csv", table);
  for (const char* name : {"sandwich", "sum-general"}) {
    const auto it = summary.find(name);
    if (it != summary.end() && !(it->second.second < tol)) {
      ctx.red_flags.push_back(std::string(name) + " residual above tolerance");
    }
  }
  if (zeroing != 1) ctx.red_flags.push_back("floor-weight adjudication did not single out one variant");
}

}  // namespace

const char* to_string(ExperimentKind k) noexcept {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(const std::string& name) {
  for (const auto& [kind, n] : kKindNames) {
    if (name == n) return kind;
  }
  return std::nullopt;
}

const char* to_string(ValueType t) noexcept {
  switch (t) {
    case ValueType::Real: return "real";
    case ValueType::Int: return "int";
    case ValueType::Bool: return "bool";
    case ValueType::String: return "string";
    case ValueType::RealList: return "real list";
    case ValueType::IntList: return "int list";
  }
  return "unknown";
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"experiment", ValueType::String, "",
       "simulate | lyapunov | noncontraction | tau | heart | counts | sufficiency | wedge-equivalence | "
       "wedge-unfold | identity-check"},
      {"masses", ValueType::RealList, "", "m_1,...,m_N, strictly decreasing upwards; fractions like 3/7 allowed"},
      {"energy", ValueType::Real, "", "energy level c > 0"},
      {"seeds.count", ValueType::Int, "1", "number of orbits, seeded base .. base+count-1"},
      {"seeds.base", ValueType::Int, "0", "first seed"},
      {"seeds.list", ValueType::IntList, "", "explicit seeds, instead of count and base"},
      {"horizon.events", ValueType::Int, "", "number of collisions per orbit"},
      {"horizon.time", ValueType::Real, "", "flight time per orbit (simulate only)"},
      {"output.dir", ValueType::String, "fallball-out", "artifact directory, relative to FALLBALL_OUTPUT_ROOT if set"},
      {"output.events", ValueType::Bool, "true", "write per-seed events.jsonl files"},
      {"jobs", ValueType::Int, "1", "worker threads; results do not depend on it"},
      {"simulate.policy", ValueType::String, "stop", "singular events: stop | branch | proceed"},
      {"simulate.max_branch_depth", ValueType::Int, "4", "splits allowed under the branch policy"},
      {"simulate.eps_sing", ValueType::Real, "1e-10", "time window that makes two collisions simultaneous"},
      {"lyapunov.reorth_every", ValueType::Int, "1", "collisions between QR re-orthonormalizations"},
      {"lyapunov.pairing_tol", ValueType::Real, "1e-3", "allowed |lambda_i + lambda_{2N-1-i}|"},
      {"noncontraction.n_max", ValueType::Int, "1000", "largest iterate"},
      {"noncontraction.vectors", ValueType::Int, "1000", "closed-cone unit vectors per orbit"},
      {"noncontraction.boundary_fraction", ValueType::Real, "0.25", "share of vectors on the cone boundary"},
      {"noncontraction.ratio_limit", ValueType::Real, "2", "allowed min(n <= n_max/2) / min(n > n_max/2)"},
      {"tau.e0", ValueType::Real, "1", "Q level to exceed"},
      {"tau.cutoff_events", ValueType::Int, "10000", "collisions before giving up"},
      {"tau.vectors", ValueType::Int, "256", "sampled cone vectors per orbit"},
      {"tau.boundary_fraction", ValueType::Real, "0.5", "share of vectors on the cone boundary"},
      {"heart.stability_tol", ValueType::Real, "0.1", "allowed relative change of C_i between H/2 and H"},
      {"counts.window", ValueType::Real, "1", "window length T"},
      {"counts.sliding", ValueType::Bool, "false", "sliding windows instead of tiled ones"},
      {"counts.stability_tol", ValueType::Real, "0.1", "allowed relative growth of the window maximum"},
      {"counts.window_table", ValueType::Bool, "false", "write every tiled window to tables/windows.csv"},
      {"sufficiency.threshold", ValueType::Real, "3", "sigma level that makes a point sufficient"},
      {"sufficiency.n_cap", ValueType::Int, "1000", "largest iterate searched"},
      {"identity.intervals", ValueType::Int, "1000", "intervals sampled per identity, pair and seed"},
      {"identity.tolerance", ValueType::Real, "1e-9", "residual counted as zero"},
      {"wedge.tolerance", ValueType::Real, "1e-9", "allowed wedge/ball disagreement"},
      {"wedge.delta0", ValueType::Real, "1e-3", "largest approach offset"},
      {"wedge.halvings", ValueType::Int, "6", "number of halvings of the offset"},
      {"wedge.slope_tol", ValueType::Real, "0.2", "allowed |slope - 1|"},
  };
  return schema;
}

std::vector<std::string> required_keys(ExperimentKind kind) {
  std::vector<std::string> keys = {"experiment", "masses"};
  if (kind != ExperimentKind::WedgeUnfold) keys.push_back("energy");
  if (any_of_kinds(kind, {ExperimentKind::Lyapunov, ExperimentKind::Heart, ExperimentKind::Counts,
                          ExperimentKind::WedgeEquivalence, ExperimentKind::IdentityCheck})) {
    keys.push_back("horizon.events");
  }
  return keys;
}

ConfigError::ConfigError(Errc code, int line, const std::string& message)
    : Error(code, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + message), line_(line) {}

double ExperimentConfig::real(const std::string& key) const { return *parse_real(text(key)); }

std::int64_t ExperimentConfig::integer(const std::string& key) const {
  return *parse_number<std::int64_t>(text(key));
}

bool ExperimentConfig::boolean(const std::string& key) const { return *parse_bool(text(key)); }

const std::string& ExperimentConfig::text(const std::string& key) const {
  const auto it = values.find(key);
  if (it == values.end()) throw Error(Errc::MissingRequired, key);
  return it->second;
}

std::string ExperimentConfig::hash() const {
  std::string canon;
  for (const auto& [k, v] : values) {
    if (k == "jobs" || k == "output.dir") continue;
    canon += k + " = " + v + "\n";
  }
  return fnv1a(canon);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, int> lines;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(Errc::ParseError, line_no, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const ConfigKey* spec = find_key(key);
    if (!spec) throw ConfigError(Errc::UnknownKey, line_no, "unknown key '" + key + "'");
    if (lines.count(key)) throw ConfigError(Errc::ParseError, line_no, "duplicate key '" + key + "'");
    if (!well_typed(spec->type, value)) {
      throw ConfigError(Errc::TypeMismatch, line_no, "'" + key + "' expects " + to_string(spec->type));
    }
    lines[key] = line_no;
    cfg.values[key] = canonical(spec->type, value);
  }

  if (!cfg.has("experiment")) throw ConfigError(Errc::MissingRequired, 0, "missing 'experiment'");
  const auto kind = parse_experiment_kind(cfg.text("experiment"));
  if (!kind) throw ConfigError(Errc::TypeMismatch, lines["experiment"], "unknown experiment '" + cfg.text("experiment") + "'");
  cfg.kind = *kind;
  for (const auto& key : required_keys(cfg.kind)) {
    if (!cfg.has(key)) {
      throw ConfigError(Errc::MissingRequired, 0, "'" + key + "' is required for " + to_string(cfg.kind));
    }
  }
  if (cfg.kind == ExperimentKind::Simulate && !cfg.has("horizon.events") && !cfg.has("horizon.time")) {
    throw ConfigError(Errc::MissingRequired, 0, "simulate needs horizon.events or horizon.time");
  }
  if (cfg.has("horizon.time") && cfg.kind != ExperimentKind::Simulate) {
    throw ConfigError(Errc::UnknownKey, lines["horizon.time"], "horizon.time applies to simulate only");
  }
  if (cfg.has("seeds.list") && (cfg.has("seeds.count") || cfg.has("seeds.base"))) {
    throw ConfigError(Errc::ParseError, lines["seeds.list"], "seeds.list excludes seeds.count and seeds.base");
  }
  if (cfg.has("seeds.list") && any_of_kinds(cfg.kind, {ExperimentKind::Noncontraction, ExperimentKind::Tau})) {
    throw ConfigError(Errc::TypeMismatch, lines["seeds.list"], "this experiment takes seeds.count and seeds.base");
  }
  for (const auto& k : config_schema()) {
    if (!k.default_value.empty() && !cfg.has(k.name)) cfg.values[k.name] = k.default_value;
  }

  for (const auto& item : split_list(cfg.text("masses"))) cfg.masses.push_back(*parse_real(item));
  if (cfg.has("energy")) cfg.energy = cfg.real("energy");
  if (cfg.has("seeds.list")) {
    for (const auto& item : split_list(cfg.text("seeds.list"))) cfg.seeds.push_back(*parse_number<std::uint64_t>(item));
  } else {
    const std::int64_t count = cfg.integer("seeds.count");
    const std::int64_t base = cfg.integer("seeds.base");
    if (count < 1) throw ConfigError(Errc::TypeMismatch, lines["seeds.count"], "seeds.count must be positive");
    if (base < 0) throw ConfigError(Errc::TypeMismatch, lines["seeds.base"], "seeds.base must be non-negative");
    for (std::int64_t k = 0; k < count; ++k) cfg.seeds.push_back(static_cast<std::uint64_t>(base + k));
  }
  if (cfg.has("horizon.events")) {
    cfg.horizon_events = cfg.integer("horizon.events");
    if (cfg.horizon_events < 0) throw ConfigError(Errc::TypeMismatch, lines["horizon.events"], "must be >= 0");
  }
  if (cfg.has("horizon.time")) {
    cfg.horizon_time = cfg.real("horizon.time");
    if (!(cfg.horizon_time >= 0.0)) throw ConfigError(Errc::TypeMismatch, lines["horizon.time"], "must be >= 0");
  }
  const std::string policy = cfg.text("simulate.policy");
  if (policy != "stop" && policy != "branch" && policy != "proceed") {
    throw ConfigError(Errc::TypeMismatch, lines["simulate.policy"], "policy must be stop, branch or proceed");
  }
  cfg.jobs = static_cast<int>(cfg.integer("jobs"));
  if (cfg.jobs < 1) throw ConfigError(Errc::TypeMismatch, lines["jobs"], "jobs must be positive");
  cfg.output_dir = cfg.text("output.dir");

  // Mass and energy validation of the physical model.
  const MassConfig mc = make_mass_config(std::span<const double>(cfg.masses), cfg.has("energy") ? cfg.energy : 1.0);
  if (any_of_kinds(cfg.kind, {ExperimentKind::WedgeEquivalence, ExperimentKind::WedgeUnfold}) && mc.size() != 3) {
    throw ConfigError(Errc::TypeMismatch, lines["masses"], "wedge experiments need exactly three masses");
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  fs::path root = cfg.output_dir;
  if (root.is_relative()) {
    if (const char* env = std::getenv("FALLBALL_OUTPUT_ROOT"); env && *env) root = fs::path(env) / root;
  }
  const std::string hash = cfg.hash();
  const ArtifactWriter out(root, hash);
  // wedge-unfold only needs the masses; any positive energy will do.
  const MassConfig masses = make_mass_config(std::span<const double>(cfg.masses), cfg.energy > 0.0 ? cfg.energy : 1.0);

  RunResult result;
  result.output_dir = root;
  Json results = Json::object();
  Context ctx{cfg, masses, out, results, result.red_flags};
  switch (cfg.kind) {
    case ExperimentKind::Simulate: run_simulate(ctx); break;
    case ExperimentKind::Lyapunov: run_lyapunov(ctx); break;
    case ExperimentKind::Noncontraction: run_noncontraction(ctx); break;
    case ExperimentKind::Tau: run_tau(ctx); break;
    case ExperimentKind::Heart: run_heart(ctx); break;
    case ExperimentKind::Counts: run_counts(ctx); break;
    case ExperimentKind::Sufficiency: run_sufficiency(ctx); break;
    case ExperimentKind::WedgeEquivalence: run_wedge_equivalence(ctx); break;
    case ExperimentKind::WedgeUnfold: run_wedge_unfold(ctx); break;
    case ExperimentKind::IdentityCheck: run_identity_check(ctx); break;
  }
  result.exit_code = result.red_flags.empty() ? 0 : 1;

  Json config = Json::object();
  for (const auto& [k, v] : cfg.values) config[k] = v;
  Json report = {{"version", kVersion},
                 {"timestamp", utc_timestamp()},
                 {"config_hash", hash},
                 {"experiment", to_string(cfg.kind)},
                 {"seeds", cfg.seeds},
                 {"config", config},
                 {"status", result.red_flags.empty() ? "ok" : "red_flag"},
                 {"red_flags", result.red_flags},
                 {"results", results}};
  out.write("report.json", report.dump(2) + "\n");
  return result;
}

}  // namespace fallball
