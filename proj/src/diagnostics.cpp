#include "fallball/diagnostics.hpp"

#include "fallball/parallel.hpp"
#include "fallball/sigma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fallball {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Kinds visited by a bracket: 1, 2, ..., N-1, 0, N-1, ..., 1.
std::vector<int> bracket_pattern(int n_balls) {
  std::vector<int> kinds;
  for (int i = 1; i < n_balls; ++i) kinds.push_back(i);
  kinds.push_back(0);
  for (int i = n_balls - 1; i >= 1; --i) kinds.push_back(i);
  return kinds;
}

// next[k][j]: first index >= j whose kind is k.
std::vector<std::vector<std::size_t>> next_table(const std::vector<EventStamp>& events, int n_balls,
                                                 std::size_t end_index) {
  std::vector<std::vector<std::size_t>> next(static_cast<std::size_t>(n_balls),
                                             std::vector<std::size_t>(end_index + 1, kNone));
  for (std::size_t j = end_index; j-- > 0;) {
    for (int k = 0; k < n_balls; ++k) next[k][j] = next[k][j + 1];
    next[events[j].kind][j] = j;
  }
  return next;
}

double approach(const CollisionEvent& ev) {
  if (ev.kind.is_floor()) return -ev.v_pre[0];
  return ev.v_pre[ev.kind.index - 1] - ev.v_pre[ev.kind.index];
}

double pre_gap(const CollisionEvent& ev, int pair) { return ev.v_pre[pair - 1] - ev.v_pre[pair]; }
double post_gap(const CollisionEvent& ev, int pair) { return ev.v_post[pair - 1] - ev.v_post[pair]; }

void require_consecutive(const EventLog& log, int pair, std::size_t k1, std::size_t k2) {
  if (!(k1 < k2) || k2 >= log.events.size()) throw Error(Errc::WrongVariant, "need k1 < k2 inside the log");
  if (log.events[k1].kind.index != pair || log.events[k2].kind.index != pair) {
    throw Error(Errc::WrongVariant, "endpoints are not pair(" + std::to_string(pair) + ") events");
  }
  for (std::size_t k = k1 + 1; k < k2; ++k) {
    if (log.events[k].kind.index == pair) {
      throw Error(Errc::WrongVariant, "pair(" + std::to_string(pair) + ") event inside the interval");
    }
  }
}

}  // namespace

EventStamp make_stamp(const CollisionEvent& ev) { return {ev.t, ev.kind.index, approach(ev)}; }

std::vector<EventStamp> stamps(const EventLog& log) {
  std::vector<EventStamp> out;
  out.reserve(log.events.size());
  for (const auto& ev : log.events) out.push_back(make_stamp(ev));
  return out;
}

PatternBracket find_pattern_bracket(const std::vector<EventStamp>& events, int n_balls, std::size_t from) {
  PatternBracket b;
  std::size_t j = from;
  for (int kind : bracket_pattern(n_balls)) {
    while (j < events.size() && events[j].kind != kind) ++j;
    if (j >= events.size()) throw Error(Errc::Incomplete, "log ends before the collision pattern closes");
    b.indices.push_back(j);
    b.times.push_back(events[j].t);
    ++j;
  }
  return b;
}

PatternBracket find_pattern_bracket(const EventLog& log, std::size_t from) {
  return find_pattern_bracket(stamps(log), log.config.size(), from);
}

std::vector<PatternBracket> find_all_brackets(const std::vector<EventStamp>& events, int n_balls,
                                              std::size_t end_index) {
  end_index = std::min(end_index, events.size());
  const auto next = next_table(events, n_balls, end_index);
  const std::vector<int> pattern = bracket_pattern(n_balls);
  std::vector<PatternBracket> out;
  for (std::size_t p = 0; p < end_index; ++p) {
    if (events[p].kind != 1) continue;
    PatternBracket b;
    std::size_t j = p;
    bool complete = true;
    for (int kind : pattern) {
      j = next[kind][j];
      if (j == kNone) {
        complete = false;
        break;
      }
      b.indices.push_back(j);
      b.times.push_back(events[j].t);
      ++j;
    }
    if (!complete) break;  // later starts cannot close either
    out.push_back(std::move(b));
  }
  return out;
}

PairPartition build_partition(const std::vector<EventStamp>& events, const PatternBracket& bracket, int pair) {
  PairPartition p;
  p.pair = pair;
  p.indices.push_back(bracket.start());
  for (std::size_t k = bracket.start() + 1; k < bracket.end(); ++k) {
    if (events[k].kind == pair) p.indices.push_back(k);
  }
  p.indices.push_back(bracket.end());
  for (std::size_t k : p.indices) p.times.push_back(events[k].t);
  return p;
}

PairPartition build_partition(const EventLog& log, const PatternBracket& bracket, int pair) {
  return build_partition(stamps(log), bracket, pair);
}

std::int64_t count_between(const std::vector<EventStamp>& events, int pair, std::size_t begin, std::size_t end) {
  end = std::min(end, events.size());
  std::int64_t c = 0;
  for (std::size_t k = begin; k < end; ++k) c += events[k].kind == pair;
  return c;
}

std::int64_t count_between(const EventLog& log, int pair, std::size_t begin, std::size_t end) {
  end = std::min(end, log.events.size());
  std::int64_t c = 0;
  for (std::size_t k = begin; k < end; ++k) c += log.events[k].kind.index == pair;
  return c;
}

const char* to_string(FloorWeight w) noexcept {
  return w == FloorWeight::PrintedTwoJ ? "printed-2j" : "unit";
}

double expansion_residual(const EventLog& log, const ExpansionVariant& variant, std::size_t k1, std::size_t k2) {
  const MassConfig& cfg = log.config;
  const int i = variant.pair;
  const int n = cfg.size();
  if (i < 1 || i >= n) throw Error(Errc::WrongVariant, "pair index out of range");
  require_consecutive(log, i, k1, k2);
  const CollisionEvent& first = log.events[k1];
  const double lhs = pre_gap(log.events[k2], i);
  double rhs = post_gap(first, i);

  if (variant.kind == ExpansionVariant::Kind::General) {
    const double lower_coef = 1.0 + (i == 1 ? 1.0 : cfg.gamma(i - 1));
    const double upper_coef = i + 1 < n ? 1.0 - cfg.gamma(i + 1) : 0.0;
    for (std::size_t k = k1 + 1; k < k2; ++k) {
      const CollisionEvent& ev = log.events[k];
      if (ev.kind.index == i - 1) rhs += lower_coef * approach(ev);
      if (ev.kind.index == i + 1) rhs += upper_coef * approach(ev);
    }
    return rhs - lhs;
  }

  if (i != 1) throw Error(Errc::WrongVariant, "the lowest-pair expansion is for pair(1)");
  const double upper_coef = n > 2 ? 1.0 - cfg.gamma(2) : 0.0;
  int floors = 0;
  for (std::size_t k = k1 + 1; k < k2; ++k) {
    const CollisionEvent& ev = log.events[k];
    if (ev.kind.is_floor()) {
      if (floors == 0) {
        const double v = first.v_post[0];
        rhs += 2.0 * std::sqrt(v * v + 2.0 * first.q_at[0]);
      } else {
        const double weight = variant.weight == FloorWeight::PrintedTwoJ ? 2.0 * floors : 1.0;
        rhs += 2.0 * weight * ev.v_post[0];
      }
      ++floors;
    } else if (ev.kind.index == 2) {
      rhs += upper_coef * approach(ev);
    }
  }
  if (floors == 0) throw Error(Errc::WrongVariant, "no floor collision between the two pair(1) events");
  return rhs - lhs;
}

std::optional<double> sandwich_residual(const EventLog& log, std::size_t k) {
  const CollisionEvent& ev = log.events.at(k);
  if (ev.kind.is_floor()) return std::nullopt;
  const int i = ev.kind.index;
  const int n = log.config.size();
  for (std::size_t c = k; c-- > 0;) {
    const CollisionEvent& prev = log.events[c];
    if (prev.kind.index == i) return std::nullopt;
    const bool lower = prev.kind.index == i - 1;
    const bool upper = prev.kind.index == i + 1 && i + 1 < n;
    if (!lower && !upper) continue;
    const double coef = lower ? 1.0 + (i == 1 ? 1.0 : log.config.gamma(i - 1)) : 1.0 - log.config.gamma(i + 1);
    return coef * approach(prev) + pre_gap(prev, i) - pre_gap(ev, i);
  }
  return std::nullopt;
}

std::vector<std::size_t> pair_event_indices(const EventLog& log, int pair) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < log.events.size(); ++k) {
    if (log.events[k].kind.index == pair) out.push_back(k);
  }
  return out;
}

int floor_returns_between(const EventLog& log, std::size_t k1, std::size_t k2) {
  int floors = 0;
  for (std::size_t k = k1 + 1; k < k2 && k < log.events.size(); ++k) floors += log.events[k].kind.is_floor();
  return std::max(0, floors - 1);
}

GapTrace gap_trace(const std::vector<EventStamp>& events, int n_balls, std::size_t end_index) {
  end_index = std::min(end_index, events.size());
  const std::size_t pairs = static_cast<std::size_t>(n_balls - 1);
  GapTrace trace;
  trace.gaps.resize(pairs);
  trace.bracket_max.resize(pairs);
  trace.empirical_c.assign(pairs, std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < end_index; ++k) {
    if (events[k].kind > 0) trace.gaps[events[k].kind - 1].emplace_back(events[k].t, events[k].gap);
  }
  for (const PatternBracket& b : find_all_brackets(events, n_balls, end_index)) {
    std::vector<double> best(pairs, -std::numeric_limits<double>::infinity());
    for (std::size_t k = b.start(); k <= b.end(); ++k) {
      const int kind = events[k].kind;
      if (kind > 0) best[kind - 1] = std::max(best[kind - 1], events[k].gap);
    }
    for (std::size_t p = 0; p < pairs; ++p) {
      trace.bracket_max[p].push_back(best[p]);
      trace.empirical_c[p] = std::min(trace.empirical_c[p], best[p]);
    }
  }
  return trace;
}

GapTrace gap_trace(const EventLog& log) {
  return gap_trace(stamps(log), log.config.size(), log.events.size());
}

HeartReport heart_probe(const MassConfig& cfg, const std::vector<std::uint64_t>& seeds, std::int64_t horizon,
                        int jobs) {
  const std::size_t pairs = static_cast<std::size_t>(cfg.size() - 1);
  struct SeedResult {
    std::vector<double> c_half, c_full;
    std::size_t brackets = 0;
    std::int64_t singular = 0;
  };
  std::vector<SeedResult> results(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t s) {
    std::vector<EventStamp> ev;
    ev.reserve(static_cast<std::size_t>(horizon));
    SimulationOptions opts;
    opts.policy = SingularPolicy::Proceed;
    std::int64_t singular = 0;
    simulate_stream(cfg, sample_state(cfg, seeds[s]), Horizon::events(horizon), opts,
                    [&](const CollisionEvent& e, const BallState&) {
                      singular += e.is_singular();
                      ev.push_back(make_stamp(e));
                      return true;
                    });
    const GapTrace half = gap_trace(ev, cfg.size(), ev.size() / 2);
    const GapTrace full = gap_trace(ev, cfg.size(), ev.size());
    results[s] = {half.empirical_c, full.empirical_c, full.bracket_max.empty() ? 0 : full.bracket_max[0].size(),
                  singular};
  });
  HeartReport report;
  report.seeds = seeds;
  report.horizon = horizon;
  report.c_half.assign(pairs, std::numeric_limits<double>::infinity());
  report.c_full.assign(pairs, std::numeric_limits<double>::infinity());
  for (const SeedResult& r : results) {
    for (std::size_t p = 0; p < pairs; ++p) {
      report.c_half[p] = std::min(report.c_half[p], r.c_half[p]);
      report.c_full[p] = std::min(report.c_full[p], r.c_full[p]);
    }
    report.brackets += r.brackets;
    report.singular_events += r.singular;
  }
  for (std::size_t p = 0; p < pairs; ++p) {
    report.stability.push_back(std::abs(report.c_full[p] - report.c_half[p]) / report.c_half[p]);
    if (!(report.c_full[p] > 0.0) || !std::isfinite(report.c_full[p])) report.red_flag = true;
  }
  return report;
}

CountReport collision_count_probe(const std::vector<EventStamp>& events, double t0, double window, bool sliding,
                                  bool keep_rows) {
  CountReport r;
  r.window = window;
  r.sliding = sliding;
  r.max_pair_start = t0;
  if (events.empty()) return r;
  if (!sliding) {
    std::int64_t current = -1;
    WindowRow row;
    auto flush = [&] {
      if (current < 0) return;
      if (row.pair_count > r.max_pair) {
        r.max_pair = row.pair_count;
        r.max_pair_start = row.start;
      }
      r.max_floor = std::max(r.max_floor, row.floor_count);
      if (keep_rows) r.rows.push_back(row);
    };
    for (const EventStamp& e : events) {
      const auto w = static_cast<std::int64_t>(std::floor((e.t - t0) / window));
      while (current < w) {
        flush();
        ++current;
        row = {t0 + static_cast<double>(current) * window, 0, 0};
      }
      (e.kind == 0 ? row.floor_count : row.pair_count) += 1;
    }
    flush();
    return r;
  }
  // Windows [t, t + T) starting at an event of the counted kind attain the maximum.
  for (int floor_pass = 0; floor_pass < 2; ++floor_pass) {
    std::vector<double> times;
    for (const EventStamp& e : events) {
      if ((e.kind == 0) == (floor_pass == 1)) times.push_back(e.t);
    }
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < times.size(); ++lo) {
      hi = std::max(hi, lo);
      while (hi < times.size() && times[hi] < times[lo] + window) ++hi;
      const auto count = static_cast<std::int64_t>(hi - lo);
      if (floor_pass == 1) {
        r.max_floor = std::max(r.max_floor, count);
      } else if (count > r.max_pair) {
        r.max_pair = count;
        r.max_pair_start = times[lo];
      }
    }
  }
  return r;
}

CountReport collision_count_probe(const EventLog& log, double window, bool sliding) {
  return collision_count_probe(stamps(log), log.initial.t, window, sliding);
}

// Relative margin a sigma must clear above the threshold. The spectral route
// resolves a defective eigenvalue only to about this level, so a product
// whose sigma is exactly 1 can otherwise read as marginally above it.
constexpr double kThresholdMargin = 1e-9;

SufficiencyResult sufficiency_search(const MassConfig& cfg, const BallState& x, double threshold,
                                     std::int64_t n_cap) {
  EventLog log;
  log.config = cfg;
  log.initial = x;
  std::optional<std::int64_t> singular_at;
  SimulationOptions opts;
  opts.policy = SingularPolicy::Stop;
  try {
    simulate_stream(cfg, x, Horizon::events(n_cap), opts, [&](const CollisionEvent& ev, const BallState&) {
      log.events.push_back(ev);
      return true;
    });
  } catch (const SingularOrbitError& e) {
    singular_at = e.event_index();
  }
  const double log_threshold = std::log(threshold) + kThresholdMargin;
  SufficiencyResult result;
  std::size_t done = 0;
  std::size_t chunk = 16;
  while (done < log.events.size()) {
    const std::size_t upto = std::min(log.events.size(), std::max(chunk, done + 1));
    const SigmaProfile prof = least_expansion_profile(cfg, log, 0, upto);
    for (std::size_t k = done; k < upto; ++k) {
      if (prof.log_sigma[k] > log_threshold) {
        result.n = static_cast<std::int64_t>(k) + 1;
        result.sigma = std::exp(prof.log_sigma[k]);
        result.sigma_before = k == 0 ? 1.0 : std::exp(prof.log_sigma[k - 1]);
        return result;
      }
    }
    if (upto > 0) result.sigma = std::exp(prof.log_sigma[upto - 1]);
    done = upto;
    chunk *= 2;
  }
  if (singular_at) {
    throw Error(Errc::SingularEncountered, "singular event at n=" + std::to_string(*singular_at) +
                                                " before sigma passed " + std::to_string(threshold));
  }
  result.exceeded = true;
  result.n = n_cap;
  return result;
}

SufficiencyResult sufficiency_search_backward(const MassConfig& cfg, const EventLog& log, double threshold,
                                              std::int64_t n_cap) {
  const double log_threshold = std::log(threshold) + kThresholdMargin;
  const std::size_t size = log.events.size();
  const std::size_t cap = std::min<std::size_t>(size, static_cast<std::size_t>(n_cap));
  SufficiencyResult result;
  double previous = 0.0;
  for (std::size_t k = 1; k <= cap; ++k) {
    const double ls = log_least_expansion(cfg, log, size - k, size, true);
    if (ls > log_threshold) {
      result.n = static_cast<std::int64_t>(k);
      result.sigma = std::exp(ls);
      result.sigma_before = std::exp(previous);
      return result;
    }
    previous = ls;
  }
  result.exceeded = true;
  result.n = static_cast<std::int64_t>(cap);
  result.sigma = std::exp(previous);
  return result;
}

}  // namespace fallball
