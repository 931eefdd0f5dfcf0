#pragma once

#include "fallball/simulation.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace fallball {

/// Compact event record for long runs: time, kind and the pre-collision
/// approach speed (v_i^- - v_{i+1}^- for pair i, -v_1^- for the floor).
struct EventStamp {
  double t = 0.0;
  int kind = 0;  ///< CollisionKind::index
  double gap = 0.0;
};

EventStamp make_stamp(const CollisionEvent& ev);
std::vector<EventStamp> stamps(const EventLog& log);

/// Marks of one collision pattern: Pair(1), Pair(2), ..., Pair(N-1), Floor,
/// Pair(N-1), ..., Pair(1), each the first of its kind after the previous mark.
struct PatternBracket {
  std::vector<std::size_t> indices;  ///< event indices of the 2N-1 marks
  std::vector<double> times;

  std::size_t start() const { return indices.front(); }
  std::size_t end() const { return indices.back(); }
  double t_start() const { return times.front(); }
  double t_end() const { return times.back(); }
  std::size_t floor_index() const { return indices[indices.size() / 2]; }
};

/// Greedy forward scan starting at event `from`. Throws Incomplete if the
/// log ends before the pattern closes.
PatternBracket find_pattern_bracket(const std::vector<EventStamp>& events, int n_balls, std::size_t from);
PatternBracket find_pattern_bracket(const EventLog& log, std::size_t from);

/// One bracket per Pair(1) event that opens a complete pattern. Brackets may
/// overlap. Singular cascades need no special casing: the scan reads marks in
/// index order, which on a branch log is the collision order of that branch.
std::vector<PatternBracket> find_all_brackets(const std::vector<EventStamp>& events, int n_balls,
                                              std::size_t end_index);

struct PairPartition {
  int pair = 0;
  std::vector<std::size_t> indices;  ///< bracket start, Pair(i) events strictly inside, bracket end
  std::vector<double> times;
};

PairPartition build_partition(const std::vector<EventStamp>& events, const PatternBracket& bracket, int pair);
PairPartition build_partition(const EventLog& log, const PatternBracket& bracket, int pair);

/// Number of Pair(i) events with index in [begin, end). Half-open ranges make
/// counts over adjacent partition cells add up exactly.
std::int64_t count_between(const std::vector<EventStamp>& events, int pair, std::size_t begin, std::size_t end);
std::int64_t count_between(const EventLog& log, int pair, std::size_t begin, std::size_t end);

/// Weight of the k-th full floor return inside the lowest-pair expansion:
/// PrintedTwoJ uses 2 * 2k * v_1^+, Unit uses 2 * v_1^+.
enum class FloorWeight { PrintedTwoJ, Unit };

const char* to_string(FloorWeight w) noexcept;

struct ExpansionVariant {
  enum class Kind { General, Lowest } kind = Kind::General;
  int pair = 1;
  FloorWeight weight = FloorWeight::Unit;

  static ExpansionVariant general(int i) { return {Kind::General, i, FloorWeight::Unit}; }
  static ExpansionVariant lowest(FloorWeight w) { return {Kind::Lowest, 1, w}; }
};

/// RHS - LHS of the backward expansion of the gap v_i^- - v_{i+1}^- at event
/// k2 to the post-collision gap at event k1, where k1 < k2 are consecutive
/// Pair(i) events. General(i) adds (1 + gamma_{i-1}) times each (i-1, i)
/// approach speed and (1 - gamma_{i+1}) times each (i+1, i+2) approach speed,
/// with the floor acting as pair 0 with gamma_0 = 1. Lowest needs at least one
/// floor collision in between and splits the floor terms into the first fall
/// 2 sqrt(v_1^+(t1)^2 + 2 q_1(t1)) and weighted full returns.
/// Throws WrongVariant when the interval does not fit the variant.
double expansion_residual(const EventLog& log, const ExpansionVariant& variant, std::size_t k1, std::size_t k2);

/// Single-step form: the gap at Pair(i) event k against the gaps just before
/// the last (i-1, i) or (i+1, i+2) collision since the previous Pair(i)
/// event. Empty when no such collision exists.
std::optional<double> sandwich_residual(const EventLog& log, std::size_t k);

/// Indices of Pair(i) events in order.
std::vector<std::size_t> pair_event_indices(const EventLog& log, int pair);

/// Number of full floor returns (floor events after the first) between k1 and k2.
int floor_returns_between(const EventLog& log, std::size_t k1, std::size_t k2);

struct GapTrace {
  std::vector<std::vector<std::pair<double, double>>> gaps;  ///< per pair: (time, approach speed)
  std::vector<std::vector<double>> bracket_max;              ///< per pair: max approach speed in each bracket
  std::vector<double> empirical_c;                           ///< per pair: minimum over brackets
};

/// Gaps of the first `end_index` events, with brackets fully inside that range.
GapTrace gap_trace(const std::vector<EventStamp>& events, int n_balls, std::size_t end_index);
GapTrace gap_trace(const EventLog& log);

struct HeartReport {
  std::vector<double> c_half;   ///< per pair, horizon / 2
  std::vector<double> c_full;   ///< per pair, full horizon
  std::vector<double> stability;  ///< |c_full - c_half| / c_half
  std::vector<std::uint64_t> seeds;
  std::int64_t horizon = 0;
  std::size_t brackets = 0;
  std::int64_t singular_events = 0;
  bool red_flag = false;  ///< some C_i is zero
};

/// Empirical lower bound of bracket maxima over all seeds at the horizon and
/// at half of it. Singular events are resolved in place and counted.
HeartReport heart_probe(const MassConfig& cfg, const std::vector<std::uint64_t>& seeds, std::int64_t horizon,
                        int jobs = 1);

struct WindowRow {
  double start = 0.0;
  std::int64_t pair_count = 0;
  std::int64_t floor_count = 0;
};

struct CountReport {
  double window = 1.0;
  bool sliding = false;
  std::int64_t max_pair = 0;
  double max_pair_start = 0.0;
  std::int64_t max_floor = 0;
  std::vector<WindowRow> rows;  ///< tiled windows only
};

/// Pair-collision counts per window of length T, tiled from t0 or sliding.
/// Floor counts are reported alongside without any bound.
CountReport collision_count_probe(const std::vector<EventStamp>& events, double t0, double window, bool sliding,
                                  bool keep_rows = true);
CountReport collision_count_probe(const EventLog& log, double window, bool sliding = false);

struct SufficiencyResult {
  bool exceeded = false;  ///< no n <= n_cap passed the threshold
  std::int64_t n = 0;
  double sigma = 0.0;         ///< sigma after n events (or at the cap)
  double sigma_before = 1.0;  ///< sigma after n - 1 events
};

/// Smallest n <= n_cap with sigma(d_xT^n) > threshold, using the exact
/// spectral sigma. Throws SingularEncountered(n) when the orbit meets a
/// singular event before the threshold is passed.
SufficiencyResult sufficiency_search(const MassConfig& cfg, const BallState& x, double threshold = 3.0,
                                     std::int64_t n_cap = 1000);

/// Backward clause at the end of a log: smallest k with sigma' of the inverse
/// cocycle over the last k events above the threshold.
SufficiencyResult sufficiency_search_backward(const MassConfig& cfg, const EventLog& log, double threshold = 3.0,
                                              std::int64_t n_cap = 1000);

}  // namespace fallball
