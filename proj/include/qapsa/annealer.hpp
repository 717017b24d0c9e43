#pragma once

// Sequential simulated annealing over facility swaps.
//
// Iteration k proposes the pair at the cyclic row-major cursor, evaluates its
// delta (from Δ or from scratch), draws r = RandomStream(seed).uniform(k) and
// T = temperature_at(k), and accepts under
//     delta < 0  or  exp(-delta / T) > r.
// Everything per-iteration is a pure function of k, which is what lets the
// parallel engine evaluate proposals out of order and still reproduce this trace.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qapsa/core.hpp"
#include "qapsa/errors.hpp"
#include "qapsa/random_stream.hpp"

namespace qapsa {

/// Inverse-linear cooling T(k) = t0 / (1 + k·β·t0), with β chosen so that
/// T(0) = t0 and T(I − 1) = tf.
class Schedule {
 public:
  Schedule(double t0, double tf, std::uint64_t total_iters) : t0_(t0), tf_(tf), total_iters_(total_iters) {
    if (!(tf > 0.0)) throw ScheduleError("final temperature must be positive");
    if (!(t0 >= tf)) throw ScheduleError("initial temperature must be >= final temperature");
    if (total_iters == 0) throw ConfigError("iteration count must be at least 1");
    inv_t0_ = 1.0 / t0;
    beta_ = total_iters > 1 ? (t0 - tf) / (static_cast<double>(total_iters - 1) * t0 * tf) : 0.0;
  }

  double t0() const noexcept { return t0_; }
  double tf() const noexcept { return tf_; }
  std::uint64_t total_iters() const noexcept { return total_iters_; }
  double beta() const noexcept { return beta_; }

  double temperature_at(std::uint64_t k) const {
    if (k >= total_iters_)
      throw RangeError("iteration " + std::to_string(k) + " outside schedule of " + std::to_string(total_iters_));
    return temperature_unchecked(k);
  }

  double temperature_unchecked(std::uint64_t k) const noexcept {
    return t0_ / (1.0 + static_cast<double>(k) * beta_ * t0_);
  }

  /// 1 / T(k) to within a few ulp, without a division. Only for screening.
  double approx_inverse(std::uint64_t k) const noexcept {
    return (1.0 + static_cast<double>(k) * beta_ * t0_) * inv_t0_;
  }

 private:
  double t0_;
  double tf_;
  std::uint64_t total_iters_;
  double beta_ = 0.0;
  double inv_t0_ = 0.0;
};

namespace detail {

inline bool accepts(Cost delta, double temperature, double r) noexcept {
  return delta < 0 || std::exp(-static_cast<double>(delta) / temperature) > r;
}

// Bands of x = delta / T where exp(-x) > r is decided without evaluating exp.
// r is a multiple of 2^-53, and exp(-x) < 2^-53 once x >= 37, so there the
// test reduces to r == 0 (exp(-x) stays positive up to x ~ 745.13). Past 746
// exp(-x) is exactly 0 and nothing passes.
inline constexpr double kBelowResolution = 37.0;
inline constexpr double kPositiveUntil = 745.0;
inline constexpr double kExpUnderflow = 746.0;

/// Same decision as accepts(delta, T(k), stream.uniform(k)), evaluating T, r
/// and exp only when the outcome depends on them. x is first estimated with a
/// multiply; estimates near a band edge fall through to the exact division.
inline bool accepts_at(Cost delta, std::uint64_t k, const Schedule& schedule, const RandomStream& stream) noexcept {
  if (delta <= 0) return true;  // exp(-0) = 1 > r for every r in [0, 1)
  constexpr double lo = 1.0 - 1e-9, hi = 1.0 + 1e-9;
  const double estimate = static_cast<double>(delta) * schedule.approx_inverse(k);
  if (estimate > kExpUnderflow * hi) return false;
  if (estimate >= kBelowResolution * hi && estimate <= kPositiveUntil * lo)
    return stream.bits(static_cast<std::int64_t>(k)) >> 11 == 0;

  const double scaled = static_cast<double>(delta) / schedule.temperature_unchecked(k);
  if (scaled > kExpUnderflow) return false;
  const double r = stream.uniform(static_cast<std::int64_t>(k));
  if (scaled >= kBelowResolution && scaled <= kPositiveUntil) return r == 0.0;
  return std::exp(-scaled) > r;
}

}  // namespace detail

/// Swap acceptance rule. Note delta = 0 always passes since exp(0) = 1 > r.
inline bool accept(Cost delta, double temperature, double r) {
  if (!(temperature > 0.0)) throw ScheduleError("temperature must be positive");
  return detail::accepts(delta, temperature, r);
}

struct Candidate {
  std::size_t r;
  std::size_t s;
  std::size_t next_cursor;
};

/// Pair at `cursor` in row-major upper-triangle order; the cursor wraps.
inline Candidate next_candidate(std::size_t n, std::size_t cursor) {
  if (n < 2) throw SizeError("need at least two facilities");
  const std::size_t m = PairIndex::pair_count(n);
  cursor %= m;
  // invert cursor = r·(2n − r − 1)/2 + (s − r − 1) by walking rows
  std::size_t r = 0, row_start = 0;
  while (row_start + (n - r - 1) <= cursor) {
    row_start += n - r - 1;
    ++r;
  }
  return {r, r + 1 + (cursor - row_start), (cursor + 1) % m};
}

/// Seeded Fisher-Yates shuffle of the identity using stream indices -N..-2.
inline Permutation initial_permutation(std::size_t n, const RandomStream& stream) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  for (std::size_t i = n - 1; i >= 1; --i) {
    const auto j = stream.below(-static_cast<std::int64_t>(i + 1), i + 1);
    std::swap(p[i], p[j]);
  }
  return Permutation(std::move(p));
}

struct TemperatureRange {
  double t0;
  double tf;
};

/// Temperature bounds from the spread of |δ| over up to 1000 distinct random pairs:
/// t0 = dmin + (dmax − dmin)/10, tf = dmin (dmin = smallest nonzero |δ|).
/// Falls back to (1.0, 0.1) when every sampled delta is zero.
inline TemperatureRange init_temperature(const Instance& instance, const Permutation& perm,
                                         const RandomStream& stream) {
  SolverState probe(std::make_shared<const Instance>(instance), perm);
  const auto& pairs = probe.pairs();
  const std::size_t m = pairs.size();
  const std::size_t k = std::min<std::size_t>(1000, m);

  std::vector<std::size_t> slots(m);
  for (std::size_t i = 0; i < m; ++i) slots[i] = i;
  if (k < m) {
    for (std::size_t t = 0; t < k; ++t) {
      const auto j = t + stream.below(RandomStream::kTemperatureProbeBase + static_cast<std::int64_t>(t), m - t);
      std::swap(slots[t], slots[j]);
    }
    slots.resize(k);
  }

  Cost dmin = 0, dmax = 0;
  for (std::size_t slot : slots) {
    const Cost d = swap_delta(probe, pairs[slot].r, pairs[slot].s);
    const Cost mag = d < 0 ? -d : d;
    if (mag == 0) continue;
    dmin = dmin == 0 ? mag : std::min(dmin, mag);
    dmax = std::max(dmax, mag);
  }
  if (dmax == 0) return {1.0, 0.1};
  const auto lo = static_cast<double>(dmin);
  const auto hi = static_cast<double>(dmax);
  return {lo + (hi - lo) / 10.0, lo};
}

enum class Mode { scratch, delta, automatic };

inline Mode parse_mode(std::string_view text) {
  if (text == "scratch") return Mode::scratch;
  if (text == "delta" || text == "delta-seq") return Mode::delta;
  if (text == "auto") return Mode::automatic;
  throw ConfigError("unknown mode '" + std::string(text) + "' (expected scratch, delta or auto)");
}

inline std::string_view to_string(Mode mode) noexcept {
  switch (mode) {
    case Mode::scratch: return "scratch";
    case Mode::delta: return "delta";
    case Mode::automatic: return "auto";
  }
  return "?";
}

struct AnnealParams {
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
  /// Both or neither; when absent the range comes from init_temperature.
  std::optional<double> t0;
  std::optional<double> tf;
  Mode mode = Mode::delta;
  /// Overrides the seeded shuffle.
  std::optional<Permutation> initial_perm;
  /// auto mode: switch to Δ once the acceptance rate over the trailing
  /// `auto_window` proposals drops below `auto_threshold`.
  std::uint64_t auto_window = 10000;
  double auto_threshold = 0.1;
  bool record_trace = false;
};

struct AcceptedSwap {
  std::uint64_t iteration;
  std::size_t r;
  std::size_t s;
  Cost delta;
  friend bool operator==(const AcceptedSwap&, const AcceptedSwap&) = default;
};

struct RunStats {
  std::uint64_t iterations = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate = 0.0;
  Cost best_cost = 0;
  Cost final_cost = 0;
  Permutation best_perm;
  Permutation final_perm;
  double t0 = 0.0;
  double tf = 0.0;
  double wall_time = 0.0;  // seconds
  /// auto mode: first iteration evaluated with the Δ-matrix.
  std::optional<std::uint64_t> switched_to_delta_at;
  /// Filled only when AnnealParams::record_trace is set.
  std::vector<AcceptedSwap> trace;
};

/// Equality of everything except wall_time.
inline bool same_outcome(const RunStats& x, const RunStats& y) noexcept {
  return x.iterations == y.iterations && x.accepted == y.accepted && x.acceptance_rate == y.acceptance_rate &&
         x.best_cost == y.best_cost && x.final_cost == y.final_cost && x.best_perm == y.best_perm &&
         x.final_perm == y.final_perm && x.t0 == y.t0 && x.tf == y.tf && x.trace == y.trace;
}

namespace detail {

/// Shared setup of sequential and parallel runs.
struct RunSetup {
  SolverState state;
  Schedule schedule;
  RandomStream stream;
};

inline RunSetup prepare_run(std::shared_ptr<const Instance> instance, const AnnealParams& params) {
  if (!instance) throw ContractError("anneal needs an instance");
  if (params.iterations == 0) throw ConfigError("iteration count must be at least 1");
  if (params.t0.has_value() != params.tf.has_value())
    throw ConfigError("give both t0 and tf, or neither");
  const RandomStream stream(params.seed);
  Permutation start = params.initial_perm ? *params.initial_perm : initial_permutation(instance->n(), stream);
  detail::require_same_size(*instance, start);
  TemperatureRange range{};
  if (params.t0)
    range = {*params.t0, *params.tf};
  else
    range = init_temperature(*instance, start, stream);
  Schedule schedule(range.t0, range.tf, params.iterations);
  return {SolverState(std::move(instance), std::move(start)), schedule, stream};
}

class BestTracker {
 public:
  explicit BestTracker(const SolverState& state) : best_cost_(state.cost()), best_perm_(state.perm()) {}
  void observe(const SolverState& state) {
    if (state.cost() < best_cost_) {
      best_cost_ = state.cost();
      best_perm_ = state.perm();
    }
  }
  Cost cost() const noexcept { return best_cost_; }
  const Permutation& perm() const noexcept { return best_perm_; }

 private:
  Cost best_cost_;
  Permutation best_perm_;
};

inline void finish_stats(RunStats& stats, const SolverState& state, const BestTracker& best,
                         const Schedule& schedule, std::chrono::steady_clock::time_point start) {
  stats.iterations = schedule.total_iters();
  stats.acceptance_rate = static_cast<double>(stats.accepted) / static_cast<double>(stats.iterations);
  stats.best_cost = best.cost();
  stats.best_perm = best.perm();
  stats.final_cost = state.cost();
  stats.final_perm = state.perm();
  stats.t0 = schedule.t0();
  stats.tf = schedule.tf();
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  stats.wall_time = std::max(elapsed.count(), 1e-9);
}

}  // namespace detail

/// Runs exactly `params.iterations` proposals.
///
/// scratch evaluates each proposal in O(N) and works on any instance; delta
/// reads Δ and updates it after each accepted swap (symmetric zero-diagonal
/// instances only); auto starts in scratch and pays the O(N³) Δ
/// initialization once the trailing acceptance rate gets low. All three modes
/// produce the same accepted-swap sequence.
inline RunStats anneal(std::shared_ptr<const Instance> instance, const AnnealParams& params) {
  if (!instance) throw ContractError("anneal needs an instance");
  if (params.mode == Mode::delta) detail::require_fast_path(*instance);
  if (params.mode == Mode::automatic && (params.auto_window == 0 || params.auto_threshold < 0.0))
    throw ConfigError("auto mode needs a positive window and non-negative threshold");

  const auto start = std::chrono::steady_clock::now();
  auto [state, schedule, stream] = detail::prepare_run(std::move(instance), params);

  bool use_delta = params.mode == Mode::delta;
  if (use_delta) populate_delta(state);
  const bool may_switch = params.mode == Mode::automatic && state.instance().supports_fast_path();

  // auto mode bookkeeping
  std::vector<std::uint8_t> window(may_switch ? params.auto_window : 0, 0);
  std::uint64_t window_accepts = 0;
  const double switch_below = params.auto_threshold * static_cast<double>(params.auto_window);

  RunStats stats;
  detail::BestTracker best(state);
  const auto& pairs = state.pairs();
  const std::size_t pair_count = pairs.size();
  const auto& a = state.instance().a();
  const bool fast = state.instance().supports_fast_path();
  std::size_t cursor = 0;
  for (std::uint64_t k = 0; k < params.iterations; ++k) {
    if (may_switch && !use_delta && k >= params.auto_window &&
        static_cast<double>(window_accepts) < switch_below) {
      populate_delta(state);
      use_delta = true;
      stats.switched_to_delta_at = k;
    }

    const std::size_t slot = cursor;
    cursor = cursor + 1 == pair_count ? 0 : cursor + 1;
    const auto [r, s] = pairs[slot];
    const Cost delta = use_delta ? state.delta()[slot]
                       : fast    ? detail::symmetric_swap_delta(a, state.bprime(), r, s)
                                 : detail::general_swap_delta(a, state.bprime(), r, s);
    const bool accepted = detail::accepts_at(delta, k, schedule, stream);

    if (accepted) {
      if (use_delta) {
        const SwapSnapshot snap = take_snapshot(state, r, s);
        apply_swap(state, r, s, delta);
        update_delta_matrix(state, snap);
      } else {
        apply_swap(state, r, s, delta);
      }
      ++stats.accepted;
      best.observe(state);
      if (params.record_trace) stats.trace.push_back({k, r, s, delta});
    }

    if (may_switch && !use_delta) {
      auto& cell = window[k % params.auto_window];
      window_accepts += static_cast<std::uint64_t>(accepted) - cell;
      cell = static_cast<std::uint8_t>(accepted);
    }
  }

  detail::finish_stats(stats, state, best, schedule, start);
  return stats;
}

inline RunStats anneal(const Instance& instance, const AnnealParams& params) {
  return anneal(std::make_shared<const Instance>(instance), params);
}

}  // namespace qapsa
