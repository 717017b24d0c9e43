#pragma once

// Data-parallel annealing on a fixed team of W workers.
//
// Each accepted swap costs three barrier-delimited phases:
//   search  – workers scan disjoint slices of the next `chunk_size` proposals;
//             the earliest accepting proposal wins, later ones are discarded
//             and re-proposed on the new state
//   swap    – rows/columns r, s of B' are exchanged, split by facility row
//   update  – Δ slots are split into contiguous ranges of at least
//             `elems_per_worker` entries, each updated from the pre-swap snapshot
// Proposal k always uses T(k) and RandomStream(seed).uniform(k), so the result
// is the sequential delta-mode trace regardless of W or chunk size.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qapsa/annealer.hpp"
#include "qapsa/core.hpp"
#include "qapsa/errors.hpp"
#include "qapsa/random_stream.hpp"
#include "qapsa/worker_team.hpp"

namespace qapsa {

struct ParallelConfig {
  std::size_t workers = 1;
  /// Minimum Δ entries (and proposals) handled per worker.
  std::size_t elems_per_worker = 16;
  /// Proposals examined per search round; 0 means elems_per_worker · workers.
  std::size_t chunk_size = 0;
#ifdef NDEBUG
  bool verify = false;
#else
  bool verify = true;
#endif
  /// With `verify`: compare Δ against a full recompute every this many accepted swaps.
  std::uint64_t verify_every = 1000;

  std::size_t effective_chunk() const noexcept { return chunk_size != 0 ? chunk_size : elems_per_worker * workers; }

  void validate() const {
    if (workers < 1) throw ConfigError("worker count must be at least 1");
    if (elems_per_worker < 1) throw ConfigError("elements per worker must be at least 1");
    if (verify_every < 1) throw ConfigError("verification interval must be at least 1");
  }
};

/// Earliest accepting proposal within a scanned slice.
struct ChunkVerdict {
  bool found = false;
  std::optional<Pair> pair;
  std::uint64_t iteration = 0;
  Cost delta = 0;
  std::size_t slot = 0;
  std::uint64_t accepted_in_chunk_count = 0;  // diagnostic
};

struct SearchOutcome {
  bool found = false;
  Pair pair{0, 0};
  Cost delta = 0;
  std::uint64_t iteration = 0;
  std::size_t next_cursor = 0;
  /// Proposals charged to the budget: up to and including the accepted one,
  /// or the whole remaining budget when nothing accepted.
  std::uint64_t proposals_consumed = 0;
  std::uint64_t chunks = 0;
};

/// Sequential scan of proposals [first, first + count), where the proposal at
/// iteration `base` sits at Δ slot `base_cursor`.
inline ChunkVerdict scan_proposals(const SolverState& state, std::size_t base_cursor, std::uint64_t base,
                                   std::uint64_t first, std::uint64_t count, const Schedule& schedule,
                                   const RandomStream& stream) noexcept {
  ChunkVerdict verdict;
  const auto& pairs = state.pairs();
  const std::size_t m = pairs.size();
  std::size_t slot = static_cast<std::size_t>((base_cursor + (first - base)) % m);
  for (std::uint64_t k = first; k < first + count; ++k) {
    const Cost delta = state.delta()[slot];
    if (detail::accepts_at(delta, k, schedule, stream)) {
      if (!verdict.found) {
        verdict.found = true;
        verdict.pair = pairs[slot];
        verdict.iteration = k;
        verdict.delta = delta;
        verdict.slot = slot;
      }
      ++verdict.accepted_in_chunk_count;
    }
    slot = slot + 1 == m ? 0 : slot + 1;
  }
  return verdict;
}

/// Finds the first accepting proposal at or after iteration `base` (cursor
/// `cursor`) and before `end`, scanning chunk by chunk with all workers.
inline SearchOutcome parallel_search(WorkerTeam& team, const SolverState& state, std::size_t cursor,
                                     std::uint64_t base, std::uint64_t end, const Schedule& schedule,
                                     const RandomStream& stream, const ParallelConfig& config) {
  config.validate();
  if (!state.delta_is_current())
    throw InternalConsistencyError("search started on a stale Δ-matrix (barrier contract violated)");
  if (base >= end) throw ContractError("search needs a remaining iteration budget of at least 1");
  if (end > schedule.total_iters()) throw RangeError("search window runs past the schedule");

  const std::size_t workers = team.size();
  const std::uint64_t chunk = std::max<std::size_t>(config.effective_chunk(), 1);
  const std::size_t m = state.pairs().size();
  std::vector<ChunkVerdict> verdicts(workers);

  SearchOutcome outcome;
  for (std::uint64_t first = base; first < end; first += chunk) {
    const std::uint64_t len = std::min<std::uint64_t>(chunk, end - first);
    ++outcome.chunks;
    team.run([&](std::size_t w) {
      const Range slice = partition(static_cast<std::size_t>(len), workers, w);
      verdicts[w] = scan_proposals(state, cursor, base, first + slice.begin, slice.size(), schedule, stream);
    });

    // slices are in iteration order, so the first worker that found something wins
    const auto hit = std::find_if(verdicts.begin(), verdicts.end(), [](const ChunkVerdict& v) { return v.found; });
    if (config.verify) {
      const ChunkVerdict rescan = scan_proposals(state, cursor, base, first, len, schedule, stream);
      const bool agree = rescan.found == (hit != verdicts.end()) && (!rescan.found || rescan.iteration == hit->iteration);
      if (!agree) throw InternalConsistencyError("parallel chunk verdict differs from sequential rescan");
    }
    if (hit != verdicts.end()) {
      outcome.found = true;
      outcome.pair = *hit->pair;
      outcome.delta = hit->delta;
      outcome.iteration = hit->iteration;
      outcome.next_cursor = hit->slot + 1 == m ? 0 : hit->slot + 1;
      outcome.proposals_consumed = hit->iteration - base + 1;
      return outcome;
    }
  }
  outcome.proposals_consumed = end - base;
  outcome.next_cursor = static_cast<std::size_t>((cursor + (end - base)) % m);
  return outcome;
}

/// Exchanges B' rows/columns r, s across the team, then records the swap.
inline void parallel_apply_swap(WorkerTeam& team, SolverState& state, std::size_t r, std::size_t s, Cost delta) {
  detail::require_pair(state, r, s);
  const std::size_t active = std::min(team.size(), state.n());
  team.run([&](std::size_t w) {
    if (w >= active) return;
    const Range rows = partition(state.n(), active, w);
    exchange_bprime_rows(state, r, s, rows.begin, rows.end);
  });
  commit_swap(state, r, s, delta);
}

/// Δ update split over contiguous slot ranges. Returns the number of workers
/// that received a range (reduced so each holds >= elems_per_worker slots).
inline std::size_t parallel_update_delta(WorkerTeam& team, SolverState& state, const SwapSnapshot& snapshot,
                                         const ParallelConfig& config) {
  config.validate();
  detail::require_snapshot_matches(state, snapshot);
  const std::size_t total = state.delta().size();
  const std::size_t active = effective_workers(total, team.size(), config.elems_per_worker);
  team.run([&](std::size_t w) {
    if (w >= active) return;
    const Range slots = partition(total, active, w);
    update_delta_range(state, snapshot, slots.begin, slots.end);
  });
  mark_delta_current(state);
  return active;
}

/// Δ built from scratch across the team.
inline void parallel_populate_delta(WorkerTeam& team, SolverState& state, const ParallelConfig& config) {
  detail::require_fast_path(state.instance());
  DeltaMatrix delta(state.n());
  const std::size_t active = effective_workers(delta.size(), team.size(), config.elems_per_worker);
  team.run([&](std::size_t w) {
    if (w >= active) return;
    const Range slots = partition(delta.size(), active, w);
    fill_delta_range(state, delta, slots.begin, slots.end);
  });
  install_delta_matrix(state, std::move(delta));
}

/// Parallel counterpart of anneal(..., Mode::delta); identical RunStats apart from wall_time.
inline RunStats anneal_parallel(std::shared_ptr<const Instance> instance, const AnnealParams& params,
                                const ParallelConfig& config) {
  config.validate();
  if (!instance) throw ContractError("anneal needs an instance");
  detail::require_fast_path(*instance);

  const auto start = std::chrono::steady_clock::now();
  auto [state, schedule, stream] = detail::prepare_run(std::move(instance), params);
  WorkerTeam team(config.workers);
  parallel_populate_delta(team, state, config);

  RunStats stats;
  detail::BestTracker best(state);
  std::size_t cursor = 0;
  std::uint64_t k = 0;
  while (k < params.iterations) {
    const SearchOutcome hit = parallel_search(team, state, cursor, k, params.iterations, schedule, stream, config);
    cursor = hit.next_cursor;
    k += hit.proposals_consumed;
    if (!hit.found) break;

    const auto [r, s] = hit.pair;
    const SwapSnapshot snap = take_snapshot(state, r, s);
    parallel_apply_swap(team, state, r, s, hit.delta);
    parallel_update_delta(team, state, snap, config);

    ++stats.accepted;
    best.observe(state);
    if (params.record_trace) stats.trace.push_back({hit.iteration, r, s, hit.delta});
    if (config.verify && stats.accepted % config.verify_every == 0 && state.delta() != init_delta_matrix(state))
      throw InternalConsistencyError("Δ-matrix diverged from a full recompute after " +
                                     std::to_string(stats.accepted) + " swaps");
  }

  detail::finish_stats(stats, state, best, schedule, start);
  return stats;
}

inline RunStats anneal_parallel(const Instance& instance, const AnnealParams& params, const ParallelConfig& config) {
  return anneal_parallel(std::make_shared<const Instance>(instance), params, config);
}

}  // namespace qapsa
