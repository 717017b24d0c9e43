#pragma once

// QAP instance/state types, exact cost evaluation, swap deltas and the
// incrementally maintained Δ-matrix.
//
// Notation used throughout: facility i sits at location p(i); the permuted
// distance matrix B'(i, j) = B(p(i), p(j)) is kept in sync with p, so every
// delta formula indexes B' directly by facility.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qapsa/errors.hpp"
#include "qapsa/matrix.hpp"

namespace qapsa {

using Value = std::int64_t;
using Cost = std::int64_t;
using Matrix = SquareMatrix<Value>;

/// Flow matrix A and distance matrix B of one QAP instance.
class Instance {
 public:
  Instance(Matrix flow, Matrix distance) : a_(std::move(flow)), b_(std::move(distance)) {
    if (a_.size() != b_.size())
      throw DimensionError("flow and distance matrices differ in size (" + std::to_string(a_.size()) +
                           " vs " + std::to_string(b_.size()) + ")");
    if (a_.size() < 2) throw SizeError("instance size must be at least 2, got " + std::to_string(a_.size()));
    for (const auto* m : {&a_, &b_})
      for (Value v : m->values())
        if (v < 0) throw DomainError("matrix entries must be non-negative, got " + std::to_string(v));
    symmetric_ = a_.is_symmetric() && b_.is_symmetric();
    zero_diagonal_ = a_.has_zero_diagonal() && b_.has_zero_diagonal();
  }

  std::size_t n() const noexcept { return a_.size(); }
  const Matrix& a() const noexcept { return a_; }
  const Matrix& b() const noexcept { return b_; }
  bool symmetric() const noexcept { return symmetric_; }
  bool zero_diagonal() const noexcept { return zero_diagonal_; }

  /// True when the Δ-matrix formulas apply.
  bool supports_fast_path() const noexcept { return symmetric_ && zero_diagonal_; }

  friend bool operator==(const Instance&, const Instance&) = default;

 private:
  Matrix a_;
  Matrix b_;
  bool symmetric_ = false;
  bool zero_diagonal_ = false;
};

/// Bijection facility -> location.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<std::size_t> locations) : p_(std::move(locations)) {
    std::vector<bool> seen(p_.size(), false);
    for (std::size_t loc : p_) {
      if (loc >= p_.size() || seen[loc])
        throw DomainError("not a permutation of 0.." + std::to_string(p_.size() - 1));
      seen[loc] = true;
    }
  }

  static Permutation identity(std::size_t n) {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return Permutation(std::move(p));
  }

  std::size_t size() const noexcept { return p_.size(); }
  std::size_t operator[](std::size_t facility) const noexcept { return p_[facility]; }
  std::span<const std::size_t> locations() const noexcept { return p_; }

  void swap_facilities(std::size_t r, std::size_t s) noexcept { std::swap(p_[r], p_[s]); }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> p_;
};

struct Pair {
  std::size_t r;
  std::size_t s;
  friend bool operator==(const Pair&, const Pair&) = default;
};

/// Row-major enumeration of the upper triangle: (0,1),(0,2),...,(0,N-1),(1,2),...
/// The position of a pair in this order is both its Δ storage slot and its
/// candidate cursor.
class PairIndex {
 public:
  explicit PairIndex(std::size_t n) : n_(n) {
    pairs_.reserve(pair_count(n));
    for (std::size_t r = 0; r + 1 < n; ++r)
      for (std::size_t s = r + 1; s < n; ++s) pairs_.push_back({r, s});
  }

  static constexpr std::size_t pair_count(std::size_t n) noexcept { return n * (n - 1) / 2; }

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  const Pair& operator[](std::size_t k) const noexcept { return pairs_[k]; }

  /// Slot of the unordered pair {r, s}, r != s.
  std::size_t index_of(std::size_t r, std::size_t s) const noexcept {
    if (r > s) std::swap(r, s);
    return r * (2 * n_ - r - 1) / 2 + (s - r - 1);
  }

 private:
  std::size_t n_;
  std::vector<Pair> pairs_;
};

/// Cached swap deltas for every unordered pair, stored as the upper triangle in
/// PairIndex order. Δ(s, r) = Δ(r, s) and Δ(r, r) = 0 are implied.
class DeltaMatrix {
 public:
  DeltaMatrix() = default;
  explicit DeltaMatrix(std::size_t n) : n_(n), entries_(PairIndex::pair_count(n), 0) {}

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  Cost& operator[](std::size_t k) noexcept { return entries_[k]; }
  Cost operator[](std::size_t k) const noexcept { return entries_[k]; }

  Cost at(std::size_t r, std::size_t s) const {
    if (r >= n_ || s >= n_) throw RangeError("pair index out of range");
    if (r == s) return 0;
    if (r > s) std::swap(r, s);
    return entries_[r * (2 * n_ - r - 1) / 2 + (s - r - 1)];
  }

  std::span<const Cost> entries() const noexcept { return entries_; }

  friend bool operator==(const DeltaMatrix&, const DeltaMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Cost> entries_;
};

namespace detail {

inline void require_same_size(const Instance& instance, const Permutation& perm) {
  if (perm.size() != instance.n())
    throw DimensionError("permutation has size " + std::to_string(perm.size()) + " but instance has N=" +
                         std::to_string(instance.n()));
}

}  // namespace detail

/// Σ_i Σ_j A(i,j) · B(p(i), p(j)) by direct double summation.
inline Cost cost(const Instance& instance, const Permutation& perm) {
  detail::require_same_size(instance, perm);
  const auto& a = instance.a();
  const auto& b = instance.b();
  Cost total = 0;
  for (std::size_t i = 0; i < instance.n(); ++i)
    for (std::size_t j = 0; j < instance.n(); ++j) total += a(i, j) * b(perm[i], perm[j]);
  return total;
}

/// M(i, j) = B(p(i), p(j)).
inline Matrix bprime_of(const Instance& instance, const Permutation& perm) {
  detail::require_same_size(instance, perm);
  Matrix m(instance.n());
  for (std::size_t i = 0; i < instance.n(); ++i)
    for (std::size_t j = 0; j < instance.n(); ++j) m(i, j) = instance.b()(perm[i], perm[j]);
  return m;
}

class SolverState;
struct SwapSnapshot;
void apply_swap(SolverState& state, std::size_t r, std::size_t s, Cost delta);
void exchange_bprime_rows(SolverState& state, std::size_t r, std::size_t s, std::size_t row_begin,
                          std::size_t row_end) noexcept;
void commit_swap(SolverState& state, std::size_t r, std::size_t s, Cost delta) noexcept;
void update_delta_range(SolverState& state, const SwapSnapshot& snapshot, std::size_t begin,
                        std::size_t end) noexcept;
void mark_delta_current(SolverState& state) noexcept;
void install_delta_matrix(SolverState& state, DeltaMatrix delta);

/// Current permutation with its permuted distance matrix B', tracked cost and
/// (optionally) the Δ-matrix.
///
/// Single-writer: mutations go through apply_swap / update_delta_matrix (or the
/// range variants the parallel engine drives under a barrier). Version counters
/// let callers detect a Δ-matrix that lags behind the permutation.
class SolverState {
 public:
  SolverState(std::shared_ptr<const Instance> instance, Permutation perm)
      : instance_(std::move(instance)), perm_(std::move(perm)) {
    if (!instance_) throw ContractError("solver state needs an instance");
    bprime_ = bprime_of(*instance_, perm_);
    cost_ = qapsa::cost(*instance_, perm_);
    pairs_ = std::make_shared<const PairIndex>(instance_->n());
  }

  const Instance& instance() const noexcept { return *instance_; }
  const std::shared_ptr<const Instance>& instance_ptr() const noexcept { return instance_; }
  std::size_t n() const noexcept { return instance_->n(); }
  const Permutation& perm() const noexcept { return perm_; }
  const Matrix& bprime() const noexcept { return bprime_; }
  Cost cost() const noexcept { return cost_; }
  const DeltaMatrix& delta() const noexcept { return delta_; }
  const PairIndex& pairs() const noexcept { return *pairs_; }

  bool has_delta() const noexcept { return !delta_.empty(); }
  /// Δ populated and reflecting every swap applied so far.
  bool delta_is_current() const noexcept { return has_delta() && delta_version_ == version_; }
  std::uint64_t version() const noexcept { return version_; }

 private:
  friend void exchange_bprime_rows(SolverState&, std::size_t, std::size_t, std::size_t, std::size_t) noexcept;
  friend void commit_swap(SolverState&, std::size_t, std::size_t, Cost) noexcept;
  friend void update_delta_range(SolverState&, const SwapSnapshot&, std::size_t, std::size_t) noexcept;
  friend void mark_delta_current(SolverState&) noexcept;
  friend void install_delta_matrix(SolverState&, DeltaMatrix);

  std::shared_ptr<const Instance> instance_;
  Permutation perm_;
  Matrix bprime_;
  Cost cost_ = 0;
  DeltaMatrix delta_;
  std::shared_ptr<const PairIndex> pairs_;
  std::uint64_t version_ = 0;
  std::uint64_t delta_version_ = 0;
};

namespace detail {

inline void require_pair(const SolverState& state, std::size_t r, std::size_t s) {
  if (r >= state.n() || s >= state.n())
    throw RangeError("facility index out of range for N=" + std::to_string(state.n()));
  if (r == s) throw InvalidPairError("swap needs two distinct facilities, got r = s = " + std::to_string(r));
}

inline void require_fast_path(const Instance& instance) {
  if (!instance.supports_fast_path())
    throw UnsupportedInstanceError(
        "the Δ-matrix path needs a symmetric instance with zero diagonal; use scratch mode");
}

/// 2 · Σ_{k≠r,s} (A(r,k) − A(s,k)) · (B'(s,k) − B'(r,k)); symmetric zero-diagonal only.
inline Cost symmetric_swap_delta(const Matrix& a, const Matrix& bp, std::size_t r, std::size_t s) noexcept {
  const auto ar = a.row(r), as = a.row(s), br = bp.row(r), bs = bp.row(s);
  Cost sum = 0;
  for (std::size_t k = 0; k < ar.size(); ++k) sum += (ar[k] - as[k]) * (bs[k] - br[k]);
  sum -= (ar[r] - as[r]) * (bs[r] - br[r]);
  sum -= (ar[s] - as[s]) * (bs[s] - br[s]);
  return 2 * sum;
}

/// Swap delta for arbitrary (asymmetric, nonzero-diagonal) instances.
inline Cost general_swap_delta(const Matrix& a, const Matrix& bp, std::size_t r, std::size_t s) noexcept {
  Cost d = (a(r, r) - a(s, s)) * (bp(s, s) - bp(r, r)) + (a(r, s) - a(s, r)) * (bp(s, r) - bp(r, s));
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (k == r || k == s) continue;
    d += (a(k, r) - a(k, s)) * (bp(k, s) - bp(k, r)) + (a(r, k) - a(s, k)) * (bp(s, k) - bp(r, k));
  }
  return d;
}

}  // namespace detail

/// Cost change of swapping facilities r and s, computed in O(N) from B'.
/// Symmetric zero-diagonal instances only.
inline Cost swap_delta_scratch(const SolverState& state, std::size_t r, std::size_t s) {
  detail::require_pair(state, r, s);
  detail::require_fast_path(state.instance());
  return detail::symmetric_swap_delta(state.instance().a(), state.bprime(), r, s);
}

/// O(N) swap delta valid for any instance.
inline Cost swap_delta_general(const SolverState& state, std::size_t r, std::size_t s) {
  detail::require_pair(state, r, s);
  return detail::general_swap_delta(state.instance().a(), state.bprime(), r, s);
}

/// Dispatches to the cheapest exact formula the instance allows.
inline Cost swap_delta(const SolverState& state, std::size_t r, std::size_t s) {
  detail::require_pair(state, r, s);
  return state.instance().supports_fast_path()
             ? detail::symmetric_swap_delta(state.instance().a(), state.bprime(), r, s)
             : detail::general_swap_delta(state.instance().a(), state.bprime(), r, s);
}

/// Fills Δ slots [begin, end) from scratch. Safe to call concurrently on disjoint ranges.
inline void fill_delta_range(const SolverState& state, DeltaMatrix& delta, std::size_t begin,
                             std::size_t end) noexcept {
  const auto& pairs = state.pairs();
  for (std::size_t k = begin; k < end; ++k)
    delta[k] = detail::symmetric_swap_delta(state.instance().a(), state.bprime(), pairs[k].r, pairs[k].s);
}

/// Δ for every pair from scratch, O(N³).
inline DeltaMatrix init_delta_matrix(const SolverState& state) {
  detail::require_fast_path(state.instance());
  DeltaMatrix delta(state.n());
  fill_delta_range(state, delta, 0, delta.size());
  return delta;
}

/// Installs a Δ-matrix computed for the current permutation.
inline void install_delta_matrix(SolverState& state, DeltaMatrix delta) {
  if (delta.n() != state.n()) throw DimensionError("Δ-matrix size does not match the state");
  state.delta_ = std::move(delta);
  state.delta_version_ = state.version_;
}

inline void populate_delta(SolverState& state) { install_delta_matrix(state, init_delta_matrix(state)); }

/// Pre-swap staging for the Δ update: rows r and s of A and B' plus Δ(r,s).
/// A default-constructed snapshot is "missing" and rejected by the update.
struct SwapSnapshot {
  std::size_t r = 0;
  std::size_t s = 0;
  Cost pair_delta = 0;
  std::uint64_t version = 0;
  std::vector<Value> a_r, a_s, bprime_r, bprime_s;
  // x(k) = A(r,k) − A(s,k),  y(k) = B'(r,k) − B'(s,k), both pre-swap
  std::vector<Value> x, y;

  bool empty() const noexcept { return x.empty(); }
};

/// Captures the rows needed to update Δ after swapping (r, s). Requires a current Δ.
inline SwapSnapshot take_snapshot(const SolverState& state, std::size_t r, std::size_t s) {
  detail::require_pair(state, r, s);
  if (!state.delta_is_current()) throw ContractError("snapshot requires a current Δ-matrix");
  SwapSnapshot snap;
  snap.r = r;
  snap.s = s;
  snap.pair_delta = state.delta()[state.pairs().index_of(r, s)];
  snap.version = state.version();
  const auto& a = state.instance().a();
  const auto& bp = state.bprime();
  snap.a_r.assign(a.row(r).begin(), a.row(r).end());
  snap.a_s.assign(a.row(s).begin(), a.row(s).end());
  snap.bprime_r.assign(bp.row(r).begin(), bp.row(r).end());
  snap.bprime_s.assign(bp.row(s).begin(), bp.row(s).end());
  const std::size_t n = state.n();
  snap.x.resize(n);
  snap.y.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    snap.x[k] = snap.a_r[k] - snap.a_s[k];
    snap.y[k] = snap.bprime_r[k] - snap.bprime_s[k];
  }
  return snap;
}

/// Swaps rows r,s and columns r,s of B' for the facility rows in [row_begin, row_end).
/// Row r's owner also moves row s; disjoint row ranges may run concurrently.
inline void exchange_bprime_rows(SolverState& state, std::size_t r, std::size_t s, std::size_t row_begin,
                                 std::size_t row_end) noexcept {
  if (r > s) std::swap(r, s);
  auto& bp = state.bprime_;
  for (std::size_t i = row_begin; i < row_end; ++i) {
    if (i == s) continue;
    if (i == r) {
      auto row_r = bp.row(r);
      auto row_s = bp.row(s);
      for (std::size_t k = 0; k < row_r.size(); ++k) std::swap(row_r[k], row_s[k]);
      std::swap(row_r[r], row_r[s]);
      std::swap(row_s[r], row_s[s]);
    } else {
      std::swap(bp(i, r), bp(i, s));
    }
  }
}

/// Records the swap in p and the tracked cost once B' has been exchanged.
inline void commit_swap(SolverState& state, std::size_t r, std::size_t s, Cost delta) noexcept {
  state.perm_.swap_facilities(r, s);
  state.cost_ += delta;
  ++state.version_;
}

/// Swaps facilities r and s whose cost change `delta` is already known.
inline void apply_swap(SolverState& state, std::size_t r, std::size_t s, Cost delta) {
  detail::require_pair(state, r, s);
  exchange_bprime_rows(state, r, s, 0, state.n());
  commit_swap(state, r, s, delta);
}

/// Swaps facilities r and s; the delta comes from Δ when current, otherwise O(N) scratch.
inline void apply_swap(SolverState& state, std::size_t r, std::size_t s) {
  detail::require_pair(state, r, s);
  const Cost delta = state.delta_is_current() ? state.delta()[state.pairs().index_of(r, s)] : swap_delta(state, r, s);
  apply_swap(state, r, s, delta);
}

namespace detail {

inline void require_snapshot_matches(const SolverState& state, const SwapSnapshot& snapshot) {
  if (snapshot.empty()) throw ContractError("Δ update needs the pre-swap snapshot");
  if (snapshot.x.size() != state.n()) throw ContractError("snapshot was taken on a different instance size");
  if (!state.has_delta()) throw ContractError("Δ-matrix is not populated");
  if (state.version() != snapshot.version + 1)
    throw ContractError("Δ update must follow exactly the one swap the snapshot was taken for");
}

}  // namespace detail

/// Brings Δ slots [begin, end) up to date after the snapshot's swap.
///
/// Pairs disjoint from {r, s} take the O(1) correction
///   Δ'(u,v) = Δ(u,v) + 2 · (A(r,u) − A(r,v) + A(s,v) − A(s,u))
///                        · (B'(r,u) − B'(r,v) + B'(s,v) − B'(s,u))
///           = Δ(u,v) + 2 · (x(u) − x(v)) · (y(u) − y(v))
/// with B' taken before the swap (equivalently, r and s exchanged in the second
/// factor when reading the post-swap B'),
/// pairs touching r or s are recomputed from the post-swap B'. Each slot reads
/// only its own previous value, so disjoint ranges may run concurrently.
/// Validation is the caller's job (see update_delta_matrix).
inline void update_delta_range(SolverState& state, const SwapSnapshot& snapshot, std::size_t begin,
                               std::size_t end) noexcept {
  const auto& pairs = state.pairs();
  const auto& a = state.instance().a();
  const auto& bp = state.bprime_;
  const std::size_t n = state.n();
  const std::size_t r = snapshot.r, s = snapshot.s;
  const Value* x = snapshot.x.data();
  const Value* y = snapshot.y.data();
  Cost* delta = &state.delta_[0];

  // walk the range one row segment (fixed u, consecutive v) at a time
  for (std::size_t k = begin; k < end;) {
    const auto [u, v0] = pairs[k];
    const std::size_t len = std::min(end - k, n - v0);
    if (u == r || u == s) {
      for (std::size_t j = 0; j < len; ++j) delta[k + j] = detail::symmetric_swap_delta(a, bp, u, v0 + j);
    } else {
      const Value xu = x[u], yu = y[u];
      const Value* xv = x + v0;
      const Value* yv = y + v0;
      Cost* out = delta + k;
      for (std::size_t j = 0; j < len; ++j) out[j] += 2 * (xu - xv[j]) * (yu - yv[j]);
      for (std::size_t t : {r, s})
        if (t >= v0 && t < v0 + len) out[t - v0] = detail::symmetric_swap_delta(a, bp, u, t);
    }
    k += len;
  }
}

inline void mark_delta_current(SolverState& state) noexcept { state.delta_version_ = state.version_; }

/// Sequential Δ update; call right after apply_swap with the snapshot taken before it.
inline void update_delta_matrix(SolverState& state, const SwapSnapshot& snapshot) {
  detail::require_snapshot_matches(state, snapshot);
  update_delta_range(state, snapshot, 0, state.delta().size());
  mark_delta_current(state);
}

}  // namespace qapsa
