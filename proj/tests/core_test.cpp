#include <gtest/gtest.h>

#include <memory>
#include <random>
#include <vector>

#include "qapsa/core.hpp"
#include "test_support.hpp"

namespace qapsa {
namespace {

using testing::oracle_cost;
using testing::oracle_swap_delta;
using testing::perm_of;
using testing::random_perm;
using testing::random_symmetric;
using testing::tiny3;
using testing::to_vector;

Instance zero_flow(std::size_t n) {
  Matrix b(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = i == j ? 0 : static_cast<Value>(i + j + 1);
  return Instance(Matrix(n), std::move(b));
}

SolverState state_of(const Instance& inst, Permutation p) {
  return SolverState(std::make_shared<const Instance>(inst), std::move(p));
}

// --- Instance / Permutation ---------------------------------------------------

TEST(Instance, ComputesFlags) {
  const auto inst = tiny3();
  EXPECT_EQ(inst.n(), 3u);
  EXPECT_TRUE(inst.symmetric());
  EXPECT_TRUE(inst.zero_diagonal());

  const Instance asym(Matrix{{0, 1}, {2, 0}}, Matrix{{0, 1}, {1, 0}});
  EXPECT_FALSE(asym.symmetric());
  EXPECT_TRUE(asym.zero_diagonal());
  EXPECT_FALSE(asym.supports_fast_path());

  const Instance diag(Matrix{{1, 1}, {1, 0}}, Matrix{{0, 1}, {1, 0}});
  EXPECT_TRUE(diag.symmetric());
  EXPECT_FALSE(diag.zero_diagonal());
}

TEST(Instance, RejectsBadShapes) {
  EXPECT_THROW(Instance(Matrix(2), Matrix(3)), DimensionError);
  EXPECT_THROW(Instance(Matrix(1), Matrix(1)), SizeError);
  EXPECT_THROW(Instance(Matrix{{0, -1}, {1, 0}}, Matrix(2)), DomainError);
  EXPECT_THROW((Matrix{{0, 1}, {1}}), DimensionError);
}

TEST(Permutation, RejectsNonBijections) {
  EXPECT_THROW(perm_of({0, 0, 1}), DomainError);
  EXPECT_THROW(perm_of({0, 3, 1}), DomainError);
  EXPECT_NO_THROW(perm_of({2, 0, 1}));
}

TEST(PairIndex, IndexOfInvertsEnumeration) {
  for (std::size_t n : {2u, 3u, 4u, 7u, 30u}) {
    const PairIndex pairs(n);
    ASSERT_EQ(pairs.size(), n * (n - 1) / 2);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      EXPECT_LT(pairs[k].r, pairs[k].s);
      EXPECT_EQ(pairs.index_of(pairs[k].r, pairs[k].s), k);
      EXPECT_EQ(pairs.index_of(pairs[k].s, pairs[k].r), k);
    }
  }
}

// --- cost / bprime_of ----------------------------------------------------------

TEST(Cost, ZeroMatrices) {
  const Instance inst(Matrix(3), Matrix(3));
  EXPECT_EQ(cost(inst, perm_of({1, 2, 0})), 0);
}

TEST(Cost, TinyInstance) {
  EXPECT_EQ(cost(tiny3(), Permutation::identity(3)), 64);
  EXPECT_EQ(cost(tiny3(), perm_of({2, 1, 0})), 56);
  EXPECT_EQ(oracle_cost(tiny3(), {0, 1, 2}), 64);
  EXPECT_EQ(oracle_cost(tiny3(), {2, 1, 0}), 56);
}

TEST(Cost, DimensionMismatch) {
  EXPECT_THROW(cost(tiny3(), Permutation::identity(4)), DimensionError);
  EXPECT_THROW(bprime_of(tiny3(), Permutation::identity(2)), DimensionError);
}

TEST(Cost, MatchesOracleOnGeneralInstances) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testing::random_general(2 + trial % 9, rng);
    const auto p = random_perm(inst.n(), rng);
    EXPECT_EQ(cost(inst, perm_of(p)), oracle_cost(inst, p));
  }
}

TEST(BPrime, IdentityGivesB) { EXPECT_EQ(bprime_of(tiny3(), Permutation::identity(3)), tiny3().b()); }

TEST(BPrime, ReversedPermutation) {
  const Matrix expected{{0, 6, 5}, {6, 0, 4}, {5, 4, 0}};
  EXPECT_EQ(bprime_of(tiny3(), perm_of({2, 1, 0})), expected);
}

TEST(BPrime, StaysSymmetric) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_symmetric(3 + trial, rng);
    EXPECT_TRUE(bprime_of(inst, perm_of(random_perm(inst.n(), rng))).is_symmetric());
  }
}

// --- swap deltas ---------------------------------------------------------------

TEST(SwapDelta, TinyInstance) {
  const auto state = state_of(tiny3(), Permutation::identity(3));
  EXPECT_EQ(swap_delta_scratch(state, 0, 1), -2);
  EXPECT_EQ(swap_delta_scratch(state, 0, 2), -8);
  EXPECT_EQ(swap_delta_scratch(state, 1, 2), -2);
  EXPECT_EQ(swap_delta_scratch(state, 2, 0), -8);
}

TEST(SwapDelta, ZeroFlowIsZero) {
  const auto state = state_of(zero_flow(5), perm_of({3, 1, 4, 0, 2}));
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t s = r + 1; s < 5; ++s) EXPECT_EQ(swap_delta_scratch(state, r, s), 0);
}

TEST(SwapDelta, Errors) {
  const auto state = state_of(tiny3(), Permutation::identity(3));
  EXPECT_THROW(swap_delta_scratch(state, 1, 1), InvalidPairError);
  EXPECT_THROW(swap_delta_scratch(state, 0, 3), RangeError);
  const auto asym = state_of(Instance(Matrix{{0, 1, 0}, {2, 0, 0}, {0, 0, 0}}, Matrix(3)), Permutation::identity(3));
  EXPECT_THROW(swap_delta_scratch(asym, 0, 1), UnsupportedInstanceError);
  EXPECT_NO_THROW(swap_delta_general(asym, 0, 1));
}

TEST(SwapDelta, EqualsCostDifferenceOnRandomSymmetricInstances) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + trial % 18;  // 3..20
    const auto inst = random_symmetric(n, rng);
    const auto p = random_perm(n, rng);
    const auto state = state_of(inst, perm_of(p));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t r = pick(rng), s = pick(rng);
    while (s == r) s = pick(rng);
    ASSERT_EQ(swap_delta_scratch(state, r, s), oracle_swap_delta(inst, p, r, s)) << "n=" << n;
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(SwapDelta, GeneralFormulaHandlesAsymmetricAndDiagonal) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 12;
    const auto inst = testing::random_general(n, rng);
    const auto p = random_perm(n, rng);
    const auto state = state_of(inst, perm_of(p));
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t s = r + 1; s < n; ++s) ASSERT_EQ(swap_delta_general(state, r, s), oracle_swap_delta(inst, p, r, s));
  }
}

// --- Δ-matrix -----------------------------------------------------------------

TEST(DeltaMatrix, InitTinyInstance) {
  const auto delta = init_delta_matrix(state_of(tiny3(), Permutation::identity(3)));
  ASSERT_EQ(delta.size(), 3u);
  EXPECT_EQ(std::vector<Cost>(delta.entries().begin(), delta.entries().end()), (std::vector<Cost>{-2, -8, -2}));
  EXPECT_EQ(delta.at(1, 0), -2);
  EXPECT_EQ(delta.at(2, 2), 0);
}

TEST(DeltaMatrix, InitZeroFlowAndSizeTwo) {
  const auto zero = init_delta_matrix(state_of(zero_flow(6), Permutation::identity(6)));
  EXPECT_EQ(zero.size(), 15u);
  for (Cost d : zero.entries()) EXPECT_EQ(d, 0);

  const Instance two(Matrix{{0, 7}, {7, 0}}, Matrix{{0, 3}, {3, 0}});
  const auto d2 = init_delta_matrix(state_of(two, Permutation::identity(2)));
  ASSERT_EQ(d2.size(), 1u);
  EXPECT_EQ(d2[0], 0);
}

TEST(DeltaMatrix, InitRejectsAsymmetric) {
  const Instance asym(Matrix{{0, 1}, {2, 0}}, Matrix{{0, 1}, {1, 0}});
  EXPECT_THROW(init_delta_matrix(state_of(asym, Permutation::identity(2))), UnsupportedInstanceError);
}

// --- apply_swap ----------------------------------------------------------------

TEST(ApplySwap, TinyInstance) {
  auto state = state_of(tiny3(), Permutation::identity(3));
  apply_swap(state, 0, 2);
  EXPECT_EQ(state.perm(), perm_of({2, 1, 0}));
  EXPECT_EQ(state.cost(), 56);
  EXPECT_EQ(state.bprime(), (Matrix{{0, 6, 5}, {6, 0, 4}, {5, 4, 0}}));
}

TEST(ApplySwap, IsAnInvolution) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + trial % 10;
    const auto inst = random_symmetric(n, rng);
    auto state = state_of(inst, perm_of(random_perm(n, rng)));
    const auto perm = state.perm();
    const auto bp = state.bprime();
    const auto c = state.cost();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t r = pick(rng), s = pick(rng);
    while (s == r) s = pick(rng);
    apply_swap(state, r, s);
    apply_swap(state, r, s);
    EXPECT_EQ(state.perm(), perm);
    EXPECT_EQ(state.bprime(), bp);
    EXPECT_EQ(state.cost(), c);
  }
}

TEST(ApplySwap, ZeroFlowKeepsZeroCost) {
  auto state = state_of(zero_flow(5), Permutation::identity(5));
  apply_swap(state, 1, 4);
  apply_swap(state, 0, 2);
  EXPECT_EQ(state.cost(), 0);
}

TEST(ApplySwap, RejectsSamePair) {
  auto state = state_of(tiny3(), Permutation::identity(3));
  EXPECT_THROW(apply_swap(state, 2, 2), InvalidPairError);
}

TEST(ApplySwap, PartialRowRangesComposeToFullExchange) {
  std::mt19937_64 rng(17);
  const auto inst = random_symmetric(9, rng);
  for (std::size_t r = 0; r < 9; ++r)
    for (std::size_t s = 0; s < 9; ++s) {
      if (r == s) continue;
      auto whole = state_of(inst, Permutation::identity(9));
      auto split = whole;
      apply_swap(whole, r, s);
      exchange_bprime_rows(split, r, s, 0, 4);
      exchange_bprime_rows(split, r, s, 4, 9);
      EXPECT_EQ(split.bprime(), whole.bprime());
    }
}

// --- update_delta_matrix -------------------------------------------------------

TEST(UpdateDelta, TinyInstanceAfterSwap) {
  auto state = state_of(tiny3(), Permutation::identity(3));
  populate_delta(state);
  const auto snap = take_snapshot(state, 0, 2);
  EXPECT_EQ(snap.pair_delta, -8);
  apply_swap(state, 0, 2);
  EXPECT_EQ(state.cost(), 56);
  update_delta_matrix(state, snap);
  EXPECT_EQ(state.delta().at(0, 1), 2);
  EXPECT_EQ(oracle_swap_delta(tiny3(), {2, 1, 0}, 0, 1), 2);
  EXPECT_EQ(state.delta(), init_delta_matrix(state));
}

TEST(UpdateDelta, ZeroFlowStaysZero) {
  auto state = state_of(zero_flow(6), Permutation::identity(6));
  populate_delta(state);
  const auto snap = take_snapshot(state, 1, 4);
  apply_swap(state, 1, 4);
  update_delta_matrix(state, snap);
  for (Cost d : state.delta().entries()) EXPECT_EQ(d, 0);
}

TEST(UpdateDelta, MatchesScratchForEveryPairAtN10) {
  std::mt19937_64 rng(10);
  const auto inst = random_symmetric(10, rng);
  const auto start = perm_of(random_perm(10, rng));
  for (std::size_t r = 0; r < 10; ++r)
    for (std::size_t s = r + 1; s < 10; ++s) {
      auto state = state_of(inst, start);
      populate_delta(state);
      const auto snap = take_snapshot(state, r, s);
      apply_swap(state, r, s);
      update_delta_matrix(state, snap);
      ASSERT_EQ(state.delta().size(), 45u);
      EXPECT_EQ(state.delta(), init_delta_matrix(state)) << "swap (" << r << "," << s << ")";
    }
}

TEST(UpdateDelta, ContractViolations) {
  auto state = state_of(tiny3(), Permutation::identity(3));
  populate_delta(state);
  const auto snap = take_snapshot(state, 0, 1);
  apply_swap(state, 0, 1);
  EXPECT_THROW(update_delta_matrix(state, SwapSnapshot{}), ContractError);
  // two swaps since the snapshot
  apply_swap(state, 1, 2, swap_delta(state, 1, 2));
  EXPECT_THROW(update_delta_matrix(state, snap), ContractError);
  EXPECT_FALSE(state.delta_is_current());
}

TEST(UpdateDelta, SnapshotNeedsCurrentDelta) {
  auto state = state_of(tiny3(), Permutation::identity(3));
  EXPECT_THROW(take_snapshot(state, 0, 1), ContractError);
}

// Long random walks: B', cost and Δ stay exact after every accepted swap.
TEST(UpdateDelta, InvariantsHoldAlongRandomWalks) {
  std::mt19937_64 rng(77);
  for (std::size_t n : {4u, 7u, 12u, 20u, 30u}) {
    const auto inst = random_symmetric(n, rng);
    auto state = state_of(inst, perm_of(random_perm(n, rng)));
    populate_delta(state);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (int step = 0; step < 60; ++step) {
      std::size_t r = pick(rng), s = pick(rng);
      while (s == r) s = pick(rng);
      const auto snap = take_snapshot(state, r, s);
      apply_swap(state, r, s);
      update_delta_matrix(state, snap);
      ASSERT_EQ(state.cost(), oracle_cost(inst, to_vector(state.perm())));
      ASSERT_EQ(state.bprime(), bprime_of(inst, state.perm()));
      for (std::size_t k = 0; k < state.pairs().size(); ++k)
        ASSERT_EQ(state.delta()[k], swap_delta_scratch(state, state.pairs()[k].r, state.pairs()[k].s));
    }
  }
}

}  // namespace
}  // namespace qapsa
