#include <gtest/gtest.h>

#include <clocale>
#include <memory>

#include "qapsa/bench.hpp"

namespace qapsa::bench {
namespace {

TEST(BenchCsv, RowRoundTrip) {
  const BenchRow row{50, 10000, EngineMode::delta_par, 4, 0.0123456789, 123456, 0.0625, 7};
  const auto line = to_csv(row);
  EXPECT_EQ(line, "50,10000,delta-par,4,0.0123456789,123456,0.0625,7");
  const auto back = parse_csv_row(line);
  EXPECT_EQ(back.n, row.n);
  EXPECT_EQ(back.mode, row.mode);
  EXPECT_EQ(back.wall_time, row.wall_time);
  EXPECT_EQ(back.acceptance_rate, row.acceptance_rate);
  EXPECT_THROW(parse_csv_row("1,2,3"), ConfigError);
}

TEST(BenchCsv, LocaleIndependent) {
  const char* previous = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = previous ? previous : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") == nullptr) GTEST_SKIP() << "de_DE locale not installed";
  EXPECT_EQ(format_double(1234.5), "1234.5");
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST(BenchCsv, HeaderIsFixed) {
  EXPECT_EQ(kCsvHeader, "n,iters,mode,workers,wall_time_s,best_cost,acceptance_rate,seed");
}

TEST(Speedup, OneRowPerNonBaselineGroup) {
  std::vector<BenchRow> rows;
  for (std::uint64_t iters : {1000u, 10000u})
    for (std::uint64_t seed : {1u, 2u}) {
      rows.push_back({50, iters, EngineMode::delta_seq, 1, 2.0 * static_cast<double>(seed), 0, 0.1, seed});
      rows.push_back({50, iters, EngineMode::delta_par, 4, 0.5 * static_cast<double>(seed), 0, 0.1, seed});
    }
  ASSERT_EQ(rows.size(), 8u);
  const auto speedups = compute_speedups(rows, EngineMode::delta_seq);
  ASSERT_EQ(speedups.size(), 2u);
  for (const auto& s : speedups) {
    EXPECT_EQ(s.mode, EngineMode::delta_par);
    EXPECT_EQ(s.workers, 4u);
    EXPECT_DOUBLE_EQ(s.speedup, 4.0);  // mean(2,4) / mean(0.5,1)
  }
  EXPECT_EQ(to_csv(speedups[0]), "50,1000,delta-par,4,delta-seq,4");
}

TEST(Speedup, ScratchBaselineCoversBothDeltaModes) {
  const std::vector<BenchRow> rows{{20, 100, EngineMode::scratch, 1, 3.0, 0, 0.5, 1},
                                   {20, 100, EngineMode::delta_seq, 1, 1.0, 0, 0.5, 1},
                                   {20, 100, EngineMode::delta_par, 2, 1.5, 0, 0.5, 1}};
  const auto speedups = compute_speedups(rows, EngineMode::scratch);
  ASSERT_EQ(speedups.size(), 2u);
  EXPECT_DOUBLE_EQ(speedups[0].speedup, 3.0);
  EXPECT_DOUBLE_EQ(speedups[1].speedup, 2.0);
}

TEST(RunCell, SameSeedSameCostAcrossDeltaModes) {
  const auto inst = std::make_shared<const Instance>(generate_taixxa({30, 1, 100}));
  const auto seq = run_cell(inst, EngineMode::delta_seq, 1, 20000, 3);
  const auto par = run_cell(inst, EngineMode::delta_par, 4, 20000, 3);
  const auto scratch = run_cell(inst, EngineMode::scratch, 1, 20000, 3);
  EXPECT_EQ(seq.best_cost, par.best_cost);
  EXPECT_EQ(seq.best_cost, scratch.best_cost);
  EXPECT_EQ(seq.acceptance_rate, par.acceptance_rate);
  EXPECT_EQ(par.workers, 4u);
  EXPECT_EQ(seq.workers, 1u);
  EXPECT_GT(par.wall_time, 0.0);
}

TEST(GeneratorSpecText, Parses) {
  const auto spec = parse_generator_spec("n=50,seed=1");
  EXPECT_EQ(spec.n, 50u);
  EXPECT_EQ(spec.seed, 1u);
  EXPECT_EQ(spec.max_value, 100);
  EXPECT_EQ(parse_generator_spec("seed=3,n=7,max=9").max_value, 9);
  EXPECT_THROW(parse_generator_spec("seed=1"), ConfigError);
  EXPECT_THROW(parse_generator_spec("n=1"), ConfigError);
  EXPECT_THROW(parse_generator_spec("n=5,bogus=2"), ConfigError);
  EXPECT_THROW(parse_generator_spec("n=five"), ConfigError);
}

TEST(EngineModeText, Parses) {
  EXPECT_EQ(parse_engine_mode("delta"), EngineMode::delta_seq);
  EXPECT_EQ(parse_engine_mode("delta-par"), EngineMode::delta_par);
  EXPECT_THROW(parse_engine_mode("gpu"), ConfigError);
}

}  // namespace
}  // namespace qapsa::bench
