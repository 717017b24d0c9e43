#pragma once

// Experiment cells, CSV rows and speedup aggregation for the benchmark harness.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "qapsa/annealer.hpp"
#include "qapsa/errors.hpp"
#include "qapsa/instance_io.hpp"
#include "qapsa/parallel_engine.hpp"

namespace qapsa::bench {

enum class EngineMode { scratch, delta_seq, delta_par };

inline EngineMode parse_engine_mode(std::string_view text) {
  if (text == "scratch") return EngineMode::scratch;
  if (text == "delta-seq" || text == "delta") return EngineMode::delta_seq;
  if (text == "delta-par") return EngineMode::delta_par;
  throw ConfigError("unknown mode '" + std::string(text) + "' (expected scratch, delta-seq or delta-par)");
}

inline std::string_view to_string(EngineMode mode) noexcept {
  switch (mode) {
    case EngineMode::scratch: return "scratch";
    case EngineMode::delta_seq: return "delta-seq";
    case EngineMode::delta_par: return "delta-par";
  }
  return "?";
}

struct BenchRow {
  std::size_t n = 0;
  std::uint64_t iters = 0;
  EngineMode mode = EngineMode::delta_seq;
  std::size_t workers = 1;
  double wall_time = 0.0;
  Cost best_cost = 0;
  double acceptance_rate = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kCsvHeader = "n,iters,mode,workers,wall_time_s,best_cost,acceptance_rate,seed";
inline constexpr std::string_view kSpeedupHeader = "n,iters,mode,workers,baseline,speedup";

/// Locale-independent shortest round-trip formatting.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string to_csv(const BenchRow& row) {
  std::string out;
  out += std::to_string(row.n) + ',' + std::to_string(row.iters) + ',' + std::string(to_string(row.mode)) + ',' +
         std::to_string(row.workers) + ',' + format_double(row.wall_time) + ',' + std::to_string(row.best_cost) +
         ',' + format_double(row.acceptance_rate) + ',' + std::to_string(row.seed);
  return out;
}

namespace detail {

template <typename T>
T parse_field(std::string_view field) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw ConfigError("malformed CSV field '" + std::string(field) + "'");
  return value;
}

}  // namespace detail

inline BenchRow parse_csv_row(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  if (fields.size() != 8) throw ConfigError("CSV row must have 8 fields: '" + std::string(line) + "'");
  BenchRow row;
  row.n = detail::parse_field<std::size_t>(fields[0]);
  row.iters = detail::parse_field<std::uint64_t>(fields[1]);
  row.mode = parse_engine_mode(fields[2]);
  row.workers = detail::parse_field<std::size_t>(fields[3]);
  row.wall_time = detail::parse_field<double>(fields[4]);
  row.best_cost = detail::parse_field<Cost>(fields[5]);
  row.acceptance_rate = detail::parse_field<double>(fields[6]);
  row.seed = detail::parse_field<std::uint64_t>(fields[7]);
  return row;
}

/// Runs one engine and reports it as a row. Wall time covers Δ initialization
/// and the anneal itself, not instance construction.
inline RunStats run_engine(std::shared_ptr<const Instance> instance, EngineMode mode, std::size_t workers,
                           const AnnealParams& base) {
  AnnealParams params = base;
  switch (mode) {
    case EngineMode::scratch:
      params.mode = Mode::scratch;
      return anneal(std::move(instance), params);
    case EngineMode::delta_seq:
      params.mode = Mode::delta;
      return anneal(std::move(instance), params);
    case EngineMode::delta_par: {
      params.mode = Mode::delta;
      ParallelConfig config;
      config.workers = workers;
      return anneal_parallel(std::move(instance), params, config);
    }
  }
  throw ConfigError("unknown engine mode");
}

inline BenchRow run_cell(std::shared_ptr<const Instance> instance, EngineMode mode, std::size_t workers,
                         std::uint64_t iters, std::uint64_t seed) {
  AnnealParams params;
  params.iterations = iters;
  params.seed = seed;
  const std::size_t n = instance->n();
  const RunStats stats = run_engine(std::move(instance), mode, workers, params);
  return {n, iters, mode, mode == EngineMode::delta_par ? workers : 1, stats.wall_time, stats.best_cost,
          stats.acceptance_rate, seed};
}

struct SpeedupRow {
  std::size_t n;
  std::uint64_t iters;
  EngineMode mode;
  std::size_t workers;
  EngineMode baseline;
  double speedup;
};

inline std::string to_csv(const SpeedupRow& row) {
  return std::to_string(row.n) + ',' + std::to_string(row.iters) + ',' + std::string(to_string(row.mode)) + ',' +
         std::to_string(row.workers) + ',' + std::string(to_string(row.baseline)) + ',' +
         format_double(row.speedup);
}

/// P = mean t_baseline / mean t_candidate per (n, iters) for every
/// non-baseline (mode, workers) group; seeds are averaged.
inline std::vector<SpeedupRow> compute_speedups(const std::vector<BenchRow>& rows, EngineMode baseline) {
  using CellKey = std::tuple<std::size_t, std::uint64_t>;
  using GroupKey = std::tuple<std::size_t, std::uint64_t, EngineMode, std::size_t>;
  struct Sum {
    double total = 0.0;
    std::size_t count = 0;
    double mean() const { return total / static_cast<double>(count); }
  };
  std::map<CellKey, Sum> reference;
  std::map<GroupKey, Sum> candidates;
  for (const auto& row : rows) {
    if (row.mode == baseline) {
      auto& sum = reference[{row.n, row.iters}];
      sum.total += row.wall_time;
      ++sum.count;
    } else {
      auto& sum = candidates[{row.n, row.iters, row.mode, row.workers}];
      sum.total += row.wall_time;
      ++sum.count;
    }
  }
  std::vector<SpeedupRow> out;
  for (const auto& [key, sum] : candidates) {
    const auto& [n, iters, mode, workers] = key;
    const auto ref = reference.find({n, iters});
    if (ref == reference.end()) continue;
    out.push_back({n, iters, mode, workers, baseline, ref->second.mean() / sum.mean()});
  }
  return out;
}

/// "n=50,seed=1[,max=100]"
inline GeneratorSpec parse_generator_spec(std::string_view text) {
  GeneratorSpec spec;
  bool have_n = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i != text.size() && text[i] != ',') continue;
    const auto item = text.substr(start, i - start);
    start = i + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("generator option '" + std::string(item) + "' needs key=value");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    if (key == "n") {
      spec.n = detail::parse_field<std::size_t>(value);
      have_n = true;
    } else if (key == "seed") {
      spec.seed = detail::parse_field<std::uint64_t>(value);
    } else if (key == "max" || key == "max_value") {
      spec.max_value = detail::parse_field<std::int64_t>(value);
    } else {
      throw ConfigError("unknown generator option '" + std::string(key) + "'");
    }
  }
  if (!have_n) throw ConfigError("generator spec needs n=<size>");
  if (spec.n < 2) throw ConfigError("generated instance size must be at least 2");
  if (spec.max_value < 1) throw ConfigError("max must be at least 1");
  return spec;
}

}  // namespace qapsa::bench
