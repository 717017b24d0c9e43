// qapsa: solve, benchmark and generate QAP instances.
//
//   qapsa solve    --gen n=50,seed=1 --iters 100000 --seed 7 --mode delta-par --workers 4
//   qapsa solve    --instance tai.dat --iters 10 --mode scratch
//   qapsa bench    --sizes 50 --iters 1000,10000 --modes delta-seq,delta-par --workers 4 --seeds 1,2
//   qapsa generate --n 100 --seed 42 -o tai100.dat
//
// Exit codes: 0 ok, 1 usage, 2 I/O or malformed instance, 3 unsupported instance, 4 internal.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qapsa/annealer.hpp"
#include "qapsa/bench.hpp"
#include "qapsa/instance_io.hpp"
#include "qapsa/parallel_engine.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitUnsupported = 3;
constexpr int kExitInternal = 4;

std::size_t default_workers() {
  if (const char* env = std::getenv("QAPSA_WORKERS")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct SolveOptions {
  std::string instance_path;
  std::string gen;
  std::uint64_t iters = 0;
  std::uint64_t seed = 0;
  std::string mode = "delta-seq";
  std::size_t workers = 0;
  std::optional<double> t0, tf;
};

struct GenerateOptions {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::int64_t max_value = 100;
  std::string output;
};

struct BenchOptions {
  std::vector<std::size_t> sizes;
  std::vector<std::uint64_t> iters;
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::string> modes{"delta-seq", "delta-par"};
  std::vector<std::size_t> workers;
  std::string baseline = "delta-seq";
  std::uint64_t instance_seed = 1;
  std::int64_t max_value = 100;
  std::string out;
  std::string speedup_out;
  std::size_t jobs = 1;
};

int run_solve(const SolveOptions& opt) {
  if (opt.iters < 1) throw qapsa::ConfigError("--iters must be at least 1");
  if (opt.instance_path.empty() == opt.gen.empty()) throw qapsa::ConfigError("give exactly one of --instance or --gen");
  const std::size_t workers = opt.workers ? opt.workers : default_workers();

  auto instance = std::make_shared<const qapsa::Instance>(
      opt.gen.empty() ? qapsa::read_qaplib_file(opt.instance_path)
                      : qapsa::generate_taixxa(qapsa::bench::parse_generator_spec(opt.gen)));

  qapsa::AnnealParams params;
  params.iterations = opt.iters;
  params.seed = opt.seed;
  params.t0 = opt.t0;
  params.tf = opt.tf;

  qapsa::RunStats stats;
  std::string mode_name = opt.mode;
  std::size_t reported_workers = 1;
  if (opt.mode == "auto") {
    params.mode = qapsa::Mode::automatic;
    stats = qapsa::anneal(instance, params);
  } else {
    const auto mode = qapsa::bench::parse_engine_mode(opt.mode);
    mode_name = qapsa::bench::to_string(mode);
    if (mode == qapsa::bench::EngineMode::delta_par) reported_workers = workers;
    stats = qapsa::bench::run_engine(instance, mode, workers, params);
  }

  nlohmann::json report;
  report["n"] = instance->n();
  report["iters"] = stats.iterations;
  report["mode"] = mode_name;
  report["workers"] = reported_workers;
  report["best_cost"] = stats.best_cost;
  report["best_perm"] = std::vector<std::size_t>(stats.best_perm.locations().begin(), stats.best_perm.locations().end());
  report["acceptance_rate"] = stats.acceptance_rate;
  report["wall_time"] = stats.wall_time;
  std::cout << report.dump() << '\n';
  return 0;
}

int run_generate(const GenerateOptions& opt) {
  if (opt.n < 2) throw qapsa::ConfigError("--n must be at least 2");
  if (opt.max_value < 1) throw qapsa::ConfigError("--max must be at least 1");
  const auto instance = qapsa::generate_taixxa({opt.n, opt.seed, opt.max_value});
  qapsa::write_qaplib_file(instance, opt.output);
  std::cout << opt.output << '\n';
  return 0;
}

struct Cell {
  std::size_t n;
  std::uint64_t iters;
  qapsa::bench::EngineMode mode;
  std::size_t workers;
  std::uint64_t seed;
};

// Runs cells in forked children, at most `jobs` at a time; rows arrive in completion order.
template <typename Emit>
void run_cells_forked(const std::vector<Cell>& cells,
                      const std::map<std::size_t, std::shared_ptr<const qapsa::Instance>>& instances,
                      std::size_t jobs, Emit&& emit) {
  std::map<pid_t, int> running;
  const auto reap_one = [&] {
    int status = 0;
    const pid_t pid = ::waitpid(-1, &status, 0);
    if (pid < 0) throw qapsa::Error("waitpid failed");
    const int fd = running.at(pid);
    running.erase(pid);
    std::string text;
    char buf[512];
    for (ssize_t got; (got = ::read(fd, buf, sizeof buf)) > 0;) text.append(buf, static_cast<std::size_t>(got));
    ::close(fd);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) throw qapsa::Error("bench cell failed: " + text);
    while (!text.empty() && text.back() == '\n') text.pop_back();
    emit(qapsa::bench::parse_csv_row(text));
  };

  for (const auto& cell : cells) {
    while (running.size() >= jobs) reap_one();
    int fds[2];
    if (::pipe(fds) != 0) throw qapsa::Error("pipe failed");
    std::cout.flush();
    const pid_t pid = ::fork();
    if (pid < 0) throw qapsa::Error("fork failed");
    if (pid == 0) {
      ::close(fds[0]);
      int code = 0;
      std::string line;
      try {
        line = qapsa::bench::to_csv(
                   qapsa::bench::run_cell(instances.at(cell.n), cell.mode, cell.workers, cell.iters, cell.seed)) +
               "\n";
      } catch (const std::exception& e) {
        line = e.what();
        code = 1;
      }
      [[maybe_unused]] const auto written = ::write(fds[1], line.data(), line.size());
      ::_exit(code);
    }
    ::close(fds[1]);
    running[pid] = fds[0];
  }
  while (!running.empty()) reap_one();
}

int run_bench(const BenchOptions& opt) {
  using qapsa::bench::EngineMode;
  if (opt.sizes.empty() || opt.iters.empty() || opt.seeds.empty() || opt.modes.empty())
    throw qapsa::ConfigError("bench needs --sizes, --iters, --seeds and --modes");
  for (auto n : opt.sizes)
    if (n < 2) throw qapsa::ConfigError("sizes must be at least 2");
  for (auto i : opt.iters)
    if (i < 1) throw qapsa::ConfigError("iteration counts must be at least 1");
  if (opt.jobs < 1) throw qapsa::ConfigError("--jobs must be at least 1");
  std::vector<EngineMode> modes;
  for (const auto& m : opt.modes) modes.push_back(qapsa::bench::parse_engine_mode(m));
  const EngineMode baseline = qapsa::bench::parse_engine_mode(opt.baseline);
  if (baseline == EngineMode::delta_par) throw qapsa::ConfigError("--baseline must be scratch or delta-seq");
  std::vector<std::size_t> worker_grid = opt.workers;
  if (worker_grid.empty()) worker_grid.push_back(default_workers());
  for (auto w : worker_grid)
    if (w < 1) throw qapsa::ConfigError("worker counts must be at least 1");

  std::map<std::size_t, std::shared_ptr<const qapsa::Instance>> instances;
  for (auto n : opt.sizes)
    instances[n] = std::make_shared<const qapsa::Instance>(qapsa::generate_taixxa({n, opt.instance_seed, opt.max_value}));

  // every mode sees the same seeds so trajectories line up across modes
  std::vector<Cell> cells;
  for (auto n : opt.sizes)
    for (auto iters : opt.iters)
      for (auto mode : modes)
        for (auto seed : opt.seeds) {
          if (mode == EngineMode::delta_par)
            for (auto w : worker_grid) cells.push_back({n, iters, mode, w, seed});
          else
            cells.push_back({n, iters, mode, 1, seed});
        }

  std::ofstream file;
  if (!opt.out.empty()) {
    file.open(opt.out, std::ios::trunc);
    if (!file) throw qapsa::IoError("cannot open '" + opt.out + "' for writing");
  }
  std::ostream& out = opt.out.empty() ? std::cout : file;
  out << qapsa::bench::kCsvHeader << '\n' << std::flush;

  std::vector<qapsa::bench::BenchRow> rows;
  const auto emit = [&](const qapsa::bench::BenchRow& row) {
    rows.push_back(row);
    out << qapsa::bench::to_csv(row) << '\n' << std::flush;
  };
  if (opt.jobs == 1)
    for (const auto& c : cells) emit(qapsa::bench::run_cell(instances.at(c.n), c.mode, c.workers, c.iters, c.seed));
  else
    run_cells_forked(cells, instances, opt.jobs, emit);
  if (!out) throw qapsa::IoError("error writing benchmark rows");

  const auto speedups = qapsa::bench::compute_speedups(rows, baseline);
  std::ofstream speedup_file;
  std::ostream* sp = &std::cout;
  if (!opt.speedup_out.empty()) {
    speedup_file.open(opt.speedup_out, std::ios::trunc);
    if (!speedup_file) throw qapsa::IoError("cannot open '" + opt.speedup_out + "' for writing");
    sp = &speedup_file;
  } else if (opt.out.empty()) {
    std::cout << '\n';
  }
  *sp << qapsa::bench::kSpeedupHeader << '\n';
  for (const auto& s : speedups) *sp << qapsa::bench::to_csv(s) << '\n';
  sp->flush();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated annealing for the quadratic assignment problem"};
  app.require_subcommand(1);

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "Anneal one instance and print a JSON report");
  solve_cmd->add_option("--instance", solve.instance_path, "QAPLIB instance file");
  solve_cmd->add_option("--gen", solve.gen, "Generate an instance: n=<N>,seed=<S>[,max=<M>]");
  solve_cmd->add_option("--iters", solve.iters, "Proposed swaps (>= 1)")->required();
  solve_cmd->add_option("--seed", solve.seed, "Annealing seed");
  solve_cmd->add_option("--mode", solve.mode, "scratch | delta-seq | delta-par | auto");
  solve_cmd->add_option("--workers", solve.workers, "Workers for delta-par (default: $QAPSA_WORKERS or core count)");
  solve_cmd->add_option("--t0", solve.t0, "Initial temperature (with --tf)");
  solve_cmd->add_option("--tf", solve.tf, "Final temperature (with --t0)");

  GenerateOptions gen;
  auto* gen_cmd = app.add_subcommand("generate", "Write a random symmetric zero-diagonal instance");
  gen_cmd->add_option("--n", gen.n, "Instance size (>= 2)")->required();
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--max", gen.max_value, "Largest off-diagonal entry");
  gen_cmd->add_option("-o,--output", gen.output, "Output path")->required();

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run the size x iterations x mode x seed grid, CSV out");
  bench_cmd->add_option("--sizes", bench.sizes, "Instance sizes")->delimiter(',')->required();
  bench_cmd->add_option("--iters", bench.iters, "Iteration counts")->delimiter(',')->required();
  bench_cmd->add_option("--seeds", bench.seeds, "Annealing seeds")->delimiter(',');
  bench_cmd->add_option("--modes", bench.modes, "scratch, delta-seq, delta-par")->delimiter(',');
  bench_cmd->add_option("--workers", bench.workers, "Worker counts for delta-par")->delimiter(',');
  bench_cmd->add_option("--baseline", bench.baseline, "Reference mode for speedup rows");
  bench_cmd->add_option("--instance-seed", bench.instance_seed, "Generator seed for every size");
  bench_cmd->add_option("--max", bench.max_value, "Largest generated entry");
  bench_cmd->add_option("--out", bench.out, "CSV path (default stdout)");
  bench_cmd->add_option("--speedup-out", bench.speedup_out, "Speedup CSV path");
  bench_cmd->add_option("--jobs", bench.jobs, "Run up to this many cells in separate processes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return run_solve(solve);
    if (*gen_cmd) return run_generate(gen);
    if (*bench_cmd) return run_bench(bench);
  } catch (const qapsa::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const qapsa::UnsupportedInstanceError& e) {
    std::cerr << "unsupported instance: " << e.what() << '\n';
    return kExitUnsupported;
  } catch (const qapsa::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const qapsa::ParseError& e) {
    std::cerr << "malformed instance: " << e.what() << '\n';
    return kExitIo;
  } catch (const qapsa::TruncationError& e) {
    std::cerr << "malformed instance: " << e.what() << '\n';
    return kExitIo;
  } catch (const qapsa::SizeError& e) {
    std::cerr << "malformed instance: " << e.what() << '\n';
    return kExitIo;
  } catch (const qapsa::DomainError& e) {
    std::cerr << "malformed instance: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitUsage;
}
