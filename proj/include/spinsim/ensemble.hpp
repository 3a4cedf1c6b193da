// Path ensembles: mergeable running statistics and a deterministic parallel
// driver.
//
// Paths are grouped into fixed-size chunks by path index. A chunk is always
// accumulated in index order and chunks are merged in chunk order, so the
// floating-point result depends on (n_paths, chunk size) only and never on
// the number of threads.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "spinsim/integrator.hpp"

namespace spinsim {

/// Running count, mean and sum of squared deviations (Welford), mergeable
/// with the pairwise update of Chan, Golub and LeVeque.
struct Estimate {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Estimate& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n);
    const double nb = static_cast<double>(o.n);
    const double nt = na + nb;
    const double d = o.mean - mean;
    mean += d * (nb / nt);
    m2 += o.m2 + d * d * (na * nb / nt);
    n += o.n;
  }

  /// Sample variance (n - 1 denominator); 0 for fewer than two samples.
  double variance() const {
    return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
  }

  /// Standard error of the mean.
  double std_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

struct EnsembleOptions {
  std::size_t n_paths = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  std::size_t chunk_size = 64;

  void validate() const {
    if (n_paths == 0) throw std::invalid_argument("n_paths must be >= 1");
    if (chunk_size == 0) throw std::invalid_argument("chunk_size must be >= 1");
  }

  unsigned resolved_threads() const {
    unsigned t = threads ? threads : std::thread::hardware_concurrency();
    return std::max(1u, t);
  }
};

struct PathError {
  std::size_t path = 0;
  double t = 0.0;
  std::string message;
};

/// What one path contributes: values on the (observable x recorded time)
/// table, flattened row-major, and a few per-path scalars kept verbatim.
struct PathRecord {
  std::vector<double> cells;
  std::vector<double> scalars;
};

/// Accumulated ensemble. `cells[i]` summarises entry i of every successful
/// path's PathRecord; `scalars[p]` holds the scalars of the p-th successful
/// path, in path-index order.
struct EnsembleAccumulator {
  std::vector<Estimate> cells;
  std::vector<std::vector<double>> scalars;
  std::vector<std::size_t> paths;  // index of each successful path
  std::vector<PathError> failures;

  explicit EnsembleAccumulator(std::size_t n_cells = 0) : cells(n_cells) {}

  void add(std::size_t path, PathRecord&& r) {
    if (r.cells.size() != cells.size())
      throw std::logic_error("path record has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i].add(r.cells[i]);
    scalars.push_back(std::move(r.scalars));
    paths.push_back(path);
  }

  void merge(EnsembleAccumulator&& o) {
    if (o.cells.size() != cells.size())
      throw std::logic_error("merging accumulators of different shape");
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i].merge(o.cells[i]);
    for (auto& s : o.scalars) scalars.push_back(std::move(s));
    paths.insert(paths.end(), o.paths.begin(), o.paths.end());
    for (auto& f : o.failures) failures.push_back(std::move(f));
  }

  std::size_t n_ok() const { return paths.size(); }
  std::size_t n_failed() const { return failures.size(); }
};

/// Runs `simulate(path_index, RngStream) -> PathRecord` for every path and
/// returns the merged accumulator. A PathFailure drops that path and is
/// recorded; any other exception aborts the run and is rethrown.
template <class Simulate>
EnsembleAccumulator run_ensemble(const EnsembleOptions& opt,
                                 std::size_t n_cells, Simulate&& simulate) {
  opt.validate();
  const std::size_t n_chunks = (opt.n_paths + opt.chunk_size - 1) / opt.chunk_size;

  auto run_chunk = [&](std::size_t c) {
    EnsembleAccumulator acc(n_cells);
    const std::size_t begin = c * opt.chunk_size;
    const std::size_t end = std::min(opt.n_paths, begin + opt.chunk_size);
    for (std::size_t i = begin; i < end; ++i) {
      try {
        acc.add(i, simulate(i, RngStream(opt.seed, i)));
      } catch (const PathFailure& e) {
        acc.failures.push_back({i, e.t(), e.what()});
      }
    }
    return acc;
  };

  EnsembleAccumulator total(n_cells);
  const unsigned n_threads = static_cast<unsigned>(
      std::min<std::size_t>(opt.resolved_threads(), n_chunks));
  if (n_threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) total.merge(run_chunk(c));
    return total;
  }

  // Finished chunks wait in `pending` until every earlier chunk is merged.
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::map<std::size_t, EnsembleAccumulator> pending;
  std::size_t merged = 0;
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= n_chunks) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (error) return;
      }
      try {
        EnsembleAccumulator acc = run_chunk(c);
        std::lock_guard<std::mutex> lock(mu);
        pending.emplace(c, std::move(acc));
        for (auto it = pending.find(merged); it != pending.end();
             it = pending.find(merged)) {
          total.merge(std::move(it->second));
          pending.erase(it);
          ++merged;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
  return total;
}

}  // namespace spinsim
