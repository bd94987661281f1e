#pragma once

#include <cstdint>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "time_grid.hpp"

namespace bdsde {

// Named sub-streams split off a master seed.  Each (stream, counter) pair
// yields an independent generator seed, so repetition r is reproducible
// no matter how many repetitions run or in which order.
enum class SeedStream : std::uint64_t {
  b_path = 1,   // counter = ensemble path index
  w_batch = 2,  // counter = repetition index
  unit = 3,     // counter = experiment unit index
};

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t counter);

// Standard normal quantile, accurate to full double precision.
double inverse_normal_cdf(double p);

// Deterministic N(0,1) stream: mt19937_64 driving the inverse CDF.
// One uniform in (0,1) per draw, so the draw sequence is a pure function of
// the seed and the draw count.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    return inverse_normal_cdf(u);
  }

 private:
  std::mt19937_64 engine_;
};

// One trajectory of the l-dimensional driver shared by every sample of a
// run.  Cumulative node values are the source of truth; increments are
// differences of stored nodes, which makes coarsening exact by construction.
struct BPath {
  TimeGrid grid;
  std::size_t dim = 0;        // l
  std::vector<double> nodes;  // (N+1) x l, node-major, nodes[0..dim) = 0

  double node(std::size_t n, std::size_t comp) const { return nodes[n * dim + comp]; }
  double increment(std::size_t n, std::size_t comp) const {
    return nodes[(n + 1) * dim + comp] - nodes[n * dim + comp];
  }
  // B_T
  std::span<const double> terminal() const { return {nodes.data() + grid.steps * dim, dim}; }
};

// M independent d-dimensional increment sequences, one per sample path.
// Draw order is sample-major, then step, then component; extending M keeps
// the first samples unchanged.
struct WBatch {
  TimeGrid grid;
  std::size_t dim = 0;      // d
  std::size_t samples = 0;  // M
  std::vector<double> increments;  // [n][m][c]

  double increment(std::size_t n, std::size_t m, std::size_t c) const {
    return increments[(n * samples + m) * dim + c];
  }
  std::span<const double> increments_at(std::size_t n, std::size_t m) const {
    return {increments.data() + (n * samples + m) * dim, dim};
  }
};

BPath sample_b_path(std::uint64_t seed, const TimeGrid& grid, std::size_t dim);

// Restriction of a fine path to a coarser grid whose step count divides the
// fine one.  Coarse nodes are copies of fine nodes, so chained coarsening is
// bit-exact and the terminal value is preserved.
BPath coarsen_b_path(const BPath& fine, const TimeGrid& coarse);

WBatch sample_w_batch(std::uint64_t seed, const TimeGrid& grid, std::size_t dim,
                      std::size_t samples);

}  // namespace bdsde
