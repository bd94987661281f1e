#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "problem.hpp"
#include "rng.hpp"

namespace bdsde {

// Euler states X_n^m for every step and sample, together with the increment
// batch that generated them.  All slices are retained; the backward pass
// needs X_n and X_{n+1} at the same time.
struct PathBatch {
  TimeGrid grid;
  std::size_t dim = 0;      // d
  std::size_t samples = 0;  // M
  std::vector<double> states;  // [n][m][c], n = 0..N
  WBatch noise;

  std::span<const double> state(std::size_t n, std::size_t m) const {
    return {states.data() + (n * samples + m) * dim, dim};
  }
};

// X_0^m = x0; X_{n+1}^m = X_n^m + b(X_n^m) h + sigma(X_n^m) dW_n^m.
// Aborts with step/sample diagnostics if a state turns non-finite.
PathBatch simulate_forward(const Problem& problem, WBatch noise, std::span<const double> x0);

inline PathBatch simulate_forward(const Problem& problem, WBatch noise) {
  return simulate_forward(problem, std::move(noise), problem.x0);
}

}  // namespace bdsde
