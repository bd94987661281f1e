#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bdsde {

// Uniform partition of [0, T] into N steps of width h = T/N.
struct TimeGrid {
  double horizon = 0.0;  // T
  std::size_t steps = 0;  // N
  double step = 0.0;      // h

  // t_n; the last node is pinned to T so the grid always ends exactly at the
  // horizon even when T/N is not representable.
  double node(std::size_t n) const { return n == steps ? horizon : static_cast<double>(n) * step; }

  bool operator==(const TimeGrid& other) const {
    return horizon == other.horizon && steps == other.steps;
  }
};

inline TimeGrid make_grid(double horizon, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("make_grid: steps must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("make_grid: horizon must be positive");
  return TimeGrid{horizon, steps, horizon / static_cast<double>(steps)};
}

}  // namespace bdsde
