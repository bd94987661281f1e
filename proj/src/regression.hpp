#pragma once

#include <atomic>
#include <cstdint>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace bdsde {

// Axis-aligned box [lower, upper) split into half-open cells of edge length
// delta; the last cell on each axis absorbs any remainder.  Indicator
// functions of the cells form the regression basis: fitting is then just a
// per-cell average, no linear system involved.
class HypercubeBasis {
 public:
  HypercubeBasis(std::vector<double> lower, std::vector<double> upper, double delta);

  std::size_t dim() const { return lower_.size(); }
  std::size_t cells() const { return cells_; }
  std::size_t cells_on_axis(std::size_t axis) const { return axis_cells_[axis]; }
  double edge() const { return delta_; }
  std::span<const double> lower() const { return lower_; }
  std::span<const double> upper() const { return upper_; }
  bool has_degenerate_axis() const { return degenerate_axis_; }

  // Linear index of the cell containing x; out-of-domain points are clamped
  // to the boundary cell and counted.
  std::size_t locate(std::span<const double> x) const;

  // bounds of one cell, written to lo/hi (dim values each)
  void cell_bounds(std::size_t cell, std::span<double> lo, std::span<double> hi) const;

  std::uint64_t clamp_count() const { return clamp_count_.load(std::memory_order_relaxed); }

 private:
  std::vector<double> lower_, upper_;
  double delta_ = 0.0;
  std::vector<std::size_t> axis_cells_, strides_;
  std::size_t cells_ = 0;
  bool degenerate_axis_ = false;
  mutable std::atomic<std::uint64_t> clamp_count_{0};
};

inline std::shared_ptr<const HypercubeBasis> build_basis(std::vector<double> lower,
                                                         std::vector<double> upper, double delta) {
  return std::make_shared<const HypercubeBasis>(std::move(lower), std::move(upper), delta);
}

// Piecewise-constant function on a basis: a block of values per cell plus
// the sample count that produced it.  Unoccupied cells hold zero.
class PiecewiseField {
 public:
  PiecewiseField(std::shared_ptr<const HypercubeBasis> basis, std::size_t values_per_cell);

  std::span<const double> value_at_cell(std::size_t cell) const {
    return {values_.data() + cell * values_per_cell_, values_per_cell_};
  }
  std::span<const double> evaluate(std::span<const double> x) const {
    return value_at_cell(basis_->locate(x));
  }
  std::size_t occupancy(std::size_t cell) const { return occupancy_[cell]; }
  std::size_t occupied_cells() const;
  std::size_t values_per_cell() const { return values_per_cell_; }
  const HypercubeBasis& basis() const { return *basis_; }
  const std::shared_ptr<const HypercubeBasis>& basis_ptr() const { return basis_; }

  friend PiecewiseField project(std::shared_ptr<const HypercubeBasis> basis,
                                std::span<const double> points, std::span<const double> responses,
                                std::size_t values_per_sample);
  friend PiecewiseField project_located(std::shared_ptr<const HypercubeBasis> basis,
                                        std::span<const std::size_t> cells,
                                        std::span<const double> responses,
                                        std::size_t values_per_sample);

 private:
  std::shared_ptr<const HypercubeBasis> basis_;
  std::size_t values_per_cell_;
  std::vector<double> values_;
  std::vector<std::size_t> occupancy_;
};

// Least-squares fit on the indicator basis: each occupied cell gets the
// arithmetic mean of the responses falling into it.  points is M x dim
// row-major, responses M x values_per_sample.
PiecewiseField project(std::shared_ptr<const HypercubeBasis> basis, std::span<const double> points,
                       std::span<const double> responses, std::size_t values_per_sample);

// Same fit with cell indices already computed (the backward pass locates
// each sample once and reuses the indices across iterations).
PiecewiseField project_located(std::shared_ptr<const HypercubeBasis> basis,
                               std::span<const std::size_t> cells,
                               std::span<const double> responses, std::size_t values_per_sample);

}  // namespace bdsde
