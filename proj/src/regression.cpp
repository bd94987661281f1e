#include "regression.hpp"

#include <cmath>
#include <stdexcept>

#include "numeric.hpp"

namespace bdsde {

HypercubeBasis::HypercubeBasis(std::vector<double> lower, std::vector<double> upper, double delta)
    : lower_(std::move(lower)), upper_(std::move(upper)), delta_(delta) {
  if (lower_.empty()) throw std::invalid_argument("basis: dimension must be positive");
  if (upper_.size() != lower_.size()) throw std::invalid_argument("basis: bound sizes differ");
  if (!(delta_ > 0.0)) throw std::invalid_argument("basis: cell edge must be positive");

  axis_cells_.resize(lower_.size());
  strides_.resize(lower_.size());
  cells_ = 1;
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    const double span = upper_[i] - lower_[i];
    if (!(span > 0.0)) throw std::invalid_argument("basis: upper bound must exceed lower bound");
    // floor + cover check instead of ceil: immune to the division rounding
    // up across an integer boundary
    std::size_t count = static_cast<std::size_t>(std::floor(span / delta_));
    if (lower_[i] + static_cast<double>(count) * delta_ < upper_[i]) ++count;
    if (count == 0) count = 1;
    if (count == 1) degenerate_axis_ = true;
    axis_cells_[i] = count;
  }
  for (std::size_t i = lower_.size(); i-- > 0;) {
    strides_[i] = cells_;
    cells_ *= axis_cells_[i];
  }
}

std::size_t HypercubeBasis::locate(std::span<const double> x) const {
  std::size_t index = 0;
  bool clamped = false;
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    std::size_t cell;
    if (x[i] < lower_[i]) {
      cell = 0;
      clamped = true;
    } else if (x[i] >= upper_[i]) {
      cell = axis_cells_[i] - 1;
      clamped = true;
    } else {
      const double offset = (x[i] - lower_[i]) / delta_;
      cell = static_cast<std::size_t>(offset);
      if (cell >= axis_cells_[i]) cell = axis_cells_[i] - 1;
    }
    index += cell * strides_[i];
  }
  if (clamped) clamp_count_.fetch_add(1, std::memory_order_relaxed);
  return index;
}

void HypercubeBasis::cell_bounds(std::size_t cell, std::span<double> lo, std::span<double> hi) const {
  for (std::size_t i = 0; i < lower_.size(); ++i) {
    const std::size_t axis_index = (cell / strides_[i]) % axis_cells_[i];
    lo[i] = lower_[i] + static_cast<double>(axis_index) * delta_;
    hi[i] = axis_index + 1 == axis_cells_[i] ? upper_[i]
                                             : lower_[i] + static_cast<double>(axis_index + 1) * delta_;
  }
}

PiecewiseField::PiecewiseField(std::shared_ptr<const HypercubeBasis> basis,
                               std::size_t values_per_cell)
    : basis_(std::move(basis)),
      values_per_cell_(values_per_cell),
      values_(basis_->cells() * values_per_cell, 0.0),
      occupancy_(basis_->cells(), 0) {
  if (values_per_cell_ == 0) throw std::invalid_argument("field: values_per_cell must be positive");
}

std::size_t PiecewiseField::occupied_cells() const {
  std::size_t count = 0;
  for (std::size_t occ : occupancy_) count += occ > 0 ? 1 : 0;
  return count;
}

PiecewiseField project(std::shared_ptr<const HypercubeBasis> basis, std::span<const double> points,
                       std::span<const double> responses, std::size_t values_per_sample) {
  const std::size_t dim = basis->dim();
  if (points.size() % dim != 0) throw std::invalid_argument("project: points size not a multiple of dim");
  const std::size_t samples = points.size() / dim;
  if (samples == 0) throw std::invalid_argument("project: no samples");

  std::vector<std::size_t> cells(samples);
  for (std::size_t m = 0; m < samples; ++m) {
    cells[m] = basis->locate(points.subspan(m * dim, dim));
  }
  return project_located(std::move(basis), cells, responses, values_per_sample);
}

PiecewiseField project_located(std::shared_ptr<const HypercubeBasis> basis,
                               std::span<const std::size_t> cells,
                               std::span<const double> responses, std::size_t values_per_sample) {
  const std::size_t samples = cells.size();
  if (samples == 0) throw std::invalid_argument("project: no samples");
  if (responses.size() != samples * values_per_sample)
    throw std::invalid_argument("project: responses size does not match samples");

  PiecewiseField field(std::move(basis), values_per_sample);
  const std::size_t q = values_per_sample;

  // compensated one-pass accumulation per cell
  std::vector<double> comp(field.values_.size(), 0.0);
  for (std::size_t m = 0; m < samples; ++m) {
    const std::size_t cell = cells[m];
    ++field.occupancy_[cell];
    for (std::size_t j = 0; j < q; ++j) {
      double& sum = field.values_[cell * q + j];
      const double v = responses[m * q + j];
      const double t = sum + v;
      if (std::abs(sum) >= std::abs(v)) {
        comp[cell * q + j] += (sum - t) + v;
      } else {
        comp[cell * q + j] += (v - t) + sum;
      }
      sum = t;
    }
  }
  for (std::size_t cell = 0; cell < field.occupancy_.size(); ++cell) {
    if (field.occupancy_[cell] == 0) continue;
    const double count = static_cast<double>(field.occupancy_[cell]);
    for (std::size_t j = 0; j < q; ++j) {
      field.values_[cell * q + j] = (field.values_[cell * q + j] + comp[cell * q + j]) / count;
    }
  }
  return field;
}

}  // namespace bdsde
