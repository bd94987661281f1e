#include "analytics.hpp"

#include <cmath>
#include <stdexcept>

#include "numeric.hpp"

namespace bdsde {

namespace {

double linear_multiplier(std::size_t n, const BPath& b_path, const LinearParams& p) {
  const double t = b_path.grid.node(n);
  const double tau = p.horizon - t;
  const double b_gap = b_path.node(b_path.grid.steps, 0) - b_path.node(n, 0);
  return std::exp(p.a0 * tau + p.b0 * b_gap - 0.5 * p.b0 * p.b0 * tau);
}

}  // namespace

double explicit_linear_y(std::size_t n, double x, const BPath& b_path, const LinearParams& p) {
  const double tau = p.horizon - b_path.grid.node(n);
  return linear_multiplier(n, b_path, p) * (p.strike - x * std::exp(p.mu * tau));
}

double explicit_linear_z(std::size_t n, double x, const BPath& b_path, const LinearParams& p) {
  const double tau = p.horizon - b_path.grid.node(n);
  return -p.sigma * x * std::exp(p.mu * tau) * linear_multiplier(n, b_path, p);
}

RunStats empirical_stats(const std::vector<std::vector<double>>& values) {
  if (values.empty()) throw std::invalid_argument("empirical_stats: no values");
  const std::size_t k = values.front().size();
  for (const auto& v : values) {
    if (v.size() != k) throw std::invalid_argument("empirical_stats: inconsistent value sizes");
  }

  RunStats stats;
  stats.count = values.size();
  stats.values = values;
  stats.mean.resize(k);
  stats.std.assign(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    NeumaierSum sum;
    for (const auto& v : values) sum.add(v[j]);
    stats.mean[j] = sum.value() / static_cast<double>(stats.count);
  }
  if (stats.count >= 2) {
    for (std::size_t j = 0; j < k; ++j) {
      NeumaierSum sq;
      for (const auto& v : values) {
        const double gap = v[j] - stats.mean[j];
        sq.add(gap * gap);
      }
      stats.std[j] = std::sqrt(sq.value() / static_cast<double>(stats.count - 1));
    }
  }
  return stats;
}

ErrorReport error_vs_oracle(const SliceEvaluator& y_eval, const SliceEvaluator& z_eval,
                            const PathBatch& batch, const BPath& b_path, const LinearParams& p) {
  if (batch.dim != 1) throw std::invalid_argument("error_vs_oracle: requires a one-dimensional state");
  if (!(b_path.grid == batch.grid)) throw std::invalid_argument("error_vs_oracle: grid mismatch");

  const std::size_t N = batch.grid.steps;
  const std::size_t samples = batch.samples;
  const double h = batch.grid.step;

  ErrorReport report;
  NeumaierSum z_total;
  for (std::size_t n = 0; n < N; ++n) {
    NeumaierSum y_acc, z_acc;
    for (std::size_t m = 0; m < samples; ++m) {
      const double x = batch.state(n, m)[0];
      const double y_gap = y_eval(n, x) - explicit_linear_y(n, x, b_path, p);
      const double z_gap = z_eval(n, x) - explicit_linear_z(n, x, b_path, p);
      y_acc.add(y_gap * y_gap);
      z_acc.add(z_gap * z_gap);
    }
    report.y_sup_sq = std::max(report.y_sup_sq, y_acc.value() / static_cast<double>(samples));
    z_total.add(h * z_acc.value() / static_cast<double>(samples));
  }
  report.z_sum_sq = z_total.value();
  report.total = report.y_sup_sq + report.z_sum_sq;
  return report;
}

ErrorReport error_vs_oracle(const BackwardSolution& solution, const PathBatch& batch,
                            const BPath& b_path, const LinearParams& p) {
  if (solution.y_fields.empty() || solution.y_fields.front().values_per_cell() != 1 ||
      solution.z_fields.front().values_per_cell() != 1)
    throw std::invalid_argument("error_vs_oracle: solution is not scalar-valued");
  if (!(solution.grid == batch.grid)) throw std::invalid_argument("error_vs_oracle: grid mismatch");

  auto y_eval = [&](std::size_t n, double x) { return solution.y_fields[n].evaluate({&x, 1})[0]; };
  auto z_eval = [&](std::size_t n, double x) { return solution.z_fields[n].evaluate({&x, 1})[0]; };
  return error_vs_oracle(y_eval, z_eval, batch, b_path, p);
}

std::vector<ScheduleEntry> schedule(std::size_t j_max, double alpha_m, double beta,
                                    double delta_base) {
  if (j_max == 0) throw std::invalid_argument("schedule: j_max must be >= 1");
  if (!(delta_base > 0.0)) throw std::invalid_argument("schedule: delta_base must be positive");

  const double root2 = std::sqrt(2.0);
  std::vector<ScheduleEntry> entries;
  entries.reserve(j_max);
  for (std::size_t j = 1; j <= j_max; ++j) {
    const double level = static_cast<double>(j - 1);
    ScheduleEntry entry;
    entry.j = j;
    entry.steps = static_cast<std::size_t>(
        std::max(2.0, std::round(2.0 * std::pow(root2, level))));
    entry.samples = static_cast<std::size_t>(
        std::max(1.0, std::round(2.0 * std::pow(root2, alpha_m * level))));
    entry.cell_edge = delta_base / std::pow(root2, level * (beta + 1.0) / 2.0);
    entries.push_back(entry);
  }
  return entries;
}

}  // namespace bdsde
