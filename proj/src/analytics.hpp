#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "forward.hpp"
#include "problem.hpp"
#include "rng.hpp"
#include "solver.hpp"

namespace bdsde {

// Mean and standard deviation (count-1 divisor) over repetition outputs.
struct RunStats {
  std::vector<double> mean;  // k values
  std::vector<double> std;   // k values; zero when count < 2
  std::size_t count = 0;
  std::vector<std::vector<double>> values;
};

struct ScheduleEntry {
  std::size_t j = 0;
  std::size_t steps = 0;    // N_j
  std::size_t samples = 0;  // M_j
  double cell_edge = 0.0;   // delta_j
};

struct ErrorReport {
  double y_sup_sq = 0.0;  // sup over n of the mean-square y gap
  double z_sum_sq = 0.0;  // h-weighted sum over n of the mean-square z gap
  double total = 0.0;
};

// Solution of the linear problem conditional on the driver path:
// e^{a0 (T-t) + b0 (B_T - B_t) - b0^2 (T-t) / 2} (K - x e^{mu (T-t)}).
// n indexes the node of b_path's grid.
double explicit_linear_y(std::size_t n, double x, const BPath& b_path, const LinearParams& p);

// Gradient of the above times sigma(x):
// -sigma x e^{mu (T-t)} e^{a0 (T-t) + b0 (B_T - B_t) - b0^2 (T-t) / 2}.
double explicit_linear_z(std::size_t n, double x, const BPath& b_path, const LinearParams& p);

RunStats empirical_stats(const std::vector<std::vector<double>>& values);

// Scalar per-slice evaluations y(n, x), z(n, x) used as the candidate
// solution in the error metric below.
using SliceEvaluator = std::function<double(std::size_t n, double x)>;

// Discrete-time error against the closed-form solution on the sampled
// states: max over n = 0..N-1 of mean_m |y(n, X_n^m) - oracle|^2 plus
// h * sum_n mean_m |z(n, X_n^m) - oracle|^2.  The terminal slice is exact by
// construction and excluded.
ErrorReport error_vs_oracle(const SliceEvaluator& y_eval, const SliceEvaluator& z_eval,
                            const PathBatch& batch, const BPath& b_path, const LinearParams& p);

ErrorReport error_vs_oracle(const BackwardSolution& solution, const PathBatch& batch,
                            const BPath& b_path, const LinearParams& p);

// Coupled refinement ladder: N_j = 2 sqrt(2)^{j-1} (rounded, floor 2),
// M_j = 2 sqrt(2)^{alpha_m (j-1)} (rounded), delta_j = delta_base / sqrt(2)^{(j-1)(beta+1)/2}.
std::vector<ScheduleEntry> schedule(std::size_t j_max, double alpha_m = 3.0, double beta = 1.0,
                                    double delta_base = 50.0);

}  // namespace bdsde
