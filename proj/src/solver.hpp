#pragma once

#include <cstdint>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forward.hpp"
#include "problem.hpp"
#include "regression.hpp"
#include "rng.hpp"

namespace bdsde {

enum class DomainMode { fixed, data_driven };

struct SolverConfig {
  std::size_t steps = 20;             // N
  std::size_t samples = 1000;         // M
  double cell_edge = 1.0;             // delta
  std::size_t picard_iterations = 3;  // I
  std::size_t repetitions = 50;       // R
  DomainMode domain_mode = DomainMode::fixed;
  std::vector<double> domain_lower;   // used in fixed mode, size d
  std::vector<double> domain_upper;

  void validate(const Problem& problem) const;
};

// Fitted fields for every time slice.  y_fields[N] is a projection of the
// exact terminal values (export convenience only; the induction itself uses
// the pointwise terminal values).  z_fields[N] is identically zero.
struct BackwardSolution {
  TimeGrid grid;
  std::shared_ptr<const HypercubeBasis> basis;
  std::vector<PiecewiseField> y_fields;  // N+1 fields, k values per cell
  std::vector<PiecewiseField> z_fields;  // N+1 fields, k*d values per cell
  std::vector<double> y0;                // y_fields[0] at x0
  // picard_residuals[n][i] = sup-norm delta between Picard iterates i and
  // i+1 at step n (i = 0 compares against the zero start)
  std::vector<std::vector<double>> picard_residuals;
};

// Explicit regression for z at step n: projects, at the step-n states, the
// response built from step-(n+1) values and the increment products.  The
// next_* spans hold per-sample values at X_{n+1}^m: next_y is M x k,
// next_z is M x (k*d).
PiecewiseField regress_z_from_values(std::size_t n, const PathBatch& batch, const BPath& b_path,
                                     std::span<const double> next_y, std::span<const double> next_z,
                                     const Problem& problem,
                                     std::shared_ptr<const HypercubeBasis> basis);

// Same with the step-(n+1) fields evaluated at X_{n+1}^m.
PiecewiseField regress_z(std::size_t n, const PathBatch& batch, const BPath& b_path,
                         const PiecewiseField& next_y, const PiecewiseField& next_z,
                         const Problem& problem, std::shared_ptr<const HypercubeBasis> basis);

// Picard iteration for y at step n with z_n frozen: y^(0) = 0 and
// y^(i) = projection of  next_y + h f(t_n, X_n, y^(i-1)(X_n), z_n(X_n)) + g(t_{n+1}, ...) dB_n.
// Returns y^(I) and the residual sequence.
std::pair<PiecewiseField, std::vector<double>> picard_y_from_values(
    std::size_t n, const PathBatch& batch, const BPath& b_path, std::span<const double> next_y,
    std::span<const double> next_z, const PiecewiseField& z_n, const Problem& problem,
    std::shared_ptr<const HypercubeBasis> basis, std::size_t iterations);

std::pair<PiecewiseField, std::vector<double>> picard_y(
    std::size_t n, const PathBatch& batch, const BPath& b_path, const PiecewiseField& next_y,
    const PiecewiseField& next_z, const PiecewiseField& z_n, const Problem& problem,
    std::shared_ptr<const HypercubeBasis> basis, std::size_t iterations);

// Full backward induction over one forward batch.
BackwardSolution backward_solve(const Problem& problem, const SolverConfig& config,
                                const BPath& b_path, const PathBatch& batch);

BackwardSolution backward_solve(const Problem& problem, const SolverConfig& config,
                                const BPath& b_path, const WBatch& w_batch);

struct RepetitionOutcome {
  std::size_t index = 0;
  std::uint64_t w_seed = 0;
  std::optional<BackwardSolution> solution;
  std::string error;  // set when the repetition failed
};

// R independent W-batches against the one fixed driver path.  Repetition r
// draws its seed from (master_seed, w_batch stream, r), so results are
// independent of execution order and worker count.
std::vector<RepetitionOutcome> run_repetitions(const Problem& problem, const SolverConfig& config,
                                               const BPath& b_path, std::uint64_t master_seed,
                                               std::size_t threads = 1);

}  // namespace bdsde
