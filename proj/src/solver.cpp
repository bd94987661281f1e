#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "errors.hpp"
#include "numeric.hpp"

namespace bdsde {

namespace {

// per-sample values of a field at the step-n states
std::vector<double> evaluate_at_states(const PiecewiseField& field, const PathBatch& batch,
                                       std::size_t n) {
  const std::size_t q = field.values_per_cell();
  std::vector<double> out(batch.samples * q);
  for (std::size_t m = 0; m < batch.samples; ++m) {
    auto v = field.evaluate(batch.state(n, m));
    std::copy(v.begin(), v.end(), out.begin() + m * q);
  }
  return out;
}

// g(t_{n+1}, X_{n+1}^m, y_{n+1}, z_{n+1}) dB_n summed over noise components;
// the shared backbone of both the z-response and the y-response.
std::vector<double> noise_term(std::size_t n, const PathBatch& batch, const BPath& b_path,
                               std::span<const double> next_y, std::span<const double> next_z,
                               const Problem& problem) {
  const std::size_t k = problem.value_dim;
  const std::size_t l = problem.noise_dim;
  const std::size_t d = problem.state_dim;
  const std::size_t samples = batch.samples;
  const double t_next = batch.grid.node(n + 1);

  std::vector<double> db(l);
  for (std::size_t j = 0; j < l; ++j) db[j] = b_path.increment(n, j);

  std::vector<double> g(k * l);
  std::vector<double> out(samples * k);
  for (std::size_t m = 0; m < samples; ++m) {
    problem.noise(t_next, batch.state(n + 1, m), next_y.subspan(m * k, k),
                  next_z.subspan(m * k * d, k * d), g);
    for (std::size_t j1 = 0; j1 < k; ++j1) {
      double acc = 0.0;
      for (std::size_t j = 0; j < l; ++j) acc += g[j1 * l + j] * db[j];
      out[m * k + j1] = acc;
    }
  }
  return out;
}

void check_finite(std::span<const double> values, std::size_t per_sample, std::size_t n,
                  const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string(what) + ": non-finite response", n, i / per_sample);
    }
  }
}

std::vector<std::size_t> locate_states(const HypercubeBasis& basis, const PathBatch& batch,
                                       std::size_t n) {
  std::vector<std::size_t> cells(batch.samples);
  for (std::size_t m = 0; m < batch.samples; ++m) cells[m] = basis.locate(batch.state(n, m));
  return cells;
}

}  // namespace

void SolverConfig::validate(const Problem& problem) const {
  if (steps == 0) throw std::invalid_argument("solver config: steps must be >= 1");
  if (samples == 0) throw std::invalid_argument("solver config: samples must be >= 1");
  if (picard_iterations == 0) throw std::invalid_argument("solver config: picard_iterations must be >= 1");
  if (!(cell_edge > 0.0)) throw std::invalid_argument("solver config: cell_edge must be positive");
  if (domain_mode == DomainMode::fixed) {
    if (domain_lower.size() != problem.state_dim || domain_upper.size() != problem.state_dim)
      throw std::invalid_argument("solver config: fixed domain bounds must have state_dim entries");
    for (std::size_t i = 0; i < domain_lower.size(); ++i) {
      if (!(domain_upper[i] > domain_lower[i]))
        throw std::invalid_argument("solver config: domain upper bound must exceed lower bound");
    }
  }
}

PiecewiseField regress_z_from_values(std::size_t n, const PathBatch& batch, const BPath& b_path,
                                     std::span<const double> next_y, std::span<const double> next_z,
                                     const Problem& problem,
                                     std::shared_ptr<const HypercubeBasis> basis) {
  const std::size_t k = problem.value_dim;
  const std::size_t d = problem.state_dim;
  const std::size_t samples = batch.samples;
  const double h = batch.grid.step;

  // response factorizes: (y_{n+1} + g dB) (x) dW^T / h
  std::vector<double> core = noise_term(n, batch, b_path, next_y, next_z, problem);
  for (std::size_t i = 0; i < samples * k; ++i) core[i] += next_y[i];

  std::vector<double> responses(samples * k * d);
  for (std::size_t m = 0; m < samples; ++m) {
    const auto dw = batch.noise.increments_at(n, m);
    for (std::size_t j1 = 0; j1 < k; ++j1) {
      for (std::size_t j2 = 0; j2 < d; ++j2) {
        responses[(m * k + j1) * d + j2] = core[m * k + j1] * dw[j2] / h;
      }
    }
  }
  check_finite(responses, k * d, n, "regress_z");

  const auto cells = locate_states(*basis, batch, n);
  return project_located(std::move(basis), cells, responses, k * d);
}

PiecewiseField regress_z(std::size_t n, const PathBatch& batch, const BPath& b_path,
                         const PiecewiseField& next_y, const PiecewiseField& next_z,
                         const Problem& problem, std::shared_ptr<const HypercubeBasis> basis) {
  const auto y_vals = evaluate_at_states(next_y, batch, n + 1);
  const auto z_vals = evaluate_at_states(next_z, batch, n + 1);
  return regress_z_from_values(n, batch, b_path, y_vals, z_vals, problem, std::move(basis));
}

std::pair<PiecewiseField, std::vector<double>> picard_y_from_values(
    std::size_t n, const PathBatch& batch, const BPath& b_path, std::span<const double> next_y,
    std::span<const double> next_z, const PiecewiseField& z_n, const Problem& problem,
    std::shared_ptr<const HypercubeBasis> basis, std::size_t iterations) {
  const std::size_t k = problem.value_dim;
  const std::size_t d = problem.state_dim;
  const std::size_t samples = batch.samples;
  const double h = batch.grid.step;
  const double t_n = batch.grid.node(n);

  // iteration-invariant response part: y_{n+1} + g dB
  std::vector<double> core = noise_term(n, batch, b_path, next_y, next_z, problem);
  for (std::size_t i = 0; i < samples * k; ++i) core[i] += next_y[i];
  check_finite(core, k, n, "picard_y");

  const auto cells = locate_states(*basis, batch, n);
  std::vector<double> z_at_x(samples * k * d);
  for (std::size_t m = 0; m < samples; ++m) {
    auto zv = z_n.value_at_cell(cells[m]);
    std::copy(zv.begin(), zv.end(), z_at_x.begin() + m * k * d);
  }

  PiecewiseField current(basis, k);  // y^(0) = 0
  std::vector<double> residuals;
  residuals.reserve(iterations);

  std::vector<double> responses(samples * k);
  std::vector<double> f(k);
  for (std::size_t i = 0; i < iterations; ++i) {
    for (std::size_t m = 0; m < samples; ++m) {
      problem.driver(t_n, batch.state(n, m), current.value_at_cell(cells[m]),
                     {z_at_x.data() + m * k * d, k * d}, f);
      for (std::size_t j1 = 0; j1 < k; ++j1) {
        responses[m * k + j1] = core[m * k + j1] + h * f[j1];
      }
    }
    check_finite(responses, k, n, "picard_y");
    PiecewiseField next = project_located(basis, cells, responses, k);

    double delta = 0.0;
    for (std::size_t cell = 0; cell < basis->cells(); ++cell) {
      auto a = next.value_at_cell(cell);
      auto b = current.value_at_cell(cell);
      for (std::size_t j1 = 0; j1 < k; ++j1) delta = std::max(delta, std::abs(a[j1] - b[j1]));
    }
    residuals.push_back(delta);
    current = std::move(next);
  }
  return {std::move(current), std::move(residuals)};
}

std::pair<PiecewiseField, std::vector<double>> picard_y(
    std::size_t n, const PathBatch& batch, const BPath& b_path, const PiecewiseField& next_y,
    const PiecewiseField& next_z, const PiecewiseField& z_n, const Problem& problem,
    std::shared_ptr<const HypercubeBasis> basis, std::size_t iterations) {
  const auto y_vals = evaluate_at_states(next_y, batch, n + 1);
  const auto z_vals = evaluate_at_states(next_z, batch, n + 1);
  return picard_y_from_values(n, batch, b_path, y_vals, z_vals, z_n, problem, std::move(basis),
                              iterations);
}

BackwardSolution backward_solve(const Problem& problem, const SolverConfig& config,
                                const BPath& b_path, const PathBatch& batch) {
  config.validate(problem);
  const std::size_t k = problem.value_dim;
  const std::size_t d = problem.state_dim;
  const std::size_t N = batch.grid.steps;
  const std::size_t samples = batch.samples;
  if (b_path.grid != batch.grid)
    throw std::invalid_argument("backward_solve: driver path grid differs from batch grid");
  if (b_path.dim != problem.noise_dim)
    throw std::invalid_argument("backward_solve: driver path dimension != noise_dim");

  std::shared_ptr<const HypercubeBasis> basis;
  if (config.domain_mode == DomainMode::fixed) {
    basis = build_basis(config.domain_lower, config.domain_upper, config.cell_edge);
  } else {
    std::vector<double> lo(d, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
    for (std::size_t n = 0; n <= N; ++n) {
      for (std::size_t m = 0; m < samples; ++m) {
        auto x = batch.state(n, m);
        for (std::size_t c = 0; c < d; ++c) {
          lo[c] = std::min(lo[c], x[c]);
          hi[c] = std::max(hi[c], x[c]);
        }
      }
    }
    for (std::size_t c = 0; c < d; ++c) {
      if (!(hi[c] > lo[c])) hi[c] = lo[c] + config.cell_edge;  // constant paths span one cell
    }
    basis = build_basis(std::move(lo), std::move(hi), config.cell_edge);
  }

  // terminal values, pointwise
  std::vector<double> y_next(samples * k);
  std::vector<double> terminal(k);
  for (std::size_t m = 0; m < samples; ++m) {
    problem.terminal(batch.state(N, m), terminal);
    std::copy(terminal.begin(), terminal.end(), y_next.begin() + m * k);
  }
  check_finite(y_next, k, N, "terminal");
  std::vector<double> z_next(samples * k * d, 0.0);

  BackwardSolution solution;
  solution.grid = batch.grid;
  solution.basis = basis;
  solution.y_fields.assign(N + 1, PiecewiseField(basis, k));
  solution.z_fields.assign(N + 1, PiecewiseField(basis, k * d));
  solution.picard_residuals.assign(N, {});

  // derived terminal field, for export only
  {
    const auto cells = locate_states(*basis, batch, N);
    solution.y_fields[N] = project_located(basis, cells, y_next, k);
  }

  for (std::size_t n = N; n-- > 0;) {
    PiecewiseField z_field =
        regress_z_from_values(n, batch, b_path, y_next, z_next, problem, basis);
    auto [y_field, residuals] = picard_y_from_values(n, batch, b_path, y_next, z_next, z_field,
                                                     problem, basis, config.picard_iterations);
    solution.picard_residuals[n] = std::move(residuals);
    solution.z_fields[n] = std::move(z_field);
    solution.y_fields[n] = std::move(y_field);
    if (n > 0) {
      y_next = evaluate_at_states(solution.y_fields[n], batch, n);
      z_next = evaluate_at_states(solution.z_fields[n], batch, n);
    }
  }

  auto y0 = solution.y_fields[0].evaluate(problem.x0);
  solution.y0.assign(y0.begin(), y0.end());
  for (double v : solution.y0) {
    if (!std::isfinite(v)) throw NumericError("backward_solve: non-finite y0", 0, 0);
  }
  return solution;
}

BackwardSolution backward_solve(const Problem& problem, const SolverConfig& config,
                                const BPath& b_path, const WBatch& w_batch) {
  return backward_solve(problem, config, b_path, simulate_forward(problem, w_batch));
}

std::vector<RepetitionOutcome> run_repetitions(const Problem& problem, const SolverConfig& config,
                                               const BPath& b_path, std::uint64_t master_seed,
                                               std::size_t threads) {
  config.validate(problem);
  if (config.repetitions == 0) throw std::invalid_argument("run_repetitions: repetitions must be >= 1");

  const std::size_t reps = config.repetitions;
  std::vector<RepetitionOutcome> outcomes(reps);

  auto run_one = [&](std::size_t r) {
    RepetitionOutcome& out = outcomes[r];
    out.index = r;
    out.w_seed = derive_seed(master_seed, SeedStream::w_batch, r);
    try {
      WBatch w = sample_w_batch(out.w_seed, b_path.grid, problem.state_dim, config.samples);
      out.solution = backward_solve(problem, config, b_path, w);
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };

  if (threads <= 1 || reps == 1) {
    for (std::size_t r = 0; r < reps; ++r) run_one(r);
  } else {
    const std::size_t workers = std::min(threads, reps);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < reps; r += workers) run_one(r);
      });
    }
    for (auto& t : pool) t.join();
  }
  return outcomes;
}

}  // namespace bdsde
