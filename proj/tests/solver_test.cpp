#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "forward.hpp"
#include "problem.hpp"
#include "rng.hpp"
#include "solver.hpp"

using namespace bdsde;

namespace {

// scalar problem with every coefficient spelled out, for hand instances
Problem hand_problem(double a0, double b0, double mu, double sigma, double terminal_slope,
                     double terminal_offset, double x0, double horizon) {
  return custom_problem(
      1, 1, 1,
      [mu](std::span<const double> x, std::span<double> out) { out[0] = mu * x[0]; },
      [sigma](std::span<const double> x, std::span<double> out) { out[0] = sigma * x[0]; },
      [a0](double, std::span<const double>, std::span<const double> y, std::span<const double>,
           std::span<double> out) { out[0] = a0 * y[0]; },
      [b0](double, std::span<const double>, std::span<const double> y, std::span<const double>,
           std::span<double> out) { out[0] = b0 * y[0]; },
      [terminal_slope, terminal_offset](std::span<const double> x, std::span<double> out) {
        out[0] = terminal_offset + terminal_slope * x[0];
      },
      {x0}, horizon);
}

// one-step scripted batch: four samples in two cells of [0, 2]
struct HandInstance {
  BPath b_path;
  PathBatch batch;
  std::shared_ptr<const HypercubeBasis> basis;
  std::vector<double> next_y;  // terminal values 2 x at X_1
  std::vector<double> next_z;  // zeros
};

HandInstance make_hand_instance() {
  HandInstance inst;
  TimeGrid grid = make_grid(1.0, 1);

  inst.b_path.grid = grid;
  inst.b_path.dim = 1;
  inst.b_path.nodes = {0.0, 0.2};  // dB = 0.2

  inst.batch.grid = grid;
  inst.batch.dim = 1;
  inst.batch.samples = 4;
  inst.batch.states = {
      0.5, 1.5, 0.6, 1.4,  // X_0
      0.7, 1.1, 0.4, 1.9,  // X_1
  };
  inst.batch.noise.grid = grid;
  inst.batch.noise.dim = 1;
  inst.batch.noise.samples = 4;
  inst.batch.noise.increments = {0.3, -0.2, 0.1, 0.4};

  inst.basis = build_basis({0.0}, {2.0}, 1.0);
  inst.next_y = {1.4, 2.2, 0.8, 3.8};  // 2 * X_1
  inst.next_z = {0.0, 0.0, 0.0, 0.0};
  return inst;
}

}  // namespace

TEST_CASE("gradient regression on a scripted one-step instance") {
  // g = 0.5 y, so the response core is y (1 + 0.5 dB) = 1.1 y and the
  // slope response is core dW / h; cell values are hand-computed means
  HandInstance inst = make_hand_instance();
  Problem p = hand_problem(0.0, 0.5, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0);
  PiecewiseField z = regress_z_from_values(0, inst.batch, inst.b_path, inst.next_y, inst.next_z,
                                           p, inst.basis);
  CHECK(z.value_at_cell(0)[0] == doctest::Approx(0.275).epsilon(1e-12));
  CHECK(z.value_at_cell(1)[0] == doctest::Approx(0.594).epsilon(1e-12));
}

TEST_CASE("value iteration on a scripted instance with a constant driver") {
  // f = 1: a single iteration already lands on the fixed point
  // cell responses: mean(1.1 y) + h = {1.21 + 1, 3.3 + 1}
  HandInstance inst = make_hand_instance();
  Problem p = hand_problem(0.0, 0.5, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0);
  p.driver = [](double, std::span<const double>, std::span<const double>,
                std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  PiecewiseField z(inst.basis, 1);
  auto [y, residuals] = picard_y_from_values(0, inst.batch, inst.b_path, inst.next_y, inst.next_z,
                                             z, p, inst.basis, 3);
  CHECK(y.value_at_cell(0)[0] == doctest::Approx(2.21).epsilon(1e-12));
  CHECK(y.value_at_cell(1)[0] == doctest::Approx(4.3).epsilon(1e-12));
  REQUIRE(residuals.size() == 3);
  CHECK(residuals[0] == doctest::Approx(4.3).epsilon(1e-12));
  CHECK(residuals[1] == 0.0);
  CHECK(residuals[2] == 0.0);
}

TEST_CASE("value iteration accumulates the driver feedback term by term") {
  // f = y with h = 1: iterates are partial sums c, 2c, 3c of the cell core
  HandInstance inst = make_hand_instance();
  Problem p = hand_problem(1.0, 0.5, 0.0, 1.0, 2.0, 0.0, 1.0, 1.0);
  PiecewiseField z(inst.basis, 1);
  auto [y, residuals] = picard_y_from_values(0, inst.batch, inst.b_path, inst.next_y, inst.next_z,
                                             z, p, inst.basis, 3);
  CHECK(y.value_at_cell(0)[0] == doctest::Approx(3.63).epsilon(1e-12));
  CHECK(y.value_at_cell(1)[0] == doctest::Approx(9.9).epsilon(1e-12));
  REQUIRE(residuals.size() == 3);
  for (double r : residuals) CHECK(r == doctest::Approx(3.3).epsilon(1e-12));
}

TEST_CASE("constant terminal with all coefficients zero passes through exactly") {
  Problem p = hand_problem(0.0, 0.0, 0.0, 0.0, 0.0, 4.25, 1.0, 1.0);
  struct Setup {
    std::size_t steps, samples;
    double edge;
  };
  for (const Setup& s : {Setup{1, 1, 1.0}, Setup{5, 17, 0.3}, Setup{20, 400, 1.0},
                         Setup{7, 64, 2.5}}) {
    SolverConfig config;
    config.steps = s.steps;
    config.samples = s.samples;
    config.cell_edge = s.edge;
    config.domain_mode = DomainMode::data_driven;
    TimeGrid grid = make_grid(1.0, s.steps);
    BPath b_path = sample_b_path(2, grid, 1);
    BackwardSolution sol =
        backward_solve(p, config, b_path, sample_w_batch(3, grid, 1, s.samples));
    CHECK(std::abs(sol.y0[0] - 4.25) <= 1e-12);
  }
}

TEST_CASE("driver-only dynamics compound by the truncated exponential per step") {
  // b = sigma = g = 0, f = a0 y: all mass sits in one cell, and three
  // fixed-point iterations make each backward step multiply by
  // 1 + a0 h + (a0 h)^2
  const double a0 = 0.5, c = 3.0;
  Problem p = hand_problem(a0, 0.0, 0.0, 0.0, 0.0, c, 1.0, 0.25);
  SolverConfig config;
  config.steps = 20;
  config.samples = 30;
  config.cell_edge = 1.0;
  config.picard_iterations = 3;
  config.domain_mode = DomainMode::data_driven;
  TimeGrid grid = make_grid(0.25, 20);
  BPath b_path = sample_b_path(5, grid, 1);
  BackwardSolution sol = backward_solve(p, config, b_path, sample_w_batch(6, grid, 1, 30));

  const double h = grid.step;
  const double factor = 1.0 + a0 * h + a0 * h * a0 * h;
  const double expected = c * std::pow(factor, 20.0);
  CHECK(sol.y0[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("noise-only dynamics multiply by the realized driver increments") {
  // b = sigma = f = 0, g = b0 y: each backward step multiplies by
  // 1 + b0 dB_n, so y0 is the terminal constant times the product
  const double b0 = 0.5, c = 2.0;
  Problem p = hand_problem(0.0, b0, 0.0, 0.0, 0.0, c, 1.0, 0.25);
  SolverConfig config;
  config.steps = 16;
  config.samples = 25;
  config.cell_edge = 1.0;
  config.domain_mode = DomainMode::data_driven;
  TimeGrid grid = make_grid(0.25, 16);
  BPath b_path = sample_b_path(12, grid, 1);
  BackwardSolution sol = backward_solve(p, config, b_path, sample_w_batch(6, grid, 1, 25));

  double expected = c;
  for (std::size_t n = 0; n < 16; ++n) expected *= 1.0 + b0 * b_path.increment(n, 0);
  CHECK(sol.y0[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("zero noise coefficient makes the run independent of the driver path") {
  for (const char* which : {"linear", "g1", "g2", "g3"}) {
    Problem base = which == std::string("linear")
                       ? linear_problem(LinearParams{})
                       : finance_problem(FinanceParams{},
                                         which == std::string("g1")   ? NoiseVariant::g1
                                         : which == std::string("g2") ? NoiseVariant::g2
                                                                      : NoiseVariant::g3);
    Problem p = without_noise(base);
    SolverConfig config;
    config.steps = 8;
    config.samples = 300;
    config.cell_edge = 5.0;
    config.domain_lower = {60.0};
    config.domain_upper = {200.0};

    TimeGrid grid = make_grid(p.horizon, config.steps);
    WBatch w = sample_w_batch(21, grid, 1, config.samples);
    BackwardSolution first = backward_solve(p, config, sample_b_path(100, grid, 1), w);
    BackwardSolution second = backward_solve(p, config, sample_b_path(200, grid, 1), w);
    CHECK(std::abs(first.y0[0] - second.y0[0]) <= 1e-12);
  }
}

TEST_CASE("fixed-point residuals contract by the driver step factor") {
  // linear driver: consecutive residual ratio is exactly a0 h
  LinearParams params;
  Problem p = linear_problem(params);
  SolverConfig config;
  config.steps = 20;
  config.samples = 500;
  config.cell_edge = 1.0;
  config.domain_lower = {60.0};
  config.domain_upper = {200.0};

  TimeGrid grid = make_grid(params.horizon, config.steps);
  BPath b_path = sample_b_path(derive_seed(1, SeedStream::b_path, 0), grid, 1);
  BackwardSolution sol =
      backward_solve(p, config, b_path, sample_w_batch(33, grid, 1, config.samples));

  const double contraction = params.a0 * grid.step;
  for (const auto& residuals : sol.picard_residuals) {
    REQUIRE(residuals.size() == 3);
    CHECK(residuals[1] / residuals[0] <= contraction * (1.0 + 1e-9));
    CHECK(residuals[2] / residuals[1] == doctest::Approx(contraction).epsilon(1e-9));
  }
}

TEST_CASE("repetitions are deterministic and independent of the thread count") {
  Problem p = linear_problem(LinearParams{});
  SolverConfig config;
  config.steps = 6;
  config.samples = 200;
  config.cell_edge = 2.0;
  config.repetitions = 9;
  config.domain_lower = {60.0};
  config.domain_upper = {200.0};

  TimeGrid grid = make_grid(p.horizon, config.steps);
  BPath b_path = sample_b_path(derive_seed(4, SeedStream::b_path, 0), grid, 1);
  auto serial = run_repetitions(p, config, b_path, 4, 1);
  auto parallel = run_repetitions(p, config, b_path, 4, 4);
  REQUIRE(serial.size() == 9);
  REQUIRE(parallel.size() == 9);
  for (std::size_t r = 0; r < 9; ++r) {
    REQUIRE(serial[r].solution.has_value());
    REQUIRE(parallel[r].solution.has_value());
    CHECK(serial[r].index == r);
    CHECK(serial[r].w_seed == parallel[r].w_seed);
    CHECK(serial[r].solution->y0[0] == parallel[r].solution->y0[0]);
  }
  // distinct repetitions draw distinct batches
  CHECK(serial[0].solution->y0[0] != serial[1].solution->y0[0]);
}

TEST_CASE("failing repetitions are reported, not thrown") {
  Problem p = hand_problem(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0);
  p.terminal = [](std::span<const double>, std::span<double> out) {
    out[0] = std::numeric_limits<double>::quiet_NaN();
  };
  SolverConfig config;
  config.steps = 2;
  config.samples = 10;
  config.cell_edge = 1.0;
  config.repetitions = 3;
  config.domain_mode = DomainMode::data_driven;
  TimeGrid grid = make_grid(1.0, 2);
  BPath b_path = sample_b_path(2, grid, 1);
  auto outcomes = run_repetitions(p, config, b_path, 4, 2);
  for (const auto& outcome : outcomes) {
    CHECK_FALSE(outcome.solution.has_value());
    CHECK_FALSE(outcome.error.empty());
  }
}

TEST_CASE("solver configuration is validated against the problem") {
  Problem p = linear_problem(LinearParams{});
  SolverConfig config;
  config.domain_lower = {60.0};
  config.domain_upper = {200.0};
  config.steps = 0;
  CHECK_THROWS_AS(config.validate(p), std::invalid_argument);
  config.steps = 4;
  config.samples = 0;
  CHECK_THROWS_AS(config.validate(p), std::invalid_argument);
  config.samples = 10;
  config.cell_edge = 0.0;
  CHECK_THROWS_AS(config.validate(p), std::invalid_argument);
  config.cell_edge = 1.0;
  config.domain_upper = {50.0};  // below the lower bound
  CHECK_THROWS_AS(config.validate(p), std::invalid_argument);
  config.domain_upper = {};  // missing bounds in fixed mode
  CHECK_THROWS_AS(config.validate(p), std::invalid_argument);
}

TEST_CASE("grid mismatches between driver path and batch are rejected") {
  Problem p = linear_problem(LinearParams{});
  SolverConfig config;
  config.steps = 4;
  config.samples = 10;
  config.cell_edge = 10.0;
  config.domain_mode = DomainMode::data_driven;
  TimeGrid grid = make_grid(p.horizon, 4);
  BPath wrong = sample_b_path(2, make_grid(p.horizon, 8), 1);
  WBatch w = sample_w_batch(3, grid, 1, 10);
  CHECK_THROWS_AS(backward_solve(p, config, wrong, w), std::invalid_argument);
}
