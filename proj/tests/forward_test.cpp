#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "forward.hpp"
#include "problem.hpp"
#include "rng.hpp"

using namespace bdsde;

namespace {

Problem scalar_problem(DriftFn b, DiffusionFn s) {
  return custom_problem(
      1, 1, 1, std::move(b), std::move(s),
      [](double, std::span<const double>, std::span<const double>, std::span<const double>,
         std::span<double> out) { out[0] = 0.0; },
      [](double, std::span<const double>, std::span<const double>, std::span<const double>,
         std::span<double> out) { out[0] = 0.0; },
      [](std::span<const double> x, std::span<double> out) { out[0] = x[0]; }, {1.0}, 1.0);
}

}  // namespace

TEST_CASE("zero coefficients keep every path at the start point") {
  Problem p = scalar_problem(
      [](std::span<const double>, std::span<double> out) { out[0] = 0.0; },
      [](std::span<const double>, std::span<double> out) { out[0] = 0.0; });
  TimeGrid grid = make_grid(1.0, 5);
  PathBatch batch = simulate_forward(p, sample_w_batch(3, grid, 1, 7));
  CHECK(batch.samples == 7);
  for (std::size_t n = 0; n <= 5; ++n) {
    for (std::size_t m = 0; m < 7; ++m) {
      CHECK(batch.state(n, m)[0] == 1.0);
    }
  }
}

TEST_CASE("drift-only dynamics reproduce the discrete compound growth") {
  // X_{n+1} = X_n (1 + mu h) exactly when sigma = 0
  const double mu = 0.05;
  Problem p = scalar_problem(
      [mu](std::span<const double> x, std::span<double> out) { out[0] = mu * x[0]; },
      [](std::span<const double>, std::span<double> out) { out[0] = 0.0; });
  TimeGrid grid = make_grid(0.25, 20);
  PathBatch batch = simulate_forward(p, sample_w_batch(3, grid, 1, 2));
  const double expected = std::pow(1.0 + mu * grid.step, 20.0);
  CHECK(batch.state(20, 0)[0] == doctest::Approx(expected).epsilon(1e-13));
  CHECK(batch.state(20, 1)[0] == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("geometric dynamics hit the discrete mean within the sampling band") {
  LinearParams params;
  Problem p = linear_problem(params);
  TimeGrid grid = make_grid(params.horizon, 4);
  const std::size_t samples = 40000;
  PathBatch batch = simulate_forward(p, sample_w_batch(11, grid, 1, samples));

  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t m = 0; m < samples; ++m) {
    const double x = batch.state(4, m)[0];
    sum += x;
    sum_sq += x * x;
  }
  const double mean = sum / samples;
  const double sd = std::sqrt(sum_sq / samples - mean * mean);
  // Euler with drift mu x compounds to x0 (1 + mu h)^N in expectation
  const double expected = params.x0 * std::pow(1.0 + params.mu * grid.step, 4.0);
  CHECK(std::abs(mean - expected) < 5.0 * sd / std::sqrt(static_cast<double>(samples)));
}

TEST_CASE("non-finite states abort with the offending step and sample") {
  Problem p = scalar_problem(
      [](std::span<const double> x, std::span<double> out) {
        out[0] = x[0] > 1.5 ? std::numeric_limits<double>::infinity() : 1.0;
      },
      [](std::span<const double>, std::span<double> out) { out[0] = 0.0; });
  TimeGrid grid = make_grid(1.0, 4);
  // x: 1 -> 1.25 -> 1.5 -> 1.75 -> inf at step 4
  try {
    simulate_forward(p, sample_w_batch(3, grid, 1, 2));
    FAIL("expected a NumericError");
  } catch (const NumericError& e) {
    CHECK(e.step() == 4);
    CHECK(e.sample() == 0);
  }
}

TEST_CASE("multidimensional states apply the diffusion matrix row by row") {
  // constant diffusion [[1, 2], [0, 3]] and zero drift: X_1 = x0 + S dW
  Problem p = custom_problem(
      2, 1, 1,
      [](std::span<const double>, std::span<double> out) {
        out[0] = 0.0;
        out[1] = 0.0;
      },
      [](std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
        out[1] = 2.0;
        out[2] = 0.0;
        out[3] = 3.0;
      },
      [](double, std::span<const double>, std::span<const double>, std::span<const double>,
         std::span<double> out) { out[0] = 0.0; },
      [](double, std::span<const double>, std::span<const double>, std::span<const double>,
         std::span<double> out) { out[0] = 0.0; },
      [](std::span<const double> x, std::span<double> out) { out[0] = x[0] + x[1]; },
      {10.0, 20.0}, 1.0);
  TimeGrid grid = make_grid(1.0, 1);
  WBatch noise = sample_w_batch(9, grid, 2, 3);
  std::vector<double> dw(noise.increments);  // copy before the move
  PathBatch batch = simulate_forward(p, std::move(noise));
  for (std::size_t m = 0; m < 3; ++m) {
    const double w0 = dw[m * 2], w1 = dw[m * 2 + 1];
    CHECK(batch.state(1, m)[0] == doctest::Approx(10.0 + w0 + 2.0 * w1).epsilon(1e-15));
    CHECK(batch.state(1, m)[1] == doctest::Approx(20.0 + 3.0 * w1).epsilon(1e-15));
  }
}
