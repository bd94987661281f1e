#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

using namespace bdsde;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("seed derivation is deterministic and matches frozen references") {
  CHECK(derive_seed(1, SeedStream::b_path, 0) == 0x7a70b68f7cee12ceULL);
  CHECK(derive_seed(1, SeedStream::w_batch, 0) == 0xa7ea635a1b9834daULL);
  CHECK(derive_seed(1, SeedStream::w_batch, 7) == 0x8935a37d2036db50ULL);
  CHECK(derive_seed(42, SeedStream::unit, 5) == 0xb10f81362839f57cULL);
}

TEST_CASE("seed derivation separates streams and counters") {
  std::vector<std::uint64_t> seen;
  for (auto stream : {SeedStream::b_path, SeedStream::w_batch, SeedStream::unit}) {
    for (std::uint64_t counter = 0; counter < 50; ++counter) {
      seen.push_back(derive_seed(123456789, stream, counter));
    }
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("normal quantile matches reference values") {
  // reference values computed with 30-digit arithmetic
  struct Case {
    double p, x;
  };
  const Case cases[] = {
      {0.5, 0.0},
      {0.975, 1.9599639845400538},
      {0.01, -2.326347874040841},
      {0.001, -3.0902323061678136},
      {0.25, -0.6744897501960817},
      {1e-10, -6.361340902404057},
      {0.9999, 3.7190164854557084},
  };
  for (const auto& c : cases) {
    const double x = inverse_normal_cdf(c.p);
    if (c.x == 0.0) {
      CHECK(std::abs(x) < 1e-15);
    } else {
      CHECK(std::abs(x - c.x) <= 4e-15 * std::abs(c.x));
    }
  }
}

TEST_CASE("normal quantile round-trips through the normal CDF") {
  for (double p = 0.0005; p < 1.0; p += 0.0124) {
    const double x = inverse_normal_cdf(p);
    CHECK(std::abs(normal_cdf(x) - p) <= 1e-12);
  }
}

TEST_CASE("normal quantile is odd and monotone") {
  double prev = -1e300;
  for (double p = 0.01; p < 0.995; p += 0.01) {
    const double x = inverse_normal_cdf(p);
    CHECK(x > prev);
    prev = x;
    CHECK(inverse_normal_cdf(1.0 - p) == doctest::Approx(-x).epsilon(1e-13));
  }
}

TEST_CASE("normal quantile rejects p outside (0,1)") {
  CHECK_THROWS_AS(inverse_normal_cdf(0.0), std::invalid_argument);
  CHECK_THROWS_AS(inverse_normal_cdf(1.0), std::invalid_argument);
  CHECK_THROWS_AS(inverse_normal_cdf(-0.5), std::invalid_argument);
  CHECK_THROWS_AS(inverse_normal_cdf(1.5), std::invalid_argument);
}

TEST_CASE("gaussian stream passes a Kolmogorov-Smirnov test") {
  const std::size_t n = 4000;
  GaussianStream gauss(20240817);
  std::vector<double> xs(n);
  for (auto& x : xs) x = gauss.next();
  std::sort(xs.begin(), xs.end());

  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(xs[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double lambda = d * (sqrt_n + 0.12 + 0.11 / sqrt_n);
  // 1.95 is the 0.1% point of the Kolmogorov distribution
  CHECK(lambda < 1.95);
}

TEST_CASE("gaussian stream moments sit in their sampling bands") {
  const std::size_t n = 4000;
  GaussianStream gauss(99);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = gauss.next();
    sum += x;
    sum_sq += x * x;
  }
  // mean: sd 1/sqrt(n); sum of squares: chi-square with n degrees, sd sqrt(2n)
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(sum_sq - static_cast<double>(n)) <
        5.0 * std::sqrt(2.0 * static_cast<double>(n)));
}

TEST_CASE("driver path starts at zero and reports exact increments") {
  TimeGrid grid = make_grid(0.25, 8);
  BPath path = sample_b_path(11, grid, 2);
  CHECK(path.nodes.size() == 9 * 2);
  CHECK(path.node(0, 0) == 0.0);
  CHECK(path.node(0, 1) == 0.0);
  for (std::size_t n = 0; n < 8; ++n) {
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(path.node(n + 1, c) - path.node(n, c) == path.increment(n, c));
    }
  }
  CHECK(path.terminal()[0] == path.node(8, 0));
  CHECK(path.terminal()[1] == path.node(8, 1));
}

TEST_CASE("driver path increments have the step variance") {
  TimeGrid grid = make_grid(1.0, 20000);
  BPath path = sample_b_path(5, grid, 1);
  double sum_sq = 0.0;
  for (std::size_t n = 0; n < grid.steps; ++n) {
    const double inc = path.increment(n, 0);
    sum_sq += inc * inc;
  }
  const double ratio = sum_sq / (grid.step * grid.steps);  // chi-square_n / n
  CHECK(std::abs(ratio - 1.0) < 5.0 * std::sqrt(2.0 / grid.steps));
}

TEST_CASE("coarsening copies nodes bit for bit and preserves the endpoint") {
  TimeGrid fine_grid = make_grid(0.25, 12);
  BPath fine = sample_b_path(3, fine_grid, 1);

  BPath half = coarsen_b_path(fine, make_grid(0.25, 6));
  BPath quarter = coarsen_b_path(half, make_grid(0.25, 3));
  for (std::size_t n = 0; n <= 6; ++n) CHECK(half.node(n, 0) == fine.node(2 * n, 0));
  for (std::size_t n = 0; n <= 3; ++n) CHECK(quarter.node(n, 0) == fine.node(4 * n, 0));
  CHECK(half.terminal()[0] == fine.terminal()[0]);
  CHECK(quarter.terminal()[0] == fine.terminal()[0]);

  // chained and direct coarsening agree exactly
  BPath direct = coarsen_b_path(fine, make_grid(0.25, 3));
  CHECK(direct.nodes == quarter.nodes);
}

TEST_CASE("coarsening rejects mismatched grids") {
  BPath fine = sample_b_path(3, make_grid(0.25, 12), 1);
  CHECK_THROWS_AS(coarsen_b_path(fine, make_grid(0.5, 6)), std::invalid_argument);
  CHECK_THROWS_AS(coarsen_b_path(fine, make_grid(0.25, 5)), std::invalid_argument);
}

TEST_CASE("sample batches are sample-major: growing M keeps existing samples") {
  TimeGrid grid = make_grid(0.25, 6);
  WBatch small = sample_w_batch(77, grid, 2, 5);
  WBatch large = sample_w_batch(77, grid, 2, 9);
  for (std::size_t n = 0; n < 6; ++n) {
    for (std::size_t m = 0; m < 5; ++m) {
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(small.increment(n, m, c) == large.increment(n, m, c));
      }
    }
  }
}

TEST_CASE("sampling is deterministic in the seed") {
  TimeGrid grid = make_grid(0.25, 6);
  CHECK(sample_w_batch(7, grid, 1, 10).increments == sample_w_batch(7, grid, 1, 10).increments);
  CHECK(sample_w_batch(7, grid, 1, 10).increments != sample_w_batch(8, grid, 1, 10).increments);
  CHECK(sample_b_path(7, grid, 1).nodes == sample_b_path(7, grid, 1).nodes);
  CHECK(sample_b_path(7, grid, 1).nodes != sample_b_path(8, grid, 1).nodes);
}

TEST_CASE("sampling rejects empty dimensions") {
  TimeGrid grid = make_grid(0.25, 6);
  CHECK_THROWS_AS(sample_b_path(1, grid, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_w_batch(1, grid, 0, 4), std::invalid_argument);
  CHECK_THROWS_AS(sample_w_batch(1, grid, 1, 0), std::invalid_argument);
}

TEST_CASE("time grid pins the last node to the horizon") {
  TimeGrid grid = make_grid(0.1, 3);
  CHECK(grid.node(3) == 0.1);
  CHECK(grid.node(0) == 0.0);
  CHECK(grid.node(1) == doctest::Approx(0.1 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(make_grid(0.1, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(-1.0, 3), std::invalid_argument);
}
