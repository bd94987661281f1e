#include "rng.hpp"

#include <cmath>
#include <stdexcept>

namespace bdsde {

namespace {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t counter) {
  std::uint64_t z = master;
  z = mix64(z ^ (0xa0761d6478bd642fULL * (static_cast<std::uint64_t>(stream) + 1)));
  z = mix64(z ^ (0xe7037ed1a0b428dbULL * (counter + 1)));
  return z;
}

// Acklam's rational approximation refined by one Halley step against the
// erfc-based CDF; absolute error is at the few-ulp level across (0,1).
double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inverse_normal_cdf: p outside (0,1)");

  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement; the residual is formed in the nearer tail, where the
  // CDF value carries full precision (near 1 it would round at ulp(1))
  const double e = p <= 0.5 ? 0.5 * std::erfc(-x / std::sqrt(2.0)) - p
                            : (1.0 - p) - 0.5 * std::erfc(x / std::sqrt(2.0));
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

BPath sample_b_path(std::uint64_t seed, const TimeGrid& grid, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("sample_b_path: dim must be positive");
  GaussianStream gauss(seed);
  const double scale = std::sqrt(grid.step);

  BPath path;
  path.grid = grid;
  path.dim = dim;
  path.nodes.assign((grid.steps + 1) * dim, 0.0);
  for (std::size_t n = 0; n < grid.steps; ++n) {
    for (std::size_t c = 0; c < dim; ++c) {
      path.nodes[(n + 1) * dim + c] = path.nodes[n * dim + c] + scale * gauss.next();
    }
  }
  return path;
}

BPath coarsen_b_path(const BPath& fine, const TimeGrid& coarse) {
  if (coarse.horizon != fine.grid.horizon)
    throw std::invalid_argument("coarsen_b_path: horizons differ");
  if (coarse.steps == 0 || fine.grid.steps % coarse.steps != 0)
    throw std::invalid_argument("coarsen_b_path: coarse step count must divide fine step count");

  const std::size_t ratio = fine.grid.steps / coarse.steps;
  BPath path;
  path.grid = coarse;
  path.dim = fine.dim;
  path.nodes.resize((coarse.steps + 1) * fine.dim);
  for (std::size_t n = 0; n <= coarse.steps; ++n) {
    for (std::size_t c = 0; c < fine.dim; ++c) {
      path.nodes[n * fine.dim + c] = fine.nodes[n * ratio * fine.dim + c];
    }
  }
  return path;
}

WBatch sample_w_batch(std::uint64_t seed, const TimeGrid& grid, std::size_t dim,
                      std::size_t samples) {
  if (dim == 0) throw std::invalid_argument("sample_w_batch: dim must be positive");
  if (samples == 0) throw std::invalid_argument("sample_w_batch: samples must be positive");

  GaussianStream gauss(seed);
  const double scale = std::sqrt(grid.step);

  WBatch batch;
  batch.grid = grid;
  batch.dim = dim;
  batch.samples = samples;
  batch.increments.resize(grid.steps * samples * dim);
  // sample-major draw order (normative): all steps of sample m before m+1
  for (std::size_t m = 0; m < samples; ++m) {
    for (std::size_t n = 0; n < grid.steps; ++n) {
      for (std::size_t c = 0; c < dim; ++c) {
        batch.increments[(n * samples + m) * dim + c] = scale * gauss.next();
      }
    }
  }
  return batch;
}

}  // namespace bdsde
