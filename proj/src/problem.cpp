#include "problem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bdsde {

namespace {

double negative_part(double a) { return a < 0.0 ? -a : 0.0; }

}  // namespace

Problem linear_problem(const LinearParams& params) {
  if (!(params.sigma > 0.0)) throw std::invalid_argument("linear_problem: sigma must be positive");
  if (!(params.horizon > 0.0)) throw std::invalid_argument("linear_problem: horizon must be positive");

  const double a0 = params.a0;
  const double b0 = params.b0;
  const double strike = params.strike;
  const double mu = params.mu;
  const double sigma = params.sigma;

  Problem p;
  p.state_dim = 1;
  p.value_dim = 1;
  p.noise_dim = 1;
  p.drift = [mu](std::span<const double> x, std::span<double> out) { out[0] = mu * x[0]; };
  p.diffusion = [sigma](std::span<const double> x, std::span<double> out) { out[0] = sigma * x[0]; };
  p.driver = [a0](double, std::span<const double>, std::span<const double> y,
                  std::span<const double>, std::span<double> out) { out[0] = a0 * y[0]; };
  p.noise = [b0](double, std::span<const double>, std::span<const double> y,
                 std::span<const double>, std::span<double> out) { out[0] = b0 * y[0]; };
  p.terminal = [strike](std::span<const double> x, std::span<double> out) { out[0] = strike - x[0]; };
  p.contraction = 0.0;
  p.x0 = {params.x0};
  p.horizon = params.horizon;
  p.name = "linear";
  p.linear = params;
  return p;
}

Problem finance_problem(const FinanceParams& params, NoiseVariant variant) {
  if (!(params.sigma > 0.0)) throw std::invalid_argument("finance_problem: sigma must be positive");
  if (!(params.horizon > 0.0)) throw std::invalid_argument("finance_problem: horizon must be positive");
  if (params.big_r < params.r) throw std::invalid_argument("finance_problem: borrowing rate below lending rate");
  const bool uses_log = variant == NoiseVariant::g1 || variant == NoiseVariant::g3;
  if (uses_log && !(params.domain_lower > 0.0))
    throw std::invalid_argument("finance_problem: log variants need a positive domain_lower");
  if (!(params.domain_upper > params.domain_lower))
    throw std::invalid_argument("finance_problem: domain_upper must exceed domain_lower");

  const double mu = params.mu;
  const double r = params.r;
  const double big_r = params.big_r;
  const double sigma = params.sigma;
  const double strike = params.strike;
  const double theta = (mu - r) / sigma;
  const double lo = params.domain_lower;
  const double hi = params.domain_upper;

  Problem p;
  p.state_dim = 1;
  p.value_dim = 1;
  p.noise_dim = 1;
  p.clamp_count = std::make_shared<std::atomic<std::uint64_t>>(0);
  auto clamps = p.clamp_count;

  // clamps x into the evaluation box before log() and counts every clamp
  auto clamped_log = [lo, hi, clamps](double x) {
    if (x < lo || x > hi) {
      clamps->fetch_add(1, std::memory_order_relaxed);
      x = x < lo ? lo : hi;
    }
    return std::log(x);
  };

  p.drift = [mu](std::span<const double> x, std::span<double> out) { out[0] = mu * x[0]; };
  p.diffusion = [sigma](std::span<const double> x, std::span<double> out) { out[0] = sigma * x[0]; };
  p.driver = [theta, r, big_r, sigma](double, std::span<const double>, std::span<const double> y,
                                      std::span<const double> z, std::span<double> out) {
    out[0] = -theta * z[0] - r * y[0] + negative_part(y[0] - z[0] / sigma) * (big_r - r);
  };
  switch (variant) {
    case NoiseVariant::g1:
      p.noise = [clamped_log](double, std::span<const double> x, std::span<const double> y,
                              std::span<const double> z, std::span<double> out) {
        out[0] = 0.1 * z[0] + 0.5 * y[0] + clamped_log(x[0]);
      };
      p.contraction = 0.1;
      p.name = "finance-g1";
      break;
    case NoiseVariant::g2:
      p.noise = [](double, std::span<const double>, std::span<const double> y,
                   std::span<const double> z, std::span<double> out) {
        out[0] = 0.1 * z[0] + 0.5 * y[0];
      };
      p.contraction = 0.1;
      p.name = "finance-g2";
      break;
    case NoiseVariant::g3:
      p.noise = [clamped_log](double, std::span<const double> x, std::span<const double> y,
                              std::span<const double>, std::span<double> out) {
        out[0] = clamped_log(x[0]) + 0.5 * y[0];
      };
      p.contraction = 0.0;
      p.name = "finance-g3";
      break;
  }
  p.terminal = [strike](std::span<const double> x, std::span<double> out) { out[0] = strike - x[0]; };
  p.x0 = {params.x0};
  p.horizon = params.horizon;
  return p;
}

std::vector<std::string> validate_problem(const Problem& problem) {
  const std::size_t d = problem.state_dim;
  const std::size_t k = problem.value_dim;
  const std::size_t l = problem.noise_dim;
  if (d == 0 || k == 0 || l == 0) throw std::invalid_argument("problem: dimensions must be positive");
  if (problem.x0.size() != d) throw std::invalid_argument("problem: x0 size does not match state_dim");
  if (!(problem.horizon > 0.0)) throw std::invalid_argument("problem: horizon must be positive");
  if (!problem.drift || !problem.diffusion || !problem.driver || !problem.noise || !problem.terminal)
    throw std::invalid_argument("problem: all coefficient closures must be set");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto probe = [&](const char* label, auto&& call, std::size_t out_size) {
    std::vector<double> out(out_size, nan);
    call(out);
    for (double v : out) {
      if (!std::isfinite(v))
        throw std::invalid_argument(std::string("problem: ") + label +
                                    " produced a non-finite or missing output at the probe point");
    }
  };

  const std::vector<double> y0(k, 0.0), z0(k * d, 0.0);
  std::span<const double> x(problem.x0);
  probe("drift", [&](std::span<double> out) { problem.drift(x, out); }, d);
  probe("diffusion", [&](std::span<double> out) { problem.diffusion(x, out); }, d * d);
  probe("driver", [&](std::span<double> out) { problem.driver(0.0, x, y0, z0, out); }, k);
  probe("noise", [&](std::span<double> out) { problem.noise(0.0, x, y0, z0, out); }, k * l);
  probe("terminal", [&](std::span<double> out) { problem.terminal(x, out); }, k);

  std::vector<std::string> warnings;
  if (problem.contraction >= 1.0)
    warnings.push_back("contraction coefficient >= 1; the scheme may not converge");
  return warnings;
}

Problem custom_problem(std::size_t state_dim, std::size_t value_dim, std::size_t noise_dim,
                       DriftFn drift, DiffusionFn diffusion, DriverFn driver, NoiseFn noise,
                       TerminalFn terminal, std::vector<double> x0, double horizon,
                       double contraction) {
  Problem p;
  p.state_dim = state_dim;
  p.value_dim = value_dim;
  p.noise_dim = noise_dim;
  p.drift = std::move(drift);
  p.diffusion = std::move(diffusion);
  p.driver = std::move(driver);
  p.noise = std::move(noise);
  p.terminal = std::move(terminal);
  p.contraction = contraction;
  p.x0 = std::move(x0);
  p.horizon = horizon;
  p.name = "custom";
  validate_problem(p);
  return p;
}

Problem without_noise(const Problem& problem) {
  Problem p = problem;
  const std::size_t out_size = problem.value_dim * problem.noise_dim;
  p.noise = [out_size](double, std::span<const double>, std::span<const double>,
                       std::span<const double>, std::span<double> out) {
    for (std::size_t i = 0; i < out_size; ++i) out[i] = 0.0;
  };
  p.contraction = 0.0;
  return p;
}

}  // namespace bdsde
