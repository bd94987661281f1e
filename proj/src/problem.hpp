#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bdsde {

// Coefficient closures write into caller-provided buffers (row-major for
// matrix-valued outputs) so the hot loops never allocate.
using DriftFn = std::function<void(std::span<const double> x, std::span<double> out)>;        // d
using DiffusionFn = std::function<void(std::span<const double> x, std::span<double> out)>;    // d x d
using TerminalFn = std::function<void(std::span<const double> x, std::span<double> out)>;     // k
using DriverFn = std::function<void(double t, std::span<const double> x, std::span<const double> y,
                                    std::span<const double> z, std::span<double> out)>;       // k, z is k x d
using NoiseFn = std::function<void(double t, std::span<const double> x, std::span<const double> y,
                                   std::span<const double> z, std::span<double> out)>;        // k x l

// Linear test equation: geometric state, terminal K - x, driver a0*y and
// noise coefficient b0*y.  Admits a closed-form solution conditional on the
// driver path, which the analytics oracles use.
struct LinearParams {
  double a0 = 0.5;
  double b0 = 0.5;
  double strike = 115.0;  // K
  double mu = 0.05;
  double sigma = 0.2;     // volatility, must be positive
  double x0 = 100.0;
  double horizon = 0.25;  // T
};

// European put with distinct lending/borrowing rates plus one of three noise
// coefficients; theta = (mu - r) / sigma.
struct FinanceParams {
  double mu = 0.05;
  double r = 0.01;       // lending rate
  double big_r = 0.06;   // borrowing rate, >= r
  double strike = 115.0;
  double sigma = 0.2;
  double x0 = 100.0;
  double horizon = 0.25;
  // evaluation box for the log terms; x is clamped here before log()
  double domain_lower = 60.0;
  double domain_upper = 200.0;
};

enum class NoiseVariant { g1, g2, g3 };

struct Problem {
  std::size_t state_dim = 1;  // d
  std::size_t value_dim = 1;  // k
  std::size_t noise_dim = 1;  // l

  DriftFn drift;
  DiffusionFn diffusion;
  DriverFn driver;        // f(t, x, y, z)
  NoiseFn noise;          // g(t, x, y, z)
  TerminalFn terminal;    // phi(x)

  double contraction = 0.0;  // Lipschitz bound of the noise term in z; < 1 expected
  std::vector<double> x0;
  double horizon = 0.0;
  std::string name;

  // set when the closed-form solution applies (linear problem)
  std::optional<LinearParams> linear;

  // counts state clamps performed inside log-domain coefficients
  std::shared_ptr<std::atomic<std::uint64_t>> clamp_count;

  std::uint64_t clamps() const { return clamp_count ? clamp_count->load() : 0; }
};

Problem linear_problem(const LinearParams& params = {});
Problem finance_problem(const FinanceParams& params, NoiseVariant variant);

// Validates dimensions and probes every closure at (t=0, x0, y=0, z=0);
// closures must fill their whole output with finite values.  The returned
// warnings flag non-fatal oddities (contraction >= 1).
std::vector<std::string> validate_problem(const Problem& problem);

Problem custom_problem(std::size_t state_dim, std::size_t value_dim, std::size_t noise_dim,
                       DriftFn drift, DiffusionFn diffusion, DriverFn driver, NoiseFn noise,
                       TerminalFn terminal, std::vector<double> x0, double horizon,
                       double contraction = 0.0);

// Copy of a problem with the noise coefficient replaced by zero; the
// backward equation then no longer sees the driver path.
Problem without_noise(const Problem& problem);

}  // namespace bdsde
