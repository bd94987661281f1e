#include "forward.hpp"

#include <cmath>
#include <stdexcept>

#include "errors.hpp"

namespace bdsde {

PathBatch simulate_forward(const Problem& problem, WBatch noise, std::span<const double> x0) {
  const std::size_t d = problem.state_dim;
  if (noise.dim != d) throw std::invalid_argument("simulate_forward: noise dimension != state_dim");
  if (x0.size() != d) throw std::invalid_argument("simulate_forward: x0 size != state_dim");

  const std::size_t steps = noise.grid.steps;
  const std::size_t samples = noise.samples;
  const double h = noise.grid.step;

  PathBatch batch;
  batch.grid = noise.grid;
  batch.dim = d;
  batch.samples = samples;
  batch.states.resize((steps + 1) * samples * d);

  std::vector<double> drift(d), diffusion(d * d);
  for (std::size_t m = 0; m < samples; ++m) {
    for (std::size_t c = 0; c < d; ++c) batch.states[m * d + c] = x0[c];
  }
  for (std::size_t n = 0; n < steps; ++n) {
    for (std::size_t m = 0; m < samples; ++m) {
      const double* x = batch.states.data() + (n * samples + m) * d;
      double* next = batch.states.data() + ((n + 1) * samples + m) * d;
      problem.drift({x, d}, drift);
      problem.diffusion({x, d}, diffusion);
      const double* dw = noise.increments.data() + (n * samples + m) * d;
      for (std::size_t i = 0; i < d; ++i) {
        double v = x[i] + drift[i] * h;
        for (std::size_t j = 0; j < d; ++j) v += diffusion[i * d + j] * dw[j];
        if (!std::isfinite(v)) throw NumericError("simulate_forward: non-finite state", n + 1, m);
        next[i] = v;
      }
    }
  }
  batch.noise = std::move(noise);
  return batch;
}

}  // namespace bdsde
