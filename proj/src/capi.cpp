#include <bdsde/bdsde.h>

#include <cstring>
#include <exception>
#include <functional>
#include <ios>
#include <memory>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "problem.hpp"
#include "rng.hpp"
#include "runner.hpp"
#include "solver.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

bdsde_status run_guarded(const std::function<void()>& body) {
  try {
    body();
    g_last_error.clear();
    return BDSDE_OK;
  } catch (const bdsde::ConfigError& e) {
    set_error(e.what());
    return BDSDE_ERR_CONFIG;
  } catch (const bdsde::NumericError& e) {
    set_error(e.what());
    return BDSDE_ERR_NUMERIC;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return BDSDE_ERR_INVALID_ARGUMENT;
  } catch (const std::ios_base::failure& e) {
    set_error(e.what());
    return BDSDE_ERR_IO;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return BDSDE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return BDSDE_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return BDSDE_ERR_INTERNAL;
  }
}

bdsde_status require(bool ok, const char* message) {
  if (ok) return BDSDE_OK;
  set_error(message);
  return BDSDE_ERR_INVALID_ARGUMENT;
}

}  // namespace

struct bdsde_problem {
  bdsde::Problem value;
};

struct bdsde_config {
  bdsde::ExperimentConfig value;
};

struct bdsde_solution {
  bdsde::BackwardSolution value;
};

extern "C" {

const char* bdsde_version(void) { return "1.0.0"; }

const char* bdsde_last_error(void) { return g_last_error.c_str(); }

bdsde_status bdsde_problem_create_linear(const bdsde_linear_params* params,
                                         bdsde_problem** out) {
  if (auto s = require(params && out, "null argument")) return s;
  return run_guarded([&] {
    bdsde::LinearParams p;
    p.a0 = params->a0;
    p.b0 = params->b0;
    p.strike = params->strike;
    p.mu = params->mu;
    p.sigma = params->sigma;
    p.x0 = params->x0;
    p.horizon = params->horizon;
    *out = new bdsde_problem{bdsde::linear_problem(p)};
  });
}

bdsde_status bdsde_problem_create_finance(const bdsde_finance_params* params,
                                          int noise_variant, bdsde_problem** out) {
  if (auto s = require(params && out, "null argument")) return s;
  if (auto s = require(noise_variant >= 1 && noise_variant <= 3,
                       "noise_variant must be 1, 2 or 3"))
    return s;
  return run_guarded([&] {
    bdsde::FinanceParams p;
    p.mu = params->mu;
    p.r = params->r;
    p.big_r = params->big_r;
    p.strike = params->strike;
    p.sigma = params->sigma;
    p.x0 = params->x0;
    p.horizon = params->horizon;
    p.domain_lower = params->domain_lower;
    p.domain_upper = params->domain_upper;
    auto variant = static_cast<bdsde::NoiseVariant>(noise_variant - 1);
    *out = new bdsde_problem{bdsde::finance_problem(p, variant)};
  });
}

bdsde_status bdsde_problem_create_builtin(const char* name, bdsde_problem** out) {
  if (auto s = require(name && out, "null argument")) return s;
  return run_guarded([&] {
    bdsde::ExperimentConfig config;
    config.problem_name = name;
    *out = new bdsde_problem{bdsde::build_problem(config)};
  });
}

bdsde_status bdsde_problem_create_custom(const bdsde_custom_problem* desc,
                                         bdsde_problem** out) {
  if (auto s = require(desc && out, "null argument")) return s;
  if (auto s = require(desc->drift && desc->diffusion && desc->driver && desc->noise &&
                           desc->terminal && desc->x0,
                       "custom problem: every callback and x0 must be set"))
    return s;
  return run_guarded([&] {
    const size_t d = desc->state_dim;
    const size_t k = desc->value_dim;
    const size_t l = desc->noise_dim;
    if (d == 0 || k == 0 || l == 0)
      throw std::invalid_argument("custom problem: dimensions must be positive");
    void* ctx = desc->ctx;
    auto drift_fn = desc->drift;
    auto diffusion_fn = desc->diffusion;
    auto driver_fn = desc->driver;
    auto noise_fn = desc->noise;
    auto terminal_fn = desc->terminal;
    bdsde::Problem p = bdsde::custom_problem(
        d, k, l,
        [drift_fn, ctx](std::span<const double> x, std::span<double> out_b) {
          drift_fn(x.data(), out_b.data(), ctx);
        },
        [diffusion_fn, ctx](std::span<const double> x, std::span<double> out_s) {
          diffusion_fn(x.data(), out_s.data(), ctx);
        },
        [driver_fn, ctx](double t, std::span<const double> x, std::span<const double> y,
                         std::span<const double> z, std::span<double> out_f) {
          driver_fn(t, x.data(), y.data(), z.data(), out_f.data(), ctx);
        },
        [noise_fn, ctx](double t, std::span<const double> x, std::span<const double> y,
                        std::span<const double> z, std::span<double> out_g) {
          noise_fn(t, x.data(), y.data(), z.data(), out_g.data(), ctx);
        },
        [terminal_fn, ctx](std::span<const double> x, std::span<double> out_phi) {
          terminal_fn(x.data(), out_phi.data(), ctx);
        },
        std::vector<double>(desc->x0, desc->x0 + d), desc->horizon, desc->contraction);
    *out = new bdsde_problem{std::move(p)};
  });
}

bdsde_status bdsde_problem_dims(const bdsde_problem* problem, uint64_t* state_dim,
                                uint64_t* value_dim, uint64_t* noise_dim) {
  if (auto s = require(problem != nullptr, "null problem")) return s;
  if (state_dim) *state_dim = problem->value.state_dim;
  if (value_dim) *value_dim = problem->value.value_dim;
  if (noise_dim) *noise_dim = problem->value.noise_dim;
  g_last_error.clear();
  return BDSDE_OK;
}

void bdsde_problem_destroy(bdsde_problem* problem) { delete problem; }

bdsde_status bdsde_solve(const bdsde_problem* problem, const bdsde_solver_options* options,
                         uint64_t seed, bdsde_solution** out) {
  if (auto s = require(problem && options && out, "null argument")) return s;
  return run_guarded([&] {
    const auto& p = problem->value;
    bdsde::SolverConfig config;
    config.steps = options->steps;
    config.samples = options->samples;
    config.cell_edge = options->cell_edge;
    if (options->picard_iterations > 0) config.picard_iterations = options->picard_iterations;
    config.repetitions = 1;
    if (options->data_driven_domain) {
      config.domain_mode = bdsde::DomainMode::data_driven;
    } else {
      if (!options->domain_lower || !options->domain_upper)
        throw std::invalid_argument("fixed domain requires domain_lower and domain_upper");
      config.domain_mode = bdsde::DomainMode::fixed;
      config.domain_lower.assign(options->domain_lower, options->domain_lower + p.state_dim);
      config.domain_upper.assign(options->domain_upper, options->domain_upper + p.state_dim);
    }
    config.validate(p);

    bdsde::TimeGrid grid = bdsde::make_grid(p.horizon, config.steps);
    bdsde::BPath b_path = bdsde::sample_b_path(
        bdsde::derive_seed(seed, bdsde::SeedStream::b_path, 0), grid, p.noise_dim);
    // same lineage as repetition 0 of unit 0 in the experiment runner, so a
    // direct solve reproduces the first row of a run with the same seed
    uint64_t w_seed = bdsde::derive_seed(bdsde::derive_seed(seed, bdsde::SeedStream::unit, 0),
                                         bdsde::SeedStream::w_batch, 0);
    bdsde::WBatch noise = bdsde::sample_w_batch(w_seed, grid, p.state_dim, config.samples);
    bdsde::BackwardSolution solution =
        bdsde::backward_solve(p, config, b_path, std::move(noise));
    *out = new bdsde_solution{std::move(solution)};
  });
}

bdsde_status bdsde_solution_y0(const bdsde_solution* solution, double* out) {
  if (auto s = require(solution && out, "null argument")) return s;
  const auto& y0 = solution->value.y0;
  std::memcpy(out, y0.data(), y0.size() * sizeof(double));
  g_last_error.clear();
  return BDSDE_OK;
}

bdsde_status bdsde_solution_eval(const bdsde_solution* solution, uint64_t n, const double* x,
                                 double* y_out, double* z_out) {
  if (auto s = require(solution && x, "null argument")) return s;
  return run_guarded([&] {
    const auto& sol = solution->value;
    if (n >= sol.y_fields.size())
      throw std::invalid_argument("bdsde_solution_eval: time index out of range");
    const size_t d = sol.basis->dim();
    std::span<const double> state(x, d);
    if (y_out) {
      auto y = sol.y_fields[n].evaluate(state);
      std::memcpy(y_out, y.data(), y.size() * sizeof(double));
    }
    if (z_out) {
      auto z = sol.z_fields[n].evaluate(state);
      std::memcpy(z_out, z.data(), z.size() * sizeof(double));
    }
  });
}

void bdsde_solution_destroy(bdsde_solution* solution) { delete solution; }

bdsde_status bdsde_config_create(bdsde_config** out) {
  if (auto s = require(out != nullptr, "null argument")) return s;
  return run_guarded([&] { *out = new bdsde_config{}; });
}

bdsde_status bdsde_config_load_file(const char* path, bdsde_config** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return run_guarded([&] { *out = new bdsde_config{bdsde::load_experiment_config(path)}; });
}

bdsde_status bdsde_config_load_string(const char* text, bdsde_config** out) {
  if (auto s = require(text && out, "null argument")) return s;
  return run_guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw bdsde::ConfigError(std::string("config: ") + e.what());
    }
    *out = new bdsde_config{bdsde::parse_experiment_config(doc)};
  });
}

bdsde_status bdsde_config_set(bdsde_config* config, const char* dotted_key, const char* value) {
  if (auto s = require(config && dotted_key && value, "null argument")) return s;
  return run_guarded([&] {
    nlohmann::json doc = bdsde::experiment_config_to_json(config->value);
    bdsde::apply_config_override(doc, dotted_key, value);
    config->value = bdsde::parse_experiment_config(doc);
  });
}

void bdsde_config_destroy(bdsde_config* config) { delete config; }

bdsde_status bdsde_run_experiment(const bdsde_config* config, const char* out_dir) {
  if (auto s = require(config && out_dir, "null argument")) return s;
  return run_guarded([&] { bdsde::run_experiment(config->value, out_dir); });
}

bdsde_status bdsde_compare_bsde(const bdsde_config* config, const char* out_dir) {
  if (auto s = require(config && out_dir, "null argument")) return s;
  return run_guarded([&] { bdsde::compare_bsde(config->value, out_dir); });
}

bdsde_status bdsde_replay(const char* manifest_path, const char* out_dir) {
  if (auto s = require(manifest_path && out_dir, "null argument")) return s;
  return run_guarded([&] { bdsde::replay(manifest_path, out_dir); });
}

}  // extern "C"
