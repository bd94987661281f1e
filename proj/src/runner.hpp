#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "analytics.hpp"
#include "problem.hpp"
#include "solver.hpp"

namespace bdsde {

enum class ExperimentMode { single, schedule, b_ensemble };

// Fully resolved experiment description.  Serializes to and from one JSON
// document; the manifest embeds the resolved form so a run can be replayed
// bit-for-bit.
struct ExperimentConfig {
  std::string problem_name = "linear";
  LinearParams linear_params;
  FinanceParams finance_params;
  SolverConfig solver;
  std::uint64_t seed = 1;
  ExperimentMode mode = ExperimentMode::single;

  // schedule mode
  std::size_t j_max = 6;
  double alpha_m = 3.0;
  double beta = 1.0;
  double delta_base = 50.0;

  // driver-path ensemble mode: one run per (path, step count)
  std::size_t ensemble_paths = 5;
  std::vector<std::size_t> ensemble_steps = {2, 4, 8, 16, 32};

  // field-export time slices; empty means {0, 3N/4, N-1}
  std::vector<std::size_t> slices;

  std::size_t threads = 0;  // 0 = hardware concurrency
};

ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Applies one "section.key=value" override onto a config document.
void apply_config_override(nlohmann::json& doc, const std::string& dotted_key,
                           const std::string& value);

Problem build_problem(const ExperimentConfig& config);

struct RunArtifacts {
  std::filesystem::path manifest;
  std::vector<std::filesystem::path> files;
  std::size_t failed_repetitions = 0;
};

// Runs the configured experiment and writes stats.csv, reps.csv, field
// exports, errors.csv (when the problem has a closed-form oracle) and
// manifest.json into out_dir.
RunArtifacts run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Runs the same configuration twice, once as configured and once with the
// noise coefficient zeroed, on identical seeds; writes side-by-side slice
// stats to compare.csv.
RunArtifacts compare_bsde(const ExperimentConfig& config, const std::filesystem::path& out_dir);

// Re-executes the run described by a manifest; outputs are byte-identical
// to the original run's CSV bodies.
RunArtifacts replay(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& out_dir);

}  // namespace bdsde
