#include "runner.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <thread>

#include "csv.hpp"
#include "errors.hpp"
#include "numeric.hpp"

namespace bdsde {

namespace {

using nlohmann::json;

constexpr const char* kManifestSchema = "bdsde-manifest-v1";

// -- config parsing ---------------------------------------------------------

// Reads known keys out of one JSON section and rejects the rest, so typos
// fail loudly with the offending path.
class SectionParser {
 public:
  SectionParser(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(prefix_ + ": expected an object");
  }

  template <typename T>
  void field(const char* key, T& dst) {
    known_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      it->get_to(dst);
    } catch (const json::exception&) {
      throw ConfigError(prefix_ + "." + key + ": wrong type");
    }
  }

  void field_enum(const char* key, std::string& dst, std::initializer_list<const char*> allowed) {
    field(key, dst);
    for (const char* a : allowed) {
      if (dst == a) return;
    }
    std::string msg = prefix_ + "." + key + ": must be one of {";
    bool first = true;
    for (const char* a : allowed) {
      if (!first) msg += ", ";
      msg += a;
      first = false;
    }
    throw ConfigError(msg + "}");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!known_.count(item.key()))
        throw ConfigError(prefix_ + "." + item.key() + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> known_;
};

json empty_object() { return json::object(); }

}  // namespace

ExperimentConfig parse_experiment_config(const json& doc) {
  ExperimentConfig config;
  SectionParser top(doc, "config");

  json problem = empty_object();
  json solver = empty_object();
  json sched = empty_object();
  json ensemble = empty_object();
  top.field("problem", problem);
  top.field("solver", solver);
  top.field("schedule", sched);
  top.field("ensemble", ensemble);
  top.field("seed", config.seed);
  std::string mode = "single";
  top.field_enum("mode", mode, {"single", "schedule", "b-ensemble"});
  top.field("slices", config.slices);
  top.field("threads", config.threads);
  top.finish();
  config.mode = mode == "single"     ? ExperimentMode::single
                : mode == "schedule" ? ExperimentMode::schedule
                                     : ExperimentMode::b_ensemble;

  {
    SectionParser p(problem, "problem");
    p.field_enum("name", config.problem_name,
                 {"linear", "finance-g1", "finance-g2", "finance-g3", "custom"});
    LinearParams& lin = config.linear_params;
    FinanceParams& fin = config.finance_params;
    p.field("a0", lin.a0);
    p.field("b0", lin.b0);
    p.field("mu", lin.mu);
    p.field("sigma", lin.sigma);
    p.field("strike", lin.strike);
    p.field("x0", lin.x0);
    p.field("horizon", lin.horizon);
    p.field("r", fin.r);
    p.field("R", fin.big_r);
    p.field("domain_lower", fin.domain_lower);
    p.field("domain_upper", fin.domain_upper);
    p.finish();
    // shared scalars mirror into the finance params
    fin.mu = lin.mu;
    fin.sigma = lin.sigma;
    fin.strike = lin.strike;
    fin.x0 = lin.x0;
    fin.horizon = lin.horizon;
    if (config.problem_name == "custom")
      throw ConfigError("problem.name: custom problems are library-only, not runnable from a config");
  }

  {
    SectionParser p(solver, "solver");
    p.field("steps", config.solver.steps);
    p.field("samples", config.solver.samples);
    p.field("cell_edge", config.solver.cell_edge);
    p.field("picard_iterations", config.solver.picard_iterations);
    p.field("repetitions", config.solver.repetitions);
    std::string domain = config.solver.domain_mode == DomainMode::fixed ? "fixed" : "data";
    p.field_enum("domain", domain, {"fixed", "data"});
    config.solver.domain_mode = domain == "fixed" ? DomainMode::fixed : DomainMode::data_driven;
    p.field("lower", config.solver.domain_lower);
    p.field("upper", config.solver.domain_upper);
    p.finish();
  }

  {
    SectionParser p(sched, "schedule");
    p.field("j_max", config.j_max);
    p.field("alpha_m", config.alpha_m);
    p.field("beta", config.beta);
    p.field("delta_base", config.delta_base);
    p.finish();
  }

  {
    SectionParser p(ensemble, "ensemble");
    p.field("paths", config.ensemble_paths);
    p.field("steps", config.ensemble_steps);
    p.finish();
  }

  // default fixed domain for one-dimensional problems
  if (config.solver.domain_mode == DomainMode::fixed && config.solver.domain_lower.empty()) {
    config.solver.domain_lower = {config.finance_params.domain_lower};
    config.solver.domain_upper = {config.finance_params.domain_upper};
  }
  return config;
}

json experiment_config_to_json(const ExperimentConfig& config) {
  const LinearParams& lin = config.linear_params;
  const FinanceParams& fin = config.finance_params;
  json doc;
  doc["problem"] = {{"name", config.problem_name}, {"a0", lin.a0},     {"b0", lin.b0},
                    {"mu", lin.mu},                {"sigma", lin.sigma}, {"strike", lin.strike},
                    {"x0", lin.x0},                {"horizon", lin.horizon}, {"r", fin.r},
                    {"R", fin.big_r},              {"domain_lower", fin.domain_lower},
                    {"domain_upper", fin.domain_upper}};
  doc["solver"] = {{"steps", config.solver.steps},
                   {"samples", config.solver.samples},
                   {"cell_edge", config.solver.cell_edge},
                   {"picard_iterations", config.solver.picard_iterations},
                   {"repetitions", config.solver.repetitions},
                   {"domain", config.solver.domain_mode == DomainMode::fixed ? "fixed" : "data"},
                   {"lower", config.solver.domain_lower},
                   {"upper", config.solver.domain_upper}};
  doc["seed"] = config.seed;
  doc["mode"] = config.mode == ExperimentMode::single     ? "single"
                : config.mode == ExperimentMode::schedule ? "schedule"
                                                          : "b-ensemble";
  doc["schedule"] = {{"j_max", config.j_max},
                     {"alpha_m", config.alpha_m},
                     {"beta", config.beta},
                     {"delta_base", config.delta_base}};
  doc["ensemble"] = {{"paths", config.ensemble_paths}, {"steps", config.ensemble_steps}};
  doc["slices"] = config.slices;
  doc["threads"] = config.threads;
  return doc;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(file);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_experiment_config(doc);
}

void apply_config_override(json& doc, const std::string& dotted_key, const std::string& value) {
  if (dotted_key.empty()) throw ConfigError("override: empty key");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("override: malformed key " + dotted_key);
    if (dot == std::string::npos) {
      json parsed = json::parse(value, nullptr, false);
      (*node)[part] = parsed.is_discarded() ? json(value) : parsed;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

Problem build_problem(const ExperimentConfig& config) {
  if (config.problem_name == "linear") return linear_problem(config.linear_params);
  if (config.problem_name == "finance-g1") return finance_problem(config.finance_params, NoiseVariant::g1);
  if (config.problem_name == "finance-g2") return finance_problem(config.finance_params, NoiseVariant::g2);
  if (config.problem_name == "finance-g3") return finance_problem(config.finance_params, NoiseVariant::g3);
  throw ConfigError("problem.name: no builtin named " + config.problem_name);
}

namespace {

// one (N, M, delta) setting to run, with its driver path and seed lineage
struct ExperimentUnit {
  std::size_t j = 0;        // row key in the CSVs
  std::size_t b_index = 0;  // which driver path
  std::string label;        // file-name suffix for field exports
  SolverConfig solver;
  std::uint64_t unit_master = 0;
};

std::vector<ExperimentUnit> plan_units(const ExperimentConfig& config) {
  std::vector<ExperimentUnit> units;
  switch (config.mode) {
    case ExperimentMode::single: {
      ExperimentUnit unit;
      unit.j = 0;
      unit.b_index = 0;
      unit.label = "run";
      unit.solver = config.solver;
      units.push_back(std::move(unit));
      break;
    }
    case ExperimentMode::schedule: {
      const auto entries = schedule(config.j_max, config.alpha_m, config.beta, config.delta_base);
      for (const auto& entry : entries) {
        ExperimentUnit unit;
        unit.j = entry.j;
        unit.b_index = 0;
        unit.label = "j" + std::to_string(entry.j);
        unit.solver = config.solver;
        unit.solver.steps = entry.steps;
        unit.solver.samples = entry.samples;
        unit.solver.cell_edge = entry.cell_edge;
        units.push_back(std::move(unit));
      }
      break;
    }
    case ExperimentMode::b_ensemble: {
      if (config.ensemble_steps.empty())
        throw ConfigError("ensemble.steps: at least one step count required");
      std::size_t j = 0;
      for (std::size_t e = 0; e < config.ensemble_paths; ++e) {
        for (std::size_t steps : config.ensemble_steps) {
          ExperimentUnit unit;
          unit.j = j++;
          unit.b_index = e;
          unit.label = "e" + std::to_string(e) + "_N" + std::to_string(steps);
          unit.solver = config.solver;
          unit.solver.steps = steps;
          units.push_back(std::move(unit));
        }
      }
      break;
    }
  }
  for (std::size_t u = 0; u < units.size(); ++u) {
    units[u].unit_master = derive_seed(config.seed, SeedStream::unit, u);
  }
  return units;
}

// all driver paths live on one common-refinement grid
std::size_t common_b_steps(const std::vector<ExperimentUnit>& units) {
  std::size_t steps = 1;
  for (const auto& unit : units) {
    steps = std::lcm(steps, unit.solver.steps);
    if (steps > 1000000)
      throw ConfigError("config: step counts have no usable common refinement (lcm > 1e6)");
  }
  return steps;
}

std::vector<std::size_t> slice_steps(const ExperimentConfig& config, std::size_t steps) {
  std::vector<std::size_t> slices = config.slices;
  if (slices.empty()) slices = {0, 3 * steps / 4, steps - 1};
  for (auto& n : slices) n = std::min(n, steps - 1);
  std::sort(slices.begin(), slices.end());
  slices.erase(std::unique(slices.begin(), slices.end()), slices.end());
  return slices;
}

std::size_t resolve_threads(std::size_t configured) {
  if (configured > 0) return configured;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// configs built in code may leave the fixed box empty; fill it the same way
// the parser does so both paths run identically
ExperimentConfig with_default_domain(const ExperimentConfig& config) {
  ExperimentConfig out = config;
  if (out.solver.domain_mode == DomainMode::fixed && out.solver.domain_lower.empty()) {
    out.solver.domain_lower = {out.finance_params.domain_lower};
    out.solver.domain_upper = {out.finance_params.domain_upper};
  }
  return out;
}

struct UnitResults {
  std::vector<RepetitionOutcome> outcomes;
  BPath path;  // on the unit grid
};

UnitResults run_unit(const Problem& problem, const ExperimentUnit& unit, const BPath& fine_path,
                     std::size_t threads) {
  UnitResults results;
  results.path = coarsen_b_path(fine_path, make_grid(fine_path.grid.horizon, unit.solver.steps));
  results.outcomes = run_repetitions(problem, unit.solver, results.path, unit.unit_master, threads);
  return results;
}

json occupancy_summary(const BackwardSolution& solution, const Problem& problem) {
  const std::size_t cells = solution.basis->cells();
  std::size_t occupied = 0;
  std::size_t min_occ = SIZE_MAX;
  std::size_t max_occ = 0;
  for (const auto& field : solution.y_fields) {
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const std::size_t occ = field.occupancy(cell);
      if (occ > 0) {
        ++occupied;
        min_occ = std::min(min_occ, occ);
        max_occ = std::max(max_occ, occ);
      }
    }
  }
  json out;
  out["cells"] = cells;
  out["time_slices"] = solution.y_fields.size();
  out["occupied_cell_slices"] = occupied;
  out["total_cell_slices"] = cells * solution.y_fields.size();
  out["min_occupancy"] = min_occ == SIZE_MAX ? 0 : min_occ;
  out["max_occupancy"] = max_occ;
  out["basis_clamps"] = solution.basis->clamp_count();
  out["coefficient_clamps"] = problem.clamps();
  return out;
}

void export_fields(const BackwardSolution& solution, const std::vector<std::size_t>& slices,
                   std::size_t k, std::size_t d, const std::filesystem::path& path) {
  std::vector<std::string> columns = {"n"};
  const std::size_t dim = solution.basis->dim();
  for (std::size_t i = 0; i < dim; ++i) columns.push_back(dim == 1 ? "cell_lo" : "cell_lo_" + std::to_string(i));
  for (std::size_t i = 0; i < dim; ++i) columns.push_back(dim == 1 ? "cell_hi" : "cell_hi_" + std::to_string(i));
  columns.push_back("occupancy");
  for (std::size_t j1 = 0; j1 < k; ++j1) columns.push_back("y_" + std::to_string(j1));
  for (std::size_t j1 = 0; j1 < k; ++j1) {
    for (std::size_t j2 = 0; j2 < d; ++j2) {
      columns.push_back("z_" + std::to_string(j1) + "_" + std::to_string(j2));
    }
  }

  CsvWriter csv("bdsde-fields-v1", std::move(columns));
  std::vector<double> lo(dim), hi(dim);
  for (std::size_t n : slices) {
    const auto& y = solution.y_fields[n];
    const auto& z = solution.z_fields[n];
    for (std::size_t cell = 0; cell < solution.basis->cells(); ++cell) {
      solution.basis->cell_bounds(cell, lo, hi);
      std::vector<std::string> row;
      row.push_back(std::to_string(n));
      for (double v : lo) row.push_back(format_double(v));
      for (double v : hi) row.push_back(format_double(v));
      row.push_back(std::to_string(y.occupancy(cell)));
      for (double v : y.value_at_cell(cell)) row.push_back(format_double(v));
      for (double v : z.value_at_cell(cell)) row.push_back(format_double(v));
      csv.add_row(std::move(row));
    }
  }
  csv.write(path);
}

void write_manifest(const std::filesystem::path& out_dir, const std::string& verb,
                    const ExperimentConfig& config, const std::vector<ExperimentUnit>& units,
                    std::size_t b_steps, const json& occupancy, const json& residuals,
                    const std::vector<std::string>& outputs, const json& failures) {
  json manifest;
  manifest["schema"] = kManifestSchema;
  manifest["revision"] = build_revision();
  manifest["verb"] = verb;
  manifest["config"] = experiment_config_to_json(config);
  manifest["b_grid_steps"] = b_steps;
  json unit_rows = json::array();
  for (const auto& unit : units) {
    unit_rows.push_back({{"j", unit.j},
                         {"b_index", unit.b_index},
                         {"label", unit.label},
                         {"steps", unit.solver.steps},
                         {"samples", unit.solver.samples},
                         {"cell_edge", unit.solver.cell_edge},
                         {"unit_master", unit.unit_master}});
  }
  manifest["units"] = std::move(unit_rows);
  manifest["seeds"] = {
      {"master", config.seed},
      {"derivation",
       "b: derive(master, b_path, b_index); unit: derive(master, unit, unit_index); "
       "w: derive(unit_master, w_batch, repetition)"}};
  manifest["occupancy"] = occupancy;
  manifest["picard_residuals"] = residuals;
  manifest["outputs"] = outputs;
  manifest["failures"] = failures;

  std::ofstream file(out_dir / "manifest.json", std::ios::binary);
  if (!file) throw std::runtime_error("manifest: cannot open for writing");
  file << manifest.dump(2) << "\n";
}

std::string csv_size(std::size_t v) { return std::to_string(v); }

}  // namespace

RunArtifacts run_experiment(const ExperimentConfig& raw_config,
                            const std::filesystem::path& out_dir) {
  const ExperimentConfig config = with_default_domain(raw_config);
  const Problem problem = build_problem(config);
  const auto units = plan_units(config);
  const std::size_t threads = resolve_threads(config.threads);
  std::filesystem::create_directories(out_dir);

  const std::size_t b_steps = common_b_steps(units);
  const TimeGrid fine_grid = make_grid(problem.horizon, b_steps);

  // one fine path per ensemble index, shared across units
  std::size_t path_count = 1;
  for (const auto& unit : units) path_count = std::max(path_count, unit.b_index + 1);
  std::vector<BPath> fine_paths;
  fine_paths.reserve(path_count);
  for (std::size_t e = 0; e < path_count; ++e) {
    fine_paths.push_back(
        sample_b_path(derive_seed(config.seed, SeedStream::b_path, e), fine_grid, problem.noise_dim));
  }

  const bool has_oracle = problem.linear.has_value();

  CsvWriter stats_csv("bdsde-stats-v1", {"j", "N", "M", "delta", "I", "reps", "y0_mean", "y0_std",
                                         "oracle_y0", "rel_err"});
  CsvWriter reps_csv("bdsde-reps-v1", {"j", "N", "M", "delta", "rep", "y0"});
  CsvWriter errors_csv("bdsde-errors-v1",
                       {"j", "N", "M", "delta", "reps", "err_y_sup", "err_z_sum", "err_total"});

  json failures = json::array();
  json occupancy = empty_object();
  json residuals = json::array();
  std::vector<std::string> outputs = {"stats.csv", "reps.csv"};
  RunArtifacts artifacts;

  for (std::size_t u = 0; u < units.size(); ++u) {
    const ExperimentUnit& unit = units[u];
    const UnitResults results = run_unit(problem, unit, fine_paths[unit.b_index], threads);

    std::vector<std::vector<double>> y0_values;
    std::vector<const RepetitionOutcome*> successes;
    for (const auto& outcome : results.outcomes) {
      if (outcome.solution) {
        y0_values.push_back(outcome.solution->y0);
        successes.push_back(&outcome);
        reps_csv.add_row({csv_size(unit.j), csv_size(unit.solver.steps),
                          csv_size(unit.solver.samples), format_double(unit.solver.cell_edge),
                          csv_size(outcome.index), format_double(outcome.solution->y0[0])});
      } else {
        failures.push_back({{"unit", unit.j}, {"rep", outcome.index}, {"message", outcome.error}});
        ++artifacts.failed_repetitions;
      }
    }

    std::string oracle_cell, rel_cell;
    double oracle_y0 = 0.0;
    if (has_oracle) {
      oracle_y0 = explicit_linear_y(0, problem.x0[0], results.path, *problem.linear);
      oracle_cell = format_double(oracle_y0);
    }
    if (!y0_values.empty()) {
      const RunStats stats = empirical_stats(y0_values);
      if (has_oracle && oracle_y0 != 0.0)
        rel_cell = format_double(std::abs(stats.mean[0] - oracle_y0) / std::abs(oracle_y0));
      stats_csv.add_row({csv_size(unit.j), csv_size(unit.solver.steps),
                         csv_size(unit.solver.samples), format_double(unit.solver.cell_edge),
                         csv_size(unit.solver.picard_iterations), csv_size(stats.count),
                         format_double(stats.mean[0]), format_double(stats.std[0]), oracle_cell,
                         rel_cell});
    }

    if (has_oracle && !successes.empty()) {
      // error metric per repetition, averaged; the forward batch is
      // regenerated from the recorded seed
      NeumaierSum y_sup, z_sum, total;
      for (const RepetitionOutcome* outcome : successes) {
        WBatch w = sample_w_batch(outcome->w_seed, results.path.grid, problem.state_dim,
                                  unit.solver.samples);
        PathBatch batch = simulate_forward(problem, std::move(w));
        const ErrorReport report =
            error_vs_oracle(*outcome->solution, batch, results.path, *problem.linear);
        y_sup.add(report.y_sup_sq);
        z_sum.add(report.z_sum_sq);
        total.add(report.total);
      }
      const double count = static_cast<double>(successes.size());
      errors_csv.add_row({csv_size(unit.j), csv_size(unit.solver.steps),
                          csv_size(unit.solver.samples), format_double(unit.solver.cell_edge),
                          csv_size(successes.size()), format_double(y_sup.value() / count),
                          format_double(z_sum.value() / count), format_double(total.value() / count)});
    }

    if (!successes.empty()) {
      const BackwardSolution& first = *successes.front()->solution;
      const auto slices = slice_steps(config, unit.solver.steps);
      const std::string field_file = "fields_" + unit.label + "_rep0.csv";
      export_fields(first, slices, problem.value_dim, problem.state_dim, out_dir / field_file);
      outputs.push_back(field_file);
      if (u == 0) {
        occupancy = occupancy_summary(first, problem);
        for (const auto& r : first.picard_residuals) residuals.push_back(r);
      }
    }
  }

  stats_csv.write(out_dir / "stats.csv");
  reps_csv.write(out_dir / "reps.csv");
  if (has_oracle) {
    errors_csv.write(out_dir / "errors.csv");
    outputs.push_back("errors.csv");
  }
  if (!failures.empty()) {
    std::ofstream log(out_dir / "failures.log", std::ios::binary);
    for (const auto& f : failures) {
      log << "unit " << f["unit"] << " rep " << f["rep"] << ": " << f["message"].get<std::string>()
          << "\n";
    }
    outputs.push_back("failures.log");
  }

  write_manifest(out_dir, "run", config, units, b_steps, occupancy, residuals, outputs, failures);
  artifacts.manifest = out_dir / "manifest.json";
  for (const auto& name : outputs) artifacts.files.push_back(out_dir / name);
  return artifacts;
}

RunArtifacts compare_bsde(const ExperimentConfig& raw_config,
                          const std::filesystem::path& out_dir) {
  const ExperimentConfig config = with_default_domain(raw_config);
  if (config.problem_name.rfind("finance", 0) != 0)
    throw ConfigError("compare-bsde: requires a finance problem");
  if (config.mode != ExperimentMode::single)
    throw ConfigError("compare-bsde: only single mode is supported");

  const Problem problem = build_problem(config);
  const Problem reduced = without_noise(problem);
  const auto units = plan_units(config);
  const ExperimentUnit& unit = units.front();
  const std::size_t threads = resolve_threads(config.threads);
  std::filesystem::create_directories(out_dir);

  const TimeGrid grid = make_grid(problem.horizon, unit.solver.steps);
  const BPath path =
      sample_b_path(derive_seed(config.seed, SeedStream::b_path, 0), grid, problem.noise_dim);

  const UnitResults with_noise_results = run_unit(problem, unit, path, threads);
  const UnitResults reduced_results = run_unit(reduced, unit, path, threads);

  const auto slices = slice_steps(config, unit.solver.steps);
  const double x0 = problem.x0[0];

  CsvWriter compare_csv("bdsde-compare-v1", {"n", "t", "N", "M", "delta", "I", "reps_bdsde",
                                             "reps_bsde", "bdsde_mean", "bdsde_std", "bsde_mean",
                                             "bsde_std"});
  CsvWriter reps_csv("bdsde-reps-v1", {"j", "N", "M", "delta", "variant", "rep", "y0"});

  json failures = json::array();
  RunArtifacts artifacts;
  auto collect = [&](const UnitResults& results, const char* variant,
                     std::size_t slice) -> std::vector<std::vector<double>> {
    std::vector<std::vector<double>> values;
    for (const auto& outcome : results.outcomes) {
      if (outcome.solution) {
        const double v = outcome.solution->y_fields[slice].evaluate({&x0, 1})[0];
        values.push_back({v});
        if (slice == 0) {
          reps_csv.add_row({csv_size(unit.j), csv_size(unit.solver.steps),
                            csv_size(unit.solver.samples), format_double(unit.solver.cell_edge),
                            variant, csv_size(outcome.index), format_double(v)});
        }
      } else if (slice == 0) {
        failures.push_back(
            {{"unit", unit.j}, {"variant", variant}, {"rep", outcome.index}, {"message", outcome.error}});
        ++artifacts.failed_repetitions;
      }
    }
    return values;
  };

  for (std::size_t slice : slices) {
    const auto with_noise_values = collect(with_noise_results, "bdsde", slice);
    const auto reduced_values = collect(reduced_results, "bsde", slice);
    if (with_noise_values.empty() || reduced_values.empty()) continue;
    const RunStats a = empirical_stats(with_noise_values);
    const RunStats b = empirical_stats(reduced_values);
    compare_csv.add_row({csv_size(slice), format_double(grid.node(slice)),
                         csv_size(unit.solver.steps), csv_size(unit.solver.samples),
                         format_double(unit.solver.cell_edge), csv_size(unit.solver.picard_iterations),
                         csv_size(a.count), csv_size(b.count), format_double(a.mean[0]),
                         format_double(a.std[0]), format_double(b.mean[0]), format_double(b.std[0])});
  }

  compare_csv.write(out_dir / "compare.csv");
  reps_csv.write(out_dir / "reps.csv");
  std::vector<std::string> outputs = {"compare.csv", "reps.csv"};

  json occupancy = empty_object();
  json residuals = json::array();
  for (const auto& outcome : with_noise_results.outcomes) {
    if (outcome.solution) {
      const std::string field_file = "fields_" + unit.label + "_rep0.csv";
      export_fields(*outcome.solution, slices, problem.value_dim, problem.state_dim,
                    out_dir / field_file);
      outputs.push_back(field_file);
      occupancy = occupancy_summary(*outcome.solution, problem);
      for (const auto& r : outcome.solution->picard_residuals) residuals.push_back(r);
      break;
    }
  }
  if (!failures.empty()) {
    std::ofstream log(out_dir / "failures.log", std::ios::binary);
    for (const auto& f : failures) {
      log << "unit " << f["unit"] << " variant " << f["variant"].get<std::string>() << " rep "
          << f["rep"] << ": " << f["message"].get<std::string>() << "\n";
    }
    outputs.push_back("failures.log");
  }

  write_manifest(out_dir, "compare-bsde", config, units, unit.solver.steps, occupancy, residuals,
                 outputs, failures);
  artifacts.manifest = out_dir / "manifest.json";
  for (const auto& name : outputs) artifacts.files.push_back(out_dir / name);
  return artifacts;
}

RunArtifacts replay(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& out_dir) {
  std::ifstream file(manifest_path);
  if (!file) throw ConfigError("replay: cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(file);
  } catch (const json::exception& e) {
    throw ConfigError("replay: manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!manifest.contains("schema") || manifest["schema"] != kManifestSchema)
    throw ConfigError("replay: unsupported manifest schema");

  const ExperimentConfig config = parse_experiment_config(manifest.at("config"));
  const std::string verb = manifest.value("verb", "run");
  if (verb == "run") return run_experiment(config, out_dir);
  if (verb == "compare-bsde") return compare_bsde(config, out_dir);
  throw ConfigError("replay: unknown verb " + verb);
}

}  // namespace bdsde
