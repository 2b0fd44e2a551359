// Command line front end. Talks to the library only through fmlp.h.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fmlp/fmlp.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  bool quiet = false;
};

struct Failure {
  int exit_code;
};

void check(fmlp_status status, const char* what) {
  if (status == FMLP_OK) return;
  std::fprintf(stderr, "error: %s: %s (%s)\n", what, fmlp_last_error(), fmlp_status_name(status));
  throw Failure{fmlp_status_is_validation(status) ? kExitValidation : kExitRuntime};
}

[[noreturn]] void usage_error(const std::string& message) {
  std::fprintf(stderr, "error: %s\n", message.c_str());
  throw Failure{kExitValidation};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Config = Handle<fmlp_config, fmlp_config_free>;
using Results = Handle<fmlp_results, fmlp_results_free>;
using Basis = Handle<fmlp_basis, fmlp_basis_free>;
using Model = Handle<fmlp_model, fmlp_model_free>;
using Dataset = Handle<fmlp_dataset, fmlp_dataset_free>;

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "experiment config (JSON)");
  cmd->add_option("--out", opts.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", opts.seed, "master seed (overrides the config)");
  cmd->add_option("--workers", opts.workers, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--quiet", opts.quiet, "no progress lines");
}

fs::path prepare_out(const CommonOptions& opts) {
  std::error_code ec;
  fs::create_directories(opts.out, ec);
  if (ec || !fs::is_directory(opts.out)) usage_error("cannot create output directory '" + opts.out + "'");
  return fs::path(opts.out);
}

/// Loads --config (or the defaults of `kind`), checks its kind and applies
/// --seed and --workers.
void load_config(const CommonOptions& opts, const char* kind, Config& cfg) {
  if (opts.config.empty()) {
    check(fmlp_config_default(kind, cfg.out()), "config");
  } else {
    check(fmlp_config_load(opts.config.c_str(), cfg.out()), "config");
  }
  if (std::string(fmlp_config_kind(cfg.get())) != kind) {
    usage_error("config '" + opts.config + "' has kind '" + fmlp_config_kind(cfg.get()) + "', expected '" + kind + "'");
  }
  if (opts.seed) check(fmlp_config_set_seed(cfg.get(), *opts.seed), "--seed");
  if (opts.workers) check(fmlp_config_set_workers(cfg.get(), *opts.workers), "--workers");
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void finish(const fs::path& out, const Config* cfg, const Results& results, const char* command, double wall_ms,
            std::vector<std::string> outputs, const CommonOptions& opts) {
  check(fmlp_results_save(results.get(), (out / "results.csv").string().c_str()), "results.csv");
  outputs.push_back("results.csv");
  std::string list;
  for (const auto& name : outputs) list += (list.empty() ? "" : ",") + name;
  check(fmlp_write_run_meta(cfg ? cfg->get() : nullptr, results.get(), command, wall_ms, list.c_str(),
                            (out / "run-meta.json").string().c_str()),
        "run-meta.json");
  if (opts.quiet) return;
  const size_t failures = fmlp_results_failures(results.get());
  std::fprintf(stderr, "%s: %zu rows, %zu failed cells, %.0f ms -> %s\n", command, fmlp_results_size(results.get()),
               failures, wall_ms, out.string().c_str());
}

void print_metric_rows(const Results& results) {
  const size_t n = fmlp_results_size(results.get());
  for (size_t i = 0; i < n; ++i) {
    fmlp_result_row row;
    check(fmlp_results_row(results.get(), i, &row), "results");
    std::printf("%s p=%lld L=%lld n=%lld %s=%.6g", row.run_id, static_cast<long long>(row.p),
                static_cast<long long>(row.hidden), static_cast<long long>(row.n), row.metric, row.value);
    if (row.se == row.se) std::printf(" (se %.2g)", row.se);
    std::printf("\n");
  }
}

void log_line(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

int run_experiment(const CommonOptions& opts, const char* kind, const char* command) {
  Config cfg;
  load_config(opts, kind, cfg);
  const fs::path out = prepare_out(opts);
  const auto start = Clock::now();
  Results results;
  check(fmlp_run_experiment(cfg.get(), opts.quiet ? nullptr : log_line, nullptr, results.out()), command);
  finish(out, &cfg, results, command, elapsed_ms(start), {}, opts);
  if (!opts.quiet) print_metric_rows(results);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projection-based functional MLPs: data generation, projection, training and experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fmlp_version()));

  CommonOptions opts;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic functional data set (kind \"dataset\")");
  add_common(gen, opts);

  std::string curves_path, basis_path;
  double ridge = 0.0;
  auto* project = app.add_subcommand("project", "project sampled curves onto a basis by least squares");
  add_common(project, opts);
  project->add_option("--curves", curves_path, "curves CSV (id,x,value)")->required()->check(CLI::ExistingFile);
  project->add_option("--basis", basis_path, "basis JSON")->required()->check(CLI::ExistingFile);
  project->add_option("--ridge", ridge, "ridge penalty")->check(CLI::NonNegativeNumber);

  std::string coords_path, targets_path, model_path;
  auto* train = app.add_subcommand("train", "train a model on coordinates and targets (kind \"train\")");
  add_common(train, opts);
  train->add_option("--coords", coords_path, "coordinates CSV (id,c1,...)")->required()->check(CLI::ExistingFile);
  train->add_option("--targets", targets_path, "targets CSV (id,y)")->required()->check(CLI::ExistingFile);

  auto* predict = app.add_subcommand("predict", "evaluate a trained model on coordinates");
  add_common(predict, opts);
  predict->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--coords", coords_path, "coordinates CSV")->required()->check(CLI::ExistingFile);
  predict->add_option("--targets", targets_path, "optional targets CSV for an RMSE")->check(CLI::ExistingFile);

  auto* approx = app.add_subcommand("exp-approx", "universal approximation sweep over (p, L)");
  add_common(approx, opts);
  auto* consistency = app.add_subcommand("exp-consistency", "consistency sweep over n under the schedule");
  add_common(consistency, opts);
  auto* sched = app.add_subcommand("check-schedule", "schedule diagnostics over a grid of n");
  add_common(sched, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*approx) return run_experiment(opts, "approx", "exp-approx");
    if (*consistency) return run_experiment(opts, "consistency", "exp-consistency");
    if (*sched) return run_experiment(opts, "schedule", "check-schedule");

    if (*gen) {
      Config cfg;
      load_config(opts, "dataset", cfg);
      const fs::path out = prepare_out(opts);
      const auto start = Clock::now();
      Results results;
      check(fmlp_generate_dataset(cfg.get(), out.string().c_str(), results.out()), "gen-data");
      std::vector<std::string> written{"coords.csv", "targets.csv", "coefficients.csv", "basis.json"};
      if (fs::exists(out / "curves.csv")) written.push_back("curves.csv");
      finish(out, &cfg, results, "gen-data", elapsed_ms(start), written, opts);
      return kExitOk;
    }

    if (*project) {
      if (!opts.config.empty() || opts.seed) usage_error("project takes neither --config nor --seed");
      const fs::path out = prepare_out(opts);
      const auto start = Clock::now();
      Basis basis;
      check(fmlp_basis_load(basis_path.c_str(), basis.out()), "basis");
      Results results;
      check(fmlp_project_file(basis.get(), curves_path.c_str(), ridge, (out / "coords.csv").string().c_str(),
                              results.out()),
            "project");
      finish(out, nullptr, results, "project", elapsed_ms(start), {"coords.csv"}, opts);
      return kExitOk;
    }

    if (*train) {
      Config cfg;
      load_config(opts, "train", cfg);
      const fs::path out = prepare_out(opts);
      const auto start = Clock::now();
      Dataset data;
      check(fmlp_dataset_load(coords_path.c_str(), targets_path.c_str(), data.out()), "data");
      Model model;
      Results results;
      check(fmlp_train(cfg.get(), data.get(), model.out(), results.out()), "train");
      check(fmlp_model_save(model.get(), (out / "model.json").string().c_str()), "model.json");
      finish(out, &cfg, results, "train", elapsed_ms(start), {"model.json"}, opts);
      if (!opts.quiet) print_metric_rows(results);
      return kExitOk;
    }

    if (*predict) {
      if (!opts.config.empty() || opts.seed) usage_error("predict takes neither --config nor --seed");
      const fs::path out = prepare_out(opts);
      const auto start = Clock::now();
      Model model;
      check(fmlp_model_load(model_path.c_str(), model.out()), "model");
      Results results;
      check(fmlp_predict_file(model.get(), coords_path.c_str(), (out / "predictions.csv").string().c_str(),
                              targets_path.empty() ? nullptr : targets_path.c_str(), results.out()),
            "predict");
      finish(out, nullptr, results, "predict", elapsed_ms(start), {"predictions.csv"}, opts);
      if (!opts.quiet) print_metric_rows(results);
      return kExitOk;
    }
  } catch (const Failure& f) {
    return f.exit_code;
  }
  return kExitValidation;
}
