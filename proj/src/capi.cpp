#include "fmlp/fmlp.h"

#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include "fmlp/basis.hpp"
#include "fmlp/error.hpp"
#include "fmlp/harness.hpp"
#include "fmlp/ingest.hpp"
#include "fmlp/network.hpp"
#include "fmlp/projection.hpp"

struct fmlp_basis {
  fmlp::BasisSystem basis;
};

struct fmlp_model {
  fmlp::FmlpModel model;
};

struct fmlp_dataset {
  fmlp::CoordDataset data;
};

struct fmlp_config {
  fmlp::ExperimentConfig config;
  std::string kind;
};

struct fmlp_results {
  fmlp::ResultsTable table;
};

namespace {

thread_local std::string last_error;

fmlp_status to_status(fmlp::ErrorCode code) {
  using fmlp::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return FMLP_ERR_INVALID_ARGUMENT;
    case ErrorCode::InvalidDimension: return FMLP_ERR_INVALID_DIMENSION;
    case ErrorCode::InvalidKnots: return FMLP_ERR_INVALID_KNOTS;
    case ErrorCode::Domain: return FMLP_ERR_DOMAIN;
    case ErrorCode::Shape: return FMLP_ERR_SHAPE;
    case ErrorCode::EmptyData: return FMLP_ERR_EMPTY_DATA;
    case ErrorCode::Underdetermined: return FMLP_ERR_UNDERDETERMINED;
    case ErrorCode::Conditioning: return FMLP_ERR_CONDITIONING;
    case ErrorCode::Evaluation: return FMLP_ERR_EVALUATION;
    case ErrorCode::Divergence: return FMLP_ERR_DIVERGENCE;
    case ErrorCode::BasisMismatch: return FMLP_ERR_BASIS_MISMATCH;
    case ErrorCode::Parse: return FMLP_ERR_PARSE;
    case ErrorCode::Ordering: return FMLP_ERR_ORDERING;
    case ErrorCode::Config: return FMLP_ERR_CONFIG;
    case ErrorCode::Io: return FMLP_ERR_IO;
    case ErrorCode::Internal: return FMLP_ERR_INTERNAL;
  }
  return FMLP_ERR_INTERNAL;
}

fmlp_status fail(fmlp_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <class F>
fmlp_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return FMLP_OK;
  } catch (const fmlp::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(FMLP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FMLP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FMLP_ERR_INTERNAL, "unknown exception");
  }
}

void require(const void* ptr, const char* name) {
  if (!ptr) throw fmlp::Error(fmlp::ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

std::optional<fmlp::ExperimentKind> parse_kind(const char* kind) {
  using fmlp::ExperimentKind;
  for (auto k : {ExperimentKind::ApproxSweep, ExperimentKind::ConsistencySweep, ExperimentKind::ScheduleCheck,
                 ExperimentKind::Dataset, ExperimentKind::Train}) {
    if (std::strcmp(kind, fmlp::to_string(k)) == 0) return k;
  }
  return std::nullopt;
}

fmlp_config* wrap(fmlp::ExperimentConfig cfg) {
  auto* handle = new fmlp_config{std::move(cfg), {}};
  handle->kind = fmlp::to_string(handle->config.kind);
  return handle;
}

}  // namespace

extern "C" {

const char* fmlp_version(void) { return fmlp::library_version(); }

const char* fmlp_last_error(void) { return last_error.c_str(); }

const char* fmlp_status_name(fmlp_status status) {
  if (status == FMLP_OK) return "ok";
  if (status < FMLP_OK || status > FMLP_ERR_INTERNAL) return "unknown";
  return fmlp::to_string(static_cast<fmlp::ErrorCode>(static_cast<int>(status) - 1));
}

int fmlp_status_is_validation(fmlp_status status) {
  if (status <= FMLP_OK || status > FMLP_ERR_INTERNAL) return 0;
  return fmlp::is_validation_error(static_cast<fmlp::ErrorCode>(static_cast<int>(status) - 1)) ? 1 : 0;
}

// ---- bases ----

fmlp_status fmlp_basis_fourier(size_t p, fmlp_basis** out) {
  return guarded([&] {
    require(out, "out");
    *out = new fmlp_basis{fmlp::BasisSystem::fourier(p)};
  });
}

fmlp_status fmlp_basis_bspline(int degree, const double* interior_knots, size_t n_knots, fmlp_basis** out) {
  return guarded([&] {
    require(out, "out");
    if (n_knots > 0) require(interior_knots, "interior_knots");
    std::vector<double> knots(interior_knots, interior_knots + n_knots);
    *out = new fmlp_basis{fmlp::BasisSystem::bspline(degree, std::move(knots))};
  });
}

fmlp_status fmlp_basis_load(const char* path, fmlp_basis** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new fmlp_basis{fmlp::load_basis(path)};
  });
}

fmlp_status fmlp_basis_save(const fmlp_basis* basis, const char* path) {
  return guarded([&] {
    require(basis, "basis");
    require(path, "path");
    fmlp::save_basis(path, basis->basis);
  });
}

size_t fmlp_basis_dim(const fmlp_basis* basis) { return basis ? basis->basis.dim() : 0; }

fmlp_status fmlp_basis_eval(const fmlp_basis* basis, size_t k, double x, double* out) {
  return guarded([&] {
    require(basis, "basis");
    require(out, "out");
    *out = basis->basis.eval(k, x);
  });
}

fmlp_status fmlp_basis_gram(const fmlp_basis* basis, double* out) {
  return guarded([&] {
    require(basis, "basis");
    require(out, "out");
    const Eigen::MatrixXd g = fmlp::gram_matrix(basis->basis, fmlp::reference_quadrature());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, g.rows(), g.cols()) = g;
  });
}

void fmlp_basis_free(fmlp_basis* basis) { delete basis; }

// ---- projection ----

fmlp_status fmlp_project_sampled(const fmlp_basis* basis, const double* xs, const double* values, size_t m,
                                 double ridge, double* coords_out) {
  return guarded([&] {
    require(basis, "basis");
    require(coords_out, "coords_out");
    if (m > 0) {
      require(xs, "xs");
      require(values, "values");
    }
    const fmlp::SampledFunction f{"c-api", std::vector<double>(xs, xs + m), std::vector<double>(values, values + m)};
    const fmlp::CoordinateVector c = fmlp::project_sampled(f, basis->basis, ridge);
    std::copy(c.coords.begin(), c.coords.end(), coords_out);
  });
}

fmlp_status fmlp_reconstruct(const fmlp_basis* basis, const double* coords, double x, double* out) {
  return guarded([&] {
    require(basis, "basis");
    require(coords, "coords");
    require(out, "out");
    fmlp::CoordinateVector c;
    c.coords = Eigen::Map<const Eigen::VectorXd>(coords, static_cast<Eigen::Index>(basis->basis.dim()));
    c.basis_ref = basis->basis.id();
    *out = fmlp::reconstruct(c, basis->basis, x);
  });
}

fmlp_status fmlp_project_file(const fmlp_basis* basis, const char* curves_path, double ridge, const char* coords_path,
                              fmlp_results** summary) {
  return guarded([&] {
    require(basis, "basis");
    require(curves_path, "curves_path");
    require(coords_path, "coords_path");
    fmlp::ResultsTable table = fmlp::project_curves(basis->basis, curves_path, ridge, coords_path);
    if (summary) *summary = new fmlp_results{std::move(table)};
  });
}

// ---- models ----

fmlp_status fmlp_model_load(const char* path, fmlp_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new fmlp_model{fmlp::load_model(path)};
  });
}

fmlp_status fmlp_model_save(const fmlp_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    fmlp::save_model(path, model->model);
  });
}

fmlp_status fmlp_model_shape(const fmlp_model* model, size_t* p, size_t* hidden, double* alpha) {
  return guarded([&] {
    require(model, "model");
    if (p) *p = model->model.input_dim();
    if (hidden) *hidden = model->model.hidden_units();
    if (alpha) *alpha = model->model.alpha;
  });
}

fmlp_status fmlp_model_forward(const fmlp_model* model, const double* x, size_t p, double* out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    if (p > 0) require(x, "x");
    *out = fmlp::forward(model->model, std::span<const double>(x, p));
  });
}

void fmlp_model_free(fmlp_model* model) { delete model; }

fmlp_status fmlp_predict_file(const fmlp_model* model, const char* coords_path, const char* out_path,
                              const char* targets_path, fmlp_results** summary) {
  return guarded([&] {
    require(model, "model");
    require(coords_path, "coords_path");
    require(out_path, "out_path");
    fmlp::ResultsTable table =
        fmlp::predict_file(model->model, coords_path, out_path, targets_path ? fmlp::fs::path(targets_path) : fmlp::fs::path());
    if (summary) *summary = new fmlp_results{std::move(table)};
  });
}

// ---- data sets ----

fmlp_status fmlp_dataset_load(const char* coords_path, const char* targets_path, fmlp_dataset** out) {
  return guarded([&] {
    require(coords_path, "coords_path");
    require(targets_path, "targets_path");
    require(out, "out");
    *out = new fmlp_dataset{fmlp::join(fmlp::load_coords(coords_path), fmlp::load_targets(targets_path))};
  });
}

size_t fmlp_dataset_size(const fmlp_dataset* data) { return data ? data->data.size() : 0; }
size_t fmlp_dataset_dim(const fmlp_dataset* data) { return data ? data->data.dim() : 0; }
void fmlp_dataset_free(fmlp_dataset* data) { delete data; }

// ---- configs ----

fmlp_status fmlp_config_load(const char* path, fmlp_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = wrap(fmlp::load_config(path));
  });
}

fmlp_status fmlp_config_parse(const char* json, fmlp_config** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = wrap(fmlp::parse_config(json));
  });
}

fmlp_status fmlp_config_default(const char* kind, fmlp_config** out) {
  return guarded([&] {
    require(kind, "kind");
    require(out, "out");
    const auto k = parse_kind(kind);
    if (!k) throw fmlp::Error(fmlp::ErrorCode::Config, std::string("unknown config kind '") + kind + "'");
    *out = wrap(fmlp::default_config(*k));
  });
}

fmlp_status fmlp_config_set_seed(fmlp_config* config, uint64_t seed) {
  return guarded([&] {
    require(config, "config");
    config->config.seed = seed;
    config->config.distribution.seed = seed;
    config->config.train.seed = seed;
  });
}

fmlp_status fmlp_config_set_workers(fmlp_config* config, unsigned workers) {
  return guarded([&] {
    require(config, "config");
    if (workers == 0) throw fmlp::Error(fmlp::ErrorCode::InvalidArgument, "workers must be at least 1");
    config->config.workers = workers;
  });
}

const char* fmlp_config_kind(const fmlp_config* config) { return config ? config->kind.c_str() : ""; }

fmlp_status fmlp_config_hash(const fmlp_config* config, char* buffer, size_t size) {
  return guarded([&] {
    require(config, "config");
    require(buffer, "buffer");
    const std::string hash = config->config.hash();
    if (size <= hash.size()) throw fmlp::Error(fmlp::ErrorCode::InvalidArgument, "hash buffer needs 17 bytes");
    std::memcpy(buffer, hash.c_str(), hash.size() + 1);
  });
}

void fmlp_config_free(fmlp_config* config) { delete config; }

// ---- runs ----

fmlp_status fmlp_run_experiment(const fmlp_config* config, fmlp_log_fn log, void* user, fmlp_results** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "out");
    fmlp::RunOptions options;
    if (log) options.log = [log, user](const std::string& line) { log(line.c_str(), user); };
    *out = new fmlp_results{fmlp::run_experiment(config->config, options)};
  });
}

fmlp_status fmlp_generate_dataset(const fmlp_config* config, const char* out_dir, fmlp_results** out) {
  return guarded([&] {
    require(config, "config");
    require(out_dir, "out_dir");
    fmlp::ResultsTable table = fmlp::generate_dataset(config->config, out_dir);
    if (out) *out = new fmlp_results{std::move(table)};
  });
}

fmlp_status fmlp_train(const fmlp_config* config, const fmlp_dataset* data, fmlp_model** model, fmlp_results** out) {
  return guarded([&] {
    require(data, "data");
    require(model, "model");
    const fmlp::ExperimentConfig cfg =
        config ? config->config : fmlp::default_config(fmlp::ExperimentKind::Train);
    fmlp::ResultsTable table;
    fmlp::TrainResult fit = fmlp::train_with_config(cfg, data->data, &table);
    *model = new fmlp_model{std::move(fit.model)};
    if (out) *out = new fmlp_results{std::move(table)};
  });
}

// ---- results ----

size_t fmlp_results_size(const fmlp_results* results) { return results ? results->table.rows.size() : 0; }

fmlp_status fmlp_results_row(const fmlp_results* results, size_t index, fmlp_result_row* out) {
  return guarded([&] {
    require(results, "results");
    require(out, "out");
    if (index >= results->table.rows.size()) {
      throw fmlp::Error(fmlp::ErrorCode::InvalidArgument, "row index " + std::to_string(index) + " out of range");
    }
    const fmlp::ResultRow& row = results->table.rows[index];
    auto count = [](const std::optional<std::uint64_t>& v) { return v ? static_cast<int64_t>(*v) : int64_t{-1}; };
    *out = {row.run_id.c_str(), row.config_hash.c_str(), count(row.p), count(row.L), count(row.n),
            row.metric.c_str(), row.value, row.se, row.wall_ms};
  });
}

size_t fmlp_results_failures(const fmlp_results* results) {
  return results ? fmlp::count_failures(results->table) : 0;
}

fmlp_status fmlp_results_save(const fmlp_results* results, const char* path) {
  return guarded([&] {
    require(results, "results");
    require(path, "path");
    fmlp::save_results(path, results->table);
  });
}

fmlp_status fmlp_results_load(const char* path, fmlp_results** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new fmlp_results{fmlp::load_results(path)};
  });
}

fmlp_status fmlp_write_run_meta(const fmlp_config* config, const fmlp_results* results, const char* command,
                                double wall_ms, const char* outputs, const char* path) {
  return guarded([&] {
    require(results, "results");
    require(command, "command");
    require(path, "path");
    fmlp::RunMeta meta;
    meta.command = command;
    meta.wall_ms = wall_ms;
    meta.failures = fmlp::count_failures(results->table);
    if (outputs) {
      std::stringstream list(outputs);
      for (std::string item; std::getline(list, item, ',');) {
        if (!item.empty()) meta.outputs.push_back(item);
      }
    }
    fmlp::write_text(path, fmlp::run_meta_json(config ? &config->config : nullptr, results->table, meta));
  });
}

void fmlp_results_free(fmlp_results* results) { delete results; }

}  // extern "C"
