#include "fmlp/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "fmlp/error.hpp"
#include "format.hpp"

namespace fmlp {

using nlohmann::json;

namespace {

// ---- CSV plumbing ----

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  /// Next non-empty line with the CR stripped; false at end of input.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!trim(line).empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& message, ErrorCode code = ErrorCode::Parse) const {
    throw Error(code, source_ + ":" + std::to_string(line_no_) + ": " + message);
  }

  void expect_header(const std::string& expected) {
    std::string line;
    if (!next(line)) fail("missing header '" + expected + "'");
    if (trim(line) != expected) fail("expected header '" + expected + "', got '" + line + "'");
  }

  double real(std::string_view field, const char* what) const {
    const auto value = parse_double(field);
    if (!value) fail(std::string("malformed ") + what + " '" + std::string(field) + "'");
    return *value;
  }

  std::string id(std::string_view field) const {
    const std::string_view t = trim(field);
    if (t.empty()) fail("empty id");
    return std::string(t);
  }

  std::vector<std::string_view> fields(const std::string& line, std::size_t expected) const {
    auto f = split(line);
    if (f.size() != expected) {
      fail("expected " + std::to_string(expected) + " fields, got " + std::to_string(f.size()));
    }
    return f;
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_no_ = 0;
};

void check_id(const std::string& id) {
  if (id.empty() || id.find_first_of(",\r\n") != std::string::npos || trim(id) != id) {
    throw Error(ErrorCode::InvalidArgument, "id '" + id + "' cannot be written to CSV");
  }
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  return in;
}

template <class Writer>
void save_with(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  writer(out);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

std::string format_optional(const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string(); }

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const fs::path& path, const std::string& text) {
  save_with(path, [&](std::ostream& out) { out << text; });
}

// ---- curves ----

std::vector<SampledFunction> read_curves(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header("id,x,value");
  std::vector<SampledFunction> curves;
  std::set<std::string> closed;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.fields(line, 3);
    std::string id = reader.id(f[0]);
    const double x = reader.real(f[1], "x");
    const double value = reader.real(f[2], "value");
    if (curves.empty() || curves.back().id != id) {
      if (!curves.empty()) closed.insert(curves.back().id);
      if (closed.contains(id)) reader.fail("rows of id '" + id + "' are not contiguous", ErrorCode::Ordering);
      curves.push_back({std::move(id), {}, {}});
    }
    SampledFunction& curve = curves.back();
    if (!curve.xs.empty() && !(x > curve.xs.back())) {
      reader.fail("x not strictly increasing within id '" + curve.id + "'", ErrorCode::Ordering);
    }
    curve.xs.push_back(x);
    curve.values.push_back(value);
  }
  for (const auto& curve : curves) curve.validate();
  return curves;
}

std::vector<SampledFunction> load_curves(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_curves(in, path.string());
}

void write_curves(std::ostream& out, const std::vector<SampledFunction>& curves) {
  out << "id,x,value\n";
  for (const auto& curve : curves) {
    check_id(curve.id);
    curve.validate();
    for (std::size_t j = 0; j < curve.xs.size(); ++j) {
      out << curve.id << ',' << format_double(curve.xs[j]) << ',' << format_double(curve.values[j]) << '\n';
    }
  }
}

void save_curves(const fs::path& path, const std::vector<SampledFunction>& curves) {
  save_with(path, [&](std::ostream& out) { write_curves(out, curves); });
}

// ---- coordinates ----

CoordTable read_coords(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  std::string line;
  if (!reader.next(line)) reader.fail("missing header 'id,c1,...,cp'");
  const auto header = split(line);
  if (header.size() < 2 || trim(header[0]) != "id") reader.fail("expected header 'id,c1,...,cp'");
  for (std::size_t k = 1; k < header.size(); ++k) {
    if (trim(header[k]) != "c" + std::to_string(k)) reader.fail("expected column 'c" + std::to_string(k) + "'");
  }
  const std::size_t p = header.size() - 1;

  CoordTable table;
  std::vector<double> values;
  while (reader.next(line)) {
    const auto f = reader.fields(line, p + 1);
    table.ids.push_back(reader.id(f[0]));
    for (std::size_t k = 1; k <= p; ++k) values.push_back(reader.real(f[k], "coordinate"));
  }
  table.coords = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), static_cast<Eigen::Index>(table.ids.size()), static_cast<Eigen::Index>(p));
  return table;
}

CoordTable load_coords(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_coords(in, path.string());
}

void write_coords(std::ostream& out, const CoordTable& table) {
  if (static_cast<std::size_t>(table.coords.rows()) != table.ids.size()) {
    throw Error(ErrorCode::Shape, "coordinate rows do not match id count");
  }
  if (table.coords.cols() == 0) throw Error(ErrorCode::InvalidDimension, "coordinates need p >= 1");
  out << "id";
  for (Eigen::Index k = 1; k <= table.coords.cols(); ++k) out << ",c" << k;
  out << '\n';
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    check_id(table.ids[i]);
    out << table.ids[i];
    for (Eigen::Index k = 0; k < table.coords.cols(); ++k) {
      out << ',' << format_double(table.coords(static_cast<Eigen::Index>(i), k));
    }
    out << '\n';
  }
}

void save_coords(const fs::path& path, const CoordTable& table) {
  save_with(path, [&](std::ostream& out) { write_coords(out, table); });
}

// ---- targets ----

TargetTable read_targets(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header("id,y");
  TargetTable table;
  std::vector<double> ys;
  std::string line;
  while (reader.next(line)) {
    const auto f = reader.fields(line, 2);
    table.ids.push_back(reader.id(f[0]));
    ys.push_back(reader.real(f[1], "y"));
  }
  table.y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  return table;
}

TargetTable load_targets(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_targets(in, path.string());
}

void write_targets(std::ostream& out, const TargetTable& table) {
  if (static_cast<std::size_t>(table.y.size()) != table.ids.size()) {
    throw Error(ErrorCode::Shape, "target count does not match id count");
  }
  out << "id,y\n";
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    check_id(table.ids[i]);
    out << table.ids[i] << ',' << format_double(table.y[static_cast<Eigen::Index>(i)]) << '\n';
  }
}

void save_targets(const fs::path& path, const TargetTable& table) {
  save_with(path, [&](std::ostream& out) { write_targets(out, table); });
}

CoordDataset join(const CoordTable& coords, const TargetTable& targets) {
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < targets.ids.size(); ++i) {
    if (!index.emplace(targets.ids[i], static_cast<Eigen::Index>(i)).second) {
      throw Error(ErrorCode::Shape, "duplicate target id '" + targets.ids[i] + "'");
    }
  }
  CoordDataset data;
  data.inputs = coords.coords;
  data.targets.resize(coords.coords.rows());
  data.ids = coords.ids;
  for (std::size_t i = 0; i < coords.ids.size(); ++i) {
    const auto it = index.find(coords.ids[i]);
    if (it == index.end()) throw Error(ErrorCode::Shape, "no target for id '" + coords.ids[i] + "'");
    data.targets[static_cast<Eigen::Index>(i)] = targets.y[it->second];
  }
  data.validate();
  return data;
}

// ---- results ----

ResultsTable read_results(std::istream& in, const std::string& source) {
  CsvReader reader(in, source);
  reader.expect_header(kResultsHeader);
  ResultsTable table;
  std::string line;
  auto optional_count = [&](std::string_view field, const char* what) -> std::optional<std::uint64_t> {
    if (trim(field).empty()) return std::nullopt;
    const std::string_view t = trim(field);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || end != t.data() + t.size()) {
      reader.fail(std::string("malformed ") + what + " '" + std::string(field) + "'");
    }
    return v;
  };
  while (reader.next(line)) {
    const auto f = reader.fields(line, 9);
    ResultRow row;
    row.run_id = reader.id(f[0]);
    row.config_hash = std::string(trim(f[1]));
    row.p = optional_count(f[2], "param_p");
    row.L = optional_count(f[3], "param_L");
    row.n = optional_count(f[4], "param_n");
    row.metric = std::string(trim(f[5]));
    if (row.metric.empty()) reader.fail("empty metric");
    row.value = reader.real(f[6], "value");
    row.se = reader.real(f[7], "se");
    row.wall_ms = reader.real(f[8], "wall_ms");
    table.rows.push_back(std::move(row));
  }
  return table;
}

ResultsTable load_results(const fs::path& path) {
  std::ifstream in = open_in(path);
  return read_results(in, path.string());
}

void write_results(std::ostream& out, const ResultsTable& table) {
  out << kResultsHeader << '\n';
  for (const auto& row : table.rows) {
    check_id(row.run_id);
    check_id(row.metric);
    out << row.run_id << ',' << row.config_hash << ',' << format_optional(row.p) << ',' << format_optional(row.L)
        << ',' << format_optional(row.n) << ',' << row.metric << ',' << format_double(row.value) << ','
        << format_double(row.se) << ',' << format_double(row.wall_ms) << '\n';
  }
}

void save_results(const fs::path& path, const ResultsTable& table) {
  save_with(path, [&](std::ostream& out) { write_results(out, table); });
}

// ---- model and basis JSON ----

std::string model_to_json(const FmlpModel& model) {
  model.validate();
  json beta = json::array();
  for (Eigen::Index l = 0; l < model.beta.rows(); ++l) {
    beta.push_back(std::vector<double>(model.beta.row(l).begin(), model.beta.row(l).end()));
  }
  const json doc = {
      {"p", model.input_dim()},
      {"L", model.hidden_units()},
      {"alpha", model.alpha},
      {"activation", "sigmoid"},
      {"a", std::vector<double>(model.a.begin(), model.a.end())},
      {"beta0", std::vector<double>(model.beta0.begin(), model.beta0.end())},
      {"beta", beta},
  };
  return doc.dump(2) + "\n";
}

namespace {

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

}  // namespace

FmlpModel model_from_json(const std::string& text) {
  const json doc = parse_json(text, "model");
  try {
    for (const auto& [key, _] : doc.items()) {
      static const std::set<std::string> known{"p", "L", "alpha", "activation", "a", "beta0", "beta"};
      if (!known.contains(key)) throw Error(ErrorCode::Parse, "model: unknown key '" + key + "'");
    }
    if (doc.at("activation").get<std::string>() != "sigmoid") {
      throw Error(ErrorCode::Parse, "model: unsupported activation '" + doc.at("activation").get<std::string>() + "'");
    }
    const auto p = doc.at("p").get<std::size_t>();
    const auto L = doc.at("L").get<std::size_t>();
    FmlpModel model = FmlpModel::zeros(p, L, doc.at("alpha").get<double>());
    const auto a = doc.at("a").get<std::vector<double>>();
    const auto beta0 = doc.at("beta0").get<std::vector<double>>();
    const auto beta = doc.at("beta").get<std::vector<std::vector<double>>>();
    if (a.size() != L || beta0.size() != L || beta.size() != L) {
      throw Error(ErrorCode::Shape, "model: a, beta0 and beta need L entries");
    }
    for (std::size_t l = 0; l < L; ++l) {
      if (beta[l].size() != p) throw Error(ErrorCode::Shape, "model: every beta row needs p entries");
      const auto li = static_cast<Eigen::Index>(l);
      model.a[li] = a[l];
      model.beta0[li] = beta0[l];
      for (std::size_t k = 0; k < p; ++k) model.beta(li, static_cast<Eigen::Index>(k)) = beta[l][k];
    }
    model.validate();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model: ") + e.what());
  }
}

void save_model(const fs::path& path, const FmlpModel& model) { write_text(path, model_to_json(model)); }
FmlpModel load_model(const fs::path& path) { return model_from_json(read_text(path)); }

std::string basis_to_json(const BasisSystem& basis) {
  json doc;
  if (basis.family() == BasisFamily::Fourier) {
    doc = {{"family", "fourier"}, {"p", basis.dim()}};
  } else {
    doc = {{"family", "bspline"}, {"p", basis.dim()}, {"degree", basis.degree()},
           {"interior_knots", basis.interior_knots()}};
  }
  return doc.dump(2) + "\n";
}

BasisSystem basis_from_json(const std::string& text) {
  const json doc = parse_json(text, "basis");
  try {
    for (const auto& [key, _] : doc.items()) {
      static const std::set<std::string> known{"family", "p", "degree", "interior_knots"};
      if (!known.contains(key)) throw Error(ErrorCode::Parse, "basis: unknown key '" + key + "'");
    }
    const auto family = doc.at("family").get<std::string>();
    if (family == "fourier") return BasisSystem::fourier(doc.at("p").get<std::size_t>());
    if (family != "bspline") throw Error(ErrorCode::Parse, "basis: unknown family '" + family + "'");
    BasisSystem basis = BasisSystem::bspline(doc.at("degree").get<int>(),
                                             doc.value("interior_knots", std::vector<double>{}));
    if (doc.contains("p") && doc.at("p").get<std::size_t>() != basis.dim()) {
      throw Error(ErrorCode::InvalidDimension, "basis: p disagrees with degree + 1 + #interior_knots");
    }
    return basis;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("basis: ") + e.what());
  }
}

void save_basis(const fs::path& path, const BasisSystem& basis) { write_text(path, basis_to_json(basis)); }
BasisSystem load_basis(const fs::path& path) { return basis_from_json(read_text(path)); }

// ---- experiment configs ----

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::ApproxSweep: return "approx";
    case ExperimentKind::ConsistencySweep: return "consistency";
    case ExperimentKind::ScheduleCheck: return "schedule";
    case ExperimentKind::Dataset: return "dataset";
    case ExperimentKind::Train: return "train";
  }
  return "unknown";
}

BasisSystem BasisSpec::make(std::size_t dim) const {
  if (family == BasisFamily::BSpline) return BasisSystem::bspline(degree, interior_knots);
  return BasisSystem::fourier(dim);
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ExperimentKind::ApproxSweep:
      cfg.distribution.target = TargetFunctional::squared_norm();
      cfg.distribution.noise_sd = 0.0;
      cfg.distribution.clip_radius = cfg.radius;
      cfg.p_values = {2, 4, 8};
      cfg.L_values = {2, 4, 16};
      cfg.pairing = CellPairing::Diagonal;
      break;
    case ExperimentKind::ConsistencySweep:
      cfg.distribution.target = TargetFunctional::sine(Eigen::Vector2d(1.0, 1.0), 0.75);
      cfg.p_values = {5};
      cfg.n_values = {100, 400, 1600, 6400};
      cfg.n_test = 100000;
      break;
    case ExperimentKind::ScheduleCheck:
      for (std::uint64_t n = 1; n <= 1000000000ULL; n *= 10) cfg.n_values.push_back(n);
      break;
    case ExperimentKind::Dataset:
      cfg.distribution.target = TargetFunctional::linear(Eigen::Vector3d(1.0, 0.5, -0.5));
      cfg.p_values = {5};
      cfg.n_values = {200};
      break;
    case ExperimentKind::Train:
      cfg.alpha = 0.0;
      break;
  }
  return cfg;
}

namespace {

std::optional<ExperimentKind> kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::ApproxSweep, ExperimentKind::ConsistencySweep, ExperimentKind::ScheduleCheck,
                 ExperimentKind::Dataset, ExperimentKind::Train}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Walks one JSON object, converting known keys and recording every problem.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) error("", "expected an object");
  }

  /// Reports keys never asked for. Call after all reads.
  void finish() {
    if (!obj_.is_object()) return;
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.contains(key)) errors_.push_back("unknown key '" + qualified(key) + "'");
    }
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    if (!obj_.is_object()) return nullptr;
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <class T, class Check>
  void read(const std::string& key, T& out, Check&& check, const char* expectation) {
    const json* v = get(key);
    if (!v) return;
    try {
      T value = v->get<T>();
      if (!check(value)) {
        error(key, expectation);
        return;
      }
      out = std::move(value);
    } catch (const json::exception&) {
      error(key, expectation);
    }
  }

  void count(const std::string& key, std::size_t& out, std::size_t min = 1) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number_integer() || v->get<std::int64_t>() < static_cast<std::int64_t>(min)) {
      error(key, ("expected an integer >= " + std::to_string(min)).c_str());
      return;
    }
    out = v->get<std::size_t>();
  }

  void count(const std::string& key, unsigned& out, std::size_t min = 1) {
    std::size_t wide = out;
    count(key, wide, min);
    out = static_cast<unsigned>(std::min<std::size_t>(wide, 0xffffffffu));
  }

  void seed(const std::string& key, std::uint64_t& out) {
    const json* v = get(key);
    if (!v) return;
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
      error(key, "expected a nonnegative integer");
      return;
    }
    out = v->get<std::uint64_t>();
  }

  void real(const std::string& key, double& out, double min, bool strict) {
    read(
        key, out, [&](double v) { return std::isfinite(v) && (strict ? v > min : v >= min); },
        strict ? "expected a positive real" : "expected a nonnegative real");
  }

  template <class T>
  void grid(const std::string& key, std::vector<T>& out) {
    const json* v = get(key);
    if (!v) return;
    std::vector<T> values;
    bool ok = v->is_array();
    if (ok) {
      for (const auto& e : *v) {
        if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
          ok = false;
          break;
        }
        values.push_back(e.get<T>());
      }
    }
    if (!ok) {
      error(key, "expected an array of positive integers");
      return;
    }
    if (!std::is_sorted(values.begin(), values.end()) ||
        std::adjacent_find(values.begin(), values.end()) != values.end()) {
      error(key, "grid must be strictly ascending");
      return;
    }
    out = std::move(values);
  }

  template <class E>
  void choice(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
    const json* v = get(key);
    if (!v) return;
    std::string names;
    for (const auto& [name, value] : options) {
      if (v->is_string() && v->get<std::string>() == name) {
        out = value;
        return;
      }
      names += names.empty() ? "" : "|";
      names += name;
    }
    error(key, ("expected one of " + names).c_str());
  }

  void error(const std::string& key, const char* message) {
    errors_.push_back(qualified(key) + (key.empty() ? "" : ": ") + message);
  }

  [[nodiscard]] std::string qualified(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void read_target(const json& node, TargetFunctional& target, std::vector<std::string>& errors) {
  ObjectReader r(node, "distribution.target", errors);
  r.choice("kind", target.kind,
           {{"linear", TargetKind::Linear}, {"sqnorm", TargetKind::SquaredNorm}, {"sine", TargetKind::Sine}});
  std::vector<double> w(target.w.begin(), target.w.end());
  r.read(
      "w", w, [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); },
      "expected an array of finite reals");
  target.w = to_vector(w);
  r.read("scale", target.scale, [](double v) { return std::isfinite(v); }, "expected a finite real");
  if (target.kind == TargetKind::SquaredNorm) {
    target.w = Eigen::VectorXd();
    target.scale = 1.0;
  }
  r.finish();
}

bool has_key(const json& node, const char* key) { return node.is_object() && node.contains(key); }

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::Config, "config must be a JSON object");
  const auto kind_it = doc.find("kind");
  if (kind_it == doc.end() || !kind_it->is_string()) {
    throw Error(ErrorCode::Config, "kind: required, one of approx|consistency|schedule|dataset|train");
  }
  const auto kind = kind_from_string(kind_it->get<std::string>());
  if (!kind) {
    throw Error(ErrorCode::Config,
                "kind: unknown '" + kind_it->get<std::string>() + "', expected approx|consistency|schedule|dataset|train");
  }

  ExperimentConfig cfg = default_config(*kind);
  std::vector<std::string> errors;
  ObjectReader top(doc, "", errors);
  top.get("kind");
  top.seed("seed", cfg.seed);
  cfg.distribution.seed = cfg.seed;
  cfg.train.seed = cfg.seed;

  if (const json* node = top.get("distribution")) {
    ObjectReader r(*node, "distribution", errors);
    FunctionalDistribution& d = cfg.distribution;
    r.count("K_max", d.k_max);
    r.read("s", d.decay, [](double v) { return std::isfinite(v) && v > 0.5; }, "expected a real > 0.5");
    r.real("amplitude", d.amplitude, 0.0, false);
    r.real("noise_sd", d.noise_sd, 0.0, false);
    r.seed("seed", d.seed);
    r.real("clip_radius", d.clip_radius, 0.0, false);
    if (const json* t = r.get("target")) read_target(*t, d.target, errors);
    r.finish();
  }

  if (const json* node = top.get("basis")) {
    ObjectReader r(*node, "basis", errors);
    BasisSpec& b = cfg.basis;
    r.choice("family", b.family, {{"fourier", BasisFamily::Fourier}, {"bspline", BasisFamily::BSpline}});
    r.count("p", b.p);
    r.read("degree", b.degree, [](int v) { return v >= 1; }, "expected an integer >= 1");
    r.read(
        "interior_knots", b.interior_knots,
        [](const std::vector<double>& v) { return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }); },
        "expected an array of reals");
    r.finish();
  }

  if (const json* node = top.get("projection")) {
    ObjectReader r(*node, "projection", errors);
    ProjectionSpec& p = cfg.projection;
    r.choice("mode", p.kind, {{"exact", ProjectionMode::Kind::Exact}, {"sampled", ProjectionMode::Kind::Sampled}});
    r.count("samples", p.samples);
    r.choice("grid", p.grid, {{"uniform", GridKind::Uniform}, {"jittered", GridKind::Jittered}});
    r.real("ridge", p.ridge, 0.0, false);
    r.finish();
  }

  top.grid("p_values", cfg.p_values);
  top.grid("L_values", cfg.L_values);
  top.grid("n_values", cfg.n_values);
  top.choice("pairing", cfg.pairing, {{"product", CellPairing::Product}, {"diagonal", CellPairing::Diagonal}});

  if (const json* node = top.get("train")) {
    ObjectReader r(*node, "train", errors);
    TrainConfig& t = cfg.train;
    r.choice("method", t.method,
             {{"lm", TrainMethod::LevenbergMarquardt}, {"gd", TrainMethod::GradientDescent}});
    r.count("restarts", t.restarts);
    r.count("max_iters", t.max_iters, 0);
    r.real("step", t.step, 0.0, true);
    r.real("damping", t.damping, 0.0, true);
    r.seed("seed", t.seed);
    r.real("tolerance", t.tolerance, 0.0, false);
    r.count("patience", t.patience);
    r.finish();
  }

  top.real("alpha", cfg.alpha, 0.0, *kind != ExperimentKind::Train);
  top.real("radius", cfg.radius, 0.0, false);
  top.count("n_train", cfg.n_train);
  top.count("n_test", cfg.n_test, 2);
  top.count("replicates", cfg.replicates);
  top.read("delta", cfg.delta, [](double v) { return v > 0.0 && v < 1.0; }, "expected a real in (0, 1)");
  top.read("record_timing", cfg.record_timing, [](bool) { return true; }, "expected true or false");
  top.read("output_dir", cfg.output_dir, [](const std::string&) { return true; }, "expected a string");
  top.count("workers", cfg.workers);
  top.finish();

  // Cross-field checks.
  if (cfg.basis.family == BasisFamily::BSpline) {
    try {
      const std::size_t dim = BasisSystem::bspline(cfg.basis.degree, cfg.basis.interior_knots).dim();
      if (cfg.basis.p != 0 && cfg.basis.p != dim) errors.push_back("basis.p: disagrees with degree + 1 + #interior_knots");
      if (has_key(doc, "p_values") && cfg.p_values != std::vector<std::size_t>{dim}) {
        errors.push_back("p_values: a spline basis fixes p = " + std::to_string(dim));
      }
      cfg.basis.p = dim;
      cfg.p_values = {dim};
    } catch (const Error& e) {
      errors.push_back(std::string("basis: ") + e.what());
    }
  } else if (cfg.basis.p != 0) {
    if (has_key(doc, "p_values") && cfg.p_values != std::vector<std::size_t>{cfg.basis.p}) {
      errors.push_back("basis.p: conflicts with p_values");
    }
    cfg.p_values = {cfg.basis.p};
  }
  if (cfg.pairing == CellPairing::Diagonal && cfg.p_values.size() != cfg.L_values.size()) {
    errors.push_back("pairing: diagonal pairing needs p_values and L_values of equal length");
  }
  if (cfg.kind == ExperimentKind::ApproxSweep && (cfg.p_values.empty() || cfg.L_values.empty())) {
    errors.push_back("p_values, L_values: required for an approx sweep");
  }
  if (cfg.kind == ExperimentKind::ConsistencySweep && (cfg.p_values.empty() || cfg.n_values.empty())) {
    errors.push_back("p_values, n_values: required for a consistency sweep");
  }
  if (cfg.kind == ExperimentKind::ScheduleCheck && cfg.n_values.empty()) {
    errors.push_back("n_values: required for a schedule check");
  }
  if (cfg.kind == ExperimentKind::Dataset && (cfg.p_values.size() != 1 || cfg.n_values.size() != 1)) {
    errors.push_back("p_values, n_values: a dataset needs exactly one p and one n");
  }
  if (cfg.kind == ExperimentKind::Train && cfg.L_values.size() > 1) {
    errors.push_back("L_values: training takes at most one L");
  }
  if (cfg.projection.kind == ProjectionMode::Kind::Sampled && !cfg.p_values.empty() &&
      cfg.projection.samples < cfg.p_values.back()) {
    errors.push_back("projection.samples: must be at least the largest p");
  }
  if (cfg.kind == ExperimentKind::ApproxSweep) cfg.distribution.clip_radius = cfg.radius;
  try {
    cfg.distribution.validate();
  } catch (const Error& e) {
    errors.push_back(std::string("distribution: ") + e.what());
  }
  if (cfg.train.restarts >= (1u << 24)) errors.push_back("train.restarts: at most 16777215");

  if (!errors.empty()) {
    std::string message = "invalid config (" + std::to_string(errors.size()) + " problem" +
                          (errors.size() == 1 ? "" : "s") + "): ";
    for (std::size_t i = 0; i < errors.size(); ++i) message += (i ? "; " : "") + errors[i];
    throw Error(ErrorCode::Config, message);
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, e.what());
  }
  return parse_config(text);
}

std::string ExperimentConfig::canonical_json() const {
  const FunctionalDistribution& d = distribution;
  json target = {{"kind", to_string(d.target.kind)}};
  if (d.target.kind != TargetKind::SquaredNorm) target["w"] = std::vector<double>(d.target.w.begin(), d.target.w.end());
  if (d.target.kind == TargetKind::Sine) target["scale"] = d.target.scale;

  json basis_doc = {{"family", basis.family == BasisFamily::Fourier ? "fourier" : "bspline"}};
  if (basis.family == BasisFamily::BSpline) {
    basis_doc["degree"] = basis.degree;
    basis_doc["interior_knots"] = basis.interior_knots;
  }

  const json doc = {
      {"kind", to_string(kind)},
      {"seed", seed},
      {"distribution",
       {{"K_max", d.k_max},
        {"s", d.decay},
        {"amplitude", d.amplitude},
        {"noise_sd", d.noise_sd},
        {"seed", d.seed},
        {"clip_radius", d.clip_radius},
        {"target", target}}},
      {"basis", basis_doc},
      {"projection",
       {{"mode", projection.kind == ProjectionMode::Kind::Exact ? "exact" : "sampled"},
        {"samples", projection.samples},
        {"grid", projection.grid == GridKind::Uniform ? "uniform" : "jittered"},
        {"ridge", projection.ridge}}},
      {"p_values", p_values},
      {"L_values", L_values},
      {"n_values", n_values},
      {"pairing", pairing == CellPairing::Product ? "product" : "diagonal"},
      {"train",
       {{"method", to_string(train.method)},
        {"restarts", train.restarts},
        {"max_iters", train.max_iters},
        {"step", train.step},
        {"damping", train.damping},
        {"seed", train.seed},
        {"tolerance", train.tolerance},
        {"patience", train.patience}}},
      {"alpha", alpha},
      {"radius", radius},
      {"n_train", n_train},
      {"n_test", n_test},
      {"replicates", replicates},
      {"delta", delta},
      {"record_timing", record_timing},
  };
  return doc.dump();
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical_json()); }

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

}  // namespace fmlp
