#include "fraclind/scenario.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "fraclind/errors.hpp"
#include "json.hpp"

namespace fraclind {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

[[noreturn]] void config_fail(const std::string& field, const std::string& what) {
  throw ConfigError("field '" + field + "': " + what);
}

// Walks one JSON object, remembering which keys were read so the rest can be
// rejected as unknown.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) config_fail(at(key), "expected a number");
    return v->get<double>();
  }

  int integer(const std::string& key, int fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) config_fail(at(key), "expected an integer");
    return v->get<int>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) config_fail(at(key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) config_fail(at(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

cplx parse_complex(const json& v, const std::string& field) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  config_fail(field, "expected a number or a [re, im] pair");
}

ComplexMatrix parse_matrix(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) config_fail(field, "expected a non-empty array of rows");
  const std::size_t n = v.size();
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_array() || v[i].size() != n) config_fail(field, "matrix must be square");
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = parse_complex(v[i][j], field + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  }
  return m;
}

std::size_t line_of(const std::string& src, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < std::min(byte, src.size()); ++i)
    if (src[i] == '\n') ++line;
  return line;
}

void require_alpha_value(double a, const std::string& field) {
  if (!(a > 0.0 && a <= 1.0)) {
    std::ostringstream os;
    os << "alpha out of (0, 1]: " << a;
    config_fail(field, os.str());
  }
}

// ---------------------------------------------------------------- running

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  // Report the failure of the lowest index so the outcome does not depend on scheduling.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string alpha_tag(double alpha) {
  std::ostringstream os;
  os << alpha;
  return os.str();
}

cplx expectation(const ComplexMatrix& rho, const ComplexMatrix& a) { return (rho * a).trace(); }

void require_damped_sector(double lambda, cplx nu) {
  const double lo = std::min((lambda - nu).real(), (lambda + nu).real());
  if (lo < -1e-14) {
    std::ostringstream os;
    os << "Re(lambda +/- nu) = " << lo << " < 0 (lambda = " << lambda << ")";
    throw SectorViolation(os.str());
  }
}

double rel_frobenius(const ComplexMatrix& a, const ComplexMatrix& b) {
  const double d = (a - b).norm();
  const double s = b.norm();
  return s > 0.0 ? d / s : d;
}

}  // namespace

std::vector<double> TimeGrid::points() const {
  std::vector<double> out(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) out[i] = i == steps - 1 ? stop : start + (stop - start) * i / (steps - 1);
  return out;
}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> tol{
      {"oracle", 1e-4},       {"coefficients", 1e-5},   {"cp", 1e-7},
      {"trace", 1e-8},        {"unital", 1e-8},         {"hermiticity", 1e-8},
      {"duality", 1e-8},      {"semigroup", 1e-8},      {"semigroup_subordination", 1e-3},
      {"balakrishnan", 1e-5}, {"subordination", 1e-4},  {"spectral", 1e-5},
      {"picture", 1e-8},
  };
  return tol;
}

ScenarioConfig parse_config(const std::string& source) {
  json root;
  try {
    root = json::parse(source);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << "syntax error at line " << line_of(source, e.byte) << ": " << e.what();
    throw ConfigError(os.str());
  }

  ScenarioConfig c;
  Fields top(root, "");
  c.name = top.string("name", c.name);

  const std::string model = top.string("model", "");
  if (model == "free_oscillator")
    c.model = ModelKind::free_oscillator;
  else if (model == "damped_oscillator")
    c.model = ModelKind::damped_oscillator;
  else if (model == "custom")
    c.model = ModelKind::custom;
  else
    config_fail("model", model.empty() ? "missing (free_oscillator, damped_oscillator or custom)"
                                       : "unknown model '" + model + "'");
  const bool fock = c.model != ModelKind::custom;

  if (const json* p = top.find("params")) {
    if (!fock) config_fail("params", "custom models take their parameters from 'custom'");
    Fields f(*p, "params");
    c.osc.m = f.number("m", 1.0);
    c.osc.omega = f.number("omega", 1.0);
    c.osc.hbar = f.number("hbar", 1.0);
    if (c.model == ModelKind::damped_oscillator) {
      c.mu = f.number("mu", 0.0);
      if (const json* k = f.find("coeffs")) {
        if (!k->is_array() || k->empty()) config_fail("params.coeffs", "expected a non-empty array");
        for (std::size_t i = 0; i < k->size(); ++i) {
          const std::string at = "params.coeffs[" + std::to_string(i) + "]";
          Fields kf((*k)[i], at);
          const json* a = kf.find("a");
          const json* b = kf.find("b");
          if (!a || !b) config_fail(at, "needs both 'a' and 'b'");
          c.coeffs.push_back({parse_complex(*a, at + ".a"), parse_complex(*b, at + ".b")});
          kf.finish();
        }
      }
    }
    f.finish();
  }
  if (fock) {
    for (auto [v, key] : {std::pair{c.osc.m, "m"}, {c.osc.omega, "omega"}, {c.osc.hbar, "hbar"}})
      if (!(v > 0.0) || !std::isfinite(v)) config_fail(std::string("params.") + key, "must be positive");
    if (c.model == ModelKind::damped_oscillator && c.coeffs.empty())
      config_fail("params.coeffs", "damped_oscillator needs at least one {a, b} pair");
  }

  if (const json* p = top.find("custom")) {
    if (fock) config_fail("custom", "only valid with model = custom");
    Fields f(*p, "custom");
    const json* h = f.find("H");
    if (!h) config_fail("custom.H", "missing");
    c.custom_h = parse_matrix(*h, "custom.H");
    if (const json* v = f.find("V")) {
      if (!v->is_array()) config_fail("custom.V", "expected an array of matrices");
      for (std::size_t i = 0; i < v->size(); ++i)
        c.custom_v.push_back(parse_matrix((*v)[i], "custom.V[" + std::to_string(i) + "]"));
    }
    c.osc.hbar = f.number("hbar", 1.0);
    f.finish();
    if (hermiticity_residual(c.custom_h) > 1e-10) config_fail("custom.H", "H must be self-adjoint (H = H^dagger)");
    for (std::size_t i = 0; i < c.custom_v.size(); ++i)
      if (c.custom_v[i].rows() != c.custom_h.rows())
        config_fail("custom.V[" + std::to_string(i) + "]", "must have the same dimension as H");
    if (!(c.osc.hbar > 0.0)) config_fail("custom.hbar", "must be positive");
  } else if (!fock) {
    config_fail("custom", "missing for model = custom");
  }

  if (const json* a = top.find("alpha")) {
    c.alphas.clear();
    if (a->is_number()) {
      c.alphas.push_back(a->get<double>());
    } else if (a->is_array() && !a->empty()) {
      for (const auto& v : *a) {
        if (!v.is_number()) config_fail("alpha", "expected numbers");
        c.alphas.push_back(v.get<double>());
      }
    } else {
      config_fail("alpha", "expected a number or a non-empty array");
    }
    for (double v : c.alphas) require_alpha_value(v, "alpha");
    std::set<double> uniq(c.alphas.begin(), c.alphas.end());
    if (uniq.size() != c.alphas.size()) config_fail("alpha", "duplicate values");
  }

  const std::string method = top.string("method", "spectral");
  try {
    c.method = method_from_string(method);
  } catch (const ConfigError&) {
    config_fail("method", "unknown method '" + method + "' (spectral, balakrishnan, subordination)");
  }

  if (const json* t = top.find("times")) {
    Fields f(*t, "times");
    c.times.start = f.number("start", 0.0);
    c.times.stop = f.number("stop", 1.0);
    c.times.steps = f.integer("steps", 2);
    f.finish();
  } else {
    config_fail("times", "missing");
  }
  if (!(c.times.start >= 0.0)) config_fail("times.start", "must be >= 0");
  if (!(c.times.stop > c.times.start) || !std::isfinite(c.times.stop)) config_fail("times.stop", "must exceed start");
  if (c.times.steps < 2) config_fail("times.steps", "must be >= 2");

  c.truncation = top.integer("N", 24);
  if (fock && c.truncation < 2) config_fail("N", "Fock truncation must be >= 2");
  if (!fock && root.contains("N")) config_fail("N", "only valid for Fock models");

  if (const json* q = top.find("quad")) {
    Fields f(*q, "quad");
    c.quad.theta = f.number("theta", c.quad.theta);
    c.quad.n_nodes = f.integer("n_nodes", c.quad.n_nodes);
    c.quad.s_max_factor = f.number("s_max_factor", c.quad.s_max_factor);
    c.quad.tail_mass = f.number("tail_mass", c.quad.tail_mass);
    c.quad.r_max = f.number("r_max", c.quad.r_max);
    f.finish();
    if (!(c.quad.theta >= std::numbers::pi / 2 && c.quad.theta <= std::numbers::pi))
      config_fail("quad.theta", "must lie in [pi/2, pi]");
    if (c.quad.n_nodes < 16) config_fail("quad.n_nodes", "must be >= 16");
    if (!(c.quad.tail_mass > 0.0 && c.quad.tail_mass < 1e-3)) config_fail("quad.tail_mass", "must lie in (0, 1e-3)");
    if (c.quad.s_max_factor < 0.0) config_fail("quad.s_max_factor", "must be >= 0");
    if (c.quad.r_max < 0.0) config_fail("quad.r_max", "must be >= 0");
  }

  if (const json* z = top.find("z_quad")) {
    Fields f(*z, "z_quad");
    c.z_quad.n_z = f.integer("n_z", c.z_quad.n_z);
    c.z_quad.z_min = f.number("z_min", c.z_quad.z_min);
    c.z_quad.z_max = f.number("z_max", c.z_quad.z_max);
    f.finish();
    if (c.z_quad.n_z < 16) config_fail("z_quad.n_z", "must be >= 16");
    if (!(c.z_quad.z_min > 0.0 && c.z_quad.z_max > c.z_quad.z_min)) config_fail("z_quad", "need 0 < z_min < z_max");
  }

  const Eigen::Index dim = fock ? c.truncation : c.custom_h.rows();
  if (const json* s = top.find("initial_state")) {
    Fields f(*s, "initial_state");
    const json* coh = f.find("coherent");
    const json* mat = f.find("matrix");
    f.finish();
    if (coh && mat) config_fail("initial_state", "give either 'coherent' or 'matrix'");
    if (coh) {
      if (!fock) config_fail("initial_state.coherent", "only valid for Fock models");
      c.coherent = parse_complex(*coh, "initial_state.coherent");
    } else if (mat) {
      ComplexMatrix rho = parse_matrix(*mat, "initial_state.matrix");
      if (rho.rows() != dim) config_fail("initial_state.matrix", "dimension does not match the model");
      if (hermiticity_residual(rho) > 1e-10) config_fail("initial_state.matrix", "must be self-adjoint");
      if (std::abs(rho.trace() - 1.0) > 1e-12) config_fail("initial_state.matrix", "must have unit trace");
      if (min_hermitian_eigenvalue(rho, 1e-10) < -1e-10) config_fail("initial_state.matrix", "must be positive semidefinite");
      c.rho0 = rho;
    }
  }

  if (const json* o = top.find("observables")) {
    if (!o->is_array() || o->empty()) config_fail("observables", "expected a non-empty array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < o->size(); ++i) {
      const std::string at = "observables[" + std::to_string(i) + "]";
      const json& v = (*o)[i];
      Observable ob;
      if (v.is_string()) {
        ob.label = v.get<std::string>();
        if (!fock) config_fail(at, "named observables need a Fock model");
        if (ob.label != "Q" && ob.label != "P" && ob.label != "a" && ob.label != "n")
          config_fail(at, "unknown observable '" + ob.label + "' (Q, P, a, n)");
      } else {
        Fields f(v, at);
        ob.label = f.string("label", "");
        const json* m = f.find("matrix");
        f.finish();
        if (ob.label.empty()) config_fail(at + ".label", "missing");
        if (!m) config_fail(at + ".matrix", "missing");
        ob.matrix = parse_matrix(*m, at + ".matrix");
        if (ob.matrix.rows() != dim) config_fail(at + ".matrix", "dimension does not match the model");
      }
      for (char ch : ob.label)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) config_fail(at + ".label", "use [A-Za-z0-9_]");
      if (!labels.insert(ob.label).second) config_fail(at, "duplicate label '" + ob.label + "'");
      c.observables.push_back(std::move(ob));
    }
  } else if (fock) {
    c.observables = {{"Q", {}}, {"P", {}}};
  } else {
    config_fail("observables", "custom models need at least one {label, matrix} observable");
  }

  if (const json* o = top.find("outputs")) {
    Fields f(*o, "outputs");
    c.outputs.series_path = f.string("series_path", c.outputs.series_path);
    c.outputs.report_path = f.string("report_path", c.outputs.report_path);
    c.outputs.format = f.string("format", c.outputs.format);
    f.finish();
    if (c.outputs.format != "csv" && c.outputs.format != "json") config_fail("outputs.format", "must be csv or json");
    if (c.outputs.series_path.empty()) config_fail("outputs.series_path", "must not be empty");
    if (c.outputs.report_path.empty()) config_fail("outputs.report_path", "must not be empty");
  }

  c.tolerances = default_tolerances();
  if (const json* t = top.find("tolerances")) {
    if (!t->is_object()) config_fail("tolerances", "expected an object");
    for (auto it = t->begin(); it != t->end(); ++it) {
      if (!c.tolerances.count(it.key())) config_fail("tolerances." + it.key(), "unknown tolerance");
      if (!it->is_number() || !(it->get<double>() > 0.0)) config_fail("tolerances." + it.key(), "must be a positive number");
      c.tolerances[it.key()] = it->get<double>();
    }
  }

  if (const json* v = top.find("verify")) {
    Fields f(*v, "verify");
    if (const json* cp = f.find("checkpoints")) {
      if (!cp->is_array()) config_fail("verify.checkpoints", "expected an array of times");
      for (const auto& x : *cp) {
        if (!x.is_number() || !(x.get<double>() > 0.0)) config_fail("verify.checkpoints", "times must be positive");
        c.checkpoints.push_back(x.get<double>());
      }
    }
    if (const json* ms = f.find("methods")) {
      if (!ms->is_array()) config_fail("verify.methods", "expected an array of method names");
      for (const auto& x : *ms) {
        if (!x.is_string()) config_fail("verify.methods", "expected strings");
        try {
          c.cross_methods.push_back(method_from_string(x.get<std::string>()));
        } catch (const ConfigError&) {
          config_fail("verify.methods", "unknown method '" + x.get<std::string>() + "'");
        }
      }
    }
    f.finish();
  }
  if (c.checkpoints.empty()) {
    const auto pts = c.times.points();
    c.checkpoints.push_back(pts[pts.size() / 2] > 0.0 ? pts[pts.size() / 2] : pts.back());
    if (pts.back() != c.checkpoints.front()) c.checkpoints.push_back(pts.back());
  }

  top.finish();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

bool RunReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

void RunReport::add(std::string name, double value, double tolerance) {
  checks.push_back({std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance});
}

int thread_budget() {
  if (const char* env = std::getenv("FRACLIND_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min<long>(v, 1024));
    std::cerr << "fraclind: ignoring invalid FRACLIND_THREADS='" << env << "'\n";
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string format_double(double v) {
  if (v == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::filesystem::path series_path_for(const ScenarioConfig& c, double alpha,
                                      const std::optional<std::filesystem::path>& out_dir) {
  std::filesystem::path p = c.outputs.series_path;
  if (c.alphas.size() > 1) p.replace_filename(p.stem().string() + "_alpha" + alpha_tag(alpha) + p.extension().string());
  if (out_dir) p = *out_dir / p.filename();
  return p;
}

void write_series(const std::filesystem::path& path, const SeriesTable& table, const std::string& format,
                  double alpha, MethodTag method) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write series file " + path.string());
  if (format == "json") {
    // Hand-written so every number carries 17 significant digits.
    out << "{\n  \"alpha\": " << format_double(alpha) << ",\n  \"method\": \"" << to_string(method)
        << "\",\n  \"columns\": [";
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? ", " : "") << '"' << table.columns[i] << '"';
    out << "],\n  \"rows\": [\n";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      out << "    [";
      for (std::size_t i = 0; i < table.rows[r].size(); ++i) out << (i ? ", " : "") << format_double(table.rows[r][i]);
      out << "]" << (r + 1 < table.rows.size() ? "," : "") << "\n";
    }
    out << "  ]\n}\n";
  } else {
    for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
    out << "\n";
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
      out << "\n";
    }
  }
  if (!out) throw ConfigError("failed writing series file " + path.string());
}

SeriesTable read_series(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GridMismatch("cannot read series file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  SeriesTable t;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      const json j = json::parse(text);
      t.columns = j.at("columns").get<std::vector<std::string>>();
      t.rows = j.at("rows").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw GridMismatch("malformed JSON series " + path.string() + ": " + e.what());
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    bool header = true;
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream cs(line);
      std::string cell;
      while (std::getline(cs, cell, ',')) cells.push_back(cell);
      if (header) {
        t.columns = cells;
        header = false;
        continue;
      }
      std::vector<double> row;
      for (const auto& s : cells) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end == s.c_str() || *end != '\0') throw GridMismatch("non-numeric cell '" + s + "' in " + path.string());
        row.push_back(v);
      }
      t.rows.push_back(std::move(row));
    }
  }
  if (t.columns.empty() || t.columns.front() != "t") throw GridMismatch(path.string() + " is not a series file");
  for (const auto& r : t.rows)
    if (r.size() != t.columns.size()) throw GridMismatch("ragged row in " + path.string());
  return t;
}

CompareSummary compare_series(const std::filesystem::path& a, const std::filesystem::path& b, double tol) {
  if (!(tol >= 0.0)) throw ConfigError("--tol must be nonnegative");
  const SeriesTable ta = read_series(a);
  const SeriesTable tb = read_series(b);
  if (ta.columns != tb.columns) throw GridMismatch("column sets differ");
  if (ta.rows.size() != tb.rows.size()) throw GridMismatch("time grids have different lengths");
  for (std::size_t r = 0; r < ta.rows.size(); ++r) {
    const double x = ta.rows[r][0];
    const double y = tb.rows[r][0];
    if (std::abs(x - y) > 1e-12 * std::max(1.0, std::abs(x))) {
      std::ostringstream os;
      os << "time grids differ at row " << r + 1 << ": " << format_double(x) << " vs " << format_double(y);
      throw GridMismatch(os.str());
    }
  }
  CompareSummary out;
  for (std::size_t c = 1; c < ta.columns.size(); ++c) {
    ColumnDeviation d{ta.columns[c], 0.0, 0.0};
    double sq = 0.0;
    for (std::size_t r = 0; r < ta.rows.size(); ++r) {
      const double e = std::abs(ta.rows[r][c] - tb.rows[r][c]);
      d.max_abs = std::max(d.max_abs, std::isnan(e) ? INFINITY : e);
      sq += e * e;
    }
    d.rms = ta.rows.empty() ? 0.0 : std::sqrt(sq / ta.rows.size());
    out.max_abs = std::max(out.max_abs, d.max_abs);
    out.columns.push_back(d);
  }
  out.pass = out.max_abs <= tol;
  return out;
}

std::vector<double> parse_s_grid(const std::string& spec) {
  auto number = [&](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0') throw ConfigError("--s-grid: '" + s + "' is not a number");
    return v;
  };
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string p;
  const char sep = spec.find(':') != std::string::npos ? ':' : ',';
  while (std::getline(ss, p, sep)) parts.push_back(p);
  std::vector<double> out;
  if (sep == ':') {
    if (parts.size() != 4 || (parts[0] != "lin" && parts[0] != "log"))
      throw ConfigError("--s-grid: expected lin:a:b:n, log:a:b:n or a comma list");
    const double a = number(parts[1]);
    const double b = number(parts[2]);
    const double nd = number(parts[3]);
    const int n = static_cast<int>(nd);
    if (n < 1 || n != nd || n > 1000000) throw ConfigError("--s-grid: point count must be a positive integer");
    if (!(b >= a) || (n > 1 && !(b > a))) throw ConfigError("--s-grid: need a < b");
    const bool lg = parts[0] == "log";
    if (lg && !(a > 0.0)) throw ConfigError("--s-grid: log grid needs a > 0");
    for (int i = 0; i < n; ++i) {
      const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
      out.push_back(i == n - 1 && n > 1 ? b : (lg ? a * std::pow(b / a, f) : a + (b - a) * f));
    }
  } else {
    for (const auto& s : parts) out.push_back(number(s));
  }
  if (out.empty()) throw ConfigError("--s-grid: no points");
  for (double s : out)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("--s-grid: points must be positive");
  return out;
}

// ---------------------------------------------------------------- run_scenario

namespace {

struct BuiltModel {
  LindbladModel model;
  std::optional<DampedOscParams> damped;
  ComplexMatrix rho0;
  std::vector<Observable> observables;
  FockOperators fock;
};

BuiltModel build(const ScenarioConfig& c) {
  std::optional<DampedOscParams> dp;
  std::optional<LindbladModel> model;
  FockOperators fock;
  switch (c.model) {
    case ModelKind::free_oscillator:
      model = free_oscillator_model(c.truncation, c.osc);
      fock = fock_operators(c.truncation, c.osc);
      break;
    case ModelKind::damped_oscillator:
      dp = damped_params(c.osc.m, c.osc.omega, c.mu, c.coeffs, c.osc.hbar);
      require_damped_sector(dp->lambda, dp->nu);
      model = damped_oscillator_model(c.truncation, *dp);
      fock = fock_operators(c.truncation, c.osc);
      break;
    case ModelKind::custom:
      model = LindbladModel(c.custom_h, c.custom_v, c.osc.hbar);
      break;
  }
  const Eigen::Index n = model->dim();
  ComplexMatrix rho0;
  if (c.rho0)
    rho0 = *c.rho0;
  else if (c.model != ModelKind::custom)
    rho0 = coherent_state(c.truncation, c.coherent);
  else {
    rho0 = ComplexMatrix::Zero(n, n);
    rho0(0, 0) = 1.0;
  }
  std::vector<Observable> obs = c.observables;
  for (auto& o : obs) {
    if (o.matrix.size() != 0) continue;
    if (o.label == "Q") o.matrix = fock.q;
    if (o.label == "P") o.matrix = fock.p;
    if (o.label == "a") o.matrix = fock.a;
    if (o.label == "n") o.matrix = fock.a.adjoint() * fock.a;
  }
  return {*model, dp, rho0, obs, fock};
}

FractionalMethod method_of(const ScenarioConfig& c, MethodTag tag) {
  FractionalMethod m;
  m.tag = tag;
  m.quad = c.quad;
  m.z = c.z_quad;
  return m;
}

// Observable expectations <A_t> = Tr(rho0 A_t) for every time and observable.
std::vector<std::vector<cplx>> engine_series(const ScenarioConfig& c, const BuiltModel& b, const SuperOperator& l,
                                             double alpha, const std::vector<double>& times, int threads) {
  const FractionalMethod method = method_of(c, c.method);
  std::vector<std::vector<cplx>> out(times.size(), std::vector<cplx>(b.observables.size()));
  if (alpha == 1.0 || c.method == MethodTag::spectral) {
    for (std::size_t k = 0; k < b.observables.size(); ++k) {
      const TimeSeries ts = evolve_observable(l, alpha, b.observables[k].matrix, times, method);
      for (std::size_t i = 0; i < times.size(); ++i) out[i][k] = expectation(b.rho0, ts.values[i]);
    }
    return out;
  }
  const FractionalPropagator prop(l, alpha, method);
  parallel_for(times.size(), threads, [&](std::size_t i) {
    const SuperOperator phi = prop.map(times[i]);
    for (std::size_t k = 0; k < b.observables.size(); ++k)
      out[i][k] = expectation(b.rho0, phi.apply(b.observables[k].matrix));
  });
  return out;
}

void theorem_checks(const ScenarioConfig& c, const BuiltModel& b, const SuperOperator& l, const SuperOperator& lam,
                    double alpha, RunReport& report, int threads) {
  const std::string tag = "[alpha=" + alpha_tag(alpha) + "]";
  const FractionalMethod method = method_of(c, c.method);
  struct Slot {
    std::vector<CheckRecord> records;
  };
  std::vector<Slot> slots(c.checkpoints.size());
  // One-off work per generator and method, shared by all checkpoints.
  const FractionalPropagator obs(l, alpha, method);
  const FractionalPropagator den(lam, alpha, method);
  std::vector<std::pair<MethodTag, FractionalPropagator>> cross;
  if (alpha < 1.0)
    for (MethodTag m : c.cross_methods)
      if (m != c.method) cross.emplace_back(m, FractionalPropagator(l, alpha, method_of(c, m)));
  parallel_for(c.checkpoints.size(), threads, [&](std::size_t idx) {
    const double t = c.checkpoints[idx];
    RunReport local;
    const std::string at = tag + "[t=" + alpha_tag(t) + "]";
    const SuperOperator phi = obs.map(t);
    const SuperOperator dual = adjoint_generator(phi);
    const OperationReport op = check_quantum_operation(dual, {c.tol("hermiticity"), c.tol("trace"), c.tol("unital"), c.tol("cp")});
    local.add("complete_positivity" + at, std::max(0.0, -op.choi_min_eig), c.tol("cp"));
    local.add("trace_preservation" + at, op.is_trace_preserving.residual, c.tol("trace"));
    local.add("unitality" + at, op.is_unital.residual, c.tol("unital"));
    local.add("reality" + at, hermiticity_preservation_residual(phi), c.tol("hermiticity"));

    const SuperOperator dens = den.map(t);
    local.add("duality" + at, duality_residual(dens, phi), c.tol("duality"));

    // Heisenberg and Schroedinger pictures give the same expectations.
    double picture = 0.0;
    const ComplexMatrix rho_t = dens.apply(b.rho0);
    for (const auto& o : b.observables) {
      const cplx h = expectation(b.rho0, phi.apply(o.matrix));
      const cplx s = expectation(rho_t, o.matrix);
      picture = std::max(picture, std::abs(h - s) / std::max(1.0, o.matrix.norm()));
    }
    local.add("pictures_agree" + at, picture, c.tol("picture"));

    if (alpha < 1.0) {
      const SuperOperator half = obs.map(0.5 * t);
      const double semi = ((half * half).mat() - phi.mat()).norm();
      local.add("semigroup" + at, semi,
                c.method == MethodTag::subordination ? c.tol("semigroup_subordination") : c.tol("semigroup"));
      for (const auto& [m, p] : cross) {
        const SuperOperator other = p.map(t);
        local.add(std::string("method_") + std::string(to_string(m)) + "_vs_" + std::string(to_string(c.method)) + at,
                  rel_frobenius(other.mat(), phi.mat()),
                  std::max(c.tol(std::string(to_string(m))), c.tol(std::string(to_string(c.method)))));
      }
    }
    slots[idx].records = std::move(local.checks);
  });
  for (auto& s : slots)
    for (auto& r : s.records) report.checks.push_back(std::move(r));
}

void write_report(const std::filesystem::path& path, const RunReport& r) {
  json j;
  j["scenario"] = r.scenario;
  j["pass"] = r.pass();
  j["checks"] = json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  j["timings"] = r.timings;
  j["series_files"] = r.series_files;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report file " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& c, const RunOptions& options) {
  const int threads = options.threads > 0 ? options.threads : thread_budget();
  RunReport report;
  report.scenario = c.name;

  auto t0 = std::chrono::steady_clock::now();
  const BuiltModel b = build(c);
  const SuperOperator l = lindblad_generator(b.model);
  const SuperOperator lam = density_generator(b.model);
  report.timings["build"] = seconds_since(t0);

  const std::vector<double> times = c.times.points();
  const bool free_osc = c.model == ModelKind::free_oscillator;
  const bool damped = c.model == ModelKind::damped_oscillator;
  const cplx q0 = (free_osc || damped) ? expectation(b.rho0, b.fock.q) : 0.0;
  const cplx p0 = (free_osc || damped) ? expectation(b.rho0, b.fock.p) : 0.0;
  const double mw = c.osc.m * c.osc.omega;

  double evolve_time = 0.0;
  double oracle_time = 0.0;
  double verify_time = 0.0;
  for (double alpha : c.alphas) {
    const std::string tag = "[alpha=" + alpha_tag(alpha) + "]";
    t0 = std::chrono::steady_clock::now();
    const auto engine = engine_series(c, b, l, alpha, times, threads);
    evolve_time += seconds_since(t0);

    SeriesTable table;
    table.columns.push_back("t");
    for (const auto& o : b.observables) {
      table.columns.push_back(o.label + "_re");
      table.columns.push_back(o.label + "_im");
    }

    // Coefficient functions of the closed-form solutions, by quadrature.
    t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<cplx, cplx>> coef(times.size());
    if (free_osc || damped) {
      const char* names[2] = {free_osc ? "C" : "Ch", free_osc ? "S" : "Sh"};
      for (const char* nm : names) {
        table.columns.push_back(std::string(nm) + "_re");
        table.columns.push_back(std::string(nm) + "_im");
      }
      parallel_for(times.size(), threads, [&](std::size_t i) {
        if (free_osc) {
          const FracCoeffs k = frac_osc_coeffs(alpha, times[i], c.osc, c.quad);
          coef[i] = {k.c, k.s};
        } else {
          const FracDampedCoeffs k = frac_damped_coeffs(alpha, times[i], *b.damped, c.quad);
          coef[i] = {k.ch, k.sh};
        }
      });
      double dev_coef = 0.0;
      double dev_q = 0.0;
      double dev_p = 0.0;
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        std::pair<cplx, cplx> closed;
        cplx q_pred;
        cplx p_pred;
        if (free_osc) {
          const FracCoeffs k = frac_osc_oracle(alpha, t, c.osc);
          closed = {k.c, k.s};
          const double cc = coef[i].first.real();
          const double ss = coef[i].second.real();
          q_pred = q0 * cc + p0 * ss / mw;
          p_pred = p0 * cc - mw * q0 * ss;
        } else {
          const FracDampedCoeffs k = frac_damped_oracle(alpha, t, *b.damped);
          closed = {k.ch, k.sh};
          const Complex2 phi = frac_damped_solution(FracDampedCoeffs{coef[i].first, coef[i].second, alpha, t}, *b.damped);
          q_pred = phi(0, 0) * q0 + phi(0, 1) * p0;
          p_pred = phi(1, 0) * q0 + phi(1, 1) * p0;
        }
        if (t > 0.0)
          dev_coef = std::max({dev_coef, std::abs(coef[i].first - closed.first), std::abs(coef[i].second - closed.second)});
        for (std::size_t k = 0; k < b.observables.size(); ++k) {
          if (b.observables[k].label == "Q") dev_q = std::max(dev_q, std::abs(engine[i][k] - q_pred));
          if (b.observables[k].label == "P") dev_p = std::max(dev_p, std::abs(engine[i][k] - p_pred));
        }
      }
      report.add("coefficients_vs_closed_form" + tag, dev_coef, c.tol("coefficients"));
      for (const auto& o : b.observables) {
        if (o.label == "Q") report.add("engine_vs_oracle_Q" + tag, dev_q, c.tol("oracle"));
        if (o.label == "P") report.add("engine_vs_oracle_P" + tag, dev_p, c.tol("oracle"));
      }
    }
    oracle_time += seconds_since(t0);

    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> row{times[i]};
      for (const auto& v : engine[i]) {
        row.push_back(v.real());
        row.push_back(v.imag());
      }
      if (free_osc || damped) {
        for (const cplx& v : {coef[i].first, coef[i].second}) {
          row.push_back(v.real());
          row.push_back(v.imag());
        }
      }
      table.rows.push_back(std::move(row));
    }
    const auto path = series_path_for(c, alpha, options.out_dir);
    write_series(path, table, c.outputs.format, alpha, c.method);
    report.series_files.push_back(path.string());

    if (options.verify) {
      t0 = std::chrono::steady_clock::now();
      theorem_checks(c, b, l, lam, alpha, report, threads);
      verify_time += seconds_since(t0);
    }
  }
  report.timings["evolve"] = evolve_time;
  report.timings["oracle"] = oracle_time;
  if (options.verify) report.timings["verify"] = verify_time;

  std::filesystem::path rp = c.outputs.report_path;
  if (options.out_dir) rp = *options.out_dir / rp.filename();
  write_report(rp, report);
  return report;
}

}  // namespace fraclind
