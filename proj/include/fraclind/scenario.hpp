#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fraclind/fracpower.hpp"
#include "fraclind/oscillator.hpp"

namespace fraclind {

enum class ModelKind { free_oscillator, damped_oscillator, custom };

struct TimeGrid {
  double start = 0.0;
  double stop = 1.0;
  int steps = 2;

  std::vector<double> points() const;
};

struct Observable {
  std::string label;
  ComplexMatrix matrix;
};

struct OutputSpec {
  std::string series_path = "series.csv";
  std::string report_path = "report.json";
  std::string format = "csv";  ///< csv or json
};

struct ScenarioConfig {
  std::string name = "scenario";
  ModelKind model = ModelKind::free_oscillator;
  OscParams osc;
  double mu = 0.0;
  std::vector<std::pair<cplx, cplx>> coeffs;  ///< damped model (a_k, b_k)
  ComplexMatrix custom_h;
  std::vector<ComplexMatrix> custom_v;
  std::vector<double> alphas{1.0};
  MethodTag method = MethodTag::spectral;
  TimeGrid times;
  int truncation = 24;
  SubordinatorSpec quad;
  ZQuadrature z_quad;
  cplx coherent = 1.0;                ///< Fock models: amplitude of the initial coherent state
  std::optional<ComplexMatrix> rho0;  ///< overrides the coherent state
  std::vector<Observable> observables;
  OutputSpec outputs;
  std::map<std::string, double> tolerances;
  std::vector<double> checkpoints;    ///< verify: times at which the maps are checked
  std::vector<MethodTag> cross_methods;

  double tol(const std::string& key) const { return tolerances.at(key); }
};

/// Tolerance keys and their defaults.
const std::map<std::string, double>& default_tolerances();

/// Parses JSON text; fills defaults and validates. Throws ConfigError with
/// the offending field (or line, for syntax errors).
ScenarioConfig parse_config(const std::string& source);
ScenarioConfig load_config(const std::filesystem::path& path);

struct CheckRecord {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunReport {
  std::string scenario;
  std::vector<CheckRecord> checks;
  std::map<std::string, double> timings;  ///< seconds per phase
  std::vector<std::string> series_files;

  bool pass() const;
  void add(std::string name, double value, double tolerance);
};

struct RunOptions {
  bool verify = false;
  std::optional<std::filesystem::path> out_dir;  ///< relocates the output files
  int threads = 0;                               ///< 0: FRACLIND_THREADS or hardware
};

/// FRACLIND_THREADS when set (>= 1), else the hardware concurrency.
int thread_budget();

/// Builds the model, evolves every observable for every alpha, writes the
/// series (alpha-suffixed when several alphas are given) and the report.
/// Numerical failures propagate as exceptions; failed checks only show in the report.
RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// The series path actually written for one alpha.
std::filesystem::path series_path_for(const ScenarioConfig& config, double alpha,
                                      const std::optional<std::filesystem::path>& out_dir = {});

struct SeriesTable {
  std::vector<std::string> columns;  ///< first column is "t"
  std::vector<std::vector<double>> rows;
};

void write_series(const std::filesystem::path& path, const SeriesTable& table, const std::string& format,
                  double alpha, MethodTag method);
/// Reads either format (chosen by content). Throws GridMismatch on unreadable files.
SeriesTable read_series(const std::filesystem::path& path);

struct ColumnDeviation {
  std::string column;
  double max_abs = 0.0;
  double rms = 0.0;
};

struct CompareSummary {
  std::vector<ColumnDeviation> columns;
  double max_abs = 0.0;
  bool pass = false;
};

/// Throws GridMismatch when the columns or time grids differ.
CompareSummary compare_series(const std::filesystem::path& a, const std::filesystem::path& b, double tol);

/// "lin:a:b:n", "log:a:b:n" or a comma-separated list of s values.
std::vector<double> parse_s_grid(const std::string& spec);

/// Formats a double with 17 significant digits.
std::string format_double(double v);

}  // namespace fraclind
