#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fraclind/errors.hpp"
#include "fraclind/scenario.hpp"
#include "fraclind/subordinator.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kConfig = 2;
constexpr int kNumerical = 3;
constexpr int kVerification = 4;

int exit_code_for(const fraclind::Error& e) {
  switch (e.error_class()) {
    case fraclind::ErrorClass::numerical:
      return kNumerical;
    case fraclind::ErrorClass::config:
    case fraclind::ErrorClass::grid:
    case fraclind::ErrorClass::contract:
      return kConfig;
  }
  return kNumerical;
}

int run_command(const std::string& config, const std::optional<std::string>& out_dir, int threads, bool verify) {
  const fraclind::ScenarioConfig cfg = fraclind::load_config(config);
  fraclind::RunOptions opts;
  opts.verify = verify;
  opts.threads = threads;
  if (out_dir) opts.out_dir = *out_dir;
  const fraclind::RunReport report = fraclind::run_scenario(cfg, opts);
  for (const auto& c : report.checks)
    std::printf("%s %s value=%.3e tol=%.1e\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.tolerance);
  for (const auto& f : report.series_files) std::printf("wrote %s\n", f.c_str());
  std::printf("%s: %s\n", report.scenario.c_str(), report.pass() ? "PASS" : "FAIL");
  return report.pass() ? kPass : kVerification;
}

int compare_command(const std::string& a, const std::string& b, double tol) {
  const fraclind::CompareSummary s = fraclind::compare_series(a, b, tol);
  std::printf("column,max_abs,rms\n");
  for (const auto& c : s.columns)
    std::printf("%s,%s,%s\n", c.column.c_str(), fraclind::format_double(c.max_abs).c_str(),
                fraclind::format_double(c.rms).c_str());
  std::printf("max %s tol %s: %s\n", fraclind::format_double(s.max_abs).c_str(), fraclind::format_double(tol).c_str(),
              s.pass ? "PASS" : "FAIL");
  return s.pass ? kPass : kVerification;
}

int density_command(double alpha, double t, const std::string& grid, double theta) {
  fraclind::SubordinatorSpec spec;
  spec.alpha = alpha;
  spec.theta = theta;
  if (!(alpha > 0.0 && alpha < 1.0)) throw fraclind::ConfigError("--alpha must lie in (0, 1)");
  if (!(t > 0.0)) throw fraclind::ConfigError("--t must be positive");
  if (!(theta >= std::numbers::pi / 2 && theta <= std::numbers::pi)) throw fraclind::ConfigError("--theta must lie in [pi/2, pi]");
  const auto s = fraclind::parse_s_grid(grid);
  std::string out = "s,density\n";
  for (double x : s) out += fraclind::format_double(x) + "," + fraclind::format_double(fraclind::density(spec, t, x)) + "\n";
  std::fwrite(out.data(), 1, out.size(), stdout);
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional Lindblad evolution: scenarios, verification and subordinator densities"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out_dir;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Evolve a scenario and write its series and report");
  run->add_option("config", config, "Scenario JSON file")->required();
  run->add_option("--out-dir", out_dir, "Write the output files into this directory");
  run->add_option("--threads", threads, "Thread cap (overrides FRACLIND_THREADS)")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Run a scenario plus the map-level verification checks");
  verify->add_option("config", config, "Scenario JSON file")->required();
  verify->add_option("--out-dir", out_dir, "Write the output files into this directory");
  verify->add_option("--threads", threads, "Thread cap (overrides FRACLIND_THREADS)")->check(CLI::PositiveNumber);

  std::string file_a;
  std::string file_b;
  double tol = 0.0;
  auto* compare = app.add_subcommand("compare", "Compare two series files column by column");
  compare->add_option("a", file_a, "First series file")->required();
  compare->add_option("b", file_b, "Second series file")->required();
  compare->add_option("--tol", tol, "Maximum allowed absolute deviation")->required();

  double alpha = 0.5;
  double t = 1.0;
  double theta = std::numbers::pi;
  std::string grid;
  auto* density = app.add_subcommand("density", "Tabulate the subordinator density f_alpha(t, s)");
  density->add_option("--alpha", alpha, "Stability index in (0, 1)")->required();
  density->add_option("--t", t, "Time t > 0")->required();
  density->add_option("--s-grid", grid, "lin:a:b:n, log:a:b:n or s1,s2,...")->required();
  density->add_option("--theta", theta, "Contour angle in [pi/2, pi]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfig;
  }

  try {
    if (*run) return run_command(config, out_dir, threads, false);
    if (*verify) return run_command(config, out_dir, threads, true);
    if (*compare) return compare_command(file_a, file_b, tol);
    if (*density) return density_command(alpha, t, grid, theta);
  } catch (const fraclind::Error& e) {
    std::fprintf(stderr, "fraclind: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fraclind: %s\n", e.what());
    return kNumerical;
  }
  return kConfig;
}
