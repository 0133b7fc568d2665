#include <cmath>
#include <string>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fraclind/errors.hpp"
#include "fraclind/fracpower.hpp"
#include "fraclind/liouville.hpp"
#include "fraclind/oscillator.hpp"
#include "fraclind/scenario.hpp"
#include "fraclind/subordinator.hpp"

namespace py = pybind11;
using namespace fraclind;

namespace {

// Superoperators cross the boundary as plain N^2 x N^2 arrays.
SuperOperator as_super(const ComplexMatrix& m) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(m.rows()))));
  if (m.rows() != m.cols() || n * n != m.rows()) throw ShapeMismatch("superoperator matrix must be N^2 x N^2");
  return {n, m};
}

SubordinatorSpec make_spec(double alpha, double theta, int n_nodes) {
  SubordinatorSpec s;
  s.alpha = alpha;
  s.theta = theta;
  s.n_nodes = n_nodes;
  return s;
}

FractionalMethod make_method(const std::string& name) {
  FractionalMethod m;
  m.tag = method_from_string(name);
  return m;
}

py::dict report_dict(const OperationReport& r) {
  py::dict d;
  d["is_real"] = r.is_real.pass;
  d["real_residual"] = r.is_real.residual;
  d["is_trace_preserving"] = r.is_trace_preserving.pass;
  d["trace_residual"] = r.is_trace_preserving.residual;
  d["is_unital"] = r.is_unital.pass;
  d["unital_residual"] = r.is_unital.residual;
  d["choi_min_eig"] = r.choi_min_eig;
  d["is_completely_positive"] = r.is_completely_positive;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fractional Lindblad dynamics: generators, fractional powers, subordination and oscillator oracles";

  static py::exception<Error> base(m, "FraclindError");
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<SpectrumOutsideSector> sector_error(m, "SpectrumOutsideSector", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const SpectrumOutsideSector& e) {
      py::set_error(sector_error, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  m.def("density", [](double alpha, double t, double s, double theta) {
        return density(make_spec(alpha, theta, 400), t, s);
      }, py::arg("alpha"), py::arg("t"), py::arg("s"), py::arg("theta") = std::numbers::pi);
  m.def("density_half", &density_half, py::arg("t"), py::arg("s"));
  m.def("laplace_transform_check", [](double alpha, double t, double x) {
        return laplace_transform_check(make_spec(alpha, std::numbers::pi, 400), t, x);
      }, py::arg("alpha"), py::arg("t"), py::arg("x"));
  m.def("quadrature_rule", [](double alpha, double t, int n_nodes) {
        const QuadratureRule r = quadrature_rule(make_spec(alpha, std::numbers::pi, n_nodes), t);
        return py::make_tuple(r.nodes, r.weights);
      }, py::arg("alpha"), py::arg("t"), py::arg("n_nodes") = 400,
      "Nodes and weights of the quadrature rule for int f_alpha(t, s) g(s) ds.");

  m.def("lindblad_generator", [](const ComplexMatrix& h, const std::vector<ComplexMatrix>& v, double hbar) {
        return lindblad_generator(LindbladModel(h, v, hbar)).mat();
      }, py::arg("H"), py::arg("V") = std::vector<ComplexMatrix>{}, py::arg("hbar") = 1.0,
      "L_V with dA/dt = -L_V A, column-stacking convention.");
  m.def("density_generator", [](const ComplexMatrix& h, const std::vector<ComplexMatrix>& v, double hbar) {
        return density_generator(LindbladModel(h, v, hbar)).mat();
      }, py::arg("H"), py::arg("V") = std::vector<ComplexMatrix>{}, py::arg("hbar") = 1.0);
  m.def("vectorize", &vectorize);
  m.def("unvectorize", &unvectorize);
  m.def("semigroup_map", [](const ComplexMatrix& l, double t) { return semigroup_map(as_super(l), t).mat(); },
        py::arg("L"), py::arg("t"));
  m.def("choi_matrix", [](const ComplexMatrix& e) { return choi_matrix(as_super(e)); });
  m.def("check_quantum_operation", [](const ComplexMatrix& e) { return report_dict(check_quantum_operation(as_super(e))); });

  m.def("spectral_power", [](const ComplexMatrix& l, double alpha) { return spectral_power(as_super(l), alpha).mat(); },
        py::arg("L"), py::arg("alpha"));
  m.def("balakrishnan_power", [](const ComplexMatrix& l, double alpha, int n_z) {
        return balakrishnan_power(as_super(l), alpha, ZQuadrature{n_z, 1e-6, 1e6}).mat();
      }, py::arg("L"), py::arg("alpha"), py::arg("n_z") = 200);
  m.def("kato_resolvent", [](const ComplexMatrix& l, double alpha, double z) {
        return kato_resolvent(as_super(l), alpha, z).mat();
      }, py::arg("L"), py::arg("alpha"), py::arg("z"));
  m.def("fractional_semigroup", [](const ComplexMatrix& l, double alpha, double t, const std::string& method) {
        return fractional_semigroup(as_super(l), alpha, t, make_method(method)).mat();
      }, py::arg("L"), py::arg("alpha"), py::arg("t"), py::arg("method") = "spectral");

  m.def("frac_osc_coeffs", [](double alpha, double t, double m_, double omega) {
        const FracCoeffs k = frac_osc_coeffs(alpha, t, OscParams{m_, omega, 1.0});
        return py::make_tuple(k.c, k.s);
      }, py::arg("alpha"), py::arg("t"), py::arg("m") = 1.0, py::arg("omega") = 1.0,
      "(C_alpha(t), S_alpha(t)) by quadrature.");
  m.def("frac_damped_coeffs", [](double alpha, double t, double mu, const std::vector<std::pair<cplx, cplx>>& coeffs,
                                 double m_, double omega) {
        const FracDampedCoeffs k = frac_damped_coeffs(alpha, t, damped_params(m_, omega, mu, coeffs));
        return py::make_tuple(k.ch, k.sh);
      }, py::arg("alpha"), py::arg("t"), py::arg("mu"), py::arg("coeffs"), py::arg("m") = 1.0, py::arg("omega") = 1.0);
  m.def("damped_lambda", [](const std::vector<std::pair<cplx, cplx>>& coeffs) {
        DampedOscParams p;
        p.coeffs = coeffs;
        return p.lambda_from_coeffs();
      });

  m.def("run_config", [](const std::string& path, bool verify, const std::string& out_dir) {
        RunOptions opts;
        opts.verify = verify;
        if (!out_dir.empty()) opts.out_dir = out_dir;
        const RunReport r = run_scenario(load_config(path), opts);
        py::list checks;
        for (const auto& c : r.checks) {
          py::dict d;
          d["name"] = c.name;
          d["value"] = c.value;
          d["tolerance"] = c.tolerance;
          d["pass"] = c.pass;
          checks.append(d);
        }
        py::dict out;
        out["pass"] = r.pass();
        out["checks"] = checks;
        out["series_files"] = r.series_files;
        return out;
      }, py::arg("path"), py::arg("verify") = false, py::arg("out_dir") = "");
}
