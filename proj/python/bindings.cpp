#include "onofri/bubbles.hpp"
#include "onofri/cli.hpp"
#include "onofri/concentration.hpp"
#include "onofri/error.hpp"
#include "onofri/meanfield.hpp"
#include "onofri/minimizer.hpp"
#include "onofri/sphere.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <sstream>

namespace py = pybind11;
using namespace onofri;

namespace {

py::dict branch_point_dict(const BranchPoint& p) {
  py::dict d;
  d["a"] = p.a;
  d["sup_norm"] = p.diagnostics.sup_norm;
  d["mean"] = p.diagnostics.mean;
  d["beta"] = p.diagnostics.beta;
  d["lambda_norm_sq"] = p.diagnostics.lambda_norm_sq;
  d["beta_ratio"] = p.diagnostics.beta_ratio;
  d["profile_corr"] = p.diagnostics.profile_corr;
  d["uhat_l2"] = p.diagnostics.uhat_l2;
  d["mass_defect"] = p.diagnostics.mass_defect;
  d["kw3"] = p.diagnostics.kw3;
  d["newton_iters"] = p.newton_iters;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Numerical laboratory for the constrained Onofri inequality on the 2-sphere";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def(
      "integrate",
      [](int L, const std::function<double(double, double, double)>& f) {
        return integrate(*build_gauss_grid(L), [&](const Vec3& x) { return f(x[0], x[1], x[2]); });
      },
      py::arg("L"), py::arg("f"), "Gauss product rule on an L x 2L grid; f takes (x1, x2, x3).");

  m.def(
      "config_search",
      [](int n, bool even, int starts, std::uint64_t seed) {
        ConfigSearchOptions opt;
        opt.starts = starts;
        opt.seed = seed;
        py::gil_scoped_release release;
        return to_json(min_lambda_over_configs(n, even, opt));
      },
      py::arg("n"), py::arg("even") = false, py::arg("starts") = 200, py::arg("seed") = 1);

  m.def(
      "bubble_report",
      [](const std::string& config, double eps, double delta) {
        const AsymptoticReport r = verify_asymptotics(BubbleSpec::named(configuration_from_string(config), eps, delta));
        py::dict d;
        d["mass_ratio"] = r.mass_ratio;
        d["energy_ratio"] = r.energy_ratio;
        d["lambda_norm_sq"] = r.lambda_norm_sq;
        d["kw_defect"] = r.kw_defect;
        d["mean"] = r.mean;
        return d;
      },
      py::arg("config"), py::arg("eps"), py::arg("delta") = 0.35);

  m.def(
      "branch",
      [](double a_start, double a_end, double step, bool switch_at_third, int l_max) {
        ContinuationOptions opt;
        opt.l_max = l_max;
        const SolutionBranch b = continue_branch(a_start, a_end, step, switch_at_third, opt);
        py::list rows;
        for (const BranchPoint& p : b.points) rows.append(branch_point_dict(p));
        return rows;
      },
      py::arg("a_start"), py::arg("a_end"), py::arg("step") = 0.005, py::arg("switch_at_third") = true,
      py::arg("l_max") = AxiProfile::kDefaultDegree);

  m.def(
      "minimize",
      [](double a, double c0, std::uint64_t seed, double amplitude) {
        ConstraintSpec spec;
        spec.c0 = c0;
        std::mt19937_64 rng(seed);
        return to_json(minimize(a, spec, random_profile(AxiProfile::kDefaultDegree, amplitude, rng)));
      },
      py::arg("a"), py::arg("c0") = 0.5, py::arg("seed") = 1, py::arg("amplitude") = 0.1);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out;
        std::ostringstream err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs onofri-lab in process; returns (exit_code, stdout, stderr).");
}
