#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "shakenwell/coupler.hpp"
#include "shakenwell/errors.hpp"
#include "shakenwell/hierarchy.hpp"
#include "shakenwell/twolevel.hpp"
#include "shakenwell/well.hpp"

namespace py = pybind11;
using namespace shakenwell;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Floquet analysis of a periodically shaken complex-plane potential well";

  py::register_exception<Error>(m, "Error");

  py::class_<DriveSpec>(m, "DriveSpec")
      .def(py::init([](cdouble V1, cdouble V2, double omega0, double eps) {
             return DriveSpec{V1, V2, omega0, eps};
           }),
           py::arg("V1"), py::arg("V2"), py::arg("omega0") = 1.0, py::arg("eps") = 1.0)
      .def_readwrite("V1", &DriveSpec::V1)
      .def_readwrite("V2", &DriveSpec::V2)
      .def_readwrite("omega0", &DriveSpec::omega0)
      .def_readwrite("eps", &DriveSpec::eps)
      .def("modulation", &DriveSpec::modulation)
      .def("is_hermitian", &DriveSpec::is_hermitian, py::arg("tol") = 1e-14)
      .def("period", &DriveSpec::period)
      .def_static("cosine", &DriveSpec::cosine)
      .def_static("one_sided", &DriveSpec::one_sided)
      .def("__repr__", [](const DriveSpec& d) {
        return "DriveSpec(V1=" + py::repr(py::cast(d.V1)).cast<std::string>() +
               ", V2=" + py::repr(py::cast(d.V2)).cast<std::string>() +
               ", omega0=" + std::to_string(d.omega0) + ", eps=" + std::to_string(d.eps) + ")";
      });

  using twolevel::MonodromyResult;
  py::class_<MonodromyResult>(m, "MonodromyResult")
      .def_readonly("M", &MonodromyResult::M)
      .def_readonly("lambda1", &MonodromyResult::lambda1)
      .def_readonly("lambda2", &MonodromyResult::lambda2)
      .def_readonly("mu1", &MonodromyResult::mu1)
      .def_readonly("mu2", &MonodromyResult::mu2)
      .def_readonly("mu1_unfolded", &MonodromyResult::mu1_unfolded)
      .def_readonly("mu2_unfolded", &MonodromyResult::mu2_unfolded)
      .def_readonly("q1", &MonodromyResult::q1)
      .def_readonly("q2", &MonodromyResult::q2)
      .def_readonly("defect", &MonodromyResult::defect)
      .def_readonly("gap", &MonodromyResult::gap)
      .def("is_coalescent", &MonodromyResult::is_coalescent);

  m.def("monodromy", [](const DriveSpec& d) { return twolevel::monodromy(d); }, py::arg("drive"));

  m.def(
      "propagate",
      [](const DriveSpec& d, const twolevel::Vec2& a0, double t_final, double record_every) {
        const auto r = twolevel::propagate(d, a0, t_final, record_every);
        py::dict out;
        out["t"] = r.times;
        out["pop1"] = r.a1_sq;
        out["pop2"] = r.a2_sq;
        out["norm"] = r.norm;
        return out;
      },
      py::arg("drive"), py::arg("a0"), py::arg("t_final"), py::arg("record_every") = 1.0);

  m.def(
      "sweep",
      [](const DriveSpec& base, const std::vector<double>& eps, bool theta) {
        twolevel::SweepOptions opt;
        opt.compute_theta = theta;
        const auto pts = twolevel::sweep(base, eps, opt);
        py::dict out;
        std::vector<double> mu1, mu2, gap, th, defect;
        for (const auto& p : pts) {
          mu1.push_back(p.mu1_folded.real());
          mu2.push_back(p.mu2_folded.real());
          gap.push_back(p.mono.gap);
          th.push_back(p.theta);
          defect.push_back(p.mono.defect);
        }
        out["eps"] = eps;
        out["mu1_folded"] = mu1;
        out["mu2_folded"] = mu2;
        out["gap"] = gap;
        out["theta"] = th;
        out["defect"] = defect;
        return out;
      },
      py::arg("drive"), py::arg("eps"), py::arg("theta") = true);

  m.def("wkb_quasi_energies", [](const DriveSpec& d) {
    const auto w = twolevel::wkb_quasi_energies(d);
    return py::make_tuple(w.mu1, w.mu2);
  });

  m.def(
      "find_exceptional_point",
      [](const DriveSpec& base, double lo, double hi) {
        const auto r = twolevel::find_exceptional_point(base, lo, hi);
        py::dict out;
        out["eps_star"] = r.eps_star;
        out["defect"] = r.defect;
        out["gap"] = r.gap;
        out["residual"] = r.residual;
        out["iterations"] = r.iterations;
        out["found"] = r.found;
        return out;
      },
      py::arg("drive"), py::arg("lo"), py::arg("hi"));

  m.def(
      "hierarchy_quasi_energies",
      [](const DriveSpec& d, int n_trunc) {
        const int n = n_trunc > 0 ? n_trunc : hierarchy::default_truncation(d);
        const auto s = hierarchy::solve_quasi_energies(hierarchy::build_matrix(d, n));
        std::vector<cdouble> mu;
        for (const auto& c : s.classes) mu.push_back(c.mu);
        return mu;
      },
      py::arg("drive"), py::arg("n_trunc") = 0);

  py::class_<well::WellSpec>(m, "WellSpec")
      .def_readonly("sigma1", &well::WellSpec::sigma1)
      .def_readonly("sigma2", &well::WellSpec::sigma2)
      .def_readonly("E1", &well::WellSpec::E1)
      .def_readonly("E2", &well::WellSpec::E2)
      .def_readonly("omega0", &well::WellSpec::omega0)
      .def_readonly("kappa", &well::WellSpec::kappa);
  m.def("make_well", &well::make_well, py::arg("sigma1"), py::arg("sigma2"));
  m.def("default_well", &well::default_well);
  m.def("potential", &well::potential, py::arg("spec"), py::arg("z"));
  m.def("eigenfunction", &well::eigenfunction, py::arg("spec"), py::arg("which"), py::arg("z"));

  m.def("supermode_transform", &coupler::supermode_transform, py::arg("b1"), py::arg("b2"));
  m.def(
      "coupler_selectivity",
      [](double kappa_e, double eps, cdouble V, const std::string& profile, const twolevel::Vec2& b0,
         double z_final) {
        coupler::CouplerSpec spec{kappa_e, eps, V, coupler::profile_from_string(profile)};
        return coupler::mode_selectivity(coupler::propagate_coupler(spec, b0, z_final, 1.0));
      },
      py::arg("kappa_e"), py::arg("eps"), py::arg("V"), py::arg("profile"), py::arg("b0"),
      py::arg("z_final"));
}
