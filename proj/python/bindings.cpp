#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coag2d/config.hpp"
#include "coag2d/harness.hpp"
#include "coag2d/pde.hpp"
#include "coag2d/potential.hpp"
#include "coag2d/sim.hpp"

namespace py = pybind11;
using namespace coag2d;

namespace {

ExperimentKind kind_arg(const std::string& s) { return experiment_kind_from_string(s); }

py::dict snapshot_dict(const Snapshot& s) {
  const auto& es = s.cfg.entries();
  std::vector<double> xy;
  std::vector<std::int64_t> masses;
  xy.reserve(2 * es.size());
  masses.reserve(es.size());
  for (const auto& e : es) {
    xy.push_back(e.particle.position.x);
    xy.push_back(e.particle.position.y);
    masses.push_back(e.particle.mass);
  }
  py::dict d;
  d["t"] = s.t;
  d["positions"] = py::array_t<double>(std::vector<py::ssize_t>{py::ssize_t(es.size()), 2}, xy.data());
  d["masses"] = py::array_t<std::int64_t>(std::vector<py::ssize_t>{py::ssize_t(es.size())}, masses.data());
  return d;
}

py::dict simulate(const ExperimentConfig& cfg) {
  SimConfig sim = cfg.sim;
  sim.seed = cfg.seed;
  RunRecord rec;
  {
    py::gil_scoped_release nogil;
    rec = run(sim, cfg.model.initial, cfg.model.ks, cfg.model.mf, cfg.snapshot_times);
  }
  py::list events;
  for (const auto& e : rec.events)
    events.append(py::dict(py::arg("t") = e.t, py::arg("i") = e.i, py::arg("j") = e.j, py::arg("m_i") = e.m_i,
                           py::arg("m_j") = e.m_j, py::arg("kept") = e.kept_i ? "i" : "j"));
  py::list snaps;
  for (const auto& s : rec.snapshots) snaps.append(snapshot_dict(s));
  py::dict d;
  d["seed"] = rec.seed;
  d["initial_count"] = rec.initial_count;
  d["initial_mass"] = rec.initial_mass;
  d["events"] = events;
  d["snapshots"] = snaps;
  return d;
}

py::list solve_pde(const ExperimentConfig& cfg) {
  const auto& mf = cfg.model.mf;
  const PdeConfig& pc = cfg.pde;
  MassDensityField f0;
  if (pc.mode == PdeMode::homogeneous) {
    std::vector<double> v;
    for (Mass n = 1; n <= cfg.model.initial.max_mass(); ++n) v.push_back(cfg.model.initial.mass_integral(n));
    f0 = MassDensityField::homogeneous(v, pc.M_max);
  } else {
    f0 = field_from_initial_data(cfg.model.initial, pc);
  }
  double T = cfg.sim.T;
  for (double t : cfg.snapshot_times) T = std::max(T, t);
  std::vector<MassDensityField> fields;
  {
    py::gil_scoped_release nogil;
    fields = solve(f0, pc, mf, BetaTable(mf, pc.M_max), T, cfg.snapshot_times);
  }
  py::list out;
  for (const auto& f : fields) {
    py::array_t<double> a({py::ssize_t(f.M_max), py::ssize_t(f.nx), py::ssize_t(f.nx)});
    std::copy(f.values.begin(), f.values.end(), a.mutable_data());
    py::dict d;
    d["t"] = f.t;
    d["L"] = f.L;
    d["hx"] = f.hx;
    d["f"] = a;
    d["M0"] = f.M0();
    d["total_mass"] = f.total_mass();
    d["overflow_mass"] = f.overflow_mass;
    out.append(d);
  }
  return out;
}

py::dict potential_limit(double tau, const std::vector<double>& eps_list, double k_radius, int grid_n, double R) {
  PotentialLimitReport rep;
  {
    py::gil_scoped_release nogil;
    rep = verify_potential_limit(KernelSpec::default_bump(), tau, eps_list, k_radius, PotentialGridSpec{R, grid_n});
  }
  py::list rows;
  for (const auto& r : rep.rows)
    rows.append(py::dict(py::arg("eps") = r.eps, py::arg("log_eps") = r.log_eps, py::arg("sup_error") = r.sup_error,
                         py::arg("lambda_eps") = r.lambda_eps, py::arg("factor") = r.factor,
                         py::arg("center") = r.center));
  py::dict d;
  d["tau"] = rep.tau;
  d["rows"] = rows;
  d["center_limit"] = rep.center_limit;
  d["lambda_limit"] = rep.lambda_limit;
  d["factor_limit"] = rep.factor_limit;
  d["expected_center"] = rep.expected_center();
  d["expected_lambda"] = rep.expected_lambda();
  d["fit_c"] = rep.fit_c;
  d["fit_r2"] = rep.fit_r2;
  d["sup_error_decreasing"] = rep.sup_error_decreasing;
  return d;
}

template <class F>
std::string json_report(const ExperimentConfig& cfg, F f) {
  py::gil_scoped_release nogil;
  return f(cfg).to_json();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coagulating planar Brownian particles: particle system, kinetic PDE and rate potential";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<ExperimentConfig>(m, "Config")
      .def_static("from_string", &parse_config_string, py::arg("text"))
      .def_static("from_file", &load_config, py::arg("path"))
      .def_static("default", [](const std::string& kind) { return default_config(kind_arg(kind)); },
                  py::arg("kind") = "sim_only")
      .def("resolved_text", &ExperimentConfig::resolved_text)
      .def("hash", &ExperimentConfig::hash)
      .def_property_readonly("kind", [](const ExperimentConfig& c) { return to_string(c.kind); })
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("ensemble", &ExperimentConfig::ensemble)
      .def_readwrite("threads", &ExperimentConfig::threads)
      .def("__repr__", [](const ExperimentConfig& c) {
        return "<Config kind=" + to_string(c.kind) + " hash=" + std::to_string(c.hash()) + ">";
      });

  m.def("beta", &beta_from, py::arg("alpha"), py::arg("d_sum"),
        "Effective coagulation rate 2 pi D alpha / (2 pi D + alpha).");
  m.def("log_scale", &log_scale, py::arg("eps"));
  m.def("initial_particle_count", &initial_particle_count, py::arg("Z"), py::arg("eps"));

  m.def("simulate", &simulate, py::arg("config"));
  m.def("solve_pde", &solve_pde, py::arg("config"));
  m.def("potential_limit", &potential_limit, py::arg("tau"), py::arg("eps_list"), py::arg("k_radius") = 1.0,
        py::arg("grid_n") = 64, py::arg("R") = 1.0);

  m.def("kinetic_limit_json", [](const ExperimentConfig& c) { return json_report(c, run_kinetic_limit); });
  m.def("stosszahlansatz_json", [](const ExperimentConfig& c) { return json_report(c, run_stosszahlansatz); });
  m.def("potential_sweep_json", [](const ExperimentConfig& c) { return json_report(c, run_potential_sweep); });
  m.def("mass_radius_json", [](const ExperimentConfig& c) { return json_report(c, run_mass_radius_comparison); });
}
