#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "kdv/checks.hpp"
#include "kdv/cli.hpp"
#include "kdv/config.hpp"
#include "kdv/error.hpp"
#include "kdv/experiments.hpp"
#include "kdv/network.hpp"
#include "kdv/physics.hpp"
#include "kdv/spectral.hpp"

namespace py = pybind11;
using namespace kdv;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

config::RunConfig make_config(const std::map<std::string, std::string>& overrides) {
  config::RunConfig cfg;
  for (const auto& [k, v] : overrides) config::set(cfg, k, v);
  cfg.validate();
  return cfg;
}

std::vector<nn::Point> points_of(const Array& t, const Array& x) {
  if (t.size() != x.size()) throw InvalidArgument("t and x must have the same size");
  std::vector<nn::Point> pts(static_cast<std::size_t>(t.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {t.data()[i], x.data()[i]};
  return pts;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

py::dict jets_dict(const std::vector<nn::Jet>& jets) {
  std::vector<double> v, vt, vx, vxx, vxxx;
  for (const auto& j : jets) {
    v.push_back(j.v);
    vt.push_back(j.vt);
    vx.push_back(j.vx);
    vxx.push_back(j.vxx);
    vxxx.push_back(j.vxxx);
  }
  py::dict d;
  d["u"] = to_array(v);
  d["u_t"] = to_array(vt);
  d["u_x"] = to_array(vx);
  d["u_xx"] = to_array(vxx);
  d["u_xxx"] = to_array(vxxx);
  return d;
}

physics::UniformGrid grid_of(const Array& u, double a, double b) {
  physics::UniformGrid g{a, b, static_cast<std::size_t>(u.size())};
  g.validate();
  return g;
}

std::span<const double> span_of(const Array& a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structure-preserving PINN for the Korteweg-de Vries equation.";

  // Translators run most recent first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  m.def("soliton", py::vectorize(&physics::soliton), py::arg("t"), py::arg("x"),
        py::arg("c") = 1.0, py::arg("x0") = 0.0);
  m.def("hirota_two_soliton", py::vectorize(&physics::hirota_two_soliton), py::arg("t"),
        py::arg("x"), py::arg("c1") = 1.0, py::arg("c2") = 0.3, py::arg("x1") = -5.0,
        py::arg("x2") = 5.0);
  m.def("two_soliton_ic", py::vectorize(&physics::two_soliton_ic), py::arg("x"),
        py::arg("c1") = 1.0, py::arg("c2") = 0.3, py::arg("x1") = -5.0, py::arg("x2") = 5.0);

  m.def(
      "residual",
      [](double u, double ut, double ux, double uxx, double uxxx, double eta, double mu) {
        return physics::residual(nn::Jet{u, ut, ux, uxx, uxxx}, physics::KdvParams{eta, mu});
      },
      py::arg("u"), py::arg("u_t"), py::arg("u_x"), py::arg("u_xx"), py::arg("u_xxx"),
      py::arg("eta") = 6.0, py::arg("mu") = 1.0);

  m.def(
      "mass", [](const Array& u, double a, double b) { return physics::mass(span_of(u), grid_of(u, a, b)); },
      py::arg("u"), py::arg("a"), py::arg("b"));
  m.def(
      "energy",
      [](const Array& u, const Array& ux, double a, double b, double eta, double mu) {
        return physics::energy(span_of(u), span_of(ux), grid_of(u, a, b),
                               physics::KdvParams{eta, mu});
      },
      py::arg("u"), py::arg("u_x"), py::arg("a"), py::arg("b"), py::arg("eta") = 6.0,
      py::arg("mu") = 1.0);

  py::class_<nn::Mlp>(m, "Mlp")
      .def_static(
          "init",
          [](std::uint64_t seed, int depth, int width, const std::string& activation,
             const std::string& init) {
            if (activation != "sine" && activation != "tanh") {
              throw InvalidArgument("unknown activation '" + activation + "'");
            }
            const auto act = activation == "tanh" ? nn::Activation::tanh : nn::Activation::sine;
            const auto scheme = nn::parse_init(init);
            if (!scheme) throw InvalidArgument("unknown init '" + init + "'");
            return nn::Mlp::init(seed, depth, width, act, *scheme);
          },
          py::arg("seed"), py::arg("depth"), py::arg("width"), py::arg("activation") = "sine",
          py::arg("init") = "pytorch")
      .def_static("load", [](const std::filesystem::path& p) { return nn::Mlp::load(p); })
      .def("save", &nn::Mlp::save)
      .def_property_readonly("depth", &nn::Mlp::depth)
      .def_property_readonly("width", &nn::Mlp::width)
      .def_property_readonly("parameter_count",
                             py::overload_cast<>(&nn::Mlp::parameter_count, py::const_))
      .def("parameters",
           [](const nn::Mlp& n) {
             const Eigen::VectorXd p = n.flatten();
             return to_array(std::vector<double>(p.data(), p.data() + p.size()));
           })
      .def("set_parameters", [](nn::Mlp& n, const Array& p) { n.unflatten(span_of(p)); })
      .def("forward",
           [](const nn::Mlp& n, const Array& t, const Array& x) {
             return to_array(n.forward(points_of(t, x)));
           })
      .def("forward_jets", [](const nn::Mlp& n, const Array& t, const Array& x) {
        return jets_dict(n.forward_jets(points_of(t, x)));
      });

  m.def(
      "config_entries",
      [](const std::map<std::string, std::string>& overrides) {
        return config::entries(make_config(overrides));
      },
      py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "run_case",
      [](const std::map<std::string, std::string>& overrides, const std::filesystem::path& dir) {
        const auto cfg = make_config(overrides);
        py::gil_scoped_release release;
        const auto art = experiments::run_case(cfg, dir);
        return std::make_pair(art.ok, art.failure);
      },
      py::arg("overrides"), py::arg("out_dir"),
      "Trains one network and writes its artifacts; returns (ok, failure).");

  m.def(
      "oracle",
      [](const std::string& case_name, const std::vector<double>& times, std::size_t n_modes,
         double dt) {
        const auto name = physics::parse_case(case_name);
        if (!name) throw InvalidArgument("unknown case '" + case_name + "'");
        const auto spec = physics::preset(*name);
        spectral::SpectralConfig sc;
        sc.n_modes = n_modes;
        sc.dt = dt;
        sc.x_min = spec.domain.x_min;
        sc.x_max = spec.domain.x_max;
        sc.validate();
        const auto sol =
            spectral::solve([&](double x) { return spec.initial(x); }, spec.params, sc, times);
        py::array_t<double> u({sol.snapshots().size(), n_modes});
        auto w = u.mutable_unchecked<2>();
        for (std::size_t i = 0; i < sol.snapshots().size(); ++i) {
          for (std::size_t j = 0; j < n_modes; ++j) w(i, j) = sol.snapshots()[i].u[j];
        }
        return py::make_tuple(to_array(sol.grid()), u);
      },
      py::arg("case"), py::arg("times"), py::arg("n_modes") = 512, py::arg("dt") = 1e-4,
      "Spectral reference: returns (x, u) with one row of u per requested time.");

  m.def("property_checks", [](std::uint64_t seed) {
    std::vector<std::tuple<std::string, bool, std::string>> out;
    for (const auto& o : checks::property_suite(seed)) out.emplace_back(o.name, o.passed, o.detail);
    return out;
  }, py::arg("seed") = 20240611);

  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs kdv-spinn in-process; returns (exit code, stdout, stderr).");
}
