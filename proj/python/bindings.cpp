#include "actionforge/cases.hpp"

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numbers>

namespace py = pybind11;
using namespace actionforge;

namespace {

ParamMap to_params(const py::dict& d) {
    ParamMap out;
    for (const auto& [k, v] : d) out[py::str(k)] = parse_rational(std::string(py::str(v)));
    return out;
}

py::array field_to_array(const Field& f, bool complex_data) {
    Field p = to_physical(f);
    std::vector<py::ssize_t> shape(p.grid.dim, p.grid.n);
    if (complex_data) {
        py::array_t<std::complex<double>> out(shape);
        std::copy(p.values.begin(), p.values.end(), out.mutable_data());
        return out;
    }
    py::array_t<double> out(shape);
    double* dst = out.mutable_data();
    for (std::size_t i = 0; i < p.size(); ++i) dst[i] = p.values[i].real();
    return out;
}

Field array_to_field(const py::array& a, double length) {
    auto c = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>::ensure(a);
    if (!c) throw std::invalid_argument("expected a numeric array");
    int dim = static_cast<int>(c.ndim());
    if (dim != 1 && dim != 3) throw std::invalid_argument("fields must be 1D or 3D arrays");
    int n = static_cast<int>(c.shape(0));
    for (int axis = 1; axis < dim; ++axis) {
        if (c.shape(axis) != n) throw std::invalid_argument("3D fields must be cubic");
    }
    Grid g(dim, n, length);
    Field f(g);
    std::copy(c.data(), c.data() + c.size(), f.values.begin());
    return f;
}

py::dict report_dict(const CheckReport& r) {
    py::dict d;
    d["name"] = r.name;
    d["kind"] = to_string(r.kind);
    d["metric"] = r.metric;
    d["tolerance"] = r.tolerance;
    d["pass"] = r.pass;
    d["details"] = r.details;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Exact causal solutions and action diagnostics for linear constant-coefficient PDEs";

    py::class_<DiffOp>(m, "Operator")
        .def(py::init([](const std::string& text, int dim, const py::dict& params) {
                 return parse_diffop(text, dim, to_params(params));
             }),
             py::arg("text"), py::arg("dim") = 1, py::arg("params") = py::dict())
        .def_property_readonly("dim", &DiffOp::dim)
        .def_property_readonly("time_order", &DiffOp::time_order)
        .def_property_readonly("is_real", &DiffOp::is_real)
        .def("adjoint", [](const DiffOp& a) { return adjoint(a); })
        .def("time_reverse", [](const DiffOp& a) { return time_reverse(a); })
        .def("normal", [](const DiffOp& a) { return normal_op(a); })
        .def("symbol", [](const DiffOp& a, cplx s, const std::vector<double>& k) { return symbol_eval(a, s, k); },
             py::arg("s"), py::arg("k"))
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def(py::self * py::self)
        .def(py::self == py::self)
        .def("__str__", [](const DiffOp& a) { return to_string(a); })
        .def("__repr__", [](const DiffOp& a) { return "Operator('" + to_string(a) + "')"; });

    m.def("exact_divide", [](const DiffOp& n, const DiffOp& d) { return exact_divide(n, d); },
          "Exact quotient q with q d = n, or None", py::arg("n"), py::arg("d"));

    m.def("periodic_gaussian",
          [](int n, double center, double sigma, double amp, double length, int dim) {
              return field_to_array(periodic_gaussian(Grid(dim, n, length), center, sigma, amp), false);
          },
          py::arg("n"), py::arg("center"), py::arg("sigma"), py::arg("amp") = 1.0,
          py::arg("length") = 2 * std::numbers::pi, py::arg("dim") = 1);

    py::class_<Trajectory>(m, "Trajectory")
        .def_property_readonly("times", [](const Trajectory& t) { return t.times; })
        .def_property_readonly("orders", [](const Trajectory& t) { return t.orders; })
        .def("__len__", &Trajectory::size)
        .def("field", [](const Trajectory& t, std::size_t i, int order) {
                 return field_to_array(t.derivative(i, order), t.complex_data);
             },
             "d_t^order u at sample i", py::arg("i"), py::arg("order") = 0);

    m.def("solve_ic",
          [](const DiffOp& a, const std::vector<py::array>& ics, const std::vector<double>& times, double length,
             int orders, bool complex_data) {
              std::vector<Field> fields;
              for (const auto& ic : ics) fields.push_back(array_to_field(ic, length));
              if (fields.empty()) throw std::invalid_argument("no initial fields");
              SolveOptions opts;
              opts.orders = orders;
              opts.complex_data = complex_data;
              py::gil_scoped_release release;
              return solve_causal(a, source_from_ic(a, fields), fields.front().grid, times, opts);
          },
          "Causal solution of A u = 0 with initial data u_0 .. u_{n-1}", py::arg("op"), py::arg("ics"),
          py::arg("times"), py::arg("length") = 2 * std::numbers::pi, py::arg("orders") = 0,
          py::arg("complex_data") = false);

    m.def("describe_density",
          [](const std::string& spec, const DiffOp& a, const py::dict& params) {
              return describe(density_from_spec(spec, a, to_params(params)));
          },
          py::arg("spec"), py::arg("op"), py::arg("params") = py::dict());

    m.def("hamiltonian_trace",
          [](const std::string& spec, const Trajectory& traj, const py::dict& params) {
              Density h = hamiltonian(density_from_spec(spec, traj.op, to_params(params)));
              TraceSeries s = hamiltonian_trace(h, traj, spec);
              return py::make_tuple(s.times, s.values);
          },
          "Sample times and values of the Hamiltonian of a density spec", py::arg("spec"), py::arg("trajectory"),
          py::arg("params") = py::dict());

    m.def("list_cases", [] {
        std::vector<std::string> names;
        for (const auto& c : builtin_cases()) names.push_back(c.name);
        return names;
    });
    m.def("case_json", [](const std::string& name) { return case_to_json(find_case(name)); }, py::arg("name"));
    m.def("solve_case",
          [](const std::string& name, int samples) {
              Case c = find_case(name);
              if (samples > 0) c.samples = samples;
              py::gil_scoped_release release;
              return solve_case(c, uniform_times(c.t_max, c.samples), required_orders(c));
          },
          py::arg("name"), py::arg("samples") = 0);
    m.def("verify_case",
          [](const std::string& name, const std::string& config_patch) {
              Case c = find_case(name);
              if (!config_patch.empty()) c = merge_config(c, config_patch);
              CaseResult r;
              {
                  py::gil_scoped_release release;
                  r = run_checks(c);
              }
              py::list reports;
              for (const auto& rep : r.reports) reports.append(report_dict(rep));
              return reports;
          },
          "Run the declared checks of a builtin case, optionally patched by a JSON string", py::arg("name"),
          py::arg("config_patch") = "");

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const std::out_of_range& e) {
            PyErr_SetString(PyExc_KeyError, e.what());
        }
    });
}
