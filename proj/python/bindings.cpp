#include "adacont/app.hpp"
#include "adacont/checks.hpp"
#include "adacont/ddc2d.hpp"
#include "adacont/krylov.hpp"
#include "adacont/snapshot.hpp"
#include "adacont/stepper.hpp"
#include "adacont/toy.hpp"
#include "adacont/waleffe.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace adacont;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_array(const Vec& v) {
    const std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(v.size())}, strides{sizeof(double)};
    return py::array_t<double>(shape, strides, v.data());
}

std::span<const double> view(const Array& a, const Problem& p, const char* what) {
    if (a.ndim() != 1 || static_cast<std::size_t>(a.size()) != p.size())
        throw py::value_error(std::string(what) + " must be a 1-d array of length " + std::to_string(p.size()));
    return {a.data(), static_cast<std::size_t>(a.size())};
}

Vec to_vec(const Array& a) { return Vec(a.data(), a.data() + a.size()); }

py::dict point_dict(const BranchPoint& p, bool with_state) {
    py::dict d;
    d["lambda"] = p.lambda;
    d["norm"] = p.norm;
    d["newton_iters"] = p.stats.newton_iterations;
    d["krylov_iters_total"] = p.stats.krylov_iterations_total;
    d["delta_lambda"] = p.delta_lambda;
    d["mode"] = p.mode;
    if (with_state) d["state"] = to_array(p.state);
    return d;
}

py::dict check_dict(const CheckResult& r) {
    py::dict d;
    d["name"] = r.name;
    d["passed"] = r.passed;
    d["measured"] = r.measured;
    d["tolerance"] = r.tolerance;
    d["seconds"] = r.seconds;
    d["detail"] = r.detail;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Stepper-preconditioned Newton-Krylov continuation";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SnapshotError>(m, "SnapshotError", PyExc_IOError);
    py::register_exception<SolverFailure>(m, "SolverFailure", PyExc_RuntimeError);

    py::class_<PreconditionerSpec>(m, "PreconditionerSpec")
        .def(py::init([](const std::vector<std::tuple<std::string, double, bool>>& blocks) {
                 std::vector<PreconditionerBlock> b;
                 for (const auto& [name, dt, follows] : blocks) b.push_back({name, dt, follows});
                 return PreconditionerSpec(std::move(b));
             }),
             py::arg("blocks"), "List of (block name, delta_t, follows_parameter).")
        .def_static(
            "uniform", [](const Problem& p, double dt) { return PreconditionerSpec::uniform(p.layout(), dt); },
            py::arg("problem"), py::arg("delta_t"))
        .def_property_readonly("blocks", [](const PreconditionerSpec& s) {
            std::vector<std::tuple<std::string, double, bool>> out;
            for (const auto& b : s.blocks()) out.emplace_back(b.name, b.delta_t, b.follows_parameter);
            return out;
        });

    py::class_<Problem>(m, "Problem")
        .def_property_readonly("name", &Problem::name)
        .def_property_readonly("size", &Problem::size)
        .def_property("parameter", &Problem::parameter, &Problem::set_parameter)
        .def_property_readonly("parameter_name", &Problem::parameter_name)
        .def_property_readonly("parameters", &Problem::parameters)
        .def_property_readonly("layout", [](const Problem& p) { return p.layout().describe(); })
        .def_property_readonly("blocks", [](const Problem& p) {
            std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
            for (const auto& b : p.layout().blocks()) out.emplace_back(b.name, b.offset, b.size);
            return out;
        })
        .def("diagnostic", [](const Problem& p, const Array& s) { return p.diagnostic(view(s, p, "state")); })
        .def("eval_N",
             [](Problem& p, const Array& s) {
                 Vec out(p.size());
                 p.eval_N(view(s, p, "state"), out);
                 return to_array(out);
             })
        .def("apply_L", [](Problem& p, const Array& s) {
            Vec out(p.size());
            p.apply_L(view(s, p, "x"), out);
            return to_array(out);
        });

    py::class_<ToyProblem, Problem>(m, "ToyProblem")
        .def(py::init([](const std::string& kind, double lambda, double linear, std::size_t n) {
                 return ToyProblem(parse_toy_kind(kind), lambda, linear, n);
             }),
             py::arg("kind") = "sqrt", py::arg("lam") = 0.0, py::arg("linear") = 0.0, py::arg("n") = 0);

    py::class_<WaleffeProblem, Problem>(m, "WaleffeProblem")
        .def(py::init([](double re, double alpha, std::size_t ny, std::size_t nz, double lz) {
                 return WaleffeProblem(WaleffeParams{re, alpha, ny, nz, lz});
             }),
             py::arg("re") = 100.0, py::arg("alpha") = 0.5, py::arg("ny") = 32, py::arg("nz") = 32,
             py::arg("lz") = WaleffeParams{}.lz)
        .def("laminar_state", [](const WaleffeProblem& p) { return to_array(p.laminar_state()); })
        .def("n_u", [](const WaleffeProblem& p, const Array& s) { return p.n_u(view(s, p, "state")); })
        .def(
            "random_state", [](const WaleffeProblem& p, std::uint64_t seed, double amp) {
                return to_array(p.random_state(seed, amp));
            },
            py::arg("seed"), py::arg("amplitude") = 1.0)
        .def("default_preconditioner", &WaleffeProblem::default_preconditioner, py::arg("delta_t2") = 2.0);

    py::class_<DdcProblem, Problem>(m, "DdcProblem")
        .def(py::init([](double ra, double pr, double tau, std::size_t nx, std::size_t nz, double lx) {
                 return DdcProblem(DdcParams{ra, pr, tau, nx, nz, lx});
             }),
             py::arg("ra") = 2000.0, py::arg("pr") = 1.0, py::arg("tau") = 1.0 / 11.0, py::arg("nx") = 48,
             py::arg("nz") = 48, py::arg("lx") = 1.0)
        .def("conduction_state", [](const DdcProblem& p) { return to_array(p.conduction_state()); })
        .def("perturbed_conduction", [](const DdcProblem& p, double a) { return to_array(p.perturbed_conduction(a)); })
        .def(
            "random_state", [](const DdcProblem& p, std::uint64_t seed, double amp) {
                return to_array(p.random_state(seed, amp));
            },
            py::arg("seed"), py::arg("amplitude") = 1.0)
        .def("kinetic_energy", [](const DdcProblem& p, const Array& s) { return p.kinetic_energy(view(s, p, "state")); })
        .def("divergence",
             [](const DdcProblem& p, const Array& s) { return to_array(p.divergence(view(s, p, "state"))); })
        .def("integrate", [](DdcProblem& p, const Array& s, double dt, int steps) {
            return to_array(p.integrate(view(s, p, "state"), dt, steps));
        });

    m.def(
        "residual_action",
        [](Problem& p, const PreconditionerSpec& spec, const Array& s) {
            return to_array(residual_action(p, spec, view(s, p, "state")));
        },
        py::arg("problem"), py::arg("spec"), py::arg("state"), "One preconditioned step minus the state.");
    m.def(
        "jacobian_action",
        [](Problem& p, const PreconditionerSpec& spec, const Array& base, const Array& dir) {
            return to_array(jacobian_action(p, spec, view(base, p, "base"), view(dir, p, "direction")));
        },
        py::arg("problem"), py::arg("spec"), py::arg("base"), py::arg("direction"));
    m.def(
        "convergence_metric",
        [](Problem& p, const PreconditionerSpec& spec, const Array& s) {
            return convergence_metric(p, spec, view(s, p, "state"));
        },
        py::arg("problem"), py::arg("spec"), py::arg("state"));
    m.def("assembled_rhs",
          [](Problem& p, const Array& s) { return to_array(assembled_rhs(p, view(s, p, "state"))); });

    m.def(
        "bicgstab",
        [](const py::object& a, const Array& b, double rel_tol, int max_iters) {
            const std::size_t n = static_cast<std::size_t>(b.size());
            LinearOperator op;
            if (py::isinstance<py::array>(a)) {
                const Array mat = a.cast<Array>();
                if (mat.ndim() != 2 || mat.shape(0) != static_cast<py::ssize_t>(n) || mat.shape(1) != mat.shape(0))
                    throw py::value_error("matrix must be square and match b");
                op = [mat, n](std::span<const double> x, std::span<double> y) {
                    const double* d = mat.data();
                    for (std::size_t i = 0; i < n; ++i) {
                        double s = 0.0;
                        for (std::size_t j = 0; j < n; ++j) s += d[i * n + j] * x[j];
                        y[i] = s;
                    }
                };
            } else {
                op = [a, n](std::span<const double> x, std::span<double> y) {
                    py::gil_scoped_acquire gil;
                    const Array r = a(to_array(Vec(x.begin(), x.end()))).cast<Array>();
                    if (static_cast<std::size_t>(r.size()) != n) throw py::value_error("operator returned wrong size");
                    std::copy(r.data(), r.data() + n, y.begin());
                };
            }
            KrylovConfig cfg;
            cfg.rel_tol = rel_tol;
            cfg.max_iters = max_iters;
            const auto res = bicgstab(op, std::span<const double>(b.data(), n), cfg);
            py::dict d;
            d["x"] = to_array(res.x);
            d["iterations"] = res.iterations;
            d["relative_residual"] = res.relative_residual;
            d["status"] = to_string(res.status);
            return d;
        },
        py::arg("A"), py::arg("b"), py::arg("rel_tol") = 1e-2, py::arg("max_iters") = 5000,
        "Solve A x = b; A is a square array or a callable x -> A x.");

    m.def(
        "trace_branch",
        [](Problem& p, const PreconditionerSpec& spec, const Array& state, double lambda, const py::dict& config,
           std::optional<double> lambda_min, std::optional<double> lambda_max, int max_points, bool states) {
            const auto dumps = py::module_::import("json").attr("dumps");
            const nlohmann::json j = nlohmann::json::parse(dumps(config).cast<std::string>());
            nlohmann::json full{{"problem", {{"name", "toy"}}}, {"continuation", j}};
            ContinuationConfig cfg = parse_run_config(full).continuation;
            BranchPoint seed;
            seed.state = to_vec(state);
            seed.lambda = lambda;
            p.set_parameter(lambda);
            seed.norm = branch_norm(p, seed.state, cfg.norm);
            StopRule stop{lambda_min, lambda_max, max_points};
            TraceResult res;
            {
                py::gil_scoped_release release;
                res = trace_branch(p, spec, seed, cfg, stop);
            }
            py::list pts;
            for (const auto& q : res.points) pts.append(point_dict(q, states));
            py::dict d;
            d["points"] = pts;
            d["status"] = to_string(res.status);
            d["message"] = res.message;
            d["failures"] = res.failures;
            return d;
        },
        py::arg("problem"), py::arg("spec"), py::arg("state"), py::arg("lam"), py::arg("config") = py::dict(),
        py::arg("lambda_min") = py::none(), py::arg("lambda_max") = py::none(), py::arg("max_points") = 100,
        py::arg("states") = false, "Trace a branch from a seed; config holds continuation settings.");

    m.def(
        "write_snapshot",
        [](const std::filesystem::path& path, const Problem& p, const Array& s) { write_snapshot(path, p, view(s, p, "state")); },
        py::arg("path"), py::arg("problem"), py::arg("state"));
    m.def("read_snapshot", [](const std::filesystem::path& path) {
        const Snapshot s = read_snapshot(path);
        py::dict d;
        d["header"] = s.header;
        d["problem"] = s.problem;
        d["parameters"] = s.parameters;
        d["layout"] = s.layout.describe();
        d["state"] = to_array(s.state);
        return d;
    });

    m.def(
        "run",
        [](const std::string& config_json) {
            const RunConfig cfg = parse_run_config(nlohmann::json::parse(config_json));
            RunSummary s;
            {
                py::gil_scoped_release release;
                s = run(cfg);
            }
            py::dict d;
            d["status"] = to_string(s.status);
            d["message"] = s.message;
            d["points"] = s.points;
            d["failures"] = s.failures;
            return d;
        },
        py::arg("config_json"), "Run a continuation from a JSON config string; writes branch.csv.");
    m.def(
        "sweep",
        [](const std::string& config_json, std::optional<std::vector<double>> delta_t) {
            const RunConfig cfg = parse_run_config(nlohmann::json::parse(config_json));
            std::vector<SweepRow> rows;
            {
                py::gil_scoped_release release;
                rows = sweep(cfg, delta_t ? *delta_t : cfg.sweep.delta_t);
            }
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["delta_t"] = r.delta_t;
                d["status"] = r.status;
                d["points_completed"] = r.points_completed;
                d["eta_mean"] = r.eta_mean;
                d["eta_std"] = r.eta_std;
                d["eta_min"] = r.eta_min;
                d["eta_max"] = r.eta_max;
                d["eta_total"] = r.eta_total;
                out.append(d);
            }
            return out;
        },
        py::arg("config_json"), py::arg("delta_t") = py::none());
    m.def(
        "verify",
        [](const std::filesystem::path& work_dir) {
            std::vector<CheckResult> rs;
            {
                py::gil_scoped_release release;
                for (auto c : {check_laminar_fixed_point, check_conduction_fixed_point, check_jacobian_differences,
                               check_preconditioner_limits, check_bicgstab_dense, check_continuation_toys,
                               check_step_schedule, check_laminar_branch})
                    rs.push_back(timed(c));
                rs.push_back(timed([&] { return check_snapshot_round_trip(work_dir); }));
            }
            py::list out;
            for (const auto& r : rs) out.append(check_dict(r));
            return out;
        },
        py::arg("work_dir"), "Run the fast oracle checks.");
}
