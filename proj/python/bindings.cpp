#include "grbsde/analysis.hpp"
#include "grbsde/config.hpp"
#include "grbsde/experiment.hpp"
#include "grbsde/gbsde.hpp"
#include "grbsde/model.hpp"
#include "grbsde/reflected.hpp"
#include "grbsde/scenario.hpp"
#include "grbsde/stopping.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace grbsde;

namespace {

std::vector<double> to_list(const NodeValues& x) { return {x.values().begin(), x.values().end()}; }

Side parse_side(const std::string& s) {
    if (s == "lower") return Side::lower;
    if (s == "upper") return Side::upper;
    throw Error(ErrorCode::config_error, "side must be 'lower' or 'upper', got '" + s + "'");
}

/// A parsed configuration with its tree and tabulated problem.
class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg)
        : cfg_(std::move(cfg)), tree_(build_tree(cfg_.tree)), data_(cfg_.problem.instantiate(tree_)) {}

    std::size_t size() const { return tree_.size(); }
    std::size_t steps() const { return tree_.steps(); }
    std::size_t branching() const { return tree_.branching(); }
    std::vector<double> times() const { return tree_.grid().instants(); }

    py::dict nodes() const {
        std::vector<std::size_t> layer, parent;
        std::vector<double> prob, a, da;
        for (std::size_t u = 0; u < tree_.size(); ++u) {
            const auto& n = tree_.node(u);
            layer.push_back(n.layer);
            parent.push_back(n.parent == npos ? u : n.parent);
            prob.push_back(n.prob);
            a.push_back(n.a);
            da.push_back(n.da);
        }
        py::dict d;
        d["layer"] = layer;
        d["parent"] = parent;
        d["prob"] = prob;
        d["A"] = a;
        d["dA"] = da;
        return d;
    }

    std::vector<double> xi() const { return to_list(data_.xi); }

    std::optional<std::vector<double>> barrier() const {
        if (!data_.barrier) return std::nullopt;
        return to_list(data_.barrier->level);
    }

    py::dict solve() const {
        const auto sol = solve_gbsde(tree_, data_);
        py::dict d;
        d["Y"] = to_list(sol.y);
        d["Z"] = sol.z;
        d["V"] = sol.v;
        d["dM"] = to_list(sol.dm);
        return d;
    }

    py::dict penalize(double n) const {
        const auto pen = solve_penalized(tree_, data_, n);
        py::dict d;
        d["n"] = pen.n;
        d["Y"] = to_list(pen.sol.y);
        d["K"] = to_list(pen.K);
        return d;
    }

    py::dict reflect(std::optional<std::string> side) const {
        const Side s = side ? parse_side(*side) : (data_.barrier ? data_.barrier->side : Side::lower);
        auto sol = solve_reflected_direct(tree_, data_, s);
        apply_decomposition(tree_, data_, sol);
        py::dict d;
        d["Y"] = to_list(sol.base.y);
        d["K"] = to_list(sol.K);
        d["dK"] = to_list(sol.dK);
        d["dKc"] = to_list(sol.dKc);
        d["dKd"] = to_list(sol.dKd);
        d["skorokhod_residual"] = sol.skorokhod_residual;
        d["snell"] = to_list(snell_envelope(tree_, data_, sol.base));
        return d;
    }

    py::dict stopping(const std::string& method, std::size_t start_layer) const {
        const Side s = data_.barrier ? data_.barrier->side : Side::lower;
        const auto sol = solve_reflected_direct(tree_, data_, s);
        const auto rep = verify_representation(tree_, data_, sol, parse_method(method), start_layer,
                                               cfg_.run.p_list, cfg_.run.enumeration_cap, cfg_.run.tol);
        py::list nodes;
        for (const auto& r : rep.nodes) {
            py::dict row;
            row["node"] = r.node;
            row["Y"] = r.y;
            row["best"] = r.best;
            row["gap"] = r.gap;
            row["policies"] = r.policies;
            nodes.append(row);
        }
        py::dict d;
        d["passed"] = rep.passed;
        d["max_gap"] = rep.max_gap;
        d["nodes"] = nodes;
        return d;
    }

    py::list check(std::size_t samples, std::uint64_t seed) const {
        const auto rep = check_assumptions(data_, tree_, samples, seed);
        py::list out;
        for (const auto& c : rep.checks) {
            py::dict row;
            row["id"] = c.id;
            row["passed"] = c.passed;
            row["max_violation"] = c.max_violation;
            row["description"] = c.description;
            out.append(row);
        }
        return out;
    }

    py::dict run(const std::string& subcommand, const std::string& out_dir, std::optional<std::uint64_t> seed) const {
        const auto res = run_experiment(cfg_, parse_subcommand(subcommand), out_dir, seed);
        py::list lines;
        for (const auto& l : res.lines) {
            lines.append(py::make_tuple(l.name, l.asserted ? (l.passed ? "PASS" : "FAIL") : "INFO", l.value));
        }
        py::dict d;
        d["exit_code"] = res.exit_code();
        d["lines"] = lines;
        d["files"] = res.files;
        return d;
    }

private:
    ExperimentConfig cfg_;
    ScenarioTree tree_;
    ProblemData data_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Reflected generalized BSDEs on finite scenario trees";

    static py::exception<Error> error(m, "GrbsdeError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            std::string msg = e.what();
            for (const auto& v : e.violations()) msg += "\n  " + v.pointer + ": " + v.message;
            py::set_error(error, msg.c_str());
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    m.def("format_real", &format_real, "17 significant digits, as written to CSV.");

    py::class_<Experiment>(m, "Experiment")
        .def_static("from_file", [](const std::string& path) { return Experiment(parse_config(path)); })
        .def_static("from_json", [](const std::string& text) { return Experiment(parse_config_text(text)); })
        .def_property_readonly("size", &Experiment::size)
        .def_property_readonly("steps", &Experiment::steps)
        .def_property_readonly("branching", &Experiment::branching)
        .def_property_readonly("times", &Experiment::times)
        .def_property_readonly("nodes", &Experiment::nodes)
        .def_property_readonly("xi", &Experiment::xi)
        .def_property_readonly("barrier", &Experiment::barrier)
        .def("solve", &Experiment::solve)
        .def("penalize", &Experiment::penalize, py::arg("n"))
        .def("reflect", &Experiment::reflect, py::arg("side") = py::none())
        .def("stopping", &Experiment::stopping, py::arg("method") = "enumerate", py::arg("start_layer") = 0)
        .def("check", &Experiment::check, py::arg("samples") = 1000, py::arg("seed") = 0)
        .def("run", &Experiment::run, py::arg("subcommand"), py::arg("out_dir"), py::arg("seed") = py::none());
}
