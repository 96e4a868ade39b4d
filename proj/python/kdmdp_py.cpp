#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kdmdp/baseline.hpp"
#include "kdmdp/dump.hpp"
#include "kdmdp/mc.hpp"
#include "kdmdp/rover.hpp"
#include "kdmdp/solver.hpp"

namespace py = pybind11;
using namespace kdmdp;

namespace {

int state_of(const HybridMdp& m, const std::string& name) {
    const auto s = m.state_index(name);
    if (!s) throw DomainError("unknown discrete state '" + name + "'");
    return *s;
}

RewardVariant variant_of(const std::string& v) {
    if (v == "pwc") return RewardVariant::pwc;
    if (v == "pwlc") return RewardVariant::pwlc;
    throw DomainError("variant must be 'pwc' or 'pwlc'");
}

py::list stats_rows(const std::vector<StageStats>& stats, const HybridMdp& m) {
    py::list out;
    for (const auto& s : stats)
        out.append(py::dict(py::arg("stage") = s.stage, py::arg("state") = m.discrete_states[static_cast<std::size_t>(s.state)],
                            py::arg("leaves") = s.leaves, py::arg("vectors") = s.vectors, py::arg("seconds") = s.seconds));
    return out;
}

/// Solver output bundled with the model it was computed for.
struct Solution {
    HybridMdp model;
    SolveResult result;

    int last_stage() const { return static_cast<int>(result.values.size()) - 1; }

    double value(const std::string& state, const std::vector<double>& x, std::optional<int> stage) const {
        return eval_value(result.values, state_of(model, state), x, stage.value_or(last_stage()));
    }

    std::string action(const std::string& state, const std::vector<double>& x, std::optional<int> steps_to_go) const {
        const int k = steps_to_go.value_or(last_stage());
        if (k < 1 || k > static_cast<int>(result.policies.size())) throw DomainError("no policy for that many steps to go");
        const auto d = result.policies[static_cast<std::size_t>(k - 1)].decide(state_of(model, state), x);
        return model.actions[static_cast<std::size_t>(d.action)];
    }
};

struct GridSolution {
    HybridMdp model;
    GridResult result;
};

} // namespace

PYBIND11_MODULE(_kdmdp, mod) {
    mod.doc() = "Exact structured dynamic programming for hybrid MDPs";
    mod.attr("__version__") = KDMDP_VERSION;

    py::register_exception<DomainError>(mod, "DomainError", PyExc_ValueError);
    py::register_exception<ParseError>(mod, "ParseError", PyExc_ValueError);
    py::register_exception<ModelError>(mod, "ModelError", PyExc_ValueError);
    py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<ResourceCapError>(mod, "ResourceCapError", PyExc_RuntimeError);

    py::class_<HybridMdp>(mod, "Model")
        .def_readonly("dims", &HybridMdp::dims)
        .def_readonly("discrete_states", &HybridMdp::discrete_states)
        .def_readonly("actions", &HybridMdp::actions)
        .def_readonly("horizon", &HybridMdp::horizon)
        .def_readonly("out_of_bounds_value", &HybridMdp::out_of_bounds_value)
        .def_readonly("metadata", &HybridMdp::metadata)
        .def("to_json", [](const HybridMdp& m, int indent) { return save_model(m, indent); }, py::arg("indent") = 1)
        .def("violations", [](const HybridMdp& m) {
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& v : validate(m)) out.emplace_back(v.path, v.message);
            return out;
        });

    mod.def("load_model", [](const std::string& text) { return load_model(text); }, py::arg("text"));
    mod.def("load_model_file", &load_model_file, py::arg("path"));

    mod.def(
        "generate_rover",
        [](const std::string& spec_path, std::optional<int> resolution, std::optional<std::string> variant, std::optional<int> horizon,
           std::optional<std::size_t> max_outcomes) {
            auto spec = load_domain_spec_file(spec_path);
            if (resolution) spec.resolution = *resolution;
            if (variant) spec.variant = variant_of(*variant);
            if (horizon) spec.horizon = *horizon;
            if (max_outcomes) spec.max_outcomes = *max_outcomes;
            return generate(spec);
        },
        py::arg("spec_path"), py::arg("resolution") = py::none(), py::arg("variant") = py::none(), py::arg("horizon") = py::none(),
        py::arg("max_outcomes") = py::none());

    mod.def("discretize_gaussian", &discretize_gaussian, py::arg("mean"), py::arg("std"), py::arg("resolution"));

    py::class_<Solution>(mod, "Solution")
        .def_property_readonly("model", [](const Solution& s) { return s.model; })
        .def_property_readonly("stages", [](const Solution& s) { return s.last_stage(); })
        .def_property_readonly("seconds", [](const Solution& s) { return s.result.seconds; })
        .def_property_readonly("peak_vectors", [](const Solution& s) { return s.result.peak_vectors; })
        .def_property_readonly("stats", [](const Solution& s) { return stats_rows(s.result.stats, s.model); })
        .def("value", &Solution::value, py::arg("state"), py::arg("point"), py::arg("stage") = py::none())
        .def("action", &Solution::action, py::arg("state"), py::arg("point"), py::arg("steps_to_go") = py::none())
        .def("leaf_count", [](const Solution& s, int stage) { return leaf_count(s.result.values.at(static_cast<std::size_t>(stage))); }, py::arg("stage"))
        .def("vector_count", [](const Solution& s, int stage) { return vector_count(s.result.values.at(static_cast<std::size_t>(stage))); }, py::arg("stage"))
        .def("leaf_csv", [](const Solution& s, const std::string& state, std::optional<int> stage) {
            const auto k = static_cast<std::size_t>(stage.value_or(s.last_stage()));
            return leaf_csv(s.result.values.at(k).states.at(static_cast<std::size_t>(state_of(s.model, state))));
        }, py::arg("state"), py::arg("stage") = py::none())
        .def("dump_values", [](const Solution& s) { return dump_values(s.result.values, s.model); })
        .def("dump_policies", [](const Solution& s) { return dump_policies(s.result.policies, s.model); })
        .def("stats_csv", [](const Solution& s) { return stats_csv(s.result.stats, s.model); });

    mod.def(
        "solve",
        [](const HybridMdp& m, int threads, std::optional<int> horizon, double prune_tol, std::size_t max_vectors, double time_budget) {
            SolveOptions o;
            o.threads = threads;
            o.horizon = horizon;
            o.prune_tol = prune_tol;
            o.max_vectors = max_vectors;
            o.time_budget_seconds = time_budget;
            py::gil_scoped_release release;
            return Solution{m, value_iteration(m, o)};
        },
        py::arg("model"), py::arg("threads") = 1, py::arg("horizon") = py::none(), py::arg("prune_tol") = kDefaultPruneTol,
        py::arg("max_vectors") = 0, py::arg("time_budget") = 0.0);

    py::class_<GridSolution>(mod, "GridSolution")
        .def_property_readonly("resolution", [](const GridSolution& g) { return g.result.values.resolution(); })
        .def_property_readonly("cells", [](const GridSolution& g) { return g.result.values.cells(); })
        .def_property_readonly("seconds", [](const GridSolution& g) { return g.result.seconds; })
        .def("value", [](const GridSolution& g, const std::string& state, const std::vector<double>& x, std::optional<int> stage) {
            return g.result.values.value(stage.value_or(g.result.values.last_stage()), state_of(g.model, state), x);
        }, py::arg("state"), py::arg("point"), py::arg("stage") = py::none());

    mod.def(
        "grid_solve",
        [](const HybridMdp& m, int resolution, int threads, std::size_t max_cells, double time_budget) {
            GridOptions o;
            o.threads = threads;
            o.max_cells = max_cells;
            o.time_budget_seconds = time_budget;
            py::gil_scoped_release release;
            return GridSolution{m, grid_value_iteration(m, resolution, o)};
        },
        py::arg("model"), py::arg("resolution"), py::arg("threads") = 1, py::arg("max_cells") = GridOptions{}.max_cells,
        py::arg("time_budget") = 0.0);

    mod.def(
        "simulate",
        [](const Solution& s, const std::string& state, const std::vector<double>& point, std::size_t episodes, std::uint64_t seed, int threads) {
            RolloutConfig cfg;
            cfg.start_state = state_of(s.model, state);
            cfg.start_point = point;
            cfg.episodes = episodes;
            cfg.seed = seed;
            cfg.threads = threads;
            RolloutResult r;
            {
                py::gil_scoped_release release;
                r = simulate(s.model, s.result.policies, cfg);
            }
            return py::dict(py::arg("mean") = r.mean, py::arg("stderr") = r.std_error, py::arg("episodes") = r.episodes, py::arg("seed") = r.seed);
        },
        py::arg("solution"), py::arg("state"), py::arg("point"), py::arg("episodes") = 100000, py::arg("seed") = 0, py::arg("threads") = 1);
}
