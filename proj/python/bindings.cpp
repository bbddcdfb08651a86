#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nightcast/electiondata.hpp"
#include "nightcast/evaluation.hpp"
#include "nightcast/gaopt.hpp"
#include "nightcast/regression.hpp"

namespace py = pybind11;
using namespace nightcast;
using json = nlohmann::ordered_json;

namespace {

py::object to_py(const json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

json from_py(const py::object& obj) {
    return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

GaConfig config_from_kwargs(const py::kwargs& kw) {
    json doc = json::object();
    for (auto item : kw) doc[item.first.cast<std::string>()] = from_py(py::reinterpret_borrow<py::object>(item.second));
    return config_from_json(doc);
}

}  // namespace

PYBIND11_MODULE(_nightcast, m) {
    m.doc() = "Election-night forecasting with optimized station groupings";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<NoDeclaredStations>(m, "NoDeclaredStations", PyExc_RuntimeError);

    py::class_<Dataset>(m, "Dataset")
        .def_static("from_json", [](const py::object& doc) { return dataset_from_json(from_py(doc)); })
        .def_static("load", [](const std::string& path) { return load_dataset(path); })
        .def("to_json", [](const Dataset& ds) { return to_py(dataset_to_json(ds)); })
        .def("save", [](const Dataset& ds, const std::string& path) { save_dataset(ds, path); })
        .def("__len__", &Dataset::size)
        .def_property_readonly("station_ids",
                               [](const Dataset& ds) {
                                   std::vector<std::string> ids;
                                   for (const auto& c : ds.stations()) ids.push_back(c.id);
                                   return ids;
                               })
        .def_property_readonly("ref_parties", [](const Dataset& ds) { return ds.parties().ref(); })
        .def_property_readonly("cur_parties", [](const Dataset& ds) { return ds.parties().cur(); })
        .def("has_all_current", &Dataset::has_all_current)
        .def("true_current_totals", &Dataset::true_current_totals);

    py::class_<DeclarationState>(m, "Declarations")
        .def(py::init<>())
        .def("declare",
             [](DeclarationState& d, const Dataset& ds, const std::string& id, const VoteVector& votes) {
                 d.declare(ds, id, votes);
             },
             py::arg("dataset"), py::arg("station_id"), py::arg("votes"))
        .def("__len__", &DeclarationState::size)
        .def("__contains__", &DeclarationState::is_declared)
        .def("ids", &DeclarationState::ordered_ids)
        .def("to_json", [](const DeclarationState& d, const Dataset& ds) { return to_py(declarations_to_json(ds, d)); })
        .def_static("from_json",
                    [](const Dataset& ds, const py::object& doc) { return declarations_from_json(ds, from_py(doc)); });

    m.def(
        "generate_synthetic",
        [](std::size_t groups, std::size_t stations_per_group, std::size_t ref_parties, std::size_t cur_parties,
           Count electorate_min, Count electorate_max, double noise_sd, std::uint64_t seed) {
            SynthSpec s;
            s.n_groups = groups;
            s.stations_per_group = stations_per_group;
            s.ref_party_count = ref_parties;
            s.cur_party_count = cur_parties;
            s.electorate_min = electorate_min;
            s.electorate_max = electorate_max;
            s.noise_sd = noise_sd;
            s.seed = seed;
            auto syn = generate_synthetic(s);
            std::vector<std::vector<std::vector<double>>> matrices;
            for (const auto& t : syn.true_matrices) matrices.push_back(t.entries);
            return py::make_tuple(syn.dataset, syn.true_grouping, matrices);
        },
        "Returns (dataset, true grouping, true transition matrices).", py::arg("groups") = 3,
        py::arg("stations_per_group") = 20, py::arg("ref_parties") = 3, py::arg("cur_parties") = 3,
        py::arg("electorate_min") = 500, py::arg("electorate_max") = 5000, py::arg("noise_sd") = 0.0,
        py::arg("seed") = 1);

    m.def("make_scenario", &make_scenario, py::arg("dataset"), py::arg("missing_electorate"), py::arg("seed") = 1);
    m.def("all_declared", &all_declared);

    m.def(
        "estimate_transition",
        [](const Dataset& ds, const DeclarationState& decl, const std::vector<std::string>& ids) {
            return estimate_transition(ds, decl, ids).entries;
        },
        "Pooled least-squares transition matrix (current x reference parties).");

    m.def(
        "forecast",
        [](const Dataset& ds, const DeclarationState& decl, const std::vector<int>& grouping) {
            return to_py(forecast_to_json(ds, assemble_forecast(ds, decl, grouping)));
        },
        py::arg("dataset"), py::arg("declarations"), py::arg("grouping"));

    m.def(
        "rmse",
        [](const std::vector<double>& f, const std::vector<double>& t, const std::string& metric) {
            return rmse(f, t, parse_metric(metric));
        },
        py::arg("forecast"), py::arg("truth"), py::arg("metric") = "abs");

    m.def(
        "default_config", [](const py::kwargs& kw) { return to_py(config_to_json(config_from_kwargs(kw))); },
        "GA configuration with defaults and the given overrides.");

    m.def(
        "fitness",
        [](const Dataset& ds, const DeclarationState& decl, const std::vector<int>& grouping, const py::kwargs& kw) {
            return fitness(Chromosome{grouping, {}}, ds, decl, config_from_kwargs(kw));
        },
        py::arg("dataset"), py::arg("declarations"), py::arg("grouping"));

    m.def(
        "optimize",
        [](const Dataset& ds, const DeclarationState& decl, const py::kwargs& kw) {
            const GaConfig c = config_from_kwargs(kw);
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run(ds, decl, c);
            }
            py::dict out;
            out["labels"] = r.best.genes;
            out["fitness"] = *r.best.fitness;
            out["best"] = r.trace.best_series();
            out["mean"] = r.trace.mean_series();
            out["penalty_weight"] = r.penalty_weight;
            out["min_declared_per_group"] = r.min_declared;
            return out;
        },
        "Runs the genetic algorithm; keyword arguments override GaConfig fields.", py::arg("dataset"),
        py::arg("declarations"));

    m.def(
        "kmeans_baseline",
        [](const Dataset& ds, std::size_t k, std::uint64_t seed) { return kmeans_baseline(ds, k, seed).genes; },
        py::arg("dataset"), py::arg("n_groups"), py::arg("seed") = 1);

    m.def(
        "deviation_summary",
        [](const Dataset& ds, const DeclarationState& decl, const std::map<std::string, std::vector<int>>& groupings,
           bool per_station) {
            std::vector<NamedGrouping> g;
            for (const auto& [name, labels] : groupings) g.push_back({name, labels});
            return to_py(deviations_to_json(deviation_summary(ds, decl, g, per_station)));
        },
        py::arg("dataset"), py::arg("declarations"), py::arg("groupings"), py::arg("per_station") = false);

    m.def(
        "group_profile",
        [](const Dataset& ds, const std::vector<int>& grouping, const DeclarationState* decl) {
            return to_py(group_profile_to_json(group_profile(ds, grouping, decl)));
        },
        py::arg("dataset"), py::arg("grouping"), py::arg("declarations") = nullptr);
}
