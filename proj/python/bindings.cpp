#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "coselect/eval.hpp"
#include "coselect/graph.hpp"
#include "coselect/selection.hpp"
#include "coselect/solver.hpp"

namespace py = pybind11;
using namespace coselect;

namespace {

py::dict terms_dict(const ObjectiveTerms& t)
{
    py::dict d;
    d["reconstruction"] = t.reconstruction;
    d["w_penalty"] = t.w_penalty;
    d["bv_penalty"] = t.bv_penalty;
    d["b_penalty"] = t.b_penalty;
    d["diversity"] = t.diversity;
    d["specific_graph"] = t.specific_graph;
    d["graph_fitting"] = t.graph_fitting;
    d["total"] = t.total;
    return d;
}

} // namespace

PYBIND11_MODULE(_coselect, m)
{
    m.doc() = "Joint feature and instance selection for multi-view unlabeled data";

    py::enum_<Variant>(m, "Variant")
        .value("Full", Variant::Full)
        .value("NoGraph", Variant::NoGraph)
        .value("NoConsensus", Variant::NoConsensus);

    py::enum_<Classifier>(m, "Classifier")
        .value("OneNN", Classifier::OneNN)
        .value("NearestCentroid", Classifier::NearestCentroid);

    py::class_<Hyperparams>(m, "Hyperparams")
        .def(py::init<>())
        .def_readwrite("r", &Hyperparams::r)
        .def_readwrite("theta", &Hyperparams::theta)
        .def_readwrite("alpha", &Hyperparams::alpha)
        .def_readwrite("c", &Hyperparams::c)
        .def_readwrite("k", &Hyperparams::k)
        .def_readwrite("epsilon", &Hyperparams::epsilon)
        .def_readwrite("tol", &Hyperparams::tol)
        .def_readwrite("max_iter", &Hyperparams::max_iter)
        .def_readwrite("inner_sweeps", &Hyperparams::inner_sweeps)
        .def_readwrite("extrapolate", &Hyperparams::extrapolate)
        .def_readwrite("seed", &Hyperparams::seed);

    py::class_<MultiViewDataset>(m, "MultiViewDataset")
        .def(py::init<std::vector<Matrix>, std::optional<std::vector<int>>>(), py::arg("views"),
             py::arg("labels") = py::none(), "views: list of (d_v, n) arrays sharing n instance columns")
        .def_property_readonly("num_views", &MultiViewDataset::num_views)
        .def_property_readonly("num_instances", &MultiViewDataset::num_instances)
        .def_property_readonly("view_dims", &MultiViewDataset::view_dims)
        .def_property_readonly("labels",
                               [](const MultiViewDataset& ds) -> py::object {
                                   return ds.has_labels() ? py::cast(ds.labels()) : py::none();
                               })
        .def("view", &MultiViewDataset::view, py::arg("v"));

    m.def(
        "synthesize",
        [](Eigen::Index n, std::vector<Eigen::Index> view_dims, int classes, double noise, std::uint64_t seed) {
            return synthesize({.n = n, .view_dims = std::move(view_dims), .classes = classes, .noise = noise,
                               .seed = seed});
        },
        py::arg("n") = 60, py::arg("view_dims") = std::vector<Eigen::Index>{20, 30}, py::arg("classes") = 3,
        py::arg("noise") = 0.5, py::arg("seed") = 1);

    m.def(
        "normalize",
        [](const MultiViewDataset& ds, const std::string& mode) { return normalize_views(ds, parse_normalization(mode)); },
        py::arg("dataset"), py::arg("mode") = "zscore");

    py::class_<FitResult>(m, "FitResult")
        .def_property_readonly("w", [](const FitResult& f) { return f.state.w; })
        .def_property_readonly("b", [](const FitResult& f) { return f.state.b; })
        .def_property_readonly("b_views", [](const FitResult& f) { return f.state.b_views; })
        .def_property_readonly("s", [](const FitResult& f) { return f.state.s; })
        .def_property_readonly("weights",
                               [](const FitResult& f) {
                                   py::dict d;
                                   d["lambda"] = f.state.weights.lambda;
                                   d["eta"] = f.state.weights.eta;
                                   d["gamma"] = f.state.weights.gamma;
                                   return d;
                               })
        .def_property_readonly("converged", [](const FitResult& f) { return f.trace.converged; })
        .def_property_readonly("objective",
                               [](const FitResult& f) {
                                   std::vector<double> out;
                                   for (const auto& r : f.trace.records) {
                                       out.push_back(r.terms.total);
                                   }
                                   return out;
                               })
        .def_property_readonly("final_terms",
                               [](const FitResult& f) { return terms_dict(f.trace.records.back().terms); })
        .def("trace_csv", [](const FitResult& f) { return f.trace.to_csv(); });

    m.def(
        "fit",
        [](const MultiViewDataset& ds, Hyperparams hp, Variant variant) {
            hp.c = resolve_projection_dim(hp, ds.unlabeled(),
                                          ds.has_labels() ? std::optional<int>(ds.num_classes()) : std::nullopt);
            py::gil_scoped_release release;
            return fit_variant(ds, hp, variant);
        },
        py::arg("dataset"), py::arg("hp") = Hyperparams{}, py::arg("variant") = Variant::Full);

    py::class_<SelectionResult>(m, "SelectionResult")
        .def_readonly("instance_scores", &SelectionResult::instance_scores)
        .def_readonly("instance_ranking", &SelectionResult::instance_ranking)
        .def_readonly("selected_instances", &SelectionResult::selected_instances)
        .def_readonly("selected_features", &SelectionResult::selected_features)
        .def("to_json", &SelectionResult::to_json);

    m.def(
        "select",
        [](const FitResult& f, double feature_ratio, double instance_ratio, bool per_view_normalized) {
            return select(f.state, feature_ratio, instance_ratio,
                          {.eps = 1e-8, .per_view_normalized = per_view_normalized});
        },
        py::arg("fitted"), py::arg("feature_ratio") = 0.3, py::arg("instance_ratio") = 0.2,
        py::arg("per_view_normalized") = false);

    m.def(
        "evaluate",
        [](const MultiViewDataset& ds, const SelectionResult& sel, Classifier classifier) {
            const auto r = evaluate(ds, sel, classifier);
            py::dict d;
            d["acc"] = r.acc();
            d["f1"] = r.f1();
            d["evaluated"] = r.evaluated;
            return d;
        },
        py::arg("dataset"), py::arg("selection"), py::arg("classifier") = Classifier::OneNN);

    m.def("mvis_scores", [](const Matrix& b, const std::vector<Matrix>& b_views, const Vector& eta,
                            double eps) { return mvis_scores(b, b_views, eta, eps); },
          py::arg("b"), py::arg("b_views"), py::arg("eta"), py::arg("eps") = 1e-8);
    m.def("project_to_simplex", &project_to_simplex, py::arg("v"));
    m.def(
        "knn_graph", [](const Matrix& x, int k) { return knn_graph(x, k).weights; }, py::arg("x"), py::arg("k"),
        "Row-stochastic kNN affinity of the columns of x");
}
