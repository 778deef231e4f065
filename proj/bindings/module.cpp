#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cqwalk/cqcnn.hpp"
#include "cqwalk/dataset.hpp"
#include "cqwalk/dynamics.hpp"
#include "cqwalk/efficiency.hpp"
#include "cqwalk/graph.hpp"

namespace py = pybind11;
using namespace cqwalk;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Noisy quantum walk transfer-efficiency pipeline";

    py::register_exception<IntegrationError>(m, "IntegrationError");

    py::class_<Graph>(m, "Graph")
        .def_readonly("order", &Graph::order)
        .def_readonly("edges", &Graph::edges)
        .def_readonly("kind", &Graph::kind)
        .def("degree", &Graph::degree)
        .def_static("cycle", &Graph::cycle)
        .def_static("from_edges", &Graph::from_edges);

    py::class_<WalkSetup>(m, "WalkSetup")
        .def_readonly("graph", &WalkSetup::graph)
        .def_readonly("source", &WalkSetup::source)
        .def_readonly("target", &WalkSetup::target)
        .def("sink", &WalkSetup::sink);

    m.def("make_cycle", &make_cycle, py::arg("n"));
    m.def("parse_graph", &parse_graph, py::arg("descriptor"));
    m.def("parse_setup", &parse_setup, py::arg("descriptor"), py::arg("source") = -1,
          py::arg("target") = -1);
    m.def("adjacency_matrix", &adjacency_matrix);
    m.def("transition_matrix", &transition_matrix);
    m.def("pad_matrix", &pad_matrix, py::arg("a"), py::arg("n_max"));

    py::enum_<RateConvention>(m, "RateConvention")
        .value("AMPLITUDE", RateConvention::Amplitude)
        .value("RATE", RateConvention::Rate);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("values", &Trajectory::values);

    py::class_<LindbladSpec>(m, "LindbladSpec")
        .def(py::init<>())
        .def_readwrite("adjacency", &LindbladSpec::adjacency)
        .def_readwrite("transition", &LindbladSpec::transition)
        .def_readwrite("p", &LindbladSpec::p)
        .def_readwrite("gamma", &LindbladSpec::gamma)
        .def_readwrite("target", &LindbladSpec::target)
        .def_readwrite("convention", &LindbladSpec::convention);

    m.def("lindblad_rhs", &lindblad_rhs, py::arg("rho"), py::arg("spec"));
    m.def(
        "integrate_quantum",
        [](const LindbladSpec& spec, const WalkSetup& setup, double t_max, double dt,
           std::optional<double> stop_above) {
            return integrate_quantum(spec, setup, t_max, dt, stop_above);
        },
        py::arg("spec"), py::arg("setup"), py::arg("t_max"), py::arg("dt"),
        py::arg("stop_above") = py::none());
    m.def("classical_generator", &classical_generator, py::arg("transition"), py::arg("target"),
          py::arg("absorbing"));
    m.def(
        "integrate_classical",
        [](const Eigen::MatrixXd& generator, const Eigen::VectorXd& pi0, int target,
           double t_max, double dt, std::optional<double> stop_above) {
            return integrate_classical(generator, pi0, target, t_max, dt, stop_above);
        },
        py::arg("generator"), py::arg("pi0"), py::arg("target"), py::arg("t_max"), py::arg("dt"),
        py::arg("stop_above") = py::none());
    m.def("classical_propagate_exact", &classical_propagate_exact, py::arg("transition"),
          py::arg("pi0"), py::arg("t"));

    py::class_<IntegrationParams>(m, "IntegrationParams")
        .def(py::init<>())
        .def_readwrite("gamma", &IntegrationParams::gamma)
        .def_readwrite("dt", &IntegrationParams::dt)
        .def_readwrite("t_max", &IntegrationParams::t_max)
        .def_readwrite("horizon_factor", &IntegrationParams::horizon_factor)
        .def_readwrite("log_base", &IntegrationParams::log_base)
        .def_readwrite("convention", &IntegrationParams::convention)
        .def("effective_t_max", &IntegrationParams::effective_t_max);

    m.def("detection_threshold", &detection_threshold, py::arg("n"), py::arg("log_base") = 0.0);
    m.def("first_crossing", &first_crossing, py::arg("trajectory"), py::arg("threshold"));

    py::class_<TransferOutcome>(m, "TransferOutcome")
        .def_readonly("threshold", &TransferOutcome::threshold)
        .def_readonly("t_quantum", &TransferOutcome::t_quantum)
        .def_readonly("t_classical", &TransferOutcome::t_classical)
        .def_readonly("label", &TransferOutcome::label)
        .def_readonly("p", &TransferOutcome::p);

    m.def("label_walk", &label_walk, py::arg("setup"), py::arg("p"), py::arg("params"));

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("outcomes", &SweepResult::outcomes)
        .def_readonly("p_star", &SweepResult::p_star)
        .def_readonly("transitions", &SweepResult::transitions);

    m.def("sweep_ground_truth", &sweep_ground_truth, py::arg("setup"), py::arg("grid"),
          py::arg("params"), py::arg("workers") = 1);

    py::class_<DatasetFlags>(m, "DatasetFlags")
        .def(py::init<>())
        .def_readwrite("n_max", &DatasetFlags::n_max)
        .def_readwrite("seed", &DatasetFlags::seed)
        .def_readwrite("gamma", &DatasetFlags::gamma)
        .def_readwrite("dt", &DatasetFlags::dt)
        .def_readwrite("t_max", &DatasetFlags::t_max)
        .def_readwrite("horizon_factor", &DatasetFlags::horizon_factor)
        .def_readwrite("log_base", &DatasetFlags::log_base)
        .def_readwrite("convention", &DatasetFlags::convention)
        .def("integration_params", &DatasetFlags::integration_params)
        .def("__eq__",
             [](const DatasetFlags& a, const DatasetFlags& b) { return a == b; });

    py::class_<LabeledExample>(m, "LabeledExample")
        .def_readonly("graph_kind", &LabeledExample::graph_kind)
        .def_readonly("n", &LabeledExample::n)
        .def_readonly("a_padded", &LabeledExample::a_padded)
        .def_readonly("p", &LabeledExample::p)
        .def_readonly("label", &LabeledExample::label)
        .def_readonly("t_quantum", &LabeledExample::t_quantum)
        .def_readonly("t_classical", &LabeledExample::t_classical);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readonly("examples", &Dataset::examples)
        .def_readonly("flags", &Dataset::flags);

    m.def(
        "generate_dataset",
        [](const std::vector<WalkSetup>& setups, int samples, std::uint64_t seed,
           const IntegrationParams& params, int n_max, int workers) {
            return generate(setups, samples, seed, params, n_max, workers);
        },
        py::arg("setups"), py::arg("samples_per_graph"), py::arg("seed"), py::arg("params"),
        py::arg("n_max"), py::arg("workers") = 1);
    m.def("save_dataset", &save, py::arg("dataset"), py::arg("path"));
    m.def("load_dataset", &load, py::arg("path"));
    m.def("split_exclude", &split_exclude, py::arg("dataset"), py::arg("excluded_kind"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("ensemble_size", &TrainConfig::ensemble_size)
        .def_readwrite("early_stop_loss", &TrainConfig::early_stop_loss)
        .def_readwrite("n_max", &TrainConfig::n_max)
        .def_readwrite("filters_per_layer", &TrainConfig::filters_per_layer);

    py::class_<TrainHistory>(m, "TrainHistory")
        .def_readonly("loss", &TrainHistory::loss)
        .def_readonly("accuracy", &TrainHistory::accuracy);

    py::class_<Prediction>(m, "Prediction")
        .def_readonly("scores", &Prediction::scores)
        .def_readonly("label", &Prediction::label)
        .def_readonly("score_std", &Prediction::score_std);

    py::class_<CqcnnModel>(m, "CqcnnModel")
        .def_readonly("n_max", &CqcnnModel::n_max)
        .def_readonly("filters_per_layer", &CqcnnModel::filters_per_layer)
        .def_readonly("seed", &CqcnnModel::seed);

    m.def("init_model", &init_model, py::arg("n_max"), py::arg("seed"),
          py::arg("filters_per_layer") = 4);
    m.def("forward", &forward, py::arg("model"), py::arg("a_padded"), py::arg("p"), py::arg("n"));
    m.def(
        "train",
        [](const Dataset& ds, const TrainConfig& cfg) {
            TrainHistory history;
            CqcnnModel model = train(ds, cfg, &history);
            return py::make_tuple(model, history);
        },
        py::arg("dataset"), py::arg("config"));
    m.def(
        "train_ensemble",
        [](const Dataset& ds, const TrainConfig& cfg, int workers) {
            return train_ensemble(ds, cfg, workers);
        },
        py::arg("dataset"), py::arg("config"), py::arg("workers") = 1);
    m.def("predict_ensemble", &predict_ensemble, py::arg("models"), py::arg("a_padded"),
          py::arg("p"), py::arg("n"));

    py::class_<CurveResult>(m, "CurveResult")
        .def_readonly("grid", &CurveResult::grid)
        .def_readonly("predictions", &CurveResult::predictions)
        .def_readonly("crossover", &CurveResult::crossover)
        .def_readonly("transitions", &CurveResult::transitions);

    m.def("predict_curve", &predict_curve, py::arg("models"), py::arg("setup"), py::arg("grid"));
    m.def("save_models", &save_models, py::arg("models"), py::arg("config"), py::arg("path"));
    m.def(
        "load_models",
        [](const std::filesystem::path& path) {
            TrainConfig cfg;
            auto models = load_models(path, &cfg);
            return py::make_tuple(models, cfg);
        },
        py::arg("path"));
}
