// Python bindings for the gtnc core library. The module mirrors the C++ API
// one-to-one: thin wrappers, value semantics, and the same exception types
// (re-raised as gtnc.Error subclasses).

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "gtnc/analysis.hpp"
#include "gtnc/classifier.hpp"
#include "gtnc/dataset.hpp"
#include "gtnc/discriminative.hpp"
#include "gtnc/errors.hpp"
#include "gtnc/feature_map.hpp"
#include "gtnc/generative.hpp"
#include "gtnc/mps.hpp"
#include "gtnc/tensor.hpp"

namespace py = pybind11;
using namespace gtnc;

namespace {

std::vector<double> span_to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

} // namespace

PYBIND11_MODULE(_gtnc, m) {
    m.doc() = "Generative tensor-network classification core";
    m.attr("__version__") = "0.1.0";

    // ------------------------------------------------------------------ errors
    auto error = py::register_exception<Error>(m, "Error");
    py::register_exception<DimensionError>(m, "DimensionError", error);
    py::register_exception<ArgumentError>(m, "ArgumentError", error);
    py::register_exception<DomainError>(m, "DomainError", error);
    py::register_exception<FormatError>(m, "FormatError", error);
    py::register_exception<ConsistencyError>(m, "ConsistencyError", error);
    py::register_exception<IoError>(m, "IoError", error);
    auto training_error = py::register_exception<TrainingError>(m, "TrainingError", error);
    py::register_exception<ZeroAmplitudeError>(m, "ZeroAmplitudeError", training_error);
    py::register_exception<DegenerateStateError>(m, "DegenerateStateError", error);

    // ------------------------------------------------------------------ tensor
    py::class_<Tensor>(m, "Tensor")
        .def(py::init<std::vector<std::size_t>>(), py::arg("shape"))
        .def(py::init<std::vector<std::size_t>, std::vector<double>>(), py::arg("shape"),
             py::arg("data"))
        .def_static("scalar", &Tensor::scalar, py::arg("value"))
        .def_static("identity", &Tensor::identity, py::arg("n"))
        .def_property_readonly("shape", &Tensor::shape)
        .def_property_readonly("rank", &Tensor::rank)
        .def_property_readonly("size", &Tensor::size)
        .def("extent", &Tensor::extent, py::arg("axis"))
        .def("data", [](const Tensor& t) { return t.data(); })
        .def("at", [](const Tensor& t, const std::vector<std::size_t>& idx) { return t.at(idx); },
             py::arg("index"))
        .def("reshape", &Tensor::reshape, py::arg("shape"))
        .def("permute", &Tensor::permute, py::arg("perm"))
        .def("scaled", &Tensor::scaled, py::arg("factor"))
        .def("__add__", &Tensor::operator+)
        .def("__sub__", &Tensor::operator-);

    py::class_<QrResult>(m, "QrResult")
        .def_readonly("q", &QrResult::q)
        .def_readonly("r", &QrResult::r);

    py::class_<SvdResult>(m, "SvdResult")
        .def_readonly("u", &SvdResult::u)
        .def_readonly("singular_values", &SvdResult::singular_values)
        .def_readonly("vt", &SvdResult::vt)
        .def_readonly("discarded_weight", &SvdResult::discarded_weight);

    m.def("contract", &contract, py::arg("a"), py::arg("b"), py::arg("pairs"));
    m.def("qr_split", &qr_split, py::arg("t"), py::arg("left_indices"));
    m.def("svd_split", &svd_split, py::arg("t"), py::arg("left_indices"), py::arg("max_rank"));
    m.def("frobenius_norm", &frobenius_norm, py::arg("t"));

    // ----------------------------------------------------------------- dataset
    py::class_<Provenance>(m, "Provenance")
        .def(py::init<>())
        .def_readwrite("images_path", &Provenance::images_path)
        .def_readwrite("labels_path", &Provenance::labels_path)
        .def_readwrite("downsample_factor", &Provenance::downsample_factor)
        .def_readwrite("subsampled", &Provenance::subsampled)
        .def_readwrite("per_class", &Provenance::per_class)
        .def_readwrite("subsample_seed", &Provenance::subsample_seed);

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def(py::init<std::size_t, std::size_t, std::vector<double>, std::vector<int>,
                      Provenance>(),
             py::arg("height"), py::arg("width"), py::arg("pixels"), py::arg("labels"),
             py::arg("provenance") = Provenance{})
        .def("__len__", &Dataset::size)
        .def_property_readonly("height", &Dataset::height)
        .def_property_readonly("width", &Dataset::width)
        .def_property_readonly("pixels_per_image", &Dataset::pixels_per_image)
        .def("image", [](const Dataset& d, std::size_t i) { return span_to_vector(d.image(i)); },
             py::arg("i"))
        .def("label", &Dataset::label, py::arg("i"))
        .def_property_readonly("labels", &Dataset::labels)
        .def_property_readonly("pixels", &Dataset::pixels)
        .def_property_readonly("provenance", &Dataset::provenance)
        .def("num_classes", &Dataset::num_classes)
        .def("class_counts", &Dataset::class_counts);

    m.def("load_idx", &load_idx, py::arg("images_path"), py::arg("labels_path"));
    m.def("save_idx", &save_idx, py::arg("dataset"), py::arg("images_path"),
          py::arg("labels_path"));
    m.def("downsample", &downsample, py::arg("dataset"), py::arg("factor"));
    m.def("subsample", &subsample, py::arg("dataset"), py::arg("per_class"), py::arg("seed"));
    m.def("split_by_class", &split_by_class, py::arg("dataset"));

    // ------------------------------------------------------------- feature map
    py::class_<ProductState>(m, "ProductState")
        .def(py::init<>())
        .def(py::init<std::size_t, std::size_t, std::vector<double>>(), py::arg("num_sites"),
             py::arg("local_dim"), py::arg("values"))
        .def_property_readonly("num_sites", &ProductState::num_sites)
        .def_property_readonly("local_dim", &ProductState::local_dim)
        .def("site",
             [](const ProductState& p, std::size_t i) { return span_to_vector(p.site(i)); },
             py::arg("i"))
        .def_property_readonly("values", &ProductState::values);

    m.def("map_pixel", &map_pixel, py::arg("x"));
    m.def(
        "map_image",
        [](const std::vector<double>& pixels, std::size_t local_dim) {
            return map_image(pixels, local_dim);
        },
        py::arg("pixels"), py::arg("local_dim") = 2);
    m.def("product_overlap", &product_overlap, py::arg("u"), py::arg("v"));

    // --------------------------------------------------------------------- mps
    py::class_<Mps>(m, "Mps")
        .def(py::init<>())
        .def(py::init<std::vector<Tensor>, int>(), py::arg("site_tensors"),
             py::arg("canonical_center") = Mps::kNoCenter)
        .def_property_readonly("num_sites", &Mps::num_sites)
        .def_property_readonly("local_dim", &Mps::local_dim)
        .def_property_readonly("canonical_center", &Mps::canonical_center)
        .def("site", &Mps::site, py::arg("l"))
        .def("sites", &Mps::sites)
        .def("bond_dims", &Mps::bond_dims)
        .def("set_site", &Mps::set_site, py::arg("l"), py::arg("tensor"))
        .def("move_center", &Mps::move_center, py::arg("target"))
        .def("norm", &Mps::norm)
        .def("normalize", &Mps::normalize);

    m.def("random_mps", &random_mps, py::arg("num_sites"), py::arg("local_dim"),
          py::arg("max_bond"), py::arg("seed"));
    // glibc's math.h also declares a ::canonicalize, so qualify this one
    m.def("canonicalize", &gtnc::canonicalize, py::arg("mps"), py::arg("center"));
    m.def("mps_product_overlap", &mps_product_overlap, py::arg("mps"), py::arg("state"));
    m.def("schmidt_values", &schmidt_values, py::arg("mps"), py::arg("bond"));
    m.def("renyi2_entropy", &renyi2_entropy, py::arg("mps"), py::arg("bond"));
    m.def("save_mps", &save_mps, py::arg("mps"), py::arg("path"));
    m.def("load_mps", &load_mps, py::arg("path"));

    // ---------------------------------------------------------------- training
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("max_bond", &TrainConfig::max_bond)
        .def_readwrite("step_size", &TrainConfig::step_size)
        .def_readwrite("step_decay", &TrainConfig::step_decay)
        .def_readwrite("max_sweeps", &TrainConfig::max_sweeps)
        .def_readwrite("convergence_tol", &TrainConfig::convergence_tol)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("sweep_observer", &TrainConfig::sweep_observer)
        .def("validate", &TrainConfig::validate);

    py::class_<SweepRecord>(m, "SweepRecord")
        .def_readonly("sweep", &SweepRecord::sweep)
        .def_readonly("cost", &SweepRecord::cost)
        .def_readonly("step_size", &SweepRecord::step_size)
        .def_readonly("accepted", &SweepRecord::accepted)
        .def_readonly("seconds", &SweepRecord::seconds);

    py::class_<TrainReport>(m, "TrainReport")
        .def_readonly("cost_history", &TrainReport::cost_history)
        .def_readonly("step_history", &TrainReport::step_history)
        .def_readonly("accepted_history", &TrainReport::accepted_history)
        .def_readonly("seconds_history", &TrainReport::seconds_history)
        .def_readonly("discarded_weight_history", &TrainReport::discarded_weight_history)
        .def_readonly("initial_cost", &TrainReport::initial_cost)
        .def_readonly("final_cost", &TrainReport::final_cost)
        .def_readonly("sweeps_run", &TrainReport::sweeps_run)
        .def_readonly("wall_time_seconds", &TrainReport::wall_time_seconds);

    m.def("nll_cost", &nll_cost, py::arg("mps"), py::arg("samples"));
    m.def("nll_gradient", &nll_gradient, py::arg("mps"), py::arg("samples"));
    m.def("train_generative", &train_generative, py::arg("samples"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("train_all_classes", &train_all_classes, py::arg("dataset"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    // -------------------------------------------------------------- classifier
    py::class_<BundleProvenance>(m, "BundleProvenance")
        .def_readonly("dataset", &BundleProvenance::dataset)
        .def_readonly("config", &BundleProvenance::config)
        .def_readonly("reports", &BundleProvenance::reports);

    py::class_<ClassifierBundle>(m, "ClassifierBundle")
        .def(py::init<>())
        .def_readwrite("models", &ClassifierBundle::models)
        .def_readwrite("norms", &ClassifierBundle::norms)
        .def_readonly("provenance", &ClassifierBundle::provenance)
        .def("num_classes", &ClassifierBundle::num_classes);

    py::class_<ClassifyResult>(m, "ClassifyResult")
        .def_readonly("label", &ClassifyResult::label)
        .def_readonly("decided", &ClassifyResult::decided)
        .def_readonly("fidelities", &ClassifyResult::fidelities)
        .def_readonly("log_fidelities", &ClassifyResult::log_fidelities);

    py::class_<LazyBundle>(m, "LazyBundle")
        .def(py::init<const Dataset&>(), py::arg("training"))
        .def("num_classes", &LazyBundle::num_classes)
        .def("pixels_per_image", &LazyBundle::pixels_per_image)
        .def("counts", &LazyBundle::counts)
        .def("class_pixels", &LazyBundle::class_pixels, py::arg("c"));

    py::class_<EvalReport>(m, "EvalReport")
        .def_readonly("accuracy", &EvalReport::accuracy)
        .def_readonly("confusion", &EvalReport::confusion)
        .def_readonly("predicted", &EvalReport::predicted)
        .def_readonly("log_fidelities", &EvalReport::log_fidelities)
        .def_readonly("decided", &EvalReport::decided);

    m.def("fidelity", &fidelity, py::arg("bundle"), py::arg("state"));
    m.def("classify", &classify, py::arg("bundle"), py::arg("state"));
    m.def("lazy_fidelity", &lazy_fidelity, py::arg("bundle"), py::arg("state"));
    m.def("classify_lazy", &classify_lazy, py::arg("bundle"), py::arg("state"));
    m.def(
        "evaluate",
        [](const ClassifierBundle& b, const Dataset& t) { return evaluate(b, t); },
        py::arg("bundle"), py::arg("test"), py::call_guard<py::gil_scoped_release>());
    m.def(
        "evaluate",
        [](const LazyBundle& b, const Dataset& t) { return evaluate(b, t); },
        py::arg("bundle"), py::arg("test"), py::call_guard<py::gil_scoped_release>());
    m.def("argmax_lowest", &detail::argmax_lowest, py::arg("values"));

    // ----------------------------------------------------------- discriminative
    py::class_<LabeledMps>(m, "LabeledMps")
        .def(py::init<>())
        .def(py::init<std::vector<Tensor>, std::size_t>(), py::arg("site_tensors"),
             py::arg("label_site"))
        .def_property_readonly("num_sites", &LabeledMps::num_sites)
        .def_property_readonly("local_dim", &LabeledMps::local_dim)
        .def("num_classes", &LabeledMps::num_classes)
        .def_property_readonly("label_site", &LabeledMps::label_site)
        .def("site", &LabeledMps::site, py::arg("l"))
        .def("sites", &LabeledMps::sites)
        .def("bond_dims", &LabeledMps::bond_dims)
        .def("norm", &LabeledMps::norm);

    m.def("predict_vector", &predict_vector, py::arg("model"), py::arg("state"));
    m.def("quadratic_cost", &quadratic_cost, py::arg("model"), py::arg("samples"),
          py::arg("labels"));
    m.def("train_discriminative", &train_discriminative, py::arg("training"), py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("classify_labeled", &classify_labeled, py::arg("model"), py::arg("state"));
    m.def("classify_discriminative", &classify_discriminative, py::arg("model"),
          py::arg("state"));
    m.def(
        "evaluate",
        [](const LabeledMps& model, const Dataset& t) { return evaluate(model, t); },
        py::arg("model"), py::arg("test"), py::call_guard<py::gil_scoped_release>());
    m.def("save_labeled_mps", &save_labeled_mps, py::arg("model"), py::arg("path"));
    m.def("load_labeled_mps", &load_labeled_mps, py::arg("path"));

    // ---------------------------------------------------------------- analysis
    py::enum_<MatrixKind>(m, "MatrixKind")
        .value("euclidean_raw", MatrixKind::euclidean_raw)
        .value("fidelity_hilbert", MatrixKind::fidelity_hilbert)
        .value("distance_hilbert", MatrixKind::distance_hilbert);

    py::class_<ClassPairMatrix>(m, "ClassPairMatrix")
        .def_readonly("kind", &ClassPairMatrix::kind)
        .def_readonly("values", &ClassPairMatrix::values)
        .def_readonly("class_counts", &ClassPairMatrix::class_counts)
        .def("num_classes", &ClassPairMatrix::num_classes)
        .def("at", &ClassPairMatrix::at, py::arg("c1"), py::arg("c2"));

    py::class_<HilbertDistanceResult>(m, "HilbertDistanceResult")
        .def_readonly("distance", &HilbertDistanceResult::distance)
        .def_readonly("approximation", &HilbertDistanceResult::approximation)
        .def_readonly("max_abs_residual", &HilbertDistanceResult::max_abs_residual);

    py::class_<ClusteringStats>(m, "ClusteringStats")
        .def_readonly("min_diagonal", &ClusteringStats::min_diagonal)
        .def_readonly("max_diagonal", &ClusteringStats::max_diagonal)
        .def_readonly("min_offdiagonal", &ClusteringStats::min_offdiagonal)
        .def_readonly("max_offdiagonal", &ClusteringStats::max_offdiagonal)
        .def_readonly("ratio", &ClusteringStats::ratio);

    py::class_<ClusteringReport>(m, "ClusteringReport")
        .def_readonly("fidelity", &ClusteringReport::fidelity)
        .def_readonly("raw_distance", &ClusteringReport::raw_distance)
        .def_readonly("clustered", &ClusteringReport::clustered);

    m.def("raw_distance_matrix", &raw_distance_matrix, py::arg("dataset"),
          py::call_guard<py::gil_scoped_release>());
    m.def("fidelity_matrix", &fidelity_matrix, py::arg("dataset"),
          py::call_guard<py::gil_scoped_release>());
    m.def("hilbert_distance_matrix", &hilbert_distance_matrix, py::arg("fidelity"));
    m.def("clustering_report", &clustering_report, py::arg("raw"), py::arg("fidelity"));
}
