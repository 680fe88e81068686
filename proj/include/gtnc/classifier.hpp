#pragma once

#include <cstddef>
#include <vector>

#include "gtnc/dataset.hpp"
#include "gtnc/feature_map.hpp"
#include "gtnc/mps.hpp"
#include "gtnc/training_types.hpp"

namespace gtnc {

/// Everything needed to reproduce a trained bundle.
struct BundleProvenance {
    Provenance dataset;
    TrainConfig config;               // sweep_observer is not persisted
    std::vector<TrainReport> reports; // one per class
};

/// One generative model per class plus cached state norms.
struct ClassifierBundle {
    std::vector<Mps> models;
    std::vector<double> norms; // ||Psi_c||, recomputed on load
    BundleProvenance provenance;

    std::size_t num_classes() const { return models.size(); }
};

struct ClassifyResult {
    int label = 0;
    bool decided = true; // false when every fidelity underflowed to zero
    std::vector<double> fidelities;
    std::vector<double> log_fidelities; // ln(f_c + 1e-300)
};

/// Normalized fidelities f_c = |v . Psi_c| / ||Psi_c|| for one product state.
std::vector<double> fidelity(const ClassifierBundle& bundle, const ProductState& v);

/// argmax_c f_c; ties resolve to the lowest class index.
ClassifyResult classify(const ClassifierBundle& bundle, const ProductState& v);

/// Baseline I: the class states are plain sums of mapped training samples.
/// Stores pixel lists; product states are materialized per overlap.
class LazyBundle {
  public:
    explicit LazyBundle(const Dataset& training);

    std::size_t num_classes() const { return counts_.size(); }
    std::size_t pixels_per_image() const { return pixels_per_image_; }
    const std::vector<std::size_t>& counts() const { return counts_; }
    const std::vector<double>& class_pixels(std::size_t c) const;

  private:
    std::vector<std::vector<double>> class_pixels_; // concatenated images
    std::vector<std::size_t> counts_;
    std::size_t pixels_per_image_ = 0;
};

/// f~_c = |sum_u v.u| / sqrt(N_c); no state-norm division, by construction.
std::vector<double> lazy_fidelity(const LazyBundle& bundle, const ProductState& v);

ClassifyResult classify_lazy(const LazyBundle& bundle, const ProductState& v);

struct EvalReport {
    double accuracy = 0.0;
    std::vector<std::vector<std::size_t>> confusion; // [true][predicted]
    std::vector<int> predicted;                      // per test sample
    std::vector<std::vector<double>> log_fidelities; // per test sample
    std::vector<bool> decided;                       // per test sample
};

EvalReport evaluate(const ClassifierBundle& bundle, const Dataset& test);
EvalReport evaluate(const LazyBundle& bundle, const Dataset& test);

namespace detail {
/// Shared evaluation loop; `classify_fn` must be safe to call concurrently.
EvalReport evaluate_with(const std::function<ClassifyResult(const ProductState&)>& classify_fn,
                         std::size_t model_classes, const Dataset& test);

/// argmax with ties resolved to the lowest index.
int argmax_lowest(const std::vector<double>& v);
} // namespace detail

} // namespace gtnc
