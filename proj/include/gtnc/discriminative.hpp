#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "gtnc/classifier.hpp"
#include "gtnc/dataset.hpp"
#include "gtnc/feature_map.hpp"
#include "gtnc/tensor.hpp"
#include "gtnc/training_types.hpp"

namespace gtnc {

/// MPS carrying one extra K-valued label index on a single site. Site
/// tensors have shape (chi_{l-1}, d, chi_l) except the label site, whose
/// shape is (chi_{l-1}, d, K, chi_l). The represented object maps a product
/// state v to the K-vector of overlaps L~(v) (one amplitude per label value).
class LabeledMps {
  public:
    LabeledMps() = default;
    LabeledMps(std::vector<Tensor> site_tensors, std::size_t label_site);

    std::size_t num_sites() const { return sites_.size(); }
    std::size_t local_dim() const { return sites_.empty() ? 0 : sites_[0].extent(1); }
    std::size_t num_classes() const { return sites_.empty() ? 0 : sites_[label_site_].extent(2); }
    std::size_t label_site() const { return label_site_; }

    const Tensor& site(std::size_t l) const { return sites_.at(l); }
    const std::vector<Tensor>& sites() const { return sites_; }
    std::vector<std::size_t> bond_dims() const;

    /// Norm of the full (label-summed) state, via density-matrix transfers.
    double norm() const;

  private:
    std::vector<Tensor> sites_;
    std::size_t label_site_ = 0;
};

/// Model outputs L~_k(v) for one product state, O(L d chi^2 + L K chi^2).
std::vector<double> predict_vector(const LabeledMps& m, const ProductState& v);

/// Quadratic cost sum_j |L~(v_j) - onehot(c_j)|^2. Labels must lie in
/// [0, num_classes).
double quadratic_cost(const LabeledMps& m, const std::vector<ProductState>& samples,
                      const std::vector<int>& labels);

/// Trains the label-carrying MPS by alternating two-site gradient sweeps:
/// the merged pair is updated with a norm-scaled step on the quadratic cost,
/// then split by a rank-chi truncated SVD with the label index riding the
/// sweep direction. Rollback + alpha/beta decay mirror the generative
/// trainer. config.sweep_observer is ignored (the model is not an Mps).
std::pair<LabeledMps, TrainReport> train_discriminative(const Dataset& training,
                                                        const TrainConfig& config);

/// argmax_k L~_k(v), ties to the lowest index. The result reuses
/// ClassifyResult with raw (possibly negative) outputs in `fidelities`.
ClassifyResult classify_labeled(const LabeledMps& m, const ProductState& v);

/// Bare class index of classify_labeled.
int classify_discriminative(const LabeledMps& m, const ProductState& v);

EvalReport evaluate(const LabeledMps& m, const Dataset& test);

namespace detail {
/// Gradient of the quadratic cost with respect to the merged block of sites
/// (pair_left, pair_left + 1), index order (left bond, phys l, phys l+1,
/// label, right bond). The label must sit on one of the two sites. Exposed
/// so tests can check the trainer's gradient against finite differences.
Tensor pair_gradient(const LabeledMps& m, std::size_t pair_left,
                     const std::vector<ProductState>& samples, const std::vector<int>& labels);

/// The merged block itself, same index order as pair_gradient.
Tensor merged_pair(const LabeledMps& m, std::size_t pair_left);
} // namespace detail

/// Same container format as plain models, with label_site >= 0.
void save_labeled_mps(const LabeledMps& m, const std::string& path);
LabeledMps load_labeled_mps(const std::string& path);

} // namespace gtnc
