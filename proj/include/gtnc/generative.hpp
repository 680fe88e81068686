#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "gtnc/classifier.hpp"
#include "gtnc/dataset.hpp"
#include "gtnc/feature_map.hpp"
#include "gtnc/mps.hpp"
#include "gtnc/tensor.hpp"
#include "gtnc/training_types.hpp"

namespace gtnc {

/// Negative log-likelihood cost of an unnormalized MPS on a sample batch:
///   Gamma = -(1/J) sum_j ln(P_j / Z) - ln J,  P_j = (v_j . Psi)^2,  Z = |Psi|^2.
/// Throws ZeroAmplitudeError when some v_j . Psi == 0.
double nll_cost(const Mps& m, const std::vector<ProductState>& samples);

/// Gradient of Gamma with respect to the canonical-center tensor:
///   g = 2 T / Z - (2/J) sum_j E_j / a_j
/// where E_j is the single-site environment of sample j and a_j its amplitude.
/// Requires a canonical center; Z reduces to |T|_F^2 there.
Tensor nll_gradient(const Mps& m, const std::vector<ProductState>& samples);

/// Trains one class model by alternating gradient-descent sweeps with
/// norm-scaled steps, QR center shifts, and rollback + alpha/beta decay on
/// any sweep that raises Gamma. Returns the best model seen.
std::pair<Mps, TrainReport> train_generative(const std::vector<ProductState>& samples,
                                             const TrainConfig& config);

/// Splits the dataset by label and runs one independent train_generative per
/// class (seeded seed + c), in parallel across classes. Every class up to
/// max(label) must be populated.
ClassifierBundle train_all_classes(const Dataset& dataset, const TrainConfig& config);

} // namespace gtnc
