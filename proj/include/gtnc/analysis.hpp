#pragma once

#include <cstddef>
#include <vector>

#include "gtnc/dataset.hpp"

namespace gtnc {

enum class MatrixKind { euclidean_raw, fidelity_hilbert, distance_hilbert };

/// Symmetric K x K class-pair statistic (a distance or fidelity matrix).
struct ClassPairMatrix {
    MatrixKind kind = MatrixKind::euclidean_raw;
    std::vector<std::vector<double>> values;
    std::vector<std::size_t> class_counts;

    std::size_t num_classes() const { return values.size(); }
    double at(std::size_t c1, std::size_t c2) const { return values.at(c1).at(c2); }
};

/// Mean pairwise Euclidean distance between raw pixel vectors:
///   D_{c1 c2} = (1 / N_{c1} N_{c2}) sum_{x in c1} sum_{y in c2} |x - y|.
/// The diagonal keeps the literal double sum, so same-sample pairs
/// contribute zero but are still counted.
ClassPairMatrix raw_distance_matrix(const Dataset& data);

/// Mean overlap of feature-mapped samples:
///   F_{c1 c2} = sum_{u in c1} sum_{v in c2} u.v / sqrt(N_{c1} N_{c2}).
/// With c1 = c2 the same formula gives F_cc = |Psi~_c|^2 (the squared norm
/// of the class-sum state), which is near 1 when cross overlaps are small.
ClassPairMatrix fidelity_matrix(const Dataset& data);

/// Exact squared Hilbert-space distance between the class-sum states,
/// derived from the fidelity matrix: D = F_{c1 c1} + F_{c2 c2} - 2 F_{c1 c2}
/// = |Psi~_1 - Psi~_2|^2, so the diagonal vanishes exactly. Also carries the
/// unit-norm approximation D ~ 2 - 2F and the largest gap between the two.
struct HilbertDistanceResult {
    ClassPairMatrix distance;
    ClassPairMatrix approximation; // 2 - 2 F_{c1 c2}
    double max_abs_residual = 0.0; // max |distance - approximation|
};

HilbertDistanceResult hilbert_distance_matrix(const ClassPairMatrix& fidelity);

struct ClusteringStats {
    double min_diagonal = 0.0;
    double max_diagonal = 0.0;
    double min_offdiagonal = 0.0;
    double max_offdiagonal = 0.0;
    /// min_diagonal / max_offdiagonal; DBL_MAX sentinel when the
    /// off-diagonal maximum is not positive (e.g. K = 1).
    double ratio = 0.0;
};

/// Diagonal-dominance summary of the clustering study: `clustered` is set
/// when every diagonal fidelity exceeds every off-diagonal one.
struct ClusteringReport {
    ClusteringStats fidelity;
    ClusteringStats raw_distance;
    bool clustered = false;
};

ClusteringReport clustering_report(const ClassPairMatrix& raw, const ClassPairMatrix& fidelity);

} // namespace gtnc
