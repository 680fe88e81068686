#include "gtnc/analysis.hpp"

#include <cmath>
#include <limits>

#include "gtnc/errors.hpp"
#include "gtnc/feature_map.hpp"
#include "gtnc/parallel.hpp"

namespace gtnc {

namespace {

struct PairTask {
    std::size_t c1, c2;
};

std::vector<PairTask> upper_triangle(std::size_t K) {
    std::vector<PairTask> tasks;
    tasks.reserve(K * (K + 1) / 2);
    for (std::size_t c1 = 0; c1 < K; ++c1)
        for (std::size_t c2 = c1; c2 < K; ++c2) tasks.push_back({c1, c2});
    return tasks;
}

std::vector<std::size_t> checked_counts(const Dataset& data) {
    if (data.size() == 0) throw ArgumentError("dataset is empty");
    const auto counts = data.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        if (counts[c] == 0)
            throw ArgumentError("class " + std::to_string(c) + " has no samples");
    return counts;
}

} // namespace

ClassPairMatrix raw_distance_matrix(const Dataset& data) {
    const auto counts = checked_counts(data);
    const auto parts = split_by_class(data);
    const std::size_t K = parts.size(), n = data.pixels_per_image();

    ClassPairMatrix m;
    m.kind = MatrixKind::euclidean_raw;
    m.class_counts = counts;
    m.values.assign(K, std::vector<double>(K, 0.0));

    const auto tasks = upper_triangle(K);
    parallel_chunks(tasks.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            const auto [c1, c2] = tasks[t];
            const Dataset &a = parts[c1], &b = parts[c2];
            double sum = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                const auto x = a.image(i);
                for (std::size_t j = 0; j < b.size(); ++j) {
                    const auto y = b.image(j);
                    double sq = 0.0;
                    for (std::size_t p = 0; p < n; ++p) {
                        const double diff = x[p] - y[p];
                        sq += diff * diff;
                    }
                    sum += std::sqrt(sq);
                }
            }
            m.values[c1][c2] = sum / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
        }
    });
    for (std::size_t c1 = 0; c1 < K; ++c1)
        for (std::size_t c2 = 0; c2 < c1; ++c2) m.values[c1][c2] = m.values[c2][c1];
    return m;
}

ClassPairMatrix fidelity_matrix(const Dataset& data) {
    const auto counts = checked_counts(data);
    const auto parts = split_by_class(data);
    const std::size_t K = parts.size();

    // feature-map every image once; overlaps then factorize per site
    std::vector<std::vector<ProductState>> mapped(K);
    for (std::size_t c = 0; c < K; ++c) {
        mapped[c].reserve(parts[c].size());
        for (std::size_t i = 0; i < parts[c].size(); ++i)
            mapped[c].push_back(map_image(parts[c].image(i)));
    }

    ClassPairMatrix m;
    m.kind = MatrixKind::fidelity_hilbert;
    m.class_counts = counts;
    m.values.assign(K, std::vector<double>(K, 0.0));

    const auto tasks = upper_triangle(K);
    parallel_chunks(tasks.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            const auto [c1, c2] = tasks[t];
            double sum = 0.0;
            for (const auto& u : mapped[c1])
                for (const auto& v : mapped[c2]) sum += product_overlap(u, v);
            m.values[c1][c2] =
                sum / std::sqrt(static_cast<double>(counts[c1]) * static_cast<double>(counts[c2]));
        }
    });
    for (std::size_t c1 = 0; c1 < K; ++c1)
        for (std::size_t c2 = 0; c2 < c1; ++c2) m.values[c1][c2] = m.values[c2][c1];
    return m;
}

HilbertDistanceResult hilbert_distance_matrix(const ClassPairMatrix& fidelity) {
    if (fidelity.kind != MatrixKind::fidelity_hilbert)
        throw ArgumentError("hilbert_distance_matrix expects a fidelity matrix");
    const std::size_t K = fidelity.num_classes();
    HilbertDistanceResult r;
    r.distance.kind = MatrixKind::distance_hilbert;
    r.distance.class_counts = fidelity.class_counts;
    r.distance.values.assign(K, std::vector<double>(K, 0.0));
    r.approximation = r.distance;
    for (std::size_t c1 = 0; c1 < K; ++c1)
        for (std::size_t c2 = 0; c2 < K; ++c2) {
            const double exact =
                fidelity.at(c1, c1) + fidelity.at(c2, c2) - 2.0 * fidelity.at(c1, c2);
            const double approx = 2.0 - 2.0 * fidelity.at(c1, c2);
            r.distance.values[c1][c2] = exact;
            r.approximation.values[c1][c2] = approx;
            r.max_abs_residual = std::max(r.max_abs_residual, std::fabs(exact - approx));
        }
    return r;
}

namespace {

ClusteringStats matrix_stats(const ClassPairMatrix& m) {
    const std::size_t K = m.num_classes();
    ClusteringStats s;
    s.min_diagonal = std::numeric_limits<double>::infinity();
    s.max_diagonal = -std::numeric_limits<double>::infinity();
    s.min_offdiagonal = std::numeric_limits<double>::infinity();
    s.max_offdiagonal = -std::numeric_limits<double>::infinity();
    for (std::size_t c1 = 0; c1 < K; ++c1)
        for (std::size_t c2 = 0; c2 < K; ++c2) {
            const double v = m.at(c1, c2);
            if (c1 == c2) {
                s.min_diagonal = std::min(s.min_diagonal, v);
                s.max_diagonal = std::max(s.max_diagonal, v);
            } else {
                s.min_offdiagonal = std::min(s.min_offdiagonal, v);
                s.max_offdiagonal = std::max(s.max_offdiagonal, v);
            }
        }
    if (K == 1) {
        s.min_offdiagonal = 0.0;
        s.max_offdiagonal = 0.0;
    }
    s.ratio = (s.max_offdiagonal > 0.0) ? s.min_diagonal / s.max_offdiagonal
                                        : std::numeric_limits<double>::max();
    return s;
}

} // namespace

ClusteringReport clustering_report(const ClassPairMatrix& raw, const ClassPairMatrix& fidelity) {
    if (raw.num_classes() != fidelity.num_classes())
        throw DimensionError("matrices disagree on the class count");
    if (raw.kind != MatrixKind::euclidean_raw || fidelity.kind != MatrixKind::fidelity_hilbert)
        throw ArgumentError("clustering_report expects a raw-distance and a fidelity matrix");
    ClusteringReport report;
    report.raw_distance = matrix_stats(raw);
    report.fidelity = matrix_stats(fidelity);
    report.clustered = fidelity.num_classes() == 1 ||
                       report.fidelity.min_diagonal > report.fidelity.max_offdiagonal;
    return report;
}

} // namespace gtnc
