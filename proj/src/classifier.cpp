#include "gtnc/classifier.hpp"

#include <cmath>
#include <string>

#include "gtnc/parallel.hpp"

namespace gtnc {

namespace detail {

int argmax_lowest(const std::vector<double>& v) {
    int best = 0;
    for (std::size_t c = 1; c < v.size(); ++c)
        if (v[c] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    return best;
}

} // namespace detail

namespace {

ClassifyResult result_from_fidelities(std::vector<double> f) {
    ClassifyResult r;
    r.log_fidelities.reserve(f.size());
    bool any = false;
    for (double v : f) {
        any = any || (v > 0.0);
        r.log_fidelities.push_back(std::log(v + 1e-300));
    }
    r.decided = any;
    r.label = any ? detail::argmax_lowest(f) : 0;
    r.fidelities = std::move(f);
    return r;
}

} // namespace

std::vector<double> fidelity(const ClassifierBundle& bundle, const ProductState& v) {
    if (bundle.models.empty()) throw ArgumentError("classifier bundle is empty");
    if (bundle.norms.size() != bundle.models.size())
        throw ConsistencyError("bundle norm cache does not match its model list");
    std::vector<double> f(bundle.models.size());
    for (std::size_t c = 0; c < bundle.models.size(); ++c) {
        const double nrm = bundle.norms[c];
        if (!(nrm > 0.0))
            throw DegenerateStateError("class " + std::to_string(c) + " model has zero norm");
        f[c] = std::fabs(mps_product_overlap(bundle.models[c], v)) / nrm;
    }
    return f;
}

ClassifyResult classify(const ClassifierBundle& bundle, const ProductState& v) {
    return result_from_fidelities(fidelity(bundle, v));
}

LazyBundle::LazyBundle(const Dataset& training) {
    if (training.size() == 0) throw ArgumentError("training dataset is empty");
    const std::size_t K = training.num_classes();
    pixels_per_image_ = training.pixels_per_image();
    class_pixels_.assign(K, {});
    counts_.assign(K, 0);
    const auto counts = training.class_counts();
    for (std::size_t c = 0; c < K; ++c) class_pixels_[c].reserve(counts[c] * pixels_per_image_);
    for (std::size_t i = 0; i < training.size(); ++i) {
        const auto c = static_cast<std::size_t>(training.label(i));
        const auto img = training.image(i);
        class_pixels_[c].insert(class_pixels_[c].end(), img.begin(), img.end());
        ++counts_[c];
    }
}

const std::vector<double>& LazyBundle::class_pixels(std::size_t c) const {
    if (c >= class_pixels_.size()) throw ArgumentError("class index out of range");
    return class_pixels_[c];
}

std::vector<double> lazy_fidelity(const LazyBundle& bundle, const ProductState& v) {
    if (v.num_sites() != bundle.pixels_per_image() || v.local_dim() != 2)
        throw DimensionError("product state geometry does not match the bundle");
    const std::size_t K = bundle.num_classes();
    const std::size_t n = bundle.pixels_per_image();
    std::vector<double> f(K, 0.0);
    for (std::size_t c = 0; c < K; ++c) {
        const auto& pixels = bundle.class_pixels(c);
        const std::size_t N = bundle.counts()[c];
        if (N == 0) continue; // empty class keeps fidelity 0
        double acc = 0.0;
        for (std::size_t u = 0; u < N; ++u) {
            double overlap = 1.0;
            const double* px = pixels.data() + u * n;
            for (std::size_t i = 0; i < n; ++i) {
                const auto comp = map_pixel(px[i]);
                const auto vi = v.site(i);
                overlap *= vi[0] * comp[0] + vi[1] * comp[1];
            }
            acc += overlap;
        }
        f[c] = std::fabs(acc) / std::sqrt(static_cast<double>(N));
    }
    return f;
}

ClassifyResult classify_lazy(const LazyBundle& bundle, const ProductState& v) {
    return result_from_fidelities(lazy_fidelity(bundle, v));
}

namespace detail {

EvalReport evaluate_with(const std::function<ClassifyResult(const ProductState&)>& classify_fn,
                         std::size_t model_classes, const Dataset& test) {
    if (test.size() == 0) throw ArgumentError("evaluation dataset is empty");
    const std::size_t N = test.size();
    const std::size_t K = std::max(model_classes, test.num_classes());

    EvalReport report;
    report.predicted.assign(N, 0);
    report.log_fidelities.assign(N, {});
    report.decided.assign(N, true);
    parallel_chunks(N, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            ClassifyResult r = classify_fn(map_image(test.image(i)));
            report.predicted[i] = r.label;
            report.log_fidelities[i] = std::move(r.log_fidelities);
            report.decided[i] = r.decided;
        }
    });

    report.confusion.assign(K, std::vector<std::size_t>(K, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < N; ++i) {
        const auto t = static_cast<std::size_t>(test.label(i));
        const auto p = static_cast<std::size_t>(report.predicted[i]);
        ++report.confusion[t][p];
        if (t == p) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(N);
    return report;
}

} // namespace detail

EvalReport evaluate(const ClassifierBundle& bundle, const Dataset& test) {
    return detail::evaluate_with([&](const ProductState& v) { return classify(bundle, v); },
                                 bundle.num_classes(), test);
}

EvalReport evaluate(const LazyBundle& bundle, const Dataset& test) {
    return detail::evaluate_with([&](const ProductState& v) { return classify_lazy(bundle, v); },
                                 bundle.num_classes(), test);
}

} // namespace gtnc
