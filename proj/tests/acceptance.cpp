// Acceptance gate: one self-contained check per shipping criterion, each
// printed as a single PASS/FAIL/SKIP line with the measured evidence. The
// process exits 0 only when every gated criterion passes.
//
// Environment:
//   GTNC_DATA_DIR   bundled data directory (set by ctest)
//   GTNC_CLI_PATH   path to the gtnc CLI binary (set by ctest)
//   GTNC_MNIST_DIR  optional: directory with the four MNIST IDX files; when
//                   unset, the desk-scale checks run on the bundled digits
//                   corpus and say so.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
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
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace gtnc;

namespace {

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

Outcome pass(std::string detail) { return {true, false, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, false, std::move(detail)}; }
Outcome skip(std::string detail) { return {true, true, std::move(detail)}; }

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

// ---------------------------------------------------------------------------
// Criterion 1: product_overlap vs the dense d^L dot product.

Outcome criterion1() {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t L = 2 + static_cast<std::size_t>(i % 11);
        const ProductState u = oracles::random_product_state(L, rng);
        const ProductState v = oracles::random_product_state(L, rng);
        const double fast = product_overlap(u, v);
        const double dense = oracles::dense_dot(oracles::product_state_vector(u),
                                                oracles::product_state_vector(v));
        worst = std::max(worst, std::fabs(fast - dense));
    }
    std::string d = "max |closed form - dense| = " + num(worst) + " over 200 pairs, L in [2,12]";
    return worst < 1e-10 ? pass(d) : fail(d + " (tolerance 1e-10)");
}

// ---------------------------------------------------------------------------
// Criterion 2: MPS and labeled-MPS contraction vs dense materialization.

std::size_t bond_cap(std::size_t chi, std::size_t pos, std::size_t L) {
    const std::size_t exp = std::min(pos, L - pos);
    return std::min(chi, std::size_t{1} << std::min<std::size_t>(exp, 20));
}

LabeledMps random_labeled(std::size_t L, std::size_t chi, std::size_t K, std::size_t label_site,
                          std::mt19937_64& rng) {
    std::vector<Tensor> sites;
    std::size_t left = 1;
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t right = bond_cap(chi, l + 1, L);
        const std::vector<std::size_t> shape = (l == label_site)
                                                   ? std::vector<std::size_t>{left, 2, K, right}
                                                   : std::vector<std::size_t>{left, 2, right};
        Tensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = oracles::uniform01(rng) - 0.5;
        sites.push_back(std::move(t));
        left = right;
    }
    return LabeledMps(std::move(sites), label_site);
}

Outcome criterion2() {
    std::mt19937_64 rng(22);
    double worst_mps = 0.0, worst_labeled = 0.0;
    std::size_t instances = 0;
    for (std::size_t L = 2; L <= 10; ++L) {
        for (int rep = 0; rep < 3; ++rep, ++instances) {
            const std::size_t chi = 1 + rng() % 4;
            const std::size_t K = 1 + rng() % 3;
            const ProductState v = oracles::random_product_state(L, rng);
            const auto dense_v = oracles::product_state_vector(v);

            const Mps m = random_mps(L, 2, chi, rng());
            const double fast = mps_product_overlap(m, v);
            const double dense = oracles::dense_dot(oracles::mps_to_vector(m), dense_v);
            worst_mps = std::max(worst_mps, std::fabs(fast - dense));

            const LabeledMps lm = random_labeled(L, chi, K, rng() % L, rng);
            const std::vector<double> out = predict_vector(lm, v);
            const auto rows = oracles::labeled_to_matrix(lm);
            for (std::size_t k = 0; k < K; ++k)
                worst_labeled =
                    std::max(worst_labeled, std::fabs(out[k] - oracles::dense_dot(rows[k], dense_v)));
        }
    }
    std::string d = "max deviation vs dense contraction: overlap " + num(worst_mps) +
                    ", label outputs " + num(worst_labeled) + " over " +
                    std::to_string(instances) + " instances (L<=10, chi<=4, K<=3)";
    return (worst_mps < 1e-10 && worst_labeled < 1e-10) ? pass(d) : fail(d + " (tolerance 1e-10)");
}

// ---------------------------------------------------------------------------
// Criterion 3: both gradients vs central finite differences.

double nll_fd_relative_error(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mps model = random_mps(6, 2, 3, rng());
    model.move_center(rng() % 6);
    const int center = model.canonical_center();
    std::vector<ProductState> samples;
    for (int j = 0; j < 4; ++j) samples.push_back(oracles::random_product_state(6, rng));

    const Tensor analytic = nll_gradient(model, samples);
    Tensor t = model.site(static_cast<std::size_t>(center));
    const auto cost = [&] {
        Mps c = model;
        c.set_site(static_cast<std::size_t>(center), t);
        return nll_cost(c, samples);
    };
    const std::vector<double> fd = oracles::central_difference(
        t.size(), 1e-5, cost, [&](std::size_t i) { return t[i]; },
        [&](std::size_t i, double x) { t[i] = x; });

    double dmax = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i)
        dmax = std::max(dmax, std::fabs(analytic[i] - fd[i]));
    return dmax / std::max(1e-30, max_abs(analytic.data()));
}

double disc_fd_relative_error(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t L = 6, K = 3;
    const std::size_t label_site = rng() % L;
    const std::size_t pair_left =
        (label_site == L - 1) ? L - 2 : (label_site > 0 && (rng() % 2) ? label_site - 1 : label_site);
    LabeledMps m = random_labeled(L, 3, K, label_site, rng);

    std::vector<ProductState> samples;
    std::vector<int> labels;
    for (int j = 0; j < 5; ++j) {
        samples.push_back(oracles::random_product_state(L, rng));
        labels.push_back(static_cast<int>(rng() % K));
    }
    const Tensor analytic = detail::pair_gradient(m, pair_left, samples, labels);
    Tensor theta = detail::merged_pair(m, pair_left);

    // Independent cost(theta): naive transfer environments around the pair.
    const auto outputs = [&](const ProductState& v) {
        std::vector<double> lenv{1.0};
        for (std::size_t l = 0; l < pair_left; ++l) {
            const Tensor& t = m.site(l);
            std::vector<double> next(t.extent(2), 0.0);
            for (std::size_t a = 0; a < t.extent(0); ++a)
                for (std::size_t s = 0; s < 2; ++s)
                    for (std::size_t b = 0; b < t.extent(2); ++b)
                        next[b] += lenv[a] * t.at({a, s, b}) * v.site(l)[s];
            lenv = std::move(next);
        }
        std::vector<double> renv{1.0};
        for (std::size_t l = L; l-- > pair_left + 2;) {
            const Tensor& t = m.site(l);
            std::vector<double> next(t.extent(0), 0.0);
            for (std::size_t a = 0; a < t.extent(0); ++a)
                for (std::size_t s = 0; s < 2; ++s)
                    for (std::size_t b = 0; b < t.extent(2); ++b)
                        next[a] += t.at({a, s, b}) * v.site(l)[s] * renv[b];
            renv = std::move(next);
        }
        std::vector<double> out(K, 0.0);
        for (std::size_t a = 0; a < theta.extent(0); ++a)
            for (std::size_t s = 0; s < 2; ++s)
                for (std::size_t sp = 0; sp < 2; ++sp)
                    for (std::size_t k = 0; k < K; ++k)
                        for (std::size_t c = 0; c < theta.extent(4); ++c)
                            out[k] += lenv[a] * theta.at({a, s, sp, k, c}) *
                                      v.site(pair_left)[s] * v.site(pair_left + 1)[sp] * renv[c];
        return out;
    };
    const auto cost = [&] {
        double total = 0.0;
        for (std::size_t j = 0; j < samples.size(); ++j) {
            const std::vector<double> out = outputs(samples[j]);
            for (std::size_t k = 0; k < K; ++k) {
                const double diff = out[k] - (static_cast<int>(k) == labels[j] ? 1.0 : 0.0);
                total += diff * diff;
            }
        }
        return total;
    };
    const std::vector<double> fd = oracles::central_difference(
        theta.size(), 1e-5, cost, [&](std::size_t i) { return theta[i]; },
        [&](std::size_t i, double x) { theta[i] = x; });

    double dmax = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i)
        dmax = std::max(dmax, std::fabs(analytic[i] - fd[i]));
    return dmax / std::max(1e-30, max_abs(analytic.data()));
}

Outcome criterion3() {
    double worst_nll = 0.0, worst_disc = 0.0;
    for (std::uint64_t i = 0; i < 20; ++i) {
        worst_nll = std::max(worst_nll, nll_fd_relative_error(300 + i));
        worst_disc = std::max(worst_disc, disc_fd_relative_error(400 + i));
    }
    std::string d = "max relative error vs central differences (h=1e-5): generative " +
                    num(worst_nll) + ", discriminative " + num(worst_disc) +
                    " over 20 instances each (L=6, chi=3)";
    return (worst_nll < 1e-5 && worst_disc < 1e-5) ? pass(d) : fail(d + " (tolerance 1e-5)");
}

// ---------------------------------------------------------------------------
// Criterion 4: cost floor on random instances; exact zero at the analytic
// uniform superposition of orthogonal samples.

Mps two_state_superposition(std::size_t L) {
    std::vector<Tensor> sites;
    const double amp = 1.0 / std::sqrt(2.0);
    {
        Tensor t({1, 2, 2});
        t.at({0, 0, 0}) = amp;
        t.at({0, 1, 1}) = amp;
        sites.push_back(std::move(t));
    }
    for (std::size_t l = 1; l + 1 < L; ++l) {
        Tensor t({2, 2, 2});
        t.at({0, 0, 0}) = 1.0;
        t.at({1, 1, 1}) = 1.0;
        sites.push_back(std::move(t));
    }
    {
        Tensor t({2, 2, 1});
        t.at({0, 0, 0}) = 1.0;
        t.at({1, 1, 0}) = 1.0;
        sites.push_back(std::move(t));
    }
    return Mps(std::move(sites));
}

Outcome criterion4() {
    // The floor is a theorem for sample sets that do not overlap each other:
    // distinct corner (binary) images map to mutually orthogonal product
    // states, the regime that "distinct samples" reaches anyway at realistic
    // pixel counts. (Strongly overlapping samples can push the cost below
    // zero, with -ln J the universal limit.)
    std::mt19937_64 rng(44);
    double floor_worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 100; ++i) {
        const std::size_t L = 4 + rng() % 5;
        const Mps m = random_mps(L, 2, 1 + rng() % 4, rng());
        std::vector<ProductState> samples;
        std::set<std::uint64_t> seen;
        const std::size_t J = 3 + rng() % 4;
        while (samples.size() < J) {
            const std::uint64_t mask = rng() & ((std::uint64_t{1} << L) - 1);
            if (!seen.insert(mask).second) continue;
            std::vector<double> image(L);
            for (std::size_t l = 0; l < L; ++l) image[l] = (mask >> l) & 1 ? 1.0 : 0.0;
            samples.push_back(map_image(image));
        }
        floor_worst = std::min(floor_worst, nll_cost(m, samples));
    }

    const std::size_t L = 6;
    const Mps ghz = two_state_superposition(L);
    std::vector<double> lo(L * 2, 0.0), hi(L * 2, 0.0);
    for (std::size_t l = 0; l < L; ++l) {
        lo[2 * l] = 1.0;      // exact |0...0>
        hi[2 * l + 1] = 1.0;  // exact |1...1>
    }
    const std::vector<ProductState> corners{ProductState(L, 2, lo), ProductState(L, 2, hi)};
    const double gamma_opt = nll_cost(ghz, corners);

    std::string d = "min Gamma over 100 random models on distinct corner samples = " +
                    num(floor_worst) +
                    "; uniform superposition on orthogonal samples gives Gamma = " +
                    num(gamma_opt);
    const bool ok = floor_worst >= -1e-10 && std::fabs(gamma_opt) < 1e-6;
    return ok ? pass(d) : fail(d + " (floor -1e-10, optimum |Gamma| < 1e-6)");
}

// ---------------------------------------------------------------------------
// Criterion 5: canonical form and vector preservation after every sweep.

double left_residual(const Tensor& t) {
    const Tensor g = contract(t, t, {{0, 0}, {1, 1}});
    double worst = 0.0;
    for (std::size_t i = 0; i < g.extent(0); ++i)
        for (std::size_t j = 0; j < g.extent(1); ++j)
            worst = std::max(worst, std::fabs(g.at({i, j}) - (i == j ? 1.0 : 0.0)));
    return worst;
}

double right_residual(const Tensor& t) {
    const Tensor g = contract(t, t, {{1, 1}, {2, 2}});
    double worst = 0.0;
    for (std::size_t i = 0; i < g.extent(0); ++i)
        for (std::size_t j = 0; j < g.extent(1); ++j)
            worst = std::max(worst, std::fabs(g.at({i, j}) - (i == j ? 1.0 : 0.0)));
    return worst;
}

Outcome criterion5() {
    std::mt19937_64 rng(55);
    std::vector<ProductState> samples;
    for (int j = 0; j < 5; ++j) samples.push_back(oracles::random_product_state(6, rng));

    TrainConfig config;
    config.max_bond = 3;
    config.step_size = 0.1;
    config.max_sweeps = 12;
    config.convergence_tol = 1e-12; // keep sweeping; this check wants many snapshots
    config.seed = 5;

    double worst_residual = 0.0, worst_drift = 0.0;
    std::size_t snapshots = 0;
    config.sweep_observer = [&](const Mps& m, const SweepRecord&) {
        ++snapshots;
        const int center = m.canonical_center();
        for (std::size_t l = 0; l < m.num_sites(); ++l) {
            if (static_cast<int>(l) < center)
                worst_residual = std::max(worst_residual, left_residual(m.site(l)));
            else if (static_cast<int>(l) > center)
                worst_residual = std::max(worst_residual, right_residual(m.site(l)));
        }
        const std::vector<double> before = oracles::mps_to_vector(m);
        Mps moved = m;
        moved.move_center(center == 0 ? m.num_sites() - 1 : 0);
        const std::vector<double> after = oracles::mps_to_vector(moved);
        for (std::size_t i = 0; i < before.size(); ++i)
            worst_drift = std::max(worst_drift, std::fabs(before[i] - after[i]));
    };
    train_generative(samples, config);

    std::string d = "over " + std::to_string(snapshots) +
                    " post-sweep snapshots: max orthonormality residual = " + num(worst_residual) +
                    ", max dense-vector drift under center movement = " + num(worst_drift);
    const bool ok = snapshots > 0 && worst_residual < 1e-10 && worst_drift < 1e-8;
    return ok ? pass(d) : fail(d + " (residual 1e-10, drift 1e-8)");
}

// ---------------------------------------------------------------------------
// Criterion 6: hilbert_distance_matrix equals the brute-force distance
// between normalized class-sum vectors.

Outcome criterion6() {
    std::mt19937_64 rng(66);
    double worst = 0.0;
    for (const std::size_t L : {4, 6, 8}) {
        std::vector<std::vector<double>> images;
        std::vector<int> labels;
        const std::vector<int> counts{3, 4, 5};
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) {
                images.push_back(oracles::random_pixels(L, rng));
                labels.push_back(c);
            }
        const Dataset data = oracles::make_dataset(1, L, images, labels);
        const HilbertDistanceResult result = hilbert_distance_matrix(fidelity_matrix(data));

        // brute force: normalized dense class sums
        std::vector<std::vector<double>> sums(3, std::vector<double>(std::size_t{1} << L, 0.0));
        for (std::size_t i = 0; i < images.size(); ++i) {
            const auto dense = oracles::product_state_vector(map_image(images[i]));
            auto& acc = sums[static_cast<std::size_t>(labels[i])];
            for (std::size_t j = 0; j < dense.size(); ++j) acc[j] += dense[j];
        }
        for (int c = 0; c < 3; ++c) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(counts[static_cast<std::size_t>(c)]));
            for (double& x : sums[static_cast<std::size_t>(c)]) x *= scale;
        }
        for (std::size_t c1 = 0; c1 < 3; ++c1)
            for (std::size_t c2 = 0; c2 < 3; ++c2) {
                double dist = 0.0;
                for (std::size_t j = 0; j < sums[c1].size(); ++j) {
                    const double diff = sums[c1][j] - sums[c2][j];
                    dist += diff * diff;
                }
                worst = std::max(worst, std::fabs(result.distance.at(c1, c2) - dist));
            }
    }
    std::string d = "max |matrix - brute force| = " + num(worst) +
                    " on random 3-class sets, L in {4,6,8}";
    return worst < 1e-10 ? pass(d) : fail(d + " (tolerance 1e-10)");
}

// ---------------------------------------------------------------------------
// Criteria 7/8 share one desk-scale run.

struct DeskRun {
    bool ran = false;
    std::string dataset_tag;
    std::string note;
    Dataset train, test;
    ClassifierBundle bundle;
    double acc_gtnc = 0.0, acc_lazy = 0.0, acc_disc = 0.0;
    std::size_t gtnc_sweeps = 0, disc_sweeps = 0;
    std::string error;
};

DeskRun& desk_run() {
    static DeskRun run = [] {
        DeskRun r;
        try {
            const std::string bundled = env_or("GTNC_DATA_DIR", "data") + "/mnist";
            const std::string mnist = env_or("GTNC_MNIST_DIR", bundled);
            Dataset train =
                load_idx(mnist + "/train-images-idx3-ubyte", mnist + "/train-labels-idx1-ubyte");
            Dataset test =
                load_idx(mnist + "/t10k-images-idx3-ubyte", mnist + "/t10k-labels-idx1-ubyte");
            r.train = subsample(downsample(train, 2), 500, 7);
            r.test = subsample(downsample(test, 2), 100, 7); // 100 x 10 = 1000 samples
            r.dataset_tag = "mnist14x14";
            r.note = std::string(mnist == bundled ? "bundled MNIST subset" : "MNIST") +
                     " at 14x14, 500 train/class, " + std::to_string(r.test.size()) + " test";

            TrainConfig config;
            config.max_bond = 16;
            config.step_size = 0.05;
            config.step_decay = 2.0;
            config.max_sweeps = 50;
            config.convergence_tol = 1e-4;
            config.seed = 7;

            r.bundle = train_all_classes(r.train, config);
            r.acc_gtnc = evaluate(r.bundle, r.test).accuracy;
            for (const auto& rep : r.bundle.provenance.reports) r.gtnc_sweeps += rep.sweeps_run;

            const LazyBundle lazy(r.train);
            r.acc_lazy = evaluate(lazy, r.test).accuracy;

            auto [disc, disc_report] = train_discriminative(r.train, config);
            r.acc_disc = evaluate(disc, r.test).accuracy;
            r.disc_sweeps = disc_report.sweeps_run;
            r.ran = true;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        return r;
    }();
    return run;
}

/// Record the measured desk-scale accuracies once (they are environment
/// observations, not spec constants). Never overwrites an existing record.
void record_baseline(const DeskRun& r) {
    const fs::path path = fs::path(env_or("GTNC_DATA_DIR", "data")).parent_path() /
                          "baselines" / "desk_baseline.tsv";
    std::error_code ec;
    if (fs::exists(path, ec)) {
        std::ifstream in(path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (text.find(r.dataset_tag) != std::string::npos) return; // already recorded
    }
    fs::create_directories(path.parent_path(), ec);
    const bool fresh = !fs::exists(path, ec);
    std::ofstream out(path, std::ios::app);
    if (!out) return; // recording is best effort; the criterion line carries the numbers
    char buf[256];
    if (fresh) out << "dataset\tchi\tseed\ttrain_per_class\ttest_count\tmodel\taccuracy\tsweeps\n";
    const auto row = [&](const char* model, double acc, std::size_t sweeps) {
        std::snprintf(buf, sizeof buf, "%s\t16\t7\t%zu\t%zu\t%s\t%.6f\t%zu\n",
                      r.dataset_tag.c_str(), r.train.size() / r.train.num_classes(),
                      r.test.size(), model, acc, sweeps);
        out << buf;
    };
    row("gtnc", r.acc_gtnc, r.gtnc_sweeps);
    row("lazy", r.acc_lazy, 0);
    row("disc", r.acc_disc, r.disc_sweeps);
}

Outcome criterion7() {
    const DeskRun& r = desk_run();
    if (!r.ran) return fail("desk-scale run failed: " + r.error);
    std::string d = "chi=16 accuracies on " + r.note + ": trained generative " + num(r.acc_gtnc) +
                    ", lazy sums " + num(r.acc_lazy) + ", discriminative " + num(r.acc_disc);
    const bool ok = r.acc_gtnc >= r.acc_lazy && r.acc_gtnc >= r.acc_disc;
    record_baseline(r); // the measured numbers are the evidence either way
    return ok ? pass(d) : fail(d + " (need generative >= both baselines)");
}

Outcome criterion8() {
    const DeskRun& r = desk_run();
    if (!r.ran) return fail("desk-scale run failed: " + r.error);
    const ClassPairMatrix raw = raw_distance_matrix(r.train);
    const ClassPairMatrix fid = fidelity_matrix(r.train);
    const ClusteringReport report = clustering_report(raw, fid);

    double raw_min = report.raw_distance.min_diagonal, raw_max = report.raw_distance.max_diagonal;
    raw_min = std::min(raw_min, report.raw_distance.min_offdiagonal);
    raw_max = std::max(raw_max, report.raw_distance.max_offdiagonal);
    const double spread = raw_max / raw_min;

    std::string d = "on " + r.dataset_tag + ": fidelity diagonal dominates off-diagonal (" +
                    num(report.fidelity.min_diagonal) + " > " +
                    num(report.fidelity.max_offdiagonal) + "), raw-distance spread max/min = " +
                    num(spread);
    const bool ok = report.clustered && spread <= 10.0;
    return ok ? pass(d) : fail(d + " (need dominance and spread <= 10)");
}

Outcome criterion9() {
    return skip(
        "full-scale replication (28x28 MNIST chi=32 -> ~97.6% and clustering ratio > 1e5; "
        "Fashion-MNIST -> ~88.2%) is long-running and not CI-gated; the README documents the "
        "CLI recipe");
}

// ---------------------------------------------------------------------------
// Criterion 10: Renyi-2 entropy bounded by ln(chi) at every bond.

Outcome criterion10() {
    const DeskRun& r = desk_run();
    if (!r.ran) return fail("desk-scale run failed: " + r.error);
    double worst_slack = std::numeric_limits<double>::infinity();
    std::size_t bonds = 0;
    for (const Mps& m : r.bundle.models) {
        const auto dims = m.bond_dims();
        for (std::size_t b = 1; b + 1 < dims.size(); ++b, ++bonds) {
            const double h2 = renyi2_entropy(m, b);
            worst_slack = std::min(worst_slack, std::log(static_cast<double>(dims[b])) - h2);
        }
    }
    std::string d = "min (ln chi - H2) = " + num(worst_slack) + " over " + std::to_string(bonds) +
                    " bonds of " + std::to_string(r.bundle.models.size()) + " trained models";
    return worst_slack >= -1e-10 ? pass(d) : fail(d + " (bound violated beyond 1e-10)");
}

// ---------------------------------------------------------------------------
// Criterion 11: repeated CLI runs are byte-identical.

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// history tables carry a wall-time column; drop it before comparing.
std::string strip_column(const std::string& text, std::size_t column) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) {
        std::istringstream cells(line);
        std::string cell;
        std::vector<std::string> kept;
        for (std::size_t i = 0; std::getline(cells, cell, '\t'); ++i)
            if (i != column) kept.push_back(cell);
        for (std::size_t i = 0; i < kept.size(); ++i) out += (i ? "\t" : "") + kept[i];
        out += '\n';
    }
    return out;
}

Outcome criterion11() {
    const std::string cli = env_or("GTNC_CLI_PATH", "");
    if (cli.empty()) return fail("GTNC_CLI_PATH is not set; cannot invoke the CLI");
    const std::string digits = env_or("GTNC_DATA_DIR", "data") + "/digits";
    const fs::path scratch = fs::temp_directory_path() / "gtnc_acceptance_runs";
    std::error_code ec;
    fs::remove_all(scratch, ec);
    fs::create_directories(scratch);

    const auto shell = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args;
        return std::system(cmd.c_str());
    };
    const std::string data_flags = "--images \"" + digits + "/train-images-idx3-ubyte\" --labels \"" +
                                   digits + "/train-labels-idx1-ubyte\" --per-class 10";
    const std::string train_flags =
        data_flags + " --chi 4 --alpha 0.1 --max-sweeps 5 --seed 3 --out \"";

    // eval and entropy read the models from run "a" both times so that every
    // input (and hence every recorded manifest) is identical between reruns.
    const std::string models = (scratch / "a" / "train").string();
    for (const char* tag : {"a", "b"}) {
        const std::string root = (scratch / tag).string();
        if (shell("train " + train_flags + root + "/train\"") != 0)
            return fail("CLI train invocation failed");
    }
    for (const char* tag : {"a", "b"}) {
        const std::string root = (scratch / tag).string();
        if (shell("eval " + data_flags + " --models \"" + models + "\" --out \"" + root +
                  "/eval\"") != 0)
            return fail("CLI eval invocation failed");
        if (shell("distances " + data_flags + " --seed 3 --out \"" + root + "/dist\"") != 0)
            return fail("CLI distances invocation failed");
        if (shell("entropy --models \"" + models + "\" --out \"" + root + "/entropy\"") != 0)
            return fail("CLI entropy invocation failed");
    }

    std::size_t compared = 0;
    std::vector<std::string> mismatches;
    for (const auto& entry : fs::recursive_directory_iterator(scratch / "a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), scratch / "a");
        std::string lhs = read_file(entry.path());
        std::string rhs = read_file(scratch / "b" / rel);
        const bool is_history = rel.filename().string().find("history.tsv") != std::string::npos;
        if (is_history) {
            lhs = strip_column(lhs, 3);
            rhs = strip_column(rhs, 3);
        }
        ++compared;
        if (lhs != rhs) mismatches.push_back(rel.string());
    }
    if (compared == 0) return fail("no CLI output files were produced to compare");
    if (!mismatches.empty()) {
        std::string d = "differing files between identical runs:";
        for (const auto& f : mismatches) d += " " + f;
        return fail(d);
    }
    return pass("train/eval/distances/entropy reruns produced " + std::to_string(compared) +
                " byte-identical files (history tables compared without their wall-time column)");
}

} // namespace

int main() {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, criterion1}, {2, criterion2},  {3, criterion3},  {4, criterion4},
        {5, criterion5}, {6, criterion6},  {7, criterion7},  {8, criterion8},
        {9, criterion9}, {10, criterion10}, {11, criterion11},
    };
    bool all_ok = true;
    for (const auto& [id, fn] : criteria) {
        Outcome outcome;
        try {
            outcome = fn();
        } catch (const std::exception& e) {
            outcome = fail(std::string("unexpected error: ") + e.what());
        }
        const char* verdict = outcome.skipped ? "SKIP" : (outcome.pass ? "PASS" : "FAIL");
        std::cout << verdict << ": criterion " << id << " — " << outcome.detail << "\n";
        std::cout.flush();
        all_ok = all_ok && outcome.pass;
    }
    return all_ok ? 0 : 1;
}
