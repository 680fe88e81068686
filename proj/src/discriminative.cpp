#include "gtnc/discriminative.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>

#include "gtnc/mps.hpp"
#include "gtnc/parallel.hpp"

namespace gtnc {

namespace {

double uniform_entry(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0) - 0.5;
}

void validate_labeled(const std::vector<Tensor>& ts, std::size_t label_site) {
    if (ts.empty()) throw ArgumentError("labeled MPS needs at least one site");
    const std::size_t L = ts.size();
    if (label_site >= L) throw ArgumentError("label site index out of range");
    const std::size_t d = ts[0].extent(1);
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t want = (l == label_site) ? 4 : 3;
        if (ts[l].rank() != want)
            throw DimensionError("labeled MPS site " + std::to_string(l) + " has rank " +
                                 std::to_string(ts[l].rank()) + ", expected " +
                                 std::to_string(want));
        if (ts[l].extent(1) != d)
            throw DimensionError("labeled MPS sites disagree on the physical dimension");
        const std::size_t left = ts[l].extent(0);
        const std::size_t right = ts[l].extent(ts[l].rank() - 1);
        if (l == 0 && left != 1) throw DimensionError("labeled MPS left boundary bond must be 1");
        if (l + 1 == L && right != 1)
            throw DimensionError("labeled MPS right boundary bond must be 1");
        if (l + 1 < L && right != ts[l + 1].extent(0))
            throw DimensionError("labeled MPS bond mismatch between sites " + std::to_string(l) +
                                 " and " + std::to_string(l + 1));
    }
}

/// Outputs of the label-site tensor (a, d, K, b) against fixed environments.
std::vector<double> label_outputs(const Tensor& t, std::span<const double> lenv,
                                  std::span<const double> local, std::span<const double> renv) {
    const std::size_t a = t.extent(0), d = t.extent(1), K = t.extent(2), b = t.extent(3);
    std::vector<double> out(K, 0.0);
    const double* p = t.data().data();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t s = 0; s < d; ++s) {
            const double w = lenv[i] * local[s];
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t bb = 0; bb < b; ++bb) out[k] += w * p[idx++] * renv[bb];
        }
    return out;
}

/// Outputs of a merged two-site block (a, d, d', K, c).
std::vector<double> pair_outputs(const Tensor& theta, std::span<const double> lenv,
                                 std::span<const double> loc1, std::span<const double> loc2,
                                 std::span<const double> renv) {
    const std::size_t a = theta.extent(0), d = theta.extent(1), d2 = theta.extent(2);
    const std::size_t K = theta.extent(3), c = theta.extent(4);
    std::vector<double> out(K, 0.0);
    const double* p = theta.data().data();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t s = 0; s < d; ++s)
            for (std::size_t s2 = 0; s2 < d2; ++s2) {
                const double w = lenv[i] * loc1[s] * loc2[s2];
                for (std::size_t k = 0; k < K; ++k)
                    for (std::size_t bb = 0; bb < c; ++bb) out[k] += w * p[idx++] * renv[bb];
            }
    return out;
}

/// g += (lenv (x) loc1 (x) loc2 (x) coeff (x) renv)
void accumulate_pair_environment(Tensor& g, const std::vector<double>& coeff,
                                 std::span<const double> lenv, std::span<const double> loc1,
                                 std::span<const double> loc2, std::span<const double> renv) {
    const std::size_t a = g.extent(0), d = g.extent(1), d2 = g.extent(2);
    const std::size_t K = g.extent(3), c = g.extent(4);
    double* p = g.data().data();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t s = 0; s < d; ++s)
            for (std::size_t s2 = 0; s2 < d2; ++s2) {
                const double w = lenv[i] * loc1[s] * loc2[s2];
                for (std::size_t k = 0; k < K; ++k) {
                    const double wk = w * coeff[k];
                    for (std::size_t bb = 0; bb < c; ++bb) p[idx++] += wk * renv[bb];
                }
            }
}

/// Merge the update pair (l, l+1) into a block with index order
/// (left bond, phys l, phys l+1, label, right bond).
Tensor merge_pair(const std::vector<Tensor>& ts, std::size_t l, std::size_t label_site) {
    if (label_site == l)
        return contract(ts[l], ts[l + 1], {{3, 0}}).permute({0, 1, 3, 2, 4});
    return contract(ts[l], ts[l + 1], {{2, 0}});
}

Tensor scale_first_axis(Tensor t, const std::vector<double>& s) {
    const std::size_t rows = t.extent(0), cols = t.size() / t.extent(0);
    double* p = t.data().data();
    std::size_t idx = 0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) p[idx++] *= s[r];
    return t;
}

Tensor scale_last_axis(Tensor t, const std::vector<double>& s) {
    const std::size_t cols = t.extent(t.rank() - 1);
    double* p = t.data().data();
    for (std::size_t i = 0; i < t.size(); ++i) p[i] *= s[i % cols];
    return t;
}

struct EnvCache {
    std::vector<std::vector<double>> at; // at[b]: one dim[b]-block per batch sample
    std::vector<std::size_t> dim;
    std::vector<std::size_t> batch;
    bool valid = false;
};

/// Blocks [1..L] from plain sites L-1..1; requires the label at site 0.
void build_right_cache(const std::vector<Tensor>& ts, const std::vector<ProductState>& samples,
                       const std::vector<std::size_t>& batch, EnvCache& cache) {
    const std::size_t L = ts.size(), J = batch.size();
    cache.at.assign(L + 1, {});
    cache.dim.assign(L + 1, 0);
    cache.dim[L] = 1;
    cache.at[L].assign(J, 1.0);
    for (std::size_t l = L; l-- > 1;) {
        const std::size_t a = ts[l].extent(0), b = ts[l].extent(2);
        cache.dim[l] = a;
        cache.at[l].assign(J * a, 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            auto env = transfer_right(ts[l], samples[batch[j]].site(l),
                                      std::span<const double>(cache.at[l + 1].data() + j * b, b));
            std::copy(env.begin(), env.end(), cache.at[l].begin() + j * a);
        }
    }
    cache.batch = batch;
    cache.valid = true;
}

/// Blocks [0..L-1] from plain sites 0..L-2; requires the label at site L-1.
void build_left_cache(const std::vector<Tensor>& ts, const std::vector<ProductState>& samples,
                      const std::vector<std::size_t>& batch, EnvCache& cache) {
    const std::size_t L = ts.size(), J = batch.size();
    cache.at.assign(L + 1, {});
    cache.dim.assign(L + 1, 0);
    cache.dim[0] = 1;
    cache.at[0].assign(J, 1.0);
    for (std::size_t l = 0; l + 1 < L; ++l) {
        const std::size_t a = ts[l].extent(0), b = ts[l].extent(2);
        cache.dim[l + 1] = b;
        cache.at[l + 1].assign(J * b, 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            auto env = transfer_left(std::span<const double>(cache.at[l].data() + j * a, a),
                                     ts[l], samples[batch[j]].site(l));
            std::copy(env.begin(), env.end(), cache.at[l + 1].begin() + j * b);
        }
    }
    cache.batch = batch;
    cache.valid = true;
}

double squared_error(const std::vector<double>& out, int label) {
    double cost = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double r = out[k] - (static_cast<std::size_t>(label) == k ? 1.0 : 0.0);
        cost += r * r;
    }
    return cost;
}

/// Quadratic cost when the label sits at a boundary site, from a fresh cache.
double boundary_cost(const std::vector<Tensor>& ts, std::size_t label_site,
                     const std::vector<ProductState>& samples, const std::vector<int>& labels,
                     const EnvCache& cache) {
    const std::size_t L = ts.size(), J = cache.batch.size();
    const double one = 1.0;
    double cost = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        const std::size_t sj = cache.batch[j];
        std::span<const double> le, re;
        if (label_site == 0) {
            le = std::span<const double>(&one, 1);
            re = std::span<const double>(cache.at[1].data() + j * cache.dim[1], cache.dim[1]);
        } else {
            le = std::span<const double>(cache.at[L - 1].data() + j * cache.dim[L - 1],
                                         cache.dim[L - 1]);
            re = std::span<const double>(&one, 1);
        }
        cost += squared_error(label_outputs(ts[label_site], le, samples[sj].site(label_site), re),
                              labels[sj]);
    }
    return cost;
}

struct SweepOutcome {
    double cost = 0.0;
    double discarded = 0.0;
};

/// Left-to-right two-site sweep; the label enters at site 0 and exits at
/// site L-1. Consumes the right cache, produces the left cache.
SweepOutcome sweep_right_disc(std::vector<Tensor>& ts, const std::vector<ProductState>& samples,
                              const std::vector<int>& labels,
                              const std::vector<std::size_t>& batch, double alpha,
                              std::size_t max_bond, const EnvCache& right, EnvCache& left) {
    const std::size_t L = ts.size(), J = batch.size();
    left.at.assign(L + 1, {});
    left.dim.assign(L + 1, 0);
    left.dim[0] = 1;
    left.at[0].assign(J, 1.0);
    SweepOutcome outcome;
    for (std::size_t l = 0; l + 1 < L; ++l) {
        Tensor theta = merge_pair(ts, l, l);
        const std::size_t K = theta.extent(3);
        const double tn = frobenius_norm(theta);
        if (!(tn > 0.0)) throw DegenerateStateError("model norm collapsed to zero during a sweep");
        Tensor grad(theta.shape());
        for (std::size_t j = 0; j < J; ++j) {
            const std::size_t sj = batch[j];
            std::span<const double> le(left.at[l].data() + j * left.dim[l], left.dim[l]);
            std::span<const double> re(right.at[l + 2].data() + j * right.dim[l + 2],
                                       right.dim[l + 2]);
            auto out = pair_outputs(theta, le, samples[sj].site(l), samples[sj].site(l + 1), re);
            std::vector<double> coeff(K);
            for (std::size_t k = 0; k < K; ++k)
                coeff[k] =
                    2.0 * (out[k] - (static_cast<std::size_t>(labels[sj]) == k ? 1.0 : 0.0));
            accumulate_pair_environment(grad, coeff, le, samples[sj].site(l),
                                        samples[sj].site(l + 1), re);
        }
        const double gn = frobenius_norm(grad);
        if (gn > 0.0) theta = theta + grad.scaled(-alpha * tn / gn);
        auto svd = svd_split(theta, {0, 1}, max_bond);
        outcome.discarded += svd.discarded_weight;
        ts[l] = std::move(svd.u);                                      // (a, d, m), left-orthonormal
        ts[l + 1] = scale_first_axis(std::move(svd.vt), svd.singular_values); // (m, d', K, c)
        const std::size_t a = ts[l].extent(0), m = ts[l].extent(2);
        left.dim[l + 1] = m;
        left.at[l + 1].assign(J * m, 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            auto env = transfer_left(std::span<const double>(left.at[l].data() + j * a, a), ts[l],
                                     samples[batch[j]].site(l));
            std::copy(env.begin(), env.end(), left.at[l + 1].begin() + j * m);
        }
    }
    const double one = 1.0;
    for (std::size_t j = 0; j < J; ++j) {
        const std::size_t sj = batch[j];
        std::span<const double> le(left.at[L - 1].data() + j * left.dim[L - 1], left.dim[L - 1]);
        outcome.cost += squared_error(
            label_outputs(ts[L - 1], le, samples[sj].site(L - 1), std::span<const double>(&one, 1)),
            labels[sj]);
    }
    left.batch = batch;
    left.valid = true;
    return outcome;
}

/// Right-to-left mirror; the label enters at site L-1 and exits at site 0.
SweepOutcome sweep_left_disc(std::vector<Tensor>& ts, const std::vector<ProductState>& samples,
                             const std::vector<int>& labels,
                             const std::vector<std::size_t>& batch, double alpha,
                             std::size_t max_bond, const EnvCache& left, EnvCache& right) {
    const std::size_t L = ts.size(), J = batch.size();
    right.at.assign(L + 1, {});
    right.dim.assign(L + 1, 0);
    right.dim[L] = 1;
    right.at[L].assign(J, 1.0);
    SweepOutcome outcome;
    for (std::size_t l = L - 1; l-- > 0;) {
        Tensor theta = merge_pair(ts, l, l + 1);
        const std::size_t K = theta.extent(3);
        const double tn = frobenius_norm(theta);
        if (!(tn > 0.0)) throw DegenerateStateError("model norm collapsed to zero during a sweep");
        Tensor grad(theta.shape());
        for (std::size_t j = 0; j < J; ++j) {
            const std::size_t sj = batch[j];
            std::span<const double> le(left.at[l].data() + j * left.dim[l], left.dim[l]);
            std::span<const double> re(right.at[l + 2].data() + j * right.dim[l + 2],
                                       right.dim[l + 2]);
            auto out = pair_outputs(theta, le, samples[sj].site(l), samples[sj].site(l + 1), re);
            std::vector<double> coeff(K);
            for (std::size_t k = 0; k < K; ++k)
                coeff[k] =
                    2.0 * (out[k] - (static_cast<std::size_t>(labels[sj]) == k ? 1.0 : 0.0));
            accumulate_pair_environment(grad, coeff, le, samples[sj].site(l),
                                        samples[sj].site(l + 1), re);
        }
        const double gn = frobenius_norm(grad);
        if (gn > 0.0) theta = theta + grad.scaled(-alpha * tn / gn);
        auto svd = svd_split(theta, {0, 1, 3}, max_bond);
        outcome.discarded += svd.discarded_weight;
        ts[l] = scale_last_axis(std::move(svd.u), svd.singular_values); // (a, d, K, m)
        ts[l + 1] = std::move(svd.vt);                                  // (m, d', c), right-orthonormal
        const std::size_t m = ts[l + 1].extent(0), b = right.dim[l + 2];
        right.dim[l + 1] = m;
        right.at[l + 1].assign(J * m, 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            auto env = transfer_right(ts[l + 1], samples[batch[j]].site(l + 1),
                                      std::span<const double>(right.at[l + 2].data() + j * b, b));
            std::copy(env.begin(), env.end(), right.at[l + 1].begin() + j * m);
        }
    }
    const double one = 1.0;
    for (std::size_t j = 0; j < J; ++j) {
        const std::size_t sj = batch[j];
        std::span<const double> re(right.at[1].data() + j * right.dim[1], right.dim[1]);
        outcome.cost += squared_error(
            label_outputs(ts[0], std::span<const double>(&one, 1), samples[sj].site(0), re),
            labels[sj]);
    }
    right.batch = batch;
    right.valid = true;
    return outcome;
}

std::vector<Tensor> random_labeled_tensors(std::size_t L, std::size_t d, std::size_t K,
                                           std::size_t max_bond, std::uint64_t seed) {
    std::vector<std::size_t> dims(L + 1, 1);
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t width = d * (l == 0 ? K : 1);
        dims[l + 1] = std::min(max_bond, dims[l] > max_bond / width ? max_bond : dims[l] * width);
    }
    dims[L] = 1;
    for (std::size_t l = L; l-- > 1;)
        dims[l] = std::min(dims[l], dims[l + 1] > max_bond / d ? max_bond : dims[l + 1] * d);

    std::mt19937_64 rng(seed);
    std::vector<Tensor> ts;
    ts.reserve(L);
    for (std::size_t l = 0; l < L; ++l) {
        Tensor t(l == 0 ? std::vector<std::size_t>{1, d, K, dims[1]}
                        : std::vector<std::size_t>{dims[l], d, dims[l + 1]});
        for (double& x : t.data()) x = uniform_entry(rng);
        ts.push_back(std::move(t));
    }
    // right-orthonormalize everything but the label site, then normalize
    for (std::size_t l = L; l-- > 1;) {
        auto qr = qr_split(ts[l], {1, 2});
        ts[l] = qr.q.permute({2, 0, 1});
        if (l == 1)
            ts[0] = contract(ts[0], qr.r, {{3, 1}});
        else
            ts[l - 1] = contract(ts[l - 1], qr.r, {{2, 1}});
    }
    const double nrm = frobenius_norm(ts[0]);
    if (!(nrm > 0.0)) throw DegenerateStateError("random labeled state has zero norm");
    ts[0] = ts[0].scaled(1.0 / nrm);
    return ts;
}

std::vector<std::size_t> pick_batch(std::size_t J, std::size_t batch_size, std::uint64_t seed,
                                    std::size_t sweep) {
    std::vector<std::size_t> idx(J);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (batch_size == 0 || batch_size >= J) return idx;
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0xB5297A4D3F84D5B3ULL * (sweep + 1));
    for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (J - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(batch_size);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Bond-1 start for the two-site trainer: each site holds the unit-normalized
/// mean feature vector of the data, and the label site fans that product out
/// uniformly across classes. Around this point the left/right environments
/// carry comparable weight at every bond, so the norm-relative update moves
/// the outputs by O(alpha) at each pair. A random isometric start instead
/// concentrates the state norm in directions whose local environment scale
/// varies by many orders of magnitude along the chain, and the sweep then
/// swings the outputs wildly at whichever end is out of gauge. Bonds grow
/// through the two-site splits as the data demands.
std::vector<Tensor> mean_product_tensors(const std::vector<ProductState>& samples, std::size_t L,
                                         std::size_t K) {
    std::vector<Tensor> ts;
    ts.reserve(L);
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t d = samples.front().site(l).size();
        std::vector<double> v(d, 0.0);
        for (const auto& s : samples) {
            auto x = s.site(l);
            for (std::size_t i = 0; i < d; ++i) v[i] += x[i];
        }
        double n2 = 0.0;
        for (double c : v) n2 += c * c;
        if (!(n2 > 0.0)) {
            v.assign(d, 0.0);
            v[0] = 1.0;
            n2 = 1.0;
        }
        const double inv = 1.0 / std::sqrt(n2);
        if (l == 0) {
            Tensor t({1, d, K, 1});
            const double w = inv / std::sqrt(static_cast<double>(K));
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t k = 0; k < K; ++k) t.at({0, i, k, 0}) = v[i] * w;
            ts.push_back(std::move(t));
        } else {
            Tensor t({1, d, 1});
            for (std::size_t i = 0; i < d; ++i) t.at({0, i, 0}) = v[i] * inv;
            ts.push_back(std::move(t));
        }
    }
    return ts;
}

} // namespace

LabeledMps::LabeledMps(std::vector<Tensor> site_tensors, std::size_t label_site)
    : sites_(std::move(site_tensors)), label_site_(label_site) {
    validate_labeled(sites_, label_site_);
}

std::vector<std::size_t> LabeledMps::bond_dims() const {
    std::vector<std::size_t> dims;
    dims.reserve(sites_.size() + 1);
    dims.push_back(1);
    for (const auto& t : sites_) dims.push_back(t.extent(t.rank() - 1));
    return dims;
}

double LabeledMps::norm() const {
    Tensor env = Tensor::scalar(1.0).reshape({1, 1});
    for (std::size_t l = 0; l < sites_.size(); ++l) {
        const Tensor& t = sites_[l];
        Tensor tmp = contract(env, t, {{1, 0}});
        env = (l == label_site_) ? contract(t, tmp, {{0, 0}, {1, 1}, {2, 2}})
                                 : contract(t, tmp, {{0, 0}, {1, 1}});
    }
    return std::sqrt(std::max(env[0], 0.0));
}

std::vector<double> predict_vector(const LabeledMps& m, const ProductState& v) {
    if (m.num_sites() == 0) throw ArgumentError("labeled MPS is empty");
    if (v.num_sites() != m.num_sites() || v.local_dim() != m.local_dim())
        throw DimensionError("model and product state disagree on geometry");
    const std::size_t L = m.num_sites(), ls = m.label_site();

    std::vector<double> env{1.0};
    for (std::size_t l = 0; l < ls; ++l) env = transfer_left(env, m.site(l), v.site(l));

    const Tensor& t = m.site(ls);
    const std::size_t a = t.extent(0), d = t.extent(1), K = t.extent(2), b = t.extent(3);
    const auto local = v.site(ls);
    std::vector<std::vector<double>> rows(K, std::vector<double>(b, 0.0));
    const double* p = t.data().data();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t s = 0; s < d; ++s) {
            const double w = env[i] * local[s];
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t bb = 0; bb < b; ++bb) rows[k][bb] += w * p[idx++];
        }
    for (std::size_t l = ls + 1; l < L; ++l)
        for (std::size_t k = 0; k < K; ++k) rows[k] = transfer_left(rows[k], m.site(l), v.site(l));

    std::vector<double> out(K);
    for (std::size_t k = 0; k < K; ++k) out[k] = rows[k][0];
    return out;
}

double quadratic_cost(const LabeledMps& m, const std::vector<ProductState>& samples,
                      const std::vector<int>& labels) {
    if (samples.size() != labels.size())
        throw ArgumentError("sample and label counts disagree");
    if (samples.empty()) throw ArgumentError("at least one sample is required");
    const std::size_t K = m.num_classes();
    for (int c : labels)
        if (c < 0 || static_cast<std::size_t>(c) >= K)
            throw ArgumentError("label " + std::to_string(c) + " outside [0, " +
                                std::to_string(K) + ")");
    std::vector<double> costs(samples.size());
    parallel_chunks(samples.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j)
            costs[j] = squared_error(predict_vector(m, samples[j]), labels[j]);
    });
    double total = 0.0;
    for (double c : costs) total += c;
    return total;
}

std::pair<LabeledMps, TrainReport> train_discriminative(const Dataset& training,
                                                        const TrainConfig& config) {
    config.validate();
    if (training.size() == 0) throw ArgumentError("training dataset is empty");
    const std::size_t L = training.pixels_per_image();
    if (L < 2) throw ArgumentError("two-site updates need at least two sites");
    const std::size_t K = training.num_classes();
    if (K < 2) throw ArgumentError("discriminative training needs at least two classes");
    const std::size_t J_all = training.size();

    std::vector<ProductState> samples;
    samples.reserve(J_all);
    std::vector<int> labels(J_all);
    for (std::size_t i = 0; i < J_all; ++i) {
        samples.push_back(map_image(training.image(i)));
        labels[i] = training.label(i);
    }

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Tensor> ts = mean_product_tensors(samples, L, K);
    std::size_t label_site = 0; // the first sweep runs left to right

    // The product of per-site mean overlaps still shrinks with L, which
    // would park the quadratic cost on its flat all-outputs-zero plateau.
    // Rescale so a typical output vector starts at unit norm; the whole
    // factor rides on the label tensor, so every other site keeps unit norm
    // and the merged pair carries the state's scale.
    {
        const LabeledMps probe(ts, label_site);
        const std::size_t probes = std::min<std::size_t>(J_all, 32);
        double mean_sq = 0.0;
        for (std::size_t j = 0; j < probes; ++j)
            for (double o : predict_vector(probe, samples[j])) mean_sq += o * o;
        mean_sq /= static_cast<double>(probes);
        if (mean_sq > 0.0 && std::isfinite(mean_sq))
            ts[label_site] = ts[label_site].scaled(std::min(1.0 / std::sqrt(mean_sq), 1e120));
    }

    TrainReport report;
    double alpha = config.step_size;
    std::vector<Tensor> best_ts = ts;
    std::size_t best_label_site = label_site;
    double best_cost = std::numeric_limits<double>::quiet_NaN();
    double gamma_current = std::numeric_limits<double>::quiet_NaN();
    double prev_accepted = std::numeric_limits<double>::quiet_NaN();
    EnvCache left, right;
    bool converged = false;

    for (std::size_t sweep = 1; sweep <= config.max_sweeps && !converged; ++sweep) {
        const auto s0 = std::chrono::steady_clock::now();
        const auto batch = pick_batch(J_all, config.batch_size, config.seed, sweep);
        const bool rightward = (label_site == 0);
        EnvCache& consumed = rightward ? right : left;
        EnvCache& produced = rightward ? left : right;

        double gamma_start;
        if (!consumed.valid || consumed.batch != batch) {
            if (rightward)
                build_right_cache(ts, samples, batch, consumed);
            else
                build_left_cache(ts, samples, batch, consumed);
            gamma_start = boundary_cost(ts, label_site, samples, labels, consumed);
        } else {
            gamma_start = gamma_current;
        }
        if (std::isnan(report.initial_cost)) report.initial_cost = gamma_start;
        if (std::isnan(best_cost)) best_cost = gamma_start;

        std::vector<Tensor> snapshot = ts;
        const double alpha_used = alpha;
        const SweepOutcome outcome =
            rightward
                ? sweep_right_disc(ts, samples, labels, batch, alpha, config.max_bond, consumed,
                                   produced)
                : sweep_left_disc(ts, samples, labels, batch, alpha, config.max_bond, consumed,
                                  produced);
        if (!std::isfinite(outcome.cost)) {
            report.sweeps_run = sweep;
            report.wall_time_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            throw TrainingFailure("cost became non-finite at sweep " + std::to_string(sweep),
                                  std::move(report));
        }

        const bool accepted = (outcome.cost <= gamma_start);
        if (accepted) {
            label_site = rightward ? L - 1 : 0;
            gamma_current = outcome.cost;
            consumed.valid = false;
            if (!(outcome.cost >= best_cost)) {
                best_cost = outcome.cost;
                best_ts = ts;
                best_label_site = label_site;
            }
        } else {
            ts = std::move(snapshot); // label site is unchanged
            produced.valid = false;
            alpha /= config.step_decay;
            gamma_current = gamma_start;
        }

        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
        report.cost_history.push_back(gamma_current);
        report.step_history.push_back(alpha_used);
        report.accepted_history.push_back(accepted);
        report.seconds_history.push_back(seconds);
        report.discarded_weight_history.push_back(outcome.discarded);
        report.sweeps_run = sweep;

        if (accepted) {
            if (!std::isnan(prev_accepted) &&
                std::fabs(prev_accepted - outcome.cost) <=
                    config.convergence_tol * std::max(std::fabs(prev_accepted), 1.0))
                converged = true;
            prev_accepted = outcome.cost;
        }
        if (alpha < 1e-12) break; // step size decayed away; no progress possible
    }

    report.final_cost = best_cost;
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {LabeledMps(std::move(best_ts), best_label_site), std::move(report)};
}

namespace detail {

Tensor merged_pair(const LabeledMps& m, std::size_t pair_left) {
    if (pair_left + 1 >= m.num_sites()) throw ArgumentError("pair index out of range");
    if (m.label_site() != pair_left && m.label_site() != pair_left + 1)
        throw ArgumentError("the label must sit on one of the merged sites");
    return merge_pair(m.sites(), pair_left, m.label_site());
}

Tensor pair_gradient(const LabeledMps& m, std::size_t pair_left,
                     const std::vector<ProductState>& samples, const std::vector<int>& labels) {
    if (samples.size() != labels.size())
        throw ArgumentError("sample and label counts disagree");
    if (samples.empty()) throw ArgumentError("at least one sample is required");
    const std::size_t L = m.num_sites(), K = m.num_classes();
    for (int c : labels)
        if (c < 0 || static_cast<std::size_t>(c) >= K)
            throw ArgumentError("label " + std::to_string(c) + " outside [0, " +
                                std::to_string(K) + ")");
    Tensor theta = merged_pair(m, pair_left);
    Tensor grad(theta.shape());
    for (std::size_t j = 0; j < samples.size(); ++j) {
        std::vector<double> le{1.0};
        for (std::size_t l = 0; l < pair_left; ++l)
            le = transfer_left(le, m.site(l), samples[j].site(l));
        std::vector<double> re{1.0};
        for (std::size_t l = L; l-- > pair_left + 2;)
            re = transfer_right(m.site(l), samples[j].site(l), re);
        const auto out = pair_outputs(theta, le, samples[j].site(pair_left),
                                      samples[j].site(pair_left + 1), re);
        std::vector<double> coeff(K);
        for (std::size_t k = 0; k < K; ++k)
            coeff[k] = 2.0 * (out[k] - (static_cast<std::size_t>(labels[j]) == k ? 1.0 : 0.0));
        accumulate_pair_environment(grad, coeff, le, samples[j].site(pair_left),
                                    samples[j].site(pair_left + 1), re);
    }
    return grad;
}

} // namespace detail

ClassifyResult classify_labeled(const LabeledMps& m, const ProductState& v) {
    std::vector<double> out = predict_vector(m, v);
    ClassifyResult r;
    r.log_fidelities.reserve(out.size());
    bool any = false;
    for (double x : out) {
        any = any || (x != 0.0);
        r.log_fidelities.push_back(std::log(std::fabs(x) + 1e-300));
    }
    r.decided = any;
    r.label = any ? detail::argmax_lowest(out) : 0;
    r.fidelities = std::move(out);
    return r;
}

int classify_discriminative(const LabeledMps& m, const ProductState& v) {
    return classify_labeled(m, v).label;
}

EvalReport evaluate(const LabeledMps& m, const Dataset& test) {
    return detail::evaluate_with([&](const ProductState& v) { return classify_labeled(m, v); },
                                 m.num_classes(), test);
}

void save_labeled_mps(const LabeledMps& m, const std::string& path) {
    MpsFileContent content;
    content.tensors = m.sites();
    content.canonical_center = Mps::kNoCenter;
    content.local_dim = static_cast<std::uint32_t>(m.local_dim());
    content.label_site = static_cast<std::int32_t>(m.label_site());
    write_mps_file(path, content);
}

LabeledMps load_labeled_mps(const std::string& path) {
    MpsFileContent content = read_mps_file(path);
    if (content.label_site < 0)
        throw FormatError(path + ": expected a label-carrying model, found a plain one");
    return LabeledMps(std::move(content.tensors), static_cast<std::size_t>(content.label_site));
}

} // namespace gtnc
