#include "gtnc/generative.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>

#include "gtnc/parallel.hpp"

namespace gtnc {

namespace {

void check_samples(const std::vector<ProductState>& samples) {
    if (samples.empty()) throw ArgumentError("at least one sample is required");
    const std::size_t L = samples[0].num_sites(), d = samples[0].local_dim();
    for (const auto& s : samples)
        if (s.num_sites() != L || s.local_dim() != d)
            throw DimensionError("samples disagree on site count or local dimension");
}

void check_geometry(const Mps& m, const std::vector<ProductState>& samples) {
    if (m.num_sites() != samples[0].num_sites() || m.local_dim() != samples[0].local_dim())
        throw DimensionError("model and samples disagree on site count or local dimension");
}

double site_amplitude(const Tensor& t, std::span<const double> lenv,
                      std::span<const double> local, std::span<const double> renv) {
    const std::size_t a = lenv.size(), d = local.size(), b = renv.size();
    const double* p = t.data().data();
    double acc = 0.0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t s = 0; s < d; ++s) {
            const double w = lenv[i] * local[s];
            for (std::size_t k = 0; k < b; ++k) acc += w * p[idx++] * renv[k];
        }
    return acc;
}

/// g += w * (lenv (x) local (x) renv)
void accumulate_environment(Tensor& g, double w, std::span<const double> lenv,
                            std::span<const double> local, std::span<const double> renv) {
    const std::size_t a = lenv.size(), d = local.size(), b = renv.size();
    double* gp = g.data().data();
    std::size_t idx = 0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t s = 0; s < d; ++s) {
            const double ws = w * lenv[i] * local[s];
            for (std::size_t k = 0; k < b; ++k) gp[idx++] += ws * renv[k];
        }
}

/// Per-bond sample environments over one batch; at[b] holds one dim[b]-length
/// block per batch sample. Bond b sits to the left of site b.
struct EnvCache {
    std::vector<std::vector<double>> at;
    std::vector<std::size_t> dim;
    std::vector<std::size_t> batch;
    bool valid = false;
};

void build_right_cache(const Mps& m, const std::vector<ProductState>& samples,
                       const std::vector<std::size_t>& batch, EnvCache& cache) {
    const std::size_t L = m.num_sites(), J = batch.size();
    cache.at.assign(L + 1, {});
    cache.dim.assign(L + 1, 0);
    cache.dim[L] = 1;
    cache.at[L].assign(J, 1.0);
    for (std::size_t l = L; l-- > 0;) {
        const Tensor& t = m.site(l);
        const std::size_t a = t.shape()[0], b = t.shape()[2];
        cache.dim[l] = a;
        cache.at[l].assign(J * a, 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            auto env = transfer_right(t, samples[batch[j]].site(l),
                                      std::span<const double>(cache.at[l + 1].data() + j * b, b));
            std::copy(env.begin(), env.end(), cache.at[l].begin() + j * a);
        }
    }
    cache.batch = batch;
    cache.valid = true;
}

void build_left_cache(const Mps& m, const std::vector<ProductState>& samples,
                      const std::vector<std::size_t>& batch, EnvCache& cache) {
    const std::size_t L = m.num_sites(), J = batch.size();
    cache.at.assign(L + 1, {});
    cache.dim.assign(L + 1, 0);
    cache.dim[0] = 1;
    cache.at[0].assign(J, 1.0);
    for (std::size_t l = 0; l < L; ++l) {
        const Tensor& t = m.site(l);
        const std::size_t a = t.shape()[0], b = t.shape()[2];
        cache.dim[l + 1] = b;
        cache.at[l + 1].assign(J * b, 0.0);
        for (std::size_t j = 0; j < J; ++j) {
            auto env = transfer_left(std::span<const double>(cache.at[l].data() + j * a, a), t,
                                     samples[batch[j]].site(l));
            std::copy(env.begin(), env.end(), cache.at[l + 1].begin() + j * b);
        }
    }
    cache.batch = batch;
    cache.valid = true;
}

double gamma_from_amplitude(double amp, std::size_t sample_index, std::size_t site) {
    if (amp == 0.0)
        throw ZeroAmplitudeError("sample " + std::to_string(sample_index) +
                                     " has zero amplitude at site " + std::to_string(site) +
                                     "; its log-likelihood is -inf",
                                 sample_index);
    return std::log(std::fabs(amp));
}

/// Gamma of the current model from a freshly built cache: the boundary bond
/// of the cache already holds every sample amplitude.
double gamma_from_boundary(const Mps& m, const EnvCache& cache, bool boundary_at_zero) {
    const std::size_t L = m.num_sites();
    const auto& amps = boundary_at_zero ? cache.at[0] : cache.at[L];
    const std::size_t J = cache.batch.size();
    const double tn = frobenius_norm(m.site(static_cast<std::size_t>(m.canonical_center())));
    if (!(tn > 0.0)) throw DegenerateStateError("model state has zero norm");
    double lnsum = 0.0;
    for (std::size_t j = 0; j < J; ++j)
        lnsum += gamma_from_amplitude(amps[j], cache.batch[j], boundary_at_zero ? 0 : L - 1);
    const double J_d = static_cast<double>(J);
    return 2.0 * std::log(tn) - 2.0 / J_d * lnsum - std::log(J_d);
}

/// One descent pass at the canonical-center site; returns the updated-tensor
/// norm so callers can track Z cheaply.
void update_center_site(Mps& m, std::size_t l, double alpha,
                        const std::vector<ProductState>& samples,
                        const std::vector<std::size_t>& batch,
                        const std::vector<std::span<const double>>& lenvs,
                        const std::vector<std::span<const double>>& renvs) {
    const Tensor& T = m.site(l);
    const double tn = frobenius_norm(T);
    const double Z = tn * tn;
    if (!(Z > 0.0)) throw DegenerateStateError("model norm collapsed to zero during a sweep");
    const std::size_t J = batch.size();
    const double J_d = static_cast<double>(J);
    Tensor grad = T.scaled(2.0 / Z);
    for (std::size_t j = 0; j < J; ++j) {
        const auto local = samples[batch[j]].site(l);
        const double amp = site_amplitude(T, lenvs[j], local, renvs[j]);
        if (amp == 0.0)
            throw ZeroAmplitudeError("sample " + std::to_string(batch[j]) +
                                         " has zero amplitude at site " + std::to_string(l) +
                                         "; its gradient is singular",
                                     batch[j]);
        accumulate_environment(grad, -2.0 / (J_d * amp), lenvs[j], local, renvs[j]);
    }
    const double gn = frobenius_norm(grad);
    if (gn > 0.0) m.set_site(l, T + grad.scaled(-alpha * tn / gn));
}

std::vector<std::span<const double>> cache_spans(const EnvCache& cache, std::size_t bond,
                                                 std::size_t J) {
    std::vector<std::span<const double>> spans(J);
    const std::size_t dim = cache.dim[bond];
    for (std::size_t j = 0; j < J; ++j)
        spans[j] = std::span<const double>(cache.at[bond].data() + j * dim, dim);
    return spans;
}

/// Left-to-right sweep: consumes the right cache, produces the left cache,
/// returns Gamma of the swept model (canonical center ends at site L-1).
double sweep_right(Mps& m, const std::vector<ProductState>& samples,
                   const std::vector<std::size_t>& batch, double alpha, const EnvCache& right,
                   EnvCache& left) {
    const std::size_t L = m.num_sites(), J = batch.size();
    left.at.assign(L + 1, {});
    left.dim.assign(L + 1, 0);
    left.dim[0] = 1;
    left.at[0].assign(J, 1.0);
    for (std::size_t l = 0; l < L; ++l) {
        update_center_site(m, l, alpha, samples, batch, cache_spans(left, l, J),
                           cache_spans(right, l + 1, J));
        if (l + 1 < L) {
            m.move_center(l + 1);
            const Tensor& q = m.site(l);
            const std::size_t a = q.shape()[0], b = q.shape()[2];
            left.dim[l + 1] = b;
            left.at[l + 1].assign(J * b, 0.0);
            for (std::size_t j = 0; j < J; ++j) {
                auto env = transfer_left(
                    std::span<const double>(left.at[l].data() + j * a, a), q,
                    samples[batch[j]].site(l));
                std::copy(env.begin(), env.end(), left.at[l + 1].begin() + j * b);
            }
        }
    }
    const Tensor& Tc = m.site(L - 1);
    const double tn = frobenius_norm(Tc);
    if (!(tn > 0.0)) throw DegenerateStateError("model norm collapsed to zero during a sweep");
    const std::size_t a = Tc.shape()[0];
    const double one = 1.0;
    left.dim[L] = 1;
    left.at[L].assign(J, 0.0);
    double lnsum = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        const double amp =
            site_amplitude(Tc, std::span<const double>(left.at[L - 1].data() + j * a, a),
                           samples[batch[j]].site(L - 1), std::span<const double>(&one, 1));
        left.at[L][j] = amp;
        lnsum += gamma_from_amplitude(amp, batch[j], L - 1);
    }
    left.batch = batch;
    left.valid = true;
    const double J_d = static_cast<double>(J);
    return 2.0 * std::log(tn) - 2.0 / J_d * lnsum - std::log(J_d);
}

/// Right-to-left sweep: consumes the left cache, produces the right cache,
/// returns Gamma of the swept model (canonical center ends at site 0).
double sweep_left(Mps& m, const std::vector<ProductState>& samples,
                  const std::vector<std::size_t>& batch, double alpha, const EnvCache& left,
                  EnvCache& right) {
    const std::size_t L = m.num_sites(), J = batch.size();
    right.at.assign(L + 1, {});
    right.dim.assign(L + 1, 0);
    right.dim[L] = 1;
    right.at[L].assign(J, 1.0);
    for (std::size_t l = L; l-- > 0;) {
        update_center_site(m, l, alpha, samples, batch, cache_spans(left, l, J),
                           cache_spans(right, l + 1, J));
        if (l > 0) {
            m.move_center(l - 1);
            const Tensor& q = m.site(l);
            const std::size_t a = q.shape()[0], b = q.shape()[2];
            right.dim[l] = a;
            right.at[l].assign(J * a, 0.0);
            for (std::size_t j = 0; j < J; ++j) {
                auto env = transfer_right(
                    q, samples[batch[j]].site(l),
                    std::span<const double>(right.at[l + 1].data() + j * b, b));
                std::copy(env.begin(), env.end(), right.at[l].begin() + j * a);
            }
        }
    }
    const Tensor& Tc = m.site(0);
    const double tn = frobenius_norm(Tc);
    if (!(tn > 0.0)) throw DegenerateStateError("model norm collapsed to zero during a sweep");
    const std::size_t b = Tc.shape()[2];
    const double one = 1.0;
    right.dim[0] = 1;
    right.at[0].assign(J, 0.0);
    double lnsum = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        const double amp =
            site_amplitude(Tc, std::span<const double>(&one, 1), samples[batch[j]].site(0),
                           std::span<const double>(right.at[1].data() + j * b, b));
        right.at[0][j] = amp;
        lnsum += gamma_from_amplitude(amp, batch[j], 0);
    }
    right.batch = batch;
    right.valid = true;
    const double J_d = static_cast<double>(J);
    return 2.0 * std::log(tn) - 2.0 / J_d * lnsum - std::log(J_d);
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

} // namespace

double nll_cost(const Mps& m, const std::vector<ProductState>& samples) {
    check_samples(samples);
    check_geometry(m, samples);
    const double nrm = m.norm();
    if (!(nrm > 0.0)) throw DegenerateStateError("model state has zero norm");
    const std::size_t J = samples.size();
    std::vector<double> lnabs(J);
    parallel_chunks(J, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const double amp = mps_product_overlap(m, samples[j]);
            if (amp == 0.0)
                throw ZeroAmplitudeError("sample " + std::to_string(j) +
                                             " has zero amplitude; its log-likelihood is -inf",
                                         j);
            lnabs[j] = std::log(std::fabs(amp));
        }
    });
    double lnsum = 0.0;
    for (double v : lnabs) lnsum += v;
    const double J_d = static_cast<double>(J);
    return 2.0 * std::log(nrm) - 2.0 / J_d * lnsum - std::log(J_d);
}

Tensor nll_gradient(const Mps& m, const std::vector<ProductState>& samples) {
    check_samples(samples);
    check_geometry(m, samples);
    if (m.canonical_center() == Mps::kNoCenter)
        throw ArgumentError("gradient requires a model with a canonical center");
    const std::size_t l = static_cast<std::size_t>(m.canonical_center());
    const std::size_t L = m.num_sites(), J = samples.size();
    const Tensor& T = m.site(l);
    const double tn = frobenius_norm(T);
    if (!(tn > 0.0)) throw DegenerateStateError("model state has zero norm");

    std::vector<std::vector<double>> lenvs(J), renvs(J);
    parallel_chunks(J, [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            std::vector<double> env{1.0};
            for (std::size_t i = 0; i < l; ++i) env = transfer_left(env, m.site(i), samples[j].site(i));
            lenvs[j] = std::move(env);
            env = {1.0};
            for (std::size_t i = L; i-- > l + 1;) env = transfer_right(m.site(i), samples[j].site(i), env);
            renvs[j] = std::move(env);
        }
    });

    const double J_d = static_cast<double>(J);
    Tensor grad = T.scaled(2.0 / (tn * tn));
    for (std::size_t j = 0; j < J; ++j) {
        const auto local = samples[j].site(l);
        const double amp = site_amplitude(T, lenvs[j], local, renvs[j]);
        if (amp == 0.0)
            throw ZeroAmplitudeError("sample " + std::to_string(j) +
                                         " has zero amplitude; its gradient is singular",
                                     j);
        accumulate_environment(grad, -2.0 / (J_d * amp), lenvs[j], local, renvs[j]);
    }
    return grad;
}

std::pair<Mps, TrainReport> train_generative(const std::vector<ProductState>& samples,
                                             const TrainConfig& config) {
    config.validate();
    check_samples(samples);
    const std::size_t J_all = samples.size();
    const std::size_t L = samples[0].num_sites(), d = samples[0].local_dim();

    const auto t0 = std::chrono::steady_clock::now();
    Mps model = random_mps(L, d, config.max_bond, config.seed);
    model.move_center(0); // the first sweep runs left to right

    TrainReport report;
    double alpha = config.step_size;
    Mps best = model;
    double best_cost = std::numeric_limits<double>::quiet_NaN();
    double gamma_current = std::numeric_limits<double>::quiet_NaN();
    double prev_accepted = std::numeric_limits<double>::quiet_NaN();
    EnvCache left, right;
    bool converged = false;

    for (std::size_t sweep = 1; sweep <= config.max_sweeps && !converged; ++sweep) {
        const auto s0 = std::chrono::steady_clock::now();
        const auto batch = pick_batch(J_all, config.batch_size, config.seed, sweep);
        const bool rightward = (model.canonical_center() == 0);
        EnvCache& consumed = rightward ? right : left;
        EnvCache& produced = rightward ? left : right;

        double gamma_start;
        if (!consumed.valid || consumed.batch != batch) {
            if (rightward)
                build_right_cache(model, samples, batch, consumed);
            else
                build_left_cache(model, samples, batch, consumed);
            gamma_start = gamma_from_boundary(model, consumed, rightward);
        } else {
            gamma_start = gamma_current;
        }
        if (std::isnan(report.initial_cost)) report.initial_cost = gamma_start;
        if (std::isnan(best_cost)) best_cost = gamma_start;

        Mps snapshot = model;
        const double alpha_used = alpha;
        const double gamma_end = rightward
                                     ? sweep_right(model, samples, batch, alpha, consumed, produced)
                                     : sweep_left(model, samples, batch, alpha, consumed, produced);
        if (!std::isfinite(gamma_end)) {
            report.sweeps_run = sweep;
            report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            throw TrainingFailure("cost became non-finite at sweep " + std::to_string(sweep),
                                  std::move(report));
        }

        const bool accepted = (gamma_end <= gamma_start);
        if (accepted) {
            gamma_current = gamma_end;
            consumed.valid = false; // tensors changed under it
            if (!(gamma_end >= best_cost)) {
                best_cost = gamma_end;
                best = model;
            }
        } else {
            model = snapshot; // consumed cache still matches the restored tensors
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
        report.sweeps_run = sweep;
        if (config.sweep_observer)
            config.sweep_observer(model, SweepRecord{sweep, gamma_current, alpha_used, accepted, seconds});

        if (accepted) {
            if (!std::isnan(prev_accepted) &&
                std::fabs(prev_accepted - gamma_end) <=
                    config.convergence_tol * std::max(std::fabs(prev_accepted), 1.0))
                converged = true;
            prev_accepted = gamma_end;
        }
        if (alpha < 1e-12) break; // step size decayed away; no progress possible
    }

    report.final_cost = best_cost;
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(best), std::move(report)};
}

ClassifierBundle train_all_classes(const Dataset& dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.size() == 0) throw ArgumentError("training dataset is empty");
    const auto parts = split_by_class(dataset);
    const std::size_t K = parts.size();
    for (std::size_t c = 0; c < K; ++c)
        if (parts[c].size() == 0)
            throw TrainingError("class " + std::to_string(c) + " has no training samples");

    std::vector<std::optional<std::pair<Mps, TrainReport>>> results(K);
    std::vector<std::string> failures(K);
    parallel_chunks(K, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            try {
                std::vector<ProductState> class_samples;
                class_samples.reserve(parts[c].size());
                for (std::size_t i = 0; i < parts[c].size(); ++i)
                    class_samples.push_back(map_image(parts[c].image(i)));
                TrainConfig cc = config;
                cc.seed = config.seed + c; // classes train independently
                cc.sweep_observer = nullptr;
                results[c].emplace(train_generative(class_samples, cc));
            } catch (const std::exception& e) {
                failures[c] = e.what();
            }
        }
    });
    for (std::size_t c = 0; c < K; ++c)
        if (!results[c])
            throw TrainingError("class " + std::to_string(c) + ": " + failures[c]);

    ClassifierBundle bundle;
    bundle.models.reserve(K);
    bundle.norms.reserve(K);
    bundle.provenance.dataset = dataset.provenance();
    bundle.provenance.config = config;
    bundle.provenance.config.sweep_observer = nullptr;
    bundle.provenance.reports.reserve(K);
    for (std::size_t c = 0; c < K; ++c) {
        bundle.models.push_back(std::move(results[c]->first));
        bundle.norms.push_back(bundle.models.back().norm());
        bundle.provenance.reports.push_back(std::move(results[c]->second));
    }
    return bundle;
}

} // namespace gtnc
