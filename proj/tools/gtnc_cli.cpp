// gtnc — command-line front end for the generative tensor-network classifier.
//
// Subcommands: ingest, train, train-disc, classify, eval, distances, entropy,
// compare. Every invocation owns one run directory and finishes by writing a
// `run.manifest` describing the resolved configuration; a directory that
// already holds a manifest is only reused with --force. All tables are TSV
// with a header row, and doubles are printed with %.17g so reruns with the
// same configuration and seed reproduce the files byte for byte (the only
// exceptions are wall-time columns, which necessarily vary).
//
// Exit codes: 0 success, 1 pipeline failure (tagged diagnostic on stderr),
// 2 usage error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "gtnc/analysis.hpp"
#include "gtnc/classifier.hpp"
#include "gtnc/dataset.hpp"
#include "gtnc/discriminative.hpp"
#include "gtnc/errors.hpp"
#include "gtnc/feature_map.hpp"
#include "gtnc/generative.hpp"
#include "gtnc/mps.hpp"

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
    requires std::is_integral_v<T>
std::string fmt(T v) {
    return std::to_string(v);
}

/// Line-buffered TSV emitter; every table starts with a header row.
class TsvWriter {
  public:
    explicit TsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) throw gtnc::IoError("cannot open '" + path.string() + "' for writing");
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << '\t';
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) throw gtnc::IoError("write failed on '" + path_.string() + "'");
    }

  private:
    fs::path path_;
    std::ofstream out_;
};

using ManifestEntries = std::vector<std::pair<std::string, std::string>>;

// ---------------------------------------------------------------------------
// --config expansion
//
// CLI11 only reads config files attached to the root app, where bare keys
// cannot reach subcommand options, so `--config FILE` is expanded by hand:
// each `key=value` line becomes `--key=value` injected right after the
// subcommand token. Explicit flags override the file because they come later
// and every option takes the last occurrence.

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> config_file_args(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw gtnc::IoError("cannot open config file '" + path + "'");
    std::vector<std::string> args;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        const auto where = [&] { return path + "' line " + std::to_string(lineno); };
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw gtnc::FormatError("config file '" + where() + ": expected key=value");
        const std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty()) throw gtnc::FormatError("config file '" + where() + ": empty key");
        if (key == "config")
            throw gtnc::FormatError("config file '" + where() + ": config files cannot nest");
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\'')))
            value = value.substr(1, value.size() - 2);
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

/// Rewrites natural-order command-line args in place.
void expand_config(std::vector<std::string>& args) {
    std::size_t sub = args.size();
    for (std::size_t i = 0; i < args.size(); ++i)
        if (!args[i].empty() && args[i][0] != '-') {
            sub = i;
            break;
        }
    if (sub == args.size()) return;
    std::string path;
    for (std::size_t i = sub + 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            break;
        }
    }
    if (path.empty()) return;
    const std::vector<std::string> injected = config_file_args(path);
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, injected.begin(),
                injected.end());
}

/// Refuse to clobber a finished run unless --force; the manifest itself is
/// written last, so an aborted run leaves a reusable directory.
fs::path prepare_run_dir(const std::string& out, bool force) {
    fs::path dir(out);
    if (fs::exists(dir / "run.manifest") && !force)
        throw gtnc::IoError("run directory '" + out +
                            "' already holds a run.manifest; pass --force to reuse it");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw gtnc::IoError("cannot create run directory '" + out + "': " + ec.message());
    return dir;
}

/// The manifest records everything that determines the output bytes; the run
/// directory location and --force are plumbing and deliberately omitted.
void write_run_manifest(const fs::path& dir, const std::string& subcommand,
                        ManifestEntries entries) {
    ManifestEntries all;
    all.emplace_back("tool", "gtnc");
    all.emplace_back("version", kVersion);
    all.emplace_back("subcommand", subcommand);
    for (auto& e : entries) all.push_back(std::move(e));
    gtnc::save_manifest((dir / "run.manifest").string(), all);
}

// ---------------------------------------------------------------------------
// Shared option groups

struct DataOpts {
    std::string images;
    std::string labels;
    std::size_t downsample = 1;
    std::size_t per_class = 0;
};

/// Registers --<prefix>images/--<prefix>labels (+ reduction flags for the
/// primary set). `what` names the set in help text.
void add_data_opts(CLI::App* cmd, DataOpts& o, const std::string& prefix, const std::string& what,
                   bool with_reductions = true) {
    cmd->add_option("--" + prefix + "images", o.images, "IDX image file (" + what + ")")
        ->required();
    cmd->add_option("--" + prefix + "labels", o.labels, "IDX label file (" + what + ")")
        ->required();
    if (with_reductions) {
        cmd->add_option("--" + prefix + "downsample", o.downsample,
                        "pooling factor for " + what + " (1 = none)")
            ->capture_default_str();
        cmd->add_option("--" + prefix + "per-class", o.per_class,
                        "keep at most N " + what + " samples per class (0 = all)")
            ->capture_default_str();
    }
}

gtnc::Dataset load_data(const DataOpts& o, std::uint64_t seed) {
    gtnc::Dataset d = gtnc::load_idx(o.images, o.labels);
    if (o.downsample > 1) d = gtnc::downsample(d, o.downsample);
    if (o.per_class > 0) d = gtnc::subsample(d, o.per_class, seed);
    return d;
}

void append_data_manifest(ManifestEntries& m, const DataOpts& o, const std::string& prefix) {
    m.emplace_back(prefix + "images", o.images);
    m.emplace_back(prefix + "labels", o.labels);
    m.emplace_back(prefix + "downsample", fmt(o.downsample));
    m.emplace_back(prefix + "per_class", fmt(o.per_class));
}

struct TrainOpts {
    std::size_t chi = 16;
    double alpha = 0.05;
    double beta = 2.0;
    std::size_t max_sweeps = 50;
    double tol = 1e-4;
    std::size_t batch = 0;
};

void add_train_opts(CLI::App* cmd, TrainOpts& o) {
    cmd->add_option("--chi", o.chi, "maximum bond dimension")->capture_default_str();
    cmd->add_option("--alpha", o.alpha, "initial step size (fraction of tensor norm)")
        ->capture_default_str();
    cmd->add_option("--beta", o.beta, "step-size divisor applied after a rejected sweep")
        ->capture_default_str();
    cmd->add_option("--max-sweeps", o.max_sweeps, "sweep budget")->capture_default_str();
    cmd->add_option("--tol", o.tol, "relative cost-change convergence threshold")
        ->capture_default_str();
    cmd->add_option("--batch", o.batch, "samples per gradient estimate (0 = full batch)")
        ->capture_default_str();
}

gtnc::TrainConfig make_config(const TrainOpts& o, std::uint64_t seed) {
    gtnc::TrainConfig c;
    c.max_bond = o.chi;
    c.step_size = o.alpha;
    c.step_decay = o.beta;
    c.max_sweeps = o.max_sweeps;
    c.convergence_tol = o.tol;
    c.batch_size = o.batch;
    c.seed = seed;
    return c;
}

void append_train_manifest(ManifestEntries& m, const TrainOpts& o) {
    m.emplace_back("chi", fmt(o.chi));
    m.emplace_back("alpha", fmt(o.alpha));
    m.emplace_back("beta", fmt(o.beta));
    m.emplace_back("max_sweeps", fmt(o.max_sweeps));
    m.emplace_back("tol", fmt(o.tol));
    m.emplace_back("batch", fmt(o.batch));
}

// ---------------------------------------------------------------------------
// Model-file conventions shared by train/classify/eval/entropy/compare

std::string class_model_name(std::size_t k) { return "model_class" + std::to_string(k) + ".mps"; }

/// Loads model_class0.mps, model_class1.mps, ... until the first gap.
gtnc::ClassifierBundle load_bundle(const std::string& dir) {
    gtnc::ClassifierBundle b;
    for (std::size_t k = 0;; ++k) {
        fs::path p = fs::path(dir) / class_model_name(k);
        if (!fs::exists(p)) break;
        b.models.push_back(gtnc::load_mps(p.string()));
    }
    if (b.models.empty())
        throw gtnc::IoError("no model_class<k>.mps files found under '" + dir + "'");
    b.norms.reserve(b.models.size());
    for (const auto& m : b.models) b.norms.push_back(m.norm());
    return b;
}

std::string join_sizes(const std::vector<std::size_t>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

void save_class_model(const fs::path& dir, std::size_t k, const gtnc::Mps& model,
                      const gtnc::TrainReport& report, const gtnc::TrainConfig& config) {
    gtnc::save_mps(model, (dir / class_model_name(k)).string());
    ManifestEntries m;
    m.emplace_back("class", fmt(k));
    m.emplace_back("num_sites", fmt(model.num_sites()));
    m.emplace_back("local_dim", fmt(model.local_dim()));
    m.emplace_back("chi", fmt(config.max_bond));
    m.emplace_back("bond_dims", join_sizes(model.bond_dims()));
    m.emplace_back("norm", fmt(model.norm()));
    m.emplace_back("seed", fmt(config.seed));
    m.emplace_back("initial_cost", fmt(report.initial_cost));
    m.emplace_back("final_cost", fmt(report.final_cost));
    m.emplace_back("sweeps_run", fmt(report.sweeps_run));
    gtnc::save_manifest((dir / ("model_class" + std::to_string(k) + ".manifest")).string(), m);
}

void write_history(const fs::path& path, const gtnc::TrainReport& r, bool with_discarded) {
    TsvWriter w(path);
    std::vector<std::string> header{"sweep", "cost", "alpha", "seconds"};
    if (with_discarded) header.push_back("discarded_weight");
    w.row(header);
    for (std::size_t i = 0; i < r.cost_history.size(); ++i) {
        std::vector<std::string> row{fmt(i + 1), fmt(r.cost_history[i]), fmt(r.step_history[i]),
                                     fmt(r.seconds_history[i])};
        if (with_discarded) row.push_back(fmt(r.discarded_weight_history[i]));
        w.row(row);
    }
}

// ---------------------------------------------------------------------------
// Evaluation tables

void write_metrics(const fs::path& path, const gtnc::EvalReport& rep) {
    TsvWriter w(path);
    w.row({"metric", "class", "value"});
    w.row({"accuracy", "-", fmt(rep.accuracy)});
    const std::size_t undecided =
        static_cast<std::size_t>(std::count(rep.decided.begin(), rep.decided.end(), false));
    w.row({"undecided", "-", fmt(undecided)});
    const std::size_t k = rep.confusion.size();
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t col = 0;
        for (std::size_t t = 0; t < k; ++t) col += rep.confusion[t][c];
        const double precision = col ? static_cast<double>(rep.confusion[c][c]) / col : 0.0;
        w.row({"precision", fmt(c), fmt(precision)});
    }
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t row = 0;
        for (std::size_t p = 0; p < k; ++p) row += rep.confusion[c][p];
        const double recall = row ? static_cast<double>(rep.confusion[c][c]) / row : 0.0;
        w.row({"recall", fmt(c), fmt(recall)});
    }
}

void write_confusion(const fs::path& path, const gtnc::EvalReport& rep) {
    TsvWriter w(path);
    const std::size_t k = rep.confusion.size();
    std::vector<std::string> header{"true_class"};
    for (std::size_t c = 0; c < k; ++c) header.push_back("pred_" + std::to_string(c));
    w.row(header);
    for (std::size_t t = 0; t < k; ++t) {
        std::vector<std::string> row{fmt(t)};
        for (std::size_t c = 0; c < k; ++c) row.push_back(fmt(rep.confusion[t][c]));
        w.row(row);
    }
}

/// Per-sample score table. For the generative routes the scores are
/// ln(f_c + 1e-300); the discriminative outputs can be negative, so that
/// route substitutes the raw outputs under out_<c> headers.
void write_scores(const fs::path& path, const gtnc::Dataset& test, const gtnc::EvalReport& rep,
                  const std::vector<std::vector<double>>& scores, const std::string& column) {
    TsvWriter w(path);
    const std::size_t k = scores.empty() ? rep.confusion.size() : scores[0].size();
    std::vector<std::string> header{"sample", "true_label", "predicted"};
    for (std::size_t c = 0; c < k; ++c) header.push_back(column + "_" + std::to_string(c));
    w.row(header);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        std::vector<std::string> row{fmt(i), fmt(test.label(i)), fmt(rep.predicted[i])};
        for (double v : scores[i]) row.push_back(fmt(v));
        w.row(row);
    }
}

// ---------------------------------------------------------------------------
// ingest

struct IngestOpts {
    DataOpts data;
    std::uint64_t seed = 0;
    std::string out;
    bool force = false;
};

void run_ingest(const IngestOpts& o) {
    const fs::path dir = prepare_run_dir(o.out, o.force);
    const gtnc::Dataset d = load_data(o.data, o.seed);
    gtnc::save_idx(d, (dir / "images-idx3-ubyte").string(), (dir / "labels-idx1-ubyte").string());

    TsvWriter w(dir / "summary.tsv");
    w.row({"key", "value"});
    w.row({"count", fmt(d.size())});
    w.row({"height", fmt(d.height())});
    w.row({"width", fmt(d.width())});
    w.row({"num_classes", fmt(d.num_classes())});
    const auto counts = d.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
        w.row({"class_count_" + std::to_string(c), fmt(counts[c])});

    ManifestEntries m;
    append_data_manifest(m, o.data, "");
    m.emplace_back("seed", fmt(o.seed));
    write_run_manifest(dir, "ingest", std::move(m));
}

// ---------------------------------------------------------------------------
// train

struct TrainCmdOpts {
    DataOpts data;
    TrainOpts train;
    int only_class = -1;
    std::uint64_t seed = 0;
    std::string out;
    bool force = false;
};

void run_train(const TrainCmdOpts& o) {
    const fs::path dir = prepare_run_dir(o.out, o.force);
    const gtnc::Dataset data = load_data(o.data, o.seed);
    const gtnc::TrainConfig base = make_config(o.train, o.seed);
    base.validate();

    if (o.only_class >= 0) {
        const auto k = static_cast<std::size_t>(o.only_class);
        auto by_class = gtnc::split_by_class(data);
        if (k >= by_class.size() || by_class[k].size() == 0)
            throw gtnc::TrainingError("train: class " + std::to_string(k) +
                                      " has no samples in the training set");
        std::vector<gtnc::ProductState> samples;
        samples.reserve(by_class[k].size());
        for (std::size_t i = 0; i < by_class[k].size(); ++i)
            samples.push_back(gtnc::map_image(by_class[k].image(i)));
        gtnc::TrainConfig config = base;
        config.seed = o.seed + k; // matches the per-class seeding of a full run
        auto [model, report] = gtnc::train_generative(samples, config);
        save_class_model(dir, k, model, report, config);
        write_history(dir / ("class" + std::to_string(k) + ".history.tsv"), report, false);
    } else {
        const gtnc::ClassifierBundle bundle = gtnc::train_all_classes(data, base);
        for (std::size_t k = 0; k < bundle.num_classes(); ++k) {
            gtnc::TrainConfig config = base;
            config.seed = o.seed + k;
            save_class_model(dir, k, bundle.models[k], bundle.provenance.reports[k], config);
            write_history(dir / ("class" + std::to_string(k) + ".history.tsv"),
                          bundle.provenance.reports[k], false);
        }
    }

    ManifestEntries m;
    append_data_manifest(m, o.data, "");
    append_train_manifest(m, o.train);
    m.emplace_back("class", fmt(o.only_class));
    m.emplace_back("seed", fmt(o.seed));
    write_run_manifest(dir, "train", std::move(m));
}

// ---------------------------------------------------------------------------
// train-disc

struct TrainDiscOpts {
    DataOpts data;
    TrainOpts train;
    std::uint64_t seed = 0;
    std::string out;
    bool force = false;
};

void run_train_disc(const TrainDiscOpts& o) {
    const fs::path dir = prepare_run_dir(o.out, o.force);
    const gtnc::Dataset data = load_data(o.data, o.seed);
    const gtnc::TrainConfig config = make_config(o.train, o.seed);
    config.validate();

    auto [model, report] = gtnc::train_discriminative(data, config);
    gtnc::save_labeled_mps(model, (dir / "model_disc.mps").string());

    ManifestEntries mm;
    mm.emplace_back("num_sites", fmt(model.num_sites()));
    mm.emplace_back("local_dim", fmt(model.local_dim()));
    mm.emplace_back("num_classes", fmt(model.num_classes()));
    mm.emplace_back("label_site", fmt(model.label_site()));
    mm.emplace_back("chi", fmt(config.max_bond));
    mm.emplace_back("bond_dims", join_sizes(model.bond_dims()));
    mm.emplace_back("norm", fmt(model.norm()));
    mm.emplace_back("seed", fmt(config.seed));
    mm.emplace_back("initial_cost", fmt(report.initial_cost));
    mm.emplace_back("final_cost", fmt(report.final_cost));
    mm.emplace_back("sweeps_run", fmt(report.sweeps_run));
    gtnc::save_manifest((dir / "model_disc.manifest").string(), mm);

    write_history(dir / "disc.history.tsv", report, true);

    ManifestEntries m;
    append_data_manifest(m, o.data, "");
    append_train_manifest(m, o.train);
    m.emplace_back("seed", fmt(o.seed));
    write_run_manifest(dir, "train-disc", std::move(m));
}

// ---------------------------------------------------------------------------
// classify / eval

struct EvalOpts {
    DataOpts data; // the set being classified
    std::string models;
    std::string mode = "gtnc";
    DataOpts lazy_train; // lazy mode only
    std::uint64_t seed = 0;
    std::string out;
    bool force = false;
};

void add_eval_opts(CLI::App* cmd, EvalOpts& o, const std::string& what) {
    add_data_opts(cmd, o.data, "", what);
    cmd->add_option("--models", o.models, "run directory holding trained model files");
    cmd->add_option("--mode", o.mode, "classifier route: gtnc, lazy, or disc")
        ->check(CLI::IsMember({"gtnc", "lazy", "disc"}))
        ->capture_default_str();
    cmd->add_option("--train-images", o.lazy_train.images,
                    "IDX image file for the lazy-route class sums");
    cmd->add_option("--train-labels", o.lazy_train.labels,
                    "IDX label file for the lazy-route class sums");
    cmd->add_option("--train-downsample", o.lazy_train.downsample,
                    "pooling factor for the lazy training set")
        ->capture_default_str();
    cmd->add_option("--train-per-class", o.lazy_train.per_class,
                    "per-class cap for the lazy training set (0 = all)")
        ->capture_default_str();
}

void check_eval_inputs(const EvalOpts& o) {
    if (o.mode == "lazy") {
        if (o.lazy_train.images.empty() || o.lazy_train.labels.empty())
            throw gtnc::ArgumentError("--mode lazy needs --train-images and --train-labels");
    } else if (o.models.empty()) {
        throw gtnc::ArgumentError("--mode " + o.mode + " needs --models");
    }
}

/// Shared classification driver; `full_tables` distinguishes eval (metrics +
/// confusion + scores) from classify (per-sample predictions only).
void run_eval_like(const EvalOpts& o, const std::string& cmd, bool full_tables) {
    check_eval_inputs(o);
    const fs::path dir = prepare_run_dir(o.out, o.force);
    const gtnc::Dataset test = load_data(o.data, o.seed);

    gtnc::EvalReport rep;
    std::vector<std::vector<double>> scores;
    std::string score_column = "logfid";
    if (o.mode == "gtnc") {
        const gtnc::ClassifierBundle bundle = load_bundle(o.models);
        rep = gtnc::evaluate(bundle, test);
        scores = rep.log_fidelities;
    } else if (o.mode == "lazy") {
        const gtnc::Dataset train = load_data(o.lazy_train, o.seed);
        const gtnc::LazyBundle bundle(train);
        rep = gtnc::evaluate(bundle, test);
        scores = rep.log_fidelities;
    } else {
        const gtnc::LabeledMps model =
            gtnc::load_labeled_mps((fs::path(o.models) / "model_disc.mps").string());
        rep = gtnc::evaluate(model, test);
        // The raw outputs carry the sign that ln|out| drops; recompute them.
        score_column = "out";
        scores.reserve(test.size());
        for (std::size_t i = 0; i < test.size(); ++i)
            scores.push_back(gtnc::predict_vector(model, gtnc::map_image(test.image(i))));
    }

    if (full_tables) {
        write_metrics(dir / "metrics.tsv", rep);
        write_confusion(dir / "confusion.tsv", rep);
        write_scores(dir / "logfid.tsv", test, rep, scores, score_column);
    } else {
        TsvWriter w(dir / "predictions.tsv");
        w.row({"sample", "true_label", "predicted", "decided"});
        for (std::size_t i = 0; i < test.size(); ++i)
            w.row({fmt(i), fmt(test.label(i)), fmt(rep.predicted[i]),
                   fmt(static_cast<std::size_t>(rep.decided[i] ? 1 : 0))});
    }

    ManifestEntries m;
    append_data_manifest(m, o.data, "");
    m.emplace_back("models", o.models);
    m.emplace_back("mode", o.mode);
    if (o.mode == "lazy") append_data_manifest(m, o.lazy_train, "train_");
    m.emplace_back("seed", fmt(o.seed));
    write_run_manifest(dir, cmd, std::move(m));
}

// ---------------------------------------------------------------------------
// distances

struct DistanceOpts {
    DataOpts data;
    std::string space = "both";
    std::uint64_t seed = 0;
    std::string out;
    bool force = false;
};

void emit_matrix_rows(TsvWriter& w, const std::string& name, const gtnc::ClassPairMatrix& m) {
    for (std::size_t a = 0; a < m.num_classes(); ++a)
        for (std::size_t b = 0; b < m.num_classes(); ++b)
            w.row({name, fmt(a), fmt(b), fmt(m.at(a, b))});
}

void emit_stats(TsvWriter& w, const std::string& prefix, const gtnc::ClusteringStats& s) {
    w.row({prefix + "_min_diagonal", fmt(s.min_diagonal)});
    w.row({prefix + "_max_diagonal", fmt(s.max_diagonal)});
    w.row({prefix + "_min_offdiagonal", fmt(s.min_offdiagonal)});
    w.row({prefix + "_max_offdiagonal", fmt(s.max_offdiagonal)});
    w.row({prefix + "_ratio", fmt(s.ratio)});
}

void run_distances(const DistanceOpts& o) {
    const fs::path dir = prepare_run_dir(o.out, o.force);
    const gtnc::Dataset data = load_data(o.data, o.seed);

    // Both matrices always feed the clustering summary; --space only selects
    // which entries land in matrix.tsv.
    const gtnc::ClassPairMatrix raw = gtnc::raw_distance_matrix(data);
    const gtnc::ClassPairMatrix fid = gtnc::fidelity_matrix(data);
    const gtnc::HilbertDistanceResult hil = gtnc::hilbert_distance_matrix(fid);
    const gtnc::ClusteringReport report = gtnc::clustering_report(raw, fid);

    TsvWriter w(dir / "matrix.tsv");
    w.row({"matrix", "class_a", "class_b", "value"});
    if (o.space == "raw" || o.space == "both") emit_matrix_rows(w, "euclidean_raw", raw);
    if (o.space == "hilbert" || o.space == "both") {
        emit_matrix_rows(w, "fidelity", fid);
        emit_matrix_rows(w, "distance", hil.distance);
        emit_matrix_rows(w, "distance_approx", hil.approximation);
    }

    TsvWriter s(dir / "summary.tsv");
    s.row({"key", "value"});
    s.row({"clustered", fmt(static_cast<std::size_t>(report.clustered ? 1 : 0))});
    emit_stats(s, "fidelity", report.fidelity);
    emit_stats(s, "raw", report.raw_distance);
    s.row({"max_df_residual", fmt(hil.max_abs_residual)});
    for (std::size_t c = 0; c < fid.num_classes(); ++c)
        s.row({"class_count_" + std::to_string(c), fmt(fid.class_counts[c])});
    for (std::size_t c = 0; c < fid.num_classes(); ++c)
        s.row({"norm_sq_" + std::to_string(c), fmt(fid.at(c, c))});
    for (std::size_t c = 0; c < fid.num_classes(); ++c)
        s.row({"norm_" + std::to_string(c), fmt(std::sqrt(fid.at(c, c)))});

    ManifestEntries m;
    append_data_manifest(m, o.data, "");
    m.emplace_back("space", o.space);
    m.emplace_back("seed", fmt(o.seed));
    write_run_manifest(dir, "distances", std::move(m));
}

// ---------------------------------------------------------------------------
// entropy

struct EntropyOpts {
    std::string models;
    std::string out;
    bool force = false;
};

void run_entropy(const EntropyOpts& o) {
    const fs::path dir = prepare_run_dir(o.out, o.force);
    const gtnc::ClassifierBundle bundle = load_bundle(o.models);

    TsvWriter w(dir / "entropy.tsv");
    w.row({"class", "bond", "H2", "ln_chi", "slack"});
    for (std::size_t k = 0; k < bundle.num_classes(); ++k) {
        const gtnc::Mps& model = bundle.models[k];
        const auto bonds = model.bond_dims();
        for (std::size_t b = 1; b + 1 < bonds.size(); ++b) {
            const double h2 = gtnc::renyi2_entropy(model, b);
            const double ln_chi = std::log(static_cast<double>(bonds[b]));
            w.row({fmt(k), fmt(b), fmt(h2), fmt(ln_chi), fmt(ln_chi - h2)});
        }
    }

    ManifestEntries m;
    m.emplace_back("models", o.models);
    write_run_manifest(dir, "entropy", std::move(m));
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
    DataOpts train;
    DataOpts test;
    TrainOpts hyper;
    std::uint64_t seed = 0;
    std::string out;
    bool force = false;
};

void run_compare(const CompareOpts& o) {
    using clock = std::chrono::steady_clock;
    const auto secs = [](clock::time_point a, clock::time_point b) {
        return std::chrono::duration<double>(b - a).count();
    };

    const fs::path dir = prepare_run_dir(o.out, o.force);
    const gtnc::Dataset train = load_data(o.train, o.seed);
    const gtnc::Dataset test = load_data(o.test, o.seed);
    const gtnc::TrainConfig config = make_config(o.hyper, o.seed);
    config.validate();

    TsvWriter w(dir / "comparison.tsv");
    w.row({"model", "accuracy", "train_seconds", "eval_seconds", "sweeps"});

    {
        auto t0 = clock::now();
        const gtnc::ClassifierBundle bundle = gtnc::train_all_classes(train, config);
        auto t1 = clock::now();
        const gtnc::EvalReport rep = gtnc::evaluate(bundle, test);
        auto t2 = clock::now();
        std::size_t sweeps = 0;
        for (const auto& r : bundle.provenance.reports) sweeps += r.sweeps_run;
        w.row({"gtnc", fmt(rep.accuracy), fmt(secs(t0, t1)), fmt(secs(t1, t2)), fmt(sweeps)});
    }
    {
        auto t0 = clock::now();
        const gtnc::LazyBundle bundle(train);
        auto t1 = clock::now();
        const gtnc::EvalReport rep = gtnc::evaluate(bundle, test);
        auto t2 = clock::now();
        w.row({"lazy", fmt(rep.accuracy), fmt(secs(t0, t1)), fmt(secs(t1, t2)),
               fmt(std::size_t{0})});
    }
    {
        auto t0 = clock::now();
        auto [model, report] = gtnc::train_discriminative(train, config);
        auto t1 = clock::now();
        const gtnc::EvalReport rep = gtnc::evaluate(model, test);
        auto t2 = clock::now();
        w.row({"disc", fmt(rep.accuracy), fmt(secs(t0, t1)), fmt(secs(t1, t2)),
               fmt(report.sweeps_run)});
    }

    ManifestEntries m;
    append_data_manifest(m, o.train, "train_");
    append_data_manifest(m, o.test, "test_");
    append_train_manifest(m, o.hyper);
    m.emplace_back("seed", fmt(o.seed));
    write_run_manifest(dir, "compare", std::move(m));
}

// ---------------------------------------------------------------------------

std::string g_config_path; // one subcommand parses per run; shared sink is fine

void add_run_opts(CLI::App* cmd, std::string& out, bool& force, std::uint64_t* seed) {
    cmd->add_option("--out", out, "run directory (created if missing)")->required();
    cmd->add_flag("--force", force, "reuse a run directory that already holds a run.manifest");
    if (seed)
        cmd->add_option("--seed", *seed, "global seed (subsampling and model initialization)")
            ->capture_default_str();
    cmd->add_option("--config", g_config_path,
                    "key=value file; command-line flags take precedence");
}

/// Subcommand factory; the take-last policy lets explicit flags override the
/// values injected from a --config file.
CLI::App* add_cmd(CLI::App& app, const std::string& name, const std::string& desc) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    return cmd;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generative tensor-network classification toolkit", "gtnc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    IngestOpts ingest;
    CLI::App* ingest_cmd =
        add_cmd(app, "ingest", "load an IDX pair, apply reductions, re-emit it");
    add_data_opts(ingest_cmd, ingest.data, "", "input");
    add_run_opts(ingest_cmd, ingest.out, ingest.force, &ingest.seed);

    TrainCmdOpts train;
    CLI::App* train_cmd =
        add_cmd(app, "train", "train one generative model per class (or one class)");
    add_data_opts(train_cmd, train.data, "", "training");
    add_train_opts(train_cmd, train.train);
    train_cmd->add_option("--class", train.only_class, "train only this class (default: all)")
        ->capture_default_str();
    add_run_opts(train_cmd, train.out, train.force, &train.seed);

    TrainDiscOpts disc;
    CLI::App* disc_cmd =
        add_cmd(app, "train-disc", "train the discriminative label-carrying model");
    add_data_opts(disc_cmd, disc.data, "", "training");
    add_train_opts(disc_cmd, disc.train);
    add_run_opts(disc_cmd, disc.out, disc.force, &disc.seed);

    EvalOpts classify;
    CLI::App* classify_cmd =
        add_cmd(app, "classify", "predict labels for a dataset; one row per sample");
    add_eval_opts(classify_cmd, classify, "input");
    add_run_opts(classify_cmd, classify.out, classify.force, &classify.seed);

    EvalOpts eval;
    CLI::App* eval_cmd =
        add_cmd(app, "eval", "score a dataset: metrics, confusion matrix, per-class scores");
    add_eval_opts(eval_cmd, eval, "test");
    add_run_opts(eval_cmd, eval.out, eval.force, &eval.seed);

    DistanceOpts dist;
    CLI::App* dist_cmd =
        add_cmd(app, "distances", "class-pair distance/fidelity matrices and clustering");
    add_data_opts(dist_cmd, dist.data, "", "input");
    dist_cmd->add_option("--space", dist.space, "matrix.tsv contents: raw, hilbert, or both")
        ->check(CLI::IsMember({"raw", "hilbert", "both"}))
        ->capture_default_str();
    add_run_opts(dist_cmd, dist.out, dist.force, &dist.seed);

    EntropyOpts entropy;
    CLI::App* entropy_cmd =
        add_cmd(app, "entropy", "per-bond Renyi-2 entropy of trained class models");
    entropy_cmd->add_option("--models", entropy.models, "run directory holding model files")
        ->required();
    add_run_opts(entropy_cmd, entropy.out, entropy.force, nullptr);

    CompareOpts compare;
    CLI::App* compare_cmd =
        add_cmd(app, "compare", "train and score all three classifier routes");
    add_data_opts(compare_cmd, compare.train, "train-", "training");
    add_data_opts(compare_cmd, compare.test, "test-", "test");
    add_train_opts(compare_cmd, compare.hyper);
    add_run_opts(compare_cmd, compare.out, compare.force, &compare.seed);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        expand_config(args);
    } catch (const gtnc::Error& e) {
        std::cerr << "gtnc: " << e.what() << '\n';
        return 2;
    }
    std::reverse(args.begin(), args.end()); // CLI11's vector overload wants reversed args
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // prints the help text or diagnostic
        return code == 0 ? 0 : 2;
    }

    std::string name = "";
    try {
        if (ingest_cmd->parsed()) {
            name = "ingest";
            run_ingest(ingest);
        } else if (train_cmd->parsed()) {
            name = "train";
            run_train(train);
        } else if (disc_cmd->parsed()) {
            name = "train-disc";
            run_train_disc(disc);
        } else if (classify_cmd->parsed()) {
            name = "classify";
            run_eval_like(classify, "classify", false);
        } else if (eval_cmd->parsed()) {
            name = "eval";
            run_eval_like(eval, "eval", true);
        } else if (dist_cmd->parsed()) {
            name = "distances";
            run_distances(dist);
        } else if (entropy_cmd->parsed()) {
            name = "entropy";
            run_entropy(entropy);
        } else if (compare_cmd->parsed()) {
            name = "compare";
            run_compare(compare);
        }
    } catch (const std::exception& e) {
        std::cerr << "gtnc " << name << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}
