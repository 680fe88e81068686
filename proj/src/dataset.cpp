#include "gtnc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace gtnc {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char buf[4];
    if (!in.read(reinterpret_cast<char*>(buf), 4))
        throw IoError("load_idx: truncated file " + path);
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                            static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8),
                            static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(buf), 4);
}

} // namespace

Dataset::Dataset(std::size_t height, std::size_t width, std::vector<double> pixels,
                 std::vector<int> labels, Provenance provenance)
    : height_(height), width_(width), pixels_(std::move(pixels)),
      labels_(std::move(labels)), provenance_(std::move(provenance)) {
    if (pixels_.size() != labels_.size() * height_ * width_)
        throw ConsistencyError("dataset: pixel buffer does not match image count");
    for (double x : pixels_) {
        if (!(x >= 0.0 && x <= 1.0))
            throw DomainError("dataset: pixel outside [0,1]");
    }
}

std::size_t Dataset::num_classes() const {
    int max_label = -1;
    for (int l : labels_) max_label = std::max(max_label, l);
    return static_cast<std::size_t>(max_label + 1);
}

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(num_classes(), 0);
    for (int l : labels_) ++counts[static_cast<std::size_t>(l)];
    return counts;
}

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("load_idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("load_idx: cannot open " + labels_path);

    if (read_be32(img, images_path) != kImageMagic)
        throw FormatError("load_idx: bad image magic in " + images_path);
    const std::size_t n_img = read_be32(img, images_path);
    const std::size_t height = read_be32(img, images_path);
    const std::size_t width = read_be32(img, images_path);

    if (read_be32(lab, labels_path) != kLabelMagic)
        throw FormatError("load_idx: bad label magic in " + labels_path);
    const std::size_t n_lab = read_be32(lab, labels_path);

    if (n_img != n_lab)
        throw ConsistencyError("load_idx: image count " + std::to_string(n_img) +
                               " != label count " + std::to_string(n_lab));

    std::vector<unsigned char> raw(n_img * height * width);
    if (!img.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw IoError("load_idx: truncated image data in " + images_path);
    std::vector<unsigned char> raw_labels(n_lab);
    if (!lab.read(reinterpret_cast<char*>(raw_labels.data()),
                  static_cast<std::streamsize>(raw_labels.size())))
        throw IoError("load_idx: truncated label data in " + labels_path);

    std::vector<double> pixels(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) pixels[i] = raw[i] / 255.0;
    std::vector<int> labels(raw_labels.begin(), raw_labels.end());

    Provenance prov;
    prov.images_path = images_path;
    prov.labels_path = labels_path;
    return Dataset(height, width, std::move(pixels), std::move(labels), std::move(prov));
}

void save_idx(const Dataset& d, const std::string& images_path,
              const std::string& labels_path) {
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("save_idx: cannot open " + images_path);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IoError("save_idx: cannot open " + labels_path);

    write_be32(img, kImageMagic);
    write_be32(img, static_cast<std::uint32_t>(d.size()));
    write_be32(img, static_cast<std::uint32_t>(d.height()));
    write_be32(img, static_cast<std::uint32_t>(d.width()));
    std::vector<unsigned char> raw(d.pixels().size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<unsigned char>(std::lround(d.pixels()[i] * 255.0));
    img.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));

    write_be32(lab, kLabelMagic);
    write_be32(lab, static_cast<std::uint32_t>(d.size()));
    for (int l : d.labels()) {
        const unsigned char b = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!img || !lab) throw IoError("save_idx: write failed");
}

Dataset downsample(const Dataset& d, std::size_t factor) {
    if (factor == 0) throw ArgumentError("downsample: factor must be positive");
    if (factor == 1) return d;
    if (d.height() % factor != 0 || d.width() % factor != 0)
        throw ArgumentError("downsample: factor " + std::to_string(factor) +
                            " does not divide " + std::to_string(d.height()) + "x" +
                            std::to_string(d.width()));

    const std::size_t nh = d.height() / factor, nw = d.width() / factor;
    std::vector<double> pixels(d.size() * nh * nw);
    const double inv = 1.0 / static_cast<double>(factor * factor);
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto img = d.image(i);
        double* out = pixels.data() + i * nh * nw;
        for (std::size_t r = 0; r < nh; ++r) {
            for (std::size_t c = 0; c < nw; ++c) {
                double sum = 0.0;
                for (std::size_t dr = 0; dr < factor; ++dr)
                    for (std::size_t dc = 0; dc < factor; ++dc)
                        sum += img[(r * factor + dr) * d.width() + (c * factor + dc)];
                out[r * nw + c] = std::min(sum * inv, 1.0);
            }
        }
    }
    Provenance prov = d.provenance();
    prov.downsample_factor *= factor;
    return Dataset(nh, nw, std::move(pixels), d.labels(), std::move(prov));
}

Dataset subsample(const Dataset& d, std::size_t per_class, std::uint64_t seed) {
    if (per_class == 0) throw ArgumentError("subsample: per_class must be positive");

    std::vector<std::vector<std::size_t>> by_class(d.num_classes());
    for (std::size_t i = 0; i < d.size(); ++i)
        by_class[static_cast<std::size_t>(d.label(i))].push_back(i);

    // Hand-rolled Fisher-Yates so the draw is identical on every platform.
    std::vector<bool> keep(d.size(), false);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& idx = by_class[c];
        std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + c);
        for (std::size_t i = idx.size(); i-- > 1;) {
            std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(idx[i], idx[j]);
        }
        const std::size_t take = std::min(per_class, idx.size());
        for (std::size_t i = 0; i < take; ++i) keep[idx[i]] = true;
    }

    std::vector<double> pixels;
    std::vector<int> labels;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!keep[i]) continue;
        auto img = d.image(i);
        pixels.insert(pixels.end(), img.begin(), img.end());
        labels.push_back(d.label(i));
    }

    Provenance prov = d.provenance();
    prov.subsampled = true;
    prov.per_class = per_class;
    prov.subsample_seed = seed;
    return Dataset(d.height(), d.width(), std::move(pixels), std::move(labels), std::move(prov));
}

std::vector<Dataset> split_by_class(const Dataset& d) {
    const std::size_t k = d.num_classes();
    std::vector<std::vector<double>> pixels(k);
    std::vector<std::vector<int>> labels(k);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto c = static_cast<std::size_t>(d.label(i));
        auto img = d.image(i);
        pixels[c].insert(pixels[c].end(), img.begin(), img.end());
        labels[c].push_back(d.label(i));
    }
    std::vector<Dataset> parts;
    parts.reserve(k);
    for (std::size_t c = 0; c < k; ++c)
        parts.emplace_back(d.height(), d.width(), std::move(pixels[c]), std::move(labels[c]),
                           d.provenance());
    return parts;
}

} // namespace gtnc
