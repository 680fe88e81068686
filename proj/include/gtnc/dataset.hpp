#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gtnc/errors.hpp"

namespace gtnc {

/// Where a dataset came from and how it was reduced. Recorded in run
/// manifests so experiments can be reproduced exactly.
struct Provenance {
    std::string images_path;
    std::string labels_path;
    std::size_t downsample_factor = 1;
    bool subsampled = false;
    std::size_t per_class = 0;
    std::uint64_t subsample_seed = 0;
};

/// Labeled images with pixels normalized to [0,1]. Immutable after load;
/// reductions return new datasets.
class Dataset {
  public:
    Dataset() = default;
    Dataset(std::size_t height, std::size_t width, std::vector<double> pixels,
            std::vector<int> labels, Provenance provenance = {});

    std::size_t size() const { return labels_.size(); }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t pixels_per_image() const { return height_ * width_; }

    std::span<const double> image(std::size_t i) const {
        return {pixels_.data() + i * pixels_per_image(), pixels_per_image()};
    }
    int label(std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<double>& pixels() const { return pixels_; }
    const Provenance& provenance() const { return provenance_; }

    /// Highest label + 1 (labels are class indices in [0, K)).
    std::size_t num_classes() const;

    std::vector<std::size_t> class_counts() const;

  private:
    std::size_t height_ = 0, width_ = 0;
    std::vector<double> pixels_; // size() * height * width, row-major
    std::vector<int> labels_;
    Provenance provenance_;
};

/// Parse an IDX image/label file pair. Image magic must be 0x00000803 and
/// label magic 0x00000801 (big-endian); raw bytes are divided by 255.0.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Write a dataset back out as an IDX pair, quantizing pixels to bytes via
/// round(x * 255). Lossless only for datasets whose pixels are k/255.
void save_idx(const Dataset& d, const std::string& images_path,
              const std::string& labels_path);

/// Non-overlapping factor x factor average pooling. factor must divide both
/// height and width.
Dataset downsample(const Dataset& d, std::size_t factor);

/// Keep at most per_class samples of each class, chosen by a seeded
/// Fisher-Yates draw; retained samples keep their original order. Classes
/// smaller than per_class are kept whole.
Dataset subsample(const Dataset& d, std::size_t per_class, std::uint64_t seed);

/// Partition into num_classes() datasets by label. Empty classes yield empty
/// datasets; no sample is lost or duplicated.
std::vector<Dataset> split_by_class(const Dataset& d);

} // namespace gtnc
