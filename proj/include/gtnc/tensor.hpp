#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "gtnc/errors.hpp"

namespace gtnc {

/// Dense real-valued tensor with row-major storage.
///
/// Tensors are value objects: every operation returns a new tensor and never
/// mutates its inputs, so they are safe to share across threads. All public
/// operations keep the data free of NaN/Inf given finite inputs.
class Tensor {
  public:
    Tensor() = default;

    /// Zero-initialized tensor of the given shape. Extents must be >= 1.
    explicit Tensor(std::vector<std::size_t> shape);

    /// Tensor adopting existing row-major data; data.size() must equal the
    /// product of the extents.
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor identity(std::size_t n);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }

    /// Element access by multi-index (row-major).
    double at(const std::vector<std::size_t>& idx) const;
    double& at(const std::vector<std::size_t>& idx);

    /// Same data, new shape; the element count must match.
    Tensor reshape(std::vector<std::size_t> shape) const;

    /// Permute axes: result index i draws from input axis perm[i].
    Tensor permute(const std::vector<std::size_t>& perm) const;

    Tensor scaled(double factor) const;
    Tensor operator+(const Tensor& other) const;
    Tensor operator-(const Tensor& other) const;

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Pairwise tensor contraction. Each pair (i, j) sums index i of `a` against
/// index j of `b`; paired extents must match and pairs must be disjoint.
/// The result carries a's unpaired indices (in order) followed by b's.
Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

struct QrResult {
    Tensor q; // shape [left extents..., k]
    Tensor r; // shape [k, right extents...]
};

/// QR factorization of `t` matricized over (left_indices) x (the rest).
/// Q has orthonormal columns; the sign convention fixes R's diagonal to be
/// non-negative so the factorization is deterministic. k = min(rows, cols).
QrResult qr_split(const Tensor& t, const std::vector<std::size_t>& left_indices);

struct SvdResult {
    Tensor u;                           // shape [left extents..., k]
    std::vector<double> singular_values; // descending, k kept values
    Tensor vt;                          // shape [k, right extents...]
    double discarded_weight = 0.0;      // sum of squared dropped singular values
};

/// Truncated SVD of `t` matricized over (left_indices) x (the rest), keeping
/// at most max_rank singular values. u's columns and vt's rows are orthonormal.
SvdResult svd_split(const Tensor& t, const std::vector<std::size_t>& left_indices,
                    std::size_t max_rank);

double frobenius_norm(const Tensor& t);

} // namespace gtnc
