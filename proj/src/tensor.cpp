#include "gtnc/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace gtnc {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

void check_shape(const std::vector<std::size_t>& shape) {
    for (std::size_t e : shape) {
        if (e == 0) throw ArgumentError("tensor: zero extent in shape");
    }
}

using MatrixMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutableMatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Permutation that puts `front` first (in the given order) and the remaining
// axes after it in ascending order.
std::vector<std::size_t> front_permutation(std::size_t rank, const std::vector<std::size_t>& front) {
    std::vector<bool> used(rank, false);
    std::vector<std::size_t> perm = front;
    for (std::size_t i : front) used[i] = true;
    for (std::size_t i = 0; i < rank; ++i)
        if (!used[i]) perm.push_back(i);
    return perm;
}

struct Matricized {
    Tensor permuted;
    std::size_t rows = 0, cols = 0;
    std::vector<std::size_t> left_shape, right_shape;
};

Matricized matricize(const Tensor& t, const std::vector<std::size_t>& left_indices) {
    if (left_indices.empty())
        throw ArgumentError("tensor: left index group must be nonempty");
    std::set<std::size_t> seen;
    for (std::size_t i : left_indices) {
        if (i >= t.rank()) throw ArgumentError("tensor: left index out of range");
        if (!seen.insert(i).second) throw ArgumentError("tensor: repeated left index");
    }
    if (seen.size() >= t.rank())
        throw ArgumentError("tensor: left group must be a proper subset of the indices");

    std::vector<std::size_t> left(seen.begin(), seen.end());
    Matricized m;
    m.permuted = t.permute(front_permutation(t.rank(), left));
    for (std::size_t i = 0; i < t.rank(); ++i) {
        std::size_t e = m.permuted.extent(i);
        if (i < left.size()) {
            m.left_shape.push_back(e);
        } else {
            m.right_shape.push_back(e);
        }
    }
    m.rows = shape_product(m.left_shape);
    m.cols = shape_product(m.right_shape);
    return m;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    check_shape(shape_);
    data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_product(shape_))
        throw DimensionError("tensor: data length does not match shape");
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = 1.0;
    return t;
}

double Tensor::at(const std::vector<std::size_t>& idx) const {
    return const_cast<Tensor*>(this)->at(idx);
}

double& Tensor::at(const std::vector<std::size_t>& idx) {
    if (idx.size() != shape_.size())
        throw ArgumentError("tensor: index rank mismatch");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] >= shape_[i]) throw ArgumentError("tensor: index out of range");
        flat = flat * shape_[i] + idx[i];
    }
    return data_[flat];
}

Tensor Tensor::reshape(std::vector<std::size_t> shape) const {
    check_shape(shape);
    if (shape_product(shape) != data_.size())
        throw DimensionError("tensor: reshape changes element count");
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::permute(const std::vector<std::size_t>& perm) const {
    if (perm.size() != rank()) throw ArgumentError("tensor: permutation rank mismatch");
    std::vector<bool> used(rank(), false);
    std::vector<std::size_t> new_shape(rank());
    for (std::size_t i = 0; i < rank(); ++i) {
        if (perm[i] >= rank() || used[perm[i]])
            throw ArgumentError("tensor: invalid permutation");
        used[perm[i]] = true;
        new_shape[i] = shape_[perm[i]];
    }

    // old strides, then walk the output in row-major order
    std::vector<std::size_t> old_strides(rank(), 1);
    for (std::size_t i = rank(); i-- > 1;)
        old_strides[i - 1] = old_strides[i] * shape_[i];

    Tensor out(new_shape);
    std::vector<std::size_t> idx(rank(), 0);
    const std::size_t n = data_.size();
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t src = 0;
        for (std::size_t i = 0; i < rank(); ++i) src += idx[i] * old_strides[perm[i]];
        out.data_[flat] = data_[src];
        for (std::size_t i = rank(); i-- > 0;) {
            if (++idx[i] < new_shape[i]) break;
            idx[i] = 0;
        }
    }
    return out;
}

Tensor Tensor::scaled(double factor) const {
    Tensor out = *this;
    for (double& x : out.data_) x *= factor;
    return out;
}

Tensor Tensor::operator+(const Tensor& other) const {
    if (!same_shape(other)) throw DimensionError("tensor: shape mismatch in addition");
    Tensor out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] += other.data_[i];
    return out;
}

Tensor Tensor::operator-(const Tensor& other) const {
    if (!same_shape(other)) throw DimensionError("tensor: shape mismatch in subtraction");
    Tensor out = *this;
    for (std::size_t i = 0; i < data_.size(); ++i) out.data_[i] -= other.data_[i];
    return out;
}

Tensor contract(const Tensor& a, const Tensor& b,
                const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::set<std::size_t> a_used, b_used;
    for (const auto& [ia, ib] : pairs) {
        if (ia >= a.rank() || ib >= b.rank())
            throw ArgumentError("contract: pair index out of range");
        if (!a_used.insert(ia).second || !b_used.insert(ib).second)
            throw ArgumentError("contract: repeated index in pairs");
        if (a.extent(ia) != b.extent(ib))
            throw DimensionError("contract: extent mismatch on paired indices (" +
                                 std::to_string(a.extent(ia)) + " vs " +
                                 std::to_string(b.extent(ib)) + ")");
    }

    // Move contracted axes of a to the back and of b to the front, in pair
    // order, then multiply the two matricizations.
    std::vector<std::size_t> a_free, b_free, a_con, b_con;
    for (std::size_t i = 0; i < a.rank(); ++i)
        if (!a_used.count(i)) a_free.push_back(i);
    for (std::size_t i = 0; i < b.rank(); ++i)
        if (!b_used.count(i)) b_free.push_back(i);
    for (const auto& [ia, ib] : pairs) {
        a_con.push_back(ia);
        b_con.push_back(ib);
    }

    std::vector<std::size_t> a_perm = a_free, b_perm = b_con;
    a_perm.insert(a_perm.end(), a_con.begin(), a_con.end());
    b_perm.insert(b_perm.end(), b_free.begin(), b_free.end());

    Tensor ap = a.permute(a_perm);
    Tensor bp = b.permute(b_perm);

    std::size_t m = 1, k = 1, n = 1;
    std::vector<std::size_t> out_shape;
    for (std::size_t i : a_free) {
        m *= a.extent(i);
        out_shape.push_back(a.extent(i));
    }
    for (std::size_t i : a_con) k *= a.extent(i);
    for (std::size_t i : b_free) {
        n *= b.extent(i);
        out_shape.push_back(b.extent(i));
    }
    if (out_shape.empty()) out_shape.push_back(1); // scalar result

    Tensor out(out_shape);
    MatrixMap ma(ap.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k));
    MatrixMap mb(bp.data().data(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
    MutableMatrixMap mo(out.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    mo.noalias() = ma * mb;
    return out;
}

QrResult qr_split(const Tensor& t, const std::vector<std::size_t>& left_indices) {
    Matricized m = matricize(t, left_indices);
    const std::size_t k = std::min(m.rows, m.cols);

    MatrixMap mat(m.permuted.data().data(), static_cast<Eigen::Index>(m.rows),
                  static_cast<Eigen::Index>(m.cols));
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(mat);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(
                            static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(k));
    Eigen::MatrixXd r = qr.matrixQR()
                            .topRows(static_cast<Eigen::Index>(k))
                            .triangularView<Eigen::Upper>();

    // fix signs so R's diagonal is non-negative
    for (std::size_t i = 0; i < k; ++i) {
        if (r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) < 0) {
            r.row(static_cast<Eigen::Index>(i)) *= -1.0;
            q.col(static_cast<Eigen::Index>(i)) *= -1.0;
        }
    }

    std::vector<std::size_t> q_shape = m.left_shape;
    q_shape.push_back(k);
    std::vector<std::size_t> r_shape = {k};
    r_shape.insert(r_shape.end(), m.right_shape.begin(), m.right_shape.end());

    Tensor qt(q_shape);
    MutableMatrixMap(qt.data().data(), static_cast<Eigen::Index>(m.rows),
                     static_cast<Eigen::Index>(k)) = q;
    Tensor rt(r_shape);
    MutableMatrixMap(rt.data().data(), static_cast<Eigen::Index>(k),
                     static_cast<Eigen::Index>(m.cols)) = r;
    return {std::move(qt), std::move(rt)};
}

SvdResult svd_split(const Tensor& t, const std::vector<std::size_t>& left_indices,
                    std::size_t max_rank) {
    if (max_rank == 0) throw ArgumentError("svd_split: max_rank must be positive");
    Matricized m = matricize(t, left_indices);

    MatrixMap mat(m.permuted.data().data(), static_cast<Eigen::Index>(m.rows),
                  static_cast<Eigen::Index>(m.cols));
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);

    const std::size_t full = static_cast<std::size_t>(svd.singularValues().size());
    const std::size_t keep = std::min(full, max_rank);

    SvdResult res;
    res.singular_values.assign(svd.singularValues().data(), svd.singularValues().data() + keep);
    for (std::size_t i = keep; i < full; ++i) {
        const double s = svd.singularValues()(static_cast<Eigen::Index>(i));
        res.discarded_weight += s * s;
    }

    std::vector<std::size_t> u_shape = m.left_shape;
    u_shape.push_back(keep);
    std::vector<std::size_t> vt_shape = {keep};
    vt_shape.insert(vt_shape.end(), m.right_shape.begin(), m.right_shape.end());

    Tensor u(u_shape);
    MutableMatrixMap(u.data().data(), static_cast<Eigen::Index>(m.rows),
                     static_cast<Eigen::Index>(keep)) =
        svd.matrixU().leftCols(static_cast<Eigen::Index>(keep));
    Tensor vt(vt_shape);
    MutableMatrixMap(vt.data().data(), static_cast<Eigen::Index>(keep),
                     static_cast<Eigen::Index>(m.cols)) =
        svd.matrixV().leftCols(static_cast<Eigen::Index>(keep)).transpose();

    res.u = std::move(u);
    res.vt = std::move(vt);
    return res;
}

double frobenius_norm(const Tensor& t) {
    double sum = 0.0;
    for (double x : t.data()) sum += x * x;
    return std::sqrt(sum);
}

} // namespace gtnc
