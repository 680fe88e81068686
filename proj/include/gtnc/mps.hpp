#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtnc/feature_map.hpp"
#include "gtnc/tensor.hpp"

namespace gtnc {

/// Matrix product state over L sites: site l holds a tensor of shape
/// (chi_{l-1}, d, chi_l) with chi_0 = chi_L = 1.
///
/// When a canonical center is set, every site left of it is left-orthonormal
/// and every site right of it is right-orthonormal, so the global norm equals
/// the Frobenius norm of the center tensor. Instances returned by the library
/// are treated as immutable; the mutating members exist for trainer-owned
/// working copies.
class Mps {
  public:
    static constexpr int kNoCenter = -1;

    Mps() = default;
    explicit Mps(std::vector<Tensor> site_tensors, int canonical_center = kNoCenter);

    std::size_t num_sites() const { return sites_.size(); }
    std::size_t local_dim() const { return sites_.empty() ? 0 : sites_[0].extent(1); }
    int canonical_center() const { return center_; }

    const Tensor& site(std::size_t l) const { return sites_.at(l); }
    const std::vector<Tensor>& sites() const { return sites_; }

    /// Bond extents {chi_0, ..., chi_L}; chi_0 = chi_L = 1.
    std::vector<std::size_t> bond_dims() const;

    /// Replace a site tensor. Keeps the canonical center only when the
    /// replaced site is the center itself.
    void set_site(std::size_t l, Tensor t);

    /// Move the canonical center to `target` by QR steps, establishing full
    /// canonical form first if no center is set. The represented vector is
    /// unchanged.
    void move_center(std::size_t target);

    /// Global Frobenius norm of the represented d^L vector. O(1) when a
    /// canonical center is set, one transfer sweep otherwise.
    double norm() const;

    /// Scale so the represented vector has unit norm.
    void normalize();

  private:
    void orthonormalize_left_site(std::size_t l);  // push norm factor right
    void orthonormalize_right_site(std::size_t l); // push norm factor left

    std::vector<Tensor> sites_;
    int center_ = kNoCenter;
};

/// Seeded random MPS: entries uniform in (-0.5, 0.5), bond dims capped at
/// min(chi, d^l, d^{L-l}), then canonicalized to the last site and normalized.
Mps random_mps(std::size_t num_sites, std::size_t local_dim, std::size_t max_bond,
               std::uint64_t seed);

/// Pure canonicalization: returns a copy with the center at `center`.
Mps canonicalize(const Mps& m, std::size_t center);

/// Overlap <v|m> via sequential left-to-right contraction, O(L d chi^2).
double mps_product_overlap(const Mps& m, const ProductState& v);

/// Transfer-map kernels used by overlap and the sweeping trainers.
/// transfer_left maps an environment over the left bond of `site` to one over
/// its right bond (contracting the physical index with `local`);
/// transfer_right goes the other way.
std::vector<double> transfer_left(std::span<const double> env, const Tensor& site,
                                  std::span<const double> local);
std::vector<double> transfer_right(const Tensor& site, std::span<const double> local,
                                   std::span<const double> env);

/// Schmidt values across the cut after site `bond` (1-based, 1 <= bond <= L-1),
/// normalized so their squares sum to 1.
std::vector<double> schmidt_values(const Mps& m, std::size_t bond);

/// Renyi-2 entropy -ln(sum lambda^4) of the Schmidt spectrum at `bond`.
/// Bounded by ln(chi at that bond).
double renyi2_entropy(const Mps& m, std::size_t bond);

/// On-disk container shared by plain and label-carrying models.
struct MpsFileContent {
    std::vector<Tensor> tensors;
    int canonical_center = Mps::kNoCenter;
    std::uint32_t local_dim = 2;
    std::int32_t label_site = -1; // -1 for generative models
};

/// Binary model file: 8-byte magic, version, geometry, per-tensor shapes and
/// row-major little-endian doubles, trailing CRC-32. Round trips bit-exactly.
void write_mps_file(const std::string& path, const MpsFileContent& content);
MpsFileContent read_mps_file(const std::string& path);

void save_mps(const Mps& m, const std::string& path);
Mps load_mps(const std::string& path);

/// Sidecar plain-text manifest (key<TAB>value per line).
void save_manifest(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& entries);
std::vector<std::pair<std::string, std::string>> load_manifest(const std::string& path);

} // namespace gtnc
