#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "gtnc/errors.hpp"

namespace gtnc {

/// An image after the feature map: L local unit vectors of dimension d,
/// stored contiguously. The d^L product vector is never materialized.
class ProductState {
  public:
    ProductState() = default;
    ProductState(std::size_t num_sites, std::size_t local_dim, std::vector<double> values);

    std::size_t num_sites() const { return num_sites_; }
    std::size_t local_dim() const { return local_dim_; }

    std::span<const double> site(std::size_t i) const {
        return {values_.data() + i * local_dim_, local_dim_};
    }
    const std::vector<double>& values() const { return values_; }

  private:
    std::size_t num_sites_ = 0, local_dim_ = 0;
    std::vector<double> values_; // num_sites * local_dim
};

/// Pixel-wise map x -> [cos(pi x / 2), sin(pi x / 2)]. Requires 0 <= x <= 1.
std::array<double, 2> map_pixel(double x);

/// Apply map_pixel to every pixel. Only the two-component map is defined;
/// local_dim != 2 is an unimplemented extension point.
ProductState map_image(std::span<const double> pixels, std::size_t local_dim = 2);

/// Exact overlap of two product states via the factorized closed form
/// prod_i (u_i . v_i); costs O(L d) instead of O(d^L).
double product_overlap(const ProductState& u, const ProductState& v);

} // namespace gtnc
