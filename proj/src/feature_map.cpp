#include "gtnc/feature_map.hpp"

#include <cmath>
#include <string>

namespace gtnc {

ProductState::ProductState(std::size_t num_sites, std::size_t local_dim,
                           std::vector<double> values)
    : num_sites_(num_sites), local_dim_(local_dim), values_(std::move(values)) {
    if (values_.size() != num_sites_ * local_dim_)
        throw DimensionError("product_state: value buffer does not match geometry");
}

std::array<double, 2> map_pixel(double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("map_pixel: pixel " + std::to_string(x) + " outside [0,1]");
    const double angle = 0.5 * M_PI * x;
    return {std::cos(angle), std::sin(angle)};
}

ProductState map_image(std::span<const double> pixels, std::size_t local_dim) {
    if (local_dim != 2)
        throw ArgumentError("map_image: only the two-component feature map is defined");
    std::vector<double> values(pixels.size() * 2);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const auto s = map_pixel(pixels[i]);
        values[2 * i] = s[0];
        values[2 * i + 1] = s[1];
    }
    return ProductState(pixels.size(), 2, std::move(values));
}

double product_overlap(const ProductState& u, const ProductState& v) {
    if (u.num_sites() != v.num_sites() || u.local_dim() != v.local_dim())
        throw DimensionError("product_overlap: geometry mismatch");
    double overlap = 1.0;
    for (std::size_t i = 0; i < u.num_sites(); ++i) {
        auto a = u.site(i), b = v.site(i);
        double dot = 0.0;
        for (std::size_t s = 0; s < u.local_dim(); ++s) dot += a[s] * b[s];
        overlap *= dot;
    }
    return overlap;
}

} // namespace gtnc
