#include "gtnc/mps.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace gtnc {

namespace {

void validate_chain(const std::vector<Tensor>& sites, int center) {
    if (sites.size() < 2) throw ArgumentError("mps: need at least 2 sites");
    for (std::size_t l = 0; l < sites.size(); ++l) {
        if (sites[l].rank() != 3)
            throw DimensionError("mps: site tensor must have rank 3");
        if (sites[l].extent(1) != sites[0].extent(1))
            throw DimensionError("mps: physical dimension varies across sites");
        if (l + 1 < sites.size() && sites[l].extent(2) != sites[l + 1].extent(0))
            throw DimensionError("mps: adjacent bond extents disagree at bond " +
                                 std::to_string(l + 1));
    }
    if (sites.front().extent(0) != 1 || sites.back().extent(2) != 1)
        throw DimensionError("mps: boundary bonds must have extent 1");
    if (center != Mps::kNoCenter &&
        (center < 0 || static_cast<std::size_t>(center) >= sites.size()))
        throw ArgumentError("mps: canonical center out of range");
}

double uniform_entry(std::mt19937_64& rng) {
    // 53-bit mantissa draw in [-0.5, 0.5); identical on every platform
    return (rng() >> 11) * (1.0 / 9007199254740992.0) - 0.5;
}

// --- binary model container ---------------------------------------------

constexpr std::array<char, 8> kMagic = {'G', 'T', 'N', 'C', 'M', 'P', 'S', '1'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i)
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

struct ByteWriter {
    std::vector<std::uint8_t> buf;
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
};

struct ByteReader {
    const std::uint8_t* data;
    std::size_t len, pos = 0;
    void need(std::size_t n) const {
        if (pos + n > len) throw FormatError("model file: truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(data[pos + i]) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(v);
    }
};

} // namespace

Mps::Mps(std::vector<Tensor> site_tensors, int canonical_center)
    : sites_(std::move(site_tensors)), center_(canonical_center) {
    validate_chain(sites_, center_);
}

std::vector<std::size_t> Mps::bond_dims() const {
    std::vector<std::size_t> dims;
    dims.reserve(sites_.size() + 1);
    dims.push_back(1);
    for (const Tensor& t : sites_) dims.push_back(t.extent(2));
    return dims;
}

void Mps::set_site(std::size_t l, Tensor t) {
    if (l >= sites_.size()) throw ArgumentError("mps: site index out of range");
    if (t.rank() != 3 || t.extent(0) != sites_[l].extent(0) ||
        t.extent(1) != sites_[l].extent(1) || t.extent(2) != sites_[l].extent(2))
        throw DimensionError("mps: replacement tensor must match the site shape");
    sites_[l] = std::move(t);
    if (center_ != static_cast<int>(l)) center_ = kNoCenter;
}

void Mps::orthonormalize_left_site(std::size_t l) {
    auto [q, r] = qr_split(sites_[l], {0, 1});
    sites_[l] = std::move(q);
    sites_[l + 1] = contract(r, sites_[l + 1], {{1, 0}});
}

void Mps::orthonormalize_right_site(std::size_t l) {
    auto [q, r] = qr_split(sites_[l], {1, 2}); // q: (d, b, k), r: (k, a)
    sites_[l] = q.permute({2, 0, 1});
    sites_[l - 1] = contract(sites_[l - 1], r, {{2, 1}});
}

void Mps::move_center(std::size_t target) {
    if (target >= sites_.size()) throw ArgumentError("mps: center out of range");
    if (center_ == kNoCenter) {
        for (std::size_t l = sites_.size() - 1; l > target; --l)
            orthonormalize_right_site(l);
        for (std::size_t l = 0; l < target; ++l)
            orthonormalize_left_site(l);
        center_ = static_cast<int>(target);
        return;
    }
    while (static_cast<std::size_t>(center_) < target) {
        orthonormalize_left_site(static_cast<std::size_t>(center_));
        ++center_;
    }
    while (static_cast<std::size_t>(center_) > target) {
        orthonormalize_right_site(static_cast<std::size_t>(center_));
        --center_;
    }
}

double Mps::norm() const {
    if (center_ != kNoCenter) return frobenius_norm(sites_[static_cast<std::size_t>(center_)]);
    Tensor env = Tensor::scalar(1.0).reshape({1, 1});
    for (const Tensor& t : sites_) {
        Tensor tmp = contract(env, t, {{1, 0}});    // (a, s, b)
        env = contract(t, tmp, {{0, 0}, {1, 1}});   // (b, b')
    }
    return std::sqrt(std::max(env[0], 0.0));
}

void Mps::normalize() {
    const double n = norm();
    if (n == 0.0) throw DegenerateStateError("mps: cannot normalize a zero-norm state");
    const std::size_t scale_site =
        center_ == kNoCenter ? 0 : static_cast<std::size_t>(center_);
    sites_[scale_site] = sites_[scale_site].scaled(1.0 / n);
}

Mps random_mps(std::size_t num_sites, std::size_t local_dim, std::size_t max_bond,
               std::uint64_t seed) {
    if (num_sites < 2) throw ArgumentError("random_mps: need at least 2 sites");
    if (local_dim < 2) throw ArgumentError("random_mps: local dimension must be >= 2");
    if (max_bond < 1) throw ArgumentError("random_mps: bond dimension must be >= 1");

    // exact caps min(chi, d^l, d^{L-l}), computed without overflow
    std::vector<std::size_t> dims(num_sites + 1, 1);
    for (std::size_t l = 1; l < num_sites; ++l)
        dims[l] = std::min(dims[l - 1] * local_dim, max_bond);
    for (std::size_t l = num_sites - 1; l > 0; --l)
        dims[l] = std::min(dims[l], dims[l + 1] * local_dim);

    std::mt19937_64 rng(seed);
    std::vector<Tensor> sites;
    sites.reserve(num_sites);
    for (std::size_t l = 0; l < num_sites; ++l) {
        Tensor t({dims[l], local_dim, dims[l + 1]});
        for (double& x : t.data()) x = uniform_entry(rng);
        sites.push_back(std::move(t));
    }

    Mps m(std::move(sites));
    m.move_center(num_sites - 1);
    m.normalize();
    return m;
}

Mps canonicalize(const Mps& m, std::size_t center) {
    Mps out = m;
    out.move_center(center);
    return out;
}

std::vector<double> transfer_left(std::span<const double> env, const Tensor& site,
                                  std::span<const double> local) {
    const std::size_t a = site.extent(0), d = site.extent(1), b = site.extent(2);
    std::vector<double> out(b, 0.0);
    const double* t = site.data().data();
    for (std::size_t i = 0; i < a; ++i) {
        for (std::size_t s = 0; s < d; ++s) {
            const double c = env[i] * local[s];
            const double* row = t + (i * d + s) * b;
            for (std::size_t j = 0; j < b; ++j) out[j] += c * row[j];
        }
    }
    return out;
}

std::vector<double> transfer_right(const Tensor& site, std::span<const double> local,
                                   std::span<const double> env) {
    const std::size_t a = site.extent(0), d = site.extent(1), b = site.extent(2);
    std::vector<double> out(a, 0.0);
    const double* t = site.data().data();
    for (std::size_t i = 0; i < a; ++i) {
        double acc = 0.0;
        for (std::size_t s = 0; s < d; ++s) {
            const double* row = t + (i * d + s) * b;
            double dot = 0.0;
            for (std::size_t j = 0; j < b; ++j) dot += row[j] * env[j];
            acc += local[s] * dot;
        }
        out[i] = acc;
    }
    return out;
}

double mps_product_overlap(const Mps& m, const ProductState& v) {
    if (m.num_sites() != v.num_sites() || m.local_dim() != v.local_dim())
        throw DimensionError("mps_product_overlap: geometry mismatch");
    std::vector<double> env = {1.0};
    for (std::size_t l = 0; l < m.num_sites(); ++l)
        env = transfer_left(env, m.site(l), v.site(l));
    return env[0];
}

std::vector<double> schmidt_values(const Mps& m, std::size_t bond) {
    if (bond < 1 || bond >= m.num_sites())
        throw ArgumentError("schmidt_values: bond must be in [1, L-1]");
    Mps work = canonicalize(m, bond - 1);
    const Tensor& center = work.site(bond - 1);
    SvdResult svd = svd_split(center, {0, 1}, std::min(center.extent(0) * center.extent(1),
                                                       center.extent(2)));
    double total = 0.0;
    for (double s : svd.singular_values) total += s * s;
    if (total <= 0.0)
        throw DegenerateStateError("schmidt_values: zero-norm state has no Schmidt spectrum");
    const double inv = 1.0 / std::sqrt(total);
    for (double& s : svd.singular_values) s *= inv;
    return std::move(svd.singular_values);
}

double renyi2_entropy(const Mps& m, std::size_t bond) {
    double purity = 0.0;
    for (double s : schmidt_values(m, bond)) purity += s * s * s * s;
    return -std::log(purity);
}

void write_mps_file(const std::string& path, const MpsFileContent& content) {
    ByteWriter w;
    w.buf.insert(w.buf.end(), kMagic.begin(), kMagic.end());
    w.u32(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(content.tensors.size()));
    w.u32(content.local_dim);
    w.i32(content.label_site);
    w.i32(content.canonical_center);
    w.u32(static_cast<std::uint32_t>(content.tensors.size() + 1));
    w.u32(1);
    for (const Tensor& t : content.tensors)
        w.u32(static_cast<std::uint32_t>(t.extent(t.rank() - 1)));
    for (const Tensor& t : content.tensors) {
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
        for (double x : t.data()) w.f64(x);
    }
    const std::uint32_t crc = crc32(w.buf.data(), w.buf.size());
    w.u32(crc);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_mps_file: cannot open " + path);
    out.write(reinterpret_cast<const char*>(w.buf.data()),
              static_cast<std::streamsize>(w.buf.size()));
    if (!out) throw IoError("write_mps_file: write failed for " + path);
}

MpsFileContent read_mps_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_mps_file: cannot open " + path);
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    if (buf.size() < kMagic.size() + 8) throw FormatError("model file: truncated");

    if (std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0)
        throw FormatError("model file: bad magic in " + path);
    const std::size_t body = buf.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= std::uint32_t(buf[body + i]) << (8 * i);
    if (crc32(buf.data(), body) != stored)
        throw FormatError("model file: checksum mismatch in " + path);

    ByteReader r{buf.data(), body, kMagic.size()};
    const std::uint32_t version = r.u32();
    if (version != kFormatVersion)
        throw FormatError("model file: unsupported format version " + std::to_string(version));

    MpsFileContent content;
    const std::uint32_t num_sites = r.u32();
    content.local_dim = r.u32();
    content.label_site = r.i32();
    content.canonical_center = r.i32();
    const std::uint32_t num_bonds = r.u32();
    for (std::uint32_t i = 0; i < num_bonds; ++i) r.u32(); // bond list, informational

    for (std::uint32_t l = 0; l < num_sites; ++l) {
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape(rank);
        std::size_t n = 1;
        for (auto& e : shape) {
            e = r.u32();
            n *= e;
        }
        std::vector<double> data(n);
        for (double& x : data) x = r.f64();
        content.tensors.emplace_back(std::move(shape), std::move(data));
    }
    if (r.pos != body) throw FormatError("model file: trailing bytes in " + path);
    return content;
}

void save_mps(const Mps& m, const std::string& path) {
    MpsFileContent content;
    content.tensors = m.sites();
    content.canonical_center = m.canonical_center();
    content.local_dim = static_cast<std::uint32_t>(m.local_dim());
    content.label_site = -1;
    write_mps_file(path, content);
}

Mps load_mps(const std::string& path) {
    MpsFileContent content = read_mps_file(path);
    if (content.label_site != -1)
        throw FormatError("load_mps: " + path + " carries a label index; use the labeled loader");
    return Mps(std::move(content.tensors), content.canonical_center);
}

void save_manifest(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path);
    if (!out) throw IoError("save_manifest: cannot open " + path);
    for (const auto& [key, value] : entries) out << key << '\t' << value << '\n';
    if (!out) throw IoError("save_manifest: write failed for " + path);
}

std::vector<std::pair<std::string, std::string>> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_manifest: cannot open " + path);
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError("load_manifest: malformed line in " + path);
        entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    return entries;
}

} // namespace gtnc
