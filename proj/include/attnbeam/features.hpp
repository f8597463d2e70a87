// features.hpp
//
// The P x D feature grid that stands in for an image encoder output, plus
// its on-disk ABFT form: magic "ABFT", u32-LE pixel count, u32-LE feature
// dim, then P*D IEEE-754 binary32 little-endian values, row-major.
// save followed by load is a bit-level identity.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "attnbeam/errors.hpp"

namespace attnbeam {

class FeatureGrid {
  public:
    FeatureGrid(int pixels, int dim)
        : pixels_(pixels), dim_(dim), values_(check_shape(pixels, dim), 0.0f) {}

    int pixels() const { return pixels_; }
    int dim() const { return dim_; }

    float at(int p, int d) const { return values_[index(p, d)]; }
    float& at(int p, int d) { return values_[index(p, d)]; }

    const float* data() const { return values_.data(); }
    float* data() { return values_.data(); }

    // Row-major view of one pixel's feature vector.
    Eigen::Map<const Eigen::VectorXf> row(int p) const {
        return Eigen::Map<const Eigen::VectorXf>(values_.data() + static_cast<std::size_t>(p) * dim_, dim_);
    }

    // Double-precision copy for the training/inference math.
    Eigen::MatrixXd as_matrix() const {
        Eigen::MatrixXd m(pixels_, dim_);
        for (int p = 0; p < pixels_; ++p) {
            for (int d = 0; d < dim_; ++d) m(p, d) = static_cast<double>(at(p, d));
        }
        return m;
    }

    bool operator==(const FeatureGrid& other) const {
        return pixels_ == other.pixels_ && dim_ == other.dim_ &&
               std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(float)) == 0;
    }

  private:
    static std::size_t check_shape(int pixels, int dim) {
        if (pixels < 1 || dim < 1) {
            throw Error(ErrorCode::DimMismatch,
                        "feature grid needs P >= 1 and D >= 1, got P=" + std::to_string(pixels) +
                            " D=" + std::to_string(dim));
        }
        return static_cast<std::size_t>(pixels) * static_cast<std::size_t>(dim);
    }

    std::size_t index(int p, int d) const {
        return static_cast<std::size_t>(p) * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(d);
    }

    int pixels_;
    int dim_;
    std::vector<float> values_;
};

namespace detail {

constexpr char kFeatureMagic[4] = {'A', 'B', 'F', 'T'};

inline void put_u32_le(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline bool get_u32_le(std::istream& in, std::uint32_t& v) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
    v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
        (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    return true;
}

inline std::uint32_t float_bits(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    return u;
}

inline float bits_to_float(std::uint32_t u) {
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

} // namespace detail

inline void save_features(const FeatureGrid& grid, std::ostream& out) {
    out.write(detail::kFeatureMagic, 4);
    detail::put_u32_le(out, static_cast<std::uint32_t>(grid.pixels()));
    detail::put_u32_le(out, static_cast<std::uint32_t>(grid.dim()));
    const std::size_t n = static_cast<std::size_t>(grid.pixels()) * static_cast<std::size_t>(grid.dim());
    for (std::size_t i = 0; i < n; ++i) detail::put_u32_le(out, detail::float_bits(grid.data()[i]));
    if (!out) throw Error(ErrorCode::IoError, "feature write failed");
}

inline void save_features(const FeatureGrid& grid, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + path);
    save_features(grid, out);
}

inline FeatureGrid load_features(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4)) {
        throw Error(ErrorCode::TruncatedPayload, "stream ends inside magic at byte offset 0");
    }
    if (std::memcmp(magic, detail::kFeatureMagic, 4) != 0) {
        throw Error(ErrorCode::BadMagic,
                    std::string("expected 'ABFT' at byte offset 0, got '") + std::string(magic, 4) + "'");
    }
    std::uint32_t pixels = 0, dim = 0;
    if (!detail::get_u32_le(in, pixels)) {
        throw Error(ErrorCode::TruncatedPayload, "stream ends inside pixel count at byte offset 4");
    }
    if (!detail::get_u32_le(in, dim)) {
        throw Error(ErrorCode::TruncatedPayload, "stream ends inside feature dim at byte offset 8");
    }
    FeatureGrid grid(static_cast<int>(pixels), static_cast<int>(dim));
    const std::size_t n = static_cast<std::size_t>(pixels) * static_cast<std::size_t>(dim);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t offset = 12 + 4 * i;
        std::uint32_t bits = 0;
        if (!detail::get_u32_le(in, bits)) {
            throw Error(ErrorCode::TruncatedPayload,
                        "stream ends inside value payload at byte offset " + std::to_string(offset));
        }
        const float f = detail::bits_to_float(bits);
        if (!std::isfinite(f)) {
            throw Error(ErrorCode::NonFiniteValue,
                        "non-finite value at byte offset " + std::to_string(offset));
        }
        grid.data()[i] = f;
    }
    return grid;
}

inline FeatureGrid load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open: " + path);
    return load_features(in);
}

} // namespace attnbeam
