#pragma once

// Fixed-length per-minutia descriptors, shared by MCC cylinders and minutia
// embeddings so pairing treats both channels identically.
//
// Binary dump format (little-endian):
//   bytes 0..3   magic "EMB1"
//   u32          count
//   u32          dim
//   count * dim  float32, row-major in template minutia order

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace latfuse {

class DescriptorSet
{
public:
    DescriptorSet() = default;
    DescriptorSet(std::string template_id, std::size_t dim)
        : template_id_(std::move(template_id))
        , dim_(dim)
    {
    }

    /// Appends one descriptor. Its length must equal dim().
    void push_back(std::span<const double> v, bool valid)
    {
        if (v.size() != dim_)
            throw Error("descriptor dimension " + std::to_string(v.size()) + " != set dimension " +
                        std::to_string(dim_));
        values_.insert(values_.end(), v.begin(), v.end());
        double ss = 0.0;
        for (double x : v)
            ss += x * x;
        norms_.push_back(std::sqrt(ss));
        valid_.push_back(valid ? 1 : 0);
    }

    const std::string& template_id() const noexcept { return template_id_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return valid_.size(); }
    bool empty() const noexcept { return valid_.empty(); }

    std::span<const double> operator[](std::size_t i) const
    {
        return {values_.data() + i * dim_, dim_};
    }
    bool valid(std::size_t i) const { return valid_[i] != 0; }
    /// L2 norm of descriptor i.
    double norm(std::size_t i) const { return norms_[i]; }

    std::size_t valid_count() const
    {
        std::size_t n = 0;
        for (auto v : valid_)
            n += v;
        return n;
    }

    /// Copy with every descriptor marked invalid.
    DescriptorSet all_invalid() const
    {
        DescriptorSet out = *this;
        std::fill(out.valid_.begin(), out.valid_.end(), std::uint8_t{0});
        return out;
    }

private:
    std::string template_id_;
    std::size_t dim_ = 0;
    std::vector<double> values_;
    std::vector<double> norms_;
    std::vector<std::uint8_t> valid_;
};

/// Embedding sets are descriptor sets whose valid vectors have unit norm.
using EmbeddingSet = DescriptorSet;

/// Dot product over the cached norms: the single formula used for every
/// cosine in the library.
inline double cosine_from_parts(std::span<const double> a, std::span<const double> b, double na,
                                double nb)
{
    double dot = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        dot += a[k] * b[k];
    const double c = dot / (na * nb);
    return std::clamp(c, -1.0, 1.0);
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw Error("cosine_similarity: dimension mismatch");
    double na = 0.0, nb = 0.0;
    for (double x : a)
        na += x * x;
    for (double x : b)
        nb += x * x;
    if (na == 0.0 || nb == 0.0)
        throw Error("cosine_similarity: zero vector");
    return cosine_from_parts(a, b, std::sqrt(na), std::sqrt(nb));
}

namespace detail {

inline constexpr std::array<char, 4> kEmbMagic = {'E', 'M', 'B', '1'};

inline void put_u32(std::ostream& out, std::uint32_t v)
{
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(const unsigned char* b)
{
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

} // namespace detail

/// Writes descriptors as float32 in the EMB1 layout.
inline void save_embeddings(const DescriptorSet& set, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write embedding file: " + path.string());
    out.write(detail::kEmbMagic.data(), 4);
    detail::put_u32(out, static_cast<std::uint32_t>(set.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(set.dim()));
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (double v : set[i]) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
            detail::put_u32(out, bits);
        }
    }
    if (!out)
        throw IoError("write failed: " + path.string());
}

/// Reads an EMB1 file and L2-normalizes every vector. `expected_count` is the
/// minutia count of the template the embeddings belong to.
inline EmbeddingSet load_embeddings(const std::filesystem::path& path, std::size_t expected_count,
                                    const std::string& template_id = {})
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open embedding file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), detail::kEmbMagic.data(), 4) != 0)
        throw ParseError(path.string() + ": bad magic, expected EMB1");
    const std::uint32_t count = detail::get_u32(bytes.data() + 4);
    const std::uint32_t dim = detail::get_u32(bytes.data() + 8);
    if (count != expected_count)
        throw ParseError(path.string() + ": embedding count " + std::to_string(count) +
                         " does not match template minutia count " +
                         std::to_string(expected_count));
    if (dim == 0 && count > 0)
        throw ParseError(path.string() + ": zero embedding dimension");
    const std::size_t need = 12 + std::size_t(count) * dim * 4;
    if (bytes.size() != need)
        throw ParseError(path.string() + ": expected " + std::to_string(need) + " bytes, got " +
                         std::to_string(bytes.size()));

    EmbeddingSet set(template_id, dim);
    std::vector<double> row(dim);
    const unsigned char* p = bytes.data() + 12;
    for (std::uint32_t i = 0; i < count; ++i) {
        double ss = 0.0;
        for (std::uint32_t k = 0; k < dim; ++k, p += 4) {
            const float f = std::bit_cast<float>(detail::get_u32(p));
            if (!std::isfinite(f))
                throw ParseError(path.string() + ": non-finite value in vector " +
                                 std::to_string(i));
            row[k] = f;
            ss += row[k] * row[k];
        }
        if (ss == 0.0)
            throw ParseError(path.string() + ": zero vector at index " + std::to_string(i));
        const double n = std::sqrt(ss);
        for (auto& v : row)
            v /= n;
        set.push_back(row, true);
    }
    return set;
}

} // namespace latfuse
