#pragma once

// Similarity matrices between two descriptor sets and greedy Local
// Similarity Assignment of minutia pairs.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "descriptor.hpp"
#include "error.hpp"
#include "minutia.hpp"

namespace latfuse {

/// Marks entries excluded by the angle gate or by an invalid descriptor.
/// Compares below every real score, so negative cosines stay selectable.
inline constexpr double kGated = -std::numeric_limits<double>::infinity();

inline bool is_gated(double v) noexcept
{
    return v == kGated;
}

class SimilarityMatrix
{
public:
    SimilarityMatrix() = default;
    SimilarityMatrix(std::size_t rows, std::size_t cols, double fill = kGated)
        : rows_(rows)
        , cols_(cols)
        , values_(rows * cols, fill)
    {
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }

    bool gated(std::size_t r, std::size_t c) const { return is_gated((*this)(r, c)); }

    std::size_t ungated_count() const
    {
        return static_cast<std::size_t>(
            std::count_if(values_.begin(), values_.end(), [](double v) { return !is_gated(v); }));
    }

    /// Debug dump: "row,col,value" with GATED for excluded entries.
    void write_csv(std::ostream& out) const
    {
        out << "row,col,value\n";
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) {
                out << r << ',' << c << ',';
                if (gated(r, c))
                    out << "GATED";
                else
                    out << (*this)(r, c);
                out << '\n';
            }
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

/// Which similarity matrices selected a pair.
enum class PairSource : std::uint8_t { Mcc = 1, Emb = 2, Both = 3 };

inline PairSource merge_sources(PairSource a, PairSource b)
{
    return static_cast<PairSource>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}

struct MinutiaPair
{
    std::size_t row = 0; ///< index into template A
    std::size_t col = 0; ///< index into template B
    double score = 0.0;  ///< local similarity (initial relaxation score)
    PairSource source = PairSource::Mcc;

    friend bool operator==(const MinutiaPair&, const MinutiaPair&) = default;
};

using PairSet = std::vector<MinutiaPair>;

/// Cosine similarity of every (A_i, B_j). Entries involving an invalid
/// descriptor are gated. This is the ungated form: no direction check.
inline SimilarityMatrix sim_score(const DescriptorSet& a, const DescriptorSet& b)
{
    if (!a.empty() && !b.empty() && a.dim() != b.dim())
        throw Error("sim_score: descriptor dimensions differ (" + std::to_string(a.dim()) +
                    " vs " + std::to_string(b.dim()) + ")");
    SimilarityMatrix s(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a.valid(i))
            continue;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (b.valid(j))
                s(i, j) = cosine_from_parts(a[i], b[j], a.norm(i), b.norm(j));
        }
    }
    return s;
}

/// Gated form: an entry is filled only when the circular difference of the
/// two minutia directions is at most `delta_theta`.
inline SimilarityMatrix sim_score(const DescriptorSet& a, const DescriptorSet& b,
                                  const MinutiaeTemplate& ta, const MinutiaeTemplate& tb,
                                  double delta_theta)
{
    if (a.size() != ta.size() || b.size() != tb.size())
        throw Error("sim_score: descriptor count does not match template size");
    if (!a.empty() && !b.empty() && a.dim() != b.dim())
        throw Error("sim_score: descriptor dimensions differ");
    SimilarityMatrix s(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a.valid(i))
            continue;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (!b.valid(j) || angular_difference(ta[i].theta, tb[j].theta) > delta_theta)
                continue;
            s(i, j) = cosine_from_parts(a[i], b[j], a.norm(i), b.norm(j));
        }
    }
    return s;
}

/// Greedy assignment: repeatedly take the largest ungated entry whose row
/// and column are both unused. Ties go to the smaller row, then the smaller
/// column. The result is ordered by score descending with the same tie-break.
inline PairSet lsa_select(const SimilarityMatrix& s, std::size_t n_r,
                          PairSource source = PairSource::Mcc)
{
    struct Entry
    {
        double v;
        std::uint32_t r, c;
    };
    std::vector<Entry> entries;
    entries.reserve(s.ungated_count());
    for (std::size_t r = 0; r < s.rows(); ++r)
        for (std::size_t c = 0; c < s.cols(); ++c)
            if (!s.gated(r, c))
                entries.push_back({s(r, c), static_cast<std::uint32_t>(r),
                                   static_cast<std::uint32_t>(c)});
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        if (x.v != y.v)
            return x.v > y.v;
        if (x.r != y.r)
            return x.r < y.r;
        return x.c < y.c;
    });

    PairSet out;
    std::vector<bool> row_used(s.rows()), col_used(s.cols());
    for (const auto& e : entries) {
        if (out.size() >= n_r)
            break;
        if (row_used[e.r] || col_used[e.c])
            continue;
        row_used[e.r] = true;
        col_used[e.c] = true;
        out.push_back({e.r, e.c, e.v, source});
    }
    return out;
}

inline std::size_t compute_n_r(std::size_t len_a, std::size_t len_b)
{
    return std::min<std::size_t>(12, std::min(len_a, len_b));
}

inline std::size_t compute_n_p(std::size_t len_a, std::size_t len_b)
{
    return std::min<std::size_t>(8, std::min(len_a, len_b));
}

} // namespace latfuse
