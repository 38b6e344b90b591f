#pragma once

// Local similarity sort with relaxation (LSS-R).
//
// Each candidate pair t starts from its local similarity gamma_t^0. At every
// iteration all scores are updated synchronously:
//
//   gamma_t^i = w_R * gamma_t^{i-1}
//             + (1 - w_R) * sum_{k != t} rho(t,k) * gamma_k^{i-1} / (n - 1)
//
// where n is the number of pairs and rho(t,k) in (0,1) rates how well the
// geometry between the two A-minutiae of t and k agrees with the geometry
// between their B-minutiae. The final score averages the top n_p relaxed
// values.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"
#include "minutia.hpp"
#include "pairing.hpp"

namespace latfuse {

struct RelaxationParams
{
    double w_r = 0.5;
    int n_rel = 5;
    std::array<double, 3> mu = {0.0416, 0.7853, 0.2094};
    std::array<double, 3> tau = {-30.0, -9.0, -16.8};
    /// Length discrepancies are divided by this many pixels before the
    /// first sigmoid, so mu[0] = 0.0416 corresponds to about 4.16 px.
    double d1_scale = 100.0;

    void validate() const
    {
        if (!(w_r >= 0.0 && w_r <= 1.0) || n_rel < 0 || !(d1_scale > 0.0))
            throw Error("invalid relaxation parameters");
    }
};

/// Geometric compatibility of pair t = (a_t, b_t) with pair k = (a_k, b_k).
inline double pair_compatibility(const Minutia& a_t, const Minutia& b_t, const Minutia& a_k,
                                  const Minutia& b_k, const RelaxationParams& p = {})
{
    const double d1 =
        std::abs(euclidean_distance(a_t, a_k) - euclidean_distance(b_t, b_k)) / p.d1_scale;
    const double d2 =
        angular_difference(direction_difference(a_t, a_k), direction_difference(b_t, b_k));
    const double d3 = angular_difference(radial_angle(a_t, a_k), radial_angle(b_t, b_k));
    const double d[3] = {d1, d2, d3};
    double rho = 1.0;
    for (int i = 0; i < 3; ++i)
        rho *= 1.0 / (1.0 + std::exp(-p.tau[i] * (d[i] - p.mu[i])));
    return rho;
}

/// Runs the synchronous update on raw scores. `rho` is n x n row-major, its
/// diagonal is ignored. Returns n_rel + 1 score vectors, the first being the
/// input. A single pair is returned unchanged at every iteration.
inline std::vector<std::vector<double>> relax_history(std::span<const double> initial,
                                                      std::span<const double> rho, double w_r,
                                                      int n_rel)
{
    const std::size_t n = initial.size();
    if (n == 0)
        throw Error("relax: empty pair list");
    if (rho.size() != n * n)
        throw Error("relax: compatibility matrix has wrong size");

    std::vector<std::vector<double>> hist;
    hist.reserve(n_rel + 1);
    hist.emplace_back(initial.begin(), initial.end());
    for (int it = 0; it < n_rel; ++it) {
        const auto& prev = hist.back();
        std::vector<double> next(n);
        if (n == 1) {
            next = prev;
        } else {
            for (std::size_t t = 0; t < n; ++t) {
                double support = 0.0;
                const double* row = rho.data() + t * n;
                for (std::size_t k = 0; k < n; ++k)
                    if (k != t)
                        support += row[k] * prev[k];
                next[t] = w_r * prev[t] + (1.0 - w_r) * support / static_cast<double>(n - 1);
            }
        }
        hist.push_back(std::move(next));
    }
    return hist;
}

struct RelaxedPair
{
    std::size_t row = 0;
    std::size_t col = 0;
    double initial = 0.0;
    double relaxed = 0.0;
    PairSource source = PairSource::Mcc;
};

struct RelaxedPairs
{
    std::vector<RelaxedPair> pairs; ///< sorted by (row, col)
    std::vector<double> rho;        ///< pairs.size()^2, row-major

    double compatibility(std::size_t t, std::size_t k) const { return rho[t * pairs.size() + k]; }
};

/// Relaxes a pair set between templates A (rows) and B (cols). The pairs are
/// first put in canonical (row, col) order so the result does not depend on
/// the order they were selected in.
inline RelaxedPairs relax(const PairSet& pairs, const MinutiaeTemplate& ta,
                          const MinutiaeTemplate& tb, const RelaxationParams& p = {})
{
    p.validate();
    if (pairs.empty())
        throw Error("relax: empty pair list");
    PairSet sorted = pairs;
    std::sort(sorted.begin(), sorted.end(), [](const MinutiaPair& x, const MinutiaPair& y) {
        return x.row != y.row ? x.row < y.row : x.col < y.col;
    });

    const std::size_t n = sorted.size();
    RelaxedPairs out;
    out.rho.assign(n * n, 0.0);
    std::vector<double> initial(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (sorted[t].row >= ta.size() || sorted[t].col >= tb.size())
            throw Error("relax: pair index outside template");
        initial[t] = sorted[t].score;
        for (std::size_t k = 0; k < n; ++k) {
            if (k == t)
                continue;
            out.rho[t * n + k] = pair_compatibility(ta[sorted[t].row], tb[sorted[t].col],
                                                    ta[sorted[k].row], tb[sorted[k].col], p);
        }
    }

    const auto hist = relax_history(initial, out.rho, p.w_r, p.n_rel);
    out.pairs.reserve(n);
    for (std::size_t t = 0; t < n; ++t)
        out.pairs.push_back(
            {sorted[t].row, sorted[t].col, initial[t], hist.back()[t], sorted[t].source});
    return out;
}

struct ScoredMatch
{
    double score = 0.0;   ///< sum of the top values divided by n_p
    double raw_sum = 0.0; ///< the same sum before division
    std::vector<RelaxedPair> top;
};

/// Averages the n_p largest relaxed scores (negatives count as 0). Ranking
/// ties go to the smaller row, then the smaller column.
inline ScoredMatch match_score(const RelaxedPairs& relaxed, std::size_t n_p)
{
    ScoredMatch out;
    if (n_p == 0 || relaxed.pairs.empty())
        return out;
    std::vector<RelaxedPair> ranked = relaxed.pairs;
    std::sort(ranked.begin(), ranked.end(), [](const RelaxedPair& x, const RelaxedPair& y) {
        if (x.relaxed != y.relaxed)
            return x.relaxed > y.relaxed;
        if (x.row != y.row)
            return x.row < y.row;
        return x.col < y.col;
    });
    ranked.resize(std::min(n_p, ranked.size()));
    for (const auto& r : ranked)
        out.raw_sum += std::max(0.0, r.relaxed);
    out.score = out.raw_sum / static_cast<double>(n_p);
    out.top = std::move(ranked);
    return out;
}

} // namespace latfuse
