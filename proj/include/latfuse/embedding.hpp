#pragma once

// Minutia embeddings: either loaded from EMB1 files produced offline by a
// patch-embedding network, or synthesized as a handcrafted neighbourhood
// signature so the full pipeline runs without a network.
//
// The synthetic signature of minutia m soft-bins every neighbour within
// synth_radius into a log-polar grid laid out in m's frame, crossed with the
// neighbour's direction relative to m:
//   radial    rho = radial_bins * log1p(r / r0) / log1p(synth_radius / r0)
//   angular   (ray angle - theta_m) in [0, 2pi), cyclic
//   direction (theta_t - theta_m) in [0, 2pi), cyclic
// Each axis uses a Gaussian soft assignment with std of half a bin,
// normalized to unit mass per neighbour. The histogram is zero-padded to
// `dim` and L2-normalized.

#include <algorithm>
#include <cmath>
#include <vector>

#include "descriptor.hpp"
#include "error.hpp"
#include "minutia.hpp"

namespace latfuse {

enum class EmbeddingMode { File, Synthetic };

struct EmbeddingConfig
{
    int dim = 256;
    EmbeddingMode mode = EmbeddingMode::Synthetic;
    double synth_radius = 96.0;
    int radial_bins = 4;
    int angular_bins = 8;
    int direction_bins = 8;

    /// log-polar knee in pixels
    static constexpr double kRadialKnee = 10.0;

    void validate() const
    {
        if (dim < 1 || radial_bins < 1 || angular_bins < 1 || direction_bins < 1 ||
            !(synth_radius > 0.0))
            throw Error("invalid embedding configuration");
        if (mode == EmbeddingMode::Synthetic &&
            static_cast<long long>(radial_bins) * angular_bins * direction_bins > dim)
            throw Error("embedding bins exceed embedding dimension");
    }
};

namespace detail {

/// Gaussian soft assignment of coordinate `c` (in bin units) over `n` bins
/// centred at b + 0.5, normalized to sum 1.
inline void soft_assign(double c, int n, bool cyclic, std::vector<double>& w)
{
    w.assign(n, 0.0);
    double total = 0.0;
    for (int b = 0; b < n; ++b) {
        double d = std::abs(c - (b + 0.5));
        if (cyclic)
            d = std::min(d, n - d);
        w[b] = std::exp(-d * d / (2.0 * 0.25));
        total += w[b];
    }
    for (auto& x : w)
        x /= total;
}

} // namespace detail

inline EmbeddingSet build_synthetic_embeddings(const MinutiaeTemplate& t,
                                               const EmbeddingConfig& cfg = {})
{
    cfg.validate();
    const int nr = cfg.radial_bins, na = cfg.angular_bins, nd = cfg.direction_bins;
    const double log_extent = std::log1p(cfg.synth_radius / EmbeddingConfig::kRadialKnee);

    EmbeddingSet set(t.id, cfg.dim);
    std::vector<double> hist(cfg.dim);
    std::vector<double> wr, wa, wd;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Minutia& m = t[i];
        std::fill(hist.begin(), hist.end(), 0.0);
        bool any = false;
        for (std::size_t j = 0; j < t.size(); ++j) {
            if (j == i)
                continue;
            const Minutia& o = t[j];
            const double r = euclidean_distance(m, o);
            if (r > cfg.synth_radius)
                continue;
            any = true;
            const double rho = nr * std::log1p(r / EmbeddingConfig::kRadialKnee) / log_extent;
            const double rel_ray = r > 0.0 ? normalize_angle(ray_angle(m, o) - m.theta) : 0.0;
            const double rel_dir = normalize_angle(o.theta - m.theta);
            detail::soft_assign(rho, nr, false, wr);
            detail::soft_assign(rel_ray / (kTwoPi / na), na, true, wa);
            detail::soft_assign(rel_dir / (kTwoPi / nd), nd, true, wd);
            for (int a = 0; a < nr; ++a)
                for (int b = 0; b < na; ++b) {
                    const double wab = wr[a] * wa[b];
                    for (int c = 0; c < nd; ++c)
                        hist[(static_cast<std::size_t>(a) * na + b) * nd + c] += wab * wd[c];
                }
        }
        if (!any) {
            std::fill(hist.begin(), hist.end(), 0.0);
            hist[0] = 1.0;
            set.push_back(hist, false);
            continue;
        }
        double ss = 0.0;
        for (double v : hist)
            ss += v * v;
        const double n = std::sqrt(ss);
        for (auto& v : hist)
            v /= n;
        set.push_back(hist, true);
    }
    return set;
}

} // namespace latfuse
