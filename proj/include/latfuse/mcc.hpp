#pragma once

// Real-valued Minutia Cylinder Code descriptors.
//
// The cylinder of minutia m is an N_grid x N_grid grid of cells laid out in
// m's own frame (first axis along m's direction) and covering [-R, R]^2,
// stacked N_D times along the height. Section k is centred on the directional
// difference phi_k = -pi + (k + 1/2) * 2pi / N_D. A cell accumulates, for each
// neighbour t, a spatial Gaussian of the distance from t to the cell centre
// times a directional Gaussian of dPhi(phi_k, wrap(theta_m - theta_t)).
// Cells whose centre lies outside the radius-R disc are zero.
//
// Vector layout: index = (k * N_grid + row) * N_grid + col, where col runs
// along m's direction and row along its left-hand normal.

#include <cmath>
#include <vector>

#include "descriptor.hpp"
#include "error.hpp"
#include "minutia.hpp"

namespace latfuse {

struct CylinderConfig
{
    double radius = 70.0;
    int grid = 16;
    int sections = 6;
    double sigma_s = 9.33;
    double sigma_d = 0.698;
    int min_neighbors = 2;

    std::size_t dimension() const
    {
        return static_cast<std::size_t>(grid) * grid * sections;
    }

    void validate() const
    {
        if (!(radius > 0.0) || grid < 2 || sections < 1 || !(sigma_s > 0.0) ||
            !(sigma_d > 0.0) || min_neighbors < 1)
            throw Error("invalid cylinder configuration");
    }
};

struct Cylinder
{
    std::vector<double> values;
    bool valid = false;
    std::size_t minutia_index = 0;
};

inline Cylinder build_cylinder(const MinutiaeTemplate& t, std::size_t i, const CylinderConfig& cfg)
{
    cfg.validate();
    if (i >= t.size())
        throw Error("build_cylinder: minutia index " + std::to_string(i) +
                    " out of range for template of size " + std::to_string(t.size()));

    const int n = cfg.grid;
    const int nd = cfg.sections;
    const double reach = cfg.radius + 3.0 * cfg.sigma_s;
    const Minutia& m = t[i];

    Cylinder cyl;
    cyl.minutia_index = i;
    cyl.values.assign(cfg.dimension(), 0.0);

    const double ds = 2.0 * cfg.radius / n;
    const double gs_norm = 1.0 / (cfg.sigma_s * std::sqrt(kTwoPi));
    const double gd_norm = 1.0 / (cfg.sigma_d * std::sqrt(kTwoPi));
    const double section_width = kTwoPi / nd;

    struct Neighbour
    {
        double x, y;
        std::vector<double> dir_weight;
    };
    // neighbours with their directional weight for every section
    std::vector<Neighbour> others;
    others.reserve(t.size());
    std::size_t close = 0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        if (j == i)
            continue;
        const Minutia& o = t[j];
        const double dist = euclidean_distance(m, o);
        if (dist <= reach)
            ++close;
        // cell centres lie within R of m, so farther minutiae reach no cell
        if (dist > cfg.radius + reach)
            continue;
        Neighbour nb{o.x, o.y, std::vector<double>(nd)};
        const double delta = wrap_signed(m.theta - o.theta);
        for (int k = 0; k < nd; ++k) {
            const double phi = -kPi + (k + 0.5) * section_width;
            const double a = angular_difference(phi, delta);
            nb.dir_weight[k] = gd_norm * std::exp(-a * a / (2.0 * cfg.sigma_d * cfg.sigma_d));
        }
        others.push_back(std::move(nb));
    }

    const double fx = std::cos(m.theta), fy = -std::sin(m.theta);
    const double lx = -std::sin(m.theta), ly = -std::cos(m.theta);
    const std::size_t plane = static_cast<std::size_t>(n) * n;
    bool any = false;

    for (int row = 0; row < n; ++row) {
        const double v = (row + 0.5) * ds - cfg.radius;
        for (int col = 0; col < n; ++col) {
            const double u = (col + 0.5) * ds - cfg.radius;
            if (u * u + v * v > cfg.radius * cfg.radius)
                continue;
            const double cx = m.x + u * fx + v * lx;
            const double cy = m.y + u * fy + v * ly;
            for (const auto& nb : others) {
                const double d = std::hypot(nb.x - cx, nb.y - cy);
                if (d > reach)
                    continue;
                const double gs =
                    gs_norm * std::exp(-d * d / (2.0 * cfg.sigma_s * cfg.sigma_s));
                const std::size_t base = static_cast<std::size_t>(row) * n + col;
                for (int k = 0; k < nd; ++k) {
                    const double c = gs * nb.dir_weight[k];
                    cyl.values[k * plane + base] += c;
                    any = any || c > 0.0;
                }
            }
        }
    }

    cyl.valid = close >= static_cast<std::size_t>(cfg.min_neighbors) && any;
    return cyl;
}

inline DescriptorSet build_mcc_set(const MinutiaeTemplate& t, const CylinderConfig& cfg = {})
{
    cfg.validate();
    DescriptorSet set(t.id, cfg.dimension());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Cylinder c = build_cylinder(t, i, cfg);
        set.push_back(c.values, c.valid);
    }
    return set;
}

} // namespace latfuse
