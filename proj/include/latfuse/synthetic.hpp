#pragma once

// Seeded synthetic fingers and latent-style queries.
//
// A finger is a set of minutiae rejection-sampled over the image extent with
// a minimum spacing; directions follow a smooth orientation field (a sum of
// 2-4 random sinusoids) plus uniform noise. A latent is derived from a finger
// by: circular crop -> random subsample -> rigid rotation and shift ->
// Gaussian jitter of positions and directions -> spurious minutiae inside the
// crop. Every finger and every latent draws from its own stream derived from
// (seed, finger index), so generation order does not matter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "minutia.hpp"
#include "template_io.hpp"

namespace latfuse {

using Rng = std::mt19937_64;

struct SynthConfig
{
    std::uint64_t seed = 42;
    int n_fingers = 200;
    int min_minutiae = 30;
    int max_minutiae = 60;
    int width = 500;
    int height = 500;
    double min_spacing = 12.0;

    void validate() const
    {
        if (n_fingers < 1 || min_minutiae < 1 || max_minutiae < min_minutiae || width < 1 ||
            height < 1 || min_spacing < 0.0)
            throw Error("invalid synthetic finger configuration");
    }
};

struct PerturbConfig
{
    double max_rotation = kPi / 6.0;
    double max_translation = 50.0;
    double position_jitter = 4.0;
    double angle_jitter = 0.087;
    double keep_min = 0.4;
    double keep_max = 0.8;
    double spurious_mean = 3.0;
    bool crop = true;
    double crop_min = 120.0;
    double crop_max = 250.0;

    void validate() const
    {
        if (!(keep_min > 0.0) || keep_max > 1.0 || keep_max < keep_min || position_jitter < 0.0 ||
            angle_jitter < 0.0 || max_rotation < 0.0 || max_translation < 0.0 ||
            spurious_mean < 0.0 || (crop && (!(crop_min > 0.0) || crop_max < crop_min)))
            throw Error("invalid latent perturbation configuration");
    }

    /// No crop, no loss, no motion, no noise: the latent equals its source.
    static PerturbConfig identity()
    {
        PerturbConfig p;
        p.max_rotation = 0.0;
        p.max_translation = 0.0;
        p.position_jitter = 0.0;
        p.angle_jitter = 0.0;
        p.keep_min = p.keep_max = 1.0;
        p.spurious_mean = 0.0;
        p.crop = false;
        return p;
    }
};

/// Independent generator stream for (seed, finger index, purpose).
inline Rng make_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return Rng(seq);
}

inline MinutiaeTemplate generate_finger(Rng& rng, const SynthConfig& cfg, std::string id = {})
{
    cfg.validate();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int target = std::uniform_int_distribution<int>(cfg.min_minutiae, cfg.max_minutiae)(rng);

    struct Wave
    {
        double amp, kx, ky, phase;
    };
    const int n_waves = std::uniform_int_distribution<int>(2, 4)(rng);
    const double base = kTwoPi * unit(rng);
    std::vector<Wave> waves;
    for (int w = 0; w < n_waves; ++w) {
        const double amp = 0.5 + unit(rng);
        const double dir = kTwoPi * unit(rng);
        const double wavelength = 150.0 + 250.0 * unit(rng);
        const double phase = kTwoPi * unit(rng);
        const double k = kTwoPi / wavelength;
        waves.push_back({amp, k * std::cos(dir), k * std::sin(dir), phase});
    }
    auto field = [&](double x, double y) {
        double a = base;
        for (const auto& w : waves)
            a += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
        return a;
    };

    MinutiaeTemplate t;
    t.id = std::move(id);
    t.width = cfg.width;
    t.height = cfg.height;
    int rejections = 0;
    while (static_cast<int>(t.size()) < target) {
        const double x = cfg.width * unit(rng);
        const double y = cfg.height * unit(rng);
        bool ok = true;
        for (const auto& m : t.minutiae)
            if (std::hypot(m.x - x, m.y - y) < cfg.min_spacing) {
                ok = false;
                break;
            }
        if (!ok) {
            if (++rejections >= 10000) {
                std::clog << "warning: finger '" << t.id << "' stopped at " << t.size() << " of "
                          << target << " minutiae (spacing unsatisfiable)\n";
                break;
            }
            continue;
        }
        rejections = 0;
        const double noise = -0.3 + 0.6 * unit(rng);
        t.minutiae.emplace_back(x, y, field(x, y) + noise);
    }
    return t;
}

struct LatentSample
{
    MinutiaeTemplate tmpl;
    /// For each latent minutia, the index of its source minutia or -1 when
    /// spurious.
    std::vector<long> source_index;
};

inline LatentSample perturb_to_latent(const MinutiaeTemplate& t, Rng& rng,
                                      const PerturbConfig& cfg, std::string id = {})
{
    cfg.validate();
    if (t.empty())
        throw Error("perturb_to_latent: source template is empty");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double w = t.width.value_or(500), h = t.height.value_or(500);

    // crop
    double cx = w / 2.0, cy = h / 2.0, radius = std::hypot(w, h);
    std::vector<std::size_t> kept;
    for (int attempt = 0; attempt < 5; ++attempt) {
        kept.clear();
        if (cfg.crop) {
            cx = w * (0.25 + 0.5 * unit(rng));
            cy = h * (0.25 + 0.5 * unit(rng));
            radius = cfg.crop_min + (cfg.crop_max - cfg.crop_min) * unit(rng);
        }
        for (std::size_t i = 0; i < t.size(); ++i)
            if (!cfg.crop || std::hypot(t[i].x - cx, t[i].y - cy) <= radius)
                kept.push_back(i);
        if (!kept.empty())
            break;
    }
    if (kept.empty()) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < t.size(); ++i)
            if (std::hypot(t[i].x - cx, t[i].y - cy) < std::hypot(t[best].x - cx, t[best].y - cy))
                best = i;
        kept.push_back(best);
    }

    // subsample, preserving source order
    const double keep = cfg.keep_min + (cfg.keep_max - cfg.keep_min) * unit(rng);
    const auto n_keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(keep * static_cast<double>(kept.size()))));
    if (n_keep < kept.size()) {
        std::shuffle(kept.begin(), kept.end(), rng);
        kept.resize(n_keep);
        std::sort(kept.begin(), kept.end());
    }

    LatentSample out;
    out.tmpl.id = std::move(id);
    out.tmpl.width = t.width;
    out.tmpl.height = t.height;
    for (auto i : kept) {
        out.tmpl.minutiae.push_back(t[i]);
        out.source_index.push_back(static_cast<long>(i));
    }

    // rigid motion about the crop centre
    const double angle = cfg.max_rotation * (2.0 * unit(rng) - 1.0);
    const double dx = cfg.max_translation * (2.0 * unit(rng) - 1.0);
    const double dy = cfg.max_translation * (2.0 * unit(rng) - 1.0);
    if (angle != 0.0 || dx != 0.0 || dy != 0.0)
        out.tmpl = rigid_transform(out.tmpl, angle, cx, cy, dx, dy);

    if (cfg.position_jitter > 0.0 || cfg.angle_jitter > 0.0) {
        std::normal_distribution<double> z(0.0, 1.0);
        for (auto& m : out.tmpl.minutiae) {
            const double jx = cfg.position_jitter * z(rng);
            const double jy = cfg.position_jitter * z(rng);
            const double ja = cfg.angle_jitter * z(rng);
            m = Minutia(m.x + jx, m.y + jy, m.theta + ja, m.quality);
        }
    }

    if (cfg.spurious_mean > 0.0) {
        const int n_spurious = std::poisson_distribution<int>(cfg.spurious_mean)(rng);
        const double scx = cx + dx, scy = cy + dy;
        const double sr = cfg.crop ? radius : std::min(w, h) / 2.0;
        for (int s = 0; s < n_spurious; ++s) {
            const double r = sr * std::sqrt(unit(rng));
            const double a = kTwoPi * unit(rng);
            out.tmpl.minutiae.emplace_back(scx + r * std::cos(a), scy + r * std::sin(a),
                                           kTwoPi * unit(rng));
            out.source_index.push_back(-1);
        }
    }
    return out;
}

/// Gallery of fingers plus one latent query per finger.
struct SyntheticDataset
{
    std::vector<MinutiaeTemplate> gallery;
    std::vector<MinutiaeTemplate> queries;
    std::map<std::string, std::string> truth; ///< query id -> mate id
};

inline std::string indexed_id(char prefix, int i)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%04d", prefix, i);
    return buf;
}

inline SyntheticDataset make_dataset(const SynthConfig& synth, const PerturbConfig& perturb)
{
    synth.validate();
    perturb.validate();
    SyntheticDataset ds;
    for (int i = 0; i < synth.n_fingers; ++i) {
        Rng finger_rng = make_stream(synth.seed, static_cast<std::uint64_t>(i), 0);
        auto finger = generate_finger(finger_rng, synth, indexed_id('f', i));
        Rng latent_rng = make_stream(synth.seed, static_cast<std::uint64_t>(i), 1);
        auto latent = perturb_to_latent(finger, latent_rng, perturb, indexed_id('q', i));
        ds.truth[latent.tmpl.id] = finger.id;
        ds.queries.push_back(std::move(latent.tmpl));
        ds.gallery.push_back(std::move(finger));
    }
    return ds;
}

/// gallery/<id>.mnt, queries/<id>.mnt and truth.csv under `dir`.
inline void write_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "gallery", ec);
    fs::create_directories(dir / "queries", ec);
    if (ec)
        throw IoError("cannot create dataset directories under " + dir.string());
    for (const auto& t : ds.gallery)
        save_template(t, dir / "gallery" / (t.id + ".mnt"));
    for (const auto& t : ds.queries)
        save_template(t, dir / "queries" / (t.id + ".mnt"));
    std::ofstream truth(dir / "truth.csv", std::ios::binary);
    if (!truth)
        throw IoError("cannot write " + (dir / "truth.csv").string());
    truth << "query_id,mate_id\n";
    for (const auto& [q, m] : ds.truth)
        truth << q << ',' << m << '\n';
}

/// Reads a "query_id,mate_id" file.
inline std::map<std::string, std::string> load_truth(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open truth file: " + path.string());
    std::map<std::string, std::string> truth;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || (lineno == 1 && line == "query_id,mate_id"))
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ParseError("expected 'query_id,mate_id'", lineno);
        truth[line.substr(0, comma)] = line.substr(comma + 1);
    }
    return truth;
}

} // namespace latfuse
