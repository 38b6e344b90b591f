#pragma once

// Flat key=value configuration covering every tunable of the pipeline.
//
//   # comment
//   mcc.radius = 70
//   fusion.w1 = 0.5
//
// Unknown keys are rejected. Later assignments override earlier ones, so
// callers apply defaults, then a file, then command-line overrides.

#include <charconv>
#include <functional>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "benchmark.hpp"
#include "error.hpp"
#include "template_io.hpp"

namespace latfuse {

using CliConfig = BenchmarkConfig;

struct ConfigKey
{
    std::string name;
    std::string help;
    std::function<void(CliConfig&, std::string_view)> set;
    std::function<std::string(const CliConfig&)> get;
};

namespace detail {

inline double to_double(std::string_view key, std::string_view v)
{
    double d = 0.0;
    if (!parse_double(v, d) || !std::isfinite(d))
        throw ParseError("'" + std::string(key) + "' expects a number, got '" + std::string(v) +
                         "'");
    return d;
}

inline long long to_integer(std::string_view key, std::string_view v)
{
    long long i = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, i);
    if (ec != std::errc() || ptr != end)
        throw ParseError("'" + std::string(key) + "' expects an integer, got '" + std::string(v) +
                         "'");
    return i;
}

inline bool to_bool(std::string_view key, std::string_view v)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw ParseError("'" + std::string(key) + "' expects true or false, got '" + std::string(v) +
                     "'");
}

template <class T, class Member>
ConfigKey real_key(std::string name, std::string help, Member member)
{
    return {name, std::move(help),
            [member, name](CliConfig& c, std::string_view v) {
                std::invoke(member, c) = static_cast<T>(to_double(name, v));
            },
            [member](const CliConfig& c) { return format_double(std::invoke(member, c)); }};
}

template <class T, class Member>
ConfigKey int_key(std::string name, std::string help, Member member)
{
    return {name, std::move(help),
            [member, name](CliConfig& c, std::string_view v) {
                const long long i = to_integer(name, v);
                if (i < 0 && std::is_unsigned_v<T>)
                    throw ParseError("'" + name + "' must be non-negative");
                std::invoke(member, c) = static_cast<T>(i);
            },
            [member](const CliConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

template <class Member>
ConfigKey bool_key(std::string name, std::string help, Member member)
{
    return {name, std::move(help),
            [member, name](CliConfig& c, std::string_view v) {
                std::invoke(member, c) = to_bool(name, v);
            },
            [member](const CliConfig& c) {
                return std::string(std::invoke(member, c) ? "true" : "false");
            }};
}

} // namespace detail

inline const std::vector<ConfigKey>& config_keys()
{
    using namespace detail;
    using C = CliConfig;
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        // cylinders
        k.push_back(real_key<double>("mcc.radius", "cylinder radius (px)",
                                     [](auto& c) -> auto& { return c.cylinder.radius; }));
        k.push_back(int_key<int>("mcc.grid", "cells per cylinder base side",
                                 [](auto& c) -> auto& { return c.cylinder.grid; }));
        k.push_back(int_key<int>("mcc.sections", "directional sections",
                                 [](auto& c) -> auto& { return c.cylinder.sections; }));
        k.push_back(real_key<double>("mcc.sigma_s", "spatial Gaussian std (px)",
                                     [](auto& c) -> auto& { return c.cylinder.sigma_s; }));
        k.push_back(real_key<double>("mcc.sigma_d", "directional Gaussian std (rad)",
                                     [](auto& c) -> auto& { return c.cylinder.sigma_d; }));
        k.push_back(int_key<int>("mcc.min_neighbors", "neighbours needed for a valid cylinder",
                                 [](auto& c) -> auto& { return c.cylinder.min_neighbors; }));
        // embeddings
        k.push_back(int_key<int>("emb.dim", "embedding dimension",
                                 [](auto& c) -> auto& { return c.embedding.dim; }));
        k.push_back({"emb.mode", "file: require .emb files; synthetic: build when absent",
                     [](C& c, std::string_view v) {
                         if (v == "file")
                             c.embedding.mode = EmbeddingMode::File;
                         else if (v == "synthetic")
                             c.embedding.mode = EmbeddingMode::Synthetic;
                         else
                             throw ParseError("'emb.mode' expects file or synthetic");
                     },
                     [](const C& c) {
                         return std::string(c.embedding.mode == EmbeddingMode::File ? "file"
                                                                                    : "synthetic");
                     }});
        k.push_back(real_key<double>("emb.synth_radius", "synthetic signature radius (px)",
                                     [](auto& c) -> auto& { return c.embedding.synth_radius; }));
        k.push_back(int_key<int>("emb.radial_bins", "synthetic log-polar radial bins",
                                 [](auto& c) -> auto& { return c.embedding.radial_bins; }));
        k.push_back(int_key<int>("emb.angular_bins", "synthetic angular bins",
                                 [](auto& c) -> auto& { return c.embedding.angular_bins; }));
        k.push_back(int_key<int>("emb.direction_bins", "synthetic direction bins",
                                 [](auto& c) -> auto& { return c.embedding.direction_bins; }));
        // fusion and relaxation
        k.push_back(real_key<double>("fusion.w1", "score-fusion weight of the MCC matrix",
                                     [](auto& c) -> auto& { return c.fusion.w1; }));
        k.push_back(real_key<double>("fusion.w2", "score-fusion weight of the embedding matrix",
                                     [](auto& c) -> auto& { return c.fusion.w2; }));
        k.push_back(real_key<double>("fusion.delta_theta", "direction gate of the MCC matrix (rad)",
                                     [](auto& c) -> auto& { return c.fusion.delta_theta; }));
        k.push_back(bool_key("fusion.gate_mcc", "apply the direction gate to the MCC matrix",
                             [](auto& c) -> auto& { return c.fusion.gate_mcc; }));
        k.push_back(real_key<double>("relax.w_r", "weight of a pair's own previous score",
                                     [](auto& c) -> auto& { return c.fusion.relaxation.w_r; }));
        k.push_back(int_key<int>("relax.n_rel", "relaxation iterations",
                                 [](auto& c) -> auto& { return c.fusion.relaxation.n_rel; }));
        for (int i = 0; i < 3; ++i) {
            const std::string n = std::to_string(i + 1);
            k.push_back(real_key<double>("relax.mu" + n, "compatibility sigmoid centre " + n,
                                         [i](auto& c) -> auto& { return c.fusion.relaxation.mu[i]; }));
            k.push_back(real_key<double>("relax.tau" + n, "compatibility sigmoid slope " + n,
                                         [i](auto& c) -> auto& { return c.fusion.relaxation.tau[i]; }));
        }
        k.push_back(real_key<double>("relax.d1_scale", "pixels per unit of length discrepancy",
                                     [](auto& c) -> auto& { return c.fusion.relaxation.d1_scale; }));
        // synthetic data
        k.push_back(int_key<std::uint64_t>("synth.seed", "benchmark seed",
                                           [](auto& c) -> auto& { return c.synth.seed; }));
        k.push_back(int_key<int>("synth.n_fingers", "gallery size",
                                 [](auto& c) -> auto& { return c.synth.n_fingers; }));
        k.push_back(int_key<int>("synth.min_minutiae", "fewest minutiae per finger",
                                 [](auto& c) -> auto& { return c.synth.min_minutiae; }));
        k.push_back(int_key<int>("synth.max_minutiae", "most minutiae per finger",
                                 [](auto& c) -> auto& { return c.synth.max_minutiae; }));
        k.push_back(int_key<int>("synth.width", "image width (px)",
                                 [](auto& c) -> auto& { return c.synth.width; }));
        k.push_back(int_key<int>("synth.height", "image height (px)",
                                 [](auto& c) -> auto& { return c.synth.height; }));
        k.push_back(real_key<double>("synth.min_spacing", "minimum minutia spacing (px)",
                                     [](auto& c) -> auto& { return c.synth.min_spacing; }));
        k.push_back(real_key<double>("perturb.max_rotation", "latent rotation bound (rad)",
                                     [](auto& c) -> auto& { return c.perturb.max_rotation; }));
        k.push_back(real_key<double>("perturb.max_translation", "latent shift bound per axis (px)",
                                     [](auto& c) -> auto& { return c.perturb.max_translation; }));
        k.push_back(real_key<double>("perturb.position_jitter", "position noise std (px)",
                                     [](auto& c) -> auto& { return c.perturb.position_jitter; }));
        k.push_back(real_key<double>("perturb.angle_jitter", "direction noise std (rad)",
                                     [](auto& c) -> auto& { return c.perturb.angle_jitter; }));
        k.push_back(real_key<double>("perturb.keep_min", "smallest kept fraction after crop",
                                     [](auto& c) -> auto& { return c.perturb.keep_min; }));
        k.push_back(real_key<double>("perturb.keep_max", "largest kept fraction after crop",
                                     [](auto& c) -> auto& { return c.perturb.keep_max; }));
        k.push_back(real_key<double>("perturb.spurious_mean", "mean spurious minutiae (Poisson)",
                                     [](auto& c) -> auto& { return c.perturb.spurious_mean; }));
        k.push_back(bool_key("perturb.crop", "crop latents to a random disc",
                             [](auto& c) -> auto& { return c.perturb.crop; }));
        k.push_back(real_key<double>("perturb.crop_min", "smallest crop radius (px)",
                                     [](auto& c) -> auto& { return c.perturb.crop_min; }));
        k.push_back(real_key<double>("perturb.crop_max", "largest crop radius (px)",
                                     [](auto& c) -> auto& { return c.perturb.crop_max; }));
        // evaluation
        k.push_back(int_key<std::size_t>("eval.cmc_k", "largest rank in CMC files",
                                         [](auto& c) -> auto& { return c.cmc_k; }));
        k.push_back(int_key<unsigned>("eval.threads", "worker threads, 0 = all cores",
                                      [](auto& c) -> auto& { return c.threads; }));
        return k;
    }();
    return keys;
}

inline const ConfigKey* find_config_key(std::string_view name)
{
    for (const auto& k : config_keys())
        if (k.name == name)
            return &k;
    return nullptr;
}

inline void set_config_value(CliConfig& cfg, std::string_view key, std::string_view value)
{
    const auto* k = find_config_key(key);
    if (!k)
        throw ParseError("unknown configuration key '" + std::string(key) + "'");
    k->set(cfg, value);
}

/// Applies one "key=value" assignment.
inline void apply_assignment(CliConfig& cfg, std::string_view text, std::size_t line = 0)
{
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
            s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
            s.remove_suffix(1);
        return s;
    };
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
        throw ParseError("expected key=value, got '" + std::string(text) + "'", line);
    try {
        set_config_value(cfg, trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    } catch (const ParseError& e) {
        if (line == 0)
            throw;
        throw ParseError(e.what(), line);
    }
}

inline void apply_config(CliConfig& cfg, std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        const auto hash = s.find('#');
        if (hash != std::string_view::npos)
            s = s.substr(0, hash);
        if (s.find_first_not_of(" \t\r") == std::string_view::npos)
            continue;
        apply_assignment(cfg, s, lineno);
    }
}

inline void apply_config_file(CliConfig& cfg, const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path.string());
    apply_config(cfg, in);
}

/// Every key with its default, one "key = value  # help" line each.
inline std::string describe_config(const CliConfig& cfg = {})
{
    std::string out;
    for (const auto& k : config_keys())
        out += k.name + " = " + k.get(cfg) + "  # " + k.help + "\n";
    return out;
}

} // namespace latfuse
