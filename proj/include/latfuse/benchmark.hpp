#pragma once

// End-to-end synthetic identification benchmark: generate a gallery and one
// latent query per finger, identify every query with the four matchers, add
// rank-level fusion of the two single channels, and report rank-1/5/10.
//
// Output directory layout:
//   gallery/*.mnt queries/*.mnt truth.csv
//   results_<matcher>.csv      one row per (query, candidate)
//   cmc_<matcher>.csv          k,accuracy for k = 1..cmc_k (also cmc_rank.csv)
//   summary.csv, summary.txt   matcher x rank-1/5/10 in percent

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "evaluation.hpp"
#include "synthetic.hpp"

namespace latfuse {

struct BenchmarkConfig
{
    SynthConfig synth;
    PerturbConfig perturb;
    CylinderConfig cylinder;
    EmbeddingConfig embedding;
    FusionConfig fusion;
    std::size_t cmc_k = 10;
    unsigned threads = 0;
};

struct BenchmarkRow
{
    std::string matcher; ///< mcc, emb, feature, score, rank
    CmcCurve curve;

    double rank(std::size_t k) const { return curve.at(std::min(k, curve.max_rank())); }
};

struct BenchmarkReport
{
    std::vector<BenchmarkRow> rows;
    std::array<std::vector<IdentificationResult>, 4> results;

    const BenchmarkRow& row(std::string_view matcher) const
    {
        for (const auto& r : rows)
            if (r.matcher == matcher)
                return r;
        throw Error("no benchmark row for '" + std::string(matcher) + "'");
    }
};

inline void write_summary(const BenchmarkReport& report, const std::filesystem::path& dir)
{
    std::ofstream csv(dir / "summary.csv", std::ios::binary);
    std::ofstream txt(dir / "summary.txt", std::ios::binary);
    if (!csv || !txt)
        throw IoError("cannot write summary under " + dir.string());
    csv << "matcher,rank1,rank5,rank10\n";
    txt << "Matcher    Rank-1   Rank-5  Rank-10\n";
    for (const auto& r : report.rows) {
        csv << r.matcher << ',' << detail::format_fixed6(100.0 * r.rank(1)) << ','
            << detail::format_fixed6(100.0 * r.rank(5)) << ','
            << detail::format_fixed6(100.0 * r.rank(10)) << '\n';
        char line[128];
        std::snprintf(line, sizeof line, "%-8s %8.2f %8.2f %8.2f\n", r.matcher.c_str(),
                      100.0 * r.rank(1), 100.0 * r.rank(5), 100.0 * r.rank(10));
        txt << line;
    }
}

/// Runs the benchmark; writes the output layout when `out_dir` is given.
inline BenchmarkReport run_benchmark(const BenchmarkConfig& cfg,
                                     const std::optional<std::filesystem::path>& out_dir = {})
{
    cfg.fusion.validate();
    const auto ds = make_dataset(cfg.synth, cfg.perturb);
    if (out_dir)
        write_dataset(ds, *out_dir);

    Gallery gallery(cfg.cylinder, cfg.embedding);
    gallery.enroll_all(ds.gallery);

    std::vector<Probe> probes(ds.queries.size());
    parallel_for(
        ds.queries.size(), [&](std::size_t i) { probes[i] = gallery.make_query(ds.queries[i]); },
        cfg.threads);

    BenchmarkReport report;
    for (auto& r : report.results)
        r.reserve(probes.size());
    for (const auto& probe : probes) {
        auto all = identify_all(gallery, probe, cfg.fusion, ds.truth.at(probe.tmpl.id),
                                cfg.threads);
        for (std::size_t m = 0; m < 4; ++m)
            report.results[m].push_back(std::move(all[m]));
    }

    for (std::size_t m = 0; m < 4; ++m)
        report.rows.push_back(
            {std::string(to_string(kAllMatchers[m])), cmc(report.results[m], cfg.cmc_k)});
    report.rows.push_back({"rank", rank_level_cmc(report.results[0], report.results[1], cfg.cmc_k)});

    if (out_dir) {
        for (std::size_t m = 0; m < 4; ++m) {
            const std::string name(to_string(kAllMatchers[m]));
            write_results(report.results[m], *out_dir / ("results_" + name + ".csv"));
        }
        for (const auto& r : report.rows)
            write_cmc(r.curve, *out_dir / ("cmc_" + r.matcher + ".csv"));
        write_summary(report, *out_dir);
    }
    return report;
}

} // namespace latfuse
