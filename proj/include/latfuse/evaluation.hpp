#pragma once

// 1:N identification against an enrolled gallery, CMC curves and result
// serialization.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "descriptor.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "fusion.hpp"
#include "mcc.hpp"
#include "parallel.hpp"
#include "template_io.hpp"

namespace latfuse {

/// A template with both channels' descriptors, built once.
struct Probe
{
    MinutiaeTemplate tmpl;
    DescriptorSet mcc;
    EmbeddingSet emb;
};

/// Builds cylinders and embeddings for `t`. Supplied embeddings are used
/// as-is; otherwise synthetic ones are built (file mode requires them).
inline Probe make_probe(MinutiaeTemplate t, const CylinderConfig& cyl, const EmbeddingConfig& emb,
                        std::optional<EmbeddingSet> embeddings = std::nullopt)
{
    Probe p;
    p.mcc = build_mcc_set(t, cyl);
    if (embeddings) {
        if (embeddings->size() != t.size())
            throw Error("embeddings for '" + t.id + "' do not match its minutia count");
        p.emb = std::move(*embeddings);
    } else if (emb.mode == EmbeddingMode::Synthetic) {
        p.emb = build_synthetic_embeddings(t, emb);
    } else {
        throw Error("embedding mode is 'file' but no embeddings were given for '" + t.id + "'");
    }
    p.tmpl = std::move(t);
    return p;
}

class Gallery
{
public:
    explicit Gallery(CylinderConfig cyl = {}, EmbeddingConfig emb = {})
        : cyl_(cyl)
        , emb_(emb)
    {
        cyl_.validate();
        emb_.validate();
    }

    void enroll(MinutiaeTemplate t, std::optional<EmbeddingSet> embeddings = std::nullopt)
    {
        if (index_.contains(t.id))
            throw Error("gallery already contains id '" + t.id + "'");
        auto p = make_probe(std::move(t), cyl_, emb_, std::move(embeddings));
        index_.emplace(p.tmpl.id, entries_.size());
        entries_.push_back(std::move(p));
    }

    /// Enrolls many templates, building descriptors in parallel.
    void enroll_all(std::vector<MinutiaeTemplate> ts)
    {
        std::unordered_map<std::string, int> seen;
        for (const auto& t : ts)
            if (index_.contains(t.id) || seen[t.id]++)
                throw Error("gallery already contains id '" + t.id + "'");
        std::vector<Probe> built(ts.size());
        parallel_for(ts.size(), [&](std::size_t i) { built[i] = make_probe(ts[i], cyl_, emb_); });
        for (auto& p : built) {
            index_.emplace(p.tmpl.id, entries_.size());
            entries_.push_back(std::move(p));
        }
    }

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<Probe>& entries() const noexcept { return entries_; }
    const Probe* find(const std::string& id) const
    {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    const CylinderConfig& cylinder_config() const noexcept { return cyl_; }
    const EmbeddingConfig& embedding_config() const noexcept { return emb_; }

    Probe make_query(MinutiaeTemplate t, std::optional<EmbeddingSet> embeddings = std::nullopt) const
    {
        return make_probe(std::move(t), cyl_, emb_, std::move(embeddings));
    }

private:
    CylinderConfig cyl_;
    EmbeddingConfig emb_;
    std::vector<Probe> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct Candidate
{
    std::string gallery_id;
    double score = 0.0;
    double raw_sum = 0.0;
    std::size_t n_pairs_used = 0;
};

struct IdentificationResult
{
    std::string query_id;
    Matcher matcher = Matcher::Mcc;
    std::vector<Candidate> candidates; ///< best first, ties by id ascending
    std::optional<std::size_t> rank_of_mate;
};

namespace detail {

inline IdentificationResult rank_candidates(std::string query_id, Matcher matcher,
                                            std::vector<Candidate> cands,
                                            const std::optional<std::string>& mate_id)
{
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score)
            return a.score > b.score;
        return a.gallery_id < b.gallery_id;
    });
    IdentificationResult r{std::move(query_id), matcher, std::move(cands), std::nullopt};
    if (mate_id) {
        for (std::size_t i = 0; i < r.candidates.size(); ++i)
            if (r.candidates[i].gallery_id == *mate_id) {
                r.rank_of_mate = i + 1;
                break;
            }
    }
    return r;
}

} // namespace detail

/// Scores the query against every gallery entry with all four matchers,
/// sharing the channel matrices. Results are indexed like kAllMatchers.
inline std::array<IdentificationResult, 4>
identify_all(const Gallery& gallery, const Probe& query, const FusionConfig& cfg,
             const std::optional<std::string>& mate_id = std::nullopt, unsigned threads = 0)
{
    cfg.validate();
    if (gallery.empty())
        throw Error("identify: gallery is empty");
    const auto& entries = gallery.entries();
    std::array<std::vector<Candidate>, 4> per(
        {std::vector<Candidate>(entries.size()), std::vector<Candidate>(entries.size()),
         std::vector<Candidate>(entries.size()), std::vector<Candidate>(entries.size())});
    parallel_for(
        entries.size(),
        [&](std::size_t g) {
            const Probe& e = entries[g];
            const auto mats = channel_matrices(query.tmpl, e.tmpl, query.mcc, e.mcc, query.emb,
                                               e.emb, cfg);
            for (std::size_t m = 0; m < 4; ++m) {
                const auto r = match_matrices(kAllMatchers[m], mats, query.tmpl, e.tmpl, cfg);
                per[m][g] = {e.tmpl.id, r.score, r.raw_sum, r.n_pairs_used};
            }
        },
        threads);
    std::array<IdentificationResult, 4> out;
    for (std::size_t m = 0; m < 4; ++m)
        out[m] = detail::rank_candidates(query.tmpl.id, kAllMatchers[m], std::move(per[m]),
                                         mate_id);
    return out;
}

inline IdentificationResult identify(const Gallery& gallery, const Probe& query, Matcher matcher,
                                     const FusionConfig& cfg,
                                     const std::optional<std::string>& mate_id = std::nullopt,
                                     unsigned threads = 0)
{
    cfg.validate();
    if (gallery.empty())
        throw Error("identify: gallery is empty");
    const auto& entries = gallery.entries();
    std::vector<Candidate> cands(entries.size());
    parallel_for(
        entries.size(),
        [&](std::size_t g) {
            const Probe& e = entries[g];
            const auto mats = channel_matrices(query.tmpl, e.tmpl, query.mcc, e.mcc, query.emb,
                                               e.emb, cfg);
            const auto r = match_matrices(matcher, mats, query.tmpl, e.tmpl, cfg);
            cands[g] = {e.tmpl.id, r.score, r.raw_sum, r.n_pairs_used};
        },
        threads);
    return detail::rank_candidates(query.tmpl.id, matcher, std::move(cands), mate_id);
}

/// accuracies[k-1] = fraction of queries whose mate is ranked k or better.
struct CmcCurve
{
    std::vector<double> accuracies;

    std::size_t max_rank() const noexcept { return accuracies.size(); }
    /// Accuracy at rank k, 1-based.
    double at(std::size_t k) const { return accuracies.at(k - 1); }
};

/// CMC from per-query mate ranks; a missing rank is a miss at every k.
inline CmcCurve cmc_from_ranks(const std::vector<std::optional<std::size_t>>& ranks, std::size_t k)
{
    if (ranks.empty())
        throw Error("cmc: no results");
    CmcCurve c;
    c.accuracies.assign(k, 0.0);
    for (std::size_t i = 1; i <= k; ++i) {
        std::size_t hits = 0;
        for (const auto& r : ranks)
            if (r && *r <= i)
                ++hits;
        c.accuracies[i - 1] = static_cast<double>(hits) / static_cast<double>(ranks.size());
    }
    return c;
}

inline CmcCurve cmc(const std::vector<IdentificationResult>& results, std::size_t k)
{
    std::vector<std::optional<std::size_t>> ranks;
    ranks.reserve(results.size());
    for (const auto& r : results)
        ranks.push_back(r.rank_of_mate);
    return cmc_from_ranks(ranks, k);
}

/// CMC of the per-query minimum of the two channels' mate ranks.
inline CmcCurve rank_level_cmc(const std::vector<IdentificationResult>& results_mcc,
                               const std::vector<IdentificationResult>& results_emb,
                               std::size_t k)
{
    std::map<std::string, std::optional<std::size_t>> a, b;
    for (const auto& r : results_mcc)
        a[r.query_id] = r.rank_of_mate;
    for (const auto& r : results_emb)
        b[r.query_id] = r.rank_of_mate;
    if (a.size() != results_mcc.size() || b.size() != results_emb.size())
        throw Error("rank_level_cmc: duplicate query ids");

    std::map<std::string, std::size_t> ranked_a, ranked_b;
    for (const auto& [q, r] : a) {
        if (!b.contains(q))
            throw Error("rank_level_cmc: query '" + q + "' missing from the second result list");
        if (r)
            ranked_a[q] = *r;
        if (b.at(q))
            ranked_b[q] = *b.at(q);
    }
    if (a.size() != b.size())
        throw Error("rank_level_cmc: result lists cover different queries");

    // queries ranked by both channels go through fuse_ranks, the rest keep
    // whichever rank exists
    std::map<std::string, std::size_t> both_a, both_b;
    for (const auto& [q, r] : ranked_a)
        if (ranked_b.contains(q)) {
            both_a[q] = r;
            both_b[q] = ranked_b[q];
        }
    const auto fused_both = fuse_ranks(both_a, both_b);

    std::vector<std::optional<std::size_t>> fused;
    for (const auto& [q, r] : a) {
        if (auto it = fused_both.find(q); it != fused_both.end())
            fused.push_back(it->second);
        else if (r)
            fused.push_back(*r);
        else
            fused.push_back(b.at(q));
    }
    return cmc_from_ranks(fused, k);
}

inline void write_results(const std::vector<IdentificationResult>& results,
                          const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write results file: " + path.string());
    out << "query_id,rank,gallery_id,score,channel\n";
    for (const auto& r : results)
        for (std::size_t i = 0; i < r.candidates.size(); ++i)
            out << r.query_id << ',' << i + 1 << ',' << r.candidates[i].gallery_id << ','
                << detail::format_fixed6(r.candidates[i].score) << ',' << to_string(r.matcher)
                << '\n';
    if (!out)
        throw IoError("write failed: " + path.string());
}

inline void write_cmc(const CmcCurve& curve, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write CMC file: " + path.string());
    out << "k,accuracy\n";
    for (std::size_t k = 1; k <= curve.max_rank(); ++k)
        out << k << ',' << detail::format_fixed6(curve.at(k)) << '\n';
    if (!out)
        throw IoError("write failed: " + path.string());
}

} // namespace latfuse
