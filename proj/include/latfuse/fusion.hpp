#pragma once

// Single-channel matching and the three ways of combining the cylinder (MCC)
// and embedding (EMB) channels:
//
//   feature level  select pairs from each channel's matrix, merge the two
//                  pair lists, relax the union
//   score level    select pairs from w1 * S_mcc + w2 * S_emb, relax
//   rank level     per query, the better of the two gallery ranks
//
// Only the MCC matrix is direction gated.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "descriptor.hpp"
#include "error.hpp"
#include "minutia.hpp"
#include "pairing.hpp"
#include "relaxation.hpp"

namespace latfuse {

enum class Matcher { Mcc, Emb, FeatureFusion, ScoreFusion };

inline constexpr Matcher kAllMatchers[] = {Matcher::Mcc, Matcher::Emb, Matcher::FeatureFusion,
                                           Matcher::ScoreFusion};

inline std::string_view to_string(Matcher m)
{
    switch (m) {
    case Matcher::Mcc:
        return "mcc";
    case Matcher::Emb:
        return "emb";
    case Matcher::FeatureFusion:
        return "feature";
    case Matcher::ScoreFusion:
        return "score";
    }
    return "?";
}

inline Matcher parse_matcher(std::string_view s)
{
    for (auto m : kAllMatchers)
        if (to_string(m) == s)
            return m;
    throw Error("unknown matcher '" + std::string(s) + "' (expected mcc, emb, feature or score)");
}

struct FusionConfig
{
    double w1 = 0.5;
    double w2 = 0.5;
    double delta_theta = kPi / 4.0;
    /// gate the MCC matrix on minutia direction (the embedding matrix never is)
    bool gate_mcc = true;
    RelaxationParams relaxation;

    void validate() const
    {
        if (!(w1 >= 0.0 && w1 <= 1.0 && w2 >= 0.0 && w2 <= 1.0) || !(w1 + w2 > 0.0))
            throw Error("fusion weights must lie in [0,1] with w1 + w2 > 0");
        if (!(delta_theta >= 0.0))
            throw Error("delta_theta must be non-negative");
        relaxation.validate();
    }
};

struct MatchResult
{
    std::string query_id;
    std::string gallery_id;
    double score = 0.0;
    double raw_sum = 0.0;
    std::size_t n_pairs_used = 0;
    Matcher channel = Matcher::Mcc;
    std::vector<RelaxedPair> top_pairs;
};

/// LSA output merged with another: a (row, col) present in both keeps the
/// larger score and a merged source tag. Result is in (row, col) order.
inline PairSet union_pairs(const PairSet& a, const PairSet& b)
{
    std::map<std::pair<std::size_t, std::size_t>, MinutiaPair> merged;
    for (const auto* set : {&a, &b})
        for (const auto& p : *set) {
            auto [it, inserted] = merged.try_emplace({p.row, p.col}, p);
            if (!inserted) {
                it->second.score = std::max(it->second.score, p.score);
                it->second.source = merge_sources(it->second.source, p.source);
            }
        }
    PairSet out;
    out.reserve(merged.size());
    for (auto& [key, p] : merged)
        out.push_back(p);
    return out;
}

/// Relaxes `pairs` and scores the top n_p of them.
inline MatchResult score_pairs(const PairSet& pairs, const MinutiaeTemplate& ta,
                               const MinutiaeTemplate& tb, const FusionConfig& cfg,
                               Matcher channel)
{
    MatchResult r;
    r.query_id = ta.id;
    r.gallery_id = tb.id;
    r.channel = channel;
    const std::size_t n_p = compute_n_p(ta.size(), tb.size());
    if (pairs.empty() || n_p == 0)
        return r;
    const auto relaxed = relax(pairs, ta, tb, cfg.relaxation);
    auto scored = match_score(relaxed, n_p);
    r.score = scored.score;
    r.raw_sum = scored.raw_sum;
    r.n_pairs_used = scored.top.size();
    r.top_pairs = std::move(scored.top);
    return r;
}

/// The two channel matrices of one template comparison.
struct ChannelMatrices
{
    SimilarityMatrix mcc;
    SimilarityMatrix emb;
};

inline void check_descriptors(const MinutiaeTemplate& t, const DescriptorSet& d)
{
    if (d.size() != t.size())
        throw Error("descriptor set of '" + t.id + "' has " + std::to_string(d.size()) +
                    " entries for " + std::to_string(t.size()) + " minutiae");
}

inline ChannelMatrices channel_matrices(const MinutiaeTemplate& ta, const MinutiaeTemplate& tb,
                                        const DescriptorSet& mcc_a, const DescriptorSet& mcc_b,
                                        const EmbeddingSet& emb_a, const EmbeddingSet& emb_b,
                                        const FusionConfig& cfg)
{
    check_descriptors(ta, mcc_a);
    check_descriptors(tb, mcc_b);
    check_descriptors(ta, emb_a);
    check_descriptors(tb, emb_b);
    return {cfg.gate_mcc ? sim_score(mcc_a, mcc_b, ta, tb, cfg.delta_theta)
                         : sim_score(mcc_a, mcc_b),
            sim_score(emb_a, emb_b)};
}

/// Weighted sum of the two channel matrices. A gated entry contributes 0 for its channel; the
/// fused entry is gated only when every channel with a non-zero weight gates
/// it, so a zero-weight channel has no influence at all.
inline SimilarityMatrix fuse_matrices(const SimilarityMatrix& mcc, const SimilarityMatrix& emb,
                                      double w1, double w2)
{
    if (mcc.rows() != emb.rows() || mcc.cols() != emb.cols())
        throw Error("fuse_matrices: shape mismatch");
    SimilarityMatrix out(mcc.rows(), mcc.cols());
    for (std::size_t r = 0; r < mcc.rows(); ++r)
        for (std::size_t c = 0; c < mcc.cols(); ++c) {
            const bool g1 = mcc.gated(r, c), g2 = emb.gated(r, c);
            const bool gated = (w1 > 0.0 ? g1 : true) && (w2 > 0.0 ? g2 : true);
            if (gated)
                continue;
            out(r, c) = w1 * (g1 ? 0.0 : mcc(r, c)) + w2 * (g2 ? 0.0 : emb(r, c));
        }
    return out;
}

/// Runs one matcher on precomputed channel matrices.
inline MatchResult match_matrices(Matcher matcher, const ChannelMatrices& m,
                                  const MinutiaeTemplate& ta, const MinutiaeTemplate& tb,
                                  const FusionConfig& cfg)
{
    const std::size_t n_r = compute_n_r(ta.size(), tb.size());
    switch (matcher) {
    case Matcher::Mcc:
        return score_pairs(lsa_select(m.mcc, n_r, PairSource::Mcc), ta, tb, cfg, matcher);
    case Matcher::Emb:
        return score_pairs(lsa_select(m.emb, n_r, PairSource::Emb), ta, tb, cfg, matcher);
    case Matcher::FeatureFusion:
        return score_pairs(union_pairs(lsa_select(m.mcc, n_r, PairSource::Mcc),
                                       lsa_select(m.emb, n_r, PairSource::Emb)),
                           ta, tb, cfg, matcher);
    case Matcher::ScoreFusion:
        return score_pairs(lsa_select(fuse_matrices(m.mcc, m.emb, cfg.w1, cfg.w2), n_r,
                                      PairSource::Both),
                           ta, tb, cfg, matcher);
    }
    throw Error("unknown matcher");
}

/// One channel end to end. The direction gate (and the MCC channel tag)
/// applies when `gate_with_templates` is set; otherwise the matrix is
/// ungated and the result is tagged as the embedding channel.
inline MatchResult match_single(const MinutiaeTemplate& ta, const MinutiaeTemplate& tb,
                                const DescriptorSet& da, const DescriptorSet& db,
                                bool gate_with_templates, const FusionConfig& cfg = {})
{
    cfg.validate();
    check_descriptors(ta, da);
    check_descriptors(tb, db);
    const auto s = gate_with_templates ? sim_score(da, db, ta, tb, cfg.delta_theta)
                                       : sim_score(da, db);
    const Matcher channel = gate_with_templates ? Matcher::Mcc : Matcher::Emb;
    const auto source = gate_with_templates ? PairSource::Mcc : PairSource::Emb;
    return score_pairs(lsa_select(s, compute_n_r(ta.size(), tb.size()), source), ta, tb, cfg,
                       channel);
}

inline MatchResult match_feature_fusion(const MinutiaeTemplate& ta, const MinutiaeTemplate& tb,
                                        const DescriptorSet& mcc_a, const DescriptorSet& mcc_b,
                                        const EmbeddingSet& emb_a, const EmbeddingSet& emb_b,
                                        const FusionConfig& cfg = {})
{
    cfg.validate();
    return match_matrices(Matcher::FeatureFusion,
                          channel_matrices(ta, tb, mcc_a, mcc_b, emb_a, emb_b, cfg), ta, tb, cfg);
}

inline MatchResult match_score_fusion(const MinutiaeTemplate& ta, const MinutiaeTemplate& tb,
                                      const DescriptorSet& mcc_a, const DescriptorSet& mcc_b,
                                      const EmbeddingSet& emb_a, const EmbeddingSet& emb_b,
                                      const FusionConfig& cfg = {})
{
    cfg.validate();
    return match_matrices(Matcher::ScoreFusion,
                          channel_matrices(ta, tb, mcc_a, mcc_b, emb_a, emb_b, cfg), ta, tb, cfg);
}

/// Rank-level fusion: the better (smaller) of the two ranks per query.
/// Both maps must cover exactly the same queries.
inline std::map<std::string, std::size_t>
fuse_ranks(const std::map<std::string, std::size_t>& ranks_mcc,
           const std::map<std::string, std::size_t>& ranks_emb)
{
    std::map<std::string, std::size_t> out;
    for (const auto& [q, r] : ranks_mcc) {
        auto it = ranks_emb.find(q);
        if (it == ranks_emb.end())
            throw Error("fuse_ranks: query '" + q + "' missing from the embedding ranks");
        if (r == 0 || it->second == 0)
            throw Error("fuse_ranks: ranks start at 1");
        out[q] = std::min(r, it->second);
    }
    for (const auto& [q, r] : ranks_emb)
        if (!ranks_mcc.contains(q))
            throw Error("fuse_ranks: query '" + q + "' missing from the MCC ranks");
    return out;
}

} // namespace latfuse
