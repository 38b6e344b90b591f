// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <latfuse/benchmark.hpp>
#include <latfuse/embedding.hpp>
#include <latfuse/fusion.hpp>
#include <latfuse/mcc.hpp>
#include <latfuse/relaxation.hpp>
#include <latfuse/synthetic.hpp>
#include <latfuse/template_io.hpp>

#include "../oracles.hpp"

using namespace latfuse;
namespace fs = std::filesystem;

#ifndef LATFUSE_BASELINE
#define LATFUSE_BASELINE ""
#endif

namespace {

struct Outcome
{
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.7g", v);
    return buf;
}

fs::path scratch_dir(const std::string& name)
{
    auto d = fs::temp_directory_path() / ("latfuse_accept_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

/// Every regular file under `a` has a byte-identical twin under `b` and the
/// two trees list the same files.
bool same_tree(const fs::path& a, const fs::path& b, std::string& diff)
{
    std::vector<fs::path> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file())
            fa.push_back(fs::relative(e.path(), a));
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file())
            fb.push_back(fs::relative(e.path(), b));
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    if (fa != fb) {
        diff = "file lists differ";
        return false;
    }
    for (const auto& rel : fa)
        if (slurp(a / rel) != slurp(b / rel)) {
            diff = rel.string() + " differs";
            return false;
        }
    return true;
}

Outcome compatibility_at_zero()
{
    Outcome o;
    const Minutia a(10, 10, 0.3), b(60, 35, 2.0);
    const double got = pair_compatibility(a, a, b, b);
    const double ref = oracle::compatibility_at_zero();
    o.require(std::abs(got - 0.75392) <= 1e-4, "rho(0) = " + fmt(got));
    o.require(std::abs(ref - 0.75392) <= 1e-4, "reference = " + fmt(ref));
    o.detail = o.pass ? "rho(0)=" + fmt(got) + " reference=" + fmt(ref) : o.detail;
    return o;
}

Outcome relaxation_oracle()
{
    Outcome o;
    std::mt19937_64 rng(1002);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 24);
    const RelaxationParams p;
    double worst = 0.0;
    const int instances = 1000;
    for (int trial = 0; trial < instances; ++trial) {
        const int n = size(rng);
        std::vector<double> g0(n), flat(n * n);
        std::vector<std::vector<double>> rho(n, std::vector<double>(n));
        for (auto& g : g0)
            g = u(rng);
        for (int t = 0; t < n; ++t)
            for (int k = 0; k < n; ++k)
                flat[t * n + k] = rho[t][k] = u(rng);
        const auto got = relax_history(g0, flat, p.w_r, p.n_rel);
        const auto want = oracle::relax_reference(g0, rho, p.w_r, p.n_rel);
        for (int i = 0; i <= p.n_rel; ++i)
            for (int t = 0; t < n; ++t) {
                worst = std::max(worst, std::abs(got[i][t] - want[i][t]));
                o.require(got[i][t] >= 0.0 && got[i][t] <= 1.0,
                          "unbounded score " + fmt(got[i][t]));
            }
    }
    o.require(worst <= 1e-12, "max deviation " + fmt(worst));
    if (o.pass)
        o.detail = std::to_string(instances) + " instances, max deviation " + fmt(worst);
    return o;
}

Outcome lsa_oracle()
{
    Outcome o;
    std::mt19937_64 rng(1003);
    std::uniform_int_distribution<int> dim(1, 8), pick(0, 5), n_r(0, 12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int trials = 10000;
    for (int trial = 0; trial < trials && o.pass; ++trial) {
        const int r = dim(rng), c = dim(rng);
        SimilarityMatrix s(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) {
                const int k = pick(rng);
                if (k == 0)
                    continue; // stays gated
                s(i, j) = trial % 3 == 0 ? k / 5.0 : u(rng);
            }
        const std::size_t limit = trial % 4 == 0 ? compute_n_r(r, c) : std::size_t(n_r(rng));
        const auto got = lsa_select(s, limit);
        const auto want = oracle::greedy_rescan(s, limit);
        bool equal = got.size() == want.size();
        for (std::size_t k = 0; equal && k < got.size(); ++k)
            equal = got[k].row == std::get<0>(want[k]) && got[k].col == std::get<1>(want[k]) &&
                    got[k].score == std::get<2>(want[k]);
        o.require(equal, "mismatch on trial " + std::to_string(trial));
    }
    if (o.pass)
        o.detail = std::to_string(trials) + " trials identical";
    return o;
}

Outcome descriptor_invariance()
{
    Outcome o;
    std::mt19937_64 rng(1004);
    std::uniform_real_distribution<double> ang(-kPi, kPi), shift(-100.0, 100.0);
    std::uniform_int_distribution<int> count(10, 60);
    double worst = 1.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = oracle::random_template(rng, count(rng), 400.0);
        const auto moved = oracle::rotate(t, ang(rng), 200, 200, shift(rng), shift(rng));
        const auto check = [&](const DescriptorSet& a, const DescriptorSet& b, const char* what) {
            for (std::size_t i = 0; i < a.size(); ++i) {
                o.require(a.valid(i) == b.valid(i), std::string(what) + " validity changed");
                if (a.valid(i) && b.valid(i))
                    worst = std::min(worst, cosine_similarity(a[i], b[i]));
            }
        };
        check(build_mcc_set(t), build_mcc_set(moved), "MCC");
        check(build_synthetic_embeddings(t), build_synthetic_embeddings(moved), "embedding");
    }
    o.require(worst >= 1.0 - 1e-6, "min cosine " + fmt(worst));
    if (o.pass)
        o.detail = "100 templates, min cosine 1-" + fmt(1.0 - worst);
    return o;
}

Outcome fusion_degeneracies()
{
    Outcome o;
    std::mt19937_64 rng(1005);
    std::normal_distribution<double> pos(0, 4.0), ang(0, 0.087);
    std::uniform_real_distribution<double> rot(-0.5, 0.5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto ta = oracle::random_template(rng, 45, 400.0);
        // half the pairs are genuine (noisy partial copies), half impostors
        MinutiaeTemplate tb;
        if (trial % 2 == 0) {
            tb = oracle::rotate(ta, rot(rng), 200, 200, pos(rng) * 5, pos(rng) * 5);
            for (auto& m : tb.minutiae)
                m = Minutia(m.x + pos(rng), m.y + pos(rng), m.theta + ang(rng));
            tb.minutiae.resize(25);
        } else {
            tb = oracle::random_template(rng, 30, 400.0);
        }
        const auto ma = build_mcc_set(ta), mb = build_mcc_set(tb);
        const auto ea = build_synthetic_embeddings(ta), eb = build_synthetic_embeddings(tb);
        FusionConfig base;

        const double mcc = match_single(ta, tb, ma, mb, true, base).score;
        const double emb = match_single(ta, tb, ea, eb, false, base).score;
        FusionConfig c10 = base, c01 = base;
        c10.w1 = 1.0, c10.w2 = 0.0;
        c01.w1 = 0.0, c01.w2 = 1.0;
        const double s10 = match_score_fusion(ta, tb, ma, mb, ea, eb, c10).score;
        const double s01 = match_score_fusion(ta, tb, ma, mb, ea, eb, c01).score;
        worst = std::max({worst, std::abs(s10 - mcc), std::abs(s01 - emb)});

        const double f_no_emb =
            match_feature_fusion(ta, tb, ma, mb, ea.all_invalid(), eb.all_invalid(), base).score;
        const double f_no_mcc =
            match_feature_fusion(ta, tb, ma.all_invalid(), mb.all_invalid(), ea, eb, base).score;
        o.require(f_no_emb == mcc, "feature fusion without embeddings " + fmt(f_no_emb) +
                                       " != mcc " + fmt(mcc));
        o.require(f_no_mcc == emb, "feature fusion without cylinders " + fmt(f_no_mcc) +
                                       " != emb " + fmt(emb));
    }
    o.require(worst <= 1e-12, "score fusion deviation " + fmt(worst));
    if (o.pass)
        o.detail = "100 pairs, max score-fusion deviation " + fmt(worst);
    return o;
}

Outcome synthetic_benchmark()
{
    Outcome o;
    BenchmarkConfig cfg; // seed 42, 200 fingers, default configs
    const auto dir_a = scratch_dir("bench_a"), dir_b = scratch_dir("bench_b");
    const auto report = run_benchmark(cfg, dir_a);
    run_benchmark(cfg, dir_b);

    const double mcc = report.row("mcc").rank(1), emb = report.row("emb").rank(1);
    const double feature = report.row("feature").rank(1);
    for (const char* m : {"mcc", "emb", "feature", "score", "rank"})
        o.require(report.row(m).rank(1) >= 0.60,
                  std::string("(a) ") + m + " rank-1 " + fmt(report.row(m).rank(1)));
    o.require(feature >= std::max(mcc, emb) - 0.02 - 1e-12,
              "(b) feature rank-1 " + fmt(feature) + " below best single " +
                  fmt(std::max(mcc, emb)) + " - 2pp");
    const auto& rank = report.row("rank").curve;
    for (std::size_t k = 1; k <= rank.max_rank(); ++k)
        o.require(rank.at(k) >= report.row("mcc").curve.at(k) &&
                      rank.at(k) >= report.row("emb").curve.at(k),
                  "(c) rank-level CMC below a single channel at k=" + std::to_string(k));
    std::string diff;
    o.require(same_tree(dir_a, dir_b, diff), "(d) repeated run differs: " + diff);

    const fs::path baseline = LATFUSE_BASELINE;
    if (!baseline.empty())
        o.require(slurp(dir_a / "summary.csv") == slurp(baseline),
                  "summary.csv differs from the recorded baseline " + baseline.string());

    if (o.pass) {
        o.detail = "rank-1";
        for (const char* m : {"mcc", "emb", "feature", "score", "rank"})
            o.detail += std::string(" ") + m + "=" + fmt(100.0 * report.row(m).rank(1));
    }
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    return o;
}

Outcome exact_copy_identification()
{
    Outcome o;
    SynthConfig synth;
    synth.n_fingers = 50;
    const auto ds = make_dataset(synth, PerturbConfig::identity());
    Gallery gallery;
    gallery.enroll_all(ds.gallery);
    std::array<int, 4> hits{};
    for (const auto& q : ds.queries) {
        const auto all = identify_all(gallery, gallery.make_query(q), {}, ds.truth.at(q.id));
        for (std::size_t m = 0; m < 4; ++m)
            hits[m] += all[m].rank_of_mate == std::size_t(1);
    }
    for (std::size_t m = 0; m < 4; ++m)
        o.require(hits[m] == 50, std::string(to_string(kAllMatchers[m])) + " rank-1 " +
                                     std::to_string(hits[m]) + "/50");
    if (o.pass)
        o.detail = "50/50 rank-1 for mcc, emb, feature, score";
    return o;
}

Outcome format_round_trips()
{
    Outcome o;
    const auto dir = scratch_dir("formats");
    std::mt19937_64 rng(1008);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto t = oracle::random_template(rng, 5 + trial * 3, 500.0);
        t.id = "rt" + std::to_string(trial);
        for (auto& m : t.minutiae)
            m.quality = std::uniform_real_distribution<double>(0, 1)(rng);
        save_template(t, dir / (t.id + ".mnt"));
        const auto back = load_template(dir / (t.id + ".mnt"));
        o.require(back.size() == t.size() && back.id == t.id, "template shape changed");
        for (std::size_t i = 0; i < std::min(back.size(), t.size()); ++i)
            worst = std::max({worst, std::abs(back[i].x - t[i].x), std::abs(back[i].y - t[i].y),
                              std::abs(back[i].theta - t[i].theta),
                              std::abs(back[i].quality - t[i].quality)});

        const auto e = build_synthetic_embeddings(t);
        save_embeddings(e, dir / (t.id + ".emb"));
        const auto eb = load_embeddings(dir / (t.id + ".emb"), t.size(), t.id);
        o.require(eb.size() == e.size() && eb.dim() == e.dim(), "embedding shape changed");
        for (std::size_t i = 0; i < std::min(e.size(), eb.size()); ++i)
            for (std::size_t k = 0; k < e.dim(); ++k)
                worst = std::max(worst, std::abs(e[i][k] - eb[i][k]));
    }
    o.require(worst <= 1e-6, "round-trip deviation " + fmt(worst));

    SynthConfig synth;
    synth.n_fingers = 12;
    const auto ds = make_dataset(synth, {});
    auto csvs = [&](const fs::path& out) {
        Gallery g;
        g.enroll_all(ds.gallery);
        std::vector<IdentificationResult> results;
        for (const auto& q : ds.queries)
            results.push_back(
                identify(g, g.make_query(q), Matcher::FeatureFusion, {}, ds.truth.at(q.id)));
        write_results(results, out / "results.csv");
        write_cmc(cmc(results, 10), out / "cmc.csv");
    };
    fs::create_directories(dir / "a");
    fs::create_directories(dir / "b");
    csvs(dir / "a");
    csvs(dir / "b");
    std::string diff;
    o.require(same_tree(dir / "a", dir / "b", diff), "CSV output not byte-stable: " + diff);
    if (o.pass)
        o.detail = "max field deviation " + fmt(worst) + ", CSVs byte-identical";
    fs::remove_all(dir);
    return o;
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"compatibility at zero discrepancy", compatibility_at_zero},
        {"relaxation matches reference", relaxation_oracle},
        {"LSA matches re-scan oracle", lsa_oracle},
        {"descriptor rigid invariance", descriptor_invariance},
        {"fusion degeneracies", fusion_degeneracies},
        {"seeded synthetic benchmark", synthetic_benchmark},
        {"exact-copy identification", exact_copy_identification},
        {"format round-trips", format_round_trips},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %zu %s (%.1fs) %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    secs, o.detail.c_str());
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
