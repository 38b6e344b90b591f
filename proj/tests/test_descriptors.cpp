#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include <latfuse/descriptor.hpp>
#include <latfuse/embedding.hpp>
#include <latfuse/mcc.hpp>

#include "oracles.hpp"

using namespace latfuse;
namespace fs = std::filesystem;

namespace {

MinutiaeTemplate single()
{
    MinutiaeTemplate t;
    t.id = "one";
    t.minutiae.emplace_back(100, 100, 1.0);
    return t;
}

double min_cosine(const DescriptorSet& a, const DescriptorSet& b)
{
    double worst = 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.valid(i), b.valid(i)) << "validity differs at " << i;
        if (a.valid(i))
            worst = std::min(worst, cosine_similarity(a[i], b[i]));
    }
    return worst;
}

fs::path temp_file(const std::string& name)
{
    return fs::temp_directory_path() / ("latfuse_" + name);
}

} // namespace

TEST(Mcc, DefaultDimension)
{
    EXPECT_EQ(CylinderConfig{}.dimension(), 1536u);
}

TEST(Mcc, SingleMinutiaIsInvalidAndZero)
{
    const auto c = build_cylinder(single(), 0, {});
    EXPECT_FALSE(c.valid);
    for (double v : c.values)
        EXPECT_EQ(v, 0.0);
}

TEST(Mcc, IndexOutOfRange)
{
    EXPECT_THROW(build_cylinder(single(), 1, {}), Error);
}

TEST(Mcc, SetShapes)
{
    std::mt19937_64 rng(1);
    const auto t = oracle::random_template(rng, 10, 150);
    const auto set = build_mcc_set(t);
    EXPECT_EQ(set.size(), 10u);
    EXPECT_EQ(set.dim(), 1536u);
    EXPECT_TRUE(build_mcc_set(MinutiaeTemplate{}).empty());
}

TEST(Mcc, ValuesNonNegative)
{
    std::mt19937_64 rng(2);
    const auto set = build_mcc_set(oracle::random_template(rng, 30));
    for (std::size_t i = 0; i < set.size(); ++i)
        for (double v : set[i]) {
            EXPECT_GE(v, 0.0);
            EXPECT_TRUE(std::isfinite(v));
        }
}

TEST(Mcc, TranslationInvariance)
{
    std::mt19937_64 rng(3);
    const auto t = oracle::random_template(rng, 25);
    const auto moved = oracle::rotate(t, 0.0, 0, 0, 37.25, -81.5);
    const auto a = build_mcc_set(t), b = build_mcc_set(moved);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < a.dim(); ++k)
            ASSERT_NEAR(a[i][k], b[i][k], 1e-9);
}

TEST(Mcc, RotationInvariance)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int trial = 0; trial < 5; ++trial) {
        const auto t = oracle::random_template(rng, 30);
        const double alpha = ang(rng);
        const auto moved = oracle::rotate(t, alpha, 150, 150, 20, -10);
        const auto a = build_mcc_set(t), b = build_mcc_set(moved);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t k = 0; k < a.dim(); ++k)
                ASSERT_NEAR(a[i][k], b[i][k], 1e-6) << "alpha=" << alpha;
        EXPECT_GE(min_cosine(a, b), 1.0 - 1e-6);
    }
}

TEST(Mcc, FarMinutiaDoesNotChangeCylinder)
{
    std::mt19937_64 rng(5);
    auto t = oracle::random_template(rng, 15, 100);
    const CylinderConfig cfg;
    const auto before = build_cylinder(t, 0, cfg);
    // farther than R + 3 sigma from every cell centre (all within R of m_0)
    t.minutiae.emplace_back(t[0].x + 2 * cfg.radius + 3 * cfg.sigma_s + 1, t[0].y, 0.3);
    const auto after = build_cylinder(t, 0, cfg);
    for (std::size_t k = 0; k < before.values.size(); ++k)
        ASSERT_EQ(before.values[k], after.values[k]);
}

TEST(Mcc, AddingNeighbourNeverDecreases)
{
    std::mt19937_64 rng(6);
    auto t = oracle::random_template(rng, 12, 120);
    const auto before = build_cylinder(t, 3, {});
    t.minutiae.emplace_back(t[3].x + 15, t[3].y - 10, 2.0);
    const auto after = build_cylinder(t, 3, {});
    for (std::size_t k = 0; k < before.values.size(); ++k)
        ASSERT_GE(after.values[k], before.values[k]);
}

TEST(Mcc, Deterministic)
{
    std::mt19937_64 rng(8);
    const auto t = oracle::random_template(rng, 20);
    const auto a = build_mcc_set(t), b = build_mcc_set(t);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_TRUE(std::equal(a[i].begin(), a[i].end(), b[i].begin()));
}

TEST(Mcc, CellsOutsideRadiusAreZero)
{
    std::mt19937_64 rng(9);
    const CylinderConfig cfg;
    const auto c = build_cylinder(oracle::random_template(rng, 40, 120), 0, cfg);
    const double ds = 2 * cfg.radius / cfg.grid;
    for (int k = 0; k < cfg.sections; ++k)
        for (int row = 0; row < cfg.grid; ++row)
            for (int col = 0; col < cfg.grid; ++col) {
                const double u = (col + 0.5) * ds - cfg.radius, v = (row + 0.5) * ds - cfg.radius;
                if (u * u + v * v > cfg.radius * cfg.radius)
                    ASSERT_EQ(c.values[(k * cfg.grid + row) * cfg.grid + col], 0.0);
            }
}

TEST(Mcc, ValidityNeedsNeighbours)
{
    MinutiaeTemplate t;
    t.minutiae = {{100, 100, 0}, {110, 100, 0.2}};
    CylinderConfig cfg;
    EXPECT_FALSE(build_cylinder(t, 0, cfg).valid); // 1 neighbour < 2
    cfg.min_neighbors = 1;
    EXPECT_TRUE(build_cylinder(t, 0, cfg).valid);
}

TEST(Mcc, InvalidConfig)
{
    CylinderConfig cfg;
    cfg.grid = 1;
    EXPECT_THROW(build_mcc_set(single(), cfg), Error);
}

TEST(SyntheticEmbedding, NoNeighbourSentinel)
{
    const auto e = build_synthetic_embeddings(single());
    ASSERT_EQ(e.size(), 1u);
    EXPECT_FALSE(e.valid(0));
    EXPECT_EQ(e[0][0], 1.0);
    for (std::size_t k = 1; k < e.dim(); ++k)
        EXPECT_EQ(e[0][k], 0.0);
}

TEST(SyntheticEmbedding, UnitNormAndDimension)
{
    std::mt19937_64 rng(12);
    const auto e = build_synthetic_embeddings(oracle::random_template(rng, 40));
    EXPECT_EQ(e.dim(), 256u);
    for (std::size_t i = 0; i < e.size(); ++i)
        if (e.valid(i))
            EXPECT_NEAR(e.norm(i), 1.0, 1e-6);
}

TEST(SyntheticEmbedding, RigidInvariance)
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> ang(-kPi, kPi);
    for (int trial = 0; trial < 10; ++trial) {
        const auto t = oracle::random_template(rng, 35);
        const auto moved = oracle::rotate(t, ang(rng), 80, 200, -40, 15);
        EXPECT_GE(min_cosine(build_synthetic_embeddings(t), build_synthetic_embeddings(moved)),
                  1.0 - 1e-6);
    }
}

TEST(SyntheticEmbedding, DifferentNeighbourhoodsDiffer)
{
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> off(-60.0, 60.0), ang(0.0, kTwoPi);
    auto neighbourhood = [&] {
        MinutiaeTemplate t;
        t.minutiae.emplace_back(200, 200, 0.0);
        for (int i = 0; i < 4; ++i)
            t.minutiae.emplace_back(200 + off(rng), 200 + off(rng), ang(rng));
        return build_synthetic_embeddings(t);
    };
    const auto a = neighbourhood(), b = neighbourhood();
    EXPECT_LT(cosine_similarity(a[0], b[0]), 0.99);
}

TEST(SyntheticEmbedding, BinsMustFit)
{
    EmbeddingConfig cfg;
    cfg.dim = 100;
    EXPECT_THROW(build_synthetic_embeddings(single(), cfg), Error);
}

TEST(Cosine, Examples)
{
    const std::vector<double> v{0.3, -2.0, 5.0};
    EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-15);
    EXPECT_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
    EXPECT_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{-1, 0}), -1.0);
    EXPECT_THROW(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
    EXPECT_THROW(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 0}), Error);
}

namespace {

void write_raw(const fs::path& p, const char* magic, std::uint32_t count, std::uint32_t dim,
               const std::vector<float>& data)
{
    std::ofstream out(p, std::ios::binary);
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&count), 4); // test host is little-endian
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * 4));
}

} // namespace

TEST(EmbeddingFile, ParsesAndNormalizes)
{
    const auto p = temp_file("emb_ok.emb");
    write_raw(p, "EMB1", 2, 4, {2, 0, 0, 0, 1, 1, 1, 1});
    const auto e = load_embeddings(p, 2);
    ASSERT_EQ(e.size(), 2u);
    EXPECT_EQ(e.dim(), 4u);
    EXPECT_DOUBLE_EQ(e[0][0], 1.0);
    EXPECT_DOUBLE_EQ(e[0][1], 0.0);
    EXPECT_NEAR(e[1][2], 0.5, 1e-12);
    EXPECT_TRUE(e.valid(0) && e.valid(1));
    fs::remove(p);
}

TEST(EmbeddingFile, CountMismatchNamesBoth)
{
    const auto p = temp_file("emb_count.emb");
    write_raw(p, "EMB1", 3, 2, {1, 0, 0, 1, 1, 1});
    try {
        load_embeddings(p, 2);
        FAIL();
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find('3'), std::string::npos);
        EXPECT_NE(msg.find('2'), std::string::npos);
    }
    fs::remove(p);
}

TEST(EmbeddingFile, BadMagicAndNonFinite)
{
    const auto p = temp_file("emb_bad.emb");
    write_raw(p, "EMB2", 1, 2, {1, 0});
    EXPECT_THROW(load_embeddings(p, 1), ParseError);
    write_raw(p, "EMB1", 1, 2, {1, std::numeric_limits<float>::quiet_NaN()});
    EXPECT_THROW(load_embeddings(p, 1), ParseError);
    write_raw(p, "EMB1", 1, 2, {1});
    EXPECT_THROW(load_embeddings(p, 1), ParseError);
    fs::remove(p);
    EXPECT_THROW(load_embeddings(p, 1), IoError);
}

TEST(EmbeddingFile, RoundTrip)
{
    std::mt19937_64 rng(15);
    const auto e = build_synthetic_embeddings(oracle::random_template(rng, 25));
    const auto p = temp_file("emb_rt.emb");
    save_embeddings(e, p);
    EXPECT_EQ(fs::file_size(p), 12 + 25 * 256 * 4u);
    const auto back = load_embeddings(p, 25);
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t k = 0; k < e.dim(); ++k)
            ASSERT_NEAR(back[i][k], e[i][k], 1e-6);
    fs::remove(p);
}
