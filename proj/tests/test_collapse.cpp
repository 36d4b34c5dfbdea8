#include <doctest.h>

#include <random>

#include "support/oracles.hpp"
#include "zerosyl/agglomerative.hpp"
#include "zerosyl/error.hpp"
#include "zerosyl/tokenizer.hpp"

using namespace zerosyl;

namespace {

Codebook make_codebook(FrameMatrix c) {
    c.rowwise().normalize();
    Codebook cb;
    cb.centroids = std::move(c);
    cb.collapsed_vocab_size = static_cast<std::uint32_t>(cb.centroids.rows());
    return cb;
}

FrameMatrix random_unit(std::mt19937_64& rng, int n, int d) {
    std::normal_distribution<float> g(0.0f, 1.0f);
    FrameMatrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = g(rng);
    m.rowwise().normalize();
    return m;
}

} // namespace

TEST_CASE("three centroids: the far singleton is the silence branch") {
    FrameMatrix c(3, 2);
    c << 1.0f, 0.0f, 0.999f, 0.045f, -1.0f, 0.1f;
    CollapseInfo info;
    const Codebook out = collapse_silence(make_codebook(c), &info);
    CHECK(info.silence_branch == std::vector<std::size_t>{2});
    CHECK(out.collapsed_vocab_size == 3);
    CHECK(*out.collapse_map == std::vector<std::uint32_t>{1, 2, 0});
    CHECK_NOTHROW(out.validate());
}

TEST_CASE("equal root branches are a tie error") {
    FrameMatrix c(2, 2);
    c << 1, 0, 0, 1;
    CHECK_THROWS_AS(collapse_silence(make_codebook(c)), TieError);
}

TEST_CASE("re-collapsing is rejected") {
    FrameMatrix c(3, 2);
    c << 1.0f, 0.0f, 0.999f, 0.045f, -1.0f, 0.1f;
    const Codebook once = collapse_silence(make_codebook(c));
    CHECK_THROWS_AS(collapse_silence(once), ValidationError);
}

TEST_CASE("nearest-neighbour chain matches naive average linkage") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = std::uniform_int_distribution<int>(2, 28)(rng);
        const FrameMatrix pts = random_unit(rng, n, 4);
        std::vector<std::vector<double>> rows(n);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < 4; ++d)
                rows[i].push_back(pts(i, d));

        const Dendrogram dg = average_linkage_cosine(pts);
        const auto naive = oracle::average_linkage(rows);
        REQUIRE(dg.merges.size() == naive.heights.size());
        for (std::size_t i = 0; i < naive.heights.size(); ++i)
            CHECK(dg.merges[i].height == doctest::Approx(naive.heights[i]).epsilon(1e-5));
        CHECK(dg.merges.back().size == static_cast<std::size_t>(n));

        auto branches = dg.root_branches();
        auto expected = naive.root;
        if (branches[0].front() > branches[1].front())
            std::swap(branches[0], branches[1]);
        if (expected[0].front() > expected[1].front())
            std::swap(expected[0], expected[1]);
        CHECK(branches[0] == expected[0]);
        CHECK(branches[1] == expected[1]);
    }
}

TEST_CASE("collapse map properties on random codebooks") {
    std::mt19937_64 rng(12);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int k = std::uniform_int_distribution<int>(3, 60)(rng);
        const Codebook cb = make_codebook(random_unit(rng, k, 6));
        Codebook out;
        CollapseInfo info;
        try {
            out = collapse_silence(cb, &info);
        } catch (const TieError&) {
            continue;
        }
        ++checked;
        const auto& map = *out.collapse_map;
        CHECK(out.collapsed_vocab_size == k - info.silence_branch.size() + 1);
        CHECK(info.silence_branch.size() < info.other_branch.size());
        std::vector<int> preimages(out.collapsed_vocab_size, 0);
        std::uint32_t expect_next = 1;
        for (int raw = 0; raw < k; ++raw) {
            CHECK(map[raw] < out.collapsed_vocab_size);
            ++preimages[map[raw]];
            if (map[raw] != kSilenceId) {
                CHECK(map[raw] == expect_next); // consecutive, raw order preserved
                ++expect_next;
            }
        }
        int multi = 0;
        for (int p : preimages)
            multi += p >= 2;
        CHECK(multi == (info.silence_branch.size() >= 2 ? 1 : 0));
        CHECK_NOTHROW(out.validate());
    }
    CHECK(checked > 20);
}
