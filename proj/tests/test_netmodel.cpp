#include "oracles.hpp"
#include "surb/netmodel.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace surb;

TEST(NetModel, LinkIndexingIsDenseAndOrdered) {
    for (std::size_t n = 2; n <= 5; ++n) {
        for (std::size_t k = 0; k < link_count(n); ++k) {
            const LinkId l = link_at(k, n);
            EXPECT_NE(l.src, l.dst);
            EXPECT_EQ(link_index(l, n), k);
            if (k > 0) {
                EXPECT_LT(link_at(k - 1, n), l);
            }
        }
    }
}

TEST(NetModel, LinkStateTakesOldestCopy) {
    LinkState l;
    l.push(1);
    l.push(0);
    l.push(1);
    EXPECT_EQ(l.count(1), 2U);
    EXPECT_TRUE(l.take(1));
    EXPECT_EQ(l.pending, (std::vector<Symbol>{0, 1}));
    EXPECT_FALSE(l.take(2));
    EXPECT_FALSE(l.full());
    l.capacity = 2;
    EXPECT_TRUE(l.full());
}

TEST(NetModel, MatrixOfCountsKindsPerLink) {
    std::vector<LinkState> links(2);
    links[0].assign({0, 1, 1});
    links[1].assign({1});
    const NetworkMatrix m = matrix_of(links, 2);
    EXPECT_EQ(m.at(0, 0), 1);
    EXPECT_EQ(m.at(1, 0), 2);
    EXPECT_EQ(m.at(1, 1), 1);
    EXPECT_EQ(m.total(), 4);
    EXPECT_THROW(matrix_of(links, 1), DimensionMismatch);
}

TEST(NetModel, OrderAndDelta) {
    auto a = NetworkMatrix::from_flat(1, 2, {1, 2});
    auto b = NetworkMatrix::from_flat(1, 2, {1, 3});
    auto c = NetworkMatrix::from_flat(1, 2, {2, 1});
    EXPECT_TRUE(le(a, b));
    EXPECT_TRUE(le(a, a));
    EXPECT_FALSE(le(b, a));
    EXPECT_FALSE(le(a, c));
    EXPECT_FALSE(le(c, a));
    EXPECT_EQ(delta(a, c), (SignedGrid{1, -1}));
    EXPECT_THROW(le(a, NetworkMatrix(2, 2)), DimensionMismatch);
    EXPECT_THROW(delta(a, NetworkMatrix(1, 3)), DimensionMismatch);
    EXPECT_THROW(NetworkMatrix::from_flat(2, 2, {1}), DimensionMismatch);
}

TEST(NetModel, OrderIsPartialOnRandomCorpus) {
    std::mt19937_64 rng(3);
    std::vector<NetworkMatrix> ms;
    for (int k = 0; k < 40; ++k) {
        ms.push_back(oracle::random_matrix(rng, 2, 2, 2));
    }
    for (const auto& a : ms) {
        EXPECT_TRUE(le(a, a));
        for (const auto& b : ms) {
            if (le(a, b) && le(b, a)) {
                EXPECT_EQ(a, b);
            }
            for (const auto& c : ms) {
                if (le(a, b) && le(b, c)) {
                    EXPECT_TRUE(le(a, c));
                }
            }
        }
    }
}

TEST(NetModel, LongestChainExamples) {
    std::vector<NetworkMatrix> inc;
    for (int k = 0; k < 5; ++k) {
        inc.push_back(NetworkMatrix::from_flat(1, 2, {k, k}));
    }
    EXPECT_EQ(longest_chain(std::span<const NetworkMatrix>(inc)), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
    std::vector<NetworkMatrix> anti{NetworkMatrix::from_flat(1, 2, {1, 0}), NetworkMatrix::from_flat(1, 2, {0, 1})};
    EXPECT_EQ(longest_chain(std::span<const NetworkMatrix>(anti)).size(), 1U);
    EXPECT_TRUE(longest_chain(std::span<const NetworkMatrix>{}).empty());
}

TEST(NetModel, LongestChainMatchesExhaustiveSearch) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<NetworkMatrix> ms;
        const std::size_t len = 1 + rng() % 12;
        for (std::size_t k = 0; k < len; ++k) {
            ms.push_back(oracle::random_matrix(rng, 2, 2, 3));
        }
        const auto chain = longest_chain(std::span<const NetworkMatrix>(ms));
        ASSERT_EQ(chain.size(), oracle::longest_chain_length(ms));
        for (std::size_t k = 1; k < chain.size(); ++k) {
            ASSERT_LT(chain[k - 1], chain[k]);
            ASSERT_TRUE(le(ms[chain[k - 1]], ms[chain[k]]));
        }
    }
}

TEST(NetModel, AntichainsAreBoundedByIncomparableVectors) {
    // Largest antichain in {0..B}^g: exhaustive over all subsets for g*B small.
    for (std::size_t g = 1; g <= 4; ++g) {
        for (std::int64_t bound = 1; bound <= 2; ++bound) {
            std::vector<NetworkMatrix> all;
            std::size_t total = 1;
            for (std::size_t k = 0; k < g; ++k) {
                total *= static_cast<std::size_t>(bound + 1);
            }
            for (std::size_t code = 0; code < total; ++code) {
                std::vector<std::int64_t> v(g);
                std::size_t c = code;
                for (auto& x : v) {
                    x = static_cast<std::int64_t>(c % static_cast<std::size_t>(bound + 1));
                    c /= static_cast<std::size_t>(bound + 1);
                }
                all.push_back(NetworkMatrix::from_flat(1, g, v));
            }
            if (all.size() > 16) {
                continue;
            }
            std::size_t widest = 0;
            for (std::uint32_t mask = 1; mask < (1U << all.size()); ++mask) {
                bool anti = true;
                std::size_t size = 0;
                for (std::size_t a = 0; a < all.size() && anti; ++a) {
                    if (!(mask & (1U << a))) {
                        continue;
                    }
                    ++size;
                    for (std::size_t b = a + 1; b < all.size(); ++b) {
                        if ((mask & (1U << b)) && (le(all[a], all[b]) || le(all[b], all[a]))) {
                            anti = false;
                            break;
                        }
                    }
                }
                if (anti) {
                    widest = std::max(widest, size);
                }
            }
            // Any sequence longer than `widest` therefore contains a comparable pair.
            std::mt19937_64 rng(g * 10 + static_cast<std::size_t>(bound));
            for (int trial = 0; trial < 50; ++trial) {
                std::vector<NetworkMatrix> seq;
                for (std::size_t k = 0; k <= widest; ++k) {
                    seq.push_back(all[rng() % all.size()]);
                }
                bool comparable = false;
                for (std::size_t a = 0; a < seq.size(); ++a) {
                    for (std::size_t b = a + 1; b < seq.size(); ++b) {
                        comparable = comparable || le(seq[a], seq[b]) || le(seq[b], seq[a]);
                    }
                }
                EXPECT_TRUE(comparable);
            }
        }
    }
}
