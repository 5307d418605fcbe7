#include "oracles.hpp"
#include "surb/sequences.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace surb;

namespace {
Seq S(const char* s) { return seq_from_string(s); }
} // namespace

TEST(Sequences, ParseAndPrint) {
    EXPECT_EQ(seq_to_string(S("0110")), "0110");
    EXPECT_TRUE(S("").empty());
    EXPECT_THROW(S("01x"), PreconditionError);
}

TEST(Sequences, Suffix) {
    EXPECT_TRUE(is_suffix(S("11"), S("0011")));
    EXPECT_TRUE(is_suffix(S(""), S("01")));
    EXPECT_FALSE(is_suffix(S("10"), S("0011")));
    EXPECT_FALSE(is_suffix(S("0011"), S("11")));
}

TEST(Sequences, RepeatAndConcat) {
    EXPECT_EQ(repeat(S("01"), 3), S("010101"));
    EXPECT_TRUE(repeat(S("01"), 0).empty());
    EXPECT_EQ(concat(S("0"), S("11")), S("011"));
}

TEST(Sequences, CommonDividerExamples) {
    auto w = common_divider(S("0101"), S("010101"));
    ASSERT_TRUE(w);
    EXPECT_EQ(w->divider, S("01"));
    EXPECT_EQ(w->n, 2U);
    EXPECT_EQ(w->r, 3U);
    EXPECT_FALSE(common_divider(S("01"), S("011")));
    auto unit = common_divider(S("0"), S("000"));
    ASSERT_TRUE(unit);
    EXPECT_EQ(unit->divider, S("0"));
}

TEST(Sequences, CommonDividerPreconditions) {
    EXPECT_THROW(common_divider(S(""), S("01")), PreconditionError);
    EXPECT_THROW(common_divider(S("01"), S("01")), PreconditionError);
    EXPECT_THROW(common_divider(S("011"), S("01")), PreconditionError);
    EXPECT_THROW(swap_equal(S("01"), S("0")), PreconditionError);
}

TEST(Sequences, SwapEqualityMatchesOracleUpToSix) {
    for (std::size_t l2 = 2; l2 <= 6; ++l2) {
        for (std::size_t l1 = 1; l1 < l2; ++l1) {
            for (const auto& a1 : oracle::binary_words(l1)) {
                for (const auto& a2 : oracle::binary_words(l2)) {
                    const bool d = oracle::divider_exists(a1, a2);
                    ASSERT_EQ(swap_equal(a1, a2), d) << seq_to_string(a1) << " " << seq_to_string(a2);
                    ASSERT_EQ(common_divider(a1, a2).has_value(), d);
                }
            }
        }
    }
}

TEST(Sequences, DividerWitnessReconstructs) {
    for (const auto& a1 : oracle::binary_words(4)) {
        for (const auto& a2 : oracle::binary_words(6)) {
            if (auto w = common_divider(a1, a2)) {
                EXPECT_EQ(repeat(w->divider, w->n), a1);
                EXPECT_EQ(repeat(w->divider, w->r), a2);
            }
        }
    }
}

TEST(Sequences, IncrementalPrefix) {
    EXPECT_EQ(incremental_prefix(12), S("010011000111"));
    EXPECT_TRUE(incremental_prefix(0).empty());
    EXPECT_EQ(incremental_prefix(1), S("0"));
}

TEST(Sequences, DividerFreeCutExamples) {
    const Seq m = incremental_prefix(64);
    // a = m[2..4) = "00", then "11000111..."
    auto r = find_divider_free_cut(m, 2, 4, 64);
    ASSERT_TRUE(r);
    EXPECT_EQ(*r, 7U);
    // A constant tail never becomes divider-free.
    const Seq zeros(20, 0);
    EXPECT_FALSE(find_divider_free_cut(zeros, 0, 2, 20));
    EXPECT_THROW(find_divider_free_cut(m, 4, 4, 64), IndexError);
    EXPECT_THROW(find_divider_free_cut(m, 0, 4, 65), IndexError);
}

TEST(Sequences, DividerFreeCutMatchesOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 400; ++trial) {
        const std::size_t len = 4 + rng() % 14;
        Seq m(len);
        const std::size_t period = 1 + rng() % 3;
        for (std::size_t k = 0; k < len; ++k) {
            // Mostly periodic words with occasional breaks exercise both branches.
            m[k] = (rng() % 5 == 0) ? static_cast<Symbol>(rng() % 2) : static_cast<Symbol>((k / period) % 2);
        }
        const std::size_t i = rng() % (len - 1);
        const std::size_t j = i + 1 + rng() % (len - i - 1);
        const std::size_t h = j + rng() % (len - j + 1);
        ASSERT_EQ(find_divider_free_cut(m, i, j, h), oracle::divider_free_cut(m, i, j, h))
            << seq_to_string(m) << " i=" << i << " j=" << j << " h=" << h;
    }
}
