#pragma once

// Finite-sequence combinatorics: suffixes, repetition, common dividers and
// the canonical incremental binary sequence.

#include "surb/errors.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace surb {

using Symbol = std::uint8_t;
using Seq = std::vector<Symbol>;

/// Parses a compact digit string ("0110") into a sequence.
inline Seq seq_from_string(std::string_view digits) {
    Seq out;
    out.reserve(digits.size());
    for (char c : digits) {
        if (c < '0' || c > '9') {
            throw PreconditionError(std::string("not a symbol digit: ") + c);
        }
        out.push_back(static_cast<Symbol>(c - '0'));
    }
    return out;
}

inline std::string seq_to_string(std::span<const Symbol> s) {
    std::string out;
    out.reserve(s.size());
    for (Symbol x : s) {
        out.push_back(static_cast<char>('0' + x));
    }
    return out;
}

inline bool is_suffix(std::span<const Symbol> a, std::span<const Symbol> b) {
    if (a.size() > b.size()) {
        return false;
    }
    return std::equal(a.begin(), a.end(), b.end() - static_cast<std::ptrdiff_t>(a.size()));
}

inline Seq repeat(std::span<const Symbol> s, std::size_t times) {
    Seq out;
    out.reserve(s.size() * times);
    for (std::size_t k = 0; k < times; ++k) {
        out.insert(out.end(), s.begin(), s.end());
    }
    return out;
}

inline Seq concat(std::span<const Symbol> a, std::span<const Symbol> b) {
    Seq out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

struct DividerWitness {
    Seq divider;
    std::size_t n = 0; // repeat(divider, n) == first
    std::size_t r = 0; // repeat(divider, r) == second

    bool operator==(const DividerWitness&) const = default;
};

namespace detail {

// True iff s is `period`-periodic starting from the first `period` symbols of `root`.
inline bool tiles(std::span<const Symbol> s, std::span<const Symbol> root) {
    if (root.empty() || s.size() % root.size() != 0) {
        return false;
    }
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] != root[k % root.size()]) {
            return false;
        }
    }
    return true;
}

inline void check_divider_args(std::span<const Symbol> a1, std::span<const Symbol> a2) {
    if (a1.empty() || a2.empty()) {
        throw PreconditionError("divider operations need two non-empty sequences");
    }
    if (a1.size() >= a2.size()) {
        throw PreconditionError("divider operations need |a1| < |a2|");
    }
}

// Length of the primitive root of a non-empty sequence.
inline std::size_t primitive_period(std::span<const Symbol> s) {
    for (std::size_t d = 1; d <= s.size(); ++d) {
        if (s.size() % d == 0 && tiles(s, s.first(d))) {
            return d;
        }
    }
    return s.size();
}

} // namespace detail

/// Shortest common divider of a1 and a2, if any. Requires 0 < |a1| < |a2|.
inline std::optional<DividerWitness> common_divider(std::span<const Symbol> a1,
                                                    std::span<const Symbol> a2) {
    detail::check_divider_args(a1, a2);
    const std::size_t g = std::gcd(a1.size(), a2.size());
    for (std::size_t d = 1; d <= g; ++d) {
        if (g % d != 0) {
            continue;
        }
        auto root = a1.first(d);
        if (detail::tiles(a1, root) && detail::tiles(a2, root)) {
            return DividerWitness{Seq(root.begin(), root.end()), a1.size() / d, a2.size() / d};
        }
    }
    return std::nullopt;
}

/// a1+a1+a2 == a1+a2+a1. Requires 0 < |a1| < |a2|.
inline bool swap_equal(std::span<const Symbol> a1, std::span<const Symbol> a2) {
    detail::check_divider_args(a1, a2);
    Seq left = concat(concat(a1, a1), a2);
    Seq right = concat(concat(a1, a2), a1);
    return left == right;
}

/// First `len` symbols of 0 1 00 11 000 111 ...
inline Seq incremental_prefix(std::size_t len) {
    Seq out;
    out.reserve(len);
    for (std::size_t k = 1; out.size() < len; ++k) {
        for (Symbol x : {Symbol{0}, Symbol{1}}) {
            for (std::size_t t = 0; t < k && out.size() < len; ++t) {
                out.push_back(x);
            }
        }
    }
    return out;
}

/// Smallest r in (j, horizon] such that |m[j..r)| > |m[i..j)| and m[i..j),
/// m[j..r') share no common divider for every r' in [r, horizon].
///
/// Any divider of a = m[i..j) is a power of a's primitive root w, so a prefix
/// m[j..r') has a divider exactly when it is a whole power of w. Those prefixes
/// stop once m[j..] leaves the w-periodic pattern, which gives r in one scan.
inline std::optional<std::size_t> find_divider_free_cut(std::span<const Symbol> m, std::size_t i,
                                                        std::size_t j, std::size_t horizon) {
    if (!(i < j && j <= horizon && horizon <= m.size())) {
        throw IndexError("find_divider_free_cut needs i < j <= horizon <= |m|");
    }
    auto a = m.subspan(i, j - i);
    const std::size_t period = detail::primitive_period(a);
    std::size_t periodic = 0;
    while (j + periodic < horizon && m[j + periodic] == a[periodic % period]) {
        ++periodic;
    }
    std::size_t r = j + a.size() + 1;
    const std::size_t whole = (periodic / period) * period;
    if (whole > 0) {
        r = std::max(r, j + whole + 1);
    }
    if (r > horizon) {
        return std::nullopt;
    }
    return r;
}

} // namespace surb
