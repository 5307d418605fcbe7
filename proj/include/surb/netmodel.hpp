#pragma once

// Network state: per-link pending multisets, the network-matrix abstraction
// with its entrywise order, and longest chains in sequences of matrices.

#include "surb/errors.hpp"
#include "surb/sequences.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace surb {

using PartyId = std::uint32_t;

enum class Mode : std::uint8_t { SemiBounded, FullyBounded };

struct LinkId {
    PartyId src = 0;
    PartyId dst = 0;

    auto operator<=>(const LinkId&) const = default;
};

/// Number of directed links among n parties.
constexpr std::size_t link_count(std::size_t n) { return n * (n - 1); }

/// Dense index of a directed link; links are ordered by (src, dst).
constexpr std::size_t link_index(LinkId link, std::size_t n) {
    return link.src * (n - 1) + (link.dst < link.src ? link.dst : link.dst - 1);
}

constexpr LinkId link_at(std::size_t index, std::size_t n) {
    const auto src = static_cast<PartyId>(index / (n - 1));
    auto dst = static_cast<PartyId>(index % (n - 1));
    if (dst >= src) {
        ++dst;
    }
    return {src, dst};
}

/// Pending messages on one directed link, in arrival order. `capacity` is
/// empty for unbounded links.
struct LinkState {
    std::vector<Symbol> pending;
    std::optional<std::uint32_t> capacity;
    // Scheduling opportunities of the destination each message has waited;
    // bookkeeping for the fair scheduler, not part of the network state.
    std::vector<std::uint32_t> waits;

    std::size_t count(Symbol m) const {
        return static_cast<std::size_t>(std::count(pending.begin(), pending.end(), m));
    }
    bool full() const { return capacity && pending.size() >= *capacity; }

    void push(Symbol m) {
        pending.push_back(m);
        waits.push_back(0);
    }
    // Removes the oldest copy of m; false when m is not pending.
    bool take(Symbol m) {
        auto it = std::find(pending.begin(), pending.end(), m);
        if (it == pending.end()) {
            return false;
        }
        const auto pos = it - pending.begin();
        pending.erase(it);
        waits.erase(waits.begin() + pos);
        return true;
    }
    void erase_at(std::size_t pos) {
        pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(pos));
        waits.erase(waits.begin() + static_cast<std::ptrdiff_t>(pos));
    }
    void assign(std::vector<Symbol> msgs) {
        pending = std::move(msgs);
        waits.assign(pending.size(), 0);
    }
};

/// Count grid: rows are message kinds, columns are links.
class NetworkMatrix {
public:
    NetworkMatrix() = default;
    NetworkMatrix(std::size_t kinds, std::size_t links)
        : kinds_(kinds), links_(links), counts_(kinds * links, 0) {}

    std::size_t kinds() const { return kinds_; }
    std::size_t links() const { return links_; }

    std::int64_t at(std::size_t kind, std::size_t link) const { return counts_[kind * links_ + link]; }
    std::int64_t& at(std::size_t kind, std::size_t link) { return counts_[kind * links_ + link]; }

    std::span<const std::int64_t> flat() const { return counts_; }
    std::int64_t total() const {
        std::int64_t t = 0;
        for (auto c : counts_) {
            t += c;
        }
        return t;
    }

    static NetworkMatrix from_flat(std::size_t kinds, std::size_t links, std::vector<std::int64_t> v) {
        if (v.size() != kinds * links) {
            throw DimensionMismatch("flat matrix has wrong size");
        }
        NetworkMatrix m(kinds, links);
        m.counts_ = std::move(v);
        return m;
    }

    bool operator==(const NetworkMatrix&) const = default;

private:
    std::size_t kinds_ = 0;
    std::size_t links_ = 0;
    std::vector<std::int64_t> counts_;
};

using SignedGrid = std::vector<std::int64_t>;

inline NetworkMatrix matrix_of(std::span<const LinkState> network, std::size_t kinds) {
    NetworkMatrix m(kinds, network.size());
    for (std::size_t j = 0; j < network.size(); ++j) {
        for (Symbol s : network[j].pending) {
            if (s >= kinds) {
                throw DimensionMismatch("symbol outside the alphabet on link " + std::to_string(j));
            }
            ++m.at(s, j);
        }
    }
    return m;
}

namespace detail {
inline void check_dims(const NetworkMatrix& a, const NetworkMatrix& b) {
    if (a.kinds() != b.kinds() || a.links() != b.links()) {
        throw DimensionMismatch("network matrices have different dimensions");
    }
}
} // namespace detail

/// Entrywise a <= b.
inline bool le(const NetworkMatrix& a, const NetworkMatrix& b) {
    detail::check_dims(a, b);
    auto fa = a.flat();
    auto fb = b.flat();
    for (std::size_t k = 0; k < fa.size(); ++k) {
        if (fa[k] > fb[k]) {
            return false;
        }
    }
    return true;
}

inline SignedGrid delta(const NetworkMatrix& before, const NetworkMatrix& after) {
    detail::check_dims(before, after);
    SignedGrid out(before.flat().size());
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = after.flat()[k] - before.flat()[k];
    }
    return out;
}

/// Longest index chain t1 < ... < tk with leq(seq[t_a], seq[t_{a+1}]).
/// Among maximum chains the lexicographically smallest index list is returned.
template <class T, class Leq>
std::vector<std::size_t> longest_chain(std::span<const T> seq, Leq leq) {
    const std::size_t n = seq.size();
    if (n == 0) {
        return {};
    }
    // best[i]: length of the longest chain starting at i.
    std::vector<std::size_t> best(n, 1);
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (best[j] + 1 > best[i] && leq(seq[i], seq[j])) {
                best[i] = best[j] + 1;
            }
        }
    }
    const std::size_t k = *std::max_element(best.begin(), best.end());
    std::vector<std::size_t> chain;
    chain.reserve(k);
    std::size_t need = k;
    for (std::size_t i = 0; i < n && need > 0; ++i) {
        if (best[i] == need && (chain.empty() || leq(seq[chain.back()], seq[i]))) {
            chain.push_back(i);
            --need;
        }
    }
    return chain;
}

inline std::vector<std::size_t> longest_chain(std::span<const NetworkMatrix> seq) {
    return longest_chain(seq, [](const NetworkMatrix& a, const NetworkMatrix& b) { return le(a, b); });
}

} // namespace surb
