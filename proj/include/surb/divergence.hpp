#pragma once

// Divergence witnesses for bounded-memory broadcast candidates: snapshots
// at input reads, repeated configurations with ordered network matrices,
// the segment swap, witness verification, and the Byzantine-sender run.

#include "surb/engine.hpp"
#include "surb/netmodel.hpp"
#include "surb/sequences.hpp"
#include "surb/surb.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace surb {

/// Relay with one bit of memory: the sender forwards each input once to
/// every receiver, receivers deliver whatever arrives. Not a SuRB protocol.
inline ProtocolSpec echo_protocol(std::size_t alphabet = 2) {
    ProtocolSpec p;
    p.name = "echo";
    p.initial = [](const PartyContext&) { return LocalState{-1}; };
    p.wants_input = [](const PartyContext&, const LocalState&) { return true; };
    p.transition = [](const PartyContext& ctx, const LocalState& s, const Event& e) -> Transition {
        Transition t;
        t.next = s;
        if (ctx.self == ctx.sender) {
            if (e.kind == Event::Kind::ReadInput) {
                t.next = {e.msg};
                for (PartyId q = 0; q < ctx.n; ++q) {
                    if (q != ctx.self) {
                        t.sends.push_back({q, e.msg});
                    }
                }
            }
            return t;
        }
        if (e.kind == Event::Kind::Receive && e.src == ctx.sender) {
            t.next = {e.msg};
            t.deliver = e.msg;
        }
        return t;
    };
    p.arbitrary = [](const PartyContext& ctx, std::mt19937_64& rng) {
        return LocalState{static_cast<std::int32_t>(rng() % (ctx.alphabet + 1)) - 1};
    };
    p.state_bound = alphabet + 1;
    return p;
}

struct Snapshot {
    std::size_t step = 0; // state before this step; the step is a sender input read
    Configuration config;
    NetworkMatrix matrix;
    std::size_t cursor = 0; // input values read before the step
};

/// State before every step in which the sender reads input.
inline std::vector<Snapshot> snapshot_stream(const Run& run) {
    std::vector<Snapshot> out;
    SystemState sys = run.initial;
    const std::size_t kinds = run.topo.alphabet;
    const std::size_t n = run.topo.n;
    NetworkMatrix m = matrix_of(sys, kinds);
    for (const auto& rec : run.steps) {
        bool rebuild = false;
        for (const auto& f : rec.faults) {
            apply_fault(sys, run.topo, f);
            rebuild = rebuild || !f.injections.empty();
        }
        if (rebuild) {
            m = matrix_of(sys, kinds);
        }
        if (rec.party == run.topo.sender && rec.event.kind == Event::Kind::ReadInput) {
            out.push_back({rec.index, sys.config, m, sys.config.input_cursor});
        }
        // Faults are already applied; replay the remainder of the step.
        StepRecord bare = rec;
        bare.faults.clear();
        reapply_step(sys, run.topo, bare);
        if (rec.event.kind == Event::Kind::Receive) {
            --m.at(rec.event.msg, link_index({rec.event.src, rec.party}, n));
        }
        for (const auto& s : rec.sends) {
            const std::size_t j = link_index({rec.party, s.dst}, n);
            if (s.loss != SendRecord::Loss::DroppedNew) {
                ++m.at(s.msg, j);
            }
            if (s.loss == SendRecord::Loss::Evicted) {
                --m.at(s.evicted, j);
            }
        }
    }
    return out;
}

/// Symbol the sender actually put on the wire at each input read: the
/// first send of the read step, or the read value when nothing was sent.
inline Seq sent_values(const Run& run) {
    Seq out;
    for (const auto& s : run.steps) {
        if (s.party == run.topo.sender && s.event.kind == Event::Kind::ReadInput) {
            out.push_back(s.sends.empty() ? s.event.msg : s.sends.front().msg);
        }
    }
    return out;
}

/// Positions into a snapshot list.
struct RepeatTriple {
    std::size_t i1 = 0;
    std::size_t i2 = 0;
    std::size_t i3 = 0;

    bool operator==(const RepeatTriple&) const = default;
};

namespace detail {

inline std::vector<std::int64_t> config_key(const Configuration& c) {
    std::vector<std::int64_t> key;
    for (std::size_t p = 0; p < c.states.size(); ++p) {
        key.push_back(static_cast<std::int64_t>(c.states[p].size()));
        key.insert(key.end(), c.states[p].begin(), c.states[p].end());
        key.push_back(c.crashed[p] ? 1 : 0);
        key.push_back(c.byzantine[p] ? 1 : 0);
    }
    return key;
}

// Snapshot positions grouped by key, classes in first-occurrence order.
template <class KeyFn>
std::vector<std::vector<std::size_t>> group_by(const std::vector<Snapshot>& snaps, KeyFn key) {
    std::map<std::vector<std::int64_t>, std::size_t> index;
    std::vector<std::vector<std::size_t>> classes;
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        auto [it, fresh] = index.emplace(key(snaps[k]), classes.size());
        if (fresh) {
            classes.emplace_back();
        }
        classes[it->second].push_back(k);
    }
    return classes;
}

inline bool constant(std::span<const Symbol> s) {
    return std::adjacent_find(s.begin(), s.end(), std::not_equal_to<>()) == s.end();
}

// Classes larger than this skip the quadratic chain gate.
constexpr std::size_t chain_gate_limit = 4096;

} // namespace detail

/// Calls `visit` on qualifying triples in order (classes by first
/// occurrence, then i1, i2, i3 ascending) until it returns true.
///
/// Semi-bounded: equal configurations, le-ordered matrices, and the input
/// segment read in (i2, i3] past the divider-free cut of the segment read in
/// (i1, i2]. Fully bounded: equal configuration and matrix, the later
/// segment longer and sharing no common divider with the earlier one.
/// `values` is the sequence of symbols the sender read.
inline bool for_each_repeat(const std::vector<Snapshot>& snaps, Mode mode, std::span<const Symbol> values,
                            const std::function<bool(const RepeatTriple&)>& visit) {
    if (snaps.size() < 3 || detail::constant(values)) {
        return false;
    }
    auto value_end = [&](std::size_t cursor) { return std::min(cursor, values.size()); };
    if (mode == Mode::SemiBounded) {
        auto classes = detail::group_by(snaps, [](const Snapshot& s) { return detail::config_key(s.config); });
        for (const auto& cls : classes) {
            if (cls.size() < 3) {
                continue;
            }
            if (cls.size() <= detail::chain_gate_limit) {
                std::vector<NetworkMatrix> ms;
                ms.reserve(cls.size());
                for (std::size_t k : cls) {
                    ms.push_back(snaps[k].matrix);
                }
                if (longest_chain(std::span<const NetworkMatrix>(ms)).size() < 3) {
                    continue;
                }
            }
            for (std::size_t a = 0; a < cls.size(); ++a) {
                const Snapshot& s1 = snaps[cls[a]];
                for (std::size_t b = a + 1; b < cls.size(); ++b) {
                    const Snapshot& s2 = snaps[cls[b]];
                    const std::size_t c1 = value_end(s1.cursor);
                    const std::size_t c2 = value_end(s2.cursor);
                    if (c1 >= c2 || !le(s1.matrix, s2.matrix)) {
                        continue;
                    }
                    auto cut = find_divider_free_cut(values, c1, c2, values.size());
                    if (!cut) {
                        continue;
                    }
                    for (std::size_t c = b + 1; c < cls.size(); ++c) {
                        const Snapshot& s3 = snaps[cls[c]];
                        if (value_end(s3.cursor) >= *cut && le(s2.matrix, s3.matrix) &&
                            visit({cls[a], cls[b], cls[c]})) {
                            return true;
                        }
                    }
                }
            }
        }
        return false;
    }
    auto classes = detail::group_by(snaps, [](const Snapshot& s) {
        auto key = detail::config_key(s.config);
        key.insert(key.end(), s.matrix.flat().begin(), s.matrix.flat().end());
        return key;
    });
    for (const auto& cls : classes) {
        for (std::size_t a = 0; a + 2 < cls.size(); ++a) {
            const std::size_t c1 = value_end(snaps[cls[a]].cursor);
            for (std::size_t b = a + 1; b + 1 < cls.size(); ++b) {
                const std::size_t c2 = value_end(snaps[cls[b]].cursor);
                if (c1 >= c2) {
                    continue;
                }
                auto first = values.subspan(c1, c2 - c1);
                for (std::size_t c = b + 1; c < cls.size(); ++c) {
                    const std::size_t c3 = value_end(snaps[cls[c]].cursor);
                    if (c3 - c2 <= first.size()) {
                        continue;
                    }
                    if (!common_divider(first, values.subspan(c2, c3 - c2)) && visit({cls[a], cls[b], cls[c]})) {
                        return true;
                    }
                }
            }
        }
    }
    return false;
}

inline std::optional<RepeatTriple> find_repeat(const std::vector<Snapshot>& snaps, Mode mode,
                                               std::span<const Symbol> values) {
    std::optional<RepeatTriple> out;
    for_each_repeat(snaps, mode, values, [&](const RepeatTriple& t) {
        out = t;
        return true;
    });
    return out;
}

/// Swapped compositions R1+R2+R2+R3 and R1+R2+R3+R2 of a base run cut at
/// step indices s1 < s2 < s3.
inline std::pair<Run, Run> build_swapped_runs(const Run& base, std::size_t s1, std::size_t s2, std::size_t s3) {
    if (!(s1 < s2 && s2 < s3 && s3 <= base.steps.size())) {
        throw SpliceError("swap needs nonempty segments: s1 < s2 < s3 <= run length");
    }
    const SystemState at1 = state_after(base, s1);
    const SystemState at2 = state_after(base, s2);
    const Run r1 = slice(base, base.initial, 0, s1);
    const Run r2 = slice(base, at1, s1, s2);
    const Run r3 = slice(base, at2, s2, s3);
    const Run head = concat(r1, r2, Splice::MatchingConfig);
    Run r5 = concat(concat(head, r2, Splice::MatchingConfig), r3, Splice::MatchingConfig);
    Run r6 = concat(concat(head, r3, Splice::MatchingConfig), r2, Splice::MatchingConfig);
    return {std::move(r5), std::move(r6)};
}

struct Witness {
    Run r5;
    Run r6;
    SystemState final;
    std::vector<Seq> seq5;
    std::vector<Seq> seq6;
    PartyId dormant = 0;
    // Cut points in the base run (step indices) and the input reads there.
    std::size_t s1 = 0, s2 = 0, s3 = 0;
    std::size_t c1 = 0, c2 = 0, c3 = 0;
    // Continuation from the common final state with the dormant party awake.
    std::optional<Run> wake;

    /// First party whose sequences differ, with the first differing position.
    std::optional<std::pair<PartyId, std::size_t>> divergence() const {
        for (PartyId p = 0; p < seq5.size() && p < seq6.size(); ++p) {
            if (seq5[p] == seq6[p]) {
                continue;
            }
            std::size_t k = 0;
            while (k < seq5[p].size() && k < seq6[p].size() && seq5[p][k] == seq6[p][k]) {
                ++k;
            }
            return std::pair{p, k};
        }
        return std::nullopt;
    }
};

/// Both runs replay from the shared initial state, end in the same system
/// state (equal to w.final), the dormant party never steps, and some
/// party's delivered sequence differs.
inline bool verify_witness(const Witness& w, const SystemState& shared_initial) {
    const std::size_t alphabet = w.r5.topo.alphabet;
    if (w.r5.topo != w.r6.topo) {
        return false;
    }
    ReplayOutcome a = replay(w.r5, shared_initial);
    ReplayOutcome b = replay(w.r6, shared_initial);
    if (!a.feasible || !b.feasible) {
        return false;
    }
    if (!same_system_state(a.final, b.final, alphabet) || !same_system_state(a.final, w.final, alphabet)) {
        return false;
    }
    for (const Run* r : {&w.r5, &w.r6}) {
        for (const auto& s : r->steps) {
            if (s.party == w.dormant) {
                return false;
            }
        }
    }
    if (a.delivered != w.seq5 || b.delivered != w.seq6) {
        return false;
    }
    return a.delivered != b.delivered;
}

namespace detail {

// Tries triples from a base run until one yields a verified witness.
inline std::optional<Witness> witness_from(const Run& base, Mode mode, PartyId dormant,
                                           std::size_t max_attempts = 256) {
    const auto snaps = snapshot_stream(base);
    const Seq values = sent_values(base);
    std::optional<Witness> found;
    std::size_t attempts = 0;
    for_each_repeat(snaps, mode, values, [&](const RepeatTriple& t) {
        if (++attempts > max_attempts) {
            return true;
        }
        Witness w;
        w.s1 = snaps[t.i1].step;
        w.s2 = snaps[t.i2].step;
        w.s3 = snaps[t.i3].step;
        w.c1 = snaps[t.i1].cursor;
        w.c2 = snaps[t.i2].cursor;
        w.c3 = snaps[t.i3].cursor;
        w.dormant = dormant;
        try {
            auto [r5, r6] = build_swapped_runs(base, w.s1, w.s2, w.s3);
            w.r5 = std::move(r5);
            w.r6 = std::move(r6);
        } catch (const SpliceError&) {
            return false;
        }
        ReplayOutcome a = replay(w.r5, base.initial);
        ReplayOutcome b = replay(w.r6, base.initial);
        w.final = a.final;
        w.seq5 = a.delivered;
        w.seq6 = b.delivered;
        if (!verify_witness(w, base.initial)) {
            return false;
        }
        found = std::move(w);
        return true;
    });
    return found;
}

} // namespace detail

struct SearchOptions {
    std::size_t n = 3;
    std::uint32_t capacity = 2;
    std::size_t alphabet = 2;
    InputSpec input = InputSpec::incremental();
    std::size_t first_horizon = 64; // input reads in the first round; doubled up to the limit
};

/// Drives a candidate with the given input stream (incremental by default)
/// and a dormant highest-indexed receiver, looking for a verified witness
/// within `horizon_reads` input reads.
inline std::optional<Witness> search(const ProtocolSpec& candidate, Mode mode, std::size_t horizon_reads,
                                     std::uint64_t seed, const SearchOptions& opt = {}) {
    if (horizon_reads == 0) {
        return std::nullopt;
    }
    Scenario sc;
    sc.topo = {opt.n, 0, mode, opt.capacity, opt.alphabet};
    sc.protocol = candidate.name;
    sc.input = opt.input;
    sc.scheduler.kind = SchedulerPolicy::Kind::SeededRandom;
    sc.scheduler.seed = seed;
    const auto dormant = static_cast<PartyId>(opt.n - 1);
    sc.scheduler.dormant = {dormant};
    sc.drop = {DropPolicy::Kind::DropNew, seed};
    std::size_t reads = std::min(std::max<std::size_t>(opt.first_horizon, 1), horizon_reads);
    while (true) {
        sc.max_reads = reads;
        sc.horizon = reads * 16 * opt.n * (opt.capacity + 2);
        const Run base = execute(sc, candidate);
        if (auto w = detail::witness_from(base, mode, dormant)) {
            return w;
        }
        if (reads >= horizon_reads) {
            return std::nullopt;
        }
        reads = std::min(reads * 2, horizon_reads);
    }
}

// ---------------------------------------------------------------------------
// Byzantine sender

namespace detail {

// Lengths of the last and the previous constant blocks of s, with the last
// block's symbol.
struct BlockTail {
    std::optional<Symbol> symbol;
    std::size_t current = 0;
    std::size_t previous = 0;
};

inline BlockTail block_tail(std::span<const Symbol> s) {
    BlockTail t;
    if (s.empty()) {
        return t;
    }
    std::size_t k = s.size();
    t.symbol = s.back();
    while (k > 0 && s[k - 1] == s.back()) {
        --k;
        ++t.current;
    }
    if (k > 0) {
        const Symbol prev = s[k - 1];
        while (k > 0 && s[k - 1] == prev) {
            --k;
            ++t.previous;
        }
    }
    return t;
}

} // namespace detail

/// Sender script that feeds a fabricated incremental stream through the
/// data-link. The fabricated value x is kept after the link slots; it flips
/// once every watched receiver's current block of x is strictly longer
/// than its previous block.
inline ByzantineScript incremental_sender_script(std::uint32_t capacity, std::vector<PartyId> watched) {
    const std::uint32_t copies = dl_copies(capacity);
    return [copies, watched](const PartyContext& ctx, const LocalState& s, const Event& e,
                             const ByzantineView& view) -> Transition {
        const std::size_t receivers = ctx.n - 1;
        auto slots = decode_sender(s, receivers);
        auto x = static_cast<Symbol>(s.size() > 2 * receivers ? std::max(0, s[2 * receivers]) : 0);
        if (e.kind == Event::Kind::ReadInput) {
            bool flip = !watched.empty();
            for (PartyId p : watched) {
                const auto tail = detail::block_tail(view.delivered[p]);
                if (tail.symbol != x || tail.current <= tail.previous) {
                    flip = false;
                }
            }
            if (flip) {
                x = static_cast<Symbol>(1 - x);
            }
            for (auto& slot : slots) {
                slot = {x, copies};
            }
        }
        Transition t;
        t.sends = detail::emit_all(slots, ctx);
        t.next = encode(slots);
        t.next.push_back(x);
        return t;
    };
}

struct ByzantineOptions {
    bool script_enabled = true;
    std::size_t first_horizon = 64; // input reads, doubled up to the limit
    std::size_t wake_steps = 256;
};

/// Single Byzantine sender against the real SuRB protocol in the fully
/// bounded model, with the highest-indexed receiver dormant. Returns a
/// verified witness found by exact system-state repetition, or nothing.
inline std::optional<Witness> byzantine_scenario(std::uint32_t capacity, std::size_t n, std::size_t horizon_reads,
                                                 std::uint64_t seed, const ByzantineOptions& opt = {}) {
    if (n < 2) {
        throw PreconditionError("byzantine_scenario needs at least two parties");
    }
    if (horizon_reads == 0) {
        return std::nullopt;
    }
    Scenario sc;
    sc.topo = {n, 0, Mode::FullyBounded, capacity, 2};
    sc.protocol = "surb";
    sc.input = InputSpec::repeat_of(0);
    sc.scheduler.seed = seed;
    const auto dormant = static_cast<PartyId>(n - 1);
    sc.scheduler.dormant = {dormant};
    sc.drop = {DropPolicy::Kind::DropNew, seed};
    const ProtocolSpec protocol = surb_protocol(capacity, n, 2);
    if (opt.script_enabled) {
        std::vector<PartyId> watched;
        for (PartyId p = 1; p < dormant; ++p) {
            watched.push_back(p);
        }
        FaultEvent f = FaultEvent::byzantine(0, 0, incremental_sender_script(capacity, watched));
        LocalState own = protocol.initial(sc.topo.context(0));
        own.push_back(0);
        f.overwrites = {{0, own}};
        sc.faults.push_back(std::move(f));
    }
    std::size_t reads = std::min(std::max<std::size_t>(opt.first_horizon, 1), horizon_reads);
    while (true) {
        sc.max_reads = reads;
        sc.horizon = reads * 16 * n * (capacity + 2);
        const Run base = execute(sc, protocol);
        if (auto w = detail::witness_from(base, Mode::FullyBounded, dormant)) {
            Scenario wake = sc;
            wake.faults.clear();
            wake.scheduler.dormant.clear();
            wake.max_reads.reset();
            w->wake = execute_from(wake, protocol, wake.scheduler, opt.wake_steps, w->final);
            return w;
        }
        if (reads >= horizon_reads) {
            return std::nullopt;
        }
        reads = std::min(reads * 2, horizon_reads);
    }
}

} // namespace surb
