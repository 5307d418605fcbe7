#pragma once

// Suffix Reliable Broadcast over the stabilizing data-link, with
// finite-horizon checkers for the two suffix conditions.

#include "surb/datalink.hpp"
#include "surb/engine.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace surb {

struct SurbOptions {
    enum class Receiver : std::uint8_t {
        Standard,
        OffByOne,  // delivers after capacity receipts instead of capacity+1
        Redeliver, // re-delivers last_message on every NoReceive step
    };
    Receiver receiver = Receiver::Standard;
    bool extra_send = false;
};

/// Receiver state: a delivery the party is about to make (set only by a
/// fault or by a same-step collision), then the data-link receiver.
struct SurbReceiverState {
    std::optional<Symbol> pending;
    DlReceiverState link;

    bool operator==(const SurbReceiverState&) const = default;
};

inline LocalState encode(const SurbReceiverState& s) {
    return {encode_symbol(s.pending), encode_symbol(s.link.last_message), static_cast<std::int32_t>(s.link.counter)};
}

inline SurbReceiverState decode_surb_receiver(const LocalState& s) {
    if (s.size() < 3) {
        return {};
    }
    return {decode_symbol(s[0]), {decode_symbol(s[1]), static_cast<std::uint32_t>(std::max(0, s[2]))}};
}

namespace detail {

inline std::size_t saturating_pow(std::size_t base, std::size_t exp) {
    std::size_t out = 1;
    for (std::size_t k = 0; k < exp; ++k) {
        if (out > std::numeric_limits<std::size_t>::max() / base) {
            return std::numeric_limits<std::size_t>::max();
        }
        out *= base;
    }
    return out;
}

inline std::vector<Send> emit_all(std::vector<DlSenderState>& slots, const PartyContext& ctx) {
    std::vector<Send> sends;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (auto m = dl_emit(slots[k])) {
            const auto dst = static_cast<PartyId>(k < ctx.sender ? k : k + 1);
            sends.push_back({dst, *m});
        }
    }
    return sends;
}

} // namespace detail

/// Sender slots are idle: the next sender step reads input.
inline bool surb_sender_idle(const LocalState& s, std::size_t receivers) {
    for (const auto& slot : decode_sender(s, receivers)) {
        if (slot.remaining > 0) {
            return false;
        }
    }
    return true;
}

/// The SuRB protocol for link capacity `capacity`, `n` parties and an
/// alphabet of `alphabet` symbols (the latter two size the state bound).
inline ProtocolSpec surb_protocol(std::uint32_t capacity, std::size_t n = 3, std::size_t alphabet = 2,
                                  SurbOptions opt = {}) {
    ProtocolSpec p;
    switch (opt.receiver) {
    case SurbOptions::Receiver::Standard:
        p.name = "surb";
        break;
    case SurbOptions::Receiver::OffByOne:
        p.name = "surb-offbyone";
        break;
    case SurbOptions::Receiver::Redeliver:
        p.name = "surb-redeliver";
        break;
    }
    const std::uint32_t copies = dl_copies(capacity, opt.extra_send);
    const std::uint32_t threshold =
        opt.receiver == SurbOptions::Receiver::OffByOne ? std::max<std::uint32_t>(capacity, 1) : capacity + 1;

    p.initial = [](const PartyContext& ctx) -> LocalState {
        if (ctx.self == ctx.sender) {
            return encode(std::vector<DlSenderState>(ctx.n - 1));
        }
        return encode(SurbReceiverState{});
    };

    p.wants_input = [](const PartyContext& ctx, const LocalState& s) { return surb_sender_idle(s, ctx.n - 1); };

    p.transition = [copies, threshold, opt](const PartyContext& ctx, const LocalState& s,
                                            const Event& e) -> Transition {
        if (ctx.self == ctx.sender) {
            auto slots = decode_sender(s, ctx.n - 1);
            if (e.kind == Event::Kind::ReadInput) {
                for (auto& slot : slots) {
                    slot = {e.msg, copies};
                }
            }
            Transition t;
            t.sends = detail::emit_all(slots, ctx);
            t.next = encode(slots);
            return t;
        }
        SurbReceiverState st = decode_surb_receiver(s);
        Transition t;
        if (st.pending) {
            t.deliver = st.pending;
            st.pending.reset();
        }
        if (e.kind == Event::Kind::Receive && e.src == ctx.sender) {
            auto [next, out] = dl_on_receive_threshold(st.link, e.msg, threshold);
            st.link = next;
            if (out) {
                // One delivery per step: a second one waits for the next step.
                if (t.deliver) {
                    st.pending = out;
                } else {
                    t.deliver = out;
                }
            }
        } else if (e.kind == Event::Kind::NoReceive && opt.receiver == SurbOptions::Receiver::Redeliver &&
                   !t.deliver && st.link.last_message) {
            t.deliver = st.link.last_message;
        }
        t.next = encode(st);
        return t;
    };

    p.arbitrary = [copies, capacity](const PartyContext& ctx, std::mt19937_64& rng) -> LocalState {
        auto sym = [&]() -> std::optional<Symbol> {
            const auto v = static_cast<std::int64_t>(rng() % (ctx.alphabet + 1)) - 1;
            return decode_symbol(static_cast<std::int32_t>(v));
        };
        if (ctx.self == ctx.sender) {
            std::vector<DlSenderState> slots(ctx.n - 1);
            for (auto& slot : slots) {
                slot.remaining = static_cast<std::uint32_t>(rng() % (copies + 1));
                slot.current = slot.remaining > 0 ? std::optional<Symbol>(static_cast<Symbol>(rng() % ctx.alphabet))
                                                  : std::nullopt;
            }
            return encode(slots);
        }
        SurbReceiverState st;
        st.pending = sym();
        st.link.last_message = sym();
        st.link.counter = st.link.last_message ? static_cast<std::uint32_t>(rng() % (capacity + 2)) : 0;
        return encode(st);
    };

    const std::size_t sender_states = detail::saturating_pow(1 + alphabet * copies, n - 1);
    const std::size_t receiver_states = (alphabet + 1) * (alphabet + 1) * (capacity + 2);
    p.state_bound = std::max(sender_states, receiver_states);
    return p;
}

// ---------------------------------------------------------------------------
// Suffix checkers

struct SuffixReport {
    std::vector<Seq> delivered;  // per party
    std::vector<bool> honest;    // honest receivers
    std::size_t common_suffix = 0;
    std::size_t window = 8;
    bool s1_applicable = false;
    bool s1 = true;
    bool s2_strict = true;
    bool s2_window = true;
    std::string detail;

    bool s2() const { return s2_strict && s2_window; }

    std::string text() const {
        std::ostringstream os;
        for (std::size_t p = 0; p < delivered.size(); ++p) {
            os << "party=" << p << " honest=" << (honest[p] ? 1 : 0) << " delivered=" << delivered[p].size()
               << " seq=" << (delivered[p].empty() ? "-" : seq_to_string(delivered[p])) << '\n';
        }
        os << "common_suffix=" << common_suffix << " window=" << window << '\n';
        os << "S1 " << (!s1_applicable ? "vacuous" : (s1 ? "pass" : "fail")) << '\n';
        os << "S2 strict=" << (s2_strict ? "pass" : "fail") << " window=" << (s2_window ? "pass" : "fail") << '\n';
        if (!detail.empty()) {
            os << "detail " << detail << '\n';
        }
        return os.str();
    }
};

namespace detail {

inline SuffixReport suffix_base(const Run& run, std::size_t window) {
    SuffixReport r;
    r.window = window;
    const auto faulty = faulty_parties(run);
    r.honest.assign(run.topo.n, false);
    r.delivered.resize(run.topo.n);
    for (PartyId p = 0; p < run.topo.n; ++p) {
        r.delivered[p] = deliveries(run, p);
        r.honest[p] = p != run.topo.sender && !faulty[p];
    }
    // Longest common suffix over honest receivers.
    std::vector<const Seq*> seqs;
    for (PartyId p = 0; p < run.topo.n; ++p) {
        if (r.honest[p]) {
            seqs.push_back(&r.delivered[p]);
        }
    }
    std::size_t k = 0;
    auto agree_at = [&](std::size_t back) {
        for (const Seq* s : seqs) {
            if (s->size() <= back || (*s)[s->size() - 1 - back] != (*seqs.front())[seqs.front()->size() - 1 - back]) {
                return false;
            }
        }
        return true;
    };
    while (!seqs.empty() && agree_at(k)) {
        ++k;
    }
    r.common_suffix = k;
    return r;
}

} // namespace detail

inline bool sender_byzantine(const Run& run) {
    if (run.initial.config.byzantine[run.topo.sender]) {
        return true;
    }
    for (const auto& s : run.steps) {
        for (const auto& f : s.faults) {
            if (f.kind == FaultEvent::Kind::ByzantineAssume && f.party == run.topo.sender) {
                return true;
            }
        }
    }
    return false;
}

/// Suffix condition S2 for an honest sender, counted from the last
/// transient fault. With input repeat(v) every honest receiver's deliveries
/// from the 4th onward must equal v, and its
/// last min(window, count) deliveries must equal v. For other streams the
/// deliveries from the 4th onward must be an in-order subsequence of the
/// values the sender read.
inline SuffixReport check_S2(const Run& run, std::size_t window = 8) {
    if (sender_byzantine(run)) {
        throw PreconditionError("check_S2 requires an honest sender");
    }
    SuffixReport r = detail::suffix_base(run, window);
    constexpr std::size_t ghosts = 3;
    const std::size_t since = last_transient_fault(run);
    Seq read;
    for (const auto& s : logical_sends(run)) {
        if (s.step >= since) {
            read.push_back(s.msg);
        }
    }
    for (PartyId p = 0; p < run.topo.n; ++p) {
        if (!r.honest[p]) {
            continue;
        }
        Seq d;
        for (const auto& s : run.steps) {
            if (s.index >= since && s.party == p && s.delivered) {
                d.push_back(*s.delivered);
            }
        }
        if (run.input.kind == InputSpec::Kind::Repeat) {
            const Symbol v = run.input.value;
            for (std::size_t k = ghosts; k < d.size(); ++k) {
                if (d[k] != v) {
                    r.s2_strict = false;
                    r.detail += "party " + std::to_string(p) + " delivery " + std::to_string(k + 1) + " is " +
                                std::to_string(d[k]) + "; ";
                    break;
                }
            }
            const std::size_t w = std::min(window, d.size());
            for (std::size_t k = d.size() - w; k < d.size(); ++k) {
                if (d[k] != v) {
                    r.s2_window = false;
                    break;
                }
            }
        } else {
            std::size_t pos = 0;
            for (std::size_t k = ghosts; k < d.size(); ++k) {
                while (pos < read.size() && read[pos] != d[k]) {
                    ++pos;
                }
                if (pos == read.size()) {
                    r.s2_strict = false;
                    r.detail += "party " + std::to_string(p) + " delivery " + std::to_string(k + 1) +
                                " is not an in-order input value; ";
                    break;
                }
                ++pos;
            }
        }
    }
    return r;
}

/// Suffix condition S1. Applicable when some honest receiver delivered more
/// in the full run than in its first half; then every honest receiver must
/// share a nonempty common window of min(window, shortest count) deliveries.
inline SuffixReport check_S1(const Run& run, std::size_t window = 8) {
    SuffixReport r = detail::suffix_base(run, window);
    const std::size_t half = run.steps.size() / 2;
    std::vector<std::size_t> early(run.topo.n, 0);
    for (std::size_t k = 0; k < half; ++k) {
        if (run.steps[k].delivered) {
            ++early[run.steps[k].party];
        }
    }
    std::size_t shortest = std::numeric_limits<std::size_t>::max();
    for (PartyId p = 0; p < run.topo.n; ++p) {
        if (!r.honest[p]) {
            continue;
        }
        if (r.delivered[p].size() > early[p]) {
            r.s1_applicable = true;
        }
        shortest = std::min(shortest, r.delivered[p].size());
    }
    if (!r.s1_applicable) {
        return r;
    }
    const std::size_t w = std::min(window, shortest);
    if (w == 0) {
        r.s1 = false;
        r.detail = "an honest receiver delivered nothing while another kept delivering";
        return r;
    }
    r.s1 = r.common_suffix >= w;
    if (!r.s1) {
        r.detail = "honest receivers disagree within the last " + std::to_string(w) + " deliveries";
    }
    return r;
}

} // namespace surb
