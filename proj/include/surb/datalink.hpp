#pragma once

// Stabilizing data-link over a bounded lossy link: the repeat-send sender,
// the counting receiver, and a checker for the (inf, 0, 3, 0) contract.

#include "surb/engine.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace surb {

/// Bounds a stabilizing data-link guarantees after the last transient fault.
struct ContractParams {
    std::size_t lost = std::numeric_limits<std::size_t>::max();
    std::size_t duplicate = 0;
    std::size_t ghost = 3;
    std::size_t reorder = 0;
};

struct DlSenderState {
    std::optional<Symbol> current;
    std::uint32_t remaining = 0;

    bool operator==(const DlSenderState&) const = default;
};

struct DlReceiverState {
    std::optional<Symbol> last_message;
    std::uint32_t counter = 0;

    bool operator==(const DlReceiverState&) const = default;
};

/// Copies a single logical send puts on the wire.
inline std::uint32_t dl_copies(std::uint32_t capacity, bool extra_send = false) {
    return capacity + (extra_send ? 2U : 1U);
}

/// The raw copies of one logical send, in order.
inline std::vector<Symbol> dl_send(Symbol msg, std::uint32_t capacity, bool extra_send = false) {
    return std::vector<Symbol>(dl_copies(capacity, extra_send), msg);
}

inline DlSenderState dl_start(Symbol msg, std::uint32_t capacity, bool extra_send = false) {
    return {msg, dl_copies(capacity, extra_send)};
}

/// Emits the next copy of the send loop, if the loop is still running.
inline std::optional<Symbol> dl_emit(DlSenderState& s) {
    if (s.remaining == 0 || !s.current) {
        s = {};
        return std::nullopt;
    }
    const Symbol out = *s.current;
    if (--s.remaining == 0) {
        s.current.reset();
    }
    return out;
}

/// Receiver with an explicit delivery threshold; the protocol uses capacity+1.
inline std::pair<DlReceiverState, std::optional<Symbol>> dl_on_receive_threshold(DlReceiverState state, Symbol msg,
                                                                                  std::uint32_t threshold) {
    std::optional<Symbol> out(std::nullopt);
    if (state.last_message != msg) {
        state.last_message = msg;
        state.counter = 1;
    } else if (++state.counter >= threshold) {
        state = DlReceiverState{};
        out.emplace(msg);
    }
    return {state, out};
}

inline std::pair<DlReceiverState, std::optional<Symbol>> dl_on_receive(DlReceiverState state, Symbol msg,
                                                                        std::uint32_t capacity) {
    return dl_on_receive_threshold(state, msg, capacity + 1);
}

// Encoding into LocalState: an absent symbol is -1.
inline std::int32_t encode_symbol(const std::optional<Symbol>& s) { return s ? static_cast<std::int32_t>(*s) : -1; }
inline std::optional<Symbol> decode_symbol(std::int32_t v) {
    if (v < 0) {
        return std::nullopt;
    }
    return static_cast<Symbol>(v);
}

inline LocalState encode(const DlReceiverState& s) {
    return {encode_symbol(s.last_message), static_cast<std::int32_t>(s.counter)};
}
inline DlReceiverState decode_receiver(const LocalState& s) {
    return {decode_symbol(s.at(0)), static_cast<std::uint32_t>(std::max(0, s.at(1)))};
}

/// Sender state: one (current, remaining) slot per receiver, receivers in
/// increasing party order.
inline LocalState encode(const std::vector<DlSenderState>& slots) {
    LocalState out;
    out.reserve(2 * slots.size());
    for (const auto& s : slots) {
        out.push_back(encode_symbol(s.current));
        out.push_back(static_cast<std::int32_t>(s.remaining));
    }
    return out;
}
inline std::vector<DlSenderState> decode_sender(const LocalState& s, std::size_t receivers) {
    std::vector<DlSenderState> out(receivers);
    for (std::size_t k = 0; k < receivers && 2 * k + 1 < s.size(); ++k) {
        out[k].current = decode_symbol(s[2 * k]);
        out[k].remaining = static_cast<std::uint32_t>(std::max(0, s[2 * k + 1]));
    }
    return out;
}

/// Slot of receiver `p` in the sender's state.
inline std::size_t receiver_slot(PartyId p, PartyId sender) { return p < sender ? p : p - 1; }

// ---------------------------------------------------------------------------
// Delivery classification

enum class DeliveryTag : std::uint8_t { PreFault, Real, Ghost, Duplicate, Reordered };

inline const char* to_string(DeliveryTag t) {
    switch (t) {
    case DeliveryTag::PreFault:
        return "pre-fault";
    case DeliveryTag::Real:
        return "real";
    case DeliveryTag::Ghost:
        return "ghost";
    case DeliveryTag::Duplicate:
        return "duplicate";
    case DeliveryTag::Reordered:
        return "reordered";
    }
    return "?";
}

struct TaggedDelivery {
    std::size_t step = 0;
    Symbol msg = 0;
    DeliveryTag tag = DeliveryTag::Real;
    // Position of the matched logical send (Real/Reordered only).
    std::optional<std::size_t> send;
};

struct LogicalSend {
    std::size_t step = 0;
    Symbol msg = 0;
};

/// Logical sends on links leaving the sender: one per input read.
inline std::vector<LogicalSend> logical_sends(const Run& run) {
    std::vector<LogicalSend> out;
    for (const auto& s : run.steps) {
        if (s.party == run.topo.sender && s.event.kind == Event::Kind::ReadInput) {
            out.push_back({s.index, s.event.msg});
        }
    }
    return out;
}

/// Tags each link-layer delivery on `link`. Sends are matched greedily in
/// send order. Unmatched deliveries are ghosts whenever fault residue could
/// explain them (any transient fault in the run); otherwise they are
/// reordered (an earlier skipped send exists), duplicates (the message was
/// sent before) or ghosts (never sent).
inline std::vector<TaggedDelivery> classify_deliveries(const Run& run, LinkId link) {
    if (link.src >= run.topo.n || link.dst >= run.topo.n || link.src == link.dst) {
        throw IndexError("classify_deliveries: link outside the run's topology");
    }
    const std::size_t fault_at = last_transient_fault(run);
    const bool residue = has_transient_fault(run);
    std::vector<LogicalSend> sends;
    if (link.src == run.topo.sender) {
        sends = logical_sends(run);
    }
    std::vector<bool> used(sends.size(), false);
    std::size_t cursor = 0;
    std::vector<TaggedDelivery> out;
    for (const auto& s : run.steps) {
        if (s.party != link.dst || !s.delivered) {
            continue;
        }
        TaggedDelivery d{s.index, *s.delivered, DeliveryTag::Ghost, std::nullopt};
        if (s.index < fault_at) {
            d.tag = DeliveryTag::PreFault;
            out.push_back(d);
            continue;
        }
        auto sent_before = [&](std::size_t k) { return sends[k].step < s.index && sends[k].msg == d.msg; };
        for (std::size_t k = cursor; k < sends.size() && sends[k].step < s.index; ++k) {
            if (!used[k] && sent_before(k)) {
                d.tag = DeliveryTag::Real;
                d.send = k;
                used[k] = true;
                cursor = k + 1;
                break;
            }
        }
        if (d.tag != DeliveryTag::Real && !residue) {
            bool ever_sent = false;
            for (std::size_t k = 0; k < sends.size() && sends[k].step < s.index; ++k) {
                if (!sent_before(k)) {
                    continue;
                }
                ever_sent = true;
                if (k < cursor && !used[k]) {
                    d.tag = DeliveryTag::Reordered;
                    d.send = k;
                    used[k] = true;
                    break;
                }
            }
            if (d.tag != DeliveryTag::Reordered) {
                d.tag = ever_sent ? DeliveryTag::Duplicate : DeliveryTag::Ghost;
            }
        }
        out.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Contract checking

struct LinkReport {
    LinkId link;
    std::size_t real = 0;
    std::size_t ghost = 0;
    std::size_t duplicate = 0;
    std::size_t reordered = 0;
    bool termination = true;
    std::size_t longest_loop = 0; // sender steps taken by the slowest completed send loop
    bool liveness_checked = false;
    bool liveness = true;

    bool pass(const ContractParams& p = {}) const {
        return termination && liveness && ghost <= p.ghost && duplicate <= p.duplicate && reordered <= p.reorder;
    }
};

struct ContractReport {
    ContractParams params;
    std::vector<LinkReport> links;

    bool pass() const {
        for (const auto& l : links) {
            if (!l.pass(params)) {
                return false;
            }
        }
        return true;
    }
    std::size_t max_ghost() const {
        std::size_t g = 0;
        for (const auto& l : links) {
            g = std::max(g, l.ghost);
        }
        return g;
    }

    /// One line per claim per link.
    std::string text() const {
        std::ostringstream os;
        auto verdict = [](bool ok) { return ok ? "pass" : "fail"; };
        for (const auto& l : links) {
            const std::string id = "link=" + std::to_string(l.link.src) + ">" + std::to_string(l.link.dst);
            os << id << " claim=termination " << verdict(l.termination) << " loop_steps=" << l.longest_loop << '\n';
            os << id << " claim=liveness " << (l.liveness_checked ? verdict(l.liveness) : "vacuous") << '\n';
            os << id << " claim=no-duplication " << verdict(l.duplicate <= params.duplicate)
               << " duplicate=" << l.duplicate << " real=" << l.real << '\n';
            os << id << " claim=no-reorder " << verdict(l.reordered <= params.reorder) << " reordered=" << l.reordered
               << '\n';
            os << id << " claim=ghost-bound " << verdict(l.ghost <= params.ghost) << " ghost=" << l.ghost << '\n';
        }
        os << "contract=datalink " << verdict(pass()) << '\n';
        return os.str();
    }
};

namespace detail {

// Sender steps each logical send loop took to drain on `slot`.
inline void check_termination(const Run& run, std::size_t slot, std::uint32_t copies, LinkReport& rep) {
    const PartyId sender = run.topo.sender;
    const std::size_t receivers = run.topo.n - 1;
    std::vector<const StepRecord*> mine;
    for (const auto& s : run.steps) {
        if (s.party == sender) {
            mine.push_back(&s);
        }
    }
    const std::size_t since = last_transient_fault(run);
    for (std::size_t k = 0; k < mine.size(); ++k) {
        if (mine[k]->event.kind != Event::Kind::ReadInput || mine[k]->index < since ||
            run.initial.config.byzantine[sender]) {
            continue;
        }
        for (std::size_t t = k; t < mine.size(); ++t) {
            if (t > k && (mine[t]->event.kind == Event::Kind::ReadInput || !mine[t]->faults.empty())) {
                break;
            }
            if (mine[t]->post_state.empty()) {
                return; // states unavailable (parsed trace)
            }
            auto slots = decode_sender(mine[t]->post_state, receivers);
            if (slots[slot].remaining == 0) {
                rep.longest_loop = std::max(rep.longest_loop, t - k + 1);
                if (t - k + 1 > copies) {
                    rep.termination = false;
                }
                break;
            }
        }
    }
}

} // namespace detail

/// Checks the (inf, 0, 3, 0) contract on every link leaving the sender,
/// counting from the last transient fault. The liveness surrogate: if the
/// sender made `liveness_run` consecutive logical sends of m, a live
/// receiver delivered m at least once after the first of them.
inline ContractReport check_contract(const Run& run, std::size_t liveness_run = 16) {
    ContractReport report;
    const PartyId sender = run.topo.sender;
    const auto faulty = faulty_parties(run);
    const std::size_t since = last_transient_fault(run);
    std::vector<LogicalSend> sends;
    for (const auto& s : logical_sends(run)) {
        if (s.step >= since) {
            sends.push_back(s);
        }
    }
    for (PartyId p = 0; p < run.topo.n; ++p) {
        if (p == sender) {
            continue;
        }
        LinkReport rep;
        rep.link = {sender, p};
        for (const auto& d : classify_deliveries(run, rep.link)) {
            switch (d.tag) {
            case DeliveryTag::Real:
                ++rep.real;
                break;
            case DeliveryTag::Ghost:
                ++rep.ghost;
                break;
            case DeliveryTag::Duplicate:
                ++rep.duplicate;
                break;
            case DeliveryTag::Reordered:
                ++rep.reordered;
                break;
            case DeliveryTag::PreFault:
                break;
            }
        }
        detail::check_termination(run, receiver_slot(p, sender), run.topo.capacity + 1, rep);
        if (!faulty[p] && !faulty[sender] && liveness_run > 0) {
            std::size_t streak = 0;
            for (std::size_t k = 0; k < sends.size(); ++k) {
                streak = (k > 0 && sends[k].msg == sends[k - 1].msg) ? streak + 1 : 1;
                if (streak < liveness_run) {
                    continue;
                }
                rep.liveness_checked = true;
                const LogicalSend& first = sends[k + 1 - liveness_run];
                bool delivered = false;
                for (const auto& s : run.steps) {
                    if (s.index > first.step && s.party == p && s.delivered == first.msg) {
                        delivered = true;
                        break;
                    }
                }
                rep.liveness = delivered;
                break;
            }
        }
        report.links.push_back(rep);
    }
    return report;
}

} // namespace surb
