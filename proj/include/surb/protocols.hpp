#pragma once

// Protocols by name, adversarial transient faults, and the worst-case
// ghost construction for the data-link.

#include "surb/datalink.hpp"
#include "surb/divergence.hpp"
#include "surb/engine.hpp"
#include "surb/surb.hpp"

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace surb {

inline std::vector<std::string> protocol_names() { return {"surb", "surb-offbyone", "surb-redeliver", "echo"}; }

inline ProtocolSpec make_protocol(const std::string& name, const Topology& topo, bool extra_send = false) {
    SurbOptions opt;
    opt.extra_send = extra_send;
    if (name == "surb") {
        return surb_protocol(topo.capacity, topo.n, topo.alphabet, opt);
    }
    if (name == "surb-offbyone") {
        opt.receiver = SurbOptions::Receiver::OffByOne;
        return surb_protocol(topo.capacity, topo.n, topo.alphabet, opt);
    }
    if (name == "surb-redeliver") {
        opt.receiver = SurbOptions::Receiver::Redeliver;
        return surb_protocol(topo.capacity, topo.n, topo.alphabet, opt);
    }
    if (name == "echo") {
        return echo_protocol(topo.alphabet);
    }
    throw ScenarioError("unknown protocol '" + name + "'");
}

inline ProtocolSpec make_protocol(const Scenario& sc) { return make_protocol(sc.protocol, sc.topo, sc.extra_send); }

/// A transient fault at step `at` that rewrites every party with an
/// arbitrary valid state and fills every link with up to capacity random
/// symbols.
inline FaultEvent adversarial_transient(const Topology& topo, const ProtocolSpec& protocol, std::uint64_t seed,
                                        std::size_t at) {
    std::mt19937_64 rng(seed ^ 0x5eedfa17ULL);
    std::vector<std::pair<PartyId, LocalState>> states;
    for (PartyId p = 0; p < topo.n; ++p) {
        states.emplace_back(p, protocol.arbitrary(topo.context(p), rng));
    }
    std::vector<std::pair<LinkId, std::vector<Symbol>>> links;
    for (std::size_t j = 0; j < link_count(topo.n); ++j) {
        std::vector<Symbol> msgs(rng() % (topo.capacity + 1));
        for (auto& m : msgs) {
            m = static_cast<Symbol>(rng() % topo.alphabet);
        }
        links.emplace_back(link_at(j, topo.n), std::move(msgs));
    }
    return FaultEvent::transient(at, std::move(states), std::move(links));
}

/// The scenario a sweep runs for one seed: the seed drives the scheduler,
/// and with `adversary` set one transient fault lands in the first quarter
/// of the horizon.
inline Scenario seeded(Scenario sc, std::uint64_t seed) {
    sc.scheduler.seed = seed;
    if (sc.adversary) {
        const ProtocolSpec protocol = make_protocol(sc);
        std::mt19937_64 rng(seed);
        const std::size_t at = sc.horizon >= 4 ? rng() % (sc.horizon / 4) : 0;
        sc.faults.push_back(adversarial_transient(sc.topo, protocol, seed, at));
    }
    return sc;
}

/// Worst-case ghost construction on one link (two parties, alphabet 0..2,
/// input repeat(0)). A transient fault at step 0 leaves the receiver about
/// to deliver 1 while holding (2, counter 1), fills the link with capacity
/// copies of 2, and starts the sender mid-loop sending 1. A scripted
/// schedule drains each of the three, then runs `reads` honest sends.
inline Scenario ghost_scenario(std::uint32_t capacity, std::size_t reads = 0, const std::string& protocol = "surb") {
    if (reads == 0) {
        reads = 2 * static_cast<std::size_t>(capacity) + 2;
    }
    Scenario sc;
    sc.topo = {2, 0, Mode::FullyBounded, capacity, 3};
    sc.protocol = protocol;
    sc.input = InputSpec::repeat_of(0);
    sc.drop = {DropPolicy::Kind::DropNew, 0};
    sc.scheduler.kind = SchedulerPolicy::Kind::Scripted;
    const std::uint32_t copies = capacity + 1;
    LocalState receiver = encode(SurbReceiverState{Symbol{1}, DlReceiverState{Symbol{2}, 1}});
    LocalState sender = encode(std::vector<DlSenderState>{DlSenderState{Symbol{1}, copies}});
    sc.faults.push_back(FaultEvent::transient(0, {{0, sender}, {1, receiver}},
                                              {{LinkId{0, 1}, std::vector<Symbol>(capacity, Symbol{2})}}));
    auto& script = sc.scheduler.script;
    auto recv = [&](Symbol m) { script.push_back({1, Event::Kind::Receive, 0, m}); };
    auto idle = [&](PartyId p) { script.push_back({p, Event::Kind::NoReceive, 0, 0}); };
    for (std::uint32_t k = 0; k < capacity; ++k) {
        recv(2);
    }
    idle(1);
    for (std::uint32_t k = 0; k < copies; ++k) {
        idle(0);
        recv(1);
    }
    idle(1);
    for (std::size_t r = 0; r < reads; ++r) {
        script.push_back({0, Event::Kind::ReadInput, 0, 0});
        recv(0);
        for (std::uint32_t k = 0; k < capacity; ++k) {
            idle(0);
            recv(0);
        }
    }
    idle(1);
    sc.horizon = script.size();
    return sc;
}

} // namespace surb
