#pragma once

// Step semantics of the bounded asynchronous model: parties, events, system
// states, fault injection, seeded/scripted scheduling, run recording, replay
// and run concatenation.

#include "surb/errors.hpp"
#include "surb/netmodel.hpp"
#include "surb/sequences.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace surb {

/// Internal state of one party. Protocols encode their variables as small ints.
using LocalState = std::vector<std::int32_t>;

struct Event {
    enum class Kind : std::uint8_t { Receive, ReadInput, NoReceive };

    Kind kind = Kind::NoReceive;
    PartyId src = 0; // Receive only
    Symbol msg = 0;  // Receive and ReadInput

    static Event receive(PartyId src, Symbol m) { return {Kind::Receive, src, m}; }
    static Event input(Symbol m) { return {Kind::ReadInput, 0, m}; }
    static Event none() { return {}; }

    bool operator==(const Event&) const = default;
};

struct Send {
    PartyId dst = 0;
    Symbol msg = 0;
};

struct Transition {
    LocalState next;
    std::vector<Send> sends;
    std::optional<Symbol> deliver;
};

/// What a party knows about the system it runs in.
struct PartyContext {
    PartyId self = 0;
    PartyId sender = 0;
    std::size_t n = 0;
    std::uint32_t capacity = 0;
    std::size_t alphabet = 2;
};

/// A pluggable bounded-memory protocol.
struct ProtocolSpec {
    std::string name;
    std::function<LocalState(const PartyContext&)> initial;
    std::function<Transition(const PartyContext&, const LocalState&, const Event&)> transition;
    // Whether the sender's next step reads from the input stream.
    std::function<bool(const PartyContext&, const LocalState&)> wants_input;
    // Some valid internal state, for transient-fault generation.
    std::function<LocalState(const PartyContext&, std::mt19937_64&)> arbitrary;
    // Declared bound on distinct internal states per party.
    std::size_t state_bound = 0;
};

struct Topology {
    std::size_t n = 2;
    PartyId sender = 0;
    Mode mode = Mode::FullyBounded;
    std::uint32_t capacity = 1;
    std::size_t alphabet = 2;

    PartyContext context(PartyId self) const { return {self, sender, n, capacity, alphabet}; }
    bool operator==(const Topology&) const = default;
};

struct Configuration {
    std::vector<LocalState> states;
    std::vector<bool> crashed;
    std::vector<bool> byzantine;
    // Number of values the sender has read so far; bookkeeping only, not
    // compared when looking for repeated configurations.
    std::size_t input_cursor = 0;
};

/// Party states (and fault flags) equal; the input cursor is ignored.
inline bool same_configuration(const Configuration& a, const Configuration& b) {
    return a.states == b.states && a.crashed == b.crashed && a.byzantine == b.byzantine;
}

struct SystemState {
    Configuration config;
    std::vector<LinkState> links;

    LinkState& link(LinkId id) { return links[link_index(id, config.states.size())]; }
    const LinkState& link(LinkId id) const { return links[link_index(id, config.states.size())]; }
};

inline NetworkMatrix matrix_of(const SystemState& sys, std::size_t alphabet) {
    return matrix_of(std::span<const LinkState>(sys.links), alphabet);
}

/// Equal configurations and equal link multisets.
inline bool same_system_state(const SystemState& a, const SystemState& b, std::size_t alphabet) {
    return same_configuration(a.config, b.config) && a.links.size() == b.links.size() &&
           matrix_of(a, alphabet) == matrix_of(b, alphabet);
}

/// View handed to a Byzantine script: the whole system plus delivery history.
struct ByzantineView {
    const SystemState& sys;
    std::span<const Seq> delivered;
};

using ByzantineScript =
    std::function<Transition(const PartyContext&, const LocalState&, const Event&, const ByzantineView&)>;

struct FaultEvent {
    enum class Kind : std::uint8_t { Crash, Transient, ByzantineAssume };

    Kind kind = Kind::Crash;
    std::size_t at = 0; // applied before step `at`
    PartyId party = 0;  // Crash and ByzantineAssume
    // Transient: new party states and replacement link contents (<= capacity).
    // ByzantineAssume: an optional rewrite of the party's own state.
    std::vector<std::pair<PartyId, LocalState>> overwrites;
    std::vector<std::pair<LinkId, std::vector<Symbol>>> injections;
    std::shared_ptr<const ByzantineScript> script;

    static FaultEvent crash(PartyId p, std::size_t at) {
        FaultEvent f;
        f.kind = Kind::Crash;
        f.party = p;
        f.at = at;
        return f;
    }
    static FaultEvent transient(std::size_t at, std::vector<std::pair<PartyId, LocalState>> states,
                                std::vector<std::pair<LinkId, std::vector<Symbol>>> links) {
        FaultEvent f;
        f.kind = Kind::Transient;
        f.at = at;
        f.overwrites = std::move(states);
        f.injections = std::move(links);
        return f;
    }
    static FaultEvent byzantine(PartyId p, std::size_t at, ByzantineScript script) {
        FaultEvent f;
        f.kind = Kind::ByzantineAssume;
        f.party = p;
        f.at = at;
        f.script = std::make_shared<const ByzantineScript>(std::move(script));
        return f;
    }
};

struct SendRecord {
    enum class Loss : std::uint8_t { None, DroppedNew, Evicted };

    PartyId dst = 0;
    Symbol msg = 0;
    Loss loss = Loss::None;
    Symbol evicted = 0; // the pending message lost when loss == Evicted

    bool operator==(const SendRecord&) const = default;
};

struct StepRecord {
    std::size_t index = 0;
    PartyId party = 0;
    Event event;
    std::vector<SendRecord> sends;
    std::optional<Symbol> delivered;
    std::vector<FaultEvent> faults;
    LocalState post_state;
};

struct InputSpec {
    enum class Kind : std::uint8_t { Repeat, Incremental, Explicit };

    Kind kind = Kind::Repeat;
    Symbol value = 0;
    Seq values;

    static InputSpec repeat_of(Symbol v) { return {Kind::Repeat, v, {}}; }
    static InputSpec incremental() { return {Kind::Incremental, 0, {}}; }
    static InputSpec explicit_list(Seq v) { return {Kind::Explicit, 0, std::move(v)}; }

    /// Value at position i, or empty once a finite stream is exhausted.
    std::optional<Symbol> at(std::size_t i) const {
        switch (kind) {
        case Kind::Repeat:
            return value;
        case Kind::Incremental: {
            // Block k (k >= 1) covers 2k symbols: k zeros then k ones.
            std::size_t k = 1;
            while (i >= 2 * k) {
                i -= 2 * k;
                ++k;
            }
            return static_cast<Symbol>(i < k ? 0 : 1);
        }
        case Kind::Explicit:
            if (i < values.size()) {
                return values[i];
            }
            return std::nullopt;
        }
        return std::nullopt;
    }

    bool operator==(const InputSpec&) const = default;
};

struct Run {
    Topology topo;
    std::string protocol;
    InputSpec input;
    SystemState initial;
    std::vector<StepRecord> steps;
};

struct DropPolicy {
    enum class Kind : std::uint8_t { DropNew, DropOldest, DropSeededRandom };
    Kind kind = Kind::DropNew;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline void check_link_injection(const Topology& topo, LinkId link, std::size_t size) {
    if (link.src == link.dst || link.src >= topo.n || link.dst >= topo.n) {
        throw ScenarioError("transient injection names an invalid link");
    }
    if (topo.mode == Mode::FullyBounded && size > topo.capacity) {
        throw ScenarioError("transient injection exceeds link capacity");
    }
}

} // namespace detail

inline SystemState initial_state(const Topology& topo, const ProtocolSpec& protocol) {
    SystemState sys;
    sys.config.states.reserve(topo.n);
    for (PartyId p = 0; p < topo.n; ++p) {
        sys.config.states.push_back(protocol.initial(topo.context(p)));
    }
    sys.config.crashed.assign(topo.n, false);
    sys.config.byzantine.assign(topo.n, false);
    sys.links.resize(link_count(topo.n));
    for (auto& l : sys.links) {
        if (topo.mode == Mode::FullyBounded) {
            l.capacity = topo.capacity;
        }
    }
    return sys;
}

/// Applies a fault to the system state. The input stream is never touched.
inline void apply_fault(SystemState& sys, const Topology& topo, const FaultEvent& f) {
    switch (f.kind) {
    case FaultEvent::Kind::Crash:
        sys.config.crashed.at(f.party) = true;
        break;
    case FaultEvent::Kind::Transient:
        for (const auto& [p, s] : f.overwrites) {
            sys.config.states.at(p) = s;
        }
        for (const auto& [link, msgs] : f.injections) {
            detail::check_link_injection(topo, link, msgs.size());
            sys.link(link).assign(msgs);
        }
        break;
    case FaultEvent::Kind::ByzantineAssume:
        sys.config.byzantine.at(f.party) = true;
        for (const auto& [p, s] : f.overwrites) {
            if (p != f.party) {
                throw ScenarioError("a Byzantine party may only rewrite its own state");
            }
            sys.config.states.at(p) = s;
        }
        break;
    }
}

/// Throws InfeasibleStep when `event` cannot be taken by `party` at `sys`.
inline void check_feasible(const SystemState& sys, const Topology& topo, std::size_t index, PartyId party,
                           const Event& event) {
    if (party >= topo.n) {
        throw InfeasibleStep(index, "unknown party");
    }
    if (sys.config.crashed[party]) {
        throw InfeasibleStep(index, "crashed party " + std::to_string(party) + " scheduled");
    }
    switch (event.kind) {
    case Event::Kind::Receive:
        if (event.src == party || event.src >= topo.n || sys.link({event.src, party}).count(event.msg) == 0) {
            throw InfeasibleStep(index, "message not pending on link " + std::to_string(event.src) + ">" +
                                            std::to_string(party));
        }
        break;
    case Event::Kind::ReadInput:
        if (party != topo.sender) {
            throw InfeasibleStep(index, "party " + std::to_string(party) + " cannot read input");
        }
        break;
    case Event::Kind::NoReceive:
        break;
    }
}

/// Removes the received message, appends sends (resolving overflow by the
/// drop policy), installs the new state. Returns the record without faults.
inline StepRecord commit_step(SystemState& sys, const Topology& topo, std::size_t index, PartyId party,
                              const Event& event, Transition t, const DropPolicy& drop) {
    check_feasible(sys, topo, index, party, event);
    if (event.kind == Event::Kind::Receive) {
        sys.link({event.src, party}).take(event.msg);
    } else if (event.kind == Event::Kind::ReadInput) {
        ++sys.config.input_cursor;
    }
    StepRecord rec;
    rec.index = index;
    rec.party = party;
    rec.event = event;
    rec.delivered = t.deliver;
    std::uint64_t salt = 0;
    for (const Send& s : t.sends) {
        if (s.dst == party || s.dst >= topo.n) {
            throw InfeasibleStep(index, "send to invalid destination");
        }
        if (s.msg >= topo.alphabet) {
            throw InfeasibleStep(index, "send of symbol outside the alphabet");
        }
        LinkState& link = sys.link({party, s.dst});
        SendRecord sr{s.dst, s.msg, SendRecord::Loss::None, 0};
        if (link.full()) {
            std::size_t victim = 0;
            switch (drop.kind) {
            case DropPolicy::Kind::DropNew:
                sr.loss = SendRecord::Loss::DroppedNew;
                break;
            case DropPolicy::Kind::DropOldest:
                victim = 0;
                sr.loss = SendRecord::Loss::Evicted;
                break;
            case DropPolicy::Kind::DropSeededRandom: {
                const auto h = detail::splitmix(drop.seed ^ detail::splitmix(index * 1315423911ULL + salt++));
                // One extra slot stands for the new message itself.
                victim = static_cast<std::size_t>(h % (link.pending.size() + 1));
                sr.loss = victim == link.pending.size() ? SendRecord::Loss::DroppedNew : SendRecord::Loss::Evicted;
                break;
            }
            }
            if (sr.loss == SendRecord::Loss::Evicted) {
                sr.evicted = link.pending[victim];
                link.erase_at(victim);
            }
        }
        if (sr.loss != SendRecord::Loss::DroppedNew) {
            link.push(s.msg);
        }
        rec.sends.push_back(sr);
    }
    sys.config.states[party] = std::move(t.next);
    rec.post_state = sys.config.states[party];
    return rec;
}

/// Pure single step of an honest party.
inline std::pair<SystemState, StepRecord> step(SystemState sys, const Topology& topo, const ProtocolSpec& protocol,
                                               PartyId party, const Event& event, const DropPolicy& drop,
                                               std::size_t index = 0) {
    check_feasible(sys, topo, index, party, event);
    Transition t = protocol.transition(topo.context(party), sys.config.states[party], event);
    StepRecord rec = commit_step(sys, topo, index, party, event, std::move(t), drop);
    return {std::move(sys), std::move(rec)};
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayOutcome {
    bool feasible = true;
    std::size_t failed_step = 0;
    std::string reason;
    SystemState final;
    std::vector<Seq> delivered;
};

/// Re-applies a recorded step: the recorded post-state and loss decisions
/// are taken from the record; only message availability is re-checked.
inline void reapply_step(SystemState& sys, const Topology& topo, const StepRecord& rec) {
    for (const auto& f : rec.faults) {
        apply_fault(sys, topo, f);
    }
    check_feasible(sys, topo, rec.index, rec.party, rec.event);
    if (rec.event.kind == Event::Kind::Receive) {
        sys.link({rec.event.src, rec.party}).take(rec.event.msg);
    } else if (rec.event.kind == Event::Kind::ReadInput) {
        ++sys.config.input_cursor;
    }
    for (const auto& s : rec.sends) {
        LinkState& link = sys.link({rec.party, s.dst});
        if (s.loss == SendRecord::Loss::Evicted && !link.take(s.evicted)) {
            throw InfeasibleStep(rec.index, "evicted message not pending");
        }
        if (s.loss != SendRecord::Loss::DroppedNew) {
            link.push(s.msg);
        }
        if (topo.mode == Mode::FullyBounded && link.pending.size() > topo.capacity) {
            throw InfeasibleStep(rec.index, "link capacity exceeded on replay");
        }
    }
    sys.config.states[rec.party] = rec.post_state;
}

inline ReplayOutcome replay(const Run& run, const SystemState& start) {
    ReplayOutcome out;
    out.final = start;
    out.delivered.assign(run.topo.n, Seq{});
    if (!same_configuration(start.config, run.initial.config)) {
        out.feasible = false;
        out.failed_step = run.steps.empty() ? 0 : run.steps.front().index;
        out.reason = "start configuration differs from the run's initial configuration";
        return out;
    }
    for (std::size_t k = 0; k < run.steps.size(); ++k) {
        const StepRecord& rec = run.steps[k];
        try {
            reapply_step(out.final, run.topo, rec);
        } catch (const InfeasibleStep& e) {
            out.feasible = false;
            out.failed_step = k;
            out.reason = e.what();
            return out;
        } catch (const std::exception& e) {
            out.feasible = false;
            out.failed_step = k;
            out.reason = e.what();
            return out;
        }
        if (rec.delivered) {
            out.delivered[rec.party].push_back(*rec.delivered);
        }
    }
    return out;
}

inline Seq deliveries(const Run& run, PartyId party) {
    Seq out;
    for (const auto& s : run.steps) {
        if (s.party == party && s.delivered) {
            out.push_back(*s.delivered);
        }
    }
    return out;
}

/// Sub-run of steps [from, to) of `run`, starting at `start` (the state
/// reached before step `from`). Steps are renumbered from zero.
inline Run slice(const Run& run, const SystemState& start, std::size_t from, std::size_t to) {
    Run out{run.topo, run.protocol, run.input, start, {}};
    out.steps.assign(run.steps.begin() + static_cast<std::ptrdiff_t>(from),
                     run.steps.begin() + static_cast<std::ptrdiff_t>(to));
    for (std::size_t k = 0; k < out.steps.size(); ++k) {
        out.steps[k].index = k;
        for (auto& f : out.steps[k].faults) {
            f.at = k;
        }
    }
    return out;
}

/// System state reached after the first `count` steps of a run.
inline SystemState state_after(const Run& run, std::size_t count) {
    SystemState sys = run.initial;
    for (std::size_t k = 0; k < count; ++k) {
        reapply_step(sys, run.topo, run.steps[k]);
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Concatenation

enum class Splice : std::uint8_t { MatchingConfig, TransientSplice, ByzantineSenderSplice };

inline Run concat(const Run& r1, const Run& r2, Splice splice) {
    if (r1.topo != r2.topo) {
        throw SpliceError("runs have different topologies");
    }
    ReplayOutcome first = replay(r1, r1.initial);
    if (!first.feasible) {
        throw SpliceError("first run is not feasible: " + first.reason);
    }
    const auto& end = first.final.config;
    const auto& begin = r2.initial.config;
    if (end.crashed != begin.crashed || end.byzantine != begin.byzantine) {
        throw SpliceError("fault flags differ at the splice point");
    }
    for (PartyId p = 0; p < r1.topo.n; ++p) {
        if (end.states[p] == begin.states[p]) {
            continue;
        }
        if (splice == Splice::MatchingConfig || p != r1.topo.sender) {
            throw SpliceError("configurations differ at party " + std::to_string(p));
        }
    }
    const std::size_t alphabet = r1.topo.alphabet;
    if (splice == Splice::MatchingConfig) {
        const NetworkMatrix need = matrix_of(r2.initial, alphabet);
        const NetworkMatrix have = matrix_of(first.final, alphabet);
        for (std::size_t i = 0; i < need.kinds(); ++i) {
            for (std::size_t j = 0; j < need.links(); ++j) {
                if (need.at(i, j) > have.at(i, j)) {
                    throw SpliceError("network matrix entry (" + std::to_string(i) + "," + std::to_string(j) +
                                      ") of the second run exceeds the first run's final matrix");
                }
            }
        }
    }
    Run out{r1.topo, r1.protocol, r1.input, r1.initial, r1.steps};
    const std::size_t offset = r1.steps.size();
    for (std::size_t k = 0; k < r2.steps.size(); ++k) {
        StepRecord rec = r2.steps[k];
        rec.index = offset + k;
        for (auto& f : rec.faults) {
            f.at = rec.index;
        }
        if (k == 0 && splice != Splice::MatchingConfig &&
            end.states[r1.topo.sender] != begin.states[r1.topo.sender]) {
            FaultEvent f;
            f.at = rec.index;
            f.overwrites = {{r1.topo.sender, begin.states[r1.topo.sender]}};
            if (splice == Splice::TransientSplice) {
                f.kind = FaultEvent::Kind::Transient;
            } else {
                f.kind = FaultEvent::Kind::ByzantineAssume;
                f.party = r1.topo.sender;
            }
            rec.faults.insert(rec.faults.begin(), std::move(f));
        }
        out.steps.push_back(std::move(rec));
    }
    if (splice == Splice::ByzantineSenderSplice && !r2.steps.empty() &&
        end.byzantine[r1.topo.sender] != begin.byzantine[r1.topo.sender]) {
        throw SpliceError("Byzantine flag mismatch");
    }
    ReplayOutcome check = replay(out, out.initial);
    if (!check.feasible) {
        throw SpliceError("concatenation is infeasible at step " + std::to_string(check.failed_step) + ": " +
                          check.reason);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scheduling and execution

struct ScriptedStep {
    PartyId party = 0;
    Event::Kind kind = Event::Kind::NoReceive;
    PartyId src = 0; // Receive
    Symbol msg = 0;  // Receive
};

struct SchedulerPolicy {
    enum class Kind : std::uint8_t { SeededRandom, Scripted };

    Kind kind = Kind::SeededRandom;
    std::uint64_t seed = 0;
    std::vector<ScriptedStep> script;
    // Bounded-fairness window; 0 selects the default 64 * n * capacity.
    std::size_t window = 0;
    // Parties never scheduled (a crashed-looking but honest party).
    std::vector<PartyId> dormant;
};

struct Scenario {
    Topology topo;
    std::string protocol = "surb";
    InputSpec input;
    std::vector<FaultEvent> faults;
    SchedulerPolicy scheduler;
    DropPolicy drop;
    std::size_t horizon = 0;
    // Stop once the sender has read this many values.
    std::optional<std::size_t> max_reads;
    // Sender link loop runs capacity+2 times instead of capacity+1.
    bool extra_send = false;
    // Sweeps: generate one adversarial transient fault per seed.
    bool adversary = false;
};

inline std::size_t fairness_window(const Topology& topo, const SchedulerPolicy& policy) {
    if (policy.window != 0) {
        return policy.window;
    }
    return 64 * topo.n * std::max<std::uint32_t>(topo.capacity, 1);
}

inline void validate(const Scenario& sc) {
    const auto& t = sc.topo;
    if (t.n < 2) {
        throw ScenarioError("n must be at least 2");
    }
    if (t.sender >= t.n) {
        throw ScenarioError("sender index out of range");
    }
    if (t.mode == Mode::FullyBounded && t.capacity < 1) {
        throw ScenarioError("capacity must be at least 1 in fully-bounded mode");
    }
    if (t.alphabet == 0 || t.alphabet > 10) {
        throw ScenarioError("alphabet must hold between 1 and 10 symbols");
    }
    auto check_symbol = [&](Symbol s) {
        if (s >= t.alphabet) {
            throw ScenarioError("input symbol outside the alphabet");
        }
    };
    if (sc.input.kind == InputSpec::Kind::Repeat) {
        check_symbol(sc.input.value);
    }
    if (sc.input.kind == InputSpec::Kind::Incremental && t.alphabet < 2) {
        throw ScenarioError("incremental input needs a binary alphabet");
    }
    for (Symbol s : sc.input.values) {
        check_symbol(s);
    }
    for (const auto& f : sc.faults) {
        if ((f.kind != FaultEvent::Kind::Transient) && f.party >= t.n) {
            throw ScenarioError("fault names an unknown party");
        }
        for (const auto& [p, s] : f.overwrites) {
            if (p >= t.n) {
                throw ScenarioError("fault overwrites an unknown party");
            }
        }
        for (const auto& [link, msgs] : f.injections) {
            detail::check_link_injection(t, link, msgs.size());
            for (Symbol s : msgs) {
                check_symbol(s);
            }
        }
    }
    for (PartyId d : sc.scheduler.dormant) {
        if (d >= t.n) {
            throw ScenarioError("dormant party out of range");
        }
    }
}

namespace detail {

class Executor {
public:
    Executor(const Scenario& sc, const ProtocolSpec& protocol, const SchedulerPolicy& policy,
             const SystemState* start = nullptr)
        : sc_(sc), protocol_(protocol), policy_(policy), rng_(policy.seed),
          window_(fairness_window(sc.topo, policy)) {
        run_.topo = sc.topo;
        run_.protocol = protocol.name;
        run_.input = sc.input;
        run_.initial = start ? *start : initial_state(sc.topo, protocol);
        sys_ = run_.initial;
        delivered_.assign(sc.topo.n, Seq{});
        scripts_.assign(sc.topo.n, nullptr);
        idle_.assign(sc.topo.n, 0);
        dormant_.assign(sc.topo.n, false);
        for (PartyId d : policy.dormant) {
            dormant_[d] = true;
        }
        seen_.resize(sc.topo.n);
        for (PartyId p = 0; p < sc.topo.n; ++p) {
            note_state(p);
        }
        faults_ = sc.faults;
        std::stable_sort(faults_.begin(), faults_.end(),
                         [](const FaultEvent& a, const FaultEvent& b) { return a.at < b.at; });
    }

    Run run(std::size_t horizon) {
        std::size_t next_fault = 0;
        for (std::size_t k = 0; k < horizon; ++k) {
            if (sc_.max_reads && sys_.config.input_cursor >= *sc_.max_reads) {
                break;
            }
            std::vector<FaultEvent> applied;
            while (next_fault < faults_.size() && faults_[next_fault].at <= k) {
                FaultEvent f = faults_[next_fault++];
                f.at = k;
                apply_fault(sys_, sc_.topo, f);
                if (f.kind == FaultEvent::Kind::ByzantineAssume) {
                    scripts_[f.party] = f.script;
                }
                for (const auto& [p, s] : f.overwrites) {
                    note_state(p);
                }
                applied.push_back(std::move(f));
            }
            auto choice = choose(k);
            if (!choice) {
                break;
            }
            auto [party, event] = *choice;
            StepRecord rec = take(k, party, event);
            rec.faults = std::move(applied);
            if (rec.delivered) {
                delivered_[party].push_back(*rec.delivered);
            }
            run_.steps.push_back(std::move(rec));
        }
        return std::move(run_);
    }

private:
    void note_state(PartyId p) {
        if (sys_.config.byzantine[p] || protocol_.state_bound == 0) {
            return;
        }
        seen_[p].insert(sys_.config.states[p]);
        if (seen_[p].size() > protocol_.state_bound) {
            throw StateBoundExceeded("party " + std::to_string(p) + " exceeded the declared state bound of " +
                                     std::to_string(protocol_.state_bound));
        }
    }

    bool can_read(PartyId p) const {
        return p == sc_.topo.sender &&
               protocol_.wants_input(sc_.topo.context(p), sys_.config.states[p]) &&
               sc_.input.at(sys_.config.input_cursor).has_value();
    }

    std::uint64_t draw(std::uint64_t bound) { return rng_() % bound; }

    std::optional<std::pair<PartyId, Event>> choose(std::size_t k) {
        if (policy_.kind == SchedulerPolicy::Kind::Scripted) {
            if (k >= policy_.script.size()) {
                return std::nullopt;
            }
            const ScriptedStep& s = policy_.script[k];
            switch (s.kind) {
            case Event::Kind::Receive:
                return std::pair{s.party, Event::receive(s.src, s.msg)};
            case Event::Kind::ReadInput: {
                auto v = sc_.input.at(sys_.config.input_cursor);
                if (!v) {
                    throw InfeasibleStep(k, "input stream exhausted");
                }
                return std::pair{s.party, Event::input(*v)};
            }
            case Event::Kind::NoReceive:
                return std::pair{s.party, Event::none()};
            }
            return std::nullopt;
        }
        std::vector<PartyId> live;
        for (PartyId p = 0; p < sc_.topo.n; ++p) {
            if (!sys_.config.crashed[p] && !dormant_[p]) {
                live.push_back(p);
            }
        }
        if (live.empty()) {
            return std::nullopt;
        }
        const PartyId p = live[draw(live.size())];
        return std::pair{p, pick_event(p)};
    }

    Event pick_event(PartyId p) {
        const std::size_t n = sc_.topo.n;
        // Pending messages on incoming links: (src, position).
        std::vector<std::pair<PartyId, std::size_t>> pending;
        std::uint32_t oldest_wait = 0;
        std::pair<PartyId, std::size_t> oldest{0, 0};
        for (PartyId src = 0; src < n; ++src) {
            if (src == p) {
                continue;
            }
            const LinkState& l = sys_.link({src, p});
            for (std::size_t pos = 0; pos < l.pending.size(); ++pos) {
                pending.emplace_back(src, pos);
                if (pending.size() == 1 || l.waits[pos] > oldest_wait) {
                    oldest_wait = l.waits[pos];
                    oldest = {src, pos};
                }
            }
        }
        const bool reads = can_read(p);
        if (!pending.empty() && oldest_wait + pending.size() >= window_) {
            return Event::receive(oldest.first, sys_.link({oldest.first, p}).pending[oldest.second]);
        }
        const std::size_t options = pending.size() + (reads ? 1 : 0);
        if (options == 0) {
            return Event::none();
        }
        if (idle_[p] < window_ / 2 && draw(8) == 0) {
            return Event::none();
        }
        const std::size_t pick = draw(options);
        if (pick == pending.size()) {
            return Event::input(*sc_.input.at(sys_.config.input_cursor));
        }
        const auto [src, pos] = pending[pick];
        return Event::receive(src, sys_.link({src, p}).pending[pos]);
    }

    StepRecord take(std::size_t k, PartyId p, const Event& event) {
        check_feasible(sys_, sc_.topo, k, p, event);
        Transition t;
        if (sys_.config.byzantine[p] && scripts_[p]) {
            t = (*scripts_[p])(sc_.topo.context(p), sys_.config.states[p], event,
                               ByzantineView{sys_, delivered_});
        } else {
            t = protocol_.transition(sc_.topo.context(p), sys_.config.states[p], event);
        }
        DropPolicy drop = sc_.drop;
        drop.seed ^= detail::splitmix(policy_.seed);
        StepRecord rec = commit_step(sys_, sc_.topo, k, p, event, std::move(t), drop);
        idle_[p] = event.kind == Event::Kind::NoReceive ? idle_[p] + 1 : 0;
        for (PartyId src = 0; src < sc_.topo.n; ++src) {
            if (src != p) {
                for (auto& w : sys_.link({src, p}).waits) {
                    ++w;
                }
            }
        }
        note_state(p);
        return rec;
    }

    const Scenario& sc_;
    const ProtocolSpec& protocol_;
    const SchedulerPolicy& policy_;
    std::mt19937_64 rng_;
    std::size_t window_;
    Run run_;
    SystemState sys_;
    std::vector<Seq> delivered_;
    std::vector<std::shared_ptr<const ByzantineScript>> scripts_;
    std::vector<std::size_t> idle_;
    std::vector<bool> dormant_;
    std::vector<std::set<LocalState>> seen_;
    std::vector<FaultEvent> faults_;
};

} // namespace detail

/// Runs `protocol` on the scenario for at most `horizon` steps. A pure
/// function of its arguments.
inline Run execute(const Scenario& sc, const ProtocolSpec& protocol, const SchedulerPolicy& policy,
                   std::size_t horizon) {
    validate(sc);
    detail::Executor ex(sc, protocol, policy);
    return ex.run(horizon);
}

/// As execute, but starting from an arbitrary system state.
inline Run execute_from(const Scenario& sc, const ProtocolSpec& protocol, const SchedulerPolicy& policy,
                        std::size_t horizon, const SystemState& start) {
    validate(sc);
    if (start.config.states.size() != sc.topo.n || start.links.size() != link_count(sc.topo.n)) {
        throw ScenarioError("start state does not match the scenario's topology");
    }
    detail::Executor ex(sc, protocol, policy, &start);
    return ex.run(horizon);
}

inline Run execute(const Scenario& sc, const ProtocolSpec& protocol) {
    return execute(sc, protocol, sc.scheduler, sc.horizon);
}

/// Index of the last transient fault in a run (0 when there is none).
inline std::size_t last_transient_fault(const Run& run) {
    std::size_t last = 0;
    for (const auto& s : run.steps) {
        for (const auto& f : s.faults) {
            if (f.kind == FaultEvent::Kind::Transient) {
                last = s.index;
            }
        }
    }
    return last;
}

inline bool has_transient_fault(const Run& run) {
    for (const auto& s : run.steps) {
        for (const auto& f : s.faults) {
            if (f.kind == FaultEvent::Kind::Transient) {
                return true;
            }
        }
    }
    return false;
}

/// Parties that crashed or turned Byzantine anywhere in the run.
inline std::vector<bool> faulty_parties(const Run& run) {
    std::vector<bool> out(run.topo.n, false);
    for (PartyId p = 0; p < run.topo.n; ++p) {
        out[p] = run.initial.config.crashed[p] || run.initial.config.byzantine[p];
    }
    for (const auto& s : run.steps) {
        for (const auto& f : s.faults) {
            if (f.kind != FaultEvent::Kind::Transient) {
                out[f.party] = true;
            }
        }
    }
    return out;
}

} // namespace surb
