#pragma once

// Scenario files: flat key=value lines, `#` comments, repeatable `fault=`
// and `step=` lines.
//
//   n=3
//   sender=0
//   capacity=2
//   mode=fully-bounded
//   alphabet=0,1
//   protocol=surb
//   input=repeat(0)
//   scheduler=seeded            # or scripted, with step= lines
//   seed=1
//   window=0                    # 0 selects 64*n*capacity
//   dormant=2                   # optional, comma list
//   drop=drop-new               # drop-oldest | drop-seeded-random
//   drop_seed=0
//   horizon=500
//   max_reads=100               # optional
//   extra_send=0
//   adversary=0                 # sweeps: one generated transient fault per seed
//   fault=crash party=1 at=0
//   fault=transient at=5 state=1:-1,1,2 link=0>1:1,1
//   step=1:recv:0:1             # scripted: party:recv:src:msg | party:input | party:none

#include "surb/engine.hpp"
#include "surb/errors.hpp"
#include "surb/trace.hpp"

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace surb {

inline const char* to_string(DropPolicy::Kind k) {
    switch (k) {
    case DropPolicy::Kind::DropNew:
        return "drop-new";
    case DropPolicy::Kind::DropOldest:
        return "drop-oldest";
    case DropPolicy::Kind::DropSeededRandom:
        return "drop-seeded-random";
    }
    return "?";
}

namespace detail {

class ScenarioReader {
public:
    Scenario parse(std::istream& in) {
        Scenario sc;
        std::string raw;
        std::set<std::string> seen;
        while (std::getline(in, raw)) {
            ++line_;
            std::string_view line = raw;
            if (auto hash = line.find('#'); hash != std::string_view::npos) {
                line = line.substr(0, hash);
            }
            line = trim(line);
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                fail("", "expected key=value");
            }
            const std::string key(trim(line.substr(0, eq)));
            const std::string_view value = trim(line.substr(eq + 1));
            if (key != "fault" && key != "step" && !seen.insert(key).second) {
                fail(key, "duplicate key");
            }
            field(sc, key, value);
        }
        if (!seen.count("n")) {
            fail("n", "missing required key");
        }
        for (const auto& f : sc.faults) {
            for (const auto& [l, msgs] : f.injections) {
                if (l.src >= sc.topo.n || l.dst >= sc.topo.n) {
                    fail("fault", "link outside the topology");
                }
            }
        }
        return sc;
    }

private:
    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw ScenarioError("line " + std::to_string(line_) + (field.empty() ? "" : ", field '" + field + "'") +
                            ": " + what);
    }

    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
            s.remove_prefix(1);
        }
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
            s.remove_suffix(1);
        }
        return s;
    }

    std::int64_t num(const std::string& field, std::string_view s) const {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail(field, "not a number: '" + std::string(s) + "'");
        }
        return v;
    }

    std::uint64_t unum(const std::string& field, std::string_view s) const {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail(field, "not a non-negative number: '" + std::string(s) + "'");
        }
        return v;
    }

    std::vector<std::int64_t> list(const std::string& field, std::string_view s) const {
        std::vector<std::int64_t> out;
        if (s.empty() || s == "-") {
            return out;
        }
        std::size_t pos = 0;
        while (pos <= s.size()) {
            auto end = s.find(',', pos);
            if (end == std::string_view::npos) {
                end = s.size();
            }
            out.push_back(num(field, trim(s.substr(pos, end - pos))));
            pos = end + 1;
        }
        return out;
    }

    bool flag(const std::string& field, std::string_view s) const {
        if (s == "1" || s == "true") {
            return true;
        }
        if (s == "0" || s == "false") {
            return false;
        }
        fail(field, "expected 0 or 1");
    }

    Symbol symbol(const std::string& field, std::int64_t v) const {
        if (v < 0 || v > 9) {
            fail(field, "symbol out of range");
        }
        return static_cast<Symbol>(v);
    }

    LinkId link(const std::string& field, std::string_view s) const {
        const auto gt = s.find('>');
        if (gt == std::string_view::npos) {
            fail(field, "bad link '" + std::string(s) + "'");
        }
        return {static_cast<PartyId>(unum(field, s.substr(0, gt))), static_cast<PartyId>(unum(field, s.substr(gt + 1)))};
    }

    void field(Scenario& sc, const std::string& key, std::string_view v) {
        if (key == "n") {
            sc.topo.n = unum(key, v);
        } else if (key == "sender") {
            sc.topo.sender = static_cast<PartyId>(unum(key, v));
        } else if (key == "capacity") {
            sc.topo.capacity = static_cast<std::uint32_t>(unum(key, v));
        } else if (key == "mode") {
            if (v == "semi-bounded") {
                sc.topo.mode = Mode::SemiBounded;
            } else if (v == "fully-bounded") {
                sc.topo.mode = Mode::FullyBounded;
            } else {
                fail(key, "expected semi-bounded or fully-bounded");
            }
        } else if (key == "alphabet") {
            const auto a = list(key, v);
            if (a.empty()) {
                fail(key, "alphabet must be nonempty");
            }
            for (std::size_t k = 0; k < a.size(); ++k) {
                if (a[k] != static_cast<std::int64_t>(k)) {
                    fail(key, "alphabet must list 0,1,...,M-1");
                }
            }
            sc.topo.alphabet = a.size();
        } else if (key == "protocol") {
            sc.protocol = std::string(v);
        } else if (key == "input") {
            sc.input = input(key, v);
        } else if (key == "scheduler") {
            if (v == "seeded") {
                sc.scheduler.kind = SchedulerPolicy::Kind::SeededRandom;
            } else if (v == "scripted") {
                sc.scheduler.kind = SchedulerPolicy::Kind::Scripted;
            } else {
                fail(key, "expected seeded or scripted");
            }
        } else if (key == "seed") {
            sc.scheduler.seed = unum(key, v);
        } else if (key == "window") {
            sc.scheduler.window = unum(key, v);
        } else if (key == "dormant") {
            for (auto p : list(key, v)) {
                sc.scheduler.dormant.push_back(static_cast<PartyId>(p));
            }
        } else if (key == "drop") {
            if (v == "drop-new") {
                sc.drop.kind = DropPolicy::Kind::DropNew;
            } else if (v == "drop-oldest") {
                sc.drop.kind = DropPolicy::Kind::DropOldest;
            } else if (v == "drop-seeded-random") {
                sc.drop.kind = DropPolicy::Kind::DropSeededRandom;
            } else {
                fail(key, "unknown drop policy");
            }
        } else if (key == "drop_seed") {
            sc.drop.seed = unum(key, v);
        } else if (key == "horizon") {
            sc.horizon = unum(key, v);
        } else if (key == "max_reads") {
            sc.max_reads = unum(key, v);
        } else if (key == "extra_send") {
            sc.extra_send = flag(key, v);
        } else if (key == "adversary") {
            if (v == "transient") {
                sc.adversary = true;
            } else {
                sc.adversary = flag(key, v);
            }
        } else if (key == "fault") {
            sc.faults.push_back(fault(key, v));
        } else if (key == "step") {
            sc.scheduler.script.push_back(step(key, v));
        } else {
            fail(key, "unknown key");
        }
    }

    InputSpec input(const std::string& key, std::string_view v) const {
        if (v == "incremental") {
            return InputSpec::incremental();
        }
        auto inner = [&](std::string_view prefix) -> std::optional<std::string_view> {
            if (v.rfind(prefix, 0) == 0 && v.back() == ')') {
                return v.substr(prefix.size(), v.size() - prefix.size() - 1);
            }
            return std::nullopt;
        };
        if (auto x = inner("repeat(")) {
            return InputSpec::repeat_of(symbol(key, num(key, *x)));
        }
        if (auto x = inner("explicit(")) {
            Seq vals;
            for (auto s : list(key, *x)) {
                vals.push_back(symbol(key, s));
            }
            return InputSpec::explicit_list(std::move(vals));
        }
        fail(key, "expected repeat(v), incremental or explicit(a,b,...)");
    }

    FaultEvent fault(const std::string& key, std::string_view v) const {
        std::vector<std::string_view> toks;
        std::size_t pos = 0;
        while (pos < v.size()) {
            auto end = v.find(' ', pos);
            if (end == std::string_view::npos) {
                end = v.size();
            }
            if (end > pos) {
                toks.push_back(v.substr(pos, end - pos));
            }
            pos = end + 1;
        }
        if (toks.empty()) {
            fail(key, "empty fault");
        }
        FaultEvent f;
        bool have_at = false;
        bool have_party = false;
        if (toks[0] == "crash") {
            f.kind = FaultEvent::Kind::Crash;
        } else if (toks[0] == "transient") {
            f.kind = FaultEvent::Kind::Transient;
        } else {
            fail(key, "fault kind must be crash or transient");
        }
        for (std::size_t k = 1; k < toks.size(); ++k) {
            const auto eq = toks[k].find('=');
            if (eq == std::string_view::npos) {
                fail(key, "bad fault token '" + std::string(toks[k]) + "'");
            }
            const auto name = toks[k].substr(0, eq);
            const auto val = toks[k].substr(eq + 1);
            if (name == "at") {
                f.at = unum(key, val);
                have_at = true;
            } else if (name == "party" && f.kind == FaultEvent::Kind::Crash) {
                f.party = static_cast<PartyId>(unum(key, val));
                have_party = true;
            } else if (name == "state" && f.kind == FaultEvent::Kind::Transient) {
                const auto colon = val.find(':');
                if (colon == std::string_view::npos) {
                    fail(key, "state needs party:values");
                }
                LocalState st;
                for (auto x : list(key, val.substr(colon + 1))) {
                    st.push_back(static_cast<std::int32_t>(x));
                }
                f.overwrites.emplace_back(static_cast<PartyId>(unum(key, val.substr(0, colon))), std::move(st));
            } else if (name == "link" && f.kind == FaultEvent::Kind::Transient) {
                const auto colon = val.find(':');
                if (colon == std::string_view::npos) {
                    fail(key, "link needs src>dst:msgs");
                }
                std::vector<Symbol> msgs;
                for (auto x : list(key, val.substr(colon + 1))) {
                    msgs.push_back(symbol(key, x));
                }
                f.injections.emplace_back(link(key, val.substr(0, colon)), std::move(msgs));
            } else {
                fail(key, "unexpected fault token '" + std::string(name) + "'");
            }
        }
        if (!have_at) {
            fail(key, "fault needs at=");
        }
        if (f.kind == FaultEvent::Kind::Crash && !have_party) {
            fail(key, "crash needs party=");
        }
        return f;
    }

    ScriptedStep step(const std::string& key, std::string_view v) const {
        std::vector<std::string_view> parts;
        std::size_t pos = 0;
        while (pos <= v.size()) {
            auto end = v.find(':', pos);
            if (end == std::string_view::npos) {
                end = v.size();
            }
            parts.push_back(v.substr(pos, end - pos));
            pos = end + 1;
        }
        ScriptedStep s;
        if (parts.size() < 2) {
            fail(key, "expected party:kind");
        }
        s.party = static_cast<PartyId>(unum(key, parts[0]));
        if (parts[1] == "input" && parts.size() == 2) {
            s.kind = Event::Kind::ReadInput;
        } else if (parts[1] == "none" && parts.size() == 2) {
            s.kind = Event::Kind::NoReceive;
        } else if (parts[1] == "recv" && parts.size() == 4) {
            s.kind = Event::Kind::Receive;
            s.src = static_cast<PartyId>(unum(key, parts[2]));
            s.msg = symbol(key, num(key, parts[3]));
        } else {
            fail(key, "expected party:input, party:none or party:recv:src:msg");
        }
        return s;
    }

    std::size_t line_ = 0;
};

} // namespace detail

inline Scenario read_scenario(std::istream& in) { return detail::ScenarioReader().parse(in); }

inline Scenario scenario_from_string(const std::string& text) {
    std::istringstream in(text);
    return read_scenario(in);
}

/// Canonical text form; parsing it yields an equal scenario.
inline std::string scenario_to_string(const Scenario& sc) {
    std::ostringstream os;
    const auto& t = sc.topo;
    os << "n=" << t.n << '\n' << "sender=" << t.sender << '\n' << "capacity=" << t.capacity << '\n';
    os << "mode=" << to_string(t.mode) << '\n' << "alphabet=";
    for (std::size_t k = 0; k < t.alphabet; ++k) {
        os << (k ? "," : "") << k;
    }
    os << '\n' << "protocol=" << sc.protocol << '\n' << "input=" << to_string(sc.input) << '\n';
    os << "scheduler=" << (sc.scheduler.kind == SchedulerPolicy::Kind::Scripted ? "scripted" : "seeded") << '\n';
    os << "seed=" << sc.scheduler.seed << '\n' << "window=" << sc.scheduler.window << '\n';
    if (!sc.scheduler.dormant.empty()) {
        os << "dormant=" << detail::join(sc.scheduler.dormant) << '\n';
    }
    os << "drop=" << to_string(sc.drop.kind) << '\n' << "drop_seed=" << sc.drop.seed << '\n';
    os << "horizon=" << sc.horizon << '\n';
    if (sc.max_reads) {
        os << "max_reads=" << *sc.max_reads << '\n';
    }
    os << "extra_send=" << (sc.extra_send ? 1 : 0) << '\n' << "adversary=" << (sc.adversary ? 1 : 0) << '\n';
    for (const auto& f : sc.faults) {
        if (f.kind == FaultEvent::Kind::ByzantineAssume) {
            throw ScenarioError("Byzantine faults cannot be written to scenario files");
        }
        if (f.kind == FaultEvent::Kind::Crash) {
            os << "fault=crash party=" << f.party << " at=" << f.at << '\n';
            continue;
        }
        os << "fault=transient at=" << f.at;
        for (const auto& [p, st] : f.overwrites) {
            os << " state=" << p << ':' << detail::join(st);
        }
        for (const auto& [l, msgs] : f.injections) {
            os << " link=" << detail::link_str(l) << ':' << detail::join(msgs);
        }
        os << '\n';
    }
    for (const auto& s : sc.scheduler.script) {
        os << "step=" << s.party << ':';
        switch (s.kind) {
        case Event::Kind::ReadInput:
            os << "input";
            break;
        case Event::Kind::NoReceive:
            os << "none";
            break;
        case Event::Kind::Receive:
            os << "recv:" << s.src << ':' << static_cast<int>(s.msg);
            break;
        }
        os << '\n';
    }
    return os.str();
}

inline bool same_fault(const FaultEvent& a, const FaultEvent& b) {
    return a.kind == b.kind && a.at == b.at && (a.kind == FaultEvent::Kind::Transient || a.party == b.party) &&
           a.overwrites == b.overwrites && a.injections == b.injections && a.script == b.script;
}

/// Field-wise equality of scenarios.
inline bool same_scenario(const Scenario& a, const Scenario& b) {
    if (!(a.topo == b.topo && a.protocol == b.protocol && a.input == b.input && a.horizon == b.horizon &&
          a.max_reads == b.max_reads && a.extra_send == b.extra_send && a.adversary == b.adversary &&
          a.drop.kind == b.drop.kind && a.drop.seed == b.drop.seed && a.scheduler.kind == b.scheduler.kind &&
          a.scheduler.seed == b.scheduler.seed && a.scheduler.window == b.scheduler.window &&
          a.scheduler.dormant == b.scheduler.dormant && a.scheduler.script.size() == b.scheduler.script.size() &&
          a.faults.size() == b.faults.size())) {
        return false;
    }
    for (std::size_t k = 0; k < a.faults.size(); ++k) {
        if (!same_fault(a.faults[k], b.faults[k])) {
            return false;
        }
    }
    for (std::size_t k = 0; k < a.scheduler.script.size(); ++k) {
        const auto& x = a.scheduler.script[k];
        const auto& y = b.scheduler.script[k];
        if (x.party != y.party || x.kind != y.kind ||
            (x.kind == Event::Kind::Receive && (x.src != y.src || x.msg != y.msg))) {
            return false;
        }
    }
    return true;
}

} // namespace surb
