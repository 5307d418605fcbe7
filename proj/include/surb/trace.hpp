#pragma once

// Canonical line-oriented trace format for recorded runs.
//
//   trace n=3 sender=0 capacity=2 mode=fully-bounded alphabet=0,1 protocol=surb input=repeat(0)
//   init party=1 state=-1,-1,0 crashed=0 byzantine=0
//   init link=0>1 msgs=1,1
//   init cursor=0
//   fault-detail step=4 kind=transient party=1 state=-1,1,2
//   fault-detail step=4 kind=transient link=0>1 msgs=0
//   step=4 party=1 ev=recv:0>1:0 sends=- deliver=- fault=transient state=-1,0,1
//   snapshot=12 counts=0,1,0,0,0,0,0,0,0,0,0,0
//   end steps=5
//
// Sends are `dst:m`, `dst:m:lost` (the new copy was dropped) or
// `dst:m:evict=x` (pending copy x was dropped to make room).

#include "surb/engine.hpp"
#include "surb/errors.hpp"

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace surb {

struct TraceSnapshot {
    std::size_t step = 0;
    std::vector<std::int64_t> counts;

    bool operator==(const TraceSnapshot&) const = default;
};

struct Trace {
    Run run;
    std::vector<TraceSnapshot> snapshots;
};

inline const char* to_string(Mode m) { return m == Mode::SemiBounded ? "semi-bounded" : "fully-bounded"; }

inline std::string to_string(const InputSpec& in) {
    switch (in.kind) {
    case InputSpec::Kind::Repeat:
        return "repeat(" + std::to_string(in.value) + ")";
    case InputSpec::Kind::Incremental:
        return "incremental";
    case InputSpec::Kind::Explicit: {
        std::string s = "explicit(";
        for (std::size_t k = 0; k < in.values.size(); ++k) {
            s += (k ? "," : "") + std::to_string(in.values[k]);
        }
        return s + ")";
    }
    }
    return "?";
}

namespace detail {

template <class T>
std::string join(const std::vector<T>& v) {
    if (v.empty()) {
        return "-";
    }
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        s += (k ? "," : "") + std::to_string(static_cast<std::int64_t>(v[k]));
    }
    return s;
}

inline std::string link_str(LinkId l) { return std::to_string(l.src) + ">" + std::to_string(l.dst); }

inline std::string fault_tag(const FaultEvent& f) {
    switch (f.kind) {
    case FaultEvent::Kind::Crash:
        return "crash:" + std::to_string(f.party);
    case FaultEvent::Kind::Transient:
        return "transient";
    case FaultEvent::Kind::ByzantineAssume:
        return "byz:" + std::to_string(f.party);
    }
    return "?";
}

} // namespace detail

inline void write_trace(std::ostream& os, const Run& run, const std::vector<TraceSnapshot>& snapshots = {}) {
    const auto& t = run.topo;
    os << "trace n=" << t.n << " sender=" << t.sender << " capacity=" << t.capacity << " mode=" << to_string(t.mode)
       << " alphabet=";
    for (std::size_t k = 0; k < t.alphabet; ++k) {
        os << (k ? "," : "") << k;
    }
    os << " protocol=" << run.protocol << " input=" << to_string(run.input) << '\n';
    const auto& c = run.initial.config;
    for (PartyId p = 0; p < t.n; ++p) {
        os << "init party=" << p << " state=" << detail::join(c.states[p]) << " crashed=" << (c.crashed[p] ? 1 : 0)
           << " byzantine=" << (c.byzantine[p] ? 1 : 0) << '\n';
    }
    for (std::size_t j = 0; j < run.initial.links.size(); ++j) {
        if (!run.initial.links[j].pending.empty()) {
            os << "init link=" << detail::link_str(link_at(j, t.n))
               << " msgs=" << detail::join(run.initial.links[j].pending) << '\n';
        }
    }
    os << "init cursor=" << c.input_cursor << '\n';
    for (const auto& s : run.steps) {
        for (const auto& f : s.faults) {
            const std::string kind = f.kind == FaultEvent::Kind::Transient ? "transient" : detail::fault_tag(f);
            for (const auto& [p, st] : f.overwrites) {
                os << "fault-detail step=" << s.index << " kind=" << kind << " party=" << p
                   << " state=" << detail::join(st) << '\n';
            }
            for (const auto& [l, msgs] : f.injections) {
                os << "fault-detail step=" << s.index << " kind=" << kind << " link=" << detail::link_str(l)
                   << " msgs=" << detail::join(msgs) << '\n';
            }
        }
        os << "step=" << s.index << " party=" << s.party << " ev=";
        switch (s.event.kind) {
        case Event::Kind::Receive:
            os << "recv:" << s.event.src << '>' << s.party << ':' << static_cast<int>(s.event.msg);
            break;
        case Event::Kind::ReadInput:
            os << "input:" << static_cast<int>(s.event.msg);
            break;
        case Event::Kind::NoReceive:
            os << "none";
            break;
        }
        os << " sends=";
        if (s.sends.empty()) {
            os << '-';
        }
        for (std::size_t k = 0; k < s.sends.size(); ++k) {
            const auto& sr = s.sends[k];
            os << (k ? "," : "") << sr.dst << ':' << static_cast<int>(sr.msg);
            if (sr.loss == SendRecord::Loss::DroppedNew) {
                os << ":lost";
            } else if (sr.loss == SendRecord::Loss::Evicted) {
                os << ":evict=" << static_cast<int>(sr.evicted);
            }
        }
        os << " deliver=";
        if (s.delivered) {
            os << static_cast<int>(*s.delivered);
        } else {
            os << '-';
        }
        os << " fault=";
        if (s.faults.empty()) {
            os << '-';
        }
        for (std::size_t k = 0; k < s.faults.size(); ++k) {
            os << (k ? "+" : "") << detail::fault_tag(s.faults[k]);
        }
        os << " state=" << detail::join(s.post_state) << '\n';
    }
    for (const auto& snap : snapshots) {
        os << "snapshot=" << snap.step << " counts=" << detail::join(snap.counts) << '\n';
    }
    os << "end steps=" << run.steps.size() << '\n';
}

inline std::string trace_to_string(const Run& run, const std::vector<TraceSnapshot>& snapshots = {}) {
    std::ostringstream os;
    write_trace(os, run, snapshots);
    return os.str();
}

namespace detail {

class TraceReader {
public:
    explicit TraceReader(std::istream& in) : in_(in) {}

    Trace parse() {
        Trace tr;
        std::string line;
        bool header = false;
        bool ended = false;
        std::map<std::size_t, std::vector<FaultEvent>> details;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            if (line.empty()) {
                continue;
            }
            if (ended) {
                fail("content after end line");
            }
            auto fields = split(line);
            const std::string_view head = fields.front().first;
            if (!header) {
                if (line.rfind("trace ", 0) != 0) {
                    fail("expected trace header");
                }
                parse_header(fields, tr.run);
                header = true;
            } else if (head == "init") {
                parse_init(fields, tr.run);
            } else if (head == "fault-detail") {
                parse_detail(fields, tr.run, details);
            } else if (head == "step") {
                parse_step(fields, tr.run, details);
            } else if (head == "snapshot") {
                tr.snapshots.push_back({to_size(fields[0].second, "snapshot"), ints(get(fields, "counts"))});
            } else if (head == "end") {
                if (to_size(get(fields, "steps"), "steps") != tr.run.steps.size()) {
                    fail("end line step count does not match");
                }
                ended = true;
            } else {
                fail("unknown line kind '" + std::string(head) + "'");
            }
        }
        if (!header) {
            line_no_ = std::max<std::size_t>(line_no_, 1);
            fail("empty trace");
        }
        if (!ended) {
            fail("truncated trace: missing end line");
        }
        if (!details.empty()) {
            fail("fault-detail without a matching step");
        }
        return tr;
    }

private:
    using Fields = std::vector<std::pair<std::string_view, std::string_view>>;

    [[noreturn]] void fail(const std::string& what) const { throw TraceParseError(line_no_, what); }

    Fields split(std::string_view line) {
        Fields out;
        std::size_t pos = 0;
        while (pos < line.size()) {
            std::size_t end = line.find(' ', pos);
            if (end == std::string_view::npos) {
                end = line.size();
            }
            std::string_view tok = line.substr(pos, end - pos);
            if (!tok.empty()) {
                const std::size_t eq = tok.find('=');
                if (eq == std::string_view::npos) {
                    out.emplace_back(tok, std::string_view{});
                } else {
                    out.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
                }
            }
            pos = end + 1;
        }
        return out;
    }

    std::string_view get(const Fields& f, std::string_view key) const {
        for (const auto& [k, v] : f) {
            if (k == key) {
                return v;
            }
        }
        fail("missing field '" + std::string(key) + "'");
    }

    std::optional<std::string_view> find(const Fields& f, std::string_view key) const {
        for (const auto& [k, v] : f) {
            if (k == key) {
                return v;
            }
        }
        return std::nullopt;
    }

    std::int64_t to_int(std::string_view s, std::string_view what) const {
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            fail("bad number '" + std::string(s) + "' in " + std::string(what));
        }
        return v;
    }

    std::size_t to_size(std::string_view s, std::string_view what) const {
        const auto v = to_int(s, what);
        if (v < 0) {
            fail("negative value in " + std::string(what));
        }
        return static_cast<std::size_t>(v);
    }

    Symbol to_symbol(std::string_view s, const Run& run) const {
        const auto v = to_size(s, "symbol");
        if (v >= run.topo.alphabet) {
            fail("symbol " + std::string(s) + " outside the alphabet");
        }
        return static_cast<Symbol>(v);
    }

    PartyId to_party(std::string_view s, const Run& run) const {
        const auto v = to_size(s, "party");
        if (v >= run.topo.n) {
            fail("party " + std::string(s) + " out of range");
        }
        return static_cast<PartyId>(v);
    }

    std::vector<std::int64_t> ints(std::string_view s) const {
        std::vector<std::int64_t> out;
        if (s == "-") {
            return out;
        }
        std::size_t pos = 0;
        while (pos <= s.size()) {
            std::size_t end = s.find(',', pos);
            if (end == std::string_view::npos) {
                end = s.size();
            }
            out.push_back(to_int(s.substr(pos, end - pos), "list"));
            pos = end + 1;
        }
        return out;
    }

    LocalState state(std::string_view s) const {
        LocalState out;
        for (auto v : ints(s)) {
            out.push_back(static_cast<std::int32_t>(v));
        }
        return out;
    }

    std::vector<Symbol> symbols(std::string_view s, const Run& run) const {
        std::vector<Symbol> out;
        for (auto v : ints(s)) {
            if (v < 0 || static_cast<std::size_t>(v) >= run.topo.alphabet) {
                fail("symbol outside the alphabet");
            }
            out.push_back(static_cast<Symbol>(v));
        }
        return out;
    }

    LinkId link(std::string_view s, const Run& run) const {
        const std::size_t gt = s.find('>');
        if (gt == std::string_view::npos) {
            fail("bad link '" + std::string(s) + "'");
        }
        LinkId l{to_party(s.substr(0, gt), run), to_party(s.substr(gt + 1), run)};
        if (l.src == l.dst) {
            fail("self link");
        }
        return l;
    }

    InputSpec input(std::string_view s) const {
        if (s == "incremental") {
            return InputSpec::incremental();
        }
        auto inner = [&](std::string_view prefix) -> std::optional<std::string_view> {
            if (s.rfind(prefix, 0) == 0 && s.back() == ')') {
                return s.substr(prefix.size(), s.size() - prefix.size() - 1);
            }
            return std::nullopt;
        };
        if (auto v = inner("repeat(")) {
            return InputSpec::repeat_of(static_cast<Symbol>(to_size(*v, "input")));
        }
        if (auto v = inner("explicit(")) {
            Seq vals;
            if (!v->empty()) {
                for (auto x : ints(*v)) {
                    vals.push_back(static_cast<Symbol>(x));
                }
            }
            return InputSpec::explicit_list(std::move(vals));
        }
        fail("bad input '" + std::string(s) + "'");
    }

    void parse_header(const Fields& f, Run& run) {
        run.topo.n = to_size(get(f, "n"), "n");
        if (run.topo.n < 2 || run.topo.n > 64) {
            fail("n out of range");
        }
        run.topo.sender = to_party(get(f, "sender"), run);
        run.topo.capacity = static_cast<std::uint32_t>(to_size(get(f, "capacity"), "capacity"));
        const auto mode = get(f, "mode");
        if (mode == "semi-bounded") {
            run.topo.mode = Mode::SemiBounded;
        } else if (mode == "fully-bounded") {
            run.topo.mode = Mode::FullyBounded;
        } else {
            fail("bad mode '" + std::string(mode) + "'");
        }
        const auto alpha = ints(get(f, "alphabet"));
        for (std::size_t k = 0; k < alpha.size(); ++k) {
            if (alpha[k] != static_cast<std::int64_t>(k)) {
                fail("alphabet must be 0,1,...,M-1");
            }
        }
        if (alpha.empty() || alpha.size() > 10) {
            fail("alphabet size out of range");
        }
        run.topo.alphabet = alpha.size();
        run.protocol = std::string(get(f, "protocol"));
        run.input = input(get(f, "input"));
        run.initial.config.states.assign(run.topo.n, LocalState{});
        run.initial.config.crashed.assign(run.topo.n, false);
        run.initial.config.byzantine.assign(run.topo.n, false);
        run.initial.links.assign(link_count(run.topo.n), LinkState{});
        for (auto& l : run.initial.links) {
            if (run.topo.mode == Mode::FullyBounded) {
                l.capacity = run.topo.capacity;
            }
        }
    }

    void parse_init(const Fields& f, Run& run) {
        if (auto p = find(f, "party")) {
            const PartyId id = to_party(*p, run);
            run.initial.config.states[id] = state(get(f, "state"));
            run.initial.config.crashed[id] = get(f, "crashed") == "1";
            run.initial.config.byzantine[id] = get(f, "byzantine") == "1";
        } else if (auto l = find(f, "link")) {
            run.initial.link(link(*l, run)).assign(symbols(get(f, "msgs"), run));
        } else if (auto c = find(f, "cursor")) {
            run.initial.config.input_cursor = to_size(*c, "cursor");
        } else {
            fail("unknown init line");
        }
    }

    void parse_detail(const Fields& f, const Run& run, std::map<std::size_t, std::vector<FaultEvent>>& details) {
        const std::size_t step = to_size(get(f, "step"), "step");
        const auto kind = get(f, "kind");
        auto& list = details[step];
        FaultEvent* ev = nullptr;
        if (kind == "transient") {
            if (list.empty() || list.back().kind != FaultEvent::Kind::Transient) {
                list.push_back(FaultEvent::transient(step, {}, {}));
            }
            ev = &list.back();
        } else if (kind.rfind("byz:", 0) == 0) {
            FaultEvent e;
            e.kind = FaultEvent::Kind::ByzantineAssume;
            e.at = step;
            e.party = to_party(kind.substr(4), run);
            list.push_back(std::move(e));
            ev = &list.back();
        } else {
            fail("bad fault-detail kind '" + std::string(kind) + "'");
        }
        if (auto p = find(f, "party")) {
            ev->overwrites.emplace_back(to_party(*p, run), state(get(f, "state")));
        } else if (auto l = find(f, "link")) {
            ev->injections.emplace_back(link(*l, run), symbols(get(f, "msgs"), run));
        } else {
            fail("fault-detail needs party= or link=");
        }
    }

    void parse_step(const Fields& f, Run& run, std::map<std::size_t, std::vector<FaultEvent>>& details) {
        StepRecord s;
        s.index = to_size(f[0].second, "step");
        if (s.index != run.steps.size()) {
            fail("step index " + std::to_string(s.index) + " out of sequence");
        }
        s.party = to_party(get(f, "party"), run);
        const auto ev = get(f, "ev");
        if (ev == "none") {
            s.event = Event::none();
        } else if (ev.rfind("input:", 0) == 0) {
            s.event = Event::input(to_symbol(ev.substr(6), run));
        } else if (ev.rfind("recv:", 0) == 0) {
            const auto body = ev.substr(5);
            const auto colon = body.rfind(':');
            if (colon == std::string_view::npos) {
                fail("bad receive event");
            }
            const LinkId l = link(body.substr(0, colon), run);
            if (l.dst != s.party) {
                fail("receive on a link not ending at the stepping party");
            }
            s.event = Event::receive(l.src, to_symbol(body.substr(colon + 1), run));
        } else {
            fail("bad event '" + std::string(ev) + "'");
        }
        const auto sends = get(f, "sends");
        if (sends != "-") {
            std::size_t pos = 0;
            while (pos <= sends.size()) {
                std::size_t end = sends.find(',', pos);
                if (end == std::string_view::npos) {
                    end = sends.size();
                }
                s.sends.push_back(send(sends.substr(pos, end - pos), run));
                pos = end + 1;
            }
        }
        const auto del = get(f, "deliver");
        if (del != "-") {
            s.delivered = to_symbol(del, run);
        }
        const auto fault = get(f, "fault");
        auto it = details.find(s.index);
        std::vector<FaultEvent> pending = it == details.end() ? std::vector<FaultEvent>{} : std::move(it->second);
        if (it != details.end()) {
            details.erase(it);
        }
        if (fault != "-") {
            std::size_t pos = 0;
            std::size_t detail_pos = 0;
            while (pos <= fault.size()) {
                std::size_t end = fault.find('+', pos);
                if (end == std::string_view::npos) {
                    end = fault.size();
                }
                const auto tag = fault.substr(pos, end - pos);
                if (tag.rfind("crash:", 0) == 0) {
                    s.faults.push_back(FaultEvent::crash(to_party(tag.substr(6), run), s.index));
                } else if (tag == "transient" || tag.rfind("byz:", 0) == 0) {
                    const bool transient = tag == "transient";
                    if (detail_pos < pending.size() &&
                        (pending[detail_pos].kind == FaultEvent::Kind::Transient) == transient) {
                        s.faults.push_back(std::move(pending[detail_pos++]));
                    } else if (transient) {
                        s.faults.push_back(FaultEvent::transient(s.index, {}, {}));
                    } else {
                        FaultEvent e;
                        e.kind = FaultEvent::Kind::ByzantineAssume;
                        e.at = s.index;
                        e.party = to_party(tag.substr(4), run);
                        s.faults.push_back(std::move(e));
                    }
                    if (!transient && s.faults.back().party != to_party(tag.substr(4), run)) {
                        fail("Byzantine fault party mismatch");
                    }
                } else {
                    fail("bad fault tag '" + std::string(tag) + "'");
                }
                pos = end + 1;
            }
            if (detail_pos != pending.size()) {
                fail("fault-detail lines do not match the step's fault field");
            }
        } else if (!pending.empty()) {
            fail("fault-detail lines for a step without faults");
        }
        s.post_state = state(get(f, "state"));
        run.steps.push_back(std::move(s));
    }

    SendRecord send(std::string_view tok, const Run& run) const {
        SendRecord r;
        const auto c1 = tok.find(':');
        if (c1 == std::string_view::npos) {
            fail("bad send '" + std::string(tok) + "'");
        }
        r.dst = to_party(tok.substr(0, c1), run);
        auto rest = tok.substr(c1 + 1);
        const auto c2 = rest.find(':');
        r.msg = to_symbol(rest.substr(0, c2), run);
        if (c2 != std::string_view::npos) {
            const auto flag = rest.substr(c2 + 1);
            if (flag == "lost") {
                r.loss = SendRecord::Loss::DroppedNew;
            } else if (flag.rfind("evict=", 0) == 0) {
                r.loss = SendRecord::Loss::Evicted;
                r.evicted = to_symbol(flag.substr(6), run);
            } else {
                fail("bad send flag '" + std::string(flag) + "'");
            }
        }
        return r;
    }

    std::istream& in_;
    std::size_t line_no_ = 0;
};

} // namespace detail

/// Parses a canonical trace; throws TraceParseError naming the line.
inline Trace read_trace(std::istream& in) { return detail::TraceReader(in).parse(); }

inline Trace trace_from_string(const std::string& text) {
    std::istringstream in(text);
    return read_trace(in);
}

} // namespace surb
