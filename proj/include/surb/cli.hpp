#pragma once

// Command-line front end: run, check, search, sweep.
// Exit codes: 0 pass/found, 1 fail/absent, 2 usage or validation error.

#include "surb/datalink.hpp"
#include "surb/divergence.hpp"
#include "surb/protocols.hpp"
#include "surb/scenario.hpp"
#include "surb/surb.hpp"
#include "surb/trace.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace surb::cli {

enum Exit : int { Pass = 0, Fail = 1, Usage = 2 };

struct Options {
    std::string scenario;
    std::string trace;
    std::string contract = "datalink";
    std::string mode;
    std::string candidate;
    std::string out;
    std::string seeds;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> horizon;
};

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ScenarioError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ScenarioError("cannot write '" + path + "'");
    }
    out << text;
}

inline Mode parse_mode(const std::string& s) {
    if (s == "semi-bounded" || s == "semi") {
        return Mode::SemiBounded;
    }
    if (s == "fully-bounded" || s == "fully") {
        return Mode::FullyBounded;
    }
    throw ScenarioError("unknown mode '" + s + "'");
}

// "A..B" inclusive; B < A is an empty range.
inline std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& s) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
        throw ScenarioError("seed range must look like A..B");
    }
    try {
        std::size_t used = 0;
        const std::string a = s.substr(0, dots);
        const std::string b = s.substr(dots + 2);
        const std::uint64_t lo = std::stoull(a, &used);
        if (used != a.size()) {
            throw std::invalid_argument(a);
        }
        const std::uint64_t hi = std::stoull(b, &used);
        if (used != b.size()) {
            throw std::invalid_argument(b);
        }
        return {lo, hi};
    } catch (const std::logic_error&) {
        throw ScenarioError("bad seed range '" + s + "'");
    }
}

inline Scenario load_scenario(const Options& o) {
    if (o.scenario.empty()) {
        throw ScenarioError("--scenario is required");
    }
    Scenario sc = scenario_from_string(read_file(o.scenario));
    if (!o.mode.empty()) {
        sc.topo.mode = parse_mode(o.mode);
    }
    if (o.horizon) {
        sc.horizon = *o.horizon;
    }
    validate(sc);
    return sc;
}

struct Verdict {
    bool pass = false;
    std::size_t max_ghost = 0;
    std::string report;
};

inline Verdict check(const Run& run, const std::string& contract) {
    Verdict v;
    if (contract == "datalink") {
        const ContractReport r = check_contract(run);
        v.pass = r.pass();
        v.max_ghost = r.max_ghost();
        v.report = r.text();
    } else if (contract == "surb-s1") {
        const SuffixReport r = check_S1(run);
        v.pass = r.s1;
        v.report = r.text() + "contract=surb-s1 " + (v.pass ? "pass" : "fail") + '\n';
    } else if (contract == "surb-s2") {
        const SuffixReport r = check_S2(run);
        v.pass = r.s2();
        v.report = r.text() + "contract=surb-s2 " + (v.pass ? "pass" : "fail") + '\n';
    } else {
        throw ScenarioError("unknown contract '" + contract + "'");
    }
    return v;
}

inline std::string summary(const Witness& w, const std::string& candidate, Mode mode, std::uint64_t seed) {
    std::ostringstream os;
    os << "candidate=" << candidate << " mode=" << to_string(mode) << " seed=" << seed << '\n';
    os << "cuts steps=" << w.s1 << ',' << w.s2 << ',' << w.s3 << " reads=" << w.c1 << ',' << w.c2 << ',' << w.c3
       << '\n';
    os << "dormant=" << w.dormant << " r5_steps=" << w.r5.steps.size() << " r6_steps=" << w.r6.steps.size() << '\n';
    for (PartyId p = 0; p < w.seq5.size(); ++p) {
        auto show = [](const Seq& s) { return s.empty() ? std::string("-") : seq_to_string(s); };
        os << "party=" << p << " r5=" << show(w.seq5[p]) << " r6=" << show(w.seq6[p]) << '\n';
    }
    if (auto d = w.divergence()) {
        os << "diverges party=" << d->first << " position=" << d->second << '\n';
    }
    if (w.wake) {
        os << "wake_steps=" << w.wake->steps.size() << '\n';
    }
    os << "verified=" << (verify_witness(w, w.r5.initial) ? 1 : 0) << '\n';
    return os.str();
}

} // namespace detail

inline int cmd_run(const Options& o, std::ostream& out) {
    Scenario sc = detail::load_scenario(o);
    if (o.seed) {
        sc = seeded(sc, *o.seed);
    }
    const Run run = execute(sc, make_protocol(sc));
    const std::string text = trace_to_string(run);
    if (o.out.empty()) {
        out << text;
    } else {
        detail::write_file(o.out, text);
        out << "wrote " << o.out << " steps=" << run.steps.size() << '\n';
    }
    return Pass;
}

inline int cmd_check(const Options& o, std::ostream& out) {
    Run run;
    if (!o.trace.empty()) {
        run = trace_from_string(detail::read_file(o.trace)).run;
    } else {
        Scenario sc = detail::load_scenario(o);
        if (o.seed) {
            sc = seeded(sc, *o.seed);
        }
        run = execute(sc, make_protocol(sc));
    }
    const detail::Verdict v = detail::check(run, o.contract);
    out << v.report;
    return v.pass ? Pass : Fail;
}

inline int cmd_search(const Options& o, std::ostream& out) {
    const std::string candidate = o.candidate.empty() ? "echo" : o.candidate;
    const std::size_t horizon = o.horizon.value_or(100000);
    const std::uint64_t seed = o.seed.value_or(1);
    std::optional<Witness> w;
    Mode mode = Mode::SemiBounded;
    if (candidate == "byzantine-surb") {
        mode = Mode::FullyBounded;
        if (!o.mode.empty() && detail::parse_mode(o.mode) != mode) {
            throw ScenarioError("byzantine-surb runs in fully-bounded mode only");
        }
        w = byzantine_scenario(1, 3, horizon, seed);
    } else {
        SearchOptions opt;
        if (!o.mode.empty()) {
            mode = detail::parse_mode(o.mode);
        }
        Topology topo{opt.n, 0, mode, opt.capacity, opt.alphabet};
        if (!o.scenario.empty()) {
            const Scenario sc = detail::load_scenario(o);
            topo = sc.topo;
            mode = topo.mode;
            opt.n = topo.n;
            opt.capacity = topo.capacity;
            opt.alphabet = topo.alphabet;
            opt.input = sc.input;
        } else if (candidate == "surb") {
            opt.input = InputSpec::repeat_of(1);
        }
        const ProtocolSpec protocol = make_protocol(candidate, topo);
        w = search(protocol, mode, horizon, seed, opt);
    }
    if (!w) {
        out << "candidate=" << candidate << " mode=" << to_string(mode) << " horizon=" << horizon
            << " witness=absent\n";
        return Fail;
    }
    const std::string text = detail::summary(*w, candidate, mode, seed);
    out << text << "witness=found\n";
    if (!o.out.empty()) {
        detail::write_file(o.out + ".r5.trace", trace_to_string(w->r5));
        detail::write_file(o.out + ".r6.trace", trace_to_string(w->r6));
        detail::write_file(o.out + ".summary", text);
    }
    return Pass;
}

inline int cmd_sweep(const Options& o, std::ostream& out) {
    const Scenario sc = detail::load_scenario(o);
    if (o.seeds.empty()) {
        throw ScenarioError("--seeds A..B is required");
    }
    const auto [lo, hi] = detail::parse_range(o.seeds);
    const std::size_t count = hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0;
    const ProtocolSpec protocol = make_protocol(sc);
    std::vector<detail::Verdict> results(count);
    std::vector<std::string> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < count; k = next++) {
            try {
                const Scenario one = seeded(sc, lo + k);
                results[k] = detail::check(execute(one, protocol), o.contract);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(std::max(1U, std::thread::hardware_concurrency()), count);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    if (count > 0) {
        worker();
    }
    for (auto& t : pool) {
        t.join();
    }
    std::size_t passed = 0;
    std::size_t max_ghost = 0;
    std::vector<std::uint64_t> failing;
    for (std::size_t k = 0; k < count; ++k) {
        if (!errors[k].empty()) {
            throw ScenarioError("seed " + std::to_string(lo + k) + ": " + errors[k]);
        }
        max_ghost = std::max(max_ghost, results[k].max_ghost);
        if (results[k].pass) {
            ++passed;
        } else {
            failing.push_back(lo + k);
        }
    }
    out << "sweep contract=" << o.contract << " runs=" << count << " pass=" << passed
        << " fail=" << (count - passed);
    if (o.contract == "datalink") {
        out << " max_ghost=" << max_ghost;
    }
    out << '\n';
    for (std::size_t k = 0; k < failing.size() && k < 10; ++k) {
        out << "failing seed=" << failing[k] << '\n';
    }
    return failing.empty() ? Pass : Fail;
}

/// Parses arguments and dispatches; all output goes to the given streams.
inline int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulator and checkers for stabilizing reliable broadcast"};
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;
    std::size_t horizon = 0;

    auto common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "scheduler seed");
        cmd->add_option("--horizon", horizon, "step horizon (run/check/sweep) or input reads (search)");
        cmd->add_option("--mode", o.mode, "semi-bounded | fully-bounded");
        cmd->add_option("--out", o.out, "output path or prefix");
    };
    CLI::App* run = app.add_subcommand("run", "execute a scenario and write its trace");
    run->add_option("--scenario", o.scenario, "scenario file")->required();
    common(run);

    CLI::App* check = app.add_subcommand("check", "check a contract on a trace or scenario");
    check->add_option("--trace", o.trace, "trace file");
    check->add_option("--scenario", o.scenario, "scenario file (executed first)");
    check->add_option("--contract", o.contract, "datalink | surb-s1 | surb-s2");
    common(check);

    CLI::App* search = app.add_subcommand("search", "look for a divergence witness");
    search->add_option("--candidate", o.candidate, "echo | surb | byzantine-surb");
    search->add_option("--scenario", o.scenario, "topology and input to search with");
    common(search);

    CLI::App* sweep = app.add_subcommand("sweep", "run a contract check over a seed range");
    sweep->add_option("--scenario", o.scenario, "scenario file")->required();
    sweep->add_option("--seeds", o.seeds, "inclusive range A..B")->required();
    sweep->add_option("--contract", o.contract, "datalink | surb-s1 | surb-s2");
    common(sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return Pass;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return Usage;
    }
    for (CLI::App* cmd : {run, check, search, sweep}) {
        if (cmd->parsed()) {
            if (cmd->count("--seed") > 0) {
                o.seed = seed;
            }
            if (cmd->count("--horizon") > 0) {
                o.horizon = horizon;
            }
        }
    }
    try {
        if (run->parsed()) {
            return cmd_run(o, out);
        }
        if (check->parsed()) {
            if (o.trace.empty() == o.scenario.empty()) {
                throw ScenarioError("check needs exactly one of --trace or --scenario");
            }
            return cmd_check(o, out);
        }
        if (search->parsed()) {
            return cmd_search(o, out);
        }
        return cmd_sweep(o, out);
    } catch (const TraceParseError& e) {
        err << "malformed trace: " << e.what() << '\n';
    } catch (const ScenarioError& e) {
        err << "invalid input: " << e.what() << '\n';
    } catch (const PreconditionError& e) {
        err << "precondition: " << e.what() << '\n';
    } catch (const InfeasibleStep& e) {
        err << "infeasible: " << e.what() << '\n';
    }
    return Usage;
}

} // namespace surb::cli
