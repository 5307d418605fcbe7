#pragma once

// Replay properties checked on recorded runs: delta invariance, monotone
// refeasibility, and commutation of segments between repeated
// configurations.

#include "surb/divergence.hpp"
#include "surb/engine.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace lemmas {

using namespace surb;

struct Tally {
    std::size_t delta = 0;      // delta-invariance checks performed
    std::size_t refeasible = 0; // monotone refeasibility checks performed
    std::size_t commute = 0;    // commutation checks performed
    std::size_t failures = 0;
    std::string first_failure;

    void fail(const std::string& what) {
        if (failures++ == 0) {
            first_failure = what;
        }
    }
    Tally& operator+=(const Tally& o) {
        delta += o.delta;
        refeasible += o.refeasible;
        commute += o.commute;
        if (failures == 0 && o.failures > 0) {
            first_failure = o.first_failure;
        }
        failures += o.failures;
        return *this;
    }
};

// Runs a segment from `start`; empty optional when infeasible.
inline std::optional<SystemState> run_from(const Run& seg, const SystemState& start) {
    ReplayOutcome out = replay(seg, start);
    if (!out.feasible) {
        return std::nullopt;
    }
    return out.final;
}

inline Tally check_run(const Run& run, std::size_t max_members = 24) {
    Tally t;
    const std::size_t kinds = run.topo.alphabet;
    const auto snaps = snapshot_stream(run);
    // Snapshot positions grouped by configuration.
    std::map<std::vector<LocalState>, std::vector<std::size_t>> classes;
    for (const auto& s : snaps) {
        auto& members = classes[s.config.states];
        if (members.size() < max_members && (members.empty() || members.back() != s.step)) {
            members.push_back(s.step);
        }
    }
    // States at every member step, in one pass.
    std::map<std::size_t, SystemState> at;
    for (const auto& [cfg, members] : classes) {
        for (auto m : members) {
            at.emplace(m, SystemState{});
        }
    }
    {
        SystemState sys = run.initial;
        std::size_t k = 0;
        for (auto& [step, slot] : at) {
            while (k < step) {
                reapply_step(sys, run.topo, run.steps[k++]);
            }
            slot = sys;
        }
    }
    const bool unbounded = run.topo.mode == Mode::SemiBounded;
    for (const auto& [cfg, members] : classes) {
        if (members.size() < 2) {
            continue;
        }
        std::vector<Run> segs;
        for (std::size_t k = 0; k + 1 < members.size(); ++k) {
            segs.push_back(slice(run, at[members[k]], members[k], members[k + 1]));
        }
        for (std::size_t k = 0; k < segs.size(); ++k) {
            const SystemState& n0 = at[members[k]];
            const SystemState& n1 = at[members[k + 1]];
            const SignedGrid d0 = delta(matrix_of(n0, kinds), matrix_of(n1, kinds));
            // Delta invariance against every other member state where the segment is feasible.
            for (std::size_t j = 0; j < members.size(); ++j) {
                if (j == k) {
                    continue;
                }
                const SystemState& other = at[members[j]];
                if (auto end = run_from(segs[k], other)) {
                    ++t.delta;
                    if (delta(matrix_of(other, kinds), matrix_of(*end, kinds)) != d0) {
                        t.fail("delta differs for segment at step " + std::to_string(members[k]));
                    }
                }
            }
            // Monotone refeasibility; links are unbounded only in the semi-bounded model.
            if (unbounded && le(matrix_of(n0, kinds), matrix_of(n1, kinds))) {
                ++t.refeasible;
                auto again = run_from(segs[k], n1);
                if (!again) {
                    t.fail("segment at step " + std::to_string(members[k]) + " not refeasible");
                } else if (!le(matrix_of(n1, kinds), matrix_of(*again, kinds))) {
                    t.fail("refeasible segment at step " + std::to_string(members[k]) + " shrank the matrix");
                }
            }
        }
        // Commutation of consecutive segments from a later, larger state.
        for (std::size_t k = 0; unbounded && k + 2 < members.size(); ++k) {
            const SystemState& start = at[members[k + 2]];
            auto ab = run_from(segs[k], start);
            auto ba = run_from(segs[k + 1], start);
            if (ab) {
                ab = run_from(segs[k + 1], *ab);
            }
            if (ba) {
                ba = run_from(segs[k], *ba);
            }
            if (!ab || !ba) {
                continue;
            }
            ++t.commute;
            if (!same_system_state(*ab, *ba, kinds)) {
                t.fail("segments at steps " + std::to_string(members[k]) + " and " + std::to_string(members[k + 1]) +
                       " do not commute");
            }
        }
    }
    return t;
}

} // namespace lemmas
