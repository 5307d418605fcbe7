#include "lemmas.hpp"
#include "surb/all.hpp"

#include <gtest/gtest.h>

using namespace surb;

namespace {

Scenario echo_scenario(Mode mode, std::size_t horizon, std::uint64_t seed = 1) {
    Scenario sc;
    sc.topo = {3, 0, mode, 2, 2};
    sc.protocol = "echo";
    sc.input = InputSpec::incremental();
    sc.horizon = horizon;
    sc.scheduler.seed = seed;
    return sc;
}

surb::Run run_of(const Scenario& sc) { return execute(sc, make_protocol(sc)); }

std::size_t reads_in(const surb::Run& run) {
    std::size_t k = 0;
    for (const auto& s : run.steps) {
        k += s.event.kind == Event::Kind::ReadInput ? 1 : 0;
    }
    return k;
}

} // namespace

TEST(Divergence, NoInputReadsMeansNoSnapshots) {
    Scenario sc = echo_scenario(Mode::SemiBounded, 40);
    sc.scheduler.dormant = {0};
    const surb::Run run = run_of(sc);
    EXPECT_EQ(reads_in(run), 0U);
    const auto snaps = snapshot_stream(run);
    EXPECT_TRUE(snaps.empty());
    EXPECT_FALSE(find_repeat(snaps, Mode::SemiBounded, sent_values(run)));
}

TEST(Divergence, OneSnapshotPerInputRead) {
    const surb::Run run = run_of(echo_scenario(Mode::SemiBounded, 300));
    const auto snaps = snapshot_stream(run);
    ASSERT_EQ(snaps.size(), reads_in(run));
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        EXPECT_EQ(run.steps[snaps[k].step].event.kind, Event::Kind::ReadInput);
        EXPECT_EQ(snaps[k].cursor, k);
        EXPECT_EQ(snaps[k].matrix, matrix_of(state_after(run, snaps[k].step), run.topo.alphabet));
    }
    EXPECT_EQ(sent_values(run).size(), snaps.size());
}

TEST(Divergence, SnapshotsSurviveATraceRoundTrip) {
    Scenario sc = echo_scenario(Mode::FullyBounded, 300, 4);
    const ProtocolSpec p = make_protocol(sc);
    sc.faults.push_back(adversarial_transient(sc.topo, p, 4, 20));
    const surb::Run run = execute(sc, p);
    const Trace back = trace_from_string(trace_to_string(run));
    const auto a = snapshot_stream(run);
    const auto b = snapshot_stream(back.run);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].step, b[k].step);
        EXPECT_EQ(a[k].matrix, b[k].matrix);
        EXPECT_EQ(a[k].config.states, b[k].config.states);
    }
}

TEST(Divergence, DistinctConfigurationsNeverRepeat) {
    // Each snapshot gets its own sender state, so nothing can repeat.
    std::vector<Snapshot> snaps;
    for (std::size_t k = 0; k < 6; ++k) {
        Snapshot s;
        s.step = k * 3;
        s.cursor = k;
        s.config.states = {{static_cast<std::int32_t>(k)}, {-1}, {-1}};
        s.config.crashed.assign(3, false);
        s.config.byzantine.assign(3, false);
        s.matrix = NetworkMatrix(2, link_count(3));
        snaps.push_back(s);
    }
    const Seq values = incremental_prefix(6);
    EXPECT_FALSE(find_repeat(snaps, Mode::SemiBounded, values));
    EXPECT_FALSE(find_repeat(snaps, Mode::FullyBounded, values));
}

TEST(Divergence, SwapRejectsEmptySegments) {
    const surb::Run run = run_of(echo_scenario(Mode::SemiBounded, 50));
    EXPECT_THROW(build_swapped_runs(run, 5, 5, 9), SpliceError);
    EXPECT_THROW(build_swapped_runs(run, 5, 9, 9), SpliceError);
    EXPECT_THROW(build_swapped_runs(run, 1, 5, 51), SpliceError);
}

TEST(Divergence, EchoYieldsAVerifiedWitness) {
    const auto w = search(echo_protocol(), Mode::SemiBounded, 4096, 1);
    ASSERT_TRUE(w);
    const SystemState init = w->r5.initial;
    EXPECT_TRUE(verify_witness(*w, init));
    EXPECT_LT(w->s1, w->s2);
    EXPECT_LT(w->s2, w->s3);
    EXPECT_LT(w->c1, w->c2);
    const auto d = w->divergence();
    ASSERT_TRUE(d);
    EXPECT_NE(d->first, w->dormant);
    EXPECT_EQ(w->r5.steps.size(), w->r6.steps.size());
}

TEST(Divergence, TamperedWitnessFailsVerification) {
    const auto w = search(echo_protocol(), Mode::SemiBounded, 4096, 1);
    ASSERT_TRUE(w);
    const SystemState init = w->r5.initial;

    auto same = *w;
    same.r6 = same.r5;
    same.seq6 = same.seq5;
    EXPECT_FALSE(verify_witness(same, init));

    auto drifted = *w;
    drifted.final.config.states[1].push_back(7);
    EXPECT_FALSE(verify_witness(drifted, init));

    auto woke = *w;
    woke.dormant = 1;
    EXPECT_FALSE(verify_witness(woke, init));

    auto relabeled = *w;
    ASSERT_FALSE(relabeled.seq5[1].empty());
    relabeled.seq5[1].back() ^= 1;
    EXPECT_FALSE(verify_witness(relabeled, init));
}

TEST(Divergence, SurbOnRepeatedInputHasNoWitness) {
    SearchOptions opt;
    opt.input = InputSpec::repeat_of(1);
    for (auto mode : {Mode::SemiBounded, Mode::FullyBounded}) {
        EXPECT_FALSE(search(surb_protocol(2, 3, 2), mode, 256, 3, opt));
    }
}

TEST(Divergence, ZeroHorizonIsAbsent) {
    EXPECT_FALSE(search(echo_protocol(), Mode::SemiBounded, 0, 1));
    EXPECT_FALSE(byzantine_scenario(1, 3, 0, 1));
}

TEST(Divergence, ByzantineSenderSplitsTheReceivers) {
    const auto w = byzantine_scenario(1, 3, 4096, 1);
    ASSERT_TRUE(w);
    EXPECT_TRUE(verify_witness(*w, w->r5.initial));
    const auto d = w->divergence();
    ASSERT_TRUE(d);
    EXPECT_EQ(d->first, 1U);
    ASSERT_TRUE(w->wake);
    EXPECT_FALSE(w->wake->steps.empty());
}

TEST(Divergence, ByzantineWithoutTheScriptIsAbsent) {
    ByzantineOptions opt;
    opt.script_enabled = false;
    EXPECT_FALSE(byzantine_scenario(1, 3, 1024, 1, opt));
}

TEST(Divergence, BlockTailTracksTheLastTwoBlocks) {
    const Seq s = seq_from_string("0011100");
    const auto t = detail::block_tail(s);
    ASSERT_TRUE(t.symbol);
    EXPECT_EQ(*t.symbol, 0);
    EXPECT_EQ(t.current, 2U);
    EXPECT_EQ(t.previous, 3U);
    EXPECT_FALSE(detail::block_tail(Seq{}).symbol);
}

TEST(Divergence, ReplayPropertiesHoldOnEchoRuns) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const lemmas::Tally t = lemmas::check_run(run_of(echo_scenario(Mode::SemiBounded, 800, seed)));
        EXPECT_EQ(t.failures, 0U) << t.first_failure;
        EXPECT_GT(t.delta, 0U);
    }
}
