#include "surb/all.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace surb;

namespace {

surb::Run sample_run(bool faults) {
    Scenario sc;
    sc.topo = {3, 0, Mode::FullyBounded, 2, 2};
    sc.input = InputSpec::incremental();
    sc.drop = {DropPolicy::Kind::DropOldest, 0};
    sc.horizon = 200;
    sc.scheduler.seed = 6;
    const ProtocolSpec p = make_protocol(sc);
    if (faults) {
        sc.faults.push_back(adversarial_transient(sc.topo, p, 6, 10));
        sc.faults.push_back(FaultEvent::crash(2, 50));
    }
    return execute(sc, p);
}

std::size_t error_line(const std::string& text) {
    try {
        trace_from_string(text);
    } catch (const TraceParseError& e) {
        return e.line();
    }
    return 0;
}

std::string drop_last_line(const std::string& text) {
    const auto cut = text.rfind('\n', text.size() - 2);
    return text.substr(0, cut + 1);
}

} // namespace

TEST(Trace, RoundTripIsExact) {
    for (bool faults : {false, true}) {
        const surb::Run run = sample_run(faults);
        const std::vector<TraceSnapshot> snaps{{3, {1, 0, 2}}, {9, {0, 0, 0}}};
        const std::string text = trace_to_string(run, snaps);
        const Trace back = trace_from_string(text);
        EXPECT_EQ(back.snapshots, snaps);
        EXPECT_EQ(back.run.topo, run.topo);
        EXPECT_EQ(back.run.protocol, run.protocol);
        ASSERT_EQ(back.run.steps.size(), run.steps.size());
        EXPECT_EQ(trace_to_string(back.run, back.snapshots), text);
        EXPECT_TRUE(replay(back.run, back.run.initial).feasible);
    }
}

TEST(Trace, ParsedTraceReplaysToTheSameDeliveries) {
    const surb::Run run = sample_run(true);
    const Trace back = trace_from_string(trace_to_string(run));
    for (PartyId p = 0; p < run.topo.n; ++p) {
        EXPECT_EQ(deliveries(back.run, p), deliveries(run, p));
    }
}

TEST(Trace, TruncationIsReported) {
    const std::string text = trace_to_string(sample_run(false));
    const std::string cut = drop_last_line(text);
    const std::size_t lines = static_cast<std::size_t>(std::count(cut.begin(), cut.end(), '\n'));
    try {
        trace_from_string(cut);
        FAIL() << "truncated trace parsed";
    } catch (const TraceParseError& e) {
        EXPECT_GE(e.line(), lines);
        EXPECT_NE(std::string(e.what()).find("line "), std::string::npos);
    }
    EXPECT_GT(error_line(""), 0U);
}

TEST(Trace, MalformedFieldsNameTheLine) {
    const std::string text = trace_to_string(sample_run(false));
    std::istringstream in(text);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) {
        lines.push_back(l);
    }
    auto with = [&](std::size_t at, const std::string& replacement) {
        auto copy = lines;
        copy[at] = replacement;
        std::string out;
        for (const auto& l : copy) {
            out += l + '\n';
        }
        return out;
    };
    // First step line follows the header, three parties and the cursor.
    const std::size_t first_step = 5;
    ASSERT_EQ(lines[first_step].rfind("step=", 0), 0U);
    EXPECT_EQ(error_line(with(first_step, "step=0 party=9 ev=none sends=- deliver=- fault=- state=0")), first_step + 1);
    EXPECT_EQ(error_line(with(first_step, "step=0 party=1 ev=bogus sends=- deliver=- fault=- state=0")),
              first_step + 1);
    EXPECT_EQ(error_line(with(0, "trace n=x sender=0")), 1U);
    EXPECT_EQ(error_line(with(lines.size() - 1, "end steps=99999")), lines.size());
}

TEST(Trace, InputSpecsPrintCanonically) {
    EXPECT_EQ(to_string(InputSpec::repeat_of(1)), "repeat(1)");
    EXPECT_EQ(to_string(InputSpec::incremental()), "incremental");
    EXPECT_EQ(to_string(InputSpec::explicit_list({0, 1, 1})), "explicit(0,1,1)");
    EXPECT_STREQ(to_string(Mode::SemiBounded), "semi-bounded");
}
