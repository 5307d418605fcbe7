#include "surb/all.hpp"
#include "surb/cli.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace surb;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

// Runs the built binary through the shell; stderr is discarded.
Result invoke(const std::string& args) {
    const std::string cmd = std::string("\"") + SURB_CLI_PATH + "\" " + args + " 2>/dev/null";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) {
        r.out.append(buf, got);
    }
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string example(const std::string& name) { return std::string(SURB_EXAMPLES_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("surb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name), std::ios::binary) << text;
        return path(name);
    }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, RunIsDeterministic) {
    const Result a = invoke("run --scenario " + example("honest_surb.txt") + " --seed 11");
    const Result b = invoke("run --scenario " + example("honest_surb.txt") + " --seed 11");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    const Trace t = trace_from_string(a.out);
    EXPECT_EQ(t.run.steps.size(), 400U);
}

TEST_F(Cli, InvalidScenarioIsAUsageError) {
    const std::string bad = write("bad.txt", "n=1\ncapacity=1\nhorizon=10\n");
    EXPECT_EQ(invoke("run --scenario " + bad).code, 2);
    const std::string typo = write("typo.txt", "n=3\ncapcity=1\n");
    EXPECT_EQ(invoke("run --scenario " + typo).code, 2);
    EXPECT_EQ(invoke("run").code, 2);
    EXPECT_EQ(invoke("frobnicate").code, 2);
}

TEST_F(Cli, HonestTracePassesS2) {
    const std::string trace = path("honest.trace");
    ASSERT_EQ(invoke("run --scenario " + example("honest_surb.txt") + " --out " + trace).code, 0);
    const Result r = invoke("check --trace " + trace + " --contract surb-s2");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("contract=surb-s2 pass"), std::string::npos);
    EXPECT_EQ(invoke("check --trace " + trace + " --contract surb-s1").code, 0);
}

TEST_F(Cli, GhostTracePassesWithThreeGhosts) {
    const std::string trace = path("ghost.trace");
    ASSERT_EQ(invoke("run --scenario " + example("ghost.txt") + " --out " + trace).code, 0);
    const Result r = invoke("check --trace " + trace + " --contract datalink");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("ghost=3"), std::string::npos) << r.out;
}

TEST_F(Cli, TruncatedTraceIsRejected) {
    const Result full = invoke("run --scenario " + example("crash.txt"));
    ASSERT_EQ(full.code, 0);
    const std::string cut = write("cut.trace", full.out.substr(0, full.out.size() / 2));
    EXPECT_EQ(invoke("check --trace " + cut).code, 2);
    EXPECT_EQ(invoke("check --trace " + path("missing.trace")).code, 2);
}

TEST_F(Cli, SearchFindsEchoAndNotSurb) {
    const std::string prefix = path("echo");
    const Result echo = invoke("search --candidate echo --mode semi-bounded --horizon 4096 --seed 1 --out " + prefix);
    EXPECT_EQ(echo.code, 0) << echo.out;
    EXPECT_NE(echo.out.find("verified=1"), std::string::npos);
    const Trace r5 = trace_from_string(slurp(prefix + ".r5.trace"));
    const Trace r6 = trace_from_string(slurp(prefix + ".r6.trace"));
    EXPECT_EQ(r5.run.steps.size(), r6.run.steps.size());
    EXPECT_NE(slurp(prefix + ".summary").find("diverges party="), std::string::npos);

    EXPECT_EQ(invoke("search --candidate surb --horizon 512").code, 1);
    EXPECT_EQ(invoke("search --candidate echo --horizon 0").code, 1);
    EXPECT_EQ(invoke("search --candidate nope").code, 2);
    EXPECT_EQ(invoke("search --candidate byzantine-surb --horizon 4096").code, 0);
}

TEST_F(Cli, SweepCountsPassesAndFailures) {
    const Result ok = invoke("sweep --scenario " + example("datalink_sweep.txt") + " --seeds 0..99");
    EXPECT_EQ(ok.code, 0) << ok.out;
    EXPECT_NE(ok.out.find("runs=100 pass=100 fail=0"), std::string::npos) << ok.out;

    const Result empty = invoke("sweep --scenario " + example("datalink_sweep.txt") + " --seeds 10..9");
    EXPECT_EQ(empty.code, 0);
    EXPECT_NE(empty.out.find("runs=0"), std::string::npos);

    const Result bad = invoke("sweep --scenario " + example("offbyone_sweep.txt") + " --seeds 0..199");
    EXPECT_EQ(bad.code, 1);
    EXPECT_EQ(bad.out.find("fail=0"), std::string::npos) << bad.out;

    EXPECT_EQ(invoke("sweep --scenario " + example("datalink_sweep.txt") + " --seeds 3-9").code, 2);
}

TEST_F(Cli, ExampleScenariosRoundTrip) {
    for (const auto& entry : fs::directory_iterator(SURB_EXAMPLES_DIR)) {
        const Scenario a = scenario_from_string(slurp(entry.path()));
        const Scenario b = scenario_from_string(scenario_to_string(a));
        EXPECT_TRUE(same_scenario(a, b)) << entry.path();
        EXPECT_EQ(scenario_to_string(a), scenario_to_string(b));
    }
}

TEST_F(Cli, InProcessEntryPointMatchesTheBinary) {
    const std::string scenario = example("crash.txt");
    const char* argv[] = {"surb", "run", "--scenario", scenario.c_str()};
    std::ostringstream out;
    std::ostringstream err;
    EXPECT_EQ(cli::main(4, argv, out, err), 0);
    EXPECT_EQ(out.str(), invoke("run --scenario " + scenario).out);
}
