#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "molf/errors.hpp"
#include "molf/harness/traces.hpp"

using namespace molf;
namespace fs = std::filesystem;

namespace {

RoutingDecision decision(std::uint64_t step, std::string module, std::size_t winner) {
    RoutingDecision d;
    d.step = step;
    d.module_name = std::move(module);
    d.scores = {0.125, 3e-7};
    d.winners = {winner};
    d.lr_used = {1e-4, 5e-4};
    return d;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("molf_traces_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

} // namespace

TEST(Traces, JsonRoundTripIsExact) {
    RoutingDecision d = decision(7, "layer1", 1);
    d.scores = {0.1 + 0.2, 1.0 / 3.0};
    d.scoring_mode = ScoringMode::pfn;
    const RoutingDecision back = parse_trace_record(trace_record_json(d));
    EXPECT_EQ(back.step, 7u);
    EXPECT_EQ(back.module_name, "layer1");
    EXPECT_EQ(back.scores, d.scores);
    EXPECT_EQ(back.winners, d.winners);
    EXPECT_EQ(back.lr_used, d.lr_used);
    EXPECT_EQ(back.scoring_mode, ScoringMode::pfn);
}

TEST(Traces, MalformedRecordRejected) {
    EXPECT_ANY_THROW(parse_trace_record("{not json"));
    EXPECT_ANY_THROW(parse_trace_record(R"({"step":1})"));
}

TEST(Traces, ThreeModulesTenStepsGiveThirtyRecords) {
    const fs::path dir = scratch("cardinality");
    {
        std::ofstream out(dir / "traces.jsonl");
        for (std::uint64_t s = 1; s <= 10; ++s)
            for (const char* m : {"layer0", "layer1", "layer2"})
                out << trace_record_json(decision(s, m, s % 2)) << '\n';
    }
    const TraceSummary sum = export_traces(dir);
    EXPECT_EQ(sum.records, 30u);
    EXPECT_EQ(sum.modules, (std::vector<std::string>{"layer0", "layer1", "layer2"}));
    EXPECT_EQ(sum.steps.size(), 10u);
    for (const auto& f : sum.fractions) {
        EXPECT_DOUBLE_EQ(f[0], 0.5);
        EXPECT_DOUBLE_EQ(f[1], 0.5);
    }
    const auto grid = lines(dir / "winner_grid.csv");
    ASSERT_EQ(grid.size(), 4u);
    EXPECT_EQ(grid[0], "module,1,2,3,4,5,6,7,8,9,10");
    EXPECT_EQ(grid[1], "layer0,1,0,1,0,1,0,1,0,1,0");
    EXPECT_EQ(lines(dir / "winner_summary.csv").size(), 1u + 3u * 2u);
}

TEST(Traces, MissingTraceGivesHeaderOnlyOutput) {
    const fs::path dir = scratch("missing");
    const TraceSummary sum = export_traces(dir);
    EXPECT_TRUE(sum.empty);
    EXPECT_EQ(sum.records, 0u);
    EXPECT_EQ(lines(dir / "winner_summary.csv"), std::vector<std::string>{"module,expert,fraction"});
    EXPECT_EQ(lines(dir / "winner_grid.csv"), std::vector<std::string>{"module"});
}

TEST(Traces, FractionsWithTopTwoCountBothWinners) {
    std::vector<RoutingDecision> ds;
    for (std::uint64_t s = 1; s <= 4; ++s) {
        RoutingDecision d = decision(s, "m", 0);
        d.scores = {1, 2, 3};
        d.winners = {2, s % 2};
        ds.push_back(d);
    }
    const TraceSummary sum = summarize_traces(ds);
    ASSERT_EQ(sum.fractions.size(), 1u);
    EXPECT_DOUBLE_EQ(sum.fractions[0][2], 1.0);
    EXPECT_DOUBLE_EQ(sum.fractions[0][1], 0.5);
    EXPECT_DOUBLE_EQ(sum.fractions[0][0], 0.5);
}
