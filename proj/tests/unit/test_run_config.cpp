#include <gtest/gtest.h>

#include "molf/errors.hpp"
#include "molf/harness/run_config.hpp"

using namespace molf;

TEST(RunConfig, DefaultsFromEmptyText) {
    const RunConfig c = parse_run_config("");
    EXPECT_EQ(c.seed, 0u);
    EXPECT_EQ(c.optimizer.k_top, 1u);
    EXPECT_EQ(c.optimizer.schedule.total_steps, c.total_steps);
}

TEST(RunConfig, ParsesEveryKind) {
    const RunConfig c = parse_run_config(R"(
# comment line
seed = 42
task.kind = classification
task.regime = concentrated
task.rank = 4
task.spectrum = 3, 2.5 ,1
net.mode = molf_e
net.hidden = 32,16
net.ranks = 8,128
net.bias = true
opt.scoring = pfn
opt.k_top = 2
opt.lr_lora = 2e-4
sched.kind = linear
train.total_steps = 77   # trailing comment
)");
    EXPECT_EQ(c.seed, 42u);
    EXPECT_EQ(c.task.kind, TaskKind::classification);
    EXPECT_EQ(c.task.regime, Regime::concentrated);
    EXPECT_EQ(c.task.params.rank, 4u);
    EXPECT_EQ(c.task.params.custom_spectrum, (std::vector<double>{3, 2.5, 1}));
    EXPECT_EQ(c.network.mode, AdapterMode::molf_e);
    EXPECT_EQ(c.network.hidden, (std::vector<std::size_t>{32, 16}));
    EXPECT_EQ(c.network.ranks, (std::vector<std::size_t>{8, 128}));
    EXPECT_TRUE(c.network.bias);
    EXPECT_EQ(c.optimizer.scoring, ScoringMode::pfn);
    EXPECT_EQ(c.optimizer.k_top, 2u);
    EXPECT_EQ(c.optimizer.lr_lora, 2e-4);
    EXPECT_EQ(c.optimizer.schedule.kind, ScheduleKind::linear);
    EXPECT_EQ(c.total_steps, 77u);
    EXPECT_EQ(c.optimizer.schedule.total_steps, 77u);
}

TEST(RunConfig, UnknownKeyNamed) {
    try {
        parse_run_config("seed = 1\nopt.momentum = 0.9\n");
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("opt.momentum"), std::string::npos);
    }
}

TEST(RunConfig, MalformedInputs) {
    EXPECT_THROW(parse_run_config("seed = 1\nseed = 2\n"), ContractError);
    EXPECT_THROW(parse_run_config("seed 1\n"), ContractError);
    EXPECT_THROW(parse_run_config("seed = -1\n"), ContractError);
    EXPECT_THROW(parse_run_config("opt.beta1 = fast\n"), ContractError);
    EXPECT_THROW(parse_run_config("net.bias = maybe\n"), ContractError);
    EXPECT_THROW(parse_run_config("net.mode = both\n"), ContractError);
    EXPECT_THROW(parse_run_config("opt.scoring = random\n"), ContractError);
    EXPECT_THROW(load_run_config("/nonexistent/molf.cfg"), Error);
}

TEST(RunConfig, CanonicalEchoRoundTrips) {
    const RunConfig c = parse_run_config("seed = 9\nopt.lr_fft = 0.1\nnet.ranks = 2,4\nout_dir = x\n");
    const std::string echo = canonical_config(c);
    EXPECT_EQ(echo.find("out_dir"), std::string::npos);
    const RunConfig again = parse_run_config(echo);
    EXPECT_EQ(canonical_config(again), echo);
    EXPECT_EQ(again.optimizer.lr_fft, 0.1);
}

TEST(RunConfig, EchoListsEveryKeyButOutDir) {
    const std::string echo = canonical_config(RunConfig{});
    for (const auto& key : run_config_keys()) {
        if (key == "out_dir") continue;
        EXPECT_NE(echo.find(key + " ="), std::string::npos) << key;
    }
}
