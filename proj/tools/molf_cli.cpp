// molf: train, fuse, trace and self-check from the command line.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "molf/errors.hpp"
#include "molf/fusion/fusion.hpp"
#include "molf/harness/checkpoint.hpp"
#include "molf/harness/oracles.hpp"
#include "molf/harness/run_config.hpp"
#include "molf/harness/trainer.hpp"
#include "molf/harness/traces.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t parse_seed(const std::string& text, const char* source) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used, 10);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || text.front() == '-') {
        throw UsageError(std::string(source) + ": not an unsigned integer: '" + text + "'");
    }
    return v;
}

int cmd_train(const std::string& config_path, const std::optional<std::string>& seed_flag,
              const std::optional<std::string>& out) {
    molf::RunConfig cfg = molf::load_run_config(config_path);
    if (seed_flag) {
        cfg.seed = parse_seed(*seed_flag, "--seed");
    } else if (const char* env = std::getenv("MOLF_SEED"); env != nullptr && *env != '\0') {
        cfg.seed = parse_seed(env, "MOLF_SEED");
    }
    if (out) cfg.out_dir = *out;

    const molf::RunSummary s = molf::train_run(cfg);
    std::printf("final train_loss %.6g\n", s.final_train_loss);
    if (s.final_population_loss) std::printf("final population_loss %.6g\n", *s.final_population_loss);
    for (std::size_t m = 0; m < s.modules.size(); ++m) {
        std::printf("%s", s.modules[m].c_str());
        for (double f : s.selection_fractions[m]) std::printf(" %.4f", f);
        std::printf("\n");
    }
    if (s.fft_fraction) std::printf("fft fraction %.4f\n", *s.fft_fraction);
    std::printf("checkpoint %s\n", s.checkpoint.string().c_str());
    return kOk;
}

int cmd_fuse(const std::string& ckpt_dir, const std::string& out_dir) {
    const molf::LoadedState loaded = molf::load_checkpoint(ckpt_dir);
    molf::Rng rng(0);
    bool ok = true;
    for (const auto& module : loaded.network.modules) {
        const molf::FusionReport r = molf::verify_fusion(module, 100, rng, 1e-9);
        std::printf("%s max relative deviation %.3g %s\n", module.name.c_str(),
                    r.max_relative_deviation, r.passed ? "ok" : "FAILED");
        ok = ok && r.passed;
    }
    if (!ok) {
        std::fprintf(stderr, "molf fuse: verification failed, nothing written\n");
        return kRuntime;
    }
    molf::Checkpoint fused;
    fused.meta.emplace_back("fused_from", std::filesystem::absolute(ckpt_dir).string());
    molf::add_network(fused, molf::fuse_network(loaded.network));
    molf::write_checkpoint(fused, out_dir);
    std::printf("wrote %s\n", out_dir.c_str());
    return kOk;
}

int cmd_trace(const std::string& run_dir) {
    const molf::TraceSummary s = molf::export_traces(run_dir);
    std::printf("%zu records, %zu modules, %zu traced steps\n", s.records, s.modules.size(),
                s.steps.size());
    return kOk;
}

int cmd_check() {
    bool ok = true;
    for (const auto& r : molf::run_self_checks()) {
        std::printf("%-32s %s  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
        ok = ok && r.passed;
    }
    return ok ? kOk : kRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mixture of LoRA and full fine-tuning experts: training and tooling"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::string> seed;
    std::optional<std::string> out;
    auto* train = app.add_subcommand("train", "Run training from a key = value config file");
    train->add_option("--config", config_path, "Config file")->required();
    train->add_option("--seed", seed, "Seed; overrides MOLF_SEED and the config");
    train->add_option("--out", out, "Output directory; overrides out_dir");

    std::string ckpt_dir, fuse_out;
    auto* fuse = app.add_subcommand("fuse", "Fold every expert into the base weights");
    fuse->add_option("--ckpt", ckpt_dir, "Checkpoint directory")->required();
    fuse->add_option("--out", fuse_out, "Directory for the fused checkpoint")->required();

    std::string run_dir;
    auto* trace = app.add_subcommand("trace", "Export winner_grid.csv and winner_summary.csv");
    trace->add_option("--run", run_dir, "Run directory")->required();

    auto* check = app.add_subcommand("check", "Run the built-in numerical self-checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "molf: " << e.what() << "\n\n" << app.help();
        return kUsage;
    }

    try {
        if (*train) return cmd_train(config_path, seed, out);
        if (*fuse) return cmd_fuse(ckpt_dir, fuse_out);
        if (*trace) return cmd_trace(run_dir);
        if (*check) return cmd_check();
    } catch (const UsageError& e) {
        std::cerr << "molf: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "molf: " << e.what() << '\n';
        return kRuntime;
    }
    return kUsage;
}
