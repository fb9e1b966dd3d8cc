#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "molf/harness/checkpoint.hpp"
#include "molf/harness/run_config.hpp"
#include "molf/harness/traces.hpp"

namespace molf {

struct StepReport {
    std::uint64_t step = 0;          // 1-based optimizer step just taken
    double train_loss = 0.0;         // batch loss before the update
    std::optional<double> population_loss; // closed form after the update
    std::vector<RoutingDecision> decisions;
};

/// Owns task, network, optimizer and the random streams of one run.
/// Batches and dropout masks come from separate streams, both checkpointed,
/// so a resumed run replays an unbroken one bit for bit.
class Trainer {
public:
    explicit Trainer(RunConfig cfg);

    StepReport step();

    [[nodiscard]] std::uint64_t steps_done() const { return optimizer_.steps_taken(); }
    [[nodiscard]] const RunConfig& config() const { return cfg_; }
    [[nodiscard]] const SpectralTask& task() const { return task_; }
    [[nodiscard]] const Network& network() const { return net_; }
    [[nodiscard]] Network& network() { return net_; }
    [[nodiscard]] const SparseAdamW& optimizer() const { return optimizer_; }
    [[nodiscard]] SparseAdamW& optimizer() { return optimizer_; }

    /// Closed-form population loss; only defined for single-layer regression.
    [[nodiscard]] std::optional<double> population_loss() const;

    [[nodiscard]] Checkpoint checkpoint() const;
    void save(const std::filesystem::path& dir) const;
    /// Restores network, optimizer, task and random streams; validates before mutating.
    void restore(const Checkpoint& ckpt);

private:
    RunConfig cfg_;
    SpectralTask task_;
    Network net_;
    SparseAdamW optimizer_;
    Rng data_rng_;
    Rng dropout_rng_;
};

struct RunSummary {
    double final_train_loss = 0.0;
    std::optional<double> final_population_loss;
    std::vector<std::string> modules;
    /// Per module, per routable expert: share of traced steps won.
    std::vector<std::vector<double>> selection_fractions;
    /// Share of (module, traced step) pairs won by an FFT pathway; empty in MoLF-E.
    std::optional<double> fft_fraction;
    std::filesystem::path checkpoint;
};

/// Runs cfg.total_steps steps writing into cfg.out_dir:
///   config, metrics.csv, traces.jsonl, winner_grid.csv, winner_summary.csv, ckpt_<step>/.
/// A non-finite loss stops the run: the current (last finite) state is saved
/// as ckpt_<step> and a NumericError naming it is thrown.
RunSummary train_run(const RunConfig& cfg);

} // namespace molf
