#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "molf/model/network.hpp"
#include "molf/optim/config.hpp"
#include "molf/synth/spectral_task.hpp"

namespace molf {

enum class TaskKind {
    regression,     // 1/2 ||y - f(x)||^2 averaged over the batch
    classification, // labels = argmax of the teacher output, softmax cross-entropy
};

struct TaskSpec {
    TaskKind kind = TaskKind::regression;
    Regime regime = Regime::heavy_tail;
    std::size_t d_in = 64;
    std::size_t d_out = 64;
    SpectralParams params;
};

struct NetworkSpec {
    AdapterMode mode = AdapterMode::molf;
    std::vector<std::size_t> hidden;
    std::vector<std::size_t> ranks{8};
    double alpha = 16.0;
    double dropout = 0.0;
    bool bias = false;
    double a_std = 1.0;
};

/// Everything a run depends on. (RunConfig, code version) fixes the run's
/// artifacts byte for byte.
struct RunConfig {
    std::uint64_t seed = 0;
    TaskSpec task;
    NetworkSpec network;
    OptimizerConfig optimizer;
    std::size_t total_steps = 1000;
    std::size_t batch_size = 64;
    std::size_t trace_every = 1;
    std::size_t checkpoint_every = 0; // 0: only the final step
    std::string resume_from;          // checkpoint directory, empty for a fresh run
    std::filesystem::path out_dir = "run";
};

/// Flat `key = value` text, `#` starts a comment. Unknown or repeated keys
/// and malformed values throw ContractError naming the key.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Every recognised key, in canonical order.
const std::vector<std::string>& run_config_keys();

/// Canonical echo with every key spelled out (out_dir omitted, so two runs of
/// the same config into different directories echo identically).
std::string canonical_config(const RunConfig& cfg);

} // namespace molf
