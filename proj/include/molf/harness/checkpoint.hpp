#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "molf/model/network.hpp"
#include "molf/optim/sparse_adamw.hpp"
#include "molf/synth/spectral_task.hpp"

namespace molf {

/// On-disk layout (a directory):
///
///   manifest     UTF-8 text. First line "molf-checkpoint 1", then one record per line:
///                  meta <key> <value>
///                  module <name> <d_out> <d_in> <base_trainable> <has_bias> <dropout> <n_experts>
///                  expert <module> <index> <rank> <alpha>
///                  counter <name> <value>
///                  rng <name> <w0> <w1> <w2> <w3> <has_spare> <spare-bits>   (hex words)
///                  tensor <name> <f64|f32> <rows> <cols> <byte-offset> <file>
///   tensors.bin  little-endian IEEE-754 values, row-major, in registry order.
inline constexpr int kCheckpointVersion = 1;

enum class TensorEncoding { f64, f32 };

struct ModuleRecord {
    std::string name;
    std::size_t d_out = 0;
    std::size_t d_in = 0;
    bool base_trainable = true;
    bool has_bias = false;
    double dropout = 0.0;
    std::vector<std::pair<std::size_t, double>> experts; // (rank, alpha)
};

struct Checkpoint {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<ModuleRecord> modules;
    std::vector<std::pair<std::string, Matrix>> tensors;
    std::vector<std::pair<std::string, std::uint64_t>> counters;
    std::vector<std::pair<std::string, Rng::State>> rngs;

    /// Lookups throw LoadError naming the missing entry.
    [[nodiscard]] const Matrix& tensor(const std::string& name) const;
    [[nodiscard]] std::uint64_t counter(const std::string& name) const;
    [[nodiscard]] const Rng::State& rng(const std::string& name) const;
    [[nodiscard]] const std::string& meta_value(const std::string& key) const;
    [[nodiscard]] bool has_tensor(const std::string& name) const;
};

void add_network(Checkpoint& ckpt, const Network& net);
void add_optimizer(Checkpoint& ckpt, const Network& net, const SparseAdamW& opt);
void add_task(Checkpoint& ckpt, const SpectralTask& task);

/// Writes to a sibling temporary directory first, then renames into place.
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir,
                      TensorEncoding encoding = TensorEncoding::f64);
/// Parses and validates the whole checkpoint; throws LoadError on any problem.
Checkpoint read_checkpoint(const std::filesystem::path& dir);

Network network_from_checkpoint(const Checkpoint& ckpt);
SpectralTask task_from_checkpoint(const Checkpoint& ckpt);

/// Copies moments and step counters into `opt`. Every tensor is checked
/// against the live shapes before anything is written, so a failed restore
/// leaves `opt` untouched.
void restore_optimizer(const Checkpoint& ckpt, const Network& net, SparseAdamW& opt);

/// Network plus optimizer state in one call.
void save_checkpoint(const Network& net, const SparseAdamW& opt, const std::filesystem::path& dir);

struct LoadedState {
    Network network;
    Checkpoint checkpoint;
};
LoadedState load_checkpoint(const std::filesystem::path& dir);

} // namespace molf
