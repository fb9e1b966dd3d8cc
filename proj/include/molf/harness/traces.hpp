#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "molf/optim/routing.hpp"

namespace molf {

/// One JSON object, no trailing newline:
/// {"step":..,"module":..,"scores":[..],"winner":[..],"lr":[..],"mode":".."}
std::string trace_record_json(const RoutingDecision& decision);
RoutingDecision parse_trace_record(std::string_view line);

std::vector<RoutingDecision> read_traces(const std::filesystem::path& file);

struct TraceSummary {
    std::size_t records = 0;
    std::vector<std::string> modules; // first-appearance (parameter) order
    std::vector<std::uint64_t> steps; // traced steps, ascending
    /// fractions[module][expert]: share of traced steps on which the expert was among the winners.
    std::vector<std::vector<double>> fractions;
    bool empty = true;
};

/// Summarises per-module winner shares.
TraceSummary summarize_traces(const std::vector<RoutingDecision>& decisions);

/// Reads <run_dir>/traces.jsonl and writes winner_summary.csv (module,expert,fraction)
/// and winner_grid.csv (one row per module, one column per traced step, cell = top winner).
/// A missing or empty trace produces header-only files and a warning on stderr.
TraceSummary export_traces(const std::filesystem::path& run_dir);

} // namespace molf
