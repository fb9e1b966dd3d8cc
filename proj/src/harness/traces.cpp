#include "molf/harness/traces.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <json.hpp>

#include "molf/errors.hpp"

namespace molf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trace_record_json(const RoutingDecision& d) {
    json j;
    j["step"] = d.step;
    j["module"] = d.module_name;
    j["scores"] = d.scores;
    j["winner"] = d.winners;
    j["lr"] = d.lr_used;
    j["mode"] = std::string(to_string(d.scoring_mode));
    return j.dump();
}

RoutingDecision parse_trace_record(std::string_view line) {
    try {
        const json j = json::parse(line);
        RoutingDecision d;
        d.step = j.at("step").get<std::uint64_t>();
        d.module_name = j.at("module").get<std::string>();
        d.scores = j.at("scores").get<std::vector<double>>();
        d.winners = j.at("winner").get<std::vector<std::size_t>>();
        if (j.contains("lr")) d.lr_used = j.at("lr").get<std::vector<double>>();
        d.scoring_mode = parse_scoring_mode(j.at("mode").get<std::string>());
        return d;
    } catch (const json::exception& e) {
        throw Error(std::string("trace record: ") + e.what());
    }
}

std::vector<RoutingDecision> read_traces(const fs::path& file) {
    std::vector<RoutingDecision> out;
    std::ifstream in(file);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(parse_trace_record(line));
    }
    return out;
}

TraceSummary summarize_traces(const std::vector<RoutingDecision>& decisions) {
    TraceSummary s;
    s.records = decisions.size();
    s.empty = decisions.empty();
    std::map<std::string, std::size_t> module_index;
    std::set<std::uint64_t> steps;
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::size_t> traced;
    for (const auto& d : decisions) {
        auto [it, inserted] = module_index.emplace(d.module_name, s.modules.size());
        if (inserted) {
            s.modules.push_back(d.module_name);
            counts.emplace_back();
            traced.push_back(0);
        }
        auto& c = counts[it->second];
        if (c.size() < d.scores.size()) c.resize(d.scores.size(), 0);
        for (std::size_t w : d.winners) {
            if (w >= c.size()) c.resize(w + 1, 0);
            ++c[w];
        }
        ++traced[it->second];
        steps.insert(d.step);
    }
    s.steps.assign(steps.begin(), steps.end());
    for (std::size_t m = 0; m < counts.size(); ++m) {
        std::vector<double> f;
        for (std::size_t c : counts[m]) {
            f.push_back(static_cast<double>(c) / static_cast<double>(traced[m]));
        }
        s.fractions.push_back(std::move(f));
    }
    return s;
}

TraceSummary export_traces(const fs::path& run_dir) {
    const auto decisions = read_traces(run_dir / "traces.jsonl");
    TraceSummary s = summarize_traces(decisions);
    if (s.empty) {
        std::cerr << "warning: no routing traces in " << run_dir.string() << '\n';
    }

    std::ofstream summary(run_dir / "winner_summary.csv");
    summary << "module,expert,fraction\n";
    for (std::size_t m = 0; m < s.modules.size(); ++m) {
        for (std::size_t e = 0; e < s.fractions[m].size(); ++e) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", s.fractions[m][e]);
            summary << s.modules[m] << ',' << e << ',' << buf << '\n';
        }
    }

    std::map<std::pair<std::string, std::uint64_t>, std::size_t> top;
    for (const auto& d : decisions) {
        if (!d.winners.empty()) top[{d.module_name, d.step}] = d.winners.front();
    }
    std::ofstream grid(run_dir / "winner_grid.csv");
    grid << "module";
    for (auto step : s.steps) grid << ',' << step;
    grid << '\n';
    for (const auto& name : s.modules) {
        grid << name;
        for (auto step : s.steps) {
            grid << ',';
            if (auto it = top.find({name, step}); it != top.end()) grid << it->second;
        }
        grid << '\n';
    }
    return s;
}

} // namespace molf
