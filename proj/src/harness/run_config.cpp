#include "molf/harness/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "molf/errors.hpp"

namespace molf {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double d = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ContractError("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ContractError("config key '" + key + "': expected a non-negative integer, got '" +
                            value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ContractError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    if (value.empty()) return out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(value)) out.push_back(parse_u64(key, item));
    return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(parse_double(key, item));
    return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) {
            out += format_double(values[i]);
        } else {
            out += std::to_string(values[i]);
        }
    }
    return out;
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define MOLF_DOUBLE_FIELD(name, member)                                                          \
    Field {                                                                                      \
        name, [](RunConfig& c, const std::string& v) { c.member = parse_double(name, v); },      \
            [](const RunConfig& c) { return format_double(c.member); }                           \
    }
#define MOLF_SIZE_FIELD(name, member)                                                            \
    Field {                                                                                      \
        name, [](RunConfig& c, const std::string& v) { c.member = parse_u64(name, v); },         \
            [](const RunConfig& c) { return std::to_string(c.member); }                          \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        MOLF_SIZE_FIELD("seed", seed),
        Field{"task.kind",
              [](RunConfig& c, const std::string& v) {
                  if (v == "regression") c.task.kind = TaskKind::regression;
                  else if (v == "classification") c.task.kind = TaskKind::classification;
                  else throw ContractError("config key 'task.kind': expected regression or classification");
              },
              [](const RunConfig& c) {
                  return std::string(c.task.kind == TaskKind::regression ? "regression"
                                                                         : "classification");
              }},
        Field{"task.regime",
              [](RunConfig& c, const std::string& v) { c.task.regime = parse_regime(v); },
              [](const RunConfig& c) { return std::string(to_string(c.task.regime)); }},
        MOLF_SIZE_FIELD("task.d_in", task.d_in),
        MOLF_SIZE_FIELD("task.d_out", task.d_out),
        MOLF_DOUBLE_FIELD("task.power", task.params.power),
        MOLF_SIZE_FIELD("task.rank", task.params.rank),
        Field{"task.spectrum",
              [](RunConfig& c, const std::string& v) {
                  c.task.params.custom_spectrum = parse_double_list("task.spectrum", v);
              },
              [](const RunConfig& c) { return join(c.task.params.custom_spectrum); }},
        MOLF_DOUBLE_FIELD("task.noise_std", task.params.noise_std),
        Field{"net.mode",
              [](RunConfig& c, const std::string& v) {
                  if (v == "molf") c.network.mode = AdapterMode::molf;
                  else if (v == "molf_e") c.network.mode = AdapterMode::molf_e;
                  else throw ContractError("config key 'net.mode': expected molf or molf_e");
              },
              [](const RunConfig& c) {
                  return std::string(c.network.mode == AdapterMode::molf ? "molf" : "molf_e");
              }},
        Field{"net.hidden",
              [](RunConfig& c, const std::string& v) {
                  c.network.hidden = parse_size_list("net.hidden", v);
              },
              [](const RunConfig& c) { return join(c.network.hidden); }},
        Field{"net.ranks",
              [](RunConfig& c, const std::string& v) {
                  c.network.ranks = parse_size_list("net.ranks", v);
              },
              [](const RunConfig& c) { return join(c.network.ranks); }},
        MOLF_DOUBLE_FIELD("net.alpha", network.alpha),
        MOLF_DOUBLE_FIELD("net.dropout", network.dropout),
        Field{"net.bias",
              [](RunConfig& c, const std::string& v) { c.network.bias = parse_bool("net.bias", v); },
              [](const RunConfig& c) { return std::string(c.network.bias ? "true" : "false"); }},
        MOLF_DOUBLE_FIELD("net.a_std", network.a_std),
        MOLF_DOUBLE_FIELD("opt.beta1", optimizer.beta1),
        MOLF_DOUBLE_FIELD("opt.beta2", optimizer.beta2),
        MOLF_DOUBLE_FIELD("opt.eps", optimizer.eps),
        MOLF_SIZE_FIELD("opt.k_top", optimizer.k_top),
        MOLF_DOUBLE_FIELD("opt.lambda_fft", optimizer.lambda_fft),
        MOLF_DOUBLE_FIELD("opt.lambda_lora", optimizer.lambda_lora),
        Field{"opt.scoring",
              [](RunConfig& c, const std::string& v) {
                  c.optimizer.scoring = parse_scoring_mode(v);
              },
              [](const RunConfig& c) { return std::string(to_string(c.optimizer.scoring)); }},
        MOLF_DOUBLE_FIELD("opt.lr_fft", optimizer.lr_fft),
        MOLF_DOUBLE_FIELD("opt.lr_lora", optimizer.lr_lora),
        MOLF_DOUBLE_FIELD("opt.grad_clip", optimizer.grad_clip),
        Field{"sched.kind",
              [](RunConfig& c, const std::string& v) {
                  if (v == "cosine") c.optimizer.schedule.kind = ScheduleKind::cosine;
                  else if (v == "linear") c.optimizer.schedule.kind = ScheduleKind::linear;
                  else throw ContractError("config key 'sched.kind': expected cosine or linear");
              },
              [](const RunConfig& c) {
                  return std::string(c.optimizer.schedule.kind == ScheduleKind::cosine ? "cosine"
                                                                                       : "linear");
              }},
        MOLF_DOUBLE_FIELD("sched.warmup_ratio", optimizer.schedule.warmup_ratio),
        MOLF_SIZE_FIELD("train.total_steps", total_steps),
        MOLF_SIZE_FIELD("train.batch_size", batch_size),
        MOLF_SIZE_FIELD("train.trace_every", trace_every),
        MOLF_SIZE_FIELD("train.checkpoint_every", checkpoint_every),
        Field{"train.resume_from",
              [](RunConfig& c, const std::string& v) { c.resume_from = v; },
              [](const RunConfig& c) { return c.resume_from; }},
        Field{"out_dir",
              [](RunConfig& c, const std::string& v) { c.out_dir = v; },
              [](const RunConfig& c) { return c.out_dir.string(); }},
    };
    return table;
}

#undef MOLF_DOUBLE_FIELD
#undef MOLF_SIZE_FIELD

} // namespace

const std::vector<std::string>& run_config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

RunConfig parse_run_config(std::string_view text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ContractError("config line " + std::to_string(line_no) +
                                ": expected 'key = value'");
        }
        const std::string key = trim(std::string_view(content).substr(0, eq));
        const std::string value = trim(std::string_view(content).substr(eq + 1));
        const auto& table = fields();
        auto it = std::find_if(table.begin(), table.end(),
                               [&](const Field& f) { return f.key == key; });
        if (it == table.end()) throw ContractError("config: unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ContractError("config: key '" + key + "' repeated");
        it->set(cfg, value);
    }
    cfg.optimizer.schedule.total_steps = cfg.total_steps;
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string canonical_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& f : fields()) {
        if (f.key == "out_dir") continue;
        const std::string value = f.get(cfg);
        out += f.key + (value.empty() ? " =" : " = ") + value + "\n";
    }
    return out;
}

} // namespace molf
