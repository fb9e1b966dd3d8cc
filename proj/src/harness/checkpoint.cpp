#include "molf/harness/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "molf/errors.hpp"

namespace molf {

namespace fs = std::filesystem;

namespace {

constexpr const char* kBlobName = "tensors.bin";

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void put_le(std::string& out, std::uint64_t bits, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& blob, std::size_t at, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(blob[at + i])) << (8 * i);
    }
    return v;
}

std::string module_prefix(const MoLFModule& m) { return "net." + m.name; }

std::string state_prefix(const MoLFModule& m, std::size_t e) {
    return "opt." + m.name + ".e" + std::to_string(e);
}

[[noreturn]] void fail(const std::string& what) { throw LoadError("checkpoint: " + what); }

std::uint64_t to_u64(const std::string& s, const std::string& ctx, int base = 10) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used, base);
        if (used != s.size()) fail("bad number '" + s + "' in " + ctx);
        return v;
    } catch (const std::logic_error&) {
        fail("bad number '" + s + "' in " + ctx);
    }
}

double to_double(const std::string& s, const std::string& ctx) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) fail("bad number '" + s + "' in " + ctx);
        return v;
    } catch (const std::logic_error&) {
        fail("bad number '" + s + "' in " + ctx);
    }
}

void check_shape(const Matrix& stored, const Matrix& live, const std::string& name) {
    if (!stored.same_shape(live)) {
        fail("tensor " + name + " has shape " + stored.shape_string() + ", expected " +
             live.shape_string());
    }
}

} // namespace

const Matrix& Checkpoint::tensor(const std::string& name) const {
    for (const auto& [n, m] : tensors)
        if (n == name) return m;
    fail("missing tensor " + name);
}

bool Checkpoint::has_tensor(const std::string& name) const {
    return std::any_of(tensors.begin(), tensors.end(),
                       [&](const auto& entry) { return entry.first == name; });
}

std::uint64_t Checkpoint::counter(const std::string& name) const {
    for (const auto& [n, v] : counters)
        if (n == name) return v;
    fail("missing counter " + name);
}

const Rng::State& Checkpoint::rng(const std::string& name) const {
    for (const auto& [n, s] : rngs)
        if (n == name) return s;
    fail("missing rng state " + name);
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta)
        if (k == key) return v;
    fail("missing meta entry " + key);
}

void add_network(Checkpoint& ckpt, const Network& net) {
    ckpt.meta.emplace_back("mode", net.mode == AdapterMode::molf ? "molf" : "molf_e");
    for (const auto& m : net.modules) {
        ModuleRecord rec;
        rec.name = m.name;
        rec.d_out = m.d_out();
        rec.d_in = m.d_in();
        rec.base_trainable = m.base_trainable;
        rec.has_bias = m.bias.has_value();
        rec.dropout = m.dropout_rate;
        for (const auto& e : m.experts) rec.experts.emplace_back(e.rank, e.alpha);
        ckpt.modules.push_back(std::move(rec));

        const std::string prefix = module_prefix(m);
        ckpt.tensors.emplace_back(prefix + ".weight", m.weight);
        if (m.bias) ckpt.tensors.emplace_back(prefix + ".bias", *m.bias);
        for (std::size_t j = 0; j < m.experts.size(); ++j) {
            const std::string ep = prefix + ".lora" + std::to_string(j);
            ckpt.tensors.emplace_back(ep + ".A", m.experts[j].a);
            ckpt.tensors.emplace_back(ep + ".B", m.experts[j].b);
        }
    }
}

void add_optimizer(Checkpoint& ckpt, const Network& net, const SparseAdamW& opt) {
    ckpt.counters.emplace_back("opt.steps", opt.steps_taken());
    const auto& states = opt.states();
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        for (std::size_t e = 0; e < states[l].size(); ++e) {
            const auto& s = states[l][e];
            const std::string prefix = state_prefix(net.modules[l], e);
            ckpt.counters.emplace_back(prefix + ".t", s.t);
            for (std::size_t p = 0; p < s.m.size(); ++p) {
                ckpt.tensors.emplace_back(prefix + ".m" + std::to_string(p), s.m[p]);
                ckpt.tensors.emplace_back(prefix + ".v" + std::to_string(p), s.v[p]);
            }
        }
    }
}

void add_task(Checkpoint& ckpt, const SpectralTask& task) {
    ckpt.meta.emplace_back("task.regime", std::string(to_string(task.regime)));
    ckpt.meta.emplace_back("task.noise_std", format_double(task.noise_std));
    ckpt.tensors.emplace_back("task.w_base", task.w_base);
    ckpt.tensors.emplace_back("task.u", task.u);
    ckpt.tensors.emplace_back("task.v", task.v);
    ckpt.tensors.emplace_back("task.spectrum", Matrix::column(task.spectrum));
}

void write_checkpoint(const Checkpoint& ckpt, const fs::path& dir, TensorEncoding encoding) {
    std::ostringstream manifest;
    manifest << "molf-checkpoint " << kCheckpointVersion << '\n';
    for (const auto& [k, v] : ckpt.meta) manifest << "meta " << k << ' ' << v << '\n';
    for (const auto& m : ckpt.modules) {
        manifest << "module " << m.name << ' ' << m.d_out << ' ' << m.d_in << ' '
                 << (m.base_trainable ? 1 : 0) << ' ' << (m.has_bias ? 1 : 0) << ' '
                 << format_double(m.dropout) << ' ' << m.experts.size() << '\n';
        for (std::size_t j = 0; j < m.experts.size(); ++j) {
            manifest << "expert " << m.name << ' ' << j << ' ' << m.experts[j].first << ' '
                     << format_double(m.experts[j].second) << '\n';
        }
    }
    for (const auto& [n, v] : ckpt.counters) manifest << "counter " << n << ' ' << v << '\n';
    for (const auto& [n, s] : ckpt.rngs) {
        manifest << "rng " << n;
        for (auto w : s.words) manifest << ' ' << hex64(w);
        manifest << ' ' << (s.has_spare ? 1 : 0) << ' ' << hex64(std::bit_cast<std::uint64_t>(s.spare))
                 << '\n';
    }

    std::string blob;
    const char* dtype = encoding == TensorEncoding::f64 ? "f64" : "f32";
    for (const auto& [name, m] : ckpt.tensors) {
        manifest << "tensor " << name << ' ' << dtype << ' ' << m.rows() << ' ' << m.cols() << ' '
                 << blob.size() << ' ' << kBlobName << '\n';
        for (double v : m.data()) {
            if (encoding == TensorEncoding::f64) {
                put_le(blob, std::bit_cast<std::uint64_t>(v), 8);
            } else {
                put_le(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
            }
        }
    }

    fs::path tmp = dir;
    tmp += ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    {
        std::ofstream mf(tmp / "manifest", std::ios::binary);
        mf << manifest.str();
        std::ofstream bf(tmp / kBlobName, std::ios::binary);
        bf.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!mf || !bf) throw Error("checkpoint: failed writing " + tmp.string());
    }
    fs::remove_all(dir);
    fs::rename(tmp, dir);
}

Checkpoint read_checkpoint(const fs::path& dir) {
    std::ifstream mf(dir / "manifest", std::ios::binary);
    if (!mf) fail("cannot open " + (dir / "manifest").string());

    std::string header;
    std::getline(mf, header);
    if (header != "molf-checkpoint " + std::to_string(kCheckpointVersion)) {
        fail("unsupported format header '" + header + "'");
    }

    std::map<std::string, std::string> blobs;
    auto blob_for = [&](const std::string& file) -> const std::string& {
        auto it = blobs.find(file);
        if (it != blobs.end()) return it->second;
        if (file.find('/') != std::string::npos || file.find("..") != std::string::npos) {
            fail("blob file name '" + file + "' escapes the checkpoint directory");
        }
        std::ifstream bf(dir / file, std::ios::binary);
        if (!bf) fail("cannot open blob " + file);
        std::ostringstream ss;
        ss << bf.rdbuf();
        return blobs.emplace(file, ss.str()).first->second;
    };

    Checkpoint ckpt;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(mf, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        const std::string ctx = "manifest line " + std::to_string(line_no);
        const std::string& kind = tok[0];

        if (kind == "meta" && tok.size() >= 2) {
            std::string value;
            for (std::size_t i = 2; i < tok.size(); ++i) value += (i > 2 ? " " : "") + tok[i];
            ckpt.meta.emplace_back(tok[1], value);
        } else if (kind == "module" && tok.size() == 8) {
            ModuleRecord rec;
            rec.name = tok[1];
            rec.d_out = to_u64(tok[2], ctx);
            rec.d_in = to_u64(tok[3], ctx);
            rec.base_trainable = to_u64(tok[4], ctx) != 0;
            rec.has_bias = to_u64(tok[5], ctx) != 0;
            rec.dropout = to_double(tok[6], ctx);
            rec.experts.resize(to_u64(tok[7], ctx));
            ckpt.modules.push_back(std::move(rec));
        } else if (kind == "expert" && tok.size() == 5) {
            auto it = std::find_if(ckpt.modules.begin(), ckpt.modules.end(),
                                   [&](const ModuleRecord& r) { return r.name == tok[1]; });
            if (it == ckpt.modules.end()) fail("expert for unknown module " + tok[1]);
            const auto j = to_u64(tok[2], ctx);
            if (j >= it->experts.size()) fail("expert index out of range for module " + tok[1]);
            it->experts[j] = {to_u64(tok[3], ctx), to_double(tok[4], ctx)};
        } else if (kind == "counter" && tok.size() == 3) {
            ckpt.counters.emplace_back(tok[1], to_u64(tok[2], ctx));
        } else if (kind == "rng" && tok.size() == 8) {
            Rng::State s;
            for (int i = 0; i < 4; ++i) s.words[i] = to_u64(tok[2 + i], ctx, 16);
            s.has_spare = to_u64(tok[6], ctx) != 0;
            s.spare = std::bit_cast<double>(to_u64(tok[7], ctx, 16));
            ckpt.rngs.emplace_back(tok[1], s);
        } else if (kind == "tensor" && tok.size() == 7) {
            const std::string& name = tok[1];
            const std::string& dtype = tok[2];
            const std::size_t rows = to_u64(tok[3], ctx);
            const std::size_t cols = to_u64(tok[4], ctx);
            const std::size_t offset = to_u64(tok[5], ctx);
            int width = 0;
            if (dtype == "f64") width = 8;
            else if (dtype == "f32") width = 4;
            else fail("tensor " + name + " has unsupported dtype " + dtype);
            const std::string& blob = blob_for(tok[6]);
            const std::size_t bytes = rows * cols * static_cast<std::size_t>(width);
            if (offset > blob.size() || blob.size() - offset < bytes) {
                fail("tensor " + name + " is truncated (needs " + std::to_string(bytes) +
                     " bytes at offset " + std::to_string(offset) + ", blob holds " +
                     std::to_string(blob.size()) + ")");
            }
            Matrix m(rows, cols);
            for (std::size_t i = 0; i < m.size(); ++i) {
                const std::size_t at = offset + i * static_cast<std::size_t>(width);
                m[i] = width == 8
                           ? std::bit_cast<double>(get_le(blob, at, 8))
                           : static_cast<double>(std::bit_cast<float>(
                                 static_cast<std::uint32_t>(get_le(blob, at, 4))));
            }
            ckpt.tensors.emplace_back(name, std::move(m));
        } else {
            fail("malformed " + ctx + ": '" + line + "'");
        }
    }
    return ckpt;
}

Network network_from_checkpoint(const Checkpoint& ckpt) {
    Network net;
    net.mode = ckpt.meta_value("mode") == "molf_e" ? AdapterMode::molf_e : AdapterMode::molf;
    for (const auto& rec : ckpt.modules) {
        MoLFModule m;
        m.name = rec.name;
        m.base_trainable = rec.base_trainable;
        m.dropout_rate = rec.dropout;
        const std::string prefix = "net." + rec.name;
        m.weight = ckpt.tensor(prefix + ".weight");
        if (m.weight.rows() != rec.d_out || m.weight.cols() != rec.d_in) {
            fail("tensor " + prefix + ".weight has shape " + m.weight.shape_string() +
                 ", module record says (" + std::to_string(rec.d_out) + " x " +
                 std::to_string(rec.d_in) + ")");
        }
        if (rec.has_bias) m.bias = ckpt.tensor(prefix + ".bias");
        for (std::size_t j = 0; j < rec.experts.size(); ++j) {
            LoRAExpert e;
            e.rank = rec.experts[j].first;
            e.alpha = rec.experts[j].second;
            const std::string ep = prefix + ".lora" + std::to_string(j);
            e.a = ckpt.tensor(ep + ".A");
            e.b = ckpt.tensor(ep + ".B");
            m.experts.push_back(std::move(e));
        }
        try {
            m.validate();
        } catch (const Error& e) {
            fail(std::string("module ") + rec.name + " is inconsistent: " + e.what());
        }
        net.modules.push_back(std::move(m));
    }
    return net;
}

SpectralTask task_from_checkpoint(const Checkpoint& ckpt) {
    SpectralTask task;
    task.regime = parse_regime(ckpt.meta_value("task.regime"));
    task.noise_std = to_double(ckpt.meta_value("task.noise_std"), "meta task.noise_std");
    task.w_base = ckpt.tensor("task.w_base");
    task.u = ckpt.tensor("task.u");
    task.v = ckpt.tensor("task.v");
    const Matrix& s = ckpt.tensor("task.spectrum");
    task.spectrum.assign(s.data().begin(), s.data().end());
    if (task.u.rows() != task.w_base.rows() || task.v.rows() != task.w_base.cols() ||
        task.u.cols() != task.spectrum.size() || task.v.cols() != task.spectrum.size()) {
        fail("task tensors have inconsistent shapes");
    }
    task.delta_star = compose_delta(task.u, task.spectrum, task.v);
    return task;
}

void restore_optimizer(const Checkpoint& ckpt, const Network& net, SparseAdamW& opt) {
    auto& states = opt.states();
    if (states.size() != net.modules.size()) fail("optimizer does not match network");
    // Validate everything first.
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        for (std::size_t e = 0; e < states[l].size(); ++e) {
            const std::string prefix = state_prefix(net.modules[l], e);
            (void)ckpt.counter(prefix + ".t");
            for (std::size_t p = 0; p < states[l][e].m.size(); ++p) {
                const std::string mn = prefix + ".m" + std::to_string(p);
                const std::string vn = prefix + ".v" + std::to_string(p);
                check_shape(ckpt.tensor(mn), states[l][e].m[p], mn);
                check_shape(ckpt.tensor(vn), states[l][e].v[p], vn);
            }
        }
    }
    const std::uint64_t steps = ckpt.counter("opt.steps");
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        for (std::size_t e = 0; e < states[l].size(); ++e) {
            const std::string prefix = state_prefix(net.modules[l], e);
            auto& s = states[l][e];
            s.t = ckpt.counter(prefix + ".t");
            for (std::size_t p = 0; p < s.m.size(); ++p) {
                s.m[p] = ckpt.tensor(prefix + ".m" + std::to_string(p));
                s.v[p] = ckpt.tensor(prefix + ".v" + std::to_string(p));
            }
        }
    }
    opt.set_steps_taken(steps);
}

void save_checkpoint(const Network& net, const SparseAdamW& opt, const fs::path& dir) {
    Checkpoint ckpt;
    add_network(ckpt, net);
    add_optimizer(ckpt, net, opt);
    write_checkpoint(ckpt, dir);
}

LoadedState load_checkpoint(const fs::path& dir) {
    LoadedState out;
    out.checkpoint = read_checkpoint(dir);
    out.network = network_from_checkpoint(out.checkpoint);
    return out;
}

} // namespace molf
