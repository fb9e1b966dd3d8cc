#include "molf/harness/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "molf/errors.hpp"

namespace molf {

namespace fs = std::filesystem;

namespace {

enum Stream : std::uint64_t { kTaskStream = 1, kInitStream = 2, kDataStream = 3, kDropoutStream = 4 };

SpectralTask make_task(const RunConfig& cfg, Rng& master) {
    Rng rng = master.fork(kTaskStream);
    return gen_spectral_target(cfg.task.d_out, cfg.task.d_in, cfg.task.regime, cfg.task.params, rng);
}

Network make_network(const RunConfig& cfg, const SpectralTask& task, Rng& master) {
    std::vector<std::size_t> dims{cfg.task.d_in};
    dims.insert(dims.end(), cfg.network.hidden.begin(), cfg.network.hidden.end());
    dims.push_back(cfg.task.d_out);

    std::vector<ExpertSpec> experts;
    for (std::size_t r : cfg.network.ranks) experts.push_back({r, cfg.network.alpha});
    const std::vector<std::vector<ExpertSpec>> per_layer{experts};

    MlpOptions opts;
    opts.bias = cfg.network.bias;
    opts.dropout = cfg.network.dropout;
    opts.a_std = cfg.network.a_std;

    Rng rng = master.fork(kInitStream);
    Network net = build_mlp(dims, per_layer, cfg.network.mode, rng, opts);
    // A single linear layer starts from the task's pretrained weight.
    if (net.modules.size() == 1) net.modules[0].weight = task.w_base;
    return net;
}

RunConfig normalized(RunConfig cfg) {
    cfg.optimizer.schedule.total_steps = cfg.total_steps;
    if (cfg.batch_size == 0) throw ContractError("train.batch_size must be >= 1");
    if (cfg.trace_every == 0) throw ContractError("train.trace_every must be >= 1");
    return cfg;
}

std::vector<std::size_t> argmax_labels(const Matrix& y) {
    std::vector<std::size_t> labels(y.cols(), 0);
    for (std::size_t j = 0; j < y.cols(); ++j) {
        for (std::size_t i = 1; i < y.rows(); ++i) {
            if (y(i, j) > y(labels[j], j)) labels[j] = i;
        }
    }
    return labels;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Trainer::Trainer(RunConfig cfg)
    : cfg_(normalized(std::move(cfg))),
      task_([&] {
          Rng master(cfg_.seed);
          return make_task(cfg_, master);
      }()),
      net_([&] {
          Rng master(cfg_.seed);
          return make_network(cfg_, task_, master);
      }()),
      optimizer_(net_, cfg_.optimizer),
      data_rng_(Rng(cfg_.seed).fork(kDataStream)),
      dropout_rng_(Rng(cfg_.seed).fork(kDropoutStream)) {}

std::optional<double> Trainer::population_loss() const {
    if (cfg_.task.kind != TaskKind::regression || net_.modules.size() != 1) return std::nullopt;
    return molf::population_loss(task_, net_.modules[0]);
}

StepReport Trainer::step() {
    const std::uint64_t index = steps_done();
    const double multiplier = lr_at(cfg_.optimizer.schedule, index);

    Batch batch = sample_batch(task_, cfg_.batch_size, data_rng_);
    NetworkTape tape = record_network(net_, batch.x, true, dropout_rng_);
    NodeId loss;
    if (cfg_.task.kind == TaskKind::regression) {
        // 1/2 * mean over the batch of ||error||^2.
        const NodeId target = tape.graph.leaf(std::move(batch.y));
        loss = tape.graph.scale(tape.graph.mse(tape.output, target),
                                0.5 * static_cast<double>(cfg_.task.d_out));
    } else {
        loss = tape.graph.softmax_cross_entropy(tape.output, argmax_labels(batch.y));
    }

    StepReport report;
    report.train_loss = tape.graph.value(loss)[0];
    if (!std::isfinite(report.train_loss)) {
        throw NumericError("non-finite training loss at step " + std::to_string(index + 1));
    }
    const NetworkGrads grads = expert_gradients(net_, tape, loss);
    report.decisions = optimizer_.step(net_, grads, multiplier);
    report.step = steps_done();
    report.population_loss = population_loss();
    return report;
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ckpt;
    ckpt.meta.emplace_back("seed", std::to_string(cfg_.seed));
    add_network(ckpt, net_);
    add_optimizer(ckpt, net_, optimizer_);
    add_task(ckpt, task_);
    ckpt.rngs.emplace_back("data", data_rng_.state());
    ckpt.rngs.emplace_back("dropout", dropout_rng_.state());
    return ckpt;
}

void Trainer::save(const fs::path& dir) const { write_checkpoint(checkpoint(), dir); }

void Trainer::restore(const Checkpoint& ckpt) {
    Network net = network_from_checkpoint(ckpt);
    if (net.modules.size() != net_.modules.size()) {
        throw LoadError("checkpoint: network has " + std::to_string(net.modules.size()) +
                        " modules, run expects " + std::to_string(net_.modules.size()));
    }
    for (std::size_t l = 0; l < net.modules.size(); ++l) {
        const auto& a = net.modules[l];
        const auto& b = net_.modules[l];
        if (a.name != b.name || !a.weight.same_shape(b.weight) ||
            a.experts.size() != b.experts.size() || a.base_trainable != b.base_trainable ||
            a.bias.has_value() != b.bias.has_value()) {
            throw LoadError("checkpoint: module " + a.name + " does not match the run's layout");
        }
        for (std::size_t j = 0; j < a.experts.size(); ++j) {
            if (a.experts[j].rank != b.experts[j].rank) {
                throw LoadError("checkpoint: tensor net." + a.name + ".lora" + std::to_string(j) +
                                ".A has rank " + std::to_string(a.experts[j].rank) +
                                ", run expects " + std::to_string(b.experts[j].rank));
            }
        }
    }
    SpectralTask task = task_from_checkpoint(ckpt);
    const Rng::State data = ckpt.rng("data");
    const Rng::State dropout = ckpt.rng("dropout");

    SparseAdamW opt(net, cfg_.optimizer);
    restore_optimizer(ckpt, net, opt);

    net_ = std::move(net);
    optimizer_ = std::move(opt);
    task_ = std::move(task);
    data_rng_.set_state(data);
    dropout_rng_.set_state(dropout);
}

RunSummary train_run(const RunConfig& input) {
    const RunConfig cfg = normalized(input);
    fs::create_directories(cfg.out_dir);
    {
        std::ofstream echo(cfg.out_dir / "config");
        echo << canonical_config(cfg);
    }

    Trainer trainer(cfg);
    if (!cfg.resume_from.empty()) trainer.restore(read_checkpoint(cfg.resume_from));

    std::ofstream metrics(cfg.out_dir / "metrics.csv");
    metrics << "step,train_loss,population_loss\n";
    std::ofstream traces(cfg.out_dir / "traces.jsonl");

    RunSummary summary;
    fs::path last_checkpoint;
    auto write_ckpt = [&](std::uint64_t step) {
        last_checkpoint = cfg.out_dir / ("ckpt_" + std::to_string(step));
        metrics.flush();
        traces.flush();
        trainer.save(last_checkpoint);
    };

    while (trainer.steps_done() < cfg.total_steps) {
        StepReport r;
        try {
            r = trainer.step();
        } catch (const NumericError& e) {
            write_ckpt(trainer.steps_done());
            throw NumericError(std::string(e.what()) + "; last good state saved to " +
                               last_checkpoint.string());
        }
        metrics << r.step << ',' << fmt(r.train_loss) << ','
                << (r.population_loss ? fmt(*r.population_loss) : "") << '\n';
        if (r.step % cfg.trace_every == 0) {
            for (const auto& d : r.decisions) traces << trace_record_json(d) << '\n';
        }
        summary.final_train_loss = r.train_loss;
        summary.final_population_loss = r.population_loss;
        if (cfg.checkpoint_every > 0 && r.step % cfg.checkpoint_every == 0) write_ckpt(r.step);
    }
    if (last_checkpoint.empty() ||
        last_checkpoint.filename() != "ckpt_" + std::to_string(trainer.steps_done())) {
        write_ckpt(trainer.steps_done());
    }
    metrics.close();
    traces.close();

    const TraceSummary ts = export_traces(cfg.out_dir);
    summary.modules = ts.modules;
    summary.selection_fractions = ts.fractions;
    summary.checkpoint = last_checkpoint;
    if (cfg.network.mode == AdapterMode::molf && !ts.fractions.empty()) {
        double fft = 0.0;
        for (const auto& f : ts.fractions) fft += f.empty() ? 0.0 : f[0];
        summary.fft_fraction = fft / static_cast<double>(ts.fractions.size());
    }
    return summary;
}

} // namespace molf
