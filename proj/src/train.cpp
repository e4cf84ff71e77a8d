#include "featfilter/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <future>
#include <stdexcept>
#include <thread>

#include "featfilter/io.hpp"
#include "featfilter/layers.hpp"
#include "featfilter/rng.hpp"

namespace fs = std::filesystem;

namespace ff {

const char* const kCheckpointTags[5] = {"Es", "Esm", "Em", "Enm", "En"};

AdamState adam_init(const LayerGraph& graph) {
    AdamState s;
    s.m = zero_like_params(graph);
    s.v = zero_like_params(graph);
    return s;
}

void adam_step(LayerGraph& graph, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& config) {
    const auto& params = graph.params();
    if (grads.size() != params.size() || state.m.size() != params.size())
        throw std::invalid_argument("adam_step: gradient/state size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (!grads[i].same_dims(graph.param_value(i)))
            throw std::invalid_argument("adam_step: gradient extent mismatch at " + params[i].name);

    state.t += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        Tensor& p = graph.param_value(i);
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        const Tensor& g = grads[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
            v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            p[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
        }
    }
}

namespace {

std::string first_nonfinite_node(const LayerGraph& graph, const ForwardTrace& trace) {
    for (std::size_t i = 0; i < trace.nodes.size(); ++i)
        if (trace.nodes[i].out.size() != 0 && !trace.nodes[i].out.all_finite())
            return graph.nodes()[i].name;
    return "loss";
}

double val_epoch_loss(LayerGraph& graph, const std::vector<Sample>& val_set) {
    double total = 0.0;
    for (const Sample& s : val_set) {
        ForwardTrace t = run_forward(graph, s.image, Mode::eval);
        total += softmax_ce_loss(t.logits(), s.label).loss;
    }
    return total / static_cast<double>(val_set.size());
}

}  // namespace

std::string record_csv(const RunRecord& record) {
    std::string csv = "epoch,train_loss,val_loss\n";
    for (const EpochStat& e : record.epochs)
        csv += std::to_string(e.epoch) + "," + fmt_double(e.train_loss) + "," +
               fmt_double(e.val_loss) + "\n";
    return csv;
}

RunRecord train_run(const NetworkSpec& spec, const std::vector<Sample>& train_set,
                    const std::vector<Sample>& val_set, const TrainConfig& config,
                    const std::string& out_dir) {
    if (train_set.empty() || val_set.empty())
        throw std::invalid_argument("train_run: empty train or validation set");
    if (config.epochs < 1) throw std::invalid_argument("train_run: epochs must be >= 1");
    if (config.batch_size < 1) throw std::invalid_argument("train_run: batch_size must be >= 1");

    LayerGraph graph = build(spec);
    AdamState adam = adam_init(graph);
    Rng order_rng(config.seed, "order");

    RunRecord record;
    std::vector<std::vector<Tensor>> snapshots;
    snapshots.reserve(static_cast<std::size_t>(config.epochs));

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<Tensor> grads, batch_grads;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        order_rng.shuffle(order);
        double train_loss = 0.0;
        std::size_t b = 0;
        while (b < order.size()) {
            const std::size_t batch_end = std::min(order.size(), b + static_cast<std::size_t>(config.batch_size));
            const double inv = 1.0 / static_cast<double>(batch_end - b);
            bool first = true;
            for (; b < batch_end; ++b) {
                const Sample& s = train_set[order[b]];
                ForwardTrace trace = run_forward(graph, s.image, Mode::train);
                CeLoss ce = softmax_ce_loss(trace.logits(), s.label);
                if (!std::isfinite(ce.loss))
                    throw std::runtime_error("train_run: non-finite loss at epoch " +
                                             std::to_string(epoch) + ", sample " +
                                             std::to_string(s.id) + ", node " +
                                             first_nonfinite_node(graph, trace));
                train_loss += ce.loss;
                run_backward(graph, trace, ce.grad_logits, grads);
                if (first) {
                    batch_grads = std::move(grads);
                    first = false;
                } else {
                    for (std::size_t i = 0; i < grads.size(); ++i)
                        for (std::size_t j = 0; j < grads[i].size(); ++j)
                            batch_grads[i][j] += grads[i][j];
                }
            }
            if (inv != 1.0)
                for (auto& g : batch_grads)
                    for (double& v : g.values()) v *= inv;
            adam_step(graph, batch_grads, adam, config);
        }
        train_loss /= static_cast<double>(order.size());
        const double val_loss = val_epoch_loss(graph, val_set);
        if (!std::isfinite(val_loss))
            throw std::runtime_error("train_run: non-finite validation loss at epoch " +
                                     std::to_string(epoch));
        record.epochs.push_back(EpochStat{epoch, train_loss, val_loss});
        snapshots.push_back(snapshot_params(graph));
    }

    int best = 0;
    for (int e = 1; e < config.epochs; ++e)
        if (record.epochs[static_cast<std::size_t>(e)].val_loss <
            record.epochs[static_cast<std::size_t>(best)].val_loss)
            best = e;
    record.best_epoch = best;

    const int es = 0, em = best, en = config.epochs - 1;
    record.tag_epoch = {{"Es", es}, {"Esm", (es + em) / 2}, {"Em", em},
                        {"Enm", (em + en) / 2}, {"En", en}};
    for (const char* tag : kCheckpointTags)
        record.tag_params[tag] = snapshots[static_cast<std::size_t>(record.tag_epoch[tag])];

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file_atomic(path_join(out_dir, "record.csv"), record_csv(record));
        for (const char* tag : kCheckpointTags) {
            restore_params(graph, record.tag_params[tag]);
            save_checkpoint(graph, path_join(path_join(out_dir, "ckpt"), tag));
        }
    }
    return record;
}

SummaryStat summarize(const std::vector<double>& xs) {
    SummaryStat s;
    if (xs.empty()) return s;
    for (double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double acc = 0.0;
        for (double x : xs) acc += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
    }
    return s;
}

MultiSeedResult multi_seed(const NetworkSpec& spec, const std::vector<Sample>& train_set,
                           const std::vector<Sample>& val_set, const TrainConfig& config,
                           const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
    if (seeds.empty()) throw std::invalid_argument("multi_seed: need at least one seed");

    auto run_one = [&](std::size_t k) -> SeedOutcome {
        SeedOutcome out;
        out.seed = seeds[k];
        NetworkSpec s = spec;
        s.seed = seeds[k];
        TrainConfig c = config;
        c.seed = seeds[k];
        std::string dir;
        if (!out_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof name, "seed%04zu", k);
            dir = path_join(out_dir, name);
        }
        out.record = train_run(s, train_set, val_set, c, dir);
        out.best_val_loss =
            out.record.epochs[static_cast<std::size_t>(out.record.best_epoch)].val_loss;

        LayerGraph graph = build(s);
        restore_params(graph, out.record.tag_params.at("Em"));
        std::vector<double> dice_acc(static_cast<std::size_t>(s.num_classes), 0.0);
        std::vector<double> hd_acc(static_cast<std::size_t>(s.num_classes), 0.0);
        double ms_dice = 0.0, ms_hd = 0.0;
        for (const Sample& sm : val_set) {
            const LabelMap pred = predict(graph, sm.image);
            const auto rows = evaluate_classes(pred, sm.label, s.num_classes);
            for (const auto& r : rows) {
                dice_acc[static_cast<std::size_t>(r.class_id)] += r.dice;
                hd_acc[static_cast<std::size_t>(r.class_id)] += r.hausdorff;
            }
            const MeanSeg m = mean_seg(rows);
            ms_dice += m.dice;
            ms_hd += m.hausdorff;
        }
        const double inv = 1.0 / static_cast<double>(val_set.size());
        for (int cid = 1; cid < s.num_classes; ++cid)
            out.val_class_means.push_back(MetricsRow{cid,
                                                     dice_acc[static_cast<std::size_t>(cid)] * inv,
                                                     hd_acc[static_cast<std::size_t>(cid)] * inv});
        out.val_mean_seg = MeanSeg{ms_dice * inv, ms_hd * inv};
        return out;
    };

    MultiSeedResult result;
    result.runs.resize(seeds.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    if (hw > 1 && seeds.size() > 1) {
        std::vector<std::future<SeedOutcome>> futs;
        futs.reserve(seeds.size());
        for (std::size_t k = 0; k < seeds.size(); ++k)
            futs.push_back(std::async(std::launch::async, run_one, k));
        for (std::size_t k = 0; k < seeds.size(); ++k) result.runs[k] = futs[k].get();
    } else {
        for (std::size_t k = 0; k < seeds.size(); ++k) result.runs[k] = run_one(k);
    }

    const int num_classes = spec.num_classes;
    for (int cid = 1; cid < num_classes; ++cid) {
        std::vector<double> ds, hs;
        for (const auto& r : result.runs) {
            ds.push_back(r.val_class_means[static_cast<std::size_t>(cid - 1)].dice);
            hs.push_back(r.val_class_means[static_cast<std::size_t>(cid - 1)].hausdorff);
        }
        result.per_class.push_back(ClassSummary{cid, summarize(ds), summarize(hs)});
    }
    {
        std::vector<double> ds, hs, bl;
        for (const auto& r : result.runs) {
            ds.push_back(r.val_mean_seg.dice);
            hs.push_back(r.val_mean_seg.hausdorff);
            bl.push_back(r.best_val_loss);
        }
        result.mean_seg = ClassSummary{-1, summarize(ds), summarize(hs)};
        result.best_val_loss = summarize(bl);
    }
    return result;
}

}  // namespace ff
