#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "featfilter/metrics.hpp"
#include "featfilter/nets.hpp"
#include "featfilter/synthdata.hpp"

namespace ff {

struct TrainConfig {
    int epochs = 20;
    double learning_rate = 0.001;
    int batch_size = 1;  // gradients average over the batch; BN stays per-sample
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;  // shuffle order stream
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long long t = 0;
};

AdamState adam_init(const LayerGraph& graph);

// One bias-corrected Adam update over all trainable parameters. Shapes are
// validated before anything mutates, so a failed step changes nothing.
void adam_step(LayerGraph& graph, const std::vector<Tensor>& grads, AdamState& state,
               const TrainConfig& config);

struct EpochStat {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

// Checkpoint tags: Es first epoch, Em best-validation epoch (earliest on
// ties), En last, Esm / Enm the floor midpoints of (Es,Em) and (Em,En).
extern const char* const kCheckpointTags[5];

struct RunRecord {
    std::vector<EpochStat> epochs;
    int best_epoch = 0;
    std::map<std::string, int> tag_epoch;
    std::map<std::string, std::vector<Tensor>> tag_params;  // full snapshots, BN stats included
};

// Trains a fresh network built from `spec`. If out_dir is non-empty, writes
// record.csv and ckpt/<tag>/ checkpoint directories there. Throws with the
// offending epoch/sample/node on non-finite loss.
RunRecord train_run(const NetworkSpec& spec, const std::vector<Sample>& train_set,
                    const std::vector<Sample>& val_set, const TrainConfig& config,
                    const std::string& out_dir = "");

std::string record_csv(const RunRecord& record);

struct SummaryStat {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single run
};

struct SeedOutcome {
    std::uint64_t seed = 0;
    RunRecord record;
    std::vector<MetricsRow> val_class_means;  // per foreground class at the Em checkpoint
    MeanSeg val_mean_seg;
    double best_val_loss = 0.0;
};

struct ClassSummary {
    int class_id = 0;
    SummaryStat dice;
    SummaryStat hausdorff;
};

struct MultiSeedResult {
    std::vector<SeedOutcome> runs;
    std::vector<ClassSummary> per_class;
    ClassSummary mean_seg;  // class_id -1
    SummaryStat best_val_loss;
};

// Independent runs over the given seeds (network init and shuffle order both
// derive from each seed). Runs may execute on a small worker pool; outputs
// are deterministic either way. If out_dir is non-empty each run writes into
// out_dir/seedNNNN/.
MultiSeedResult multi_seed(const NetworkSpec& spec, const std::vector<Sample>& train_set,
                           const std::vector<Sample>& val_set, const TrainConfig& config,
                           const std::vector<std::uint64_t>& seeds, const std::string& out_dir = "");

SummaryStat summarize(const std::vector<double>& xs);

}  // namespace ff
