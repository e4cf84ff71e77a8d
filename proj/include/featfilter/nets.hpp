#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "featfilter/layers.hpp"
#include "featfilter/tensor.hpp"

namespace ff {

enum class Family { fcn, unet };

// Architecture description. The same spec with with_cff toggled yields the
// filtered and unfiltered variants of one network; every conv block keeps
// its name, so shared parameters initialise identically from the same seed
// and the comparison isolates the filter.
struct NetworkSpec {
    Family family = Family::unet;
    int depth = 3;
    int base_channels = 8;
    bool with_cff = false;
    int cff_kernel_size = 1;  // 1 or 3
    BlockOrder block_order = BlockOrder::relu_bn;
    int num_classes = 4;
    std::uint64_t seed = 1;
};

// Key-value round trip for NetworkSpec (config files, checkpoint echo).
std::string netspec_to_text(const NetworkSpec& spec);
NetworkSpec netspec_from_text(const std::string& text);
void apply_net_key(NetworkSpec& spec, const std::string& key, const std::string& value);
std::vector<std::pair<std::string, std::string>> net_key_values(const NetworkSpec& spec);

enum class NodeKind { input, bc, fbc, maxpool, upsample, concat, add, head };

struct GraphNode {
    NodeKind kind = NodeKind::input;
    std::string name;
    std::vector<int> inputs;  // producing node ids
    int state = -1;           // index into the per-kind state store
    int gate = -1;            // filtered blocks: index of the gate state
};

enum class ParamKind {
    conv_w, conv_b, bn_gamma, bn_beta, bn_rmean, bn_rvar, gate_w, gate_b, head_w, head_b
};

struct ParamRef {
    std::string name;
    ParamKind kind = ParamKind::conv_w;
    int state = -1;
    bool trainable = true;  // running BN stats ride along untrained
};

class LayerGraph {
public:
    const NetworkSpec& spec() const { return spec_; }
    const std::vector<GraphNode>& nodes() const { return nodes_; }
    const std::vector<ParamRef>& params() const { return params_; }

    Tensor& param_value(std::size_t i);
    const Tensor& param_value(std::size_t i) const;
    int param_index(const std::string& name) const;  // -1 if absent

    // Exact count of trainable scalars (conv weights/biases, BN gamma/beta,
    // gate weights/biases). Running statistics are tracked, not trained.
    long long count_params() const;

    std::vector<int> fbc_node_ids() const;

    BcState& bc_state(int i) { return bc_states_[static_cast<std::size_t>(i)]; }
    CffState& cff_state(int i) { return cff_states_[static_cast<std::size_t>(i)]; }
    ConvKernel& head_kernel(int i) { return head_states_[static_cast<std::size_t>(i)]; }
    const BcState& bc_state(int i) const { return bc_states_[static_cast<std::size_t>(i)]; }
    const CffState& cff_state(int i) const { return cff_states_[static_cast<std::size_t>(i)]; }
    const ConvKernel& head_kernel(int i) const { return head_states_[static_cast<std::size_t>(i)]; }

private:
    friend LayerGraph build(const NetworkSpec& spec);
    friend class GraphBuilder;

    NetworkSpec spec_;
    std::vector<GraphNode> nodes_;
    std::vector<BcState> bc_states_;
    std::vector<CffState> cff_states_;
    std::vector<ConvKernel> head_states_;
    std::vector<ParamRef> params_;
    std::map<std::string, int> param_index_;
};

// Deterministic builder. Every parameter draws from its own stream derived
// from (spec.seed, parameter name), so inserting filter gates leaves all
// other initial values untouched.
LayerGraph build(const NetworkSpec& spec);

struct NodeTrace {
    Tensor out;
    Tensor f;  // filtered blocks: features before the gate
    BcCache bc;
    CffCache cff;
    std::vector<std::size_t> pool_idx;
    std::vector<std::size_t> pool_in_dims;
    Tensor head_in;
};

struct ForwardTrace {
    std::vector<NodeTrace> nodes;
    int output_node = -1;

    const Tensor& logits() const { return nodes[static_cast<std::size_t>(output_node)].out; }
};

// Runs the graph on one (H, W, 1) sample. H and W must be divisible by
// 2^depth. Train mode keeps caches for run_backward and updates BN running
// statistics; eval mode uses the running statistics.
ForwardTrace run_forward(LayerGraph& graph, const Tensor& x, Mode mode);

// Fills per-parameter gradients (same order as graph.params(); shapes match
// the parameter values). Requires a train-mode trace.
void run_backward(LayerGraph& graph, const ForwardTrace& trace, const Tensor& grad_logits,
                  std::vector<Tensor>& param_grads);

std::vector<Tensor> zero_like_params(const LayerGraph& graph);

LabelMap predict(LayerGraph& graph, const Tensor& x);

// Pins every gate wide open (weights 0, bias high), making the filtered
// network numerically equal to its unfiltered twin.
void freeze_gates_high(LayerGraph& graph, double bias = 20.0);

// Checkpoints: one FSM1 file per named parameter, a manifest of
// name,file,dims lines, and the network spec echoed alongside.
void save_checkpoint(const LayerGraph& graph, const std::string& dir);
void load_checkpoint_into(LayerGraph& graph, const std::string& dir);
LayerGraph load_checkpoint(const std::string& dir);

std::vector<Tensor> snapshot_params(const LayerGraph& graph);
void restore_params(LayerGraph& graph, const std::vector<Tensor>& snapshot);

}  // namespace ff
