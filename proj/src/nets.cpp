#include "featfilter/nets.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "featfilter/io.hpp"
#include "featfilter/rng.hpp"

namespace fs = std::filesystem;

namespace ff {

namespace {

std::string family_name(Family f) { return f == Family::fcn ? "fcn" : "unet"; }

std::string order_name(BlockOrder o) {
    return o == BlockOrder::relu_bn ? "relu_bn" : "bn_relu";
}

bool parse_flag(const std::string& v, const std::string& key) {
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    throw std::invalid_argument(key + ": expected a boolean, got '" + v + "'");
}

long long parse_ll(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
    }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> net_key_values(const NetworkSpec& s) {
    return {
        {"net.base_channels", std::to_string(s.base_channels)},
        {"net.block_order", order_name(s.block_order)},
        {"net.cff_kernel_size", std::to_string(s.cff_kernel_size)},
        {"net.depth", std::to_string(s.depth)},
        {"net.family", family_name(s.family)},
        {"net.num_classes", std::to_string(s.num_classes)},
        {"net.seed", std::to_string(s.seed)},
        {"net.with_cff", s.with_cff ? "true" : "false"},
    };
}

void apply_net_key(NetworkSpec& spec, const std::string& key, const std::string& value) {
    if (key == "net.family") {
        if (value == "fcn") spec.family = Family::fcn;
        else if (value == "unet") spec.family = Family::unet;
        else throw std::invalid_argument("net.family: expected fcn|unet, got '" + value + "'");
    } else if (key == "net.depth") {
        const long long d = parse_ll(value, key);
        if (d < 1 || d > 6) throw std::invalid_argument("net.depth: out of range [1,6]");
        spec.depth = static_cast<int>(d);
    } else if (key == "net.base_channels") {
        const long long b = parse_ll(value, key);
        if (b < 1 || b > 512) throw std::invalid_argument("net.base_channels: out of range [1,512]");
        spec.base_channels = static_cast<int>(b);
    } else if (key == "net.with_cff") {
        spec.with_cff = parse_flag(value, key);
    } else if (key == "net.cff_kernel_size") {
        const long long k = parse_ll(value, key);
        if (k != 1 && k != 3) throw std::invalid_argument("net.cff_kernel_size: expected 1 or 3");
        spec.cff_kernel_size = static_cast<int>(k);
    } else if (key == "net.block_order") {
        if (value == "relu_bn") spec.block_order = BlockOrder::relu_bn;
        else if (value == "bn_relu") spec.block_order = BlockOrder::bn_relu;
        else throw std::invalid_argument("net.block_order: expected relu_bn|bn_relu");
    } else if (key == "net.num_classes") {
        const long long k = parse_ll(value, key);
        if (k < 2 || k > 255) throw std::invalid_argument("net.num_classes: out of range [2,255]");
        spec.num_classes = static_cast<int>(k);
    } else if (key == "net.seed") {
        try {
            spec.seed = std::stoull(value);
        } catch (const std::exception&) {
            throw std::invalid_argument("net.seed: expected an unsigned integer");
        }
    } else {
        throw std::invalid_argument("unknown network key '" + key + "'");
    }
}

std::string netspec_to_text(const NetworkSpec& spec) {
    std::string out;
    for (const auto& [k, v] : net_key_values(spec)) out += k + " = " + v + "\n";
    return out;
}

NetworkSpec netspec_from_text(const std::string& text) {
    NetworkSpec spec;
    std::istringstream in(text);
    std::string line;
    auto trim = [](const std::string& s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        if (trim(line).empty() || trim(line)[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("netspec: malformed line '" + line + "'");
        apply_net_key(spec, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return spec;
}

Tensor& LayerGraph::param_value(std::size_t i) {
    const ParamRef& p = params_.at(i);
    switch (p.kind) {
        case ParamKind::conv_w: return bc_states_[p.state].conv.weights;
        case ParamKind::conv_b: return bc_states_[p.state].conv.biases;
        case ParamKind::bn_gamma: return bc_states_[p.state].bn.gamma;
        case ParamKind::bn_beta: return bc_states_[p.state].bn.beta;
        case ParamKind::bn_rmean: return bc_states_[p.state].bn.running_mean;
        case ParamKind::bn_rvar: return bc_states_[p.state].bn.running_var;
        case ParamKind::gate_w: return cff_states_[p.state].gate.weights;
        case ParamKind::gate_b: return cff_states_[p.state].gate.biases;
        case ParamKind::head_w: return head_states_[p.state].weights;
        case ParamKind::head_b: return head_states_[p.state].biases;
    }
    throw std::logic_error("param_value: bad kind");
}

const Tensor& LayerGraph::param_value(std::size_t i) const {
    return const_cast<LayerGraph*>(this)->param_value(i);
}

int LayerGraph::param_index(const std::string& name) const {
    const auto it = param_index_.find(name);
    return it == param_index_.end() ? -1 : it->second;
}

long long LayerGraph::count_params() const {
    long long n = 0;
    for (std::size_t i = 0; i < params_.size(); ++i)
        if (params_[i].trainable) n += static_cast<long long>(param_value(i).size());
    return n;
}

std::vector<int> LayerGraph::fbc_node_ids() const {
    std::vector<int> ids;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].kind == NodeKind::fbc) ids.push_back(static_cast<int>(i));
    return ids;
}

class GraphBuilder {
public:
    explicit GraphBuilder(const NetworkSpec& spec) { g_.spec_ = spec; }

    int input() { return push({NodeKind::input, "input", {}, -1, -1}); }

    int conv_block(const std::string& name, int in_node, int in_ch, int out_ch) {
        const NetworkSpec& s = g_.spec_;
        BcState bc;
        bc.conv = ConvKernel(3, 3, static_cast<std::size_t>(in_ch), static_cast<std::size_t>(out_ch));
        bc.bn = BatchNormState(static_cast<std::size_t>(out_ch));
        bc.order = s.block_order;
        const int bidx = static_cast<int>(g_.bc_states_.size());
        g_.bc_states_.push_back(std::move(bc));
        param(name + ".conv.w", ParamKind::conv_w, bidx, true);
        param(name + ".conv.b", ParamKind::conv_b, bidx, true);
        param(name + ".bn.gamma", ParamKind::bn_gamma, bidx, true);
        param(name + ".bn.beta", ParamKind::bn_beta, bidx, true);
        param(name + ".bn.rmean", ParamKind::bn_rmean, bidx, false);
        param(name + ".bn.rvar", ParamKind::bn_rvar, bidx, false);
        if (!s.with_cff) return push({NodeKind::bc, name, {in_node}, bidx, -1});

        CffState cff;
        const auto k = static_cast<std::size_t>(s.cff_kernel_size);
        cff.gate = ConvKernel(k, k, static_cast<std::size_t>(out_ch), static_cast<std::size_t>(out_ch));
        const int cidx = static_cast<int>(g_.cff_states_.size());
        g_.cff_states_.push_back(std::move(cff));
        param(name + ".gate.w", ParamKind::gate_w, cidx, true);
        param(name + ".gate.b", ParamKind::gate_b, cidx, true);
        return push({NodeKind::fbc, name, {in_node}, bidx, cidx});
    }

    int pool(const std::string& name, int in) { return push({NodeKind::maxpool, name, {in}, -1, -1}); }
    int up(const std::string& name, int in) { return push({NodeKind::upsample, name, {in}, -1, -1}); }
    int cat(const std::string& name, int a, int b) {
        return push({NodeKind::concat, name, {a, b}, -1, -1});
    }
    int sum(const std::string& name, int a, int b) {
        return push({NodeKind::add, name, {a, b}, -1, -1});
    }

    int head(const std::string& name, int in_node, int in_ch, int out_ch) {
        const int hidx = static_cast<int>(g_.head_states_.size());
        g_.head_states_.emplace_back(1, 1, static_cast<std::size_t>(in_ch),
                                     static_cast<std::size_t>(out_ch));
        param(name + ".conv.w", ParamKind::head_w, hidx, true);
        param(name + ".conv.b", ParamKind::head_b, hidx, true);
        return push({NodeKind::head, name, {in_node}, hidx, -1});
    }

    LayerGraph finish() {
        init_params();
        for (std::size_t i = 0; i < g_.params_.size(); ++i)
            g_.param_index_[g_.params_[i].name] = static_cast<int>(i);
        return std::move(g_);
    }

private:
    int push(GraphNode n) {
        g_.nodes_.push_back(std::move(n));
        return static_cast<int>(g_.nodes_.size()) - 1;
    }

    void param(const std::string& name, ParamKind kind, int state, bool trainable) {
        g_.params_.push_back(ParamRef{name, kind, state, trainable});
    }

    // Every parameter draws from a stream derived from (seed, name): shared
    // conv-block parameters come out identical whether gates exist or not.
    void init_params() {
        for (std::size_t i = 0; i < g_.params_.size(); ++i) {
            const ParamRef& p = g_.params_[i];
            Tensor& value = g_.param_value(i);
            Rng rng(g_.spec_.seed, p.name);
            if (p.kind == ParamKind::conv_w || p.kind == ParamKind::head_w) {
                const auto& dims = value.dims();  // (kh, kw, ic, oc)
                const double fan_in = static_cast<double>(dims[0] * dims[1] * dims[2]);
                const double lim = std::sqrt(6.0 / fan_in);
                for (double& v : value.values()) v = rng.uniform(-lim, lim);
            } else if (p.kind == ParamKind::gate_w) {
                const double lim = 1.0 / std::sqrt(static_cast<double>(value.dims()[2]));
                for (double& v : value.values()) v = rng.uniform(-lim, lim);
            }
            // biases and BN beta start at zero, gamma at one, running stats
            // at (0, 1) — all set by construction
        }
    }

    LayerGraph g_;
};

LayerGraph build(const NetworkSpec& spec) {
    if (spec.depth < 1) throw std::invalid_argument("build: depth must be positive");
    if (spec.base_channels < 1) throw std::invalid_argument("build: base_channels must be positive");
    if (spec.cff_kernel_size != 1 && spec.cff_kernel_size != 3)
        throw std::invalid_argument("build: cff_kernel_size must be 1 or 3");
    if (spec.num_classes < 2) throw std::invalid_argument("build: need at least 2 classes");

    GraphBuilder b(spec);
    const int x = b.input();
    const int d = spec.depth;
    const int base = spec.base_channels;

    if (spec.family == Family::unet) {
        std::vector<int> skip_nodes;
        std::vector<int> skip_ch;
        int prev = x, ch = 1;
        for (int s = 1; s <= d; ++s) {
            const int oc = base << (s - 1);
            const std::string tag = "enc" + std::to_string(s);
            int n = b.conv_block(tag + "a", prev, ch, oc);
            n = b.conv_block(tag + "b", n, oc, oc);
            skip_nodes.push_back(n);
            skip_ch.push_back(oc);
            prev = b.pool("pool" + std::to_string(s), n);
            ch = oc;
        }
        const int boc = base << d;
        int n = b.conv_block("bott_a", prev, ch, boc);
        prev = b.conv_block("bott_b", n, boc, boc);
        ch = boc;
        for (int s = d; s >= 1; --s) {
            const std::string tag = std::to_string(s);
            const int u = b.up("up" + tag, prev);
            const int c = b.cat("cat" + tag, u, skip_nodes[static_cast<std::size_t>(s - 1)]);
            const int oc = base << (s - 1);
            int m = b.conv_block("dec" + tag + "a", c, ch + skip_ch[static_cast<std::size_t>(s - 1)], oc);
            prev = b.conv_block("dec" + tag + "b", m, oc, oc);
            ch = oc;
        }
        b.head("head", prev, ch, spec.num_classes);
    } else {
        // encoder identical to the unet family; decoder scores the deepest
        // feature, upsamples, fuses one mid-depth score by summation, then
        // upsamples the class map back to full resolution
        std::vector<int> pool_nodes;
        std::vector<int> pool_ch;
        int prev = x, ch = 1;
        for (int s = 1; s <= d; ++s) {
            const int oc = base << (s - 1);
            const std::string tag = "enc" + std::to_string(s);
            int n = b.conv_block(tag + "a", prev, ch, oc);
            n = b.conv_block(tag + "b", n, oc, oc);
            prev = b.pool("pool" + std::to_string(s), n);
            pool_nodes.push_back(prev);
            pool_ch.push_back(oc);
            ch = oc;
        }
        int cur = b.head("score_deep", prev, ch, spec.num_classes);
        cur = b.up("up_deep", cur);
        if (d >= 2) {
            const int skip = pool_nodes[static_cast<std::size_t>(d - 2)];
            const int sc = b.head("score_skip", skip, pool_ch[static_cast<std::size_t>(d - 2)],
                                  spec.num_classes);
            cur = b.sum("fuse", cur, sc);
        }
        for (int s = d - 1; s >= 1; --s) cur = b.up("up" + std::to_string(s), cur);
    }
    return b.finish();
}

ForwardTrace run_forward(LayerGraph& graph, const Tensor& x, Mode mode) {
    if (x.rank() != 3 || x.dim(2) != 1)
        throw std::invalid_argument("run_forward: expected an (h, w, 1) input tensor");
    const std::size_t div = 1ull << static_cast<unsigned>(graph.spec().depth);
    if (x.dim(0) % div != 0 || x.dim(1) % div != 0)
        throw std::invalid_argument("run_forward: input extents " + std::to_string(x.dim(0)) + "x" +
                                    std::to_string(x.dim(1)) + " not divisible by 2^depth = " +
                                    std::to_string(div));

    ForwardTrace t;
    const auto& nodes = graph.nodes();
    t.nodes.resize(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const GraphNode& n = nodes[i];
        NodeTrace& tr = t.nodes[i];
        auto in = [&](std::size_t k) -> const Tensor& {
            return t.nodes[static_cast<std::size_t>(n.inputs[k])].out;
        };
        switch (n.kind) {
            case NodeKind::input:
                tr.out = x;
                break;
            case NodeKind::bc:
                tr.out = bc_forward(in(0), graph.bc_state(n.state), mode, &tr.bc);
                break;
            case NodeKind::fbc: {
                FbcCache cache;
                FbcOut o = fbc_forward(in(0), graph.bc_state(n.state), graph.cff_state(n.gate),
                                       mode, &cache);
                tr.bc = std::move(cache.bc);
                tr.cff = std::move(cache.cff);
                tr.f = std::move(o.f);
                tr.out = std::move(o.d);
                break;
            }
            case NodeKind::maxpool: {
                tr.pool_in_dims = in(0).dims();
                MaxPoolResult r = maxpool2(in(0));
                tr.out = std::move(r.out);
                tr.pool_idx = std::move(r.argmax);
                break;
            }
            case NodeKind::upsample:
                tr.out = upsample2(in(0));
                break;
            case NodeKind::concat:
                tr.out = concat_channels(in(0), in(1));
                break;
            case NodeKind::add:
                tr.out = add(in(0), in(1));
                break;
            case NodeKind::head:
                tr.head_in = in(0);
                tr.out = conv2d(in(0), graph.head_kernel(n.state), Padding::same);
                break;
        }
    }
    t.output_node = static_cast<int>(nodes.size()) - 1;
    return t;
}

void run_backward(LayerGraph& graph, const ForwardTrace& trace, const Tensor& grad_logits,
                  std::vector<Tensor>& param_grads) {
    const auto& nodes = graph.nodes();
    param_grads = zero_like_params(graph);
    std::vector<Tensor> gout(nodes.size());
    gout[static_cast<std::size_t>(trace.output_node)] = grad_logits;

    auto accum = [&](int node_id, Tensor&& g) {
        Tensor& dst = gout[static_cast<std::size_t>(node_id)];
        if (dst.size() == 0) {
            dst = std::move(g);
        } else {
            for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
        }
    };
    auto grad_at = [&](const std::string& name) -> Tensor& {
        const int idx = graph.param_index(name);
        if (idx < 0) throw std::logic_error("run_backward: unknown parameter " + name);
        return param_grads[static_cast<std::size_t>(idx)];
    };
    auto add_into = [](Tensor& dst, const Tensor& src) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    };

    for (std::size_t ri = nodes.size(); ri-- > 0;) {
        const GraphNode& n = nodes[ri];
        Tensor& g = gout[ri];
        if (n.kind == NodeKind::input) continue;
        if (g.size() == 0)
            throw std::logic_error("run_backward: node " + n.name + " received no gradient");
        const NodeTrace& tr = trace.nodes[ri];
        switch (n.kind) {
            case NodeKind::bc: {
                BcGrads bg = bc_backward(g, graph.bc_state(n.state), tr.bc);
                add_into(grad_at(n.name + ".conv.w"), bg.grad_weights);
                add_into(grad_at(n.name + ".conv.b"), bg.grad_biases);
                add_into(grad_at(n.name + ".bn.gamma"), bg.grad_gamma);
                add_into(grad_at(n.name + ".bn.beta"), bg.grad_beta);
                accum(n.inputs[0], std::move(bg.grad_input));
                break;
            }
            case NodeKind::fbc: {
                CffGrads cg = cff_backward(g, graph.cff_state(n.gate), tr.cff);
                add_into(grad_at(n.name + ".gate.w"), cg.grad_weights);
                add_into(grad_at(n.name + ".gate.b"), cg.grad_biases);
                BcGrads bg = bc_backward(cg.grad_f, graph.bc_state(n.state), tr.bc);
                add_into(grad_at(n.name + ".conv.w"), bg.grad_weights);
                add_into(grad_at(n.name + ".conv.b"), bg.grad_biases);
                add_into(grad_at(n.name + ".bn.gamma"), bg.grad_gamma);
                add_into(grad_at(n.name + ".bn.beta"), bg.grad_beta);
                accum(n.inputs[0], std::move(bg.grad_input));
                break;
            }
            case NodeKind::maxpool:
                accum(n.inputs[0], maxpool2_backward(g, tr.pool_idx, tr.pool_in_dims));
                break;
            case NodeKind::upsample:
                accum(n.inputs[0], upsample2_backward(g));
                break;
            case NodeKind::concat: {
                const std::size_t ca =
                    trace.nodes[static_cast<std::size_t>(n.inputs[0])].out.dim(2);
                const std::size_t cb = g.dim(2) - ca;
                accum(n.inputs[0], slice_channels(g, 0, ca));
                accum(n.inputs[1], slice_channels(g, ca, ca + cb));
                break;
            }
            case NodeKind::add: {
                Tensor copy = g;
                accum(n.inputs[0], std::move(copy));
                accum(n.inputs[1], std::move(g));
                break;
            }
            case NodeKind::head: {
                ConvGrads cg = conv2d_backward(g, tr.head_in, graph.head_kernel(n.state),
                                               Padding::same);
                add_into(grad_at(n.name + ".conv.w"), cg.grad_weights);
                add_into(grad_at(n.name + ".conv.b"), cg.grad_biases);
                accum(n.inputs[0], std::move(cg.grad_input));
                break;
            }
            case NodeKind::input:
                break;
        }
    }
}

std::vector<Tensor> zero_like_params(const LayerGraph& graph) {
    std::vector<Tensor> zs;
    zs.reserve(graph.params().size());
    for (std::size_t i = 0; i < graph.params().size(); ++i)
        zs.push_back(Tensor(graph.param_value(i).dims()));
    return zs;
}

LabelMap predict(LayerGraph& graph, const Tensor& x) {
    ForwardTrace t = run_forward(graph, x, Mode::eval);
    const Tensor& logits = t.logits();
    const std::size_t h = logits.dim(0), w = logits.dim(1), k = logits.dim(2);
    LabelMap m(h, w);
    for (std::size_t p = 0; p < h * w; ++p) {
        const double* lp = logits.data() + p * k;
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (lp[c] > lp[best]) best = c;
        m.values()[p] = static_cast<int>(best);
    }
    return m;
}

void freeze_gates_high(LayerGraph& graph, double bias) {
    for (const auto& p : graph.params()) {
        if (p.kind == ParamKind::gate_w)
            graph.cff_state(p.state).gate.weights.fill(0.0);
        else if (p.kind == ParamKind::gate_b)
            graph.cff_state(p.state).gate.biases.fill(bias);
    }
}

void save_checkpoint(const LayerGraph& graph, const std::string& dir) {
    fs::create_directories(dir);
    std::string manifest;
    for (std::size_t i = 0; i < graph.params().size(); ++i) {
        const ParamRef& p = graph.params()[i];
        const Tensor& v = graph.param_value(i);
        const std::string file = p.name + ".fsm";
        save_fsm1(path_join(dir, file), v);
        std::string dims;
        for (std::size_t d : v.dims()) {
            if (!dims.empty()) dims += "x";
            dims += std::to_string(d);
        }
        manifest += p.name + "," + file + "," + dims + "\n";
    }
    write_file_atomic(path_join(dir, "manifest.txt"), manifest);
    write_file_atomic(path_join(dir, "netspec.txt"), netspec_to_text(graph.spec()));
}

void load_checkpoint_into(LayerGraph& graph, const std::string& dir) {
    const std::string manifest = read_file(path_join(dir, "manifest.txt"));
    std::istringstream in(manifest);
    std::string line;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cols = split_csv_line(line);
        if (cols.size() != 3)
            throw std::runtime_error("checkpoint manifest: malformed line '" + line + "'");
        const int idx = graph.param_index(cols[0]);
        if (idx < 0)
            throw std::runtime_error("checkpoint: parameter '" + cols[0] +
                                     "' does not exist in this network");
        Tensor loaded = load_fsm1(path_join(dir, cols[1]));
        Tensor& dst = graph.param_value(static_cast<std::size_t>(idx));
        if (!loaded.same_dims(dst))
            throw std::runtime_error("checkpoint: parameter '" + cols[0] + "' extent mismatch");
        dst = std::move(loaded);
        seen.insert(cols[0]);
    }
    for (const auto& p : graph.params())
        if (!seen.count(p.name))
            throw std::runtime_error("checkpoint: parameter '" + p.name + "' missing from manifest");
}

LayerGraph load_checkpoint(const std::string& dir) {
    LayerGraph g = build(netspec_from_text(read_file(path_join(dir, "netspec.txt"))));
    load_checkpoint_into(g, dir);
    return g;
}

std::vector<Tensor> snapshot_params(const LayerGraph& graph) {
    std::vector<Tensor> snap;
    snap.reserve(graph.params().size());
    for (std::size_t i = 0; i < graph.params().size(); ++i) snap.push_back(graph.param_value(i));
    return snap;
}

void restore_params(LayerGraph& graph, const std::vector<Tensor>& snapshot) {
    if (snapshot.size() != graph.params().size())
        throw std::invalid_argument("restore_params: snapshot size mismatch");
    for (std::size_t i = 0; i < snapshot.size(); ++i) {
        Tensor& dst = graph.param_value(i);
        if (!snapshot[i].same_dims(dst))
            throw std::invalid_argument("restore_params: extent mismatch at " +
                                        graph.params()[i].name);
        dst = snapshot[i];
    }
}

}  // namespace ff
