#pragma once

#include "featfilter/tensor.hpp"

namespace ff {

enum class Mode { train, eval };

// Order of normalisation inside a conv block. `relu_bn` normalises the
// activation output (conv -> relu -> bn, the default); `bn_relu` is the
// conventional conv -> bn -> relu arrangement. Both train end to end.
enum class BlockOrder { relu_bn, bn_relu };

struct BatchNormState {
    Tensor gamma;         // (c), trainable
    Tensor beta;          // (c), trainable
    Tensor running_mean;  // (c), tracked, not trained
    Tensor running_var;   // (c)
    double epsilon = 1e-5;
    double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch

    BatchNormState() = default;
    explicit BatchNormState(std::size_t channels);
};

struct BnCache {
    Tensor xhat;               // normalised input
    std::vector<double> istd;  // per-channel 1/sqrt(var + eps)
};

// Per-channel batch norm over the spatial extent of a single sample
// (batch size 1 everywhere in this project). Train mode uses batch
// statistics and updates the running estimates; eval mode uses the
// running estimates only.
Tensor batchnorm_forward(const Tensor& x, BatchNormState& bn, Mode mode, BnCache* cache);

struct BnGrads {
    Tensor grad_input;
    Tensor grad_gamma;
    Tensor grad_beta;
};

BnGrads batchnorm_backward(const Tensor& grad_y, const BnCache& cache, const BatchNormState& bn);

// Conv block: 3x3 same-padding convolution, relu, batch norm, composed in
// the order given by BlockOrder.
struct BcState {
    ConvKernel conv;
    BatchNormState bn;
    BlockOrder order = BlockOrder::relu_bn;
};

struct BcCache {
    Tensor conv_in;
    Tensor conv_out;
    Tensor out;  // block output (relu mask source for bn_relu order)
    BnCache bn;
};

Tensor bc_forward(const Tensor& x, BcState& state, Mode mode, BcCache* cache);

struct BcGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_biases;
    Tensor grad_gamma;
    Tensor grad_beta;
};

BcGrads bc_backward(const Tensor& grad_y, const BcState& state, const BcCache& cache);

// Feature filter: d = sigmoid(conv(f)) * f, elementwise. The gate produces
// one multiplier per element, strictly inside (0,1), so amplitudes can only
// shrink and signs never flip. Gate kernel is 1x1 by default.
struct CffState {
    ConvKernel gate;
};

struct CffCache {
    Tensor f;
    Tensor s;  // sigmoid(conv(f))
};

Tensor cff_forward(const Tensor& f, const CffState& state, CffCache* cache);

struct CffGrads {
    Tensor grad_f;
    Tensor grad_weights;
    Tensor grad_biases;
};

CffGrads cff_backward(const Tensor& grad_d, const CffState& state, const CffCache& cache);

// Filtered conv block: feature filter appended to a conv block. Exposes both
// the unfiltered features f and the filtered output d for probing.
struct FbcCache {
    BcCache bc;
    CffCache cff;
};

struct FbcOut {
    Tensor f;  // conv block output, before filtering
    Tensor d;  // filtered output fed to the next layer
};

FbcOut fbc_forward(const Tensor& x, BcState& bc, const CffState& cff, Mode mode, FbcCache* cache);

// Mean softmax cross-entropy over all pixels, with the gradient w.r.t. the
// logits. Labels must lie in [0, num_classes).
struct CeLoss {
    double loss = 0.0;
    Tensor grad_logits;
};

CeLoss softmax_ce_loss(const Tensor& logits, const LabelMap& labels);

}  // namespace ff
