#include "featfilter/layers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ff {

BatchNormState::BatchNormState(std::size_t channels)
    : gamma(Tensor::full({channels}, 1.0)),
      beta(Tensor({channels})),
      running_mean(Tensor({channels})),
      running_var(Tensor::full({channels}, 1.0)) {}

Tensor batchnorm_forward(const Tensor& x, BatchNormState& bn, Mode mode, BnCache* cache) {
    if (x.rank() != 3) throw std::invalid_argument("batchnorm_forward: expected rank-3 input");
    const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (bn.gamma.size() != c)
        throw std::invalid_argument("batchnorm_forward: state has " + std::to_string(bn.gamma.size()) +
                                    " channels, input has " + std::to_string(c));
    const std::size_t n = h * w;
    Tensor y({h, w, c});

    if (mode == Mode::train) {
        std::vector<double> mean(c, 0.0), var(c, 0.0), istd(c, 0.0);
        for (std::size_t p = 0; p < n; ++p) {
            const double* px = x.data() + p * c;
            for (std::size_t ch = 0; ch < c; ++ch) mean[ch] += px[ch];
        }
        for (std::size_t ch = 0; ch < c; ++ch) mean[ch] /= static_cast<double>(n);
        for (std::size_t p = 0; p < n; ++p) {
            const double* px = x.data() + p * c;
            for (std::size_t ch = 0; ch < c; ++ch) {
                const double d = px[ch] - mean[ch];
                var[ch] += d * d;
            }
        }
        for (std::size_t ch = 0; ch < c; ++ch) {
            var[ch] /= static_cast<double>(n);  // population variance
            istd[ch] = 1.0 / std::sqrt(var[ch] + bn.epsilon);
        }
        Tensor xhat({h, w, c});
        for (std::size_t p = 0; p < n; ++p) {
            const double* px = x.data() + p * c;
            double* pxh = xhat.data() + p * c;
            double* py = y.data() + p * c;
            for (std::size_t ch = 0; ch < c; ++ch) {
                pxh[ch] = (px[ch] - mean[ch]) * istd[ch];
                py[ch] = bn.gamma[ch] * pxh[ch] + bn.beta[ch];
            }
        }
        for (std::size_t ch = 0; ch < c; ++ch) {
            bn.running_mean[ch] = bn.momentum * bn.running_mean[ch] + (1.0 - bn.momentum) * mean[ch];
            bn.running_var[ch] = bn.momentum * bn.running_var[ch] + (1.0 - bn.momentum) * var[ch];
        }
        if (cache) {
            cache->xhat = std::move(xhat);
            cache->istd = std::move(istd);
        }
    } else {
        std::vector<double> istd(c);
        for (std::size_t ch = 0; ch < c; ++ch)
            istd[ch] = 1.0 / std::sqrt(bn.running_var[ch] + bn.epsilon);
        for (std::size_t p = 0; p < n; ++p) {
            const double* px = x.data() + p * c;
            double* py = y.data() + p * c;
            for (std::size_t ch = 0; ch < c; ++ch)
                py[ch] = bn.gamma[ch] * (px[ch] - bn.running_mean[ch]) * istd[ch] + bn.beta[ch];
        }
        if (cache) {
            // eval-mode backward is not supported; leave an empty cache
            cache->xhat = Tensor();
            cache->istd.clear();
        }
    }
    return y;
}

BnGrads batchnorm_backward(const Tensor& grad_y, const BnCache& cache, const BatchNormState& bn) {
    if (cache.istd.empty())
        throw std::logic_error("batchnorm_backward: no train-mode cache available");
    const std::size_t h = grad_y.dim(0), w = grad_y.dim(1), c = grad_y.dim(2);
    const std::size_t n = h * w;
    const double dn = static_cast<double>(n);

    BnGrads g{Tensor({h, w, c}), Tensor({c}), Tensor({c})};
    std::vector<double> sum_g(c, 0.0), sum_gx(c, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const double* pg = grad_y.data() + p * c;
        const double* pxh = cache.xhat.data() + p * c;
        for (std::size_t ch = 0; ch < c; ++ch) {
            sum_g[ch] += pg[ch];
            sum_gx[ch] += pg[ch] * pxh[ch];
        }
    }
    for (std::size_t ch = 0; ch < c; ++ch) {
        g.grad_beta[ch] = sum_g[ch];
        g.grad_gamma[ch] = sum_gx[ch];
    }
    // dL/dx_i = gamma * istd / n * (n*g_i - sum(g) - xhat_i * sum(g*xhat))
    for (std::size_t p = 0; p < n; ++p) {
        const double* pg = grad_y.data() + p * c;
        const double* pxh = cache.xhat.data() + p * c;
        double* pgi = g.grad_input.data() + p * c;
        for (std::size_t ch = 0; ch < c; ++ch) {
            pgi[ch] = bn.gamma[ch] * cache.istd[ch] / dn *
                      (dn * pg[ch] - sum_g[ch] - pxh[ch] * sum_gx[ch]);
        }
    }
    return g;
}

Tensor bc_forward(const Tensor& x, BcState& state, Mode mode, BcCache* cache) {
    Tensor conv_out = conv2d(x, state.conv, Padding::same);
    Tensor out;
    BnCache bn_cache;
    BnCache* bn_ptr = cache ? &bn_cache : nullptr;
    if (state.order == BlockOrder::relu_bn) {
        out = batchnorm_forward(relu(conv_out), state.bn, mode, bn_ptr);
    } else {
        out = relu(batchnorm_forward(conv_out, state.bn, mode, bn_ptr));
    }
    if (cache) {
        cache->conv_in = x;
        cache->conv_out = std::move(conv_out);
        cache->out = out;
        cache->bn = std::move(bn_cache);
    }
    return out;
}

BcGrads bc_backward(const Tensor& grad_y, const BcState& state, const BcCache& cache) {
    Tensor grad_conv;
    BnGrads bng;
    if (state.order == BlockOrder::relu_bn) {
        bng = batchnorm_backward(grad_y, cache.bn, state.bn);
        grad_conv = relu_backward(bng.grad_input, cache.conv_out);
    } else {
        // relu mask: block output is positive exactly where relu passed
        Tensor masked = grad_y;
        for (std::size_t i = 0; i < masked.size(); ++i)
            if (cache.out[i] <= 0.0) masked[i] = 0.0;
        bng = batchnorm_backward(masked, cache.bn, state.bn);
        grad_conv = std::move(bng.grad_input);
    }
    ConvGrads cg = conv2d_backward(grad_conv, cache.conv_in, state.conv, Padding::same);
    return BcGrads{std::move(cg.grad_input), std::move(cg.grad_weights), std::move(cg.grad_biases),
                   std::move(bng.grad_gamma), std::move(bng.grad_beta)};
}

Tensor cff_forward(const Tensor& f, const CffState& state, CffCache* cache) {
    if (state.gate.in_ch() != f.dim(2) || state.gate.out_ch() != f.dim(2))
        throw std::invalid_argument("cff_forward: gate must map " + std::to_string(f.dim(2)) +
                                    " channels onto themselves");
    Tensor s = sigmoid(conv2d(f, state.gate, Padding::same));
    Tensor d = mul(s, f);
    if (cache) {
        cache->f = f;
        cache->s = std::move(s);
        return d;
    }
    return d;
}

CffGrads cff_backward(const Tensor& grad_d, const CffState& state, const CffCache& cache) {
    // d = s(g) * f with g = conv(f):
    //   dL/df  = grad_d * s  +  conv_backward_input(grad_d * f * s * (1-s))
    //   dL/dg  = grad_d * f * s * (1-s)
    Tensor grad_g = mul(grad_d, cache.f);
    grad_g = sigmoid_backward(grad_g, cache.s);
    ConvGrads cg = conv2d_backward(grad_g, cache.f, state.gate, Padding::same);
    Tensor grad_f = mul(grad_d, cache.s);
    for (std::size_t i = 0; i < grad_f.size(); ++i) grad_f[i] += cg.grad_input[i];
    return CffGrads{std::move(grad_f), std::move(cg.grad_weights), std::move(cg.grad_biases)};
}

FbcOut fbc_forward(const Tensor& x, BcState& bc, const CffState& cff, Mode mode, FbcCache* cache) {
    FbcOut out;
    out.f = bc_forward(x, bc, mode, cache ? &cache->bc : nullptr);
    out.d = cff_forward(out.f, cff, cache ? &cache->cff : nullptr);
    return out;
}

CeLoss softmax_ce_loss(const Tensor& logits, const LabelMap& labels) {
    if (logits.rank() != 3) throw std::invalid_argument("softmax_ce_loss: expected rank-3 logits");
    const std::size_t h = logits.dim(0), w = logits.dim(1), k = logits.dim(2);
    if (labels.height() != h || labels.width() != w)
        throw std::invalid_argument("softmax_ce_loss: label extents do not match logits");
    const std::size_t n = h * w;
    CeLoss out;
    out.grad_logits = Tensor({h, w, k});
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        const int y = labels.values()[p];
        if (y < 0 || static_cast<std::size_t>(y) >= k)
            throw std::invalid_argument("softmax_ce_loss: label " + std::to_string(y) +
                                        " outside [0," + std::to_string(k) + ")");
        const double* lp = logits.data() + p * k;
        double* gp = out.grad_logits.data() + p * k;
        double mx = lp[0];
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, lp[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < k; ++c) z += std::exp(lp[c] - mx);
        const double logz = std::log(z) + mx;
        total += logz - lp[static_cast<std::size_t>(y)];
        for (std::size_t c = 0; c < k; ++c) {
            const double soft = std::exp(lp[c] - logz);
            gp[c] = (soft - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) / static_cast<double>(n);
        }
    }
    out.loss = total / static_cast<double>(n);
    return out;
}

}  // namespace ff
