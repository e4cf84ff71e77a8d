#include "featfilter/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "featfilter/io.hpp"

namespace ff {

namespace {

std::size_t checked_volume(const std::vector<std::size_t>& dims) {
    if (dims.empty() || dims.size() > 4)
        throw std::invalid_argument("Tensor: rank must be 1..4, got " + std::to_string(dims.size()));
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw std::invalid_argument("Tensor: zero extent");
        n *= d;
    }
    return n;
}

void require_rank3(const Tensor& t, const char* who) {
    if (t.rank() != 3)
        throw std::invalid_argument(std::string(who) + ": expected rank-3 (h,w,c) tensor, got rank " +
                                    std::to_string(t.rank()));
}

void require_same_dims(const Tensor& a, const Tensor& b, const char* who) {
    if (!a.same_dims(b)) throw std::invalid_argument(std::string(who) + ": shape mismatch");
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    values_.assign(checked_volume(dims_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> values) : dims_(std::move(dims)) {
    if (checked_volume(dims_) != values.size())
        throw std::invalid_argument("Tensor: value count does not match extents");
    values_ = std::move(values);
}

Tensor Tensor::full(std::vector<std::size_t> dims, double value) {
    Tensor t(std::move(dims));
    t.fill(value);
    return t;
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

bool Tensor::all_finite() const {
    for (double v : values_)
        if (!std::isfinite(v)) return false;
    return true;
}

LabelMap::LabelMap(std::size_t height, std::size_t width, int fill)
    : h_(height), w_(width), values_(height * width, fill) {
    if (height == 0 || width == 0) throw std::invalid_argument("LabelMap: zero extent");
}

ConvKernel::ConvKernel(std::size_t kh, std::size_t kw, std::size_t in_ch, std::size_t out_ch)
    : weights({kh, kw, in_ch, out_ch}), biases({out_ch}) {
    if (kh % 2 == 0 || kw % 2 == 0)
        throw std::invalid_argument("ConvKernel: kernel extents must be odd");
}

namespace {

struct ConvGeom {
    std::size_t h, w, ic, kh, kw, oh, ow;
    std::ptrdiff_t py, px;
};

// Accumulation order per output element is fixed everywhere: bias first,
// then taps in (ky, kx, ci) ascending order. The templated body keeps the
// per-pixel accumulators in registers; results are bit-identical to the
// generic loop.
template <int OC>
void conv2d_body(const ConvGeom& g, const double* __restrict__ in,
                 const double* __restrict__ wts, const double* __restrict__ bias,
                 double* __restrict__ o) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
            double acc[OC];
            for (int k = 0; k < OC; ++k) acc[k] = bias[k];
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - g.py;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - g.px;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                    const double* __restrict__ ipix =
                        in + (static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)) *
                                 g.ic;
                    const double* __restrict__ wrow = wts + (ky * g.kw + kx) * g.ic * OC;
                    for (std::size_t c = 0; c < g.ic; ++c) {
                        const double v = ipix[c];
                        const double* __restrict__ wk = wrow + c * OC;
                        for (int k = 0; k < OC; ++k) acc[k] += v * wk[k];
                    }
                }
            }
            double* __restrict__ orow = o + (oy * g.ow + ox) * OC;
            for (int k = 0; k < OC; ++k) orow[k] = acc[k];
        }
    }
}

void conv2d_body_generic(const ConvGeom& g, std::size_t oc, const double* __restrict__ in,
                         const double* __restrict__ wts, const double* __restrict__ bias,
                         double* __restrict__ o) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
            double* __restrict__ orow = o + (oy * g.ow + ox) * oc;
            for (std::size_t c = 0; c < oc; ++c) orow[c] = bias[c];
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - g.py;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - g.px;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                    const double* __restrict__ ipix =
                        in + (static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)) *
                                 g.ic;
                    const double* __restrict__ wrow = wts + (ky * g.kw + kx) * g.ic * oc;
                    for (std::size_t c = 0; c < g.ic; ++c) {
                        const double v = ipix[c];
                        const double* __restrict__ wk = wrow + c * oc;
                        for (std::size_t k = 0; k < oc; ++k) orow[k] += v * wk[k];
                    }
                }
            }
        }
    }
}

ConvGeom conv_geometry(const Tensor& input, const ConvKernel& kernel, Padding padding,
                       const char* who) {
    require_rank3(input, who);
    ConvGeom g{};
    g.h = input.dim(0);
    g.w = input.dim(1);
    g.ic = input.dim(2);
    g.kh = kernel.kh();
    g.kw = kernel.kw();
    if (kernel.in_ch() != g.ic)
        throw std::invalid_argument(std::string(who) + ": kernel expects " +
                                    std::to_string(kernel.in_ch()) + " input channels, tensor has " +
                                    std::to_string(g.ic));
    if (padding == Padding::same) {
        g.oh = g.h;
        g.ow = g.w;
        g.py = static_cast<std::ptrdiff_t>(g.kh / 2);
        g.px = static_cast<std::ptrdiff_t>(g.kw / 2);
    } else {
        if (g.kh > g.h || g.kw > g.w)
            throw std::invalid_argument(std::string(who) + ": kernel larger than input");
        g.oh = g.h - g.kh + 1;
        g.ow = g.w - g.kw + 1;
        g.py = g.px = 0;
    }
    return g;
}

}  // namespace

Tensor conv2d(const Tensor& input, const ConvKernel& kernel, Padding padding) {
    const ConvGeom g = conv_geometry(input, kernel, padding, "conv2d");
    const std::size_t oc = kernel.out_ch();
    Tensor out({g.oh, g.ow, oc});
    const double* in = input.data();
    const double* wts = kernel.weights.data();
    const double* bias = kernel.biases.data();
    double* o = out.data();
    switch (oc) {
        case 1: conv2d_body<1>(g, in, wts, bias, o); break;
        case 2: conv2d_body<2>(g, in, wts, bias, o); break;
        case 4: conv2d_body<4>(g, in, wts, bias, o); break;
        case 8: conv2d_body<8>(g, in, wts, bias, o); break;
        case 16: conv2d_body<16>(g, in, wts, bias, o); break;
        case 32: conv2d_body<32>(g, in, wts, bias, o); break;
        case 64: conv2d_body<64>(g, in, wts, bias, o); break;
        default: conv2d_body_generic(g, oc, in, wts, bias, o); break;
    }
    return out;
}

namespace {

template <int OC>
void conv2d_backward_body(const ConvGeom& g, const double* __restrict__ in,
                          const double* __restrict__ wts, const double* __restrict__ go,
                          double* __restrict__ gi, double* __restrict__ gw,
                          double* __restrict__ gb) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const double* __restrict__ grow = go + (oy * g.ow + ox) * OC;
            double gr[OC];
            for (int k = 0; k < OC; ++k) {
                gr[k] = grow[k];
                gb[k] += gr[k];
            }
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - g.py;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - g.px;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                    const std::size_t pix =
                        static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix);
                    const double* __restrict__ ipix = in + pix * g.ic;
                    double* __restrict__ gpix = gi + pix * g.ic;
                    const std::size_t woff = (ky * g.kw + kx) * g.ic * OC;
                    for (std::size_t c = 0; c < g.ic; ++c) {
                        const double* __restrict__ wk = wts + woff + c * OC;
                        double* __restrict__ gwk = gw + woff + c * OC;
                        const double v = ipix[c];
                        double acc = 0.0;
                        for (int k = 0; k < OC; ++k) {
                            acc += gr[k] * wk[k];
                            gwk[k] += gr[k] * v;
                        }
                        gpix[c] += acc;
                    }
                }
            }
        }
    }
}

void conv2d_backward_body_generic(const ConvGeom& g, std::size_t oc, const double* __restrict__ in,
                                  const double* __restrict__ wts, const double* __restrict__ go,
                                  double* __restrict__ gi, double* __restrict__ gw,
                                  double* __restrict__ gb) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const double* __restrict__ grow = go + (oy * g.ow + ox) * oc;
            for (std::size_t k = 0; k < oc; ++k) gb[k] += grow[k];
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - g.py;
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + kx) - g.px;
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                    const std::size_t pix =
                        static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix);
                    const double* __restrict__ ipix = in + pix * g.ic;
                    double* __restrict__ gpix = gi + pix * g.ic;
                    const std::size_t woff = (ky * g.kw + kx) * g.ic * oc;
                    for (std::size_t c = 0; c < g.ic; ++c) {
                        const double* __restrict__ wk = wts + woff + c * oc;
                        double* __restrict__ gwk = gw + woff + c * oc;
                        const double v = ipix[c];
                        double acc = 0.0;
                        for (std::size_t k = 0; k < oc; ++k) {
                            acc += grow[k] * wk[k];
                            gwk[k] += grow[k] * v;
                        }
                        gpix[c] += acc;
                    }
                }
            }
        }
    }
}

}  // namespace

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input,
                          const ConvKernel& kernel, Padding padding) {
    require_rank3(grad_out, "conv2d_backward");
    const ConvGeom geo = conv_geometry(input, kernel, padding, "conv2d_backward");
    const std::size_t oc = kernel.out_ch();
    if (grad_out.dims() != std::vector<std::size_t>{geo.oh, geo.ow, oc})
        throw std::invalid_argument("conv2d_backward: grad shape mismatch");

    ConvGrads g{Tensor({geo.h, geo.w, geo.ic}), Tensor({geo.kh, geo.kw, geo.ic, oc}), Tensor({oc})};
    const double* in = input.data();
    const double* wts = kernel.weights.data();
    const double* go = grad_out.data();
    double* gi = g.grad_input.data();
    double* gw = g.grad_weights.data();
    double* gb = g.grad_biases.data();
    switch (oc) {
        case 1: conv2d_backward_body<1>(geo, in, wts, go, gi, gw, gb); break;
        case 2: conv2d_backward_body<2>(geo, in, wts, go, gi, gw, gb); break;
        case 4: conv2d_backward_body<4>(geo, in, wts, go, gi, gw, gb); break;
        case 8: conv2d_backward_body<8>(geo, in, wts, go, gi, gw, gb); break;
        case 16: conv2d_backward_body<16>(geo, in, wts, go, gi, gw, gb); break;
        case 32: conv2d_backward_body<32>(geo, in, wts, go, gi, gw, gb); break;
        case 64: conv2d_backward_body<64>(geo, in, wts, go, gi, gw, gb); break;
        default: conv2d_backward_body_generic(geo, oc, in, wts, go, gi, gw, gb); break;
    }
    return g;
}

MaxPoolResult maxpool2(const Tensor& input) {
    require_rank3(input, "maxpool2");
    const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
    if (h % 2 != 0 || w % 2 != 0)
        throw std::invalid_argument("maxpool2: spatial extents must be even, got " +
                                    std::to_string(h) + "x" + std::to_string(w));
    MaxPoolResult r{Tensor({h / 2, w / 2, c}), {}};
    r.argmax.resize(r.out.size());
    const double* in = input.data();
    double* o = r.out.data();
    for (std::size_t oy = 0; oy < h / 2; ++oy) {
        for (std::size_t ox = 0; ox < w / 2; ++ox) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                std::size_t best = ((2 * oy) * w + 2 * ox) * c + ch;
                double bv = in[best];
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t idx = ((2 * oy + dy) * w + (2 * ox + dx)) * c + ch;
                        if (in[idx] > bv) {
                            bv = in[idx];
                            best = idx;
                        }
                    }
                }
                const std::size_t oidx = (oy * (w / 2) + ox) * c + ch;
                o[oidx] = bv;
                r.argmax[oidx] = best;
            }
        }
    }
    return r;
}

Tensor maxpool2_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                         const std::vector<std::size_t>& input_dims) {
    Tensor g(input_dims);
    if (grad_out.size() != argmax.size())
        throw std::invalid_argument("maxpool2_backward: argmax size mismatch");
    for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_out[i];
    return g;
}

Tensor upsample2(const Tensor& input) {
    require_rank3(input, "upsample2");
    const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
    Tensor out({2 * h, 2 * w, c});
    for (std::size_t y = 0; y < 2 * h; ++y) {
        for (std::size_t x = 0; x < 2 * w; ++x) {
            const double* src = input.data() + ((y / 2) * w + x / 2) * c;
            double* dst = out.data() + (y * 2 * w + x) * c;
            std::copy(src, src + c, dst);
        }
    }
    return out;
}

Tensor upsample2_backward(const Tensor& grad_out) {
    require_rank3(grad_out, "upsample2_backward");
    const std::size_t h2 = grad_out.dim(0), w2 = grad_out.dim(1), c = grad_out.dim(2);
    if (h2 % 2 != 0 || w2 % 2 != 0)
        throw std::invalid_argument("upsample2_backward: extents must be even");
    Tensor g({h2 / 2, w2 / 2, c});
    for (std::size_t y = 0; y < h2; ++y) {
        for (std::size_t x = 0; x < w2; ++x) {
            const double* src = grad_out.data() + (y * w2 + x) * c;
            double* dst = g.data() + ((y / 2) * (w2 / 2) + x / 2) * c;
            for (std::size_t ch = 0; ch < c; ++ch) dst[ch] += src[ch];
        }
    }
    return g;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& grad_y, const Tensor& x) {
    require_same_dims(grad_y, x, "relu_backward");
    Tensor g = grad_y;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (x[i] <= 0.0) g[i] = 0.0;
    return g;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y = x;
    // Clamp into the open interval so downstream gating keeps a strict
    // amplitude decrease even when exp() saturates.
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
    for (double& v : y.values()) {
        double s;
        if (v >= 0.0) {
            s = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            s = e / (1.0 + e);
        }
        v = std::clamp(s, lo, hi);
    }
    return y;
}

Tensor sigmoid_backward(const Tensor& grad_y, const Tensor& s) {
    require_same_dims(grad_y, s, "sigmoid_backward");
    Tensor g = grad_y;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s[i] * (1.0 - s[i]);
    return g;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_dims(a, b, "mul");
    Tensor y = a;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= b[i];
    return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_dims(a, b, "add");
    Tensor y = a;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
    return y;
}

Tensor scale(const Tensor& a, double c) {
    Tensor y = a;
    for (double& v : y.values()) v *= c;
    return y;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    require_rank3(a, "concat_channels");
    require_rank3(b, "concat_channels");
    if (a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1))
        throw std::invalid_argument("concat_channels: spatial extents differ");
    const std::size_t h = a.dim(0), w = a.dim(1), ca = a.dim(2), cb = b.dim(2);
    Tensor out({h, w, ca + cb});
    for (std::size_t p = 0; p < h * w; ++p) {
        std::copy(a.data() + p * ca, a.data() + (p + 1) * ca, out.data() + p * (ca + cb));
        std::copy(b.data() + p * cb, b.data() + (p + 1) * cb, out.data() + p * (ca + cb) + ca);
    }
    return out;
}

Tensor slice_channels(const Tensor& x, std::size_t c0, std::size_t c1) {
    require_rank3(x, "slice_channels");
    const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
    if (c0 >= c1 || c1 > c) throw std::invalid_argument("slice_channels: bad channel range");
    Tensor out({h, w, c1 - c0});
    for (std::size_t p = 0; p < h * w; ++p)
        std::copy(x.data() + p * c + c0, x.data() + p * c + c1, out.data() + p * (c1 - c0));
    return out;
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

double get_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

}  // namespace

void save_fsm1(const std::string& path, const Tensor& t) {
    std::string buf;
    buf.reserve(8 + 4 * t.rank() + 8 * t.size());
    buf += "FSM1";
    put_u32(buf, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.dims()) put_u32(buf, static_cast<std::uint32_t>(d));
    for (double v : t.values()) put_f64(buf, v);
    write_file_atomic(path, buf);
}

Tensor load_fsm1(const std::string& path) {
    const std::string buf = read_file(path);
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    if (buf.size() < 8 || std::memcmp(p, "FSM1", 4) != 0)
        throw std::runtime_error("load_fsm1: " + path + ": not an FSM1 file");
    const std::uint32_t rank = get_u32(p + 4);
    if (rank < 1 || rank > 4)
        throw std::runtime_error("load_fsm1: " + path + ": bad rank " + std::to_string(rank));
    if (buf.size() < 8 + 4ull * rank) throw std::runtime_error("load_fsm1: " + path + ": truncated");
    std::vector<std::size_t> dims(rank);
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        dims[i] = get_u32(p + 8 + 4 * i);
        n *= dims[i];
    }
    const std::size_t off = 8 + 4ull * rank;
    if (buf.size() != off + 8ull * n)
        throw std::runtime_error("load_fsm1: " + path + ": payload size mismatch");
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = get_f64(p + off + 8 * i);
    return Tensor(std::move(dims), std::move(values));
}

}  // namespace ff
