#include "featfilter/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "featfilter/entropy.hpp"
#include "featfilter/layers.hpp"
#include "featfilter/metrics.hpp"
#include "featfilter/rng.hpp"

namespace ff {

namespace {

std::string fmt_sci(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::scientific << v;
    return ss.str();
}

Tensor rand_tensor(Rng& rng, std::vector<std::size_t> dims, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(dims));
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

double project(const Tensor& out, const Tensor& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
    return s;
}

CheckResult grad_result(const std::string& name, double err, double tol = 1e-4) {
    return CheckResult{name, err < tol, "max rel err " + fmt_sci(err) + " (tol " + fmt_sci(tol) + ")"};
}

}  // namespace

Tensor fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
    Tensor g(x.dims());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(x[i]));
        probe[i] = x[i] + step;
        const double hi = f(probe);
        probe[i] = x[i] - step;
        const double lo = f(probe);
        probe[i] = x[i];
        g[i] = (hi - lo) / (2.0 * step);
    }
    return g;
}

double max_rel_err(const Tensor& analytic, const Tensor& numeric) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric[i])});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

CheckList check_grad(std::uint64_t seed) {
    CheckList out;
    Rng rng(seed, "grad");

    {  // conv2d, both paddings: input, weights, biases
        for (const Padding pad : {Padding::same, Padding::valid}) {
            const char* pname = pad == Padding::same ? "conv2d_same" : "conv2d_valid";
            Tensor x = rand_tensor(rng, {6, 5, 3});
            ConvKernel k(3, 3, 3, 4);
            k.weights = rand_tensor(rng, {3, 3, 3, 4});
            k.biases = rand_tensor(rng, {4});
            const Tensor w = rand_tensor(rng, conv2d(x, k, pad).dims());
            ConvGrads g = conv2d_backward(w, x, k, pad);
            double err = max_rel_err(g.grad_input, fd_gradient([&](const Tensor& t) {
                return project(conv2d(t, k, pad), w);
            }, x));
            err = std::max(err, max_rel_err(g.grad_weights, fd_gradient([&](const Tensor& t) {
                ConvKernel kk = k;
                kk.weights = t;
                return project(conv2d(x, kk, pad), w);
            }, k.weights)));
            err = std::max(err, max_rel_err(g.grad_biases, fd_gradient([&](const Tensor& t) {
                ConvKernel kk = k;
                kk.biases = t;
                return project(conv2d(x, kk, pad), w);
            }, k.biases)));
            out.push_back(grad_result(pname, err));
        }
    }

    {  // batchnorm, train mode: input, gamma, beta
        Tensor x = rand_tensor(rng, {5, 4, 3}, -2.0, 2.0);
        BatchNormState bn(3);
        bn.gamma = rand_tensor(rng, {3}, 0.5, 1.5);
        bn.beta = rand_tensor(rng, {3}, -0.5, 0.5);
        const Tensor w = rand_tensor(rng, x.dims());
        auto loss = [&](const Tensor& xt, const Tensor& gt, const Tensor& bt) {
            BatchNormState s = bn;
            s.gamma = gt;
            s.beta = bt;
            return project(batchnorm_forward(xt, s, Mode::train, nullptr), w);
        };
        BatchNormState s = bn;
        BnCache cache;
        batchnorm_forward(x, s, Mode::train, &cache);
        BnGrads g = batchnorm_backward(w, cache, bn);
        double err = max_rel_err(g.grad_input, fd_gradient([&](const Tensor& t) {
            return loss(t, bn.gamma, bn.beta);
        }, x));
        err = std::max(err, max_rel_err(g.grad_gamma, fd_gradient([&](const Tensor& t) {
            return loss(x, t, bn.beta);
        }, bn.gamma)));
        err = std::max(err, max_rel_err(g.grad_beta, fd_gradient([&](const Tensor& t) {
            return loss(x, bn.gamma, t);
        }, bn.beta)));
        out.push_back(grad_result("batchnorm", err));
    }

    {  // relu away from the kink
        Tensor x = rand_tensor(rng, {4, 4, 3}, -2.0, 2.0);
        for (double& v : x.values())
            if (std::abs(v) < 1e-2) v = v < 0 ? v - 0.1 : v + 0.1;
        const Tensor w = rand_tensor(rng, x.dims());
        const double err = max_rel_err(relu_backward(w, x), fd_gradient([&](const Tensor& t) {
            return project(relu(t), w);
        }, x));
        out.push_back(grad_result("relu", err));
    }

    {  // sigmoid
        Tensor x = rand_tensor(rng, {4, 4, 2}, -3.0, 3.0);
        const Tensor w = rand_tensor(rng, x.dims());
        const Tensor s = sigmoid(x);
        const double err = max_rel_err(sigmoid_backward(w, s), fd_gradient([&](const Tensor& t) {
            return project(sigmoid(t), w);
        }, x));
        out.push_back(grad_result("sigmoid", err));
    }

    {  // feature filter, both gate widths: input, gate weights, gate biases
        for (const int ks : {1, 3}) {
            Tensor f = rand_tensor(rng, {5, 5, 4}, -2.0, 2.0);
            CffState cff;
            cff.gate = ConvKernel(static_cast<std::size_t>(ks), static_cast<std::size_t>(ks), 4, 4);
            cff.gate.weights = rand_tensor(rng, cff.gate.weights.dims());
            cff.gate.biases = rand_tensor(rng, {4}, -0.5, 0.5);
            const Tensor w = rand_tensor(rng, f.dims());
            CffCache cache;
            cff_forward(f, cff, &cache);
            CffGrads g = cff_backward(w, cff, cache);
            double err = max_rel_err(g.grad_f, fd_gradient([&](const Tensor& t) {
                return project(cff_forward(t, cff, nullptr), w);
            }, f));
            err = std::max(err, max_rel_err(g.grad_weights, fd_gradient([&](const Tensor& t) {
                CffState s2 = cff;
                s2.gate.weights = t;
                return project(cff_forward(f, s2, nullptr), w);
            }, cff.gate.weights)));
            err = std::max(err, max_rel_err(g.grad_biases, fd_gradient([&](const Tensor& t) {
                CffState s2 = cff;
                s2.gate.biases = t;
                return project(cff_forward(f, s2, nullptr), w);
            }, cff.gate.biases)));
            out.push_back(grad_result(ks == 1 ? "cff_gate1" : "cff_gate3", err));
        }
    }

    {  // maxpool2 (continuous random input: no ties)
        Tensor x = rand_tensor(rng, {6, 6, 3}, -2.0, 2.0);
        const MaxPoolResult r = maxpool2(x);
        const Tensor w = rand_tensor(rng, r.out.dims());
        const Tensor analytic = maxpool2_backward(w, r.argmax, x.dims());
        const double err = max_rel_err(analytic, fd_gradient([&](const Tensor& t) {
            return project(maxpool2(t).out, w);
        }, x));
        out.push_back(grad_result("maxpool2", err));
    }

    {  // upsample2
        Tensor x = rand_tensor(rng, {3, 4, 2});
        const Tensor w = rand_tensor(rng, {6, 8, 2});
        const double err = max_rel_err(upsample2_backward(w), fd_gradient([&](const Tensor& t) {
            return project(upsample2(t), w);
        }, x));
        out.push_back(grad_result("upsample2", err));
    }

    {  // concat: gradient splits into the two channel slices
        Tensor a = rand_tensor(rng, {4, 4, 2});
        Tensor b = rand_tensor(rng, {4, 4, 3});
        const Tensor w = rand_tensor(rng, {4, 4, 5});
        double err = max_rel_err(slice_channels(w, 0, 2), fd_gradient([&](const Tensor& t) {
            return project(concat_channels(t, b), w);
        }, a));
        err = std::max(err, max_rel_err(slice_channels(w, 2, 5), fd_gradient([&](const Tensor& t) {
            return project(concat_channels(a, t), w);
        }, b)));
        out.push_back(grad_result("concat", err));
    }

    {  // softmax cross-entropy
        Tensor logits = rand_tensor(rng, {4, 4, 3}, -2.0, 2.0);
        LabelMap labels(4, 4);
        for (int& v : labels.values()) v = static_cast<int>(rng.next_below(3));
        const CeLoss ce = softmax_ce_loss(logits, labels);
        const double err = max_rel_err(ce.grad_logits, fd_gradient([&](const Tensor& t) {
            return softmax_ce_loss(t, labels).loss;
        }, logits));
        out.push_back(grad_result("softmax_ce", err));
    }

    {  // full conv block, both orders (composition through conv/relu/bn)
        for (const BlockOrder order : {BlockOrder::relu_bn, BlockOrder::bn_relu}) {
            const char* oname = order == BlockOrder::relu_bn ? "bc_relu_bn" : "bc_bn_relu";
            Tensor x = rand_tensor(rng, {4, 4, 2}, -1.5, 1.5);
            BcState bc;
            bc.conv = ConvKernel(3, 3, 2, 3);
            bc.conv.weights = rand_tensor(rng, {3, 3, 2, 3});
            bc.conv.biases = rand_tensor(rng, {3}, -0.2, 0.2);
            bc.bn = BatchNormState(3);
            bc.bn.gamma = rand_tensor(rng, {3}, 0.5, 1.5);
            bc.order = order;
            const Tensor w = rand_tensor(rng, {4, 4, 3});
            auto loss = [&](const Tensor& xt, const Tensor& wt) {
                BcState s = bc;
                s.conv.weights = wt;
                return project(bc_forward(xt, s, Mode::train, nullptr), w);
            };
            BcState s = bc;
            BcCache cache;
            bc_forward(x, s, Mode::train, &cache);
            BcGrads g = bc_backward(w, bc, cache);
            double err = max_rel_err(g.grad_input, fd_gradient([&](const Tensor& t) {
                return loss(t, bc.conv.weights);
            }, x));
            err = std::max(err, max_rel_err(g.grad_weights, fd_gradient([&](const Tensor& t) {
                return loss(x, t);
            }, bc.conv.weights)));
            out.push_back(grad_result(oname, err));
        }
    }

    return out;
}

namespace {

// Straight-line recomputation of the matrix entropy pipeline, kept free of
// any calls into the production code path.
double oracle_entropy(const std::vector<double>& xs, double* oa = nullptr, double* ob = nullptr) {
    const double n = static_cast<double>(xs.size());
    double mu = 0.0;
    for (double v : xs) mu += v;
    mu /= n;
    double var = 0.0;
    for (double v : xs) var += (v - mu) * (v - mu);
    var /= n;
    const double sigma = std::sqrt(var);
    double a = 0.5, b = 0.5;
    if (sigma >= 1e-12) {
        std::vector<double> p(xs.size());
        const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double z = (xs[i] - mu) / sigma;
            p[i] = norm * std::exp(-0.5 * z * z);
        }
        double pm = 0.0;
        for (double v : p) pm += v;
        pm /= n;
        double below = 0.0, above = 0.0;
        for (double v : p) {
            if (v < pm) below += 1.0;
            else if (v > pm) above += 1.0;
        }
        if (below / n < above / n) {
            a = below / n;
            b = above / n;
        }
    }
    if (oa) *oa = a;
    if (ob) *ob = b;
    if (a == 0.5 && b == 0.5) return 1.0;
    return -(a * std::log2(a) + b * std::log2(b));
}

}  // namespace

CheckList check_entropy(std::uint64_t seed) {
    CheckList out;
    Rng rng(seed, "entropy");

    {
        const BinaryDistribution d = binarize(std::vector<double>{0.0, 10.0, 10.0, 10.0});
        const bool ok = !d.degenerate && d.a == 0.25 && d.b == 0.75;
        out.push_back({"binarize_quarter", ok,
                       "a=" + fmt_sci(d.a) + " b=" + fmt_sci(d.b) + " want 0.25/0.75"});
    }
    {
        const BinaryDistribution flat = binarize(std::vector<double>{3.0, 3.0, 3.0, 3.0});
        const BinaryDistribution skew = binarize(std::vector<double>{0.0, 0.0, 0.0, 10.0});
        out.push_back({"binarize_degenerate", flat.degenerate && skew.degenerate,
                       "flat and majority-below inputs collapse to {0.5,0.5}"});
    }
    {
        const double h = binary_entropy(BinaryDistribution{0.25, 0.75, false});
        const double expect = 0.8112781244591328;
        out.push_back({"entropy_quarter", std::abs(h - expect) < 1e-12,
                       "H(0.25,0.75)=" + fmt_sci(h)});
    }
    {
        const double h = binary_entropy(BinaryDistribution{0.5, 0.5, true});
        out.push_back({"entropy_degenerate_exact_one", h == 1.0, "H={0.5,0.5} must be exactly 1"});
    }
    {
        const double peak1 = gaussian_pdf(0.0, GaussianParams{0.0, 1.0});
        const double peak2 = gaussian_pdf(0.0, GaussianParams{0.0, 2.0});
        const bool ok = std::abs(peak1 - 0.3989422804014327) < 1e-12 &&
                        std::abs(peak2 - 0.19947114020071635) < 1e-12;
        out.push_back({"gaussian_peaks", ok, "density at the mean for sigma 1 and 2"});
    }
    {
        double worst = 0.0;
        bool shares_ok = true;
        for (int trial = 0; trial < 500; ++trial) {
            const std::size_t h = 2 + rng.next_below(7), w = 2 + rng.next_below(7),
                              c = 1 + rng.next_below(4);
            Tensor m = rand_tensor(rng, {h, w, c}, -3.0, 3.0);
            double oa = 0, ob = 0;
            const double want = oracle_entropy(m.values(), &oa, &ob);
            const BinaryDistribution d = binarize_matrix(m);
            const double got = matrix_entropy(m);
            worst = std::max(worst, std::abs(got - want));
            if (std::abs(d.a - oa) > 1e-12 || std::abs(d.b - ob) > 1e-12) shares_ok = false;
        }
        out.push_back({"pipeline_oracle", worst < 1e-12 && shares_ok,
                       "max |H-oracle| " + fmt_sci(worst) + " over 500 random matrices"});
    }
    {
        Tensor m = rand_tensor(rng, {6, 6, 2}, -2.0, 2.0);
        const double h0 = matrix_entropy(m);
        std::vector<double> shuffled = m.values();
        rng.shuffle(shuffled);
        const double h1 = matrix_entropy(Tensor({4, 9, 2}, shuffled));
        out.push_back({"permutation_invariance", h0 == h1, "entropy ignores element order"});
    }
    {
        bool ok = true;
        Tensor m = rand_tensor(rng, {5, 7, 3}, -2.0, 2.0);
        const BinaryDistribution base = binarize_matrix(m);
        for (const double c : {0.5, 2.0, 10.0}) {
            Tensor scaled = scale(m, c);
            const BinaryDistribution d = binarize_matrix(scaled);
            if (std::abs(d.a - base.a) > 1e-12 || std::abs(d.b - base.b) > 1e-12) ok = false;
        }
        out.push_back({"scaling_invariance", ok, "positive scaling preserves the split"});
    }
    {
        std::vector<double> hf = {0.9, 0.8, 1.0}, hd = {0.7, 0.85, 1.0};
        const auto d1 = delta_entropy(hf, hd);
        const auto d2 = delta_entropy(hd, hf);
        bool ok = true;
        for (std::size_t i = 0; i < d1.size(); ++i)
            if (d1[i] != -d2[i]) ok = false;
        out.push_back({"delta_antisymmetry", ok, "delta(f,d) == -delta(d,f)"});
    }
    return out;
}

CheckList check_theorem1(std::uint64_t seed) {
    CheckList out;
    struct Case {
        const char* name;
        double mu, sigma, a, b;
    };
    const Case cases[] = {
        {"affine_2x_plus_3", 0.0, 1.0, 2.0, 3.0},
        {"identity", 1.5, 0.7, 1.0, 0.0},
        {"negative_scale", -2.0, 1.3, -1.5, 0.5},
    };
    const std::size_t n = 100000;
    for (const Case& c : cases) {
        const MomentEstimate est = theorem1_check(c.mu, c.sigma, c.a, c.b, n, seed);
        const double want_mean = c.a * c.mu + c.b;
        const double want_var = c.a * c.a * c.sigma * c.sigma;
        const double se_mean = std::abs(c.a) * c.sigma / std::sqrt(static_cast<double>(n));
        const double se_var = want_var * std::sqrt(2.0 / static_cast<double>(n - 1));
        const bool ok = std::abs(est.mean - want_mean) < 3.0 * se_mean &&
                        std::abs(est.var - want_var) < 3.0 * se_var;
        out.push_back({std::string("theorem1_") + c.name, ok,
                       "mean " + fmt_sci(est.mean) + " want " + fmt_sci(want_mean) + ", var " +
                           fmt_sci(est.var) + " want " + fmt_sci(want_var) + " (3 SE bounds)"});
    }
    {
        const MomentEstimate est = theorem1_check(5.0, 0.0, 2.0, 1.0, 1000, seed);
        out.push_back({"theorem1_degenerate_sigma0", est.mean == 11.0 && est.var == 0.0,
                       "sigma 0 transforms to the constant a*mu+b"});
    }
    return out;
}

CheckList check_linearity(std::uint64_t seed) {
    CheckList out;
    Rng rng(seed, "linearity");
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t h = 4 + rng.next_below(6), w = 4 + rng.next_below(6);
        const std::size_t ic = 1 + rng.next_below(3), oc = 1 + rng.next_below(3);
        const std::size_t k = 1 + 2 * rng.next_below(2);  // 1 or 3
        ConvKernel kernel(k, k, ic, oc);
        kernel.weights = rand_tensor(rng, {k, k, ic, oc});
        Tensor x = rand_tensor(rng, {h, w, ic}, -2.0, 2.0);
        Tensor eps = rand_tensor(rng, {h, w, ic}, -0.5, 0.5);
        const double alpha = rng.uniform(0.0, 1.0);
        worst = std::max(worst, noise_persistence_check(x, eps, alpha, 1.0 - alpha, kernel));
    }
    out.push_back({"linearity_random_mixes", worst < 1e-10,
                   "max residual " + fmt_sci(worst) + " over 100 trials (tol 1e-10)"});
    {
        ConvKernel kernel(3, 3, 2, 2);
        kernel.weights = rand_tensor(rng, {3, 3, 2, 2});
        Tensor x = rand_tensor(rng, {6, 6, 2});
        Tensor eps = rand_tensor(rng, {6, 6, 2});
        const double r = noise_persistence_check(x, eps, 1.0, 0.0, kernel);
        out.push_back({"linearity_pure_signal", r == 0.0, "alpha=1, beta=0 is bit-exact"});
    }
    return out;
}

namespace {

// Brute-force boundary + symmetric max-min distance, independent of the
// production implementation.
double oracle_hausdorff(const LabelMap& a, const LabelMap& b, int cid) {
    const int h = static_cast<int>(a.height()), w = static_cast<int>(a.width());
    auto boundary = [&](const LabelMap& m) {
        std::vector<std::pair<int, int>> pts;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (m.at(y, x) != cid) continue;
                bool edge = false;
                if (y == 0 || m.at(y - 1, x) != cid) edge = true;
                if (y == h - 1 || m.at(y + 1, x) != cid) edge = true;
                if (x == 0 || m.at(y, x - 1) != cid) edge = true;
                if (x == w - 1 || m.at(y, x + 1) != cid) edge = true;
                if (edge) pts.emplace_back(y, x);
            }
        return pts;
    };
    const auto pa = boundary(a), pb = boundary(b);
    if (pa.empty() && pb.empty()) return 0.0;
    if (pa.empty() || pb.empty()) return std::sqrt(static_cast<double>(h * h + w * w));
    double worst = 0.0;
    for (const auto& p : pa) {
        double best = 1e300;
        for (const auto& q : pb)
            best = std::min(best, std::sqrt(static_cast<double>((p.first - q.first) * (p.first - q.first) +
                                                                (p.second - q.second) * (p.second - q.second))));
        worst = std::max(worst, best);
    }
    for (const auto& q : pb) {
        double best = 1e300;
        for (const auto& p : pa)
            best = std::min(best, std::sqrt(static_cast<double>((p.first - q.first) * (p.first - q.first) +
                                                                (p.second - q.second) * (p.second - q.second))));
        worst = std::max(worst, best);
    }
    return worst;
}

double oracle_dice(const LabelMap& a, const LabelMap& b, int cid) {
    double na = 0, nb = 0, ni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool pa = a.values()[i] == cid, pb = b.values()[i] == cid;
        na += pa;
        nb += pb;
        ni += pa && pb;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * ni / (na + nb);
}

}  // namespace

CheckList check_metrics(std::uint64_t seed) {
    CheckList out;
    Rng rng(seed, "metrics");

    {
        LabelMap a(4, 4, 0), b(4, 4, 0);
        a.at(1, 1) = 1;
        a.at(1, 2) = 1;
        b.at(1, 1) = 1;
        b.at(2, 1) = 1;
        const bool ok = dice(a, a, 1) == 1.0 && dice(a, b, 1) == 0.5;
        out.push_back({"dice_points", ok, "identical -> 1, half-overlap -> 0.5"});
    }
    {
        LabelMap a(4, 4, 0), b(4, 4, 0);
        a.at(0, 0) = 1;
        b.at(3, 3) = 1;
        out.push_back({"dice_disjoint", dice(a, b, 1) == 0.0, "disjoint -> 0"});
    }
    {
        LabelMap a(8, 8, 0), b(8, 8, 0);
        a.at(0, 0) = 1;
        b.at(3, 4) = 1;
        const double d = hausdorff(a, b, 1);
        out.push_back({"hausdorff_3_4_5", d == 5.0, "points (0,0)-(3,4) -> 5.0, got " + fmt_sci(d)});
    }
    {
        LabelMap a(6, 8, 0), b(6, 8, 0);
        const double both = hausdorff(a, b, 1);
        b.at(2, 2) = 1;
        const double one = hausdorff(a, b, 1);
        const double diag = std::sqrt(36.0 + 64.0);
        const bool ok = both == 0.0 && one == diag;
        out.push_back({"hausdorff_empty_conventions", ok,
                       "both empty -> 0; one empty -> image diagonal"});
    }
    {
        double worst_h = 0.0, worst_d = 0.0;
        bool sym = true;
        for (int trial = 0; trial < 300; ++trial) {
            const std::size_t h = 2 + rng.next_below(7), w = 2 + rng.next_below(7);
            LabelMap a(h, w, 0), b(h, w, 0);
            for (int& v : a.values()) v = rng.next_below(10) < 3 ? 1 : 0;
            for (int& v : b.values()) v = rng.next_below(10) < 3 ? 1 : 0;
            worst_d = std::max(worst_d, std::abs(dice(a, b, 1) - oracle_dice(a, b, 1)));
            worst_h = std::max(worst_h, std::abs(hausdorff(a, b, 1) - oracle_hausdorff(a, b, 1)));
            if (hausdorff(a, b, 1) != hausdorff(b, a, 1) || dice(a, b, 1) != dice(b, a, 1))
                sym = false;
        }
        out.push_back({"metric_oracles", worst_d < 1e-12 && worst_h < 1e-9 && sym,
                       "dice err " + fmt_sci(worst_d) + ", hausdorff err " + fmt_sci(worst_h) +
                           ", symmetric"});
    }
    {
        const MetricsRow rows[] = {{1, 0.8, 2.0}, {2, 0.6, 4.0}, {3, 1.0, 0.0}};
        const MeanSeg m = mean_seg(rows);
        const bool ok = std::abs(m.dice - 0.8) < 1e-15 && std::abs(m.hausdorff - 2.0) < 1e-15;
        out.push_back({"mean_seg_arithmetic", ok, "means over the foreground rows"});
    }
    return out;
}

CheckList run_check_suite(const std::string& suite, std::uint64_t seed) {
    if (suite == "grad") return check_grad(seed);
    if (suite == "entropy") return check_entropy(seed);
    if (suite == "theorem1") return check_theorem1(seed);
    if (suite == "linearity") return check_linearity(seed);
    if (suite == "metrics") return check_metrics(seed);
    if (suite == "all") {
        CheckList all;
        for (const char* s : {"grad", "entropy", "theorem1", "linearity", "metrics"}) {
            CheckList part = run_check_suite(s, seed);
            all.insert(all.end(), part.begin(), part.end());
        }
        return all;
    }
    throw std::invalid_argument("unknown check suite '" + suite +
                                "' (grad|entropy|theorem1|linearity|metrics|all)");
}

bool all_passed(const CheckList& results) {
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.pass; });
}

}  // namespace ff
