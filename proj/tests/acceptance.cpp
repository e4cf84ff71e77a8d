// Acceptance gate: every release-blocking property of the feature-filter
// workbench, one PASS/FAIL line each. Oracles here are written straight-line
// and independently of the library internals they judge. Exit code 0 only if
// every criterion holds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "featfilter/checks.hpp"
#include "featfilter/entropy.hpp"
#include "featfilter/layers.hpp"
#include "featfilter/metrics.hpp"
#include "featfilter/nets.hpp"
#include "featfilter/rng.hpp"
#include "featfilter/synthdata.hpp"
#include "featfilter/train.hpp"

namespace fs = std::filesystem;
using namespace ff;

namespace {

int g_passed = 0;
int g_failed = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s %2d %s: %s\n", pass ? "PASS" : "FAIL", index, name.c_str(), detail.c_str());
    std::fflush(stdout);
    (pass ? g_passed : g_failed) += 1;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ------------------------------------------------------------ criterion 1

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    const CheckList results = check_grad(42);
    const double elapsed = seconds_since(t0);
    bool ok = !results.empty() && elapsed < 60.0;
    std::string worst;
    for (const CheckResult& r : results)
        if (!r.pass) {
            ok = false;
            worst = r.name + " (" + r.detail + ")";
            break;
        }
    report(1, "analytic gradients vs central differences", ok,
           ok ? std::to_string(results.size()) + " layer checks within 1e-4 in " + fmt(elapsed) +
                    " s"
              : (worst.empty() ? "timed out: " + fmt(elapsed) + " s" : "first failure: " + worst));
}

// ------------------------------------------------------------ criterion 2

void criterion_amplitude() {
    Rng rng(2026, "amplitude");
    long long violations = 0;
    long long elements = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t h = 1 + rng.next_below(6);
        const std::size_t w = 1 + rng.next_below(6);
        const std::size_t ch = 1 + rng.next_below(4);
        const std::size_t k = rng.next_below(2) == 0 ? 1 : 3;
        Tensor f({h, w, ch});
        for (double& v : f.values())
            v = rng.next_below(8) == 0 ? 0.0 : rng.uniform(-3.0, 3.0);
        CffState state;
        state.gate = ConvKernel(k, k, ch, ch);
        for (double& v : state.gate.weights.values()) v = rng.uniform(-2.0, 2.0);
        for (double& v : state.gate.biases.values()) v = rng.uniform(-2.0, 2.0);
        const Tensor d = cff_forward(f, state, nullptr);
        for (std::size_t i = 0; i < f.size(); ++i) {
            ++elements;
            if (f[i] == 0.0) {
                if (d[i] != 0.0) ++violations;
            } else if (!(std::abs(d[i]) < std::abs(f[i])) ||
                       std::signbit(d[i]) != std::signbit(f[i])) {
                ++violations;
            }
        }
    }
    report(2, "filter output is a strict amplitude decrease", violations == 0,
           std::to_string(violations) + " violations over " + std::to_string(elements) +
               " elements in 1000 trials");
}

// ------------------------------------------------------------ criterion 3

// Straight-line recomputation of the entropy pipeline: fit a normal law to
// the values, take each element's density, split the densities on their
// mean, and measure the two-outcome Shannon entropy (degenerate split -> 1).
double straightline_entropy(std::span<const double> xs) {
    const double n = static_cast<double>(xs.size());
    double mu = 0.0;
    for (double x : xs) mu += x;
    mu /= n;
    double var = 0.0;
    for (double x : xs) var += (x - mu) * (x - mu);
    var /= n;
    const double sigma = std::sqrt(var);
    if (sigma < 1e-12) return 1.0;
    std::vector<double> p(xs.size());
    const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < xs.size(); ++i)
        p[i] = norm * std::exp(-(xs[i] - mu) * (xs[i] - mu) / (2.0 * var));
    double pm = 0.0;
    for (double v : p) pm += v;
    pm /= n;
    double below = 0.0, above = 0.0;
    for (double v : p) {
        if (v < pm) below += 1.0;
        if (v > pm) above += 1.0;
    }
    const double a = below / n, b = above / n;
    // a mean at or below every element is a rounding artifact of a flat
    // multiset; treat it like the tied split
    if (below == 0.0 || a >= b) return 1.0;
    return -(a * std::log2(a) + b * std::log2(b));
}

void criterion_entropy_oracle() {
    Rng rng(2026, "entropy");
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t h = 1 + rng.next_below(8);
        const std::size_t w = 1 + rng.next_below(8);
        const std::size_t ch = 1 + rng.next_below(6);
        Tensor m({h, w, ch});
        const int flavor = static_cast<int>(rng.next_below(5));
        const double lo = rng.uniform(-5.0, 0.0), hi = rng.uniform(0.0, 5.0);
        for (double& v : m.values()) {
            switch (flavor) {
                case 0: v = rng.uniform(lo, hi); break;
                case 1: v = rng.normal(rng.uniform(-1.0, 1.0), 2.0); break;
                case 2: v = hi; break;  // flat matrix, degenerate path
                case 3: v = rng.next_below(4) == 0 ? hi : lo; break;
                default: v = rng.next_below(3) == 0 ? rng.uniform(lo, hi) : 0.0; break;
            }
        }
        // NaN-sticky accumulation: a NaN difference must fail, not vanish
        const auto widen = [&worst](double diff) {
            if (!(diff <= worst)) worst = diff;
        };
        widen(std::abs(matrix_entropy(m) - straightline_entropy(m.values())));

        // the per-layer pair must agree with the straight line on both sides
        Tensor d = m;
        for (double& v : d.values()) v *= rng.uniform(0.01, 0.99);
        const EntropyPair pair = layer_entropy_pair(m, d);
        widen(std::abs(pair.hf - straightline_entropy(m.values())));
        widen(std::abs(pair.hd - straightline_entropy(d.values())));
    }

    const BinaryDistribution flat = binarize(std::vector<double>{3.7, 3.7, 3.7, 3.7});
    const BinaryDistribution quarter = binarize(std::vector<double>{0.0, 10.0, 10.0, 10.0});
    const bool hands = flat.degenerate && flat.a == 0.5 && flat.b == 0.5 &&
                       !quarter.degenerate && quarter.a == 0.25 && quarter.b == 0.75 &&
                       binary_entropy(flat) == 1.0;
    const bool ok = worst <= 1e-12 && hands;
    report(3, "entropy pipeline equals its straight-line recomputation", ok,
           "max |difference| " + fmt(worst) + " over 1000 matrices; hand splits " +
               (hands ? "exact" : "WRONG"));
}

// ------------------------------------------------------------ criterion 4

void criterion_affine_normal() {
    const auto t0 = std::chrono::steady_clock::now();
    const double mu = 0.0, sigma = 1.0, a = 2.0, b = 3.0;
    const std::size_t n = 100000;
    const MomentEstimate est = theorem1_check(mu, sigma, a, b, n, 20260815);
    const double want_mean = a * mu + b;
    const double want_var = a * a * sigma * sigma;
    const double se_mean = std::abs(a) * sigma / std::sqrt(static_cast<double>(n));
    const double se_var = want_var * std::sqrt(2.0 / static_cast<double>(n - 1));
    const double dm = std::abs(est.mean - want_mean);
    const double dv = std::abs(est.var - want_var);
    const bool ok = dm <= 3.0 * se_mean && dv <= 3.0 * se_var && est.n == n;
    report(4, "affine transform of a normal keeps the predicted moments", ok,
           "|mean-3| = " + fmt(dm) + " (limit " + fmt(3.0 * se_mean) + "), |var-4| = " + fmt(dv) +
               " (limit " + fmt(3.0 * se_var) + ") in " + fmt(seconds_since(t0)) + " s");
}

// ------------------------------------------------------------ criterion 5

void criterion_linearity() {
    Rng rng(2026, "linearity");
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t h = 2 + rng.next_below(9);
        const std::size_t w = 2 + rng.next_below(9);
        const std::size_t cin = 1 + rng.next_below(4);
        const std::size_t cout = 1 + rng.next_below(4);
        const std::size_t k = rng.next_below(2) == 0 ? 1 : 3;
        Tensor x({h, w, cin}), eps({h, w, cin});
        for (double& v : x.values()) v = rng.uniform(-2.0, 2.0);
        for (double& v : eps.values()) v = rng.normal(0.0, 0.5);
        ConvKernel kernel(k, k, cin, cout);
        for (double& v : kernel.weights.values()) v = rng.uniform(-1.0, 1.0);
        kernel.biases.fill(0.0);
        const double alpha = rng.uniform(-2.0, 2.0);
        const double beta = rng.uniform(-2.0, 2.0);
        worst = std::max(worst, noise_persistence_check(x, eps, alpha, beta, kernel));
    }
    report(5, "convolved noise stays additive (linearity)", worst < 1e-10,
           "max residual " + fmt(worst) + " over 100 trials");
}

// ------------------------------------------------------------ criterion 6

void criterion_param_deltas() {
    bool ok = true;
    std::string detail;
    std::map<std::pair<Family, int>, long long> measured;
    for (const Family family : {Family::unet, Family::fcn}) {
        for (const int k : {1, 3}) {
            NetworkSpec alt;  // defaults: depth 3, 8 base channels
            alt.family = family;
            alt.cff_kernel_size = k;
            NetworkSpec neu = alt;
            neu.with_cff = true;
            const long long delta = build(neu).count_params() - build(alt).count_params();
            measured[{family, k}] = delta;

            // channel ledger straight from the architecture arithmetic: two
            // blocks per encoder stage, and for the u-net also the bottleneck
            // pair plus two blocks per decoder stage
            std::vector<long long> channels;
            for (int d = 1; d <= alt.depth; ++d) {
                const long long c = alt.base_channels << (d - 1);
                channels.push_back(c);
                channels.push_back(c);
            }
            if (family == Family::unet) {
                const long long cb = alt.base_channels << alt.depth;
                channels.push_back(cb);
                channels.push_back(cb);
                for (int d = alt.depth; d >= 1; --d) {
                    const long long c = alt.base_channels << (d - 1);
                    channels.push_back(c);
                    channels.push_back(c);
                }
            }
            long long closed = 0;
            for (const long long c : channels)
                closed += static_cast<long long>(k) * k * c * c + c;
            if (delta != closed) {
                ok = false;
                detail += (family == Family::unet ? "unet" : "fcn");
                detail += " k" + std::to_string(k) + ": measured " + std::to_string(delta) +
                          " vs closed form " + std::to_string(closed) + "; ";
            }
        }
    }
    for (const Family family : {Family::unet, Family::fcn})
        if (!(measured[{family, 1}] < measured[{family, 3}])) {
            ok = false;
            detail += "1x1 overhead not strictly below 3x3; ";
        }
    if (ok)
        detail = "unet +" + std::to_string(measured[{Family::unet, 1}]) + "/+" +
                 std::to_string(measured[{Family::unet, 3}]) + ", fcn +" +
                 std::to_string(measured[{Family::fcn, 1}]) + "/+" +
                 std::to_string(measured[{Family::fcn, 3}]) + " (1x1 < 3x3 in both)";
    report(6, "filter parameter overhead matches the closed form", ok, detail);
}

// ------------------------------------------------------------ criterion 7

LabelMap mask_from_bits(std::size_t h, std::size_t w, std::uint32_t bits) {
    LabelMap m(h, w, 0);
    for (std::size_t i = 0; i < h * w; ++i)
        if (bits & (1u << i)) m.values()[i] = 1;
    return m;
}

double brute_dice(const LabelMap& a, const LabelMap& b) {
    long long na = 0, nb = 0, both = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a.values()[i] == 1;
        nb += b.values()[i] == 1;
        both += a.values()[i] == 1 && b.values()[i] == 1;
    }
    if (na + nb == 0) return 1.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

std::vector<std::pair<long, long>> brute_boundary(const LabelMap& m) {
    std::vector<std::pair<long, long>> out;
    const long h = static_cast<long>(m.height()), w = static_cast<long>(m.width());
    for (long y = 0; y < h; ++y)
        for (long x = 0; x < w; ++x) {
            if (m.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) != 1) continue;
            bool edge = false;
            const long ny[4] = {y - 1, y + 1, y, y};
            const long nx[4] = {x, x, x - 1, x + 1};
            for (int k = 0; k < 4 && !edge; ++k)
                edge = ny[k] < 0 || nx[k] < 0 || ny[k] >= h || nx[k] >= w ||
                       m.at(static_cast<std::size_t>(ny[k]), static_cast<std::size_t>(nx[k])) != 1;
            if (edge) out.emplace_back(y, x);
        }
    return out;
}

double brute_hausdorff(const LabelMap& a, const LabelMap& b) {
    const auto ba = brute_boundary(a);
    const auto bb = brute_boundary(b);
    if (ba.empty() && bb.empty()) return 0.0;
    if (ba.empty() || bb.empty()) {
        const double h = static_cast<double>(a.height()), w = static_cast<double>(a.width());
        return std::sqrt(h * h + w * w);
    }
    auto directed = [](const std::vector<std::pair<long, long>>& from,
                       const std::vector<std::pair<long, long>>& to) {
        double worst = 0.0;
        for (const auto& p : from) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& q : to) {
                const double dy = static_cast<double>(p.first - q.first);
                const double dx = static_cast<double>(p.second - q.second);
                nearest = std::min(nearest, std::sqrt(dy * dy + dx * dx));
            }
            worst = std::max(worst, nearest);
        }
        return worst;
    };
    return std::max(directed(ba, bb), directed(bb, ba));
}

void criterion_metric_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    long long pairs = 0, mismatches = 0;

    // exhaustive over every mask pair small enough to enumerate outright
    for (std::size_t h = 1; h <= 4; ++h)
        for (std::size_t w = 1; w <= 4; ++w) {
            if (h * w > 9) continue;
            const std::uint32_t top = 1u << (h * w);
            for (std::uint32_t i = 0; i < top; ++i) {
                const LabelMap a = mask_from_bits(h, w, i);
                for (std::uint32_t j = 0; j < top; ++j) {
                    const LabelMap b = mask_from_bits(h, w, j);
                    ++pairs;
                    if (dice(a, b, 1) != brute_dice(a, b)) ++mismatches;
                    if (hausdorff(a, b, 1) != brute_hausdorff(a, b)) ++mismatches;
                }
            }
        }

    // the remaining 4x4-adjacent shapes, sampled heavily
    Rng rng(2026, "metrics");
    for (int trial = 0; trial < 20000; ++trial) {
        const std::size_t h = trial % 3 == 0 ? 3 : 4;
        const std::size_t w = 4;
        const std::uint32_t span = 1u << (h * w);
        const LabelMap a = mask_from_bits(h, w, static_cast<std::uint32_t>(rng.next_below(span)));
        const LabelMap b = mask_from_bits(h, w, static_cast<std::uint32_t>(rng.next_below(span)));
        ++pairs;
        if (dice(a, b, 1) != brute_dice(a, b)) ++mismatches;
        if (hausdorff(a, b, 1) != brute_hausdorff(a, b)) ++mismatches;
    }

    // pinned point cases
    bool points = true;
    {
        LabelMap blob(3, 3, 0);
        blob.at(1, 1) = 1;
        blob.at(0, 1) = 1;
        points &= dice(blob, blob, 1) == 1.0;
        LabelMap left(1, 4, 0), right(1, 4, 0);
        left.at(0, 0) = 1;
        right.at(0, 3) = 1;
        points &= dice(left, right, 1) == 0.0;
        LabelMap ab(1, 3, 0), bc(1, 3, 0);
        ab.at(0, 0) = ab.at(0, 1) = 1;
        bc.at(0, 1) = bc.at(0, 2) = 1;
        points &= dice(ab, bc, 1) == 0.5;
        LabelMap p(4, 5, 0), q(4, 5, 0);
        p.at(0, 0) = 1;
        q.at(3, 4) = 1;
        points &= hausdorff(p, q, 1) == 5.0;
    }

    const bool ok = mismatches == 0 && points;
    report(7, "overlap and boundary metrics match brute force", ok,
           std::to_string(pairs) + " mask pairs, " + std::to_string(mismatches) +
               " mismatches, point cases " + (points ? "exact" : "WRONG") + ", " +
               fmt(seconds_since(t0)) + " s");
}

// ------------------------------------------------------- criteria 8 and 9

struct TrendOutcome {
    bool data_ready = false;
    std::vector<Sample> val_set;
    std::string best_seed_dir;  // the filtered run with the lowest best validation loss
    std::string best_label;
    int num_classes = 4;
};

TrendOutcome criterion_segmentation_trend(const std::string& work) {
    TrendOutcome out;
    const auto t0 = std::chrono::steady_clock::now();

    const SceneConfig scene;  // 64x64 defaults
    const std::vector<Sample> samples = generate(scene, 250, 1234);
    auto [train_set, val_set] = split(samples, 0.8, 1234);

    NetworkSpec with_filter;  // u-net, depth 3, 8 base channels, 4 classes
    with_filter.with_cff = true;
    NetworkSpec plain = with_filter;
    plain.with_cff = false;

    TrainConfig cfg;  // 20 epochs, lr 1e-3, batch 1
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    const std::string cff_dir = work + "/cff_on";
    const MultiSeedResult on = multi_seed(with_filter, train_set, val_set, cfg, seeds, cff_dir);
    const MultiSeedResult off = multi_seed(plain, train_set, val_set, cfg, seeds);

    const double elapsed = seconds_since(t0);
    const bool dice_ok = on.mean_seg.dice.mean >= off.mean_seg.dice.mean;
    const bool loss_ok = on.best_val_loss.mean <= off.best_val_loss.mean;
    const bool time_ok = elapsed < 1800.0;
    report(8, "filtered nets reach equal-or-better segmentation", dice_ok && loss_ok && time_ok,
           "mean-seg dice " + fmt(on.mean_seg.dice.mean) + " vs " + fmt(off.mean_seg.dice.mean) +
               (dice_ok ? " (>=)" : " (WORSE)") + ", best val loss " +
               fmt(on.best_val_loss.mean) + " vs " + fmt(off.best_val_loss.mean) +
               (loss_ok ? " (<=)" : " (WORSE)") + ", 5 seeds each, " + fmt(elapsed) + " s");

    // the entropy probe examines the family's best model, mirroring how a
    // representative network is selected for analysis: by validation loss,
    // never by the probe outcome itself
    std::size_t best = 0;
    for (std::size_t i = 1; i < on.runs.size(); ++i)
        if (on.runs[i].best_val_loss < on.runs[best].best_val_loss) best = i;
    char name[16];
    std::snprintf(name, sizeof name, "seed%04zu", best);

    out.data_ready = true;
    out.val_set = std::move(val_set);
    out.best_seed_dir = cff_dir + "/" + name;
    out.best_label = std::string(name) + " (seed " + std::to_string(on.runs[best].seed) +
                     ", val loss " + fmt(on.runs[best].best_val_loss) + ")";
    out.num_classes = with_filter.num_classes;
    return out;
}

void criterion_entropy_trend(const TrendOutcome& trend) {
    if (!trend.data_ready) {
        report(9, "filters reduce feature entropy at the best checkpoint", false,
               "skipped: no trained checkpoints from the previous criterion");
        return;
    }
    const auto t0 = std::chrono::steady_clock::now();
    LayerGraph graph = load_checkpoint(trend.best_seed_dir + "/ckpt/Em");
    const std::vector<int> taps = graph.fbc_node_ids();
    std::vector<double> hf(taps.size(), 0.0), hd(taps.size(), 0.0);
    for (const Sample& s : trend.val_set) {
        const ForwardTrace trace = run_forward(graph, s.image, Mode::eval);
        for (std::size_t i = 0; i < taps.size(); ++i) {
            const NodeTrace& node = trace.nodes[static_cast<std::size_t>(taps[i])];
            const EntropyPair pair = layer_entropy_pair(node.f, node.out);
            hf[i] += pair.hf;
            hd[i] += pair.hd;
        }
    }
    double mean_delta = 0.0;
    std::size_t negative = 0;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        const double delta = (hd[i] - hf[i]) / static_cast<double>(trend.val_set.size());
        mean_delta += delta;
        if (delta < 0.0) ++negative;
    }
    mean_delta /= static_cast<double>(taps.size());
    const double elapsed = seconds_since(t0);
    const bool ok = mean_delta < 0.0 && 2 * negative > taps.size() && elapsed < 120.0;
    report(9, "filters reduce feature entropy at the best checkpoint", ok,
           "mean delta-H " + fmt(mean_delta) + ", negative in " + std::to_string(negative) + "/" +
               std::to_string(taps.size()) + " layers, best run " + trend.best_label + ", " +
               fmt(elapsed) + " s");
}

// ------------------------------------------------------------ criterion 10

bool read_bytes(const fs::path& p, std::string& out) {
    std::ifstream in(p, std::ios::binary);
    if (!in.good()) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

bool trees_identical(const fs::path& a, const fs::path& b, std::string& why) {
    std::vector<std::string> fa, fb;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a).string());
    for (const auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b).string());
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    if (fa != fb) {
        why = "file lists differ (" + std::to_string(fa.size()) + " vs " +
              std::to_string(fb.size()) + ")";
        return false;
    }
    for (const std::string& rel : fa) {
        std::string ba, bb;
        if (!read_bytes(a / rel, ba) || !read_bytes(b / rel, bb)) {
            why = "unreadable " + rel;
            return false;
        }
        if (ba != bb) {
            why = rel + " differs";
            return false;
        }
    }
    return true;
}

void criterion_reproducibility(const std::string& work) {
    SceneConfig scene;
    scene.image_size = 16;
    scene.lv_radius_min = 1.5;
    scene.lv_radius_max = 2.0;
    scene.myo_thickness_min = 1.0;
    scene.myo_thickness_max = 1.5;
    scene.center_jitter = 1.0;
    scene.rv_radius_min = 1.0;
    scene.rv_radius_max = 1.5;
    scene.confuser_blobs = 1;
    const std::vector<Sample> samples = generate(scene, 6, 42);
    const std::vector<Sample> train_set(samples.begin(), samples.begin() + 4);
    const std::vector<Sample> val_set(samples.begin() + 4, samples.end());

    NetworkSpec spec;
    spec.depth = 2;
    spec.base_channels = 4;
    spec.with_cff = true;
    spec.seed = 7;
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 7;

    const std::string dir_a = work + "/golden_a";
    const std::string dir_b = work + "/golden_b";
    (void)train_run(spec, train_set, val_set, cfg, dir_a);
    (void)train_run(spec, train_set, val_set, cfg, dir_b);

    std::string why;
    const bool ok = trees_identical(dir_a, dir_b, why);
    report(10, "back-to-back tiny runs are byte-identical", ok,
           ok ? "record.csv and all checkpoint files match" : why);
}

}  // namespace

// A crash in one criterion must not silence the rest of the report.
template <typename Fn>
void guarded(int index, const char* name, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(index, name, false, std::string("unexpected exception: ") + e.what());
    }
}

int main() {
    const std::string work = "acceptance_work";
    fs::remove_all(work);
    fs::create_directories(work);

    guarded(1, "analytic gradients vs central differences", [] { criterion_gradients(); });
    guarded(2, "filter output is a strict amplitude decrease", [] { criterion_amplitude(); });
    guarded(3, "entropy pipeline equals its straight-line recomputation",
            [] { criterion_entropy_oracle(); });
    guarded(4, "affine transform of a normal keeps the predicted moments",
            [] { criterion_affine_normal(); });
    guarded(5, "convolved noise stays additive (linearity)", [] { criterion_linearity(); });
    guarded(6, "filter parameter overhead matches the closed form",
            [] { criterion_param_deltas(); });
    guarded(7, "overlap and boundary metrics match brute force",
            [] { criterion_metric_oracles(); });
    TrendOutcome trend;
    guarded(8, "filtered nets reach equal-or-better segmentation",
            [&] { trend = criterion_segmentation_trend(work); });
    guarded(9, "filters reduce feature entropy at the best checkpoint",
            [&] { criterion_entropy_trend(trend); });
    guarded(10, "back-to-back tiny runs are byte-identical",
            [&] { criterion_reproducibility(work); });

    std::printf("acceptance: %d/%d passed\n", g_passed, g_passed + g_failed);
    return g_failed == 0 ? 0 : 1;
}
