#include "featfilter/entropy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "featfilter/rng.hpp"

namespace ff {

namespace {
constexpr double kSigmaFloor = 1e-12;
}

GaussianParams fit_gaussian(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("fit_gaussian: empty input");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= n;  // population variance
    return GaussianParams{mean, std::sqrt(var)};
}

double gaussian_pdf(double alpha, const GaussianParams& g) {
    const double z = (alpha - g.mu) / g.sigma;
    return std::exp(-0.5 * z * z) / (g.sigma * std::sqrt(2.0 * std::numbers::pi));
}

ProbabilityMatrix gaussian_density(std::span<const double> values, const GaussianParams& g,
                                   std::vector<std::size_t> source_dims) {
    if (g.sigma < kSigmaFloor)
        throw std::domain_error("gaussian_density: sigma below 1e-12; matrix is flat");
    ProbabilityMatrix p;
    p.source_dims = std::move(source_dims);
    p.values.reserve(values.size());
    for (double v : values) p.values.push_back(gaussian_pdf(v, g));
    return p;
}

ProbabilityMatrix gaussian_density(const Tensor& m) {
    return gaussian_density(m.values(), fit_gaussian(m.values()), m.dims());
}

BinaryDistribution binarize(std::span<const double> densities) {
    if (densities.empty()) throw std::invalid_argument("binarize: empty input");
    double mean = 0.0;
    for (double v : densities) mean += v;
    mean /= static_cast<double>(densities.size());
    std::size_t below = 0, above = 0;
    for (double v : densities) {
        if (v < mean) ++below;
        else if (v > mean) ++above;  // ties land in neither share
    }
    const double n = static_cast<double>(densities.size());
    const double a = static_cast<double>(below) / n;
    const double b = static_cast<double>(above) / n;
    // below == 0 with above > 0 cannot happen in exact arithmetic (a mean is
    // strictly above the minimum unless everything is equal); it appears only
    // when rounding collapses a near-flat multiset whose true mean sits above
    // the dominant mass, i.e. the a >= b case again.
    if (below == 0 || a >= b) return BinaryDistribution{0.5, 0.5, true};
    return BinaryDistribution{a, b, false};
}

BinaryDistribution binarize_matrix(const Tensor& m) {
    const GaussianParams g = fit_gaussian(m.values());
    if (g.sigma < kSigmaFloor) return BinaryDistribution{0.5, 0.5, true};
    return binarize(gaussian_density(m.values(), g).values);
}

double binary_entropy(const BinaryDistribution& d) {
    if (d.degenerate) return 1.0;
    if (d.a <= 0.0 || d.b <= 0.0 || std::abs(d.a + d.b) > 1.0 + 1e-9)
        throw std::invalid_argument("binary_entropy: shares must be positive");
    return -(d.a * std::log2(d.a) + d.b * std::log2(d.b));
}

double matrix_entropy(const Tensor& m) { return binary_entropy(binarize_matrix(m)); }

EntropyPair layer_entropy_pair(const Tensor& f, const Tensor& d) {
    if (!f.same_dims(d))
        throw std::invalid_argument("layer_entropy_pair: f and d must have equal extents");
    return EntropyPair{matrix_entropy(f), matrix_entropy(d)};
}

std::vector<double> delta_entropy(std::span<const double> hf, std::span<const double> hd) {
    if (hf.size() != hd.size()) throw std::invalid_argument("delta_entropy: length mismatch");
    std::vector<double> delta(hf.size());
    for (std::size_t i = 0; i < hf.size(); ++i) delta[i] = hd[i] - hf[i];
    return delta;
}

PixelSignal extract_pixel_signal(const Tensor& f, const Tensor& d, std::size_t y, std::size_t x) {
    if (!f.same_dims(d)) throw std::invalid_argument("extract_pixel_signal: extent mismatch");
    if (f.rank() != 3 || y >= f.dim(0) || x >= f.dim(1))
        throw std::invalid_argument("extract_pixel_signal: position outside the feature map");
    PixelSignal s;
    const std::size_t c = f.dim(2);
    s.f.resize(c);
    s.d.resize(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        s.f[ch] = f.at(y, x, ch);
        s.d[ch] = d.at(y, x, ch);
    }
    return s;
}

MomentEstimate theorem1_check(double mu, double sigma, double a, double b, std::size_t n_samples,
                              std::uint64_t seed) {
    if (n_samples < 2) throw std::invalid_argument("theorem1_check: need at least 2 samples");
    if (sigma < 0.0) throw std::invalid_argument("theorem1_check: sigma must be nonnegative");
    Rng rng(seed, "theorem1");
    std::vector<double> ys(n_samples);
    for (double& y : ys) y = a * rng.normal(mu, sigma) + b;
    double mean = 0.0;
    for (double y : ys) mean += y;
    mean /= static_cast<double>(n_samples);
    double var = 0.0;
    for (double y : ys) var += (y - mean) * (y - mean);
    var /= static_cast<double>(n_samples - 1);
    return MomentEstimate{mean, var, n_samples};
}

double noise_persistence_check(const Tensor& x, const Tensor& eps, double alpha, double beta,
                               const ConvKernel& kernel) {
    if (!x.same_dims(eps))
        throw std::invalid_argument("noise_persistence_check: x and eps extents differ");
    for (double b : kernel.biases.values())
        if (b != 0.0)
            throw std::invalid_argument("noise_persistence_check: kernel bias must be zero");
    Tensor mixed(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) mixed[i] = alpha * x[i] + beta * eps[i];
    const Tensor lhs = conv2d(mixed, kernel, Padding::same);
    const Tensor cx = conv2d(x, kernel, Padding::same);
    const Tensor ce = conv2d(eps, kernel, Padding::same);
    double worst = 0.0;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        const double r = std::abs(lhs[i] - alpha * cx[i] - beta * ce[i]);
        worst = std::max(worst, r);
    }
    return worst;
}

}  // namespace ff
