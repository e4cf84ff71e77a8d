#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "featfilter/tensor.hpp"

namespace ff {

// Information-entropy instrumentation for feature matrices. A matrix is
// treated as draws from a normal law fitted to its own values; the density
// image is binarized around its mean into a two-outcome distribution whose
// Shannon entropy summarises how much the matrix deviates from "mostly
// typical values". Filtered vs unfiltered entropy deltas are the probe
// signal for whether the feature filter suppresses noisy amplitudes.

struct GaussianParams {
    double mu = 0.0;
    double sigma = 0.0;  // population standard deviation
};

GaussianParams fit_gaussian(std::span<const double> values);

double gaussian_pdf(double alpha, const GaussianParams& g);

struct ProbabilityMatrix {
    std::vector<double> values;            // densities, all > 0
    std::vector<std::size_t> source_dims;  // extents of the matrix they came from
};

// Density of each element under the fitted law. Requires sigma >= 1e-12;
// matrices flatter than that take the degenerate path in binarize_matrix.
ProbabilityMatrix gaussian_density(std::span<const double> values, const GaussianParams& g,
                                   std::vector<std::size_t> source_dims = {});
ProbabilityMatrix gaussian_density(const Tensor& m);

struct BinaryDistribution {
    double a = 0.5;  // share of elements strictly below the density mean
    double b = 0.5;  // share strictly above
    bool degenerate = true;  // a >= b (or flat input) collapsed to {0.5, 0.5}
};

// Splits density values on their mean: a = #(p < mean)/N, b = #(p > mean)/N,
// ties in neither. a >= b collapses to the degenerate {0.5, 0.5}.
BinaryDistribution binarize(std::span<const double> densities);

// Full pipeline with the flat-matrix short circuit (sigma < 1e-12).
BinaryDistribution binarize_matrix(const Tensor& m);

// Shannon entropy in bits; exactly 1.0 for the degenerate distribution.
double binary_entropy(const BinaryDistribution& d);

double matrix_entropy(const Tensor& m);

struct EntropyPair {
    double hf = 0.0;  // entropy before filtering
    double hd = 0.0;  // entropy after filtering
};

EntropyPair layer_entropy_pair(const Tensor& f, const Tensor& d);

// delta[i] = hd[i] - hf[i]; negative deltas mean the filter reduced entropy.
std::vector<double> delta_entropy(std::span<const double> hf, std::span<const double> hd);

struct EntropyReport {
    int layer_index = 0;
    std::string tag;  // checkpoint tag the probe ran on
    double hf = 0.0;
    double hd = 0.0;
    double delta = 0.0;
};

// Per-channel (f, d) values at one spatial position, for signal-level plots.
struct PixelSignal {
    std::vector<double> f;
    std::vector<double> d;
};

PixelSignal extract_pixel_signal(const Tensor& f, const Tensor& d, std::size_t y, std::size_t x);

// Monte-Carlo check of the affine-normal closure: X ~ N(mu, sigma^2) implies
// aX + b ~ N(a mu + b, a^2 sigma^2). Returns the empirical moments of the
// transformed draws; callers compare against the closed form.
struct MomentEstimate {
    double mean = 0.0;
    double var = 0.0;  // unbiased
    std::size_t n = 0;
};

MomentEstimate theorem1_check(double mu, double sigma, double a, double b, std::size_t n_samples,
                              std::uint64_t seed);

// Linearity of convolution: residual max|conv(ax + be) - a conv(x) - b conv(e)|
// for a zero-bias kernel. Convolved noise stays additive, which is why the
// filter has signal to remove.
double noise_persistence_check(const Tensor& x, const Tensor& eps, double alpha, double beta,
                               const ConvKernel& kernel);

}  // namespace ff
