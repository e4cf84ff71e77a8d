#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "featfilter/tensor.hpp"

namespace ff {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

using CheckList = std::vector<CheckResult>;

// Central finite differences of a scalar function, h scaled per element.
Tensor fd_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                   double h = 1e-5);

// max over elements of |a-n| / max(1, |a|, |n|): relative for large values,
// absolute near zero.
double max_rel_err(const Tensor& analytic, const Tensor& numeric);

// Backprop of every layer type against finite differences (tolerance 1e-4).
CheckList check_grad(std::uint64_t seed);

// Entropy pipeline against a straight-line recomputation plus pinned cases.
CheckList check_entropy(std::uint64_t seed);

// Affine-normal closure moments within 3 standard errors.
CheckList check_theorem1(std::uint64_t seed);

// Convolution linearity residual below 1e-10.
CheckList check_linearity(std::uint64_t seed);

// Overlap/boundary metrics against brute-force oracles and pinned values.
CheckList check_metrics(std::uint64_t seed);

// suite: grad|entropy|theorem1|linearity|metrics|all
CheckList run_check_suite(const std::string& suite, std::uint64_t seed);

bool all_passed(const CheckList& results);

}  // namespace ff
