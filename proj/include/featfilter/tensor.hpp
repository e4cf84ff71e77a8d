#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ff {

// Dense row-major double tensor, rank 1..4. Feature maps are rank-3 laid out
// (height, width, channels) with channels contiguous, which keeps the hot
// convolution loops running along unit stride.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims);
    Tensor(std::vector<std::size_t> dims, std::vector<double> values);

    static Tensor zeros(std::vector<std::size_t> dims) { return Tensor(std::move(dims)); }
    static Tensor full(std::vector<std::size_t> dims, double value);

    std::size_t rank() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t dim(std::size_t i) const { return dims_.at(i); }
    std::size_t size() const { return values_.size(); }
    bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    // rank-3 accessors (y, x, c)
    double& at(std::size_t y, std::size_t x, std::size_t c) {
        return values_[(y * dims_[1] + x) * dims_[2] + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return values_[(y * dims_[1] + x) * dims_[2] + c];
    }

    void fill(double value);
    bool all_finite() const;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> values_;
};

// Integer class-id image, (height, width) row-major.
class LabelMap {
public:
    LabelMap() = default;
    LabelMap(std::size_t height, std::size_t width, int fill = 0);

    std::size_t height() const { return h_; }
    std::size_t width() const { return w_; }
    std::size_t size() const { return values_.size(); }

    int& at(std::size_t y, std::size_t x) { return values_[y * w_ + x]; }
    int at(std::size_t y, std::size_t x) const { return values_[y * w_ + x]; }

    std::vector<int>& values() { return values_; }
    const std::vector<int>& values() const { return values_; }

    bool operator==(const LabelMap& other) const = default;

private:
    std::size_t h_ = 0, w_ = 0;
    std::vector<int> values_;
};

// 2-d convolution weights in (kh, kw, in_ch, out_ch) layout plus per-output
// biases. Kernel extents must be odd so "same" padding is symmetric.
struct ConvKernel {
    Tensor weights;  // (kh, kw, in_ch, out_ch)
    Tensor biases;   // (out_ch)

    ConvKernel() = default;
    ConvKernel(std::size_t kh, std::size_t kw, std::size_t in_ch, std::size_t out_ch);

    std::size_t kh() const { return weights.dim(0); }
    std::size_t kw() const { return weights.dim(1); }
    std::size_t in_ch() const { return weights.dim(2); }
    std::size_t out_ch() const { return weights.dim(3); }
};

enum class Padding { same, valid };

Tensor conv2d(const Tensor& input, const ConvKernel& kernel, Padding padding);

struct ConvGrads {
    Tensor grad_input;
    Tensor grad_weights;
    Tensor grad_biases;
};

ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input,
                          const ConvKernel& kernel, Padding padding);

struct MaxPoolResult {
    Tensor out;
    std::vector<std::size_t> argmax;  // flat input index per output element
};

// 2x2 stride-2 max pooling; requires even spatial extents.
MaxPoolResult maxpool2(const Tensor& input);
Tensor maxpool2_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                         const std::vector<std::size_t>& input_dims);

// 2x nearest-neighbour upsampling and its adjoint (window sum).
Tensor upsample2(const Tensor& input);
Tensor upsample2_backward(const Tensor& grad_out);

// Elementwise operations.
Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& grad_y, const Tensor& x);
Tensor sigmoid(const Tensor& x);                                  // strictly in (0,1)
Tensor sigmoid_backward(const Tensor& grad_y, const Tensor& s);   // s = sigmoid(x)
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// Channel concatenation along the last axis of rank-3 tensors.
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor slice_channels(const Tensor& x, std::size_t c0, std::size_t c1);  // [c0, c1)

// FSM1 container: "FSM1" magic, u32 rank, u32 extents, f64 values, all
// little-endian, values row-major.
void save_fsm1(const std::string& path, const Tensor& t);
Tensor load_fsm1(const std::string& path);

}  // namespace ff
