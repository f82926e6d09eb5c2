#pragma once

#include <cstdint>
#include <vector>

#include "concurrence/rng.hpp"
#include "concurrence/tensor.hpp"

namespace concurrence {

// ---------------------------------------------------------------------------
// 1-D convolution (valid, no padding)
// ---------------------------------------------------------------------------

struct Conv1dCache {
    Tensor3 input;
};

struct Conv1d {
    int in_channels = 0;
    int out_channels = 0;
    int kernel_size = 1;
    int stride = 1;
    std::vector<double> weight;  // [out][in][k]
    std::vector<double> bias;    // [out]
    std::vector<double> grad_weight;
    std::vector<double> grad_bias;

    /// floor((length - kernel_size) / stride) + 1; <= 0 means the window never fits.
    static int out_length(int length, int kernel_size, int stride);

    Conv1d() = default;
    Conv1d(int in_ch, int out_ch, int k, int s);

    /// Weights uniform in +-sqrt(1/fan_in), biases zero.
    void init(Rng& rng);
    void zero_grad();

    /// Valid cross-correlation. Throws DataError when channels mismatch or the
    /// input is shorter than the kernel.
    Tensor3 forward(Tensor3 x, Conv1dCache* cache = nullptr) const;

    /// Accumulates grad_weight/grad_bias and returns the input gradient.
    Tensor3 backward(const Tensor3& grad_out, const Conv1dCache& cache);
};

// ---------------------------------------------------------------------------
// Batch normalization over batch and time, per channel
// ---------------------------------------------------------------------------

struct BatchNormCache {
    Tensor3 xhat;
    std::vector<double> inv_std;  // per channel as used in the forward pass
    bool training = false;
};

struct BatchNorm {
    int channels = 0;
    double eps = 1e-5;
    double momentum = 0.1;
    std::vector<double> gamma, beta;
    std::vector<double> running_mean, running_var;  // population (biased) variance
    std::vector<double> grad_gamma, grad_beta;

    BatchNorm() = default;
    explicit BatchNorm(int ch);

    void zero_grad();

    /// Training mode normalizes with batch statistics and folds them into the
    /// running estimates; inference mode uses the running estimates.
    Tensor3 forward(Tensor3 x, bool training, BatchNormCache* cache = nullptr);
    Tensor3 backward(const Tensor3& grad_out, const BatchNormCache& cache);
};

// ---------------------------------------------------------------------------
// Dropout (inverted) and ReLU
// ---------------------------------------------------------------------------

struct DropoutCache {
    std::vector<std::uint8_t> keep;
    double scale = 1.0;
    bool active = false;
};

/// Inverted dropout: zero with probability `rate`, scale survivors by
/// 1/(1-rate). Identity in inference mode. rate must be in [0, 1).
Tensor3 dropout_forward(Tensor3 x, double rate, bool training, Rng* rng,
                        DropoutCache* cache = nullptr);
Tensor3 dropout_backward(Tensor3 grad_out, const DropoutCache& cache);

struct ReluCache {
    std::vector<std::uint8_t> positive;
};

Tensor3 relu_forward(Tensor3 x, ReluCache* cache = nullptr);
Tensor3 relu_backward(Tensor3 grad_out, const ReluCache& cache);

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update of a single parameter array. `step` counts
/// from 1 for the first update. m and v must match the parameter size.
void adam_update_array(double* params, const double* grads, std::size_t n,
                       std::vector<double>& m, std::vector<double>& v,
                       long step, const AdamConfig& cfg);

struct ParamRef {
    std::vector<double>* value = nullptr;
    std::vector<double>* grad = nullptr;
};

/// Holds first/second-moment state for a fixed set of parameter arrays.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<ParamRef> refs, AdamConfig cfg);

    void zero_grad();
    /// Applies one Adam step using each ref's accumulated gradient.
    void step();
    long step_count() const { return step_; }

private:
    std::vector<ParamRef> refs_;
    AdamConfig cfg_;
    long step_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace concurrence
