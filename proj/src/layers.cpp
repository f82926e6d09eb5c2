#include "concurrence/layers.hpp"

#include <cmath>
#include <cstring>

namespace concurrence {

namespace {

// Scratch buffers reused across convolution calls; one set per thread keeps
// jobs independent.
struct ConvScratch {
    std::vector<double> colT;   // (B*Lout) x (Cin*k), "im2row"
    std::vector<double> prodT;  // (B*Lout) x Cout
    std::vector<double> wt;     // (Cin*k) x Cout
    std::vector<double> gt;     // (B*Lout) x Cout
    std::vector<double> dcolT;  // (B*Lout) x (Cin*k)
};

ConvScratch& conv_scratch() {
    thread_local ConvScratch scratch;
    return scratch;
}

void resize_no_shrink(std::vector<double>& v, std::size_t n) {
    if (v.size() < n) v.resize(n);
}

// Lowers x (B x Cin x L) into rows of sliding windows: colT[(b*Lout+p)][ci*k+kk]
// = x(b, ci, p*stride + kk). Row-major rows of length Cin*k.
void im2row(const Tensor3& x, int ksize, int stride, int l_out, std::vector<double>& colT) {
    const int krows = x.channels * ksize;
    resize_no_shrink(colT, static_cast<std::size_t>(x.batch) * l_out * krows);
    for (int b = 0; b < x.batch; ++b) {
        double* brow = colT.data() + static_cast<std::size_t>(b) * l_out * krows;
        for (int ci = 0; ci < x.channels; ++ci) {
            const double* src = x.row(b, ci);
            double* dst = brow + static_cast<std::size_t>(ci) * ksize;
            for (int p = 0; p < l_out; ++p) {
                const double* win = src + static_cast<std::size_t>(p) * stride;
                double* d = dst + static_cast<std::size_t>(p) * krows;
                for (int kk = 0; kk < ksize; ++kk) d[kk] = win[kk];
            }
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv1d
// ---------------------------------------------------------------------------

int Conv1d::out_length(int length, int kernel_size, int stride) {
    if (length < kernel_size) return 0;
    return (length - kernel_size) / stride + 1;
}

Conv1d::Conv1d(int in_ch, int out_ch, int k, int s)
    : in_channels(in_ch), out_channels(out_ch), kernel_size(k), stride(s) {
    if (in_ch < 1 || out_ch < 1 || k < 1 || s < 1)
        throw DataError("conv1d: channels, kernel size and stride must all be >= 1");
    const std::size_t n = static_cast<std::size_t>(out_ch) * in_ch * k;
    weight.assign(n, 0.0);
    bias.assign(static_cast<std::size_t>(out_ch), 0.0);
    grad_weight.assign(n, 0.0);
    grad_bias.assign(static_cast<std::size_t>(out_ch), 0.0);
}

void Conv1d::init(Rng& rng) {
    const double bound = std::sqrt(1.0 / (static_cast<double>(in_channels) * kernel_size));
    for (auto& w : weight) w = rng.uniform(-bound, bound);
    std::fill(bias.begin(), bias.end(), 0.0);
}

void Conv1d::zero_grad() {
    std::fill(grad_weight.begin(), grad_weight.end(), 0.0);
    std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

Tensor3 Conv1d::forward(Tensor3 x, Conv1dCache* cache) const {
    if (x.channels != in_channels)
        throw DataError("conv1d: input has " + std::to_string(x.channels) +
                        " channels, kernel expects " + std::to_string(in_channels));
    const int l_out = out_length(x.length, kernel_size, stride);
    if (l_out < 1)
        throw DataError("conv1d: segment too short: input length " + std::to_string(x.length) +
                        " is below the minimum length " + std::to_string(kernel_size) +
                        " required by kernel size " + std::to_string(kernel_size));

    auto& scratch = conv_scratch();
    const int krows = in_channels * kernel_size;
    const std::size_t rows = static_cast<std::size_t>(x.batch) * l_out;
    im2row(x, kernel_size, stride, l_out, scratch.colT);

    resize_no_shrink(scratch.wt, static_cast<std::size_t>(krows) * out_channels);
    for (int co = 0; co < out_channels; ++co)
        for (int r = 0; r < krows; ++r)
            scratch.wt[static_cast<std::size_t>(r) * out_channels + co] =
                weight[static_cast<std::size_t>(co) * krows + r];

    resize_no_shrink(scratch.prodT, rows * static_cast<std::size_t>(out_channels));
    matmul(scratch.colT.data(), scratch.wt.data(), scratch.prodT.data(),
           static_cast<int>(rows), krows, out_channels);

    Tensor3 out(x.batch, out_channels, l_out);
    for (int b = 0; b < x.batch; ++b) {
        const double* src = scratch.prodT.data() +
                            static_cast<std::size_t>(b) * l_out * out_channels;
        for (int co = 0; co < out_channels; ++co) {
            const double bc = bias[static_cast<std::size_t>(co)];
            double* dst = out.row(b, co);
            for (int p = 0; p < l_out; ++p)
                dst[p] = src[static_cast<std::size_t>(p) * out_channels + co] + bc;
        }
    }
    if (cache) cache->input = std::move(x);
    return out;
}

Tensor3 Conv1d::backward(const Tensor3& grad_out, const Conv1dCache& cache) {
    const Tensor3& x = cache.input;
    if (x.batch != grad_out.batch)
        throw DataError("conv1d backward: no cached forward state for this batch");
    const int l_out = grad_out.length;
    const int krows = in_channels * kernel_size;
    const std::size_t rows = static_cast<std::size_t>(x.batch) * l_out;
    auto& scratch = conv_scratch();

    // gather grad_out into row-major (B*Lout) x Cout
    resize_no_shrink(scratch.gt, rows * static_cast<std::size_t>(out_channels));
    for (int b = 0; b < x.batch; ++b) {
        double* dst = scratch.gt.data() + static_cast<std::size_t>(b) * l_out * out_channels;
        for (int co = 0; co < out_channels; ++co) {
            const double* src = grad_out.row(b, co);
            for (int p = 0; p < l_out; ++p)
                dst[static_cast<std::size_t>(p) * out_channels + co] = src[p];
        }
    }

    im2row(x, kernel_size, stride, l_out, scratch.colT);

    // dW += gt^T * colT; db += column sums of gt
    matmul_at_b_acc(scratch.gt.data(), scratch.colT.data(), grad_weight.data(),
                    static_cast<int>(rows), out_channels, krows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* grow = scratch.gt.data() + r * static_cast<std::size_t>(out_channels);
        for (int co = 0; co < out_channels; ++co)
            grad_bias[static_cast<std::size_t>(co)] += grow[co];
    }

    // dcolT = gt * W, then fold the sliding windows back (col2im)
    resize_no_shrink(scratch.dcolT, rows * static_cast<std::size_t>(krows));
    matmul(scratch.gt.data(), weight.data(), scratch.dcolT.data(), static_cast<int>(rows),
           out_channels, krows);

    Tensor3 dx(x.batch, x.channels, x.length);
    for (int b = 0; b < x.batch; ++b) {
        const double* brow = scratch.dcolT.data() + static_cast<std::size_t>(b) * l_out * krows;
        for (int ci = 0; ci < x.channels; ++ci) {
            double* dst = dx.row(b, ci);
            const double* src = brow + static_cast<std::size_t>(ci) * kernel_size;
            for (int p = 0; p < l_out; ++p) {
                double* win = dst + static_cast<std::size_t>(p) * stride;
                const double* s = src + static_cast<std::size_t>(p) * krows;
                for (int kk = 0; kk < kernel_size; ++kk) win[kk] += s[kk];
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm
// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(int ch) : channels(ch) {
    if (ch < 1) throw DataError("batchnorm: channels must be >= 1");
    gamma.assign(static_cast<std::size_t>(ch), 1.0);
    beta.assign(static_cast<std::size_t>(ch), 0.0);
    running_mean.assign(static_cast<std::size_t>(ch), 0.0);
    running_var.assign(static_cast<std::size_t>(ch), 1.0);
    grad_gamma.assign(static_cast<std::size_t>(ch), 0.0);
    grad_beta.assign(static_cast<std::size_t>(ch), 0.0);
}

void BatchNorm::zero_grad() {
    std::fill(grad_gamma.begin(), grad_gamma.end(), 0.0);
    std::fill(grad_beta.begin(), grad_beta.end(), 0.0);
}

Tensor3 BatchNorm::forward(Tensor3 x, bool training, BatchNormCache* cache) {
    if (x.channels != channels)
        throw DataError("batchnorm: input has " + std::to_string(x.channels) +
                        " channels, layer expects " + std::to_string(channels));
    const std::size_t m = static_cast<std::size_t>(x.batch) * x.length;
    if (training && m < 2)
        throw DataError("batchnorm: training mode needs at least 2 values per channel, got " +
                        std::to_string(m));

    Tensor3 xhat;
    if (cache) xhat = Tensor3(x.batch, x.channels, x.length);
    std::vector<double> inv_std(static_cast<std::size_t>(channels));

    for (int c = 0; c < channels; ++c) {
        double mean, var;
        if (training) {
            double sum = 0.0;
            for (int b = 0; b < x.batch; ++b) {
                const double* row = x.row(b, c);
                for (int t = 0; t < x.length; ++t) sum += row[t];
            }
            mean = sum / static_cast<double>(m);
            double sq = 0.0;
            for (int b = 0; b < x.batch; ++b) {
                const double* row = x.row(b, c);
                for (int t = 0; t < x.length; ++t) sq += (row[t] - mean) * (row[t] - mean);
            }
            var = sq / static_cast<double>(m);  // population variance
            running_mean[static_cast<std::size_t>(c)] =
                (1.0 - momentum) * running_mean[static_cast<std::size_t>(c)] + momentum * mean;
            running_var[static_cast<std::size_t>(c)] =
                (1.0 - momentum) * running_var[static_cast<std::size_t>(c)] + momentum * var;
        } else {
            mean = running_mean[static_cast<std::size_t>(c)];
            var = running_var[static_cast<std::size_t>(c)];
        }
        const double istd = 1.0 / std::sqrt(var + eps);
        inv_std[static_cast<std::size_t>(c)] = istd;
        const double gc = gamma[static_cast<std::size_t>(c)];
        const double bc = beta[static_cast<std::size_t>(c)];
        for (int b = 0; b < x.batch; ++b) {
            double* row = x.row(b, c);
            double* xh = cache ? xhat.row(b, c) : nullptr;
            for (int t = 0; t < x.length; ++t) {
                const double h = (row[t] - mean) * istd;
                if (xh) xh[t] = h;
                row[t] = gc * h + bc;
            }
        }
    }
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->inv_std = std::move(inv_std);
        cache->training = training;
    }
    return x;
}

Tensor3 BatchNorm::backward(const Tensor3& grad_out, const BatchNormCache& cache) {
    const Tensor3& xhat = cache.xhat;
    if (!xhat.same_shape(grad_out))
        throw DataError("batchnorm backward: no cached forward state for this shape");
    const double m = static_cast<double>(xhat.batch) * xhat.length;
    Tensor3 dx(xhat.batch, xhat.channels, xhat.length);

    for (int c = 0; c < channels; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int b = 0; b < xhat.batch; ++b) {
            const double* dy = grad_out.row(b, c);
            const double* xh = xhat.row(b, c);
            for (int t = 0; t < xhat.length; ++t) {
                sum_dy += dy[t];
                sum_dy_xhat += dy[t] * xh[t];
            }
        }
        grad_beta[static_cast<std::size_t>(c)] += sum_dy;
        grad_gamma[static_cast<std::size_t>(c)] += sum_dy_xhat;

        const double gc = gamma[static_cast<std::size_t>(c)];
        const double istd = cache.inv_std[static_cast<std::size_t>(c)];
        if (cache.training) {
            // gradient through the batch statistics
            const double mean_dy = sum_dy / m;
            const double mean_dy_xhat = sum_dy_xhat / m;
            for (int b = 0; b < xhat.batch; ++b) {
                const double* dy = grad_out.row(b, c);
                const double* xh = xhat.row(b, c);
                double* d = dx.row(b, c);
                for (int t = 0; t < xhat.length; ++t)
                    d[t] = gc * istd * (dy[t] - mean_dy - xh[t] * mean_dy_xhat);
            }
        } else {
            for (int b = 0; b < xhat.batch; ++b) {
                const double* dy = grad_out.row(b, c);
                double* d = dx.row(b, c);
                for (int t = 0; t < xhat.length; ++t) d[t] = gc * istd * dy[t];
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Dropout / ReLU
// ---------------------------------------------------------------------------

Tensor3 dropout_forward(Tensor3 x, double rate, bool training, Rng* rng, DropoutCache* cache) {
    if (rate < 0.0 || rate >= 1.0)
        throw DataError("dropout: rate must be in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) {
        if (cache) cache->active = false;
        return x;
    }
    if (!rng) throw DataError("dropout: training mode requires an rng");
    const double scale = 1.0 / (1.0 - rate);
    std::vector<std::uint8_t> keep(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        keep[i] = rng->bernoulli(rate) ? 0 : 1;
        x.v[i] = keep[i] ? x.v[i] * scale : 0.0;
    }
    if (cache) {
        cache->keep = std::move(keep);
        cache->scale = scale;
        cache->active = true;
    }
    return x;
}

Tensor3 dropout_backward(Tensor3 grad_out, const DropoutCache& cache) {
    if (!cache.active) return grad_out;
    for (std::size_t i = 0; i < grad_out.size(); ++i)
        grad_out.v[i] = cache.keep[i] ? grad_out.v[i] * cache.scale : 0.0;
    return grad_out;
}

Tensor3 relu_forward(Tensor3 x, ReluCache* cache) {
    if (cache) {
        cache->positive.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const bool pos = x.v[i] > 0.0;
            cache->positive[i] = pos ? 1 : 0;
            if (!pos) x.v[i] = 0.0;
        }
    } else {
        for (auto& v : x.v)
            if (v < 0.0) v = 0.0;
    }
    return x;
}

Tensor3 relu_backward(Tensor3 grad_out, const ReluCache& cache) {
    if (cache.positive.size() != grad_out.size())
        throw DataError("relu backward: no cached forward state for this shape");
    for (std::size_t i = 0; i < grad_out.size(); ++i)
        if (!cache.positive[i]) grad_out.v[i] = 0.0;
    return grad_out;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void adam_update_array(double* params, const double* grads, std::size_t n,
                       std::vector<double>& m, std::vector<double>& v,
                       long step, const AdamConfig& cfg) {
    if (m.size() != n || v.size() != n)
        throw DataError("adam: moment buffers do not match parameter size");
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

AdamOptimizer::AdamOptimizer(std::vector<ParamRef> refs, AdamConfig cfg)
    : refs_(std::move(refs)), cfg_(cfg) {
    m_.reserve(refs_.size());
    v_.reserve(refs_.size());
    for (const auto& ref : refs_) {
        if (!ref.value || !ref.grad || ref.value->size() != ref.grad->size())
            throw DataError("adam: parameter/gradient shape mismatch");
        m_.emplace_back(ref.value->size(), 0.0);
        v_.emplace_back(ref.value->size(), 0.0);
    }
}

void AdamOptimizer::zero_grad() {
    for (auto& ref : refs_) std::fill(ref.grad->begin(), ref.grad->end(), 0.0);
}

void AdamOptimizer::step() {
    ++step_;
    for (std::size_t i = 0; i < refs_.size(); ++i) {
        auto& ref = refs_[i];
        if (ref.value->size() != ref.grad->size())
            throw DataError("adam: parameter/gradient shape mismatch");
        adam_update_array(ref.value->data(), ref.grad->data(), ref.value->size(),
                          m_[i], v_[i], step_, cfg_);
    }
}

}  // namespace concurrence
