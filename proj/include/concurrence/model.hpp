#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "concurrence/layers.hpp"
#include "concurrence/signal.hpp"

namespace concurrence {

/// Architecture knobs for one encoder. Defaults are the reference
/// configuration: 3 blocks, 512 channels halving per block, kernels 5/3,
/// strides 3/2, dropout 0.25.
struct EncoderConfig {
    int num_blocks = 3;
    int base_channels = 512;
    int first_kernel = 5;
    int later_kernel = 3;
    int first_stride = 3;
    int later_stride = 2;
    double dropout_rate = 0.25;

    /// Output channels of block b (1-based): base_channels / 2^(b-1).
    int block_channels(int b) const;
    /// Channels of the final feature map.
    int feature_channels() const { return block_channels(num_blocks); }
    /// Applies the valid-convolution length recurrence; may return <= 0.
    int output_length(int w) const;
    /// Smallest segment width for which every block still has output.
    int min_width() const;

    void validate() const;
};

/// One encoder block: batchnorm -> conv1d -> dropout -> relu.
struct EncoderBlock {
    BatchNorm bn;
    Conv1d conv;
};

struct BlockCache {
    BatchNormCache bn;
    Conv1dCache conv;
    DropoutCache dropout;
    ReluCache relu;
};

struct EncoderCache {
    std::vector<BlockCache> blocks;
};

struct Encoder {
    std::vector<EncoderBlock> blocks;
    double dropout_rate = 0.0;

    Tensor3 forward(const Tensor3& x, bool training, Rng* rng, EncoderCache* cache = nullptr);
    /// Accumulates per-layer parameter gradients, returns the input gradient.
    Tensor3 backward(const Tensor3& grad_out, EncoderCache& cache);
    void zero_grad();
    void collect_params(std::vector<ParamRef>& out);
};

/// Entries of the feature covariance C = F G^T / w'.
struct CovarianceMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * cols + j]; }
};

/// The full per-segment scorer: two encoders plus the bilinear weight matrix
/// alpha over the feature covariance.
struct ConcurrenceModel {
    EncoderConfig cfg;
    int kx = 0, ky = 0;
    int width = 0;             // segment width w
    int feature_channels = 0;  // K_f = K_g
    int feature_length = 0;    // w'
    Encoder f, g;
    std::vector<double> alpha;  // K_f x K_g, zero-initialized
    std::vector<double> grad_alpha;
    /// pair_ids the model was trained on; lets consumers refuse to score
    /// training data unless explicitly allowed.
    std::vector<std::string> training_pair_ids;
    /// whether training inputs were per-channel standardized; scorers must
    /// condition new data the same way
    bool standardized_inputs = true;
};

/// Builds and seeds a model. Throws DataError with the minimal admissible w
/// when `w` is too small for the configuration.
ConcurrenceModel build_model(const EncoderConfig& cfg, int kx, int ky, int w,
                             std::uint64_t seed);

/// Runs one segment through an encoder; returns the (K_f x w') feature map as
/// a batch-1 tensor.
Tensor3 encode(Encoder& encoder, const EncoderConfig& cfg, const Segment& segment,
               bool training, Rng* rng);

/// C = F G^T / w' for two (K x w') feature maps taken from batch item `b`.
CovarianceMatrix covariance(const Tensor3& f_features, const Tensor3& g_features, int b = 0);

/// Per-segment concurrence score s = sum_ij alpha_ij C_ij. Positive s predicts
/// a temporally aligned pair.
double score(ConcurrenceModel& model, const Segment& seg_x, const Segment& seg_y,
             bool training = false, Rng* rng = nullptr);

// --- batched pipeline used by the trainer --------------------------------

struct PipelineCache {
    EncoderCache f, g;
    Tensor3 f_features, g_features;
};

/// Scores a batch of segment pairs (xs and ys must share batch size).
std::vector<double> score_batch(ConcurrenceModel& model, const Tensor3& xs, const Tensor3& ys,
                                bool training, Rng* rng, PipelineCache* cache = nullptr);

/// Backpropagates d(loss)/d(score) through alpha, the covariance and both
/// encoders, accumulating all parameter gradients.
void score_backward(ConcurrenceModel& model, const std::vector<double>& dscores,
                    PipelineCache& cache);

void zero_grad(ConcurrenceModel& model);
std::vector<ParamRef> trainable_params(ConcurrenceModel& model);

/// Packs a batch of segments into a (n x K x w) tensor.
Tensor3 pack_segments(const std::vector<Segment>& segments);

// --- serialization ---------------------------------------------------------

/// Single binary file, little-endian: magic "CNCR", format version, encoder
/// config + input dims, a layer manifest with shapes, then all parameters
/// (including batch-norm running stats) as raw 64-bit floats in manifest
/// order. Inference after a round trip is bit-identical.
void save_model(const ConcurrenceModel& model, const std::filesystem::path& path);
ConcurrenceModel load_model(const std::filesystem::path& path);

}  // namespace concurrence
