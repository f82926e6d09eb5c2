#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "concurrence/model.hpp"
#include "concurrence/signal.hpp"

namespace concurrence {

struct TrainConfig {
    int iterations = 100;
    int segments_per_pair = 4;
    double positive_probability = 0.5;
    double learning_rate = 1e-4;
    double validation_fraction = 0.2;
    bool early_stopping = false;
    int patience = 10;
    int min_misalignment_gap = 0;
    bool standardize = true;  // per-signal, per-channel input scaling
    std::uint64_t seed = 0;

    void validate() const;
};

/// A segment pair with its alignment label. Concurrent means both segments
/// start at the same time index of the same signal pair.
struct LabeledSegmentPair {
    Segment x;
    Segment y;
    bool concurrent = false;
};

/// Draws cfg.segments_per_pair labeled pairs from every listed signal pair.
/// Positives share the origin t; negatives use a t' from the same pair with
/// t' != t and |t' - t| > cfg.min_misalignment_gap.
std::vector<LabeledSegmentPair> sample_batch(const SignalDataset& dataset,
                                             std::span<const int> pair_indices, int w,
                                             const TrainConfig& cfg, Rng& rng);

struct LossGrad {
    double loss = 0.0;
    std::vector<double> dscores;
};

/// Mean binary logistic loss on raw scores: log(1 + exp(-z*s)) with z = +1
/// for concurrent pairs (nonzero label) and -1 otherwise.
LossGrad logistic_loss(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct TrainingHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;  // empty unless early stopping is on
    int best_iteration = -1;       // -1 = ran to completion
    int iterations_run = 0;
};

struct TrainResult {
    ConcurrenceModel model;
    TrainingHistory history;
};

/// Self-supervised training: each iteration resamples one batch across all
/// training pairs and applies a single Adam step. With early stopping, a
/// held-out fraction of pairs is tracked and the best parameters restored.
TrainResult train(const SignalDataset& dataset, int w, const EncoderConfig& encoder_cfg,
                  const TrainConfig& train_cfg);

/// Same, restricted to a subset of pair indices (cross-validation folds).
/// `pre_standardized` skips the input scaling when the caller already did it.
TrainResult train_on_indices(const SignalDataset& dataset, std::span<const int> indices,
                             int w, const EncoderConfig& encoder_cfg,
                             const TrainConfig& train_cfg, bool pre_standardized = false);

}  // namespace concurrence
