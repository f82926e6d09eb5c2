#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "concurrence/training.hpp"

namespace concurrence {

struct FoldReport {
    int fold = 0;
    double accuracy = 0.0;
    double coefficient = 0.0;
    double unclipped = 0.0;
    long n_segments = 0;
};

struct DependenceReport {
    double accuracy = 0.0;               // pooled over folds
    double coefficient = 0.0;            // 2*max(accuracy, 0.5) - 1
    double unclipped_coefficient = 0.0;  // 2*accuracy - 1
    std::optional<double> p_value;
    std::vector<FoldReport> per_fold;
    double mean_fold_coefficient = 0.0;
    std::vector<double> null_stats;  // unclipped coefficients under mismatched pairing
    long n_segments_evaluated = 0;
    std::uint64_t seed = 0;
    int w = 0;
    int folds = 0;
};

/// Aligned per-segment concurrence scores along one signal pair.
struct PSCSTrace {
    std::string pair_id;
    std::vector<int> origins;
    std::vector<double> scores;
};

struct AccuracyResult {
    double accuracy = 0.0;
    long n_correct = 0;
    long n_total = 0;
};

/// Balanced aligned/misaligned sampling (as in training), classification by
/// the sign of the score; s <= 0 predicts non-concurrent. Deterministic in
/// the seed. The caller is responsible for keeping `indices` disjoint from
/// the model's training pairs.
AccuracyResult evaluate_accuracy(ConcurrenceModel& model, const SignalDataset& dataset,
                                 std::span<const int> indices, int w, int segments_per_pair,
                                 std::uint64_t seed, int min_misalignment_gap = 0);

/// {2*max(a, 0.5) - 1, 2*a - 1}. Throws on a outside [0, 1].
std::pair<double, double> coefficient_from_accuracy(double accuracy);

struct EvalConfig {
    int folds = 4;
    int segments_per_pair = 16;  // evaluation draws per pair
    int n_permutations = 0;      // 0 = no significance test
    bool by_group = false;
    int workers = 1;
    std::uint64_t seed = 0;
    bool keep_models = false;
};

struct CrossValidationResult {
    DependenceReport report;
    std::vector<ConcurrenceModel> fold_models;      // populated when keep_models
    std::vector<std::vector<int>> fold_test_sets;   // pair indices per fold
    std::vector<TrainingHistory> fold_histories;
};

/// Trains one model per fold, evaluates on that fold's held-out pairs, pools
/// the accuracies and applies the coefficient transform. With
/// n_permutations > 0 it adds a mismatched-pairing permutation test: held-out
/// pairs are re-paired by derangements and re-scored (no retraining), and the
/// add-one p-value compares the observed unclipped coefficient against the
/// null draws. Fold training jobs run on `workers` threads; results do not
/// depend on the worker count.
CrossValidationResult cross_validated_coefficient(const SignalDataset& dataset, int w,
                                                  const EncoderConfig& encoder_cfg,
                                                  const TrainConfig& train_cfg,
                                                  const EvalConfig& eval_cfg);

/// Scores aligned segments at origins 0, stride, 2*stride, ... <= T-w
/// (inference mode).
PSCSTrace pscs_trace(ConcurrenceModel& model, const SignalPair& pair, int w, int stride);

}  // namespace concurrence
