#include "concurrence/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace concurrence {

void TrainConfig::validate() const {
    if (iterations < 1) throw DataError("train config: iterations must be >= 1");
    if (segments_per_pair < 1) throw DataError("train config: segments_per_pair must be >= 1");
    if (positive_probability <= 0.0 || positive_probability >= 1.0)
        throw DataError("train config: positive_probability must be in (0, 1)");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0)
        throw DataError("train config: validation_fraction must be in [0, 1)");
    if (patience < 1) throw DataError("train config: patience must be >= 1");
    if (min_misalignment_gap < 0) throw DataError("train config: min_misalignment_gap must be >= 0");
}

namespace {

// Uniform draw from [0, hi] \ (t-gap .. t+gap), i.e. valid misaligned starts.
int draw_misaligned(int t, int hi, int gap, Rng& rng) {
    const int lo_block = std::max(0, t - gap);
    const int hi_block = std::min(hi, t + gap);
    const int blocked = hi_block - lo_block + 1;
    const int allowed = hi + 1 - blocked;
    if (allowed < 1)
        throw DataError("sample_batch: no admissible misaligned start (T too small for w and "
                        "min_misalignment_gap)");
    int idx = static_cast<int>(rng.uniform_int(0, allowed - 1));
    if (idx >= lo_block) idx += blocked;
    return idx;
}

}  // namespace

std::vector<LabeledSegmentPair> sample_batch(const SignalDataset& dataset,
                                             std::span<const int> pair_indices, int w,
                                             const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    std::vector<LabeledSegmentPair> batch;
    batch.reserve(pair_indices.size() * static_cast<std::size_t>(cfg.segments_per_pair));
    for (const int pi : pair_indices) {
        const auto& pair = dataset.pairs[static_cast<std::size_t>(pi)];
        const int hi = pair.x.length - w;  // last admissible start
        if (hi < 1)
            throw DataError("pair " + pair.pair_id + ": T=" + std::to_string(pair.x.length) +
                            " is too short for w=" + std::to_string(w) +
                            " (need T >= w+1 so a misaligned start exists)");
        for (int s = 0; s < cfg.segments_per_pair; ++s) {
            const bool positive = rng.bernoulli(cfg.positive_probability);
            const int t = static_cast<int>(rng.uniform_int(0, hi));
            const int t2 = positive ? t : draw_misaligned(t, hi, cfg.min_misalignment_gap, rng);
            LabeledSegmentPair item;
            item.x = extract_segment(pair.x, t, w);
            item.y = extract_segment(pair.y, t2, w);
            item.concurrent = positive;
            batch.push_back(std::move(item));
        }
    }
    return batch;
}

LossGrad logistic_loss(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.empty()) throw DataError("logistic_loss: empty batch");
    if (scores.size() != labels.size())
        throw DataError("logistic_loss: scores/labels size mismatch");
    const double inv_n = 1.0 / static_cast<double>(scores.size());
    LossGrad out;
    out.dscores.resize(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double z = labels[i] ? 1.0 : -1.0;
        const double a = -z * scores[i];
        // softplus(a) = log(1 + e^a), stable for both signs
        out.loss += (std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a)))) * inv_n;
        // d/ds log(1+e^{-zs}) = -z * sigmoid(-z s)
        out.dscores[i] = -z / (1.0 + std::exp(-a)) * inv_n;
    }
    if (!std::isfinite(out.loss)) throw NumericError("logistic_loss: non-finite loss");
    return out;
}

namespace {

struct PackedBatch {
    Tensor3 xs, ys;
    std::vector<std::uint8_t> labels;
};

PackedBatch pack_batch(const std::vector<LabeledSegmentPair>& batch) {
    PackedBatch out;
    std::vector<Segment> xs, ys;
    xs.reserve(batch.size());
    ys.reserve(batch.size());
    out.labels.reserve(batch.size());
    for (const auto& item : batch) {
        xs.push_back(item.x);
        ys.push_back(item.y);
        out.labels.push_back(item.concurrent ? 1 : 0);
    }
    out.xs = pack_segments(xs);
    out.ys = pack_segments(ys);
    return out;
}

std::vector<double> snapshot_params(ConcurrenceModel& model) {
    std::vector<double> flat;
    for (const auto& ref : trainable_params(model))
        flat.insert(flat.end(), ref.value->begin(), ref.value->end());
    // running stats belong to the snapshot too
    for (auto* enc : {&model.f, &model.g})
        for (auto& block : enc->blocks) {
            flat.insert(flat.end(), block.bn.running_mean.begin(), block.bn.running_mean.end());
            flat.insert(flat.end(), block.bn.running_var.begin(), block.bn.running_var.end());
        }
    return flat;
}

void restore_params(ConcurrenceModel& model, const std::vector<double>& flat) {
    std::size_t pos = 0;
    for (const auto& ref : trainable_params(model)) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), ref.value->size(),
                    ref.value->begin());
        pos += ref.value->size();
    }
    for (auto* enc : {&model.f, &model.g})
        for (auto& block : enc->blocks) {
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                        block.bn.running_mean.size(), block.bn.running_mean.begin());
            pos += block.bn.running_mean.size();
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                        block.bn.running_var.size(), block.bn.running_var.begin());
            pos += block.bn.running_var.size();
        }
}

}  // namespace

TrainResult train_on_indices(const SignalDataset& dataset, std::span<const int> indices,
                             int w, const EncoderConfig& encoder_cfg,
                             const TrainConfig& train_cfg, bool pre_standardized) {
    train_cfg.validate();
    if (indices.empty()) throw DataError("train: no training pairs");

    const SignalDataset* data = &dataset;
    SignalDataset standardized;
    if (train_cfg.standardize && !pre_standardized) {
        standardized = per_channel_standardize(dataset);
        data = &standardized;
    }

    Rng rng(train_cfg.seed);

    // optional pair-level validation holdout
    std::vector<int> train_idx(indices.begin(), indices.end());
    std::vector<int> val_idx;
    if (train_cfg.early_stopping) {
        std::vector<int> shuffled = train_idx;
        rng.shuffle(shuffled);
        const int n_val = static_cast<int>(
            std::floor(train_cfg.validation_fraction * static_cast<double>(shuffled.size())));
        if (n_val < 1 || n_val >= static_cast<int>(shuffled.size()))
            throw DataError("train: validation_fraction leaves no usable validation split");
        val_idx.assign(shuffled.begin(), shuffled.begin() + n_val);
        train_idx.assign(shuffled.begin() + n_val, shuffled.end());
        std::sort(val_idx.begin(), val_idx.end());
        std::sort(train_idx.begin(), train_idx.end());
    }

    ConcurrenceModel model = build_model(encoder_cfg, data->kx(), data->ky(), w,
                                         Rng::derive(train_cfg.seed, 0));
    model.standardized_inputs = train_cfg.standardize;
    for (const int i : train_idx)
        model.training_pair_ids.push_back(data->pairs[static_cast<std::size_t>(i)].pair_id);

    AdamConfig adam_cfg;
    adam_cfg.learning_rate = train_cfg.learning_rate;
    AdamOptimizer opt(trainable_params(model), adam_cfg);

    // a fixed validation batch keeps the early-stopping signal comparable
    // across iterations
    PackedBatch val_batch;
    if (train_cfg.early_stopping) {
        Rng val_rng(Rng::derive(train_cfg.seed, 1));
        val_batch = pack_batch(sample_batch(*data, val_idx, w, train_cfg, val_rng));
    }

    TrainingHistory history;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_params;
    int since_best = 0;

    for (int it = 0; it < train_cfg.iterations; ++it) {
        auto batch = pack_batch(sample_batch(*data, train_idx, w, train_cfg, rng));
        opt.zero_grad();
        PipelineCache cache;
        const auto scores = score_batch(model, batch.xs, batch.ys, /*training=*/true, &rng, &cache);
        const auto lg = logistic_loss(scores, batch.labels);
        score_backward(model, lg.dscores, cache);
        opt.step();
        history.train_loss.push_back(lg.loss);
        history.iterations_run = it + 1;

        if (train_cfg.early_stopping) {
            const auto val_scores =
                score_batch(model, val_batch.xs, val_batch.ys, /*training=*/false, nullptr);
            const double val_loss = logistic_loss(val_scores, val_batch.labels).loss;
            history.val_loss.push_back(val_loss);
            if (val_loss < best_val) {
                best_val = val_loss;
                best_params = snapshot_params(model);
                history.best_iteration = it;
                since_best = 0;
            } else if (++since_best >= train_cfg.patience) {
                break;
            }
        }
    }
    if (train_cfg.early_stopping && !best_params.empty()) restore_params(model, best_params);

    return TrainResult{std::move(model), std::move(history)};
}

TrainResult train(const SignalDataset& dataset, int w, const EncoderConfig& encoder_cfg,
                  const TrainConfig& train_cfg) {
    if (dataset.pairs.empty()) throw DataError("train: empty dataset");
    std::vector<int> all(dataset.pairs.size());
    std::iota(all.begin(), all.end(), 0);
    return train_on_indices(dataset, all, w, encoder_cfg, train_cfg);
}

}  // namespace concurrence
