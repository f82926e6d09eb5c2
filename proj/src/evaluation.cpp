#include "concurrence/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "concurrence/parallel.hpp"

namespace concurrence {

std::pair<double, double> coefficient_from_accuracy(double accuracy) {
    if (accuracy < 0.0 || accuracy > 1.0)
        throw DataError("coefficient_from_accuracy: accuracy " + std::to_string(accuracy) +
                        " outside [0, 1]");
    return {2.0 * std::max(accuracy, 0.5) - 1.0, 2.0 * accuracy - 1.0};
}

AccuracyResult evaluate_accuracy(ConcurrenceModel& model, const SignalDataset& dataset,
                                 std::span<const int> indices, int w, int segments_per_pair,
                                 std::uint64_t seed, int min_misalignment_gap) {
    if (indices.empty()) throw DataError("evaluate_accuracy: no pairs to evaluate");
    TrainConfig sampling;
    sampling.segments_per_pair = segments_per_pair;
    sampling.min_misalignment_gap = min_misalignment_gap;
    Rng rng(seed);
    const auto batch = sample_batch(dataset, indices, w, sampling, rng);

    std::vector<Segment> xs, ys;
    xs.reserve(batch.size());
    ys.reserve(batch.size());
    for (const auto& item : batch) {
        xs.push_back(item.x);
        ys.push_back(item.y);
    }
    const auto scores =
        score_batch(model, pack_segments(xs), pack_segments(ys), /*training=*/false, nullptr);

    AccuracyResult res;
    res.n_total = static_cast<long>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const bool predicted_concurrent = scores[i] > 0.0;  // ties count as non-concurrent
        if (predicted_concurrent == batch[i].concurrent) ++res.n_correct;
    }
    res.accuracy = static_cast<double>(res.n_correct) / static_cast<double>(res.n_total);
    return res;
}

PSCSTrace pscs_trace(ConcurrenceModel& model, const SignalPair& pair, int w, int stride) {
    if (stride < 1) throw DataError("pscs_trace: stride must be >= 1");
    if (pair.x.length < w)
        throw DataError("pscs_trace: pair " + pair.pair_id + " has T=" +
                        std::to_string(pair.x.length) + " < w=" + std::to_string(w));
    PSCSTrace trace;
    trace.pair_id = pair.pair_id;
    std::vector<Segment> xs, ys;
    for (int t = 0; t + w <= pair.x.length; t += stride) {
        trace.origins.push_back(t);
        xs.push_back(extract_segment(pair.x, t, w));
        ys.push_back(extract_segment(pair.y, t, w));
    }
    trace.scores =
        score_batch(model, pack_segments(xs), pack_segments(ys), /*training=*/false, nullptr);
    return trace;
}

namespace {

// Features of every held-out pair at a shared origin grid, encoded once so
// permutation replicates only re-pair feature maps.
struct FoldFeatureCache {
    int n_pairs = 0;
    int n_origins = 0;
    std::vector<int> origins;
    // [pair][origin] -> (K_f x w') map, flattened
    std::vector<Tensor3> f_features;  // batch dim = origin
    std::vector<Tensor3> g_features;
    // allowed negative partners per origin index under the misalignment gap
    std::vector<std::vector<int>> negatives;
};

FoldFeatureCache build_fold_cache(ConcurrenceModel& model, const SignalDataset& dataset,
                                  std::span<const int> test_indices, int w,
                                  int segments_per_pair, int gap, std::uint64_t seed) {
    int t_min = dataset.pairs[static_cast<std::size_t>(test_indices.front())].x.length;
    for (const int i : test_indices)
        t_min = std::min(t_min, dataset.pairs[static_cast<std::size_t>(i)].x.length);
    const int hi = t_min - w;
    if (hi < 1)
        throw DataError("permutation test: T too small for w across held-out pairs");

    FoldFeatureCache cache;
    cache.n_pairs = static_cast<int>(test_indices.size());
    cache.n_origins = std::max(16, 2 * segments_per_pair);
    cache.n_origins = std::min(cache.n_origins, hi + 1);

    Rng rng(seed);
    // distinct origins, uniform over the admissible range
    std::vector<int> all(static_cast<std::size_t>(hi) + 1);
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    cache.origins.assign(all.begin(), all.begin() + cache.n_origins);
    std::sort(cache.origins.begin(), cache.origins.end());

    for (int a = 0; a < cache.n_origins; ++a) {
        std::vector<int> allowed;
        for (int b = 0; b < cache.n_origins; ++b)
            if (b != a && std::abs(cache.origins[static_cast<std::size_t>(b)] -
                                   cache.origins[static_cast<std::size_t>(a)]) > gap)
                allowed.push_back(b);
        if (allowed.empty())
            throw DataError("permutation test: origin grid admits no misaligned partner "
                            "(gap too large for T)");
        cache.negatives.push_back(std::move(allowed));
    }

    for (const int pi : test_indices) {
        const auto& pair = dataset.pairs[static_cast<std::size_t>(pi)];
        std::vector<Segment> xs, ys;
        for (const int t : cache.origins) {
            xs.push_back(extract_segment(pair.x, t, w));
            ys.push_back(extract_segment(pair.y, t, w));
        }
        cache.f_features.push_back(model.f.forward(pack_segments(xs), false, nullptr));
        cache.g_features.push_back(model.g.forward(pack_segments(ys), false, nullptr));
    }
    return cache;
}

double cached_score(const ConcurrenceModel& model, const Tensor3& f_feat, int a,
                    const Tensor3& g_feat, int b) {
    const int kf = model.feature_channels;
    const int wp = f_feat.length;
    double s = 0.0;
    for (int i = 0; i < kf; ++i) {
        const double* fi = f_feat.row(a, i);
        const double* arow = model.alpha.data() + static_cast<std::size_t>(i) * kf;
        for (int j = 0; j < kf; ++j) {
            if (arow[j] == 0.0) continue;
            const double* gj = g_feat.row(b, j);
            double acc = 0.0;
            for (int t = 0; t < wp; ++t) acc += fi[t] * gj[t];
            s += arow[j] * acc;
        }
    }
    return s / static_cast<double>(wp);
}

void random_derangement(std::vector<int>& pi, Rng& rng) {
    const int n = static_cast<int>(pi.size());
    for (;;) {
        std::iota(pi.begin(), pi.end(), 0);
        rng.shuffle(pi);
        bool fixed_point = false;
        for (int i = 0; i < n; ++i)
            if (pi[static_cast<std::size_t>(i)] == i) {
                fixed_point = true;
                break;
            }
        if (!fixed_point) return;
    }
}

// Accuracy of one replicate across all folds: pairing pi per fold (identity
// for the observed statistic), balanced aligned/misaligned draws on the
// cached grid.
double replicate_accuracy(const ConcurrenceModel* const* models,
                          const std::vector<FoldFeatureCache>& caches, bool mismatch,
                          int draws_per_pair, std::uint64_t seed) {
    long correct = 0, total = 0;
    for (std::size_t f = 0; f < caches.size(); ++f) {
        const auto& cache = caches[f];
        const ConcurrenceModel& model = *models[f];
        Rng rng(Rng::derive(seed, f));
        std::vector<int> pi(static_cast<std::size_t>(cache.n_pairs));
        if (mismatch)
            random_derangement(pi, rng);
        else
            std::iota(pi.begin(), pi.end(), 0);
        for (int i = 0; i < cache.n_pairs; ++i) {
            const auto& f_feat = cache.f_features[static_cast<std::size_t>(i)];
            const auto& g_feat = cache.g_features[static_cast<std::size_t>(pi[static_cast<std::size_t>(i)])];
            for (int e = 0; e < draws_per_pair; ++e) {
                const bool positive = rng.bernoulli(0.5);
                const int a = static_cast<int>(rng.uniform_int(0, cache.n_origins - 1));
                int b = a;
                if (!positive) {
                    const auto& allowed = cache.negatives[static_cast<std::size_t>(a)];
                    b = allowed[static_cast<std::size_t>(
                        rng.uniform_int(0, static_cast<std::int64_t>(allowed.size()) - 1))];
                }
                const double s = cached_score(model, f_feat, a, g_feat, b);
                if ((s > 0.0) == positive) ++correct;
                ++total;
            }
        }
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

CrossValidationResult cross_validated_coefficient(const SignalDataset& dataset, int w,
                                                  const EncoderConfig& encoder_cfg,
                                                  const TrainConfig& train_cfg,
                                                  const EvalConfig& eval_cfg) {
    if (eval_cfg.folds < 2) throw DataError("cross_validated_coefficient: need k >= 2 folds");
    if (eval_cfg.n_permutations != 0 && eval_cfg.n_permutations < 19)
        throw DataError("permutation test: n_permutations must be >= 19");

    const SignalDataset* data = &dataset;
    SignalDataset standardized;
    if (train_cfg.standardize) {
        standardized = per_channel_standardize(dataset);
        data = &standardized;
    }

    const auto folds = split_folds(*data, eval_cfg.folds, eval_cfg.seed, eval_cfg.by_group);

    CrossValidationResult result;
    result.fold_models.resize(folds.size());
    result.fold_histories.resize(folds.size());
    result.report.per_fold.resize(folds.size());
    for (const auto& fold : folds) result.fold_test_sets.push_back(fold.test);

    run_jobs(static_cast<int>(folds.size()), eval_cfg.workers, [&](int fi) {
        const auto& fold = folds[static_cast<std::size_t>(fi)];
        // train/test disjointness is the correctness backbone of Eq. 1
        for (const int i : fold.test)
            if (std::binary_search(fold.train.begin(), fold.train.end(), i))
                throw DataError("cross-validation fold leaks test pair into training");

        TrainConfig fold_cfg = train_cfg;
        fold_cfg.seed = Rng::derive(eval_cfg.seed, 1000 + static_cast<std::uint64_t>(fi));
        auto trained = train_on_indices(*data, fold.train, w, encoder_cfg, fold_cfg,
                                        /*pre_standardized=*/true);
        const auto acc = evaluate_accuracy(
            trained.model, *data, fold.test, w, eval_cfg.segments_per_pair,
            Rng::derive(eval_cfg.seed, 2000 + static_cast<std::uint64_t>(fi)),
            train_cfg.min_misalignment_gap);
        const auto [coeff, unclipped] = coefficient_from_accuracy(acc.accuracy);
        FoldReport fr;
        fr.fold = fi;
        fr.accuracy = acc.accuracy;
        fr.coefficient = coeff;
        fr.unclipped = unclipped;
        fr.n_segments = acc.n_total;
        result.report.per_fold[static_cast<std::size_t>(fi)] = fr;
        result.fold_models[static_cast<std::size_t>(fi)] = std::move(trained.model);
        result.fold_histories[static_cast<std::size_t>(fi)] = std::move(trained.history);
    });

    long correct = 0, total = 0;
    double coeff_sum = 0.0;
    for (const auto& fr : result.report.per_fold) {
        correct += static_cast<long>(std::llround(fr.accuracy * static_cast<double>(fr.n_segments)));
        total += fr.n_segments;
        coeff_sum += fr.coefficient;
    }
    auto& report = result.report;
    report.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    std::tie(report.coefficient, report.unclipped_coefficient) =
        coefficient_from_accuracy(report.accuracy);
    report.mean_fold_coefficient = coeff_sum / static_cast<double>(folds.size());
    report.n_segments_evaluated = total;
    report.seed = eval_cfg.seed;
    report.w = w;
    report.folds = eval_cfg.folds;

    if (eval_cfg.n_permutations > 0) {
        if (data->size() < 2)
            throw DataError("permutation test: need at least 2 pairs");
        for (const auto& fold : folds)
            if (fold.test.size() < 2)
                throw DataError("permutation test: a fold has fewer than 2 held-out pairs; "
                                "mismatched pairing needs >= 2");

        std::vector<FoldFeatureCache> caches;
        std::vector<const ConcurrenceModel*> models;
        for (std::size_t fi = 0; fi < folds.size(); ++fi) {
            caches.push_back(build_fold_cache(
                result.fold_models[fi], *data, folds[fi].test, w, eval_cfg.segments_per_pair,
                train_cfg.min_misalignment_gap, Rng::derive(eval_cfg.seed, 3000 + fi)));
            models.push_back(&result.fold_models[fi]);
        }

        // replicate 0 = observed (identity pairing); 1..R = derangement nulls
        const int n_rep = eval_cfg.n_permutations + 1;
        std::vector<double> stats(static_cast<std::size_t>(n_rep));
        run_jobs(n_rep, eval_cfg.workers, [&](int r) {
            const double acc = replicate_accuracy(
                models.data(), caches, /*mismatch=*/r > 0, eval_cfg.segments_per_pair,
                Rng::derive(eval_cfg.seed, 4000 + static_cast<std::uint64_t>(r)));
            stats[static_cast<std::size_t>(r)] = 2.0 * acc - 1.0;
        });
        const double observed = stats[0];
        int n_ge = 0;
        report.null_stats.assign(stats.begin() + 1, stats.end());
        for (const double s : report.null_stats)
            if (s >= observed) ++n_ge;
        report.p_value = static_cast<double>(1 + n_ge) /
                         static_cast<double>(1 + eval_cfg.n_permutations);
    }

    if (!eval_cfg.keep_models) result.fold_models.clear();
    return result;
}

}  // namespace concurrence
