#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "concurrence/signal.hpp"

namespace concurrence {

/// Sample Pearson correlation over time. Multichannel signals are reduced to
/// their channel means. Zero-variance input yields 0 with a warning.
double pearson(const SignalPair& pair);

/// Mean over non-overlapping windows of the max over lags in [-max_lag,
/// max_lag] of the absolute windowed correlation.
double windowed_cross_correlation(const SignalPair& pair, int window, int max_lag);

/// Sample distance correlation (biased V-statistic), time points treated as
/// i.i.d. draws of (x_t, y_t) vectors.
double distance_correlation(const SignalPair& pair);

/// Biased HSIC V-statistic with Gaussian kernels, trace(K H L H)/n^2.
/// Bandwidths default to the median pairwise distance (fallback 1 when the
/// median is zero).
double hsic(const SignalPair& pair, std::optional<double> bandwidth = std::nullopt);

/// Plug-in histogram mutual information (nats) over (x_t, y_t) with
/// equal-frequency bins on the channel means.
double mutual_information(const SignalPair& pair, int bins = 8);

/// Histogram estimate of I(x_t ; y_t | z) where z is the binned lagged y
/// sample (lag_depth = how far back the conditioning sample sits).
double conditional_mutual_information(const SignalPair& pair, int bins = 8, int lag_depth = 1);

struct BaselineResult {
    std::string method;
    std::vector<double> per_pair_statistic;
    double dataset_statistic = 0.0;  // mean of per-pair statistics
    double p_value = 1.0;
    std::vector<double> null_stats;
    nlohmann::json params;
};

/// A per-pair statistic; external methods can be plugged in alongside the
/// built-ins.
using PairStatistic = std::function<double(const SignalPair&)>;

struct BaselineMethod {
    std::string name;
    PairStatistic statistic;
    nlohmann::json params;
};

/// Built-in method by name: pearson, wcc, dc, hsic, mi, cmi. WCC and the
/// histogram estimators use their documented defaults unless overridden via
/// `params` ({"window":..,"max_lag":..,"bins":..,"lag_depth":..}).
BaselineMethod make_baseline_method(const std::string& name,
                                    const nlohmann::json& params = {});

/// Dataset-level permutation test: the statistic is the mean per-pair value;
/// null replicates circularly shift each pair's y by an independent offset of
/// at least T/4 and recompute. Add-one p-value. Deterministic in the seed,
/// independent of worker count.
BaselineResult dataset_test(const SignalDataset& dataset, const BaselineMethod& method,
                            int n_permutations, std::uint64_t seed, int workers = 1);

}  // namespace concurrence
