#include "concurrence/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <span>

#include "concurrence/parallel.hpp"
#include "concurrence/rng.hpp"

namespace concurrence {

namespace {

std::vector<double> channel_mean(const Signal& sig) {
    std::vector<double> out(static_cast<std::size_t>(sig.length), 0.0);
    for (int c = 0; c < sig.channels; ++c) {
        const double* row = sig.channel(c);
        for (int t = 0; t < sig.length; ++t) out[static_cast<std::size_t>(t)] += row[t];
    }
    const double inv = 1.0 / static_cast<double>(sig.channels);
    for (double& v : out) v *= inv;
    return out;
}

double pearson_series(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        std::fprintf(stderr, "warning: pearson on zero-variance signal, returning 0\n");
        return 0.0;
    }
    return sxy / std::sqrt(sxx * syy);
}

// Euclidean distance between time points of a (possibly multichannel) signal.
std::vector<double> distance_matrix(const Signal& sig) {
    const int n = sig.length;
    std::vector<double> d(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (int c = 0; c < sig.channels; ++c) {
                const double diff = sig.at(c, i) - sig.at(c, j);
                acc += diff * diff;
            }
            const double dist = std::sqrt(acc);
            d[static_cast<std::size_t>(i) * n + j] = dist;
            d[static_cast<std::size_t>(j) * n + i] = dist;
        }
    }
    return d;
}

void double_center(std::vector<double>& d, int n) {
    std::vector<double> row_mean(static_cast<std::size_t>(n), 0.0);
    double grand = 0.0;
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += d[static_cast<std::size_t>(i) * n + j];
        row_mean[static_cast<std::size_t>(i)] = acc / static_cast<double>(n);
        grand += acc;
    }
    grand /= static_cast<double>(n) * n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            d[static_cast<std::size_t>(i) * n + j] +=
                grand - row_mean[static_cast<std::size_t>(i)] - row_mean[static_cast<std::size_t>(j)];
}

double median_positive(std::vector<double> values) {
    values.erase(std::remove_if(values.begin(), values.end(),
                                [](double v) { return v <= 0.0; }),
                 values.end());
    if (values.empty()) return 0.0;
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    return values[mid];
}

// Equal-frequency bin assignment by rank; ties broken by time index so the
// result is deterministic.
std::vector<int> equal_frequency_bins(std::span<const double> x, int bins) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&x](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<int> bin(n);
    for (std::size_t rank = 0; rank < n; ++rank)
        bin[order[rank]] = static_cast<int>((rank * static_cast<std::size_t>(bins)) / n);
    return bin;
}

double histogram_mi(const std::vector<int>& bx, const std::vector<int>& by, int bins) {
    const std::size_t n = bx.size();
    std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
    std::vector<double> px(static_cast<std::size_t>(bins), 0.0), py(static_cast<std::size_t>(bins), 0.0);
    const double w = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        joint[static_cast<std::size_t>(bx[i]) * bins + by[i]] += w;
        px[static_cast<std::size_t>(bx[i])] += w;
        py[static_cast<std::size_t>(by[i])] += w;
    }
    double mi = 0.0;
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            const double p = joint[static_cast<std::size_t>(i) * bins + j];
            if (p > 0.0)
                mi += p * std::log(p / (px[static_cast<std::size_t>(i)] *
                                        py[static_cast<std::size_t>(j)]));
        }
    return std::max(mi, 0.0);
}

}  // namespace

double pearson(const SignalPair& pair) {
    if (pair.x.length < 2) throw DataError("pearson: need T >= 2");
    return pearson_series(channel_mean(pair.x), channel_mean(pair.y));
}

double windowed_cross_correlation(const SignalPair& pair, int window, int max_lag) {
    const int T = pair.x.length;
    if (window < 2 || window > T)
        throw DataError("wcc: window must be in [2, T]");
    if (max_lag < 0 || max_lag >= window)
        throw DataError("wcc: max_lag must be in [0, window)");
    const auto x = channel_mean(pair.x);
    const auto y = channel_mean(pair.y);

    double sum = 0.0;
    int n_windows = 0;
    for (int start = max_lag; start + window + max_lag <= T; start += window) {
        double best = 0.0;
        for (int lag = -max_lag; lag <= max_lag; ++lag) {
            const double r = std::abs(pearson_series(
                std::span<const double>(x.data() + start, static_cast<std::size_t>(window)),
                std::span<const double>(y.data() + start + lag, static_cast<std::size_t>(window))));
            best = std::max(best, r);
        }
        sum += best;
        ++n_windows;
    }
    if (n_windows == 0) throw DataError("wcc: no window fits T with this max_lag");
    return sum / static_cast<double>(n_windows);
}

double distance_correlation(const SignalPair& pair) {
    const int n = pair.x.length;
    if (n < 4) throw DataError("distance_correlation: need T >= 4");
    auto a = distance_matrix(pair.x);
    auto b = distance_matrix(pair.y);
    double_center(a, n);
    double_center(b, n);
    double dcov2 = 0.0, dvarx = 0.0, dvary = 0.0;
    const double inv_n2 = 1.0 / (static_cast<double>(n) * n);
    for (std::size_t i = 0; i < a.size(); ++i) {
        dcov2 += a[i] * b[i];
        dvarx += a[i] * a[i];
        dvary += b[i] * b[i];
    }
    dcov2 *= inv_n2;
    dvarx *= inv_n2;
    dvary *= inv_n2;
    const double denom = std::sqrt(dvarx * dvary);
    if (denom <= 0.0) return 0.0;
    return std::sqrt(std::max(0.0, dcov2) / denom);
}

double hsic(const SignalPair& pair, std::optional<double> bandwidth) {
    const int n = pair.x.length;
    if (n < 4) throw DataError("hsic: need T >= 4");
    auto dx = distance_matrix(pair.x);
    auto dy = distance_matrix(pair.y);
    double sx = bandwidth.value_or(median_positive(dx));
    double sy = bandwidth.value_or(median_positive(dy));
    if (sx <= 0.0) sx = 1.0;
    if (sy <= 0.0) sy = 1.0;

    std::vector<double> kmat(dx.size()), lmat(dy.size());
    for (std::size_t i = 0; i < dx.size(); ++i) {
        kmat[i] = std::exp(-dx[i] * dx[i] / (2.0 * sx * sx));
        lmat[i] = std::exp(-dy[i] * dy[i] / (2.0 * sy * sy));
    }
    // trace(K H L H)/n^2 via double centering of L
    double_center(lmat, n);
    double acc = 0.0;
    for (std::size_t i = 0; i < kmat.size(); ++i) acc += kmat[i] * lmat[i];
    return acc / (static_cast<double>(n) * n);
}

double mutual_information(const SignalPair& pair, int bins) {
    if (bins < 2) throw DataError("mutual_information: bins must be >= 2");
    const int T = pair.x.length;
    if (T < bins * bins * 5)
        std::fprintf(stderr, "warning: mutual_information with T=%d < 5*bins^2=%d is noisy\n", T,
                     5 * bins * bins);
    const auto bx = equal_frequency_bins(channel_mean(pair.x), bins);
    const auto by = equal_frequency_bins(channel_mean(pair.y), bins);
    return histogram_mi(bx, by, bins);
}

double conditional_mutual_information(const SignalPair& pair, int bins, int lag_depth) {
    if (bins < 2) throw DataError("conditional_mutual_information: bins must be >= 2");
    if (lag_depth < 1) throw DataError("conditional_mutual_information: lag_depth must be >= 1");
    const int T = pair.x.length;
    if (T <= lag_depth)
        throw DataError("conditional_mutual_information: T must exceed lag_depth");
    const auto x = channel_mean(pair.x);
    const auto y = channel_mean(pair.y);
    const std::size_t n = static_cast<std::size_t>(T - lag_depth);

    std::vector<double> xt(n), yt(n), yl(n);
    for (std::size_t t = 0; t < n; ++t) {
        xt[t] = x[t + static_cast<std::size_t>(lag_depth)];
        yt[t] = y[t + static_cast<std::size_t>(lag_depth)];
        yl[t] = y[t];  // conditioning sample, lag_depth steps back
    }
    const auto bx = equal_frequency_bins(xt, bins);
    const auto by = equal_frequency_bins(yt, bins);
    const auto bz = equal_frequency_bins(yl, bins);

    // I(X;Y|Z) = sum_z p(z) * MI of the slice
    double cmi = 0.0;
    for (int z = 0; z < bins; ++z) {
        std::vector<int> sx, sy;
        for (std::size_t t = 0; t < n; ++t)
            if (bz[t] == z) {
                sx.push_back(bx[t]);
                sy.push_back(by[t]);
            }
        if (sx.empty()) continue;
        const double pz = static_cast<double>(sx.size()) / static_cast<double>(n);
        cmi += pz * histogram_mi(sx, sy, bins);
    }
    return std::max(cmi, 0.0);
}

BaselineMethod make_baseline_method(const std::string& name, const nlohmann::json& params) {
    BaselineMethod method;
    method.name = name;
    method.params = params;
    if (name == "pearson") {
        method.statistic = [](const SignalPair& p) { return pearson(p); };
    } else if (name == "wcc") {
        method.statistic = [params](const SignalPair& p) {
            const int window = params.value("window", std::max(2, p.x.length / 8));
            const int max_lag = params.value("max_lag", window / 4);
            return windowed_cross_correlation(p, window, max_lag);
        };
    } else if (name == "dc") {
        method.statistic = [](const SignalPair& p) { return distance_correlation(p); };
    } else if (name == "hsic") {
        method.statistic = [params](const SignalPair& p) {
            std::optional<double> bw;
            if (params.contains("bandwidth")) bw = params["bandwidth"].get<double>();
            return hsic(p, bw);
        };
    } else if (name == "mi") {
        method.statistic = [params](const SignalPair& p) {
            return mutual_information(p, params.value("bins", 8));
        };
    } else if (name == "cmi") {
        method.statistic = [params](const SignalPair& p) {
            return conditional_mutual_information(p, params.value("bins", 8),
                                                  params.value("lag_depth", 1));
        };
    } else {
        throw DataError("unknown baseline method '" + name +
                        "' (built-ins: pearson, wcc, dc, hsic, mi, cmi)");
    }
    return method;
}

namespace {

SignalPair shift_pair(const SignalPair& pair, int offset) {
    SignalPair out = pair;
    const int T = pair.y.length;
    for (int c = 0; c < pair.y.channels; ++c) {
        const double* src = pair.y.channel(c);
        double* dst = out.y.channel(c);
        for (int t = 0; t < T; ++t) dst[t] = src[((t - offset) % T + T) % T];
    }
    return out;
}

}  // namespace

BaselineResult dataset_test(const SignalDataset& dataset, const BaselineMethod& method,
                            int n_permutations, std::uint64_t seed, int workers) {
    if (dataset.size() < 2) throw DataError("dataset_test: need N >= 2 pairs");
    if (n_permutations < 1) throw DataError("dataset_test: need at least 1 permutation");
    if (!method.statistic) throw DataError("dataset_test: method has no statistic");

    BaselineResult result;
    result.method = method.name;
    result.params = method.params;
    result.per_pair_statistic.resize(dataset.pairs.size());

    run_jobs(dataset.size(), workers, [&](int i) {
        result.per_pair_statistic[static_cast<std::size_t>(i)] =
            method.statistic(dataset.pairs[static_cast<std::size_t>(i)]);
    });
    result.dataset_statistic =
        std::accumulate(result.per_pair_statistic.begin(), result.per_pair_statistic.end(), 0.0) /
        static_cast<double>(dataset.size());

    // null: circularly shift every pair's y by an independent offset >= T/4,
    // preserving autocorrelation while destroying cross-dependence
    result.null_stats.resize(static_cast<std::size_t>(n_permutations));
    run_jobs(n_permutations, workers, [&](int r) {
        Rng rng(Rng::derive(seed, 100 + static_cast<std::uint64_t>(r)));
        double acc = 0.0;
        for (const auto& pair : dataset.pairs) {
            const int T = pair.y.length;
            const int min_shift = (T + 3) / 4;
            const int offset = static_cast<int>(rng.uniform_int(min_shift, T - min_shift));
            acc += method.statistic(shift_pair(pair, offset));
        }
        result.null_stats[static_cast<std::size_t>(r)] = acc / static_cast<double>(dataset.size());
    });

    int n_ge = 0;
    for (const double s : result.null_stats)
        if (s >= result.dataset_statistic) ++n_ge;
    result.p_value = static_cast<double>(1 + n_ge) / static_cast<double>(1 + n_permutations);
    return result;
}

}  // namespace concurrence
