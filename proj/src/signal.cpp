#include "concurrence/signal.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "concurrence/rng.hpp"

namespace concurrence {

void Signal::validate(const std::string& context) const {
    const std::string where = context.empty() ? std::string("signal") : context;
    if (channels < 1 || length < 1)
        throw DataError(where + ": empty signal (channels=" + std::to_string(channels) +
                        ", length=" + std::to_string(length) + ")");
    if (values.size() != static_cast<std::size_t>(channels) * length)
        throw DataError(where + ": value buffer does not match declared shape");
    for (int c = 0; c < channels; ++c) {
        const double* row = channel(c);
        for (int t = 0; t < length; ++t) {
            if (!std::isfinite(row[t]))
                throw DataError(where + ": non-finite value at channel " + std::to_string(c) +
                                ", index " + std::to_string(t));
        }
    }
}

void SignalDataset::validate() const {
    std::set<std::string> seen_ids;
    for (const auto& pair : pairs) {
        pair.x.validate("pair " + pair.pair_id + " / x");
        pair.y.validate("pair " + pair.pair_id + " / y");
        if (pair.x.length != pair.y.length)
            throw DataError("pair " + pair.pair_id + ": length mismatch (x.T=" +
                            std::to_string(pair.x.length) + ", y.T=" +
                            std::to_string(pair.y.length) + ")");
        if (pair.x.channels != kx() || pair.y.channels != ky())
            throw DataError("pair " + pair.pair_id +
                            ": channel count differs from the rest of the dataset");
        if (!seen_ids.insert(pair.pair_id).second)
            throw DataError("duplicate pair_id '" + pair.pair_id + "'");
    }
}

Segment extract_segment(const Signal& signal, int t, int w) {
    if (w < 1) throw DataError("extract_segment: width must be >= 1, got " + std::to_string(w));
    if (t < 0 || t > signal.length - w)
        throw DataError("extract_segment: window [" + std::to_string(t) + ", " +
                        std::to_string(t + w) + ") out of range for T=" +
                        std::to_string(signal.length));
    Segment seg;
    seg.channels = signal.channels;
    seg.width = w;
    seg.origin = t;
    seg.values.resize(static_cast<std::size_t>(signal.channels) * w);
    for (int c = 0; c < signal.channels; ++c)
        std::copy_n(signal.channel(c) + t, w, seg.values.data() + static_cast<std::size_t>(c) * w);
    return seg;
}

std::vector<FoldSplit> split_folds(const SignalDataset& dataset, int k,
                                   std::uint64_t seed, bool by_group) {
    const int n = dataset.size();
    if (k < 2) throw DataError("split_folds: k must be >= 2, got " + std::to_string(k));
    if (k > n)
        throw DataError("split_folds: k=" + std::to_string(k) + " exceeds dataset size N=" +
                        std::to_string(n));
    Rng rng(seed);
    std::vector<std::vector<int>> test_sets(static_cast<std::size_t>(k));

    if (by_group) {
        // group ids in first-appearance order, then shuffled; groups go to the
        // currently smallest fold so fold sizes stay balanced
        std::vector<std::string> groups;
        std::map<std::string, std::vector<int>> members;
        for (int i = 0; i < n; ++i) {
            const std::string& g = dataset.pairs[static_cast<std::size_t>(i)].group_id;
            if (g.empty())
                throw DataError("split_folds: by_group requested but pair '" +
                                dataset.pairs[static_cast<std::size_t>(i)].pair_id +
                                "' has no group_id");
            if (members.find(g) == members.end()) groups.push_back(g);
            members[g].push_back(i);
        }
        if (static_cast<int>(groups.size()) < k)
            throw DataError("split_folds: fewer groups (" + std::to_string(groups.size()) +
                            ") than folds (" + std::to_string(k) + ")");
        rng.shuffle(groups);
        for (const auto& g : groups) {
            int target = 0;
            for (int f = 1; f < k; ++f)
                if (test_sets[static_cast<std::size_t>(f)].size() <
                    test_sets[static_cast<std::size_t>(target)].size())
                    target = f;
            auto& dst = test_sets[static_cast<std::size_t>(target)];
            dst.insert(dst.end(), members[g].begin(), members[g].end());
        }
    } else {
        std::vector<int> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (int i = 0; i < n; ++i)
            test_sets[static_cast<std::size_t>(i % k)].push_back(order[static_cast<std::size_t>(i)]);
    }

    std::vector<FoldSplit> folds(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        auto& test = test_sets[static_cast<std::size_t>(f)];
        std::sort(test.begin(), test.end());
        std::vector<char> in_test(static_cast<std::size_t>(n), 0);
        for (int i : test) in_test[static_cast<std::size_t>(i)] = 1;
        auto& fold = folds[static_cast<std::size_t>(f)];
        fold.test = test;
        for (int i = 0; i < n; ++i)
            if (!in_test[static_cast<std::size_t>(i)]) fold.train.push_back(i);
    }
    return folds;
}

Signal per_channel_standardize(const Signal& signal) {
    Signal out = signal;
    for (int c = 0; c < out.channels; ++c) {
        double* row = out.channel(c);
        const double n = static_cast<double>(out.length);
        double mean = 0.0;
        for (int t = 0; t < out.length; ++t) mean += row[t];
        mean /= n;
        double var = 0.0;
        for (int t = 0; t < out.length; ++t) var += (row[t] - mean) * (row[t] - mean);
        var /= n;
        if (var <= 0.0) {
            std::fill(row, row + out.length, 0.0);
        } else {
            const double inv_std = 1.0 / std::sqrt(var);
            for (int t = 0; t < out.length; ++t) row[t] = (row[t] - mean) * inv_std;
        }
    }
    return out;
}

SignalDataset per_channel_standardize(const SignalDataset& dataset) {
    SignalDataset out = dataset;
    for (auto& pair : out.pairs) {
        pair.x = per_channel_standardize(pair.x);
        pair.y = per_channel_standardize(pair.y);
    }
    return out;
}

}  // namespace concurrence
