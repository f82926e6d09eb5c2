#pragma once

#include <optional>
#include <string>
#include <vector>

#include "concurrence/errors.hpp"

namespace concurrence {

/// Multichannel real-valued time series, channel-major: values[c*length + t].
struct Signal {
    int channels = 0;
    int length = 0;
    std::vector<double> values;
    std::vector<std::string> channel_names;  // empty = unnamed
    std::optional<double> sample_rate_hz;

    Signal() = default;
    Signal(int k, int t) : channels(k), length(t), values(static_cast<std::size_t>(k) * t, 0.0) {}

    double& at(int c, int t) { return values[static_cast<std::size_t>(c) * length + t]; }
    double at(int c, int t) const { return values[static_cast<std::size_t>(c) * length + t]; }
    double* channel(int c) { return values.data() + static_cast<std::size_t>(c) * length; }
    const double* channel(int c) const { return values.data() + static_cast<std::size_t>(c) * length; }

    /// Throws DataError on empty dims or non-finite entries. `context` names
    /// the signal in error messages (e.g. "pair p3 / x, channel 1, index 17").
    void validate(const std::string& context = {}) const;
};

/// A windowed crop of a signal together with where it came from.
struct Segment {
    int channels = 0;
    int width = 0;
    int origin = 0;  // start index t in the source signal
    std::vector<double> values;  // channel-major, channels x width

    double at(int c, int t) const { return values[static_cast<std::size_t>(c) * width + t]; }
};

/// Temporally synchronized (x, y) recording. group_id ties recordings of one
/// subject together for subject-independent splits; empty means ungrouped.
struct SignalPair {
    Signal x;
    Signal y;
    std::string pair_id;
    std::string group_id;
};

struct SignalDataset {
    std::vector<SignalPair> pairs;
    /// Free-form generator/provenance annotations, persisted in the manifest.
    std::vector<std::pair<std::string, double>> metadata;

    int size() const { return static_cast<int>(pairs.size()); }
    int kx() const { return pairs.empty() ? 0 : pairs.front().x.channels; }
    int ky() const { return pairs.empty() ? 0 : pairs.front().y.channels; }

    /// Checks per-pair alignment, uniform channel counts, unique pair ids and
    /// finite values. Error messages carry the offending pair_id.
    void validate() const;
};

/// Columns [t, t+w) of the signal. Throws DataError when the window does not
/// fit.
Segment extract_segment(const Signal& signal, int t, int w);

struct FoldSplit {
    std::vector<int> train;
    std::vector<int> test;
};

/// k-fold partition of pair indices. Test sets are disjoint and cover all
/// pairs. With by_group, all pairs sharing a group_id land in the same test
/// fold. Deterministic in the seed.
std::vector<FoldSplit> split_folds(const SignalDataset& dataset, int k,
                                   std::uint64_t seed, bool by_group = false);

/// Per-signal, per-channel zero-mean unit-variance scaling (population
/// variance). Constant channels map to all-zeros.
Signal per_channel_standardize(const Signal& signal);
SignalDataset per_channel_standardize(const SignalDataset& dataset);

}  // namespace concurrence
