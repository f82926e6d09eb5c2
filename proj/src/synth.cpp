#include "concurrence/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace concurrence {

const char* kernel_family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::ricker: return "ricker";
        case KernelFamily::gauss_d1: return "gauss_d1";
        case KernelFamily::gauss_d2: return "gauss_d2";
        case KernelFamily::morlet_real: return "morlet_real";
        case KernelFamily::biphasic_haar: return "biphasic_haar";
    }
    throw DataError("unknown kernel family");
}

KernelFamily kernel_family_from_name(const std::string& name) {
    if (name == "ricker") return KernelFamily::ricker;
    if (name == "gauss_d1") return KernelFamily::gauss_d1;
    if (name == "gauss_d2") return KernelFamily::gauss_d2;
    if (name == "morlet_real") return KernelFamily::morlet_real;
    if (name == "biphasic_haar") return KernelFamily::biphasic_haar;
    throw DataError("unsupported kernel family '" + name + "'");
}

namespace {

double kernel_value(KernelFamily family, double scale, double t) {
    const double u = t / scale;
    switch (family) {
        case KernelFamily::ricker:
            return (1.0 - u * u) * std::exp(-0.5 * u * u);
        case KernelFamily::gauss_d1:
            return -u * std::exp(-0.5 * u * u);
        case KernelFamily::gauss_d2:
            return (u * u - 1.0) * std::exp(-0.5 * u * u);
        case KernelFamily::morlet_real:
            return std::cos(5.0 * u) * std::exp(-0.5 * u * u);
        case KernelFamily::biphasic_haar:
            if (t >= -scale && t < 0.0) return 1.0;
            if (t >= 0.0 && t < scale) return -1.0;
            return 0.0;
    }
    return 0.0;
}

}  // namespace

std::vector<double> render_kernel(const KernelSpec& spec) {
    if (spec.scale <= 0.0) throw DataError("render_kernel: scale must be positive");
    const int reach = static_cast<int>(std::ceil(10.0 * spec.scale)) + 4;
    std::vector<double> wide(static_cast<std::size_t>(2 * reach + 1));
    double peak = 0.0;
    for (int t = -reach; t <= reach; ++t) {
        const double v = kernel_value(spec.family, spec.scale, static_cast<double>(t));
        wide[static_cast<std::size_t>(t + reach)] = v;
        peak = std::max(peak, std::abs(v));
    }
    if (peak <= 0.0) throw DataError("render_kernel: degenerate kernel");
    const double threshold = 1e-4 * peak;
    int lo = 0, hi = 2 * reach;
    while (lo < hi && std::abs(wide[static_cast<std::size_t>(lo)]) < threshold) ++lo;
    while (hi > lo && std::abs(wide[static_cast<std::size_t>(hi)]) < threshold) --hi;
    std::vector<double> kernel(wide.begin() + lo, wide.begin() + hi + 1);
    double norm = 0.0;
    for (const double v : kernel) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : kernel) v /= norm;
    return kernel;
}

void SynthConfig::validate() const {
    if (T < 2) throw DataError("synth config: T must be >= 2");
    if (xi < 0.0 || xi > 1.0) throw DataError("synth config: xi must be in [0, 1]");
    if (impulse_rate <= 0.0 || impulse_rate >= 1.0)
        throw DataError("synth config: impulse_rate must be in (0, 1)");
    if (sigma_nx < 0.0 || sigma_ny < 0.0)
        throw DataError("synth config: noise scales must be nonnegative");
    if (target_snr && *target_snr <= 0.0)
        throw DataError("synth config: target_snr must be positive");
    if (lag_max < 0 || lag_max >= T)
        throw DataError("synth config: lag_max must be in [0, T)");
}

ImpulseTrain bernoulli_train(int T, double rate, double rate_slope, Rng& rng) {
    if (rate <= 0.0 || rate >= 1.0)
        throw DataError("bernoulli_train: rate must be in (0, 1), got " + std::to_string(rate));
    ImpulseTrain train(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) {
        const double p = std::clamp(rate + rate_slope * static_cast<double>(t), 0.0, 1.0);
        train[static_cast<std::size_t>(t)] = rng.bernoulli(p) ? 1 : 0;
    }
    return train;
}

std::vector<double> mix_impulses(const ImpulseTrain& c, const ImpulseTrain& p, double xi) {
    if (c.size() != p.size()) throw DataError("mix_impulses: length mismatch");
    std::vector<double> h(c.size());
    for (std::size_t t = 0; t < c.size(); ++t)
        h[t] = xi * static_cast<double>(c[t]) + (1.0 - xi) * static_cast<double>(p[t]);
    return h;
}

std::vector<double> convolve_same(std::span<const double> x, std::span<const double> kernel) {
    const int n = static_cast<int>(x.size());
    const int m = static_cast<int>(kernel.size());
    const int center = (m - 1) / 2;
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < m; ++j) {
        const double kj = kernel[static_cast<std::size_t>(j)];
        if (kj == 0.0) continue;
        const int shift = j - center;  // y[t] += k[j] * x[t - shift]
        const int t_lo = std::max(0, shift);
        const int t_hi = std::min(n, n + shift);
        for (int t = t_lo; t < t_hi; ++t)
            out[static_cast<std::size_t>(t)] += kj * x[static_cast<std::size_t>(t - shift)];
    }
    return out;
}

namespace {

double population_variance(std::span<const double> v) {
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (const double x : v) var += (x - mean) * (x - mean);
    return var / static_cast<double>(v.size());
}

std::vector<double> circular_shift(std::span<const double> v, int lag) {
    const int n = static_cast<int>(v.size());
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
        out[static_cast<std::size_t>(t)] = v[static_cast<std::size_t>(((t - lag) % n + n) % n)];
    return out;
}

std::vector<double> impulses_to_double(const ImpulseTrain& train) {
    std::vector<double> out(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) out[i] = static_cast<double>(train[i]);
    return out;
}

}  // namespace

SignalPair synthesize_pair(const SynthConfig& cfg, Rng& rng, const std::string& pair_id) {
    cfg.validate();
    const auto phi = render_kernel(cfg.kernel_x);
    const auto psi = render_kernel(cfg.kernel_y);
    const auto noise_phi = render_kernel(cfg.noise_kernel_x);
    const auto noise_psi = render_kernel(cfg.noise_kernel_y);
    const std::size_t max_support =
        std::max({phi.size(), psi.size(), noise_phi.size(), noise_psi.size()});
    if (static_cast<std::size_t>(cfg.T) <= max_support)
        throw DataError("synthesize_pair: T=" + std::to_string(cfg.T) +
                        " does not exceed the kernel support " + std::to_string(max_support));

    const auto c = bernoulli_train(cfg.T, cfg.impulse_rate, cfg.rate_slope, rng);
    const auto px = bernoulli_train(cfg.T, cfg.impulse_rate, cfg.rate_slope, rng);
    const auto py = bernoulli_train(cfg.T, cfg.impulse_rate, cfg.rate_slope, rng);
    const auto hx = mix_impulses(c, px, cfg.xi);
    const auto hy = mix_impulses(c, py, cfg.xi);
    const auto clean_x = convolve_same(hx, phi);
    const auto clean_y = convolve_same(hy, psi);

    const auto ex = bernoulli_train(cfg.T, cfg.impulse_rate, cfg.rate_slope, rng);
    const auto ey = bernoulli_train(cfg.T, cfg.impulse_rate, cfg.rate_slope, rng);
    const auto raw_nx = convolve_same(impulses_to_double(ex), noise_phi);
    const auto raw_ny = convolve_same(impulses_to_double(ey), noise_psi);

    double sigma_x = cfg.sigma_nx;
    double sigma_y = cfg.sigma_ny;
    if (cfg.target_snr) {
        const double var_cx = population_variance(clean_x);
        const double var_cy = population_variance(clean_y);
        const double var_nx = population_variance(raw_nx);
        const double var_ny = population_variance(raw_ny);
        sigma_x = (var_nx > 0.0) ? std::sqrt(var_cx / (*cfg.target_snr * var_nx)) : 0.0;
        sigma_y = (var_ny > 0.0) ? std::sqrt(var_cy / (*cfg.target_snr * var_ny)) : 0.0;
    }

    std::vector<double> x(clean_x.size()), y(clean_y.size());
    for (std::size_t t = 0; t < x.size(); ++t) x[t] = clean_x[t] + sigma_x * raw_nx[t];
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = clean_y[t] + sigma_y * raw_ny[t];

    const int lag = cfg.lag_max > 0 ? static_cast<int>(rng.uniform_int(0, cfg.lag_max)) : 0;
    if (lag > 0) y = circular_shift(y, lag);

    SignalPair pair;
    pair.pair_id = pair_id;
    pair.x = Signal(1, cfg.T);
    pair.y = Signal(1, cfg.T);
    std::memcpy(pair.x.channel(0), x.data(), sizeof(double) * x.size());
    std::memcpy(pair.y.channel(0), y.data(), sizeof(double) * y.size());
    return pair;
}

SignalDataset synthesize_dataset(const SynthConfig& cfg, int n_pairs, std::uint64_t seed) {
    if (n_pairs < 0) throw DataError("synthesize_dataset: negative pair count");
    SignalDataset ds;
    for (int p = 0; p < n_pairs; ++p) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(p)));
        ds.pairs.push_back(synthesize_pair(cfg, rng, "p" + std::to_string(p)));
    }
    return ds;
}

namespace {

KernelSpec random_kernel(Rng& rng, double scale_lo, double scale_hi) {
    KernelSpec spec;
    spec.family = static_cast<KernelFamily>(rng.uniform_int(0, 4));
    spec.scale = rng.uniform(scale_lo, scale_hi);
    return spec;
}

nlohmann::json kernel_json(const KernelSpec& spec) {
    return {{"family", kernel_family_name(spec.family)}, {"scale", spec.scale}};
}

}  // namespace

std::vector<SignalDataset> generate_xi_sweep(std::span<const double> xis, int pairs_per_dataset,
                                             int T, double event_scale, std::uint64_t seed) {
    for (const double xi : xis)
        if (xi < 0.0 || xi > 1.0) throw DataError("generate_xi_sweep: xi outside [0, 1]");
    // kernels drawn once and reused for every xi
    Rng kernel_rng(Rng::derive(seed, 1));
    SynthConfig base;
    base.T = T;
    base.kernel_x = {static_cast<KernelFamily>(kernel_rng.uniform_int(0, 4)), event_scale};
    base.kernel_y = {static_cast<KernelFamily>(kernel_rng.uniform_int(0, 4)), event_scale};
    base.sigma_nx = 0.0;
    base.sigma_ny = 0.0;
    base.lag_max = 0;

    std::vector<SignalDataset> out;
    for (std::size_t i = 0; i < xis.size(); ++i) {
        SynthConfig cfg = base;
        cfg.xi = xis[i];
        SignalDataset ds =
            synthesize_dataset(cfg, pairs_per_dataset, Rng::derive(seed, 100 + i));
        ds.metadata.emplace_back("xi", cfg.xi);
        ds.metadata.emplace_back("T", static_cast<double>(T));
        ds.metadata.emplace_back("kernel_x_family", static_cast<double>(cfg.kernel_x.family));
        ds.metadata.emplace_back("kernel_y_family", static_cast<double>(cfg.kernel_y.family));
        ds.metadata.emplace_back("event_scale", event_scale);
        out.push_back(std::move(ds));
    }
    return out;
}

std::vector<SignalDataset> generate_snr_sweep(std::span<const double> snrs, double xi,
                                              int pairs_per_dataset, int T, double event_scale,
                                              std::uint64_t seed) {
    Rng kernel_rng(Rng::derive(seed, 1));
    SynthConfig base;
    base.T = T;
    base.xi = xi;
    base.kernel_x = {static_cast<KernelFamily>(kernel_rng.uniform_int(0, 4)), event_scale};
    base.kernel_y = {static_cast<KernelFamily>(kernel_rng.uniform_int(0, 4)), event_scale};
    base.noise_kernel_x = {static_cast<KernelFamily>(kernel_rng.uniform_int(0, 4)), event_scale};
    base.noise_kernel_y = {static_cast<KernelFamily>(kernel_rng.uniform_int(0, 4)), event_scale};
    base.lag_max = 0;

    std::vector<SignalDataset> out;
    for (std::size_t i = 0; i < snrs.size(); ++i) {
        SynthConfig cfg = base;
        if (std::isfinite(snrs[i]))
            cfg.target_snr = snrs[i];
        else
            cfg.target_snr.reset();  // noise-free
        SignalDataset ds = synthesize_dataset(cfg, pairs_per_dataset, Rng::derive(seed, 200 + i));
        ds.metadata.emplace_back("xi", xi);
        if (std::isfinite(snrs[i])) ds.metadata.emplace_back("snr", snrs[i]);
        ds.metadata.emplace_back("T", static_cast<double>(T));
        out.push_back(std::move(ds));
    }
    return out;
}

ChallengeSuite generate_challenge_suite(int n_datasets, int pairs_per_dataset, int T,
                                        std::uint64_t seed) {
    if (n_datasets < 1) throw DataError("generate_challenge_suite: n_datasets must be >= 1");
    ChallengeSuite suite;
    suite.ground_truth["version"] = 1;
    suite.ground_truth["T"] = T;
    suite.ground_truth["pairs_per_dataset"] = pairs_per_dataset;
    suite.ground_truth["seed"] = seed;
    suite.ground_truth["datasets"] = nlohmann::json::array();

    for (int d = 0; d < n_datasets; ++d) {
        Rng rng(Rng::derive(seed, 500 + static_cast<std::uint64_t>(d)));
        SynthConfig cfg;
        cfg.T = T;
        cfg.xi = 1.0 - 0.9 * rng.uniform();  // in (0.1, 1]
        cfg.kernel_x = random_kernel(rng, 4.0, 16.0);
        cfg.kernel_y = random_kernel(rng, 4.0, 16.0);
        cfg.noise_kernel_x = random_kernel(rng, 4.0, 16.0);
        cfg.noise_kernel_y = random_kernel(rng, 4.0, 16.0);
        cfg.impulse_rate = 0.02;
        cfg.rate_slope = rng.uniform(-0.5, 0.5) * cfg.impulse_rate / static_cast<double>(T);
        cfg.target_snr = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
        cfg.lag_max = 50;
        const std::uint64_t ds_seed = Rng::derive(seed, 9000 + static_cast<std::uint64_t>(d));

        SignalDataset ds = synthesize_dataset(cfg, pairs_per_dataset, ds_seed);
        ds.metadata.emplace_back("xi", cfg.xi);
        ds.metadata.emplace_back("target_snr", *cfg.target_snr);
        ds.metadata.emplace_back("lag_max", static_cast<double>(cfg.lag_max));

        char name[16];
        std::snprintf(name, sizeof(name), "ds_%03d", d);
        suite.names.emplace_back(name);
        suite.datasets.push_back(std::move(ds));

        nlohmann::json entry;
        entry["name"] = name;
        entry["xi"] = cfg.xi;
        entry["kernel_x"] = kernel_json(cfg.kernel_x);
        entry["kernel_y"] = kernel_json(cfg.kernel_y);
        entry["noise_kernel_x"] = kernel_json(cfg.noise_kernel_x);
        entry["noise_kernel_y"] = kernel_json(cfg.noise_kernel_y);
        entry["impulse_rate"] = cfg.impulse_rate;
        entry["rate_slope"] = cfg.rate_slope;
        entry["target_snr"] = *cfg.target_snr;
        entry["lag_max"] = cfg.lag_max;
        entry["pair_seed"] = ds_seed;
        suite.ground_truth["datasets"].push_back(entry);
    }
    return suite;
}

}  // namespace concurrence
