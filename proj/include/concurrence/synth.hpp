#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "concurrence/rng.hpp"
#include "concurrence/signal.hpp"

namespace concurrence {

/// Binary event-onset sequence.
using ImpulseTrain = std::vector<std::uint8_t>;

enum class KernelFamily { ricker, gauss_d1, gauss_d2, morlet_real, biphasic_haar };

const char* kernel_family_name(KernelFamily family);
KernelFamily kernel_family_from_name(const std::string& name);

/// An analytic event shape and its width. Rendered kernels are discretized on
/// the integer grid, truncated where the tail falls below 1e-4 of the peak,
/// and L2-normalized.
struct KernelSpec {
    KernelFamily family = KernelFamily::ricker;
    double scale = 8.0;
};

std::vector<double> render_kernel(const KernelSpec& spec);

/// All knobs of the synthetic model: a shared impulse train c mixed into two
/// signal-specific trains with weight xi, rendered through kernels, plus
/// structured noise (independent impulse trains through their own kernels)
/// and an optional circular lag on y.
struct SynthConfig {
    int T = 1000;
    double xi = 1.0;
    double impulse_rate = 0.02;
    double rate_slope = 0.0;  // per-step drift of the impulse probability
    KernelSpec kernel_x{KernelFamily::ricker, 8.0};
    KernelSpec kernel_y{KernelFamily::ricker, 8.0};
    KernelSpec noise_kernel_x{KernelFamily::gauss_d1, 8.0};
    KernelSpec noise_kernel_y{KernelFamily::gauss_d1, 8.0};
    double sigma_nx = 0.0;
    double sigma_ny = 0.0;
    /// When set, noise amplitudes are calibrated per signal so that
    /// Var(clean)/Var(noise) equals this value, overriding sigma_nx/ny.
    std::optional<double> target_snr;
    int lag_max = 0;

    void validate() const;
};

/// P(impulse at t) = clip(rate + rate_slope*t, 0, 1), independent across t.
ImpulseTrain bernoulli_train(int T, double rate, double rate_slope, Rng& rng);

/// h[t] = xi*c[t] + (1-xi)*p[t].
std::vector<double> mix_impulses(const ImpulseTrain& c, const ImpulseTrain& p, double xi);

/// Same-length convolution with zero boundary handling; the kernel center
/// stays aligned with the impulse position.
std::vector<double> convolve_same(std::span<const double> x, std::span<const double> kernel);

SignalPair synthesize_pair(const SynthConfig& cfg, Rng& rng, const std::string& pair_id);

/// n_pairs independent draws from one configuration; pair p uses the rng
/// stream derive(seed, p).
SignalDataset synthesize_dataset(const SynthConfig& cfg, int n_pairs, std::uint64_t seed);

/// One noise-free dataset per xi with kernels held fixed across the sweep, so
/// only the degree of dependence varies.
std::vector<SignalDataset> generate_xi_sweep(std::span<const double> xis, int pairs_per_dataset,
                                             int T, double event_scale, std::uint64_t seed);

/// One dataset per target SNR at fixed xi and kernels; a non-finite snr value
/// means noise-free.
std::vector<SignalDataset> generate_snr_sweep(std::span<const double> snrs, double xi,
                                              int pairs_per_dataset, int T, double event_scale,
                                              std::uint64_t seed);

struct ChallengeSuite {
    std::vector<SignalDataset> datasets;
    std::vector<std::string> names;
    nlohmann::json ground_truth;  // every drawn parameter, for reproducibility
};

/// Randomized benchmark datasets: xi ~ (0.1, 1], random kernel families and
/// scales for signals and noise, drifting impulse rates, circular lags up to
/// 50 frames, structured noise at a random SNR.
ChallengeSuite generate_challenge_suite(int n_datasets, int pairs_per_dataset, int T,
                                        std::uint64_t seed);

}  // namespace concurrence
