#pragma once

// Phase-estimation error propagation for uncorrelated and path-entangled
// probes, plus a deterministic Monte Carlo check of the closed forms.

#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "pathent/fock.hpp"

namespace pathent {

inline constexpr const char* kRngIdentifier = "mt19937_64/canonical53";
inline constexpr double kDerivativeStep = 1e-5;
inline constexpr double kDerivativeThreshold = 1e-8;

enum class ProbeKind { Uncorrelated, Entangled };

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

// n independent single-photon interferometers: observable is the sum of n
// outcomes of +-1 with mean cos(phi) each.
inline Moments uncorrelated_statistics(int n, double phi) {
    if (n < 1) throw std::invalid_argument("probe needs n >= 1");
    double c = std::cos(phi);
    return {n * c, n * (1.0 - c * c)};
}

// One |n::0> probe: the n-photon parity-type observable picks up the phase n
// times, a single +-1 outcome with mean cos(n phi).
inline Moments entangled_statistics(int n, double phi) {
    if (n < 1) throw std::invalid_argument("probe needs n >= 1");
    double c = std::cos(n * phi);
    return {c, 1.0 - c * c};
}

struct PhaseUncertainty {
    double value = 0.0;
    bool singular = false;
};

// Error propagation delta = sqrt(var) / |d<mean>/dphi| with a central
// difference; flagged singular when the slope is numerically degenerate.
inline PhaseUncertainty phase_uncertainty(const std::function<double(double)>& mean,
                                          const std::function<double(double)>& variance,
                                          double phi, double step = kDerivativeStep,
                                          double threshold = kDerivativeThreshold) {
    double slope = (mean(phi + step) - mean(phi - step)) / (2.0 * step);
    if (std::abs(slope) < threshold) return {0.0, true};
    return {std::sqrt(std::max(variance(phi), 0.0)) / std::abs(slope), false};
}

struct PrecisionLimits {
    double shot_noise = 0.0;   // 1/sqrt(n)
    double heisenberg = 0.0;   // 1/n
};

inline PrecisionLimits precision_limits(int n) {
    if (n < 1) throw std::invalid_argument("precision limits need n >= 1");
    return {1.0 / std::sqrt(double(n)), 1.0 / double(n)};
}

namespace detail {

// Fixed uniform-double construction so streams are identical across
// platforms; std::uniform_real_distribution is not pinned by the standard.
inline double canonical_double(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

inline int sample_pm(std::mt19937_64& rng, double mean) {
    double p_plus = 0.5 * (1.0 + mean);
    return canonical_double(rng) < p_plus ? 1 : -1;
}

}  // namespace detail

struct EstimationSample {
    double mean = 0.0;
    double variance = 0.0;  // unbiased sample variance
    PhaseUncertainty uncertainty;
};

// Draws `trials` samples of the probe observable at the true phase and
// propagates the empirical spread through the closed-form slope.
inline EstimationSample monte_carlo_phase_estimate(ProbeKind kind, int n, double phi,
                                                   long trials, std::uint64_t seed) {
    if (trials < 2) throw std::invalid_argument("need at least two trials");
    if (n < 1) throw std::invalid_argument("probe needs n >= 1");
    std::mt19937_64 rng(seed);
    double sum = 0.0, sum_sq = 0.0;
    for (long t = 0; t < trials; ++t) {
        double x = 0.0;
        if (kind == ProbeKind::Uncorrelated) {
            double m = std::cos(phi);
            for (int i = 0; i < n; ++i) x += detail::sample_pm(rng, m);
        } else {
            x = detail::sample_pm(rng, std::cos(n * phi));
        }
        sum += x;
        sum_sq += x * x;
    }
    EstimationSample s;
    s.mean = sum / double(trials);
    s.variance = (sum_sq - double(trials) * s.mean * s.mean) / double(trials - 1);
    auto mean_fn = [kind, n](double ph) {
        return kind == ProbeKind::Uncorrelated ? uncorrelated_statistics(n, ph).mean
                                               : entangled_statistics(n, ph).mean;
    };
    double slope = (mean_fn(phi + kDerivativeStep) - mean_fn(phi - kDerivativeStep)) /
                   (2.0 * kDerivativeStep);
    if (std::abs(slope) < kDerivativeThreshold) {
        s.uncertainty = {0.0, true};
    } else {
        s.uncertainty = {std::sqrt(std::max(s.variance, 0.0)) / std::abs(slope), false};
    }
    return s;
}

// Closed-form uncertainty for the same probe at the same phase.
inline PhaseUncertainty closed_form_uncertainty(ProbeKind kind, int n, double phi) {
    auto mean_fn = [kind, n](double ph) {
        return kind == ProbeKind::Uncorrelated ? uncorrelated_statistics(n, ph).mean
                                               : entangled_statistics(n, ph).mean;
    };
    auto var_fn = [kind, n](double ph) {
        return kind == ProbeKind::Uncorrelated ? uncorrelated_statistics(n, ph).variance
                                               : entangled_statistics(n, ph).variance;
    };
    return phase_uncertainty(mean_fn, var_fn, phi);
}

}  // namespace pathent
