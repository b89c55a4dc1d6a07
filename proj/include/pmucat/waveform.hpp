#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pmucat/rng.hpp"
#include "pmucat/util.hpp"

namespace pmucat {

inline constexpr int kSamplesPerBlock = 32;

/// AC test-signal description. The sampling chain is clocked at 32*f0 while
/// the signal itself may run at f != f0.
struct WaveformConfig {
    double nominal_frequency_hz = 50.0;  // f0, sets the sampling rate
    double actual_frequency_hz = 50.0;   // f, the signal actually generated
    double amplitude_v = 2.0;
    double initial_phase_rad = 0.0;      // phase of the sine at start_time
    double noise_stddev_v = 0.0;
    double duration_s = 1.0;
    std::int64_t start_time_us = 0;      // absolute epoch time of sample 0
    bool adc_quantize = false;           // 10-bit 0-5 V front end emulation

    void validate() const {
        if (!(nominal_frequency_hz > 0)) throw std::invalid_argument("nominal_frequency must be > 0");
        if (!(actual_frequency_hz > 0)) throw std::invalid_argument("actual_frequency must be > 0");
        if (amplitude_v < 0) throw std::invalid_argument("amplitude must be >= 0");
        if (noise_stddev_v < 0) throw std::invalid_argument("noise_stddev must be >= 0");
        if (!(duration_s > 0)) throw std::invalid_argument("duration must be > 0");
        if (initial_phase_rad < -kPi || initial_phase_rad >= kPi)
            throw std::invalid_argument("initial_phase must be in [-pi, pi)");
    }
};

/// One DFT window worth of samples. Timestamps are microsecond-quantized;
/// the sampling grid itself is ideal (no clock drift).
struct SampleBlock {
    std::array<double, kSamplesPerBlock> samples{};
    std::int64_t start_us = 0;
    double sample_rate_hz = 0.0;
};

namespace detail {

inline double adc10_quantize(double x) {
    // 10-bit converter spanning 0-5 V with the signal biased to mid-rail.
    double biased = x + 2.5;
    if (biased < 0.0) biased = 0.0;
    if (biased > 5.0) biased = 5.0;
    return std::round(biased / 5.0 * 1023.0) * (5.0 / 1023.0) - 2.5;
}

}  // namespace detail

/// Number of blocks a run of `duration_s` produces: ceil(duration * f0).
inline std::int64_t block_count(const WaveformConfig& cfg) {
    return static_cast<std::int64_t>(std::ceil(cfg.duration_s * cfg.nominal_frequency_hz - 1e-9));
}

/// Generate the uniformly clocked sample stream. Block b starts at
/// start_time + round(b*1e6/f0); sample values are evaluated at the ideal
/// instants s/(32*f0) past start_time, so the grid carries no cumulative
/// drift for any f0.
inline std::vector<SampleBlock> generate(const WaveformConfig& cfg, std::uint64_t rng_seed) {
    cfg.validate();
    const double f0 = cfg.nominal_frequency_hz;
    const double fs = 32.0 * f0;
    const std::int64_t nblocks = block_count(cfg);

    Rng rng(rng_seed);
    std::vector<SampleBlock> out;
    out.reserve(static_cast<std::size_t>(nblocks));
    for (std::int64_t b = 0; b < nblocks; ++b) {
        SampleBlock blk;
        blk.start_us = cfg.start_time_us + std::llround(static_cast<double>(b) * 1e6 / f0);
        blk.sample_rate_hz = fs;
        for (int k = 0; k < kSamplesPerBlock; ++k) {
            const double tau_s = (static_cast<double>(b) * 32.0 + k) / fs;  // since start_time
            double x = cfg.amplitude_v *
                       std::sin(kTwoPi * cfg.actual_frequency_hz * tau_s + cfg.initial_phase_rad);
            if (cfg.noise_stddev_v > 0) x += rng.normal(0.0, cfg.noise_stddev_v);
            if (cfg.adc_quantize) x = detail::adc10_quantize(x);
            blk.samples[static_cast<std::size_t>(k)] = x;
        }
        out.push_back(blk);
    }
    return out;
}

/// Rising-edge instants of the sine-to-square converter output: the upward
/// zero crossings of the signal, microsecond-quantized. Noise-free by
/// construction (the comparator sees the clean waveform).
inline std::vector<std::int64_t> square_wave_edges(const WaveformConfig& cfg) {
    cfg.validate();
    const double f = cfg.actual_frequency_hz;
    // sin(2*pi*f*tau + phi0) crosses upward at tau_k = (k - phi0/2pi)/f
    const double cycle0 = cfg.initial_phase_rad / kTwoPi;
    std::vector<std::int64_t> edges;
    std::int64_t k = static_cast<std::int64_t>(std::ceil(cycle0 - 1e-12));
    for (;; ++k) {
        const double tau_s = (static_cast<double>(k) - cycle0) / f;
        if (tau_s > cfg.duration_s) break;
        if (tau_s < 0) continue;
        edges.push_back(cfg.start_time_us + std::llround(tau_s * 1e6));
    }
    return edges;
}

}  // namespace pmucat
