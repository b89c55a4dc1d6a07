#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pmucat/util.hpp"
#include "pmucat/waveform.hpp"

namespace pmucat {

/// One synchrophasor measurement: magnitude, phase, frequency, ROCOF,
/// stamped with its reporting-grid time.
struct Synchrophasor {
    double magnitude_v = 0.0;
    double phase_rad = 0.0;   // in [-pi, pi), cosine reference at f0 aligned
                              // to the UTC second boundary
    double frequency_hz = 0.0;
    double rocof = 0.0;       // (f - f0) * f0
    std::int64_t timestamp_us = 0;
};

enum class RocofMode {
    product,     // (f - f0) * f0
    derivative,  // (f_i - f_{i-1}) / dt
};

struct EstimatorConfig {
    double nominal_frequency_hz = 50.0;
    double reporting_rate_fps = 50.0;  // lambda
    RocofMode rocof_mode = RocofMode::product;

    void validate() const {
        if (nominal_frequency_hz != 50.0 && nominal_frequency_hz != 60.0)
            throw std::invalid_argument("nominal frequency must be 50 or 60 Hz");
        if (!(reporting_rate_fps >= 1.0 && reporting_rate_fps <= 120.0))
            throw std::invalid_argument("reporting rate must be in [1, 120] fps");
    }

    std::int64_t report_interval_us() const {
        return std::llround(1e6 / reporting_rate_fps);
    }
};

struct PhasorEstimate {
    double magnitude_v = 0.0;
    double phase_rad = 0.0;  // referenced to the window start
};

/// Fundamental bin (k=1) of a plain 32-point DFT, scaled to peak volts.
/// The phase is arg(X1), i.e. the signal's offset from a cosine starting
/// at the first sample.
inline PhasorEstimate dft_fundamental(std::span<const double> samples) {
    if (samples.size() != kSamplesPerBlock)
        throw std::invalid_argument("dft window must hold exactly 32 samples");
    double re = 0.0, im = 0.0;
    for (int k = 0; k < kSamplesPerBlock; ++k) {
        const double a = kTwoPi * k / kSamplesPerBlock;
        re += samples[static_cast<std::size_t>(k)] * std::cos(a);
        im -= samples[static_cast<std::size_t>(k)] * std::sin(a);
    }
    PhasorEstimate est;
    est.magnitude_v = 2.0 * std::sqrt(re * re + im * im) / kSamplesPerBlock;
    est.phase_rad = est.magnitude_v == 0.0 ? 0.0 : wrap_angle(std::atan2(im, re));
    return est;
}

inline PhasorEstimate dft32(const SampleBlock& block) {
    return dft_fundamental(std::span<const double>(block.samples.data(), block.samples.size()));
}

/// Frequency from the latest inter-edge interval (microsecond-quantized).
inline double estimate_frequency(std::span<const std::int64_t> edges_us) {
    if (edges_us.size() < 2)
        throw std::invalid_argument("frequency estimation needs at least two edges");
    const std::int64_t period_us = edges_us[edges_us.size() - 1] - edges_us[edges_us.size() - 2];
    if (period_us <= 0) throw std::invalid_argument("edges must be strictly increasing");
    return 1e6 / static_cast<double>(period_us);
}

inline double compute_rocof(double f_hz, double f0_hz) {
    return (f_hz - f0_hz) * f0_hz;
}

struct ReportSeries {
    std::vector<Synchrophasor> reports;
    std::size_t skipped_leading = 0;  // grid points before any window/edges existed
    bool truncated = false;           // grid extended past the available samples
};

/// Emit one synchrophasor per reporting interval on the grid
/// grid_start + i*dt, i = 1..count. Each report reuses the most recent
/// completed DFT window and the most recent edge pair; windows are never
/// interpolated. The reported phase is rebased from the window start to a
/// cosine at f0 aligned to the UTC second boundary, which makes it constant
/// for an on-nominal signal.
inline ReportSeries report(std::span<const SampleBlock> blocks,
                           std::span<const std::int64_t> edges_us,
                           const EstimatorConfig& cfg,
                           std::int64_t grid_start_us,
                           std::int64_t count) {
    cfg.validate();
    const double f0 = cfg.nominal_frequency_hz;
    const std::int64_t dt_us = cfg.report_interval_us();
    const std::int64_t block_period_us = std::llround(1e6 / f0);

    ReportSeries out;
    out.reports.reserve(static_cast<std::size_t>(count > 0 ? count : 0));

    const std::int64_t data_end_us =
        blocks.empty() ? 0 : blocks.back().start_us + block_period_us;

    std::size_t blk = 0;   // number of completed blocks so far
    std::size_t edge = 0;  // number of edges at or before t
    double prev_f = f0;
    bool have_prev = false;

    for (std::int64_t i = 1; i <= count; ++i) {
        const std::int64_t t = grid_start_us + i * dt_us;

        if (blocks.empty() || t > data_end_us) {
            out.truncated = true;
            break;
        }
        while (blk < blocks.size() && blocks[blk].start_us + block_period_us <= t) ++blk;
        while (edge < edges_us.size() && edges_us[edge] <= t) ++edge;

        if (blk == 0 || edge < 2) {
            ++out.skipped_leading;
            continue;
        }

        const SampleBlock& window = blocks[blk - 1];
        const PhasorEstimate ph = dft32(window);

        // Rebase the window-start phase onto the UTC-second cosine reference.
        const double frac_s = static_cast<double>(frac_of_second_us(window.start_us)) * 1e-6;
        const double phase = wrap_angle(ph.phase_rad - kTwoPi * f0 * frac_s);

        const double f = estimate_frequency(edges_us.first(edge));

        Synchrophasor s;
        s.magnitude_v = ph.magnitude_v;
        s.phase_rad = phase;
        s.frequency_hz = f;
        if (cfg.rocof_mode == RocofMode::product) {
            s.rocof = compute_rocof(f, f0);
        } else {
            s.rocof = have_prev ? (f - prev_f) / (static_cast<double>(dt_us) * 1e-6) : 0.0;
        }
        s.timestamp_us = t;
        out.reports.push_back(s);

        prev_f = f;
        have_prev = true;
    }
    if (out.reports.size() + out.skipped_leading < static_cast<std::size_t>(count > 0 ? count : 0))
        out.truncated = true;
    return out;
}

}  // namespace pmucat
