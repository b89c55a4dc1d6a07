#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "pmucat/rng.hpp"
#include "pmucat/util.hpp"

namespace pmucat {

/// Uplink path model. An outbound frame waits for the next system-information
/// grant instant (a fixed grid with period si_window), then takes a stochastic
/// transit time covering the radio hop and the internet path together, and is
/// dropped with a size-dependent probability.
struct ChannelConfig {
    double si_window_ms = 80.0;
    double si_grid_offset_ms = 22.5;
    double base_delay_mean_ms = 131.0;
    double base_delay_stddev_ms = 4.0;
    double base_delay_min_ms = 120.0;
    std::map<std::size_t, double> loss_prob_by_size = {
        {26, 0.0}, {42, 0.002}, {52, 0.006}, {78, 0.033}};
    double first_frame_setup_ms = 0.0;  // connection-establishment spike, off by default
    std::uint64_t seed = 1;

    void validate() const {
        if (!(si_window_ms >= 20.0 && si_window_ms <= 200.0))
            throw std::invalid_argument("si_window must be in [20, 200] ms");
        if (si_grid_offset_ms < 0.0 || si_grid_offset_ms >= si_window_ms)
            throw std::invalid_argument("si_grid_offset must be in [0, si_window)");
        if (base_delay_min_ms < 0.0) throw std::invalid_argument("base_delay_min must be >= 0");
        if (base_delay_stddev_ms < 0.0) throw std::invalid_argument("base_delay_stddev must be >= 0");
        if (first_frame_setup_ms < 0.0) throw std::invalid_argument("setup delay must be >= 0");
        for (auto& [size, p] : loss_prob_by_size)
            if (p < 0.0 || p > 1.0) throw std::invalid_argument("loss probabilities must be in [0, 1]");
    }

    std::int64_t si_window_us() const { return std::llround(si_window_ms * 1000.0); }
    std::int64_t si_grid_offset_us() const { return std::llround(si_grid_offset_ms * 1000.0); }
    double loss_probability(std::size_t frame_size) const {
        auto it = loss_prob_by_size.find(frame_size);
        return it == loss_prob_by_size.end() ? 0.0 : it->second;
    }
};

/// Outcome of pushing one frame through the channel. The transit field is
/// the radio hop and internet path drawn jointly; the model does not split
/// them further.
struct TransitResult {
    std::int64_t departure_us = 0;
    std::int64_t arrival_us = 0;
    bool delivered = true;
    std::int64_t si_wait_us = 0;
    std::int64_t transit_us = 0;
};

/// Wait from t until the next instant on the SI grant grid; zero when t is
/// already on the grid.
inline std::int64_t si_wait_us(std::int64_t t_us, const ChannelConfig& cfg) {
    const std::int64_t w = cfg.si_window_us();
    const std::int64_t r = floor_mod(t_us - cfg.si_grid_offset_us(), w);
    return r == 0 ? 0 : w - r;
}

/// Push one frame of `frame_size` bytes departing at t_us through the channel.
inline TransitResult transmit(std::size_t frame_size, std::int64_t t_us,
                              const ChannelConfig& cfg, Rng& rng) {
    TransitResult res;
    res.departure_us = t_us;
    res.si_wait_us = si_wait_us(t_us, cfg);
    res.transit_us = std::llround(rng.truncated_normal(cfg.base_delay_mean_ms * 1000.0,
                                                       cfg.base_delay_stddev_ms * 1000.0,
                                                       cfg.base_delay_min_ms * 1000.0));
    res.delivered = rng.next_double() >= cfg.loss_probability(frame_size);
    res.arrival_us = t_us + res.si_wait_us + res.transit_us;
    return res;
}

/// One frame queued for transmission.
struct Departure {
    std::int64_t t_us = 0;
    std::uint64_t seq = 0;
    std::size_t size_bytes = 0;
};

/// Run a whole stream through the channel with one deterministic RNG.
/// Results are ordered by departure; arrivals may be out of order.
inline std::vector<TransitResult> run_stream(const std::vector<Departure>& frames,
                                             const ChannelConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<TransitResult> out;
    out.reserve(frames.size());
    for (const Departure& d : frames) {
        TransitResult r = transmit(d.size_bytes, d.t_us, cfg, rng);
        if (d.seq == 0 && cfg.first_frame_setup_ms > 0.0) {
            const std::int64_t setup = std::llround(cfg.first_frame_setup_ms * 1000.0);
            r.transit_us += setup;
            r.arrival_us += setup;
        }
        out.push_back(r);
    }
    return out;
}

/// Multi-stream variant: all streams share one event queue and one RNG.
/// Events are processed in (departure, stream, seq) order, which pins the
/// draw sequence and keeps multi-PMU runs reproducible.
inline std::vector<std::vector<TransitResult>> run_streams(
    const std::vector<std::vector<Departure>>& streams, const ChannelConfig& cfg) {
    cfg.validate();
    struct Event {
        std::int64_t t;
        std::size_t stream;
        std::uint64_t seq;
        std::size_t index;
    };
    std::vector<Event> queue;
    for (std::size_t s = 0; s < streams.size(); ++s)
        for (std::size_t i = 0; i < streams[s].size(); ++i)
            queue.push_back({streams[s][i].t_us, s, streams[s][i].seq, i});
    std::sort(queue.begin(), queue.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.stream != b.stream) return a.stream < b.stream;
        return a.seq < b.seq;
    });

    Rng rng(cfg.seed);
    const std::int64_t setup = std::llround(cfg.first_frame_setup_ms * 1000.0);
    std::vector<std::vector<TransitResult>> out(streams.size());
    for (std::size_t s = 0; s < streams.size(); ++s) out[s].resize(streams[s].size());
    for (const Event& ev : queue) {
        const Departure& d = streams[ev.stream][ev.index];
        TransitResult r = transmit(d.size_bytes, d.t_us, cfg, rng);
        if (d.seq == 0 && setup > 0) {
            r.transit_us += setup;
            r.arrival_us += setup;
        }
        out[ev.stream][ev.index] = r;
    }
    return out;
}

}  // namespace pmucat
