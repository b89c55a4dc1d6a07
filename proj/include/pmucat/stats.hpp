#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace pmucat {

enum class FrameStatus { delivered, lost, integrity_failure };

inline const char* to_string(FrameStatus s) {
    switch (s) {
        case FrameStatus::delivered: return "delivered";
        case FrameStatus::lost: return "lost";
        case FrameStatus::integrity_failure: return "integrity_failure";
    }
    return "?";
}

/// Per-frame delay bookkeeping at the concentrator. t_us comes from the
/// frame's own SOC/FRACSEC; t_prime_us is the local reception stamp.
struct DelayRecord {
    std::uint16_t stream_id = 0;
    std::uint64_t seq = 0;
    std::int64_t t_us = 0;
    std::int64_t t_prime_us = 0;
    std::int64_t delay_us = 0;  // t_prime - t
    std::uint32_t size_bytes = 0;
    FrameStatus status = FrameStatus::delivered;
    std::int64_t d6_us = 0;  // realignment buffer wait, filled by realign()
};

/// Per-stage delay decomposition for simulated frames. The radio and
/// internet hops are drawn jointly, so they appear as one transit term.
struct DelayBudget {
    std::int64_t d1_us = 0;  // sampling + phasor computation
    std::int64_t d2_us = 0;  // inter-controller transfer
    std::int64_t d3_us = 0;  // frame creation + modem handoff
    std::int64_t d4_wait_us = 0;   // wait for the SI grant instant
    std::int64_t d45_transit_us = 0;  // radio + internet transit, joint
    std::int64_t d6_us = 0;  // realignment buffer wait

    std::int64_t sum_us() const {
        return d1_us + d2_us + d3_us + d4_wait_us + d45_transit_us + d6_us;
    }
};

/// Delay statistics matching the usual reporting-table columns.
struct DelayStats {
    std::size_t n = 0;        // delivered records
    double mean_ms = 0.0;
    double min_ms = 0.0;
    double max_ms = 0.0;
    double stddev_ms = 0.0;   // sample standard deviation
    double q1_ms = 0.0;
    double q3_ms = 0.0;
    double jitter_ms = 0.0;   // mean |D_i - D_{i-1}| in generation order
    double ci95_ms = 0.0;     // 1.96 * stddev / sqrt(n)
    double loss_fraction = 0.0;
};

/// Sort records by (t, seq) and fill in the buffer delay d6: the time a
/// frame that arrived early had to sit in the realignment buffer waiting
/// for every earlier-generated frame to show up. In-order arrivals get 0.
/// Records without a reception stamp (lost frames) pass through untouched.
inline std::vector<DelayRecord> realign(std::vector<DelayRecord> records) {
    std::stable_sort(records.begin(), records.end(), [](const DelayRecord& a, const DelayRecord& b) {
        if (a.t_us != b.t_us) return a.t_us < b.t_us;
        return a.seq < b.seq;
    });
    std::int64_t latest_arrival = 0;
    bool seen = false;
    for (DelayRecord& r : records) {
        if (r.status != FrameStatus::delivered) continue;  // never arrived or undecodable
        if (seen && latest_arrival > r.t_prime_us)
            r.d6_us = latest_arrival - r.t_prime_us;
        if (!seen || r.t_prime_us > latest_arrival) {
            latest_arrival = r.t_prime_us;
            seen = true;
        }
    }
    return records;
}

/// Linear-interpolation quantile over sorted values (the numpy default).
inline double interpolated_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty set");
    if (sorted.size() == 1) return sorted[0];
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted[sorted.size() - 1];
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Aggregate delay statistics over the delivered records of a run.
/// expected_count is the number of frames the sender emitted; the gap to
/// the delivered count is the loss.
inline DelayStats compute_stats(std::span<const DelayRecord> records, std::size_t expected_count) {
    std::vector<const DelayRecord*> delivered;
    delivered.reserve(records.size());
    for (const DelayRecord& r : records)
        if (r.status == FrameStatus::delivered) delivered.push_back(&r);
    if (delivered.empty()) throw std::runtime_error("no delivered records to summarize");
    if (expected_count < delivered.size())
        throw std::invalid_argument("expected_count below the delivered count");

    std::sort(delivered.begin(), delivered.end(), [](const DelayRecord* a, const DelayRecord* b) {
        if (a->t_us != b->t_us) return a->t_us < b->t_us;
        return a->seq < b->seq;
    });

    const std::size_t n = delivered.size();
    std::vector<double> delays_ms(n);
    for (std::size_t i = 0; i < n; ++i)
        delays_ms[i] = static_cast<double>(delivered[i]->delay_us) / 1000.0;

    DelayStats st;
    st.n = n;
    double sum = 0.0;
    for (double d : delays_ms) sum += d;
    st.mean_ms = sum / static_cast<double>(n);

    double ss = 0.0;
    for (double d : delays_ms) ss += (d - st.mean_ms) * (d - st.mean_ms);
    st.stddev_ms = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;

    double jsum = 0.0;
    for (std::size_t i = 1; i < n; ++i) jsum += std::fabs(delays_ms[i] - delays_ms[i - 1]);
    st.jitter_ms = n > 1 ? jsum / static_cast<double>(n - 1) : 0.0;

    std::vector<double> sorted = delays_ms;
    std::sort(sorted.begin(), sorted.end());
    st.min_ms = sorted.front();
    st.max_ms = sorted.back();
    st.q1_ms = interpolated_quantile(sorted, 0.25);
    st.q3_ms = interpolated_quantile(sorted, 0.75);

    st.ci95_ms = 1.96 * st.stddev_ms / std::sqrt(static_cast<double>(n));
    st.loss_fraction = 1.0 - static_cast<double>(n) / static_cast<double>(expected_count);
    return st;
}

}  // namespace pmucat
