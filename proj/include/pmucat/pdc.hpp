#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pmucat/codec.hpp"
#include "pmucat/stats.hpp"

namespace pmucat {

/// Phasor Data Concentrator ingestion: splits datagrams into frames,
/// verifies and decodes them, stamps the reception time and computes the
/// end-to-end delay per frame. Undecodable pieces become
/// integrity_failure records; they are counted, never fatal.
class Pdc {
public:
    explicit Pdc(ScalingConfig scaling = {}) : scaling_(scaling) {}

    struct Counters {
        std::uint64_t datagrams = 0;
        std::uint64_t frames_ok = 0;
        std::uint64_t crc_failures = 0;
        std::uint64_t malformed = 0;
    };

    std::vector<DelayRecord> ingest(std::span<const std::uint8_t> datagram,
                                    std::int64_t reception_us) {
        ++counters_.datagrams;
        std::vector<DelayRecord> records;
        for (auto piece : split_frames(datagram)) {
            DelayRecord rec;
            rec.t_prime_us = reception_us;
            rec.size_bytes = static_cast<std::uint32_t>(piece.size());
            const Decoded d = decode(piece);
            if (d.status == DecodeStatus::ok) {
                ++counters_.frames_ok;
                rec.stream_id = d.frame.idcode;
                rec.seq = next_seq_[d.frame.idcode]++;
                rec.t_us = d.frame.timestamp_us(scaling_);
                rec.delay_us = reception_us - rec.t_us;
                rec.status = FrameStatus::delivered;
            } else {
                d.status == DecodeStatus::integrity_failure ? ++counters_.crc_failures
                                                            : ++counters_.malformed;
                rec.status = FrameStatus::integrity_failure;
            }
            records.push_back(rec);
        }
        return records;
    }

    const Counters& counters() const { return counters_; }
    const ScalingConfig& scaling() const { return scaling_; }

private:
    ScalingConfig scaling_;
    Counters counters_;
    std::map<std::uint16_t, std::uint64_t> next_seq_;
};

}  // namespace pmucat
