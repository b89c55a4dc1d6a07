#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmucat/estimator.hpp"
#include "pmucat/util.hpp"

namespace pmucat {

// Data-frame wire layout, all fields big-endian, fixed 16-bit formats:
//   SYNC(2) FRAMESIZE(2) IDCODE(2) SOC(4) FRACSEC(4) STAT(2)
//   { MAG(2) ANGLE(2) FREQ(2) DFREQ(2) } per phase
//   CHK(2)
// 26 bytes for one phase, 42 bytes for three.
inline constexpr std::uint8_t kSyncLead = 0xAA;
inline constexpr std::uint8_t kSyncDataV1 = 0x01;
inline constexpr std::size_t kFrameOverhead = 18;
inline constexpr std::size_t kBytesPerPhase = 8;

inline constexpr std::size_t frame_size_for_phases(int phase_count) {
    return kFrameOverhead + kBytesPerPhase * static_cast<std::size_t>(phase_count);
}

/// CRC-CCITT: x^16 + x^12 + x^5 + 1, initial value 0xFFFF, no reflection,
/// no final XOR. crc16("123456789") == 0x29B1.
inline std::uint16_t crc16(std::span<const std::uint8_t> data) {
    std::uint16_t crc = 0xFFFF;
    for (std::uint8_t byte : data) {
        std::uint16_t c1 = static_cast<std::uint16_t>((crc >> 8) ^ byte);
        crc = static_cast<std::uint16_t>(crc << 8);
        std::uint16_t c2 = static_cast<std::uint16_t>(c1 ^ (c1 >> 4));
        crc ^= c2;
        c2 = static_cast<std::uint16_t>(c2 << 5);
        crc ^= c2;
        c2 = static_cast<std::uint16_t>(c2 << 7);
        crc ^= c2;
    }
    return crc;
}

/// Out-of-band scaling shared by encoder and decoder. The wire carries only
/// fixed-point integers; these factors map them back to engineering units.
struct ScalingConfig {
    double phunit_v = 2.0 / 65535.0;        // volts per magnitude count
    std::uint32_t time_base = 1'000'000;    // FRACSEC ticks per second
    double nominal_frequency_hz = 50.0;     // FREQ field is the deviation from this

    void validate() const {
        if (!(phunit_v > 0)) throw std::invalid_argument("phunit must be > 0");
        if (time_base == 0 || time_base > 0xFFFFFF)
            throw std::invalid_argument("time_base must fit the 24-bit FRACSEC count");
        if (!(nominal_frequency_hz > 0)) throw std::invalid_argument("nominal frequency must be > 0");
    }
};

/// A decoded data frame, raw field values as carried on the wire.
struct DataFrame {
    std::uint16_t sync = 0;
    std::uint16_t frame_size = 0;
    std::uint16_t idcode = 0;
    std::uint32_t soc = 0;
    std::uint8_t time_quality = 0;
    std::uint32_t fracsec_count = 0;  // 24-bit fraction of second
    std::uint16_t stat = 0;
    int phase_count = 0;
    std::uint16_t magnitude_counts[3] = {0, 0, 0};
    std::int16_t angle_e4[3] = {0, 0, 0};   // radians * 1e4
    std::int16_t freq_mdev[3] = {0, 0, 0};  // millihertz deviation from f0
    std::int16_t dfreq_c[3] = {0, 0, 0};    // rocof * 100
    std::uint16_t chk = 0;

    std::int64_t timestamp_us(const ScalingConfig& sc) const {
        const std::int64_t frac_us = std::llround(
            static_cast<double>(fracsec_count) * 1e6 / static_cast<double>(sc.time_base));
        return static_cast<std::int64_t>(soc) * kMicrosPerSecond + frac_us;
    }
    double magnitude_v(int phase, const ScalingConfig& sc) const {
        return magnitude_counts[phase] * sc.phunit_v;
    }
    double angle_rad(int phase) const { return angle_e4[phase] * 1e-4; }
    double frequency_hz(int phase, const ScalingConfig& sc) const {
        return sc.nominal_frequency_hz + freq_mdev[phase] * 1e-3;
    }
    double rocof(int phase) const { return dfreq_c[phase] * 1e-2; }
};

namespace wire {

inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v & 0xFF));
}
inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 24));
    b.push_back(static_cast<std::uint8_t>((v >> 16) & 0xFF));
    b.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
    b.push_back(static_cast<std::uint8_t>(v & 0xFF));
}
inline std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>((b[off] << 8) | b[off + 1]);
}
inline std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) | b[off + 3];
}

}  // namespace wire

/// Encode one synchrophasor as a data frame. For phase_count == 3, phases
/// B and C carry the phase-A phasor shifted by -120 and +120 degrees; the
/// frequency pair is replicated.
inline std::vector<std::uint8_t> encode(const Synchrophasor& s, std::uint16_t idcode,
                                        const ScalingConfig& sc, int phase_count = 1) {
    sc.validate();
    if (phase_count != 1 && phase_count != 3)
        throw std::invalid_argument("phase_count must be 1 or 3");
    if (s.timestamp_us < 0) throw std::range_error("timestamp precedes the epoch");
    if (s.magnitude_v < 0) throw std::range_error("magnitude must be >= 0");

    const std::int64_t mag_counts = std::llround(s.magnitude_v / sc.phunit_v);
    if (mag_counts > 0xFFFF) throw std::range_error("magnitude overflows the 16-bit field");

    std::int64_t soc = s.timestamp_us / kMicrosPerSecond;
    std::int64_t frac_ticks = std::llround(
        static_cast<double>(s.timestamp_us % kMicrosPerSecond) *
        static_cast<double>(sc.time_base) * 1e-6);
    if (frac_ticks >= sc.time_base) {  // rounding carried into the next second
        frac_ticks -= sc.time_base;
        ++soc;
    }
    if (soc > 0xFFFFFFFFLL) throw std::range_error("SOC overflows 32 bits");

    const std::int64_t freq_mdev = std::llround((s.frequency_hz - sc.nominal_frequency_hz) * 1000.0);
    if (freq_mdev < -32768 || freq_mdev > 32767)
        throw std::range_error("frequency deviation overflows the 16-bit field");
    const std::int64_t dfreq_c = std::llround(s.rocof * 100.0);
    if (dfreq_c < -32768 || dfreq_c > 32767)
        throw std::range_error("rocof overflows the 16-bit field");

    static constexpr double kPhaseShift[3] = {0.0, -kTwoPi / 3.0, kTwoPi / 3.0};

    std::vector<std::uint8_t> b;
    b.reserve(frame_size_for_phases(phase_count));
    b.push_back(kSyncLead);
    b.push_back(kSyncDataV1);
    wire::put_u16(b, static_cast<std::uint16_t>(frame_size_for_phases(phase_count)));
    wire::put_u16(b, idcode);
    wire::put_u32(b, static_cast<std::uint32_t>(soc));
    wire::put_u32(b, static_cast<std::uint32_t>(frac_ticks) & 0xFFFFFF);  // time quality 0
    wire::put_u16(b, 0x0000);                                             // STAT
    for (int p = 0; p < phase_count; ++p) {
        const double angle = wrap_angle(s.phase_rad + kPhaseShift[p]);
        wire::put_u16(b, static_cast<std::uint16_t>(mag_counts));
        wire::put_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::llround(angle * 1e4))));
        wire::put_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(freq_mdev)));
        wire::put_u16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(dfreq_c)));
    }
    wire::put_u16(b, crc16(b));
    return b;
}

enum class DecodeStatus {
    ok,
    malformed_frame,    // bad sync word or an impossible frame size
    truncated_frame,    // FRAMESIZE does not match the bytes presented
    integrity_failure,  // CRC mismatch; the frame counts as lost
};

inline const char* to_string(DecodeStatus s) {
    switch (s) {
        case DecodeStatus::ok: return "ok";
        case DecodeStatus::malformed_frame: return "malformed_frame";
        case DecodeStatus::truncated_frame: return "truncated_frame";
        case DecodeStatus::integrity_failure: return "integrity_failure";
    }
    return "?";
}

struct Decoded {
    DecodeStatus status = DecodeStatus::malformed_frame;
    DataFrame frame;  // valid only when status == ok
};

/// Decode a single data frame. The input must be exactly one frame.
inline Decoded decode(std::span<const std::uint8_t> bytes) {
    Decoded out;
    if (bytes.size() < 4) {
        out.status = DecodeStatus::truncated_frame;
        return out;
    }
    if (bytes[0] != kSyncLead || bytes[1] != kSyncDataV1) {
        out.status = DecodeStatus::malformed_frame;
        return out;
    }
    const std::uint16_t claimed = wire::get_u16(bytes, 2);
    if (claimed != bytes.size()) {
        out.status = DecodeStatus::truncated_frame;
        return out;
    }
    if (claimed != frame_size_for_phases(1) && claimed != frame_size_for_phases(3)) {
        out.status = DecodeStatus::malformed_frame;
        return out;
    }
    const std::uint16_t stored = wire::get_u16(bytes, bytes.size() - 2);
    if (crc16(bytes.first(bytes.size() - 2)) != stored) {
        out.status = DecodeStatus::integrity_failure;
        return out;
    }

    DataFrame& f = out.frame;
    f.sync = wire::get_u16(bytes, 0);
    f.frame_size = claimed;
    f.idcode = wire::get_u16(bytes, 4);
    f.soc = wire::get_u32(bytes, 6);
    const std::uint32_t fracsec = wire::get_u32(bytes, 10);
    f.time_quality = static_cast<std::uint8_t>(fracsec >> 24);
    f.fracsec_count = fracsec & 0xFFFFFF;
    f.stat = wire::get_u16(bytes, 14);
    f.phase_count = static_cast<int>((claimed - kFrameOverhead) / kBytesPerPhase);
    std::size_t off = 16;
    for (int p = 0; p < f.phase_count; ++p) {
        f.magnitude_counts[p] = wire::get_u16(bytes, off);
        f.angle_e4[p] = static_cast<std::int16_t>(wire::get_u16(bytes, off + 2));
        f.freq_mdev[p] = static_cast<std::int16_t>(wire::get_u16(bytes, off + 4));
        f.dfreq_c[p] = static_cast<std::int16_t>(wire::get_u16(bytes, off + 6));
        off += kBytesPerPhase;
    }
    f.chk = stored;
    out.status = DecodeStatus::ok;
    return out;
}

/// Split a datagram that may carry several concatenated frames on
/// FRAMESIZE boundaries. A remainder that cannot hold a frame is returned
/// as a final undersized piece so the caller can count it.
inline std::vector<std::span<const std::uint8_t>> split_frames(std::span<const std::uint8_t> datagram) {
    std::vector<std::span<const std::uint8_t>> pieces;
    std::size_t off = 0;
    while (off < datagram.size()) {
        const std::size_t remaining = datagram.size() - off;
        if (remaining < kFrameOverhead + kBytesPerPhase) {
            pieces.push_back(datagram.subspan(off));
            break;
        }
        const std::uint16_t size = wire::get_u16(datagram, off + 2);
        if (size < kFrameOverhead + kBytesPerPhase || size > remaining) {
            pieces.push_back(datagram.subspan(off));
            break;
        }
        pieces.push_back(datagram.subspan(off, size));
        off += size;
    }
    return pieces;
}

/// Annotated hex dump of a datagram, for the CLI debugging subcommand.
inline std::string hex_dump(std::span<const std::uint8_t> datagram) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    int index = 0;
    for (auto piece : split_frames(datagram)) {
        out += "frame " + std::to_string(index++) + " (" + std::to_string(piece.size()) + " bytes)";
        const Decoded d = decode(piece);
        out += std::string(" [") + to_string(d.status) + "]\n";
        for (std::size_t i = 0; i < piece.size(); ++i) {
            if (i % 16 == 0) out += "  ";
            out += digits[piece[i] >> 4];
            out += digits[piece[i] & 0xF];
            out += (i % 16 == 15 || i + 1 == piece.size()) ? '\n' : ' ';
        }
        if (d.status == DecodeStatus::ok) {
            out += "  idcode=" + std::to_string(d.frame.idcode);
            out += " soc=" + std::to_string(d.frame.soc);
            out += " fracsec=" + std::to_string(d.frame.fracsec_count);
            out += " phases=" + std::to_string(d.frame.phase_count);
            out += " chk=0x";
            out += digits[(d.frame.chk >> 12) & 0xF];
            out += digits[(d.frame.chk >> 8) & 0xF];
            out += digits[(d.frame.chk >> 4) & 0xF];
            out += digits[d.frame.chk & 0xF];
            out += '\n';
        }
    }
    return out;
}

}  // namespace pmucat
