#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmucat/estimator.hpp"
#include "pmucat/stats.hpp"

namespace pmucat {

inline constexpr const char* kRecordsCsvHeader =
    "stream_id,seq,t_us,t_prime_us,delay_us,size,status";
inline constexpr const char* kStatsCsvHeader =
    "stream,n,expected,mean_ms,min_ms,max_ms,stddev_ms,q1_ms,q3_ms,jitter_ms,ci95_ms,loss_fraction";
inline constexpr const char* kPhasorCsvHeader = "t_us,v,phi,f,rho";

inline std::string format_double(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
    return buf;
}

inline std::string record_csv_line(const DelayRecord& r) {
    std::ostringstream os;
    os << r.stream_id << ',' << r.seq << ',' << r.t_us << ',' << r.t_prime_us << ','
       << r.delay_us << ',' << r.size_bytes << ',' << to_string(r.status);
    return os.str();
}

inline void write_records_csv(const std::string& path, const std::vector<DelayRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kRecordsCsvHeader << '\n';
    for (const DelayRecord& r : records) out << record_csv_line(r) << '\n';
}

inline std::string stats_csv_line(const std::string& label, const DelayStats& st,
                                  std::size_t expected) {
    std::ostringstream os;
    os << label << ',' << st.n << ',' << expected << ',' << format_double(st.mean_ms) << ','
       << format_double(st.min_ms) << ',' << format_double(st.max_ms) << ','
       << format_double(st.stddev_ms) << ',' << format_double(st.q1_ms) << ','
       << format_double(st.q3_ms) << ',' << format_double(st.jitter_ms) << ','
       << format_double(st.ci95_ms) << ',' << format_double(st.loss_fraction);
    return os.str();
}

inline void write_phasor_csv(const std::string& path, const std::vector<Synchrophasor>& reports) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << kPhasorCsvHeader << '\n';
    for (const Synchrophasor& s : reports) {
        out << s.timestamp_us << ',' << format_double(s.magnitude_v, 9) << ','
            << format_double(s.phase_rad, 9) << ',' << format_double(s.frequency_hz, 9) << ','
            << format_double(s.rocof, 9) << '\n';
    }
}

inline FrameStatus frame_status_from_string(const std::string& s) {
    if (s == "delivered") return FrameStatus::delivered;
    if (s == "lost") return FrameStatus::lost;
    if (s == "integrity_failure") return FrameStatus::integrity_failure;
    throw std::runtime_error("unknown frame status: " + s);
}

/// Read back a records CSV written by write_records_csv.
inline std::vector<DelayRecord> read_records_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty records file: " + path);
    std::vector<DelayRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string field;
        DelayRecord r;
        auto next = [&](const char* what) {
            if (!std::getline(is, field, ',')) throw std::runtime_error(std::string("missing ") + what);
            return field;
        };
        r.stream_id = static_cast<std::uint16_t>(std::stoul(next("stream_id")));
        r.seq = std::stoull(next("seq"));
        r.t_us = std::stoll(next("t_us"));
        r.t_prime_us = std::stoll(next("t_prime_us"));
        r.delay_us = std::stoll(next("delay_us"));
        r.size_bytes = static_cast<std::uint32_t>(std::stoul(next("size")));
        r.status = frame_status_from_string(next("status"));
        records.push_back(r);
    }
    return records;
}

/// Read back a phasor CSV written by write_phasor_csv.
inline std::vector<Synchrophasor> read_phasor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty phasor file: " + path);
    std::vector<Synchrophasor> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string field;
        Synchrophasor s;
        std::getline(is, field, ',');
        s.timestamp_us = std::stoll(field);
        std::getline(is, field, ',');
        s.magnitude_v = std::stod(field);
        std::getline(is, field, ',');
        s.phase_rad = std::stod(field);
        std::getline(is, field, ',');
        s.frequency_hz = std::stod(field);
        std::getline(is, field, ',');
        s.rocof = std::stod(field);
        out.push_back(s);
    }
    return out;
}

}  // namespace pmucat
