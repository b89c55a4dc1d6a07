#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pmucat/channel.hpp"
#include "pmucat/codec.hpp"
#include "pmucat/csv.hpp"
#include "pmucat/estimator.hpp"
#include "pmucat/pdc.hpp"
#include "pmucat/stats.hpp"
#include "pmucat/udp.hpp"
#include "pmucat/waveform.hpp"

namespace pmucat {

/// Bad arguments to a user-facing entry point (CLI exit code 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Full description of one end-to-end run.
struct ExperimentSpec {
    double rate_fps = 50.0;       // lambda
    double duration_s = 50.0;
    int phase_count = 1;          // 1 or 3 phasors per frame
    int frames_per_datagram = 1;  // 1, 2 or 3 concatenated frames per datagram
    int pmu_count = 1;
    std::int64_t start_soc = 1'600'000'000;  // epoch second of the first report
    std::uint64_t seed = 1;
    bool skip_first = false;      // drop each stream's first frame from the stats
    bool dump_phasors = true;

    WaveformConfig waveform;      // start_time/duration are set by the harness
    RocofMode rocof_mode = RocofMode::product;
    ChannelConfig channel;
    ScalingConfig scaling;

    // Constant device-side stages injected in simulation mode.
    std::int64_t d1_us = 500;
    std::int64_t d2_us = 1500;
    std::int64_t d3_us = 500;

    std::string output_dir;       // empty: keep results in memory only

    void validate() const {
        if (!(rate_fps > 0)) throw UsageError("rate must be > 0");
        if (duration_s < 0) throw UsageError("duration must be >= 0");
        if (phase_count != 1 && phase_count != 3) throw UsageError("phases must be 1 or 3");
        if (frames_per_datagram < 1 || frames_per_datagram > 3)
            throw UsageError("frames-per-datagram must be 1, 2 or 3");
        if (pmu_count < 1) throw UsageError("pmus must be >= 1");
        if (start_soc < 0) throw UsageError("start SOC must be >= 0");
        if (d1_us < 0 || d2_us < 0 || d3_us < 0) throw UsageError("stage delays must be >= 0");
        channel.validate();
        scaling.validate();
    }

    std::int64_t report_interval_us() const { return std::llround(1e6 / rate_fps); }
    std::int64_t report_count() const {
        const std::int64_t duration_us = std::llround(duration_s * 1e6);
        return duration_us / report_interval_us();
    }
    std::int64_t start_us() const { return start_soc * kMicrosPerSecond; }
};

struct StreamResult {
    std::uint16_t stream_id = 0;
    std::vector<Synchrophasor> phasors;
    std::vector<DelayRecord> records;   // realigned, release-stamped, one per frame
    std::vector<DelayBudget> budgets;   // indexed by seq
    DelayStats stats{};
    std::size_t expected = 0;
};

struct ExperimentResult {
    std::vector<StreamResult> streams;
    DelayStats aggregate{};
    std::size_t aggregate_expected = 0;
    std::vector<std::string> warnings;
    std::vector<std::string> files_written;
};

namespace detail {

struct DatagramTrace {
    std::vector<std::uint8_t> bytes;
    std::vector<std::size_t> member_seq;  // report indices carried
    std::int64_t newest_t_us = 0;         // timestamp of the newest member
};

inline std::int64_t warmup_us(double f0) { return 2 * std::llround(1e6 / f0); }

}  // namespace detail

/// Run the simulated pipeline: waveform -> estimator -> codec -> channel ->
/// concentrator, then realign, stamp release times and summarize.
/// Deterministic for a given spec + seed.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ExperimentResult result;
    if (spec.rate_fps < 1.0 || spec.rate_fps > 80.0)
        result.warnings.push_back("rate outside the supported envelope [1, 80] fps; running anyway");

    const std::int64_t t0 = spec.start_us();
    const std::int64_t dt = spec.report_interval_us();
    const std::int64_t n_reports = spec.report_count();
    const double f0 = spec.waveform.nominal_frequency_hz;

    // Per-stream frame generation.
    std::vector<StreamResult> streams(static_cast<std::size_t>(spec.pmu_count));
    std::vector<std::vector<detail::DatagramTrace>> datagrams(streams.size());
    std::vector<std::vector<Departure>> departures(streams.size());

    for (std::size_t s = 0; s < streams.size(); ++s) {
        StreamResult& sr = streams[s];
        sr.stream_id = static_cast<std::uint16_t>(s + 1);
        sr.expected = static_cast<std::size_t>(n_reports);
        if (n_reports == 0) continue;

        WaveformConfig wf = spec.waveform;
        const std::int64_t warmup = detail::warmup_us(f0);
        wf.start_time_us = t0 - warmup;
        wf.duration_s = spec.duration_s + static_cast<double>(warmup) * 1e-6;

        const std::vector<SampleBlock> blocks = generate(wf, mix_seed(spec.seed, 100 + s));
        const std::vector<std::int64_t> edges = square_wave_edges(wf);

        EstimatorConfig est;
        est.nominal_frequency_hz = f0;
        est.reporting_rate_fps = spec.rate_fps;
        est.rocof_mode = spec.rocof_mode;
        const ReportSeries series = report(blocks, edges, est, t0, n_reports);
        if (series.reports.size() != static_cast<std::size_t>(n_reports))
            result.warnings.push_back("stream " + std::to_string(sr.stream_id) +
                                      ": reporting grid not fully covered by samples");
        sr.phasors = series.reports;

        // Bundle consecutive frames into datagrams; a datagram departs when
        // its newest member has been generated.
        detail::DatagramTrace current;
        for (std::size_t i = 0; i < sr.phasors.size(); ++i) {
            const std::vector<std::uint8_t> frame =
                encode(sr.phasors[i], sr.stream_id, spec.scaling, spec.phase_count);
            current.bytes.insert(current.bytes.end(), frame.begin(), frame.end());
            current.member_seq.push_back(i);
            current.newest_t_us = sr.phasors[i].timestamp_us;
            if (current.member_seq.size() == static_cast<std::size_t>(spec.frames_per_datagram) ||
                i + 1 == sr.phasors.size()) {
                datagrams[s].push_back(std::move(current));
                current = {};
            }
        }
        departures[s].reserve(datagrams[s].size());
        for (std::size_t d = 0; d < datagrams[s].size(); ++d) {
            const detail::DatagramTrace& dg = datagrams[s][d];
            const std::int64_t radio_departure =
                dg.newest_t_us + spec.d1_us + spec.d2_us + spec.d3_us;
            departures[s].push_back({radio_departure, d, dg.bytes.size()});
        }
    }

    // Shared channel: one event queue, one RNG.
    ChannelConfig channel = spec.channel;
    channel.seed = mix_seed(spec.seed, 7);
    const std::vector<std::vector<TransitResult>> transits = run_streams(departures, channel);

    // Deliveries reach the concentrator in arrival order.
    struct Delivery {
        std::int64_t arrival;
        std::size_t stream;
        std::size_t dgram;
    };
    std::vector<Delivery> deliveries;
    for (std::size_t s = 0; s < streams.size(); ++s)
        for (std::size_t d = 0; d < transits[s].size(); ++d)
            if (transits[s][d].delivered) deliveries.push_back({transits[s][d].arrival_us, s, d});
    std::sort(deliveries.begin(), deliveries.end(), [](const Delivery& a, const Delivery& b) {
        if (a.arrival != b.arrival) return a.arrival < b.arrival;
        if (a.stream != b.stream) return a.stream < b.stream;
        return a.dgram < b.dgram;
    });

    Pdc pdc(spec.scaling);
    std::vector<std::vector<DelayRecord>> ingested(streams.size());
    for (const Delivery& dv : deliveries) {
        for (DelayRecord rec : pdc.ingest(datagrams[dv.stream][dv.dgram].bytes, dv.arrival)) {
            // Sequence numbers follow the reporting grid, not arrival order.
            rec.seq = static_cast<std::uint64_t>(
                std::llround(static_cast<double>(rec.t_us - t0) / static_cast<double>(dt)) - 1);
            ingested[dv.stream].push_back(rec);
        }
    }

    // Per-stream records: delivered + lost, realigned, release-stamped.
    for (std::size_t s = 0; s < streams.size(); ++s) {
        StreamResult& sr = streams[s];
        std::vector<DelayRecord> records = ingested[s];
        sr.budgets.assign(sr.phasors.size(), DelayBudget{});

        for (std::size_t d = 0; d < transits[s].size(); ++d) {
            const detail::DatagramTrace& dg = datagrams[s][d];
            for (std::size_t seq : dg.member_seq) {
                DelayBudget& budget = sr.budgets[seq];
                budget.d1_us = spec.d1_us;
                budget.d2_us = spec.d2_us;
                // Bundled frames queue until the datagram's newest member exists.
                budget.d3_us = spec.d3_us + (dg.newest_t_us - sr.phasors[seq].timestamp_us);
                budget.d4_wait_us = transits[s][d].si_wait_us;
                budget.d45_transit_us = transits[s][d].transit_us;
                if (!transits[s][d].delivered) {
                    DelayRecord lost;
                    lost.stream_id = sr.stream_id;
                    lost.seq = seq;
                    lost.t_us = sr.phasors[seq].timestamp_us;
                    lost.size_bytes = static_cast<std::uint32_t>(
                        frame_size_for_phases(spec.phase_count));
                    lost.status = FrameStatus::lost;
                    records.push_back(lost);
                }
            }
        }

        records = realign(std::move(records));
        for (DelayRecord& r : records) {
            if (r.status != FrameStatus::delivered) continue;
            // The concentrator releases a frame once everything generated
            // before it has arrived; the release stamp is what t' means here.
            r.t_prime_us += r.d6_us;
            r.delay_us += r.d6_us;
            if (r.seq < sr.budgets.size()) sr.budgets[r.seq].d6_us = r.d6_us;
        }
        sr.records = std::move(records);

        std::vector<DelayRecord> for_stats;
        for_stats.reserve(sr.records.size());
        for (const DelayRecord& r : sr.records)
            if (!(spec.skip_first && r.seq == 0)) for_stats.push_back(r);
        std::size_t expected = sr.expected - (spec.skip_first && sr.expected > 0 ? 1 : 0);
        if (!for_stats.empty() &&
            std::any_of(for_stats.begin(), for_stats.end(),
                        [](const DelayRecord& r) { return r.status == FrameStatus::delivered; })) {
            sr.stats = compute_stats(for_stats, expected);
        }
    }

    // Aggregate over all streams.
    std::vector<DelayRecord> all;
    std::size_t all_expected = 0;
    for (const StreamResult& sr : streams) {
        for (const DelayRecord& r : sr.records)
            if (!(spec.skip_first && r.seq == 0)) all.push_back(r);
        all_expected += sr.expected - (spec.skip_first && sr.expected > 0 ? 1 : 0);
    }
    result.aggregate_expected = all_expected;
    if (std::any_of(all.begin(), all.end(),
                    [](const DelayRecord& r) { return r.status == FrameStatus::delivered; }))
        result.aggregate = compute_stats(all, all_expected);

    result.streams = std::move(streams);

    if (!spec.output_dir.empty()) {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(spec.output_dir, ec);
        if (ec || !fs::is_directory(spec.output_dir))
            throw std::runtime_error("cannot create output directory " + spec.output_dir);

        std::sort(all.begin(), all.end(), [](const DelayRecord& a, const DelayRecord& b) {
            if (a.t_us != b.t_us) return a.t_us < b.t_us;
            if (a.stream_id != b.stream_id) return a.stream_id < b.stream_id;
            return a.seq < b.seq;
        });
        const std::string records_path = (fs::path(spec.output_dir) / "records.csv").string();
        write_records_csv(records_path, all);
        result.files_written.push_back(records_path);

        const std::string stats_path = (fs::path(spec.output_dir) / "stats.csv").string();
        {
            std::ofstream out(stats_path);
            if (!out) throw std::runtime_error("cannot write " + stats_path);
            out << kStatsCsvHeader << '\n';
            for (const StreamResult& sr : result.streams)
                if (sr.stats.n > 0)
                    out << stats_csv_line(std::to_string(sr.stream_id), sr.stats,
                                          sr.expected - (spec.skip_first && sr.expected > 0 ? 1 : 0))
                        << '\n';
            if (result.aggregate.n > 0)
                out << stats_csv_line("all", result.aggregate, all_expected) << '\n';
        }
        result.files_written.push_back(stats_path);

        if (spec.dump_phasors) {
            for (const StreamResult& sr : result.streams) {
                const std::string path =
                    (fs::path(spec.output_dir) / ("phasors_" + std::to_string(sr.stream_id) + ".csv"))
                        .string();
                write_phasor_csv(path, sr.phasors);
                result.files_written.push_back(path);
            }
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Figure datasets

struct FigureParams {
    double si_window_ms = 80.0;
    double si_grid_offset_ms = 22.5;
    std::int64_t d123_us = 2500;  // device-side stages ahead of the radio
};

/// SI-grant group a frame generated at t_us belongs to: the index of the
/// grid instant that serves its uplink transmission.
inline std::int64_t si_group_of(std::int64_t t_us, const FigureParams& p) {
    const std::int64_t w = std::llround(p.si_window_ms * 1000.0);
    const std::int64_t off = std::llround(p.si_grid_offset_ms * 1000.0);
    const std::int64_t dep = t_us + p.d123_us;
    const std::int64_t wait = (floor_mod(dep - off, w) == 0) ? 0 : w - floor_mod(dep - off, w);
    const std::int64_t boundary = dep + wait;
    return (boundary - off) / w;
}

/// Write one figure dataset from a set of delay records (figures 5-7) or a
/// phasor series (figures 4a-4d).
inline void emit_figure_data(const std::vector<DelayRecord>& records,
                             const std::vector<Synchrophasor>& phasors,
                             const std::string& figure_id, const std::string& out_path,
                             const FigureParams& params = {}) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);

    if (figure_id == "4a" || figure_id == "4b" || figure_id == "4c" || figure_id == "4d") {
        if (phasors.empty()) throw UsageError("figure " + figure_id + " needs a phasor series");
        const char* column = figure_id == "4a"   ? "v"
                             : figure_id == "4b" ? "phi"
                             : figure_id == "4c" ? "f"
                                                 : "rho";
        out << "t_us," << column << '\n';
        for (const Synchrophasor& s : phasors) {
            const double value = figure_id == "4a"   ? s.magnitude_v
                                 : figure_id == "4b" ? s.phase_rad
                                 : figure_id == "4c" ? s.frequency_hz
                                                     : s.rocof;
            out << s.timestamp_us << ',' << format_double(value, 9) << '\n';
        }
        return;
    }

    std::vector<const DelayRecord*> delivered;
    for (const DelayRecord& r : records)
        if (r.status == FrameStatus::delivered) delivered.push_back(&r);
    if (delivered.empty()) throw UsageError("figure " + figure_id + " needs delivered records");

    if (figure_id == "5") {
        // 1 ms histogram bins over the delays.
        std::map<std::int64_t, std::size_t> bins;
        for (const DelayRecord* r : delivered) ++bins[r->delay_us / 1000];
        out << "bin_start_ms,count\n";
        const std::int64_t lo = bins.begin()->first;
        const std::int64_t hi = bins.rbegin()->first;
        for (std::int64_t b = lo; b <= hi; ++b) {
            auto it = bins.find(b);
            out << b << ',' << (it == bins.end() ? 0 : it->second) << '\n';
        }
    } else if (figure_id == "6") {
        out << "t_us,delay_ms\n";
        for (const DelayRecord* r : delivered)
            out << r->t_us << ',' << format_double(static_cast<double>(r->delay_us) / 1000.0, 3)
                << '\n';
    } else if (figure_id == "7") {
        out << "t_us,t_prime_us,group\n";
        std::int64_t first_group = si_group_of(delivered.front()->t_us, params);
        for (const DelayRecord* r : delivered)
            first_group = std::min(first_group, si_group_of(r->t_us, params));
        for (const DelayRecord* r : delivered)
            out << r->t_us << ',' << r->t_prime_us << ','
                << (si_group_of(r->t_us, params) - first_group) << '\n';
    } else {
        throw UsageError("unknown figure id: " + figure_id);
    }
}

// ---------------------------------------------------------------------------
// Real-network modes

inline std::int64_t wall_clock_us() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

/// UDP server: receive datagrams, ingest them, append delay records to a
/// CSV and emit a stats snapshot periodically. Runs until `stop` is set.
struct ServeReport {
    Pdc::Counters counters;
    std::size_t records_written = 0;
};

inline ServeReport serve_udp(const std::string& bind_endpoint, const std::string& output_path,
                             std::atomic<bool>& stop, const ScalingConfig& scaling = {},
                             double snapshot_period_s = 5.0) {
    UdpSocket sock;
    sock.bind(bind_endpoint);  // throws on failure: startup error
    sock.set_receive_timeout_ms(200);

    std::ofstream out(output_path);
    if (!out) throw std::runtime_error("cannot write " + output_path);
    out << kRecordsCsvHeader << '\n';
    out.flush();

    Pdc pdc(scaling);
    std::vector<DelayRecord> session;
    ServeReport report;
    auto last_snapshot = std::chrono::steady_clock::now();

    while (!stop.load(std::memory_order_relaxed)) {
        const std::vector<std::uint8_t> datagram = sock.receive();
        if (!datagram.empty()) {
            const std::int64_t now = wall_clock_us();
            for (const DelayRecord& rec : pdc.ingest(datagram, now)) {
                out << record_csv_line(rec) << '\n';
                session.push_back(rec);
                ++report.records_written;
            }
            out.flush();
        }
        const auto now = std::chrono::steady_clock::now();
        if (std::chrono::duration<double>(now - last_snapshot).count() >= snapshot_period_s) {
            last_snapshot = now;
            const bool any_delivered =
                std::any_of(session.begin(), session.end(), [](const DelayRecord& r) {
                    return r.status == FrameStatus::delivered;
                });
            if (any_delivered) {
                // Loss is not observable server-side; expected == delivered.
                const std::vector<DelayRecord> aligned = realign(session);
                const DelayStats st = compute_stats(aligned, aligned.size());
                std::ofstream snap(output_path + ".stats.csv");
                snap << kStatsCsvHeader << '\n';
                snap << stats_csv_line("live", st, aligned.size()) << '\n';
            }
        }
    }
    report.counters = pdc.counters();
    return report;
}

/// UDP client: drive the simulated estimator pipeline and send its frames
/// to a real server. Timestamps are taken from the wall clock at frame
/// creation; departures follow absolute deadlines so the rate cannot drift.
struct ClientReport {
    std::size_t frames_sent = 0;
    std::size_t datagrams_sent = 0;
};

inline ClientReport run_udp_client(const ExperimentSpec& spec, const std::string& server_endpoint) {
    spec.validate();
    const sockaddr_in dest = resolve_endpoint(server_endpoint);
    UdpSocket sock;

    // Phasor values come from the simulated front end; only the timestamps
    // are live.
    ExperimentSpec gen = spec;
    gen.output_dir.clear();
    gen.pmu_count = 1;
    ExperimentResult sim = run_experiment(gen);
    const std::vector<Synchrophasor>& series = sim.streams.at(0).phasors;

    const std::int64_t dt = spec.report_interval_us();
    const auto start = std::chrono::steady_clock::now();
    ClientReport report;
    std::vector<std::uint8_t> bundle;
    std::size_t in_bundle = 0;

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto deadline = start + std::chrono::microseconds(static_cast<std::int64_t>(i + 1) * dt);
        std::this_thread::sleep_until(deadline);

        Synchrophasor s = series[i];
        s.timestamp_us = wall_clock_us();
        const std::vector<std::uint8_t> frame =
            encode(s, 1, spec.scaling, spec.phase_count);
        bundle.insert(bundle.end(), frame.begin(), frame.end());
        ++in_bundle;
        ++report.frames_sent;

        if (in_bundle == static_cast<std::size_t>(spec.frames_per_datagram) ||
            i + 1 == series.size()) {
            sock.send_to(bundle, dest);
            ++report.datagrams_sent;
            bundle.clear();
            in_bundle = 0;
        }
    }
    return report;
}

}  // namespace pmucat
