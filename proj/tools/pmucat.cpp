// pmucat: synchrophasor pipeline over a simulated (or real) LTE cat-M uplink.
//
// Subcommands:
//   simulate    end-to-end simulated run, writes delay records and stats CSVs
//   udp-client  stream frames to a real UDP concentrator
//   udp-server  receive frames, stamp and log delay records
//   report      turn run outputs into plot-ready figure datasets
//   hexdump     annotated dump of an encoded datagram
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmucat/experiment.hpp"
#include "pmucat/kvconfig.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

struct CliOptions {
    pmucat::ExperimentSpec spec;
    std::string config_path;
    std::string loss_spec;
    std::string rocof_mode = "product";
    std::string server_endpoint;
    std::string bind_endpoint = "0.0.0.0:4712";
    std::string in_path;
    std::string out_path;
    std::string figure;
    double snapshot_period_s = 5.0;
    pmucat::FigureParams figure_params;
};

void parse_loss_table(const std::string& text, std::map<std::size_t, double>& table) {
    table.clear();
    std::istringstream is(text);
    std::string pair;
    while (std::getline(is, pair, ',')) {
        const auto colon = pair.find(':');
        if (colon == std::string::npos)
            throw pmucat::UsageError("loss table entries look like SIZE:PROB");
        table[static_cast<std::size_t>(std::stoul(pair.substr(0, colon)))] =
            std::stod(pair.substr(colon + 1));
    }
}

// Fill spec fields from a key=value file for every option the user did not
// pass on the command line. Flags always win.
void apply_config_file(const pmucat::KvConfig& kv, CLI::App* cmd, CliOptions& o) {
    auto absent = [&](const std::string& flag) {
        const CLI::Option* opt = cmd->get_option_no_throw(flag);
        return opt == nullptr || opt->count() == 0;
    };
    auto& spec = o.spec;
    if (absent("--rate")) spec.rate_fps = kv.get_double("rate", spec.rate_fps);
    if (absent("--duration")) spec.duration_s = kv.get_double("duration", spec.duration_s);
    if (absent("--phases")) spec.phase_count = static_cast<int>(kv.get_int("phases", spec.phase_count));
    if (absent("--frames-per-datagram"))
        spec.frames_per_datagram =
            static_cast<int>(kv.get_int("frames_per_datagram", spec.frames_per_datagram));
    if (absent("--pmus")) spec.pmu_count = static_cast<int>(kv.get_int("pmus", spec.pmu_count));
    if (absent("--seed")) spec.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(spec.seed)));
    if (absent("--start-soc")) spec.start_soc = kv.get_int("start_soc", spec.start_soc);
    if (absent("--f0"))
        spec.waveform.nominal_frequency_hz = kv.get_double("f0", spec.waveform.nominal_frequency_hz);
    if (absent("--frequency"))
        spec.waveform.actual_frequency_hz = kv.get_double("frequency", spec.waveform.actual_frequency_hz);
    if (absent("--amplitude"))
        spec.waveform.amplitude_v = kv.get_double("amplitude", spec.waveform.amplitude_v);
    if (absent("--noise"))
        spec.waveform.noise_stddev_v = kv.get_double("noise", spec.waveform.noise_stddev_v);
    if (absent("--si-window"))
        spec.channel.si_window_ms = kv.get_double("si_window_ms", spec.channel.si_window_ms);
    if (absent("--si-offset"))
        spec.channel.si_grid_offset_ms = kv.get_double("si_offset_ms", spec.channel.si_grid_offset_ms);
    if (absent("--base-delay-mean"))
        spec.channel.base_delay_mean_ms = kv.get_double("base_delay_mean_ms", spec.channel.base_delay_mean_ms);
    if (absent("--base-delay-stddev"))
        spec.channel.base_delay_stddev_ms =
            kv.get_double("base_delay_stddev_ms", spec.channel.base_delay_stddev_ms);
    if (absent("--base-delay-min"))
        spec.channel.base_delay_min_ms = kv.get_double("base_delay_min_ms", spec.channel.base_delay_min_ms);
    if (absent("--setup-delay"))
        spec.channel.first_frame_setup_ms =
            kv.get_double("setup_delay_ms", spec.channel.first_frame_setup_ms);
    if (absent("--d1")) spec.d1_us = kv.get_int("d1_us", spec.d1_us);
    if (absent("--d2")) spec.d2_us = kv.get_int("d2_us", spec.d2_us);
    if (absent("--d3")) spec.d3_us = kv.get_int("d3_us", spec.d3_us);
    if (absent("--loss") && kv.has("loss")) parse_loss_table(kv.get("loss", ""), spec.channel.loss_prob_by_size);
    if (absent("--skip-first") && kv.has("skip_first"))
        spec.skip_first = kv.get_int("skip_first", 0) != 0;
}

void add_pipeline_options(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--rate,-r", o.spec.rate_fps, "Reporting rate (frames/s)");
    cmd->add_option("--duration,-d", o.spec.duration_s, "Run length in seconds");
    cmd->add_option("--phases", o.spec.phase_count, "Phasors per frame (1 or 3)");
    cmd->add_option("--frames-per-datagram", o.spec.frames_per_datagram,
                    "Concatenated frames per UDP datagram (1-3)");
    cmd->add_option("--seed", o.spec.seed, "Master random seed");
    cmd->add_option("--start-soc", o.spec.start_soc, "Epoch second of the first report");
    cmd->add_option("--f0", o.spec.waveform.nominal_frequency_hz, "Nominal frequency (50 or 60)");
    cmd->add_option("--frequency", o.spec.waveform.actual_frequency_hz, "Actual signal frequency");
    cmd->add_option("--amplitude", o.spec.waveform.amplitude_v, "Signal amplitude (V)");
    cmd->add_option("--noise", o.spec.waveform.noise_stddev_v, "Additive noise stddev (V)");
    cmd->add_option("--rocof-mode", o.rocof_mode, "product|derivative");
    cmd->add_option("--config", o.config_path, "key=value config file; flags override it");
}

void add_channel_options(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--si-window", o.spec.channel.si_window_ms, "SI grant period (ms, 20-200)");
    cmd->add_option("--si-offset", o.spec.channel.si_grid_offset_ms, "SI grid phase (ms)");
    cmd->add_option("--base-delay-mean", o.spec.channel.base_delay_mean_ms, "Transit mean (ms)");
    cmd->add_option("--base-delay-stddev", o.spec.channel.base_delay_stddev_ms, "Transit stddev (ms)");
    cmd->add_option("--base-delay-min", o.spec.channel.base_delay_min_ms, "Transit floor (ms)");
    cmd->add_option("--setup-delay", o.spec.channel.first_frame_setup_ms,
                    "Extra delay on each stream's first frame (ms)");
    cmd->add_option("--loss", o.loss_spec, "Loss table, e.g. 26:0,42:0.002,52:0.006,78:0.033");
    cmd->add_option("--d1", o.spec.d1_us, "Sampling/computation stage (us)");
    cmd->add_option("--d2", o.spec.d2_us, "Inter-controller transfer stage (us)");
    cmd->add_option("--d3", o.spec.d3_us, "Frame creation/handoff stage (us)");
}

void finish_spec(CLI::App* cmd, CliOptions& o) {
    if (!o.config_path.empty()) apply_config_file(pmucat::KvConfig::load(o.config_path), cmd, o);
    if (!o.loss_spec.empty()) parse_loss_table(o.loss_spec, o.spec.channel.loss_prob_by_size);
    if (o.rocof_mode == "product") {
        o.spec.rocof_mode = pmucat::RocofMode::product;
    } else if (o.rocof_mode == "derivative") {
        o.spec.rocof_mode = pmucat::RocofMode::derivative;
    } else {
        throw pmucat::UsageError("rocof-mode must be product or derivative");
    }
}

int run_simulate(CLI::App* cmd, CliOptions& o) {
    finish_spec(cmd, o);
    const pmucat::ExperimentResult result = pmucat::run_experiment(o.spec);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "wrote:\n";
    for (const std::string& f : result.files_written) std::cout << "  " << f << '\n';
    if (result.aggregate.n > 0) {
        const pmucat::DelayStats& st = result.aggregate;
        std::printf(
            "delivered %zu/%zu  mean %.2f ms  sd %.2f ms  min %.2f  max %.2f  "
            "q1 %.2f  q3 %.2f  jitter %.2f  ci95 %.2f  loss %.4f\n",
            st.n, result.aggregate_expected, st.mean_ms, st.stddev_ms, st.min_ms, st.max_ms,
            st.q1_ms, st.q3_ms, st.jitter_ms, st.ci95_ms, st.loss_fraction);
    } else {
        std::cout << "no delivered frames\n";
    }
    return 0;
}

int run_client(CLI::App* cmd, CliOptions& o) {
    finish_spec(cmd, o);
    const pmucat::ClientReport rep = pmucat::run_udp_client(o.spec, o.server_endpoint);
    std::cout << "sent " << rep.frames_sent << " frames in " << rep.datagrams_sent
              << " datagrams to " << o.server_endpoint << '\n';
    return 0;
}

int run_server(CliOptions& o) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << o.bind_endpoint << ", writing " << o.out_path
              << " (Ctrl-C to stop)\n";
    const pmucat::ServeReport rep =
        pmucat::serve_udp(o.bind_endpoint, o.out_path, g_stop, o.spec.scaling, o.snapshot_period_s);
    std::cout << "datagrams " << rep.counters.datagrams << ", frames ok " << rep.counters.frames_ok
              << ", crc failures " << rep.counters.crc_failures << ", malformed "
              << rep.counters.malformed << '\n';
    return 0;
}

int run_report(CliOptions& o) {
    std::vector<pmucat::DelayRecord> records;
    std::vector<pmucat::Synchrophasor> phasors;
    if (o.figure.rfind("4", 0) == 0) {
        phasors = pmucat::read_phasor_csv(o.in_path);
    } else {
        records = pmucat::read_records_csv(o.in_path);
    }
    pmucat::emit_figure_data(records, phasors, o.figure, o.out_path, o.figure_params);
    std::cout << "wrote " << o.out_path << '\n';
    return 0;
}

int run_hexdump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    std::cout << pmucat::hex_dump(bytes);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synchrophasor stream and LTE cat-M delay analysis toolkit"};
    app.require_subcommand(1);
    CliOptions o;

    CLI::App* simulate = app.add_subcommand("simulate", "Run the simulated end-to-end pipeline");
    add_pipeline_options(simulate, o);
    add_channel_options(simulate, o);
    simulate->add_option("--pmus", o.spec.pmu_count, "Number of concurrent PMU streams");
    simulate->add_option("--out,-o", o.spec.output_dir, "Output directory")->required();
    simulate->add_flag("--skip-first", o.spec.skip_first, "Exclude each stream's first frame from stats");
    simulate->add_flag("--no-phasor-dump", [&o](std::int64_t) { o.spec.dump_phasors = false; },
                       "Skip writing phasors_<id>.csv");

    CLI::App* client = app.add_subcommand("udp-client", "Stream frames to a UDP concentrator");
    add_pipeline_options(client, o);
    client->add_option("--server", o.server_endpoint, "Destination host:port")->required();

    CLI::App* server = app.add_subcommand("udp-server", "Receive frames and log delay records");
    server->add_option("--bind", o.bind_endpoint, "Listen address host:port");
    server->add_option("--out,-o", o.out_path, "Records CSV path")->required();
    server->add_option("--snapshot-period", o.snapshot_period_s, "Stats snapshot period (s)");

    CLI::App* report = app.add_subcommand("report", "Emit a plot-ready figure dataset");
    report->add_option("--figure", o.figure, "4a|4b|4c|4d|5|6|7")->required();
    report->add_option("--in", o.in_path, "Input CSV (records or phasors)")->required();
    report->add_option("--out,-o", o.out_path, "Output CSV")->required();
    report->add_option("--si-window", o.figure_params.si_window_ms, "SI grant period (ms)");
    report->add_option("--si-offset", o.figure_params.si_grid_offset_ms, "SI grid phase (ms)");
    report->add_option("--d123", o.figure_params.d123_us, "Device-side stages ahead of the radio (us)");

    std::string dump_path;
    CLI::App* hexdump = app.add_subcommand("hexdump", "Annotated dump of an encoded datagram");
    hexdump->add_option("file", dump_path, "File holding raw datagram bytes")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (simulate->parsed()) return run_simulate(simulate, o);
        if (client->parsed()) return run_client(client, o);
        if (server->parsed()) return run_server(o);
        if (report->parsed()) return run_report(o);
        if (hexdump->parsed()) return run_hexdump(dump_path);
    } catch (const pmucat::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
