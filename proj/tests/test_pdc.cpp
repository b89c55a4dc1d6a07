#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>
#include <vector>

#include "pmucat/experiment.hpp"
#include "pmucat/pdc.hpp"

using namespace pmucat;

namespace {

Synchrophasor sample_phasor(std::int64_t t_us) {
    Synchrophasor s;
    s.magnitude_v = 1.5;
    s.phase_rad = 0.25;
    s.frequency_hz = 50.01;
    s.rocof = 0.5;
    s.timestamp_us = t_us;
    return s;
}

}  // namespace

TEST_CASE("ingest stamps reception and computes the delay", "[pdc]") {
    Pdc pdc;
    const std::int64_t t = 1'600'000'000'000'000LL;
    const auto frame = encode(sample_phasor(t), 5, pdc.scaling(), 1);
    const auto records = pdc.ingest(frame, t + 172'000);
    REQUIRE(records.size() == 1);
    CHECK(records[0].status == FrameStatus::delivered);
    CHECK(records[0].stream_id == 5);
    CHECK(records[0].t_us == t);
    CHECK(records[0].t_prime_us == t + 172'000);
    CHECK(records[0].delay_us == 172'000);
    CHECK(records[0].size_bytes == 26);
}

TEST_CASE("a 52-byte datagram yields two records with one reception stamp", "[pdc]") {
    Pdc pdc;
    const std::int64_t t = 1'000'000'000'000LL;
    auto datagram = encode(sample_phasor(t), 2, pdc.scaling(), 1);
    const auto second = encode(sample_phasor(t + 20'000), 2, pdc.scaling(), 1);
    datagram.insert(datagram.end(), second.begin(), second.end());
    REQUIRE(datagram.size() == 52);

    const auto records = pdc.ingest(datagram, t + 150'000);
    REQUIRE(records.size() == 2);
    CHECK(records[0].t_prime_us == records[1].t_prime_us);
    CHECK(records[0].delay_us == 150'000);
    CHECK(records[1].delay_us == 130'000);
    CHECK(records[0].seq == 0);
    CHECK(records[1].seq == 1);
}

TEST_CASE("corrupted frames become integrity failures, not crashes", "[pdc]") {
    Pdc pdc;
    const std::int64_t t = 1'000'000'000'000LL;
    auto frame = encode(sample_phasor(t), 2, pdc.scaling(), 1);
    frame[20] ^= 0x10;
    const auto records = pdc.ingest(frame, t + 150'000);
    REQUIRE(records.size() == 1);
    CHECK(records[0].status == FrameStatus::integrity_failure);
    CHECK(pdc.counters().crc_failures == 1);

    // excluded from the delay stats, included in the loss
    const DelayStats st = [&] {
        std::vector<DelayRecord> all = records;
        all.push_back([&] {
            auto good = pdc.ingest(encode(sample_phasor(t), 2, pdc.scaling(), 1), t + 160'000);
            return good[0];
        }());
        return compute_stats(all, 2);
    }();
    CHECK(st.n == 1);
    CHECK(st.loss_fraction == 0.5);
}

TEST_CASE("garbage datagrams are counted and survive", "[pdc]") {
    Pdc pdc;
    const std::vector<std::uint8_t> junk{0x01, 0x02, 0x03};
    const auto records = pdc.ingest(junk, 1000);
    REQUIRE(records.size() == 1);
    CHECK(records[0].status == FrameStatus::integrity_failure);
    CHECK(pdc.counters().malformed == 1);
}

TEST_CASE("udp loopback delivers frames into the records file", "[pdc]") {
    namespace fs = std::filesystem;
    const std::string out = (fs::temp_directory_path() / "pmucat_udp_test.csv").string();

    std::atomic<bool> stop{false};
    ServeReport report;
    std::thread server([&] { report = serve_udp("127.0.0.1:47123", out, stop, {}, 0.2); });

    std::this_thread::sleep_for(std::chrono::milliseconds(200));
    {
        UdpSocket client;
        const sockaddr_in dest = resolve_endpoint("127.0.0.1:47123");
        for (int i = 0; i < 3; ++i) {
            const auto frame = encode(sample_phasor(wall_clock_us()), 1, ScalingConfig{}, 1);
            client.send_to(frame, dest);
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
        }
        // one bundled datagram
        auto bundle = encode(sample_phasor(wall_clock_us()), 1, ScalingConfig{}, 1);
        const auto extra = encode(sample_phasor(wall_clock_us()), 1, ScalingConfig{}, 1);
        bundle.insert(bundle.end(), extra.begin(), extra.end());
        client.send_to(bundle, dest);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    stop.store(true);
    server.join();

    CHECK(report.counters.datagrams == 4);
    CHECK(report.counters.frames_ok == 5);
    const auto records = read_records_csv(out);
    REQUIRE(records.size() == 5);
    for (const auto& r : records) {
        CHECK(r.status == FrameStatus::delivered);
        CHECK(r.delay_us >= 0);
        CHECK(r.delay_us < 5'000'000);  // loopback: well under five seconds
    }
    fs::remove(out);
    fs::remove(out + ".stats.csv");
}

TEST_CASE("binding an occupied endpoint fails at startup", "[pdc]") {
    UdpSocket holder;
    holder.bind("127.0.0.1:47125");
    std::atomic<bool> stop{true};
    CHECK_THROWS(serve_udp("127.0.0.1:47125", "/tmp/pmucat_never.csv", stop));
}
