#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "pmucat/waveform.hpp"

using namespace pmucat;

TEST_CASE("block count and sample rate follow the nominal frequency", "[waveform]") {
    WaveformConfig cfg;
    cfg.nominal_frequency_hz = 50.0;
    cfg.actual_frequency_hz = 50.0;
    cfg.amplitude_v = 2.0;
    cfg.duration_s = 1.0;

    auto blocks = generate(cfg, 1);
    REQUIRE(blocks.size() == 50);
    for (const auto& b : blocks) {
        CHECK(b.sample_rate_hz == 1600.0);
        CHECK(b.samples.size() == 32);
    }

    cfg.nominal_frequency_hz = 60.0;
    cfg.actual_frequency_hz = 60.0;
    auto blocks60 = generate(cfg, 1);
    REQUIRE(blocks60.size() == 60);
    CHECK(blocks60.front().sample_rate_hz == 1920.0);
}

TEST_CASE("zero amplitude with no noise gives all-zero samples", "[waveform]") {
    WaveformConfig cfg;
    cfg.amplitude_v = 0.0;
    cfg.duration_s = 0.2;
    for (const auto& b : generate(cfg, 3))
        for (double s : b.samples) CHECK(s == 0.0);
}

TEST_CASE("block grid is uniform with no cumulative drift", "[waveform]") {
    std::mt19937_64 gen(7);
    for (int trial = 0; trial < 10; ++trial) {
        WaveformConfig cfg;
        cfg.nominal_frequency_hz = (gen() & 1) ? 50.0 : 60.0;
        cfg.actual_frequency_hz = cfg.nominal_frequency_hz;
        cfg.duration_s = 2.0;
        cfg.start_time_us = static_cast<std::int64_t>(gen() % 2'000'000'000) * 1000;

        auto blocks = generate(cfg, trial);
        const double period_us = 1e6 / cfg.nominal_frequency_hz;
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const double ideal = static_cast<double>(cfg.start_time_us) + static_cast<double>(b) * period_us;
            CHECK(std::abs(static_cast<double>(blocks[b].start_us) - ideal) <= 0.5);
        }
        if (cfg.nominal_frequency_hz == 50.0) {
            for (std::size_t b = 1; b < blocks.size(); ++b)
                REQUIRE(blocks[b].start_us - blocks[b - 1].start_us == 20000);
        }
    }
}

TEST_CASE("noise-free samples match the analytic sinusoid", "[waveform]") {
    WaveformConfig cfg;
    cfg.actual_frequency_hz = 50.2;
    cfg.initial_phase_rad = 0.7;
    cfg.duration_s = 0.5;

    auto blocks = generate(cfg, 0);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (int k = 0; k < 32; ++k) {
            const double tau = (static_cast<double>(b) * 32.0 + k) / 1600.0;
            const double expected = 2.0 * std::sin(kTwoPi * 50.2 * tau + 0.7);
            REQUIRE(blocks[b].samples[static_cast<std::size_t>(k)] == Catch::Approx(expected).margin(1e-12));
        }
    }
}

TEST_CASE("seeded noise is reproducible and has the right scale", "[waveform]") {
    WaveformConfig cfg;
    cfg.noise_stddev_v = 0.05;
    cfg.duration_s = 2.0;
    auto a = generate(cfg, 99);
    auto b = generate(cfg, 99);
    double ss = 0.0;
    std::size_t n = 0;
    WaveformConfig clean = cfg;
    clean.noise_stddev_v = 0.0;
    auto ref = generate(clean, 99);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (int k = 0; k < 32; ++k) {
            REQUIRE(a[i].samples[static_cast<std::size_t>(k)] == b[i].samples[static_cast<std::size_t>(k)]);
            const double e = a[i].samples[static_cast<std::size_t>(k)] - ref[i].samples[static_cast<std::size_t>(k)];
            ss += e * e;
            ++n;
        }
    const double sd = std::sqrt(ss / static_cast<double>(n));
    CHECK(sd == Catch::Approx(0.05).epsilon(0.15));
}

TEST_CASE("rising edges sit on the period grid", "[waveform]") {
    WaveformConfig cfg;
    cfg.duration_s = 0.1;

    SECTION("on-nominal, zero phase") {
        auto edges = square_wave_edges(cfg);
        REQUIRE(edges.size() >= 3);
        CHECK(edges[0] == 0);
        CHECK(edges[1] == 20000);
        CHECK(edges[2] == 40000);
    }
    SECTION("off-nominal spacing is the true period, quantized") {
        cfg.actual_frequency_hz = 50.2;
        cfg.duration_s = 1.0;
        auto edges = square_wave_edges(cfg);
        REQUIRE(edges.size() >= 2);
        for (std::size_t i = 1; i < edges.size(); ++i) {
            const double spacing = static_cast<double>(edges[i] - edges[i - 1]);
            CHECK(std::abs(spacing - 1e6 / 50.2) <= 1.0);
        }
        CHECK(std::abs(static_cast<double>(edges[1] - edges[0]) - 19920.3187) <= 1.0);
    }
    SECTION("60 Hz spacing") {
        cfg.actual_frequency_hz = 60.0;
        cfg.nominal_frequency_hz = 60.0;
        auto edges = square_wave_edges(cfg);
        for (std::size_t i = 1; i < edges.size(); ++i)
            CHECK(std::abs(static_cast<double>(edges[i] - edges[i - 1]) - 1e6 / 60.0) <= 1.0);
    }
}

TEST_CASE("edge spacing tracks 1/f across the supported band", "[waveform]") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> band(45.0, 65.0);
    for (int trial = 0; trial < 25; ++trial) {
        WaveformConfig cfg;
        cfg.actual_frequency_hz = band(gen);
        cfg.initial_phase_rad = std::uniform_real_distribution<double>(-kPi, kPi - 1e-9)(gen);
        cfg.duration_s = 1.0;
        auto edges = square_wave_edges(cfg);
        REQUIRE(edges.size() >= 2);
        for (std::size_t i = 1; i < edges.size(); ++i) {
            const double spacing = static_cast<double>(edges[i] - edges[i - 1]);
            REQUIRE(std::abs(spacing - 1e6 / cfg.actual_frequency_hz) <= 1.0);
        }
    }
}

TEST_CASE("invalid waveform configs are rejected", "[waveform]") {
    WaveformConfig cfg;
    cfg.nominal_frequency_hz = 0.0;
    CHECK_THROWS_AS(generate(cfg, 0), std::invalid_argument);
    cfg = {};
    cfg.duration_s = 0.0;
    CHECK_THROWS_AS(generate(cfg, 0), std::invalid_argument);
    cfg = {};
    cfg.noise_stddev_v = -1.0;
    CHECK_THROWS_AS(square_wave_edges(cfg), std::invalid_argument);
    cfg = {};
    cfg.initial_phase_rad = 4.0;
    CHECK_THROWS_AS(generate(cfg, 0), std::invalid_argument);
}

TEST_CASE("adc quantization stays within one lsb", "[waveform]") {
    WaveformConfig cfg;
    cfg.adc_quantize = true;
    cfg.duration_s = 0.1;
    WaveformConfig clean = cfg;
    clean.adc_quantize = false;
    auto q = generate(cfg, 0);
    auto c = generate(clean, 0);
    const double lsb = 5.0 / 1023.0;
    for (std::size_t b = 0; b < q.size(); ++b)
        for (int k = 0; k < 32; ++k)
            CHECK(std::abs(q[b].samples[static_cast<std::size_t>(k)] -
                           c[b].samples[static_cast<std::size_t>(k)]) <= lsb / 2 + 1e-12);
}
