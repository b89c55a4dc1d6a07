#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "pmucat/stats.hpp"

using namespace pmucat;

namespace {

DelayRecord make_record(std::uint64_t seq, std::int64_t t_us, std::int64_t delay_us,
                        FrameStatus status = FrameStatus::delivered) {
    DelayRecord r;
    r.stream_id = 1;
    r.seq = seq;
    r.t_us = t_us;
    r.delay_us = delay_us;
    r.t_prime_us = t_us + delay_us;
    r.size_bytes = 26;
    r.status = status;
    return r;
}

// Plain-loop recomputation of every statistic, kept deliberately naive.
DelayStats brute_force_stats(const std::vector<DelayRecord>& records, std::size_t expected) {
    std::vector<const DelayRecord*> del;
    for (const auto& r : records)
        if (r.status == FrameStatus::delivered) del.push_back(&r);
    std::sort(del.begin(), del.end(), [](const DelayRecord* a, const DelayRecord* b) {
        if (a->t_us != b->t_us) return a->t_us < b->t_us;
        return a->seq < b->seq;
    });
    std::vector<double> d;
    for (const auto* r : del) d.push_back(static_cast<double>(r->delay_us) / 1000.0);

    DelayStats st;
    st.n = d.size();
    double sum = 0.0;
    for (double x : d) sum += x;
    st.mean_ms = sum / static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - st.mean_ms) * (x - st.mean_ms);
    st.stddev_ms = d.size() > 1 ? std::sqrt(ss / static_cast<double>(d.size() - 1)) : 0.0;
    double j = 0.0;
    for (std::size_t i = 1; i < d.size(); ++i) j += std::fabs(d[i] - d[i - 1]);
    st.jitter_ms = d.size() > 1 ? j / static_cast<double>(d.size() - 1) : 0.0;

    std::vector<double> s = d;
    std::sort(s.begin(), s.end());
    st.min_ms = s.front();
    st.max_ms = s.back();
    auto quantile = [&s](double p) {
        if (s.size() == 1) return s[0];
        const double pos = p * static_cast<double>(s.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= s.size()) return s.back();
        return s[lo] + (pos - static_cast<double>(lo)) * (s[lo + 1] - s[lo]);
    };
    st.q1_ms = quantile(0.25);
    st.q3_ms = quantile(0.75);
    st.ci95_ms = 1.96 * st.stddev_ms / std::sqrt(static_cast<double>(d.size()));
    st.loss_fraction = 1.0 - static_cast<double>(d.size()) / static_cast<double>(expected);
    return st;
}

}  // namespace

TEST_CASE("two-point worked example", "[stats]") {
    std::vector<DelayRecord> records{make_record(0, 0, 100000), make_record(1, 20000, 200000)};
    const DelayStats st = compute_stats(records, 2);
    CHECK(st.mean_ms == 150.0);
    CHECK(st.jitter_ms == 100.0);
    CHECK(st.q1_ms == 125.0);
    CHECK(st.q3_ms == 175.0);
    CHECK(st.min_ms == 100.0);
    CHECK(st.max_ms == 200.0);
    CHECK(st.loss_fraction == 0.0);
}

TEST_CASE("constant delays have zero spread", "[stats]") {
    std::vector<DelayRecord> records;
    for (int i = 0; i < 10; ++i)
        records.push_back(make_record(static_cast<std::uint64_t>(i), i * 20000, 150000));
    const DelayStats st = compute_stats(records, 10);
    CHECK(st.stddev_ms == 0.0);
    CHECK(st.jitter_ms == 0.0);
    CHECK(st.ci95_ms == 0.0);
    CHECK(st.q1_ms == 150.0);
    CHECK(st.q3_ms == 150.0);
}

TEST_CASE("stats error paths", "[stats]") {
    std::vector<DelayRecord> empty;
    CHECK_THROWS(compute_stats(empty, 10));

    std::vector<DelayRecord> lost_only{make_record(0, 0, 0, FrameStatus::lost)};
    CHECK_THROWS(compute_stats(lost_only, 1));

    std::vector<DelayRecord> two{make_record(0, 0, 1000), make_record(1, 1, 1000)};
    CHECK_THROWS_AS(compute_stats(two, 1), std::invalid_argument);
}

TEST_CASE("loss counts everything that was not delivered", "[stats]") {
    std::vector<DelayRecord> records;
    for (int i = 0; i < 7; ++i)
        records.push_back(make_record(static_cast<std::uint64_t>(i), i * 1000, 120000));
    records.push_back(make_record(7, 7000, 0, FrameStatus::lost));
    records.push_back(make_record(8, 8000, 130000, FrameStatus::integrity_failure));
    const DelayStats st = compute_stats(records, 10);
    CHECK(st.n == 7);
    CHECK(st.loss_fraction == Catch::Approx(0.3));
}

TEST_CASE("compute_stats equals the brute-force recomputation exactly", "[stats]") {
    std::mt19937_64 gen(2024);
    std::uniform_int_distribution<std::int64_t> delay(50'000, 400'000);
    std::uniform_int_distribution<int> count(1, 60);
    std::uniform_real_distribution<double> ploss(0.0, 0.3);

    for (int trial = 0; trial < 1000; ++trial) {
        const int n = count(gen);
        const double p = ploss(gen);
        std::vector<DelayRecord> records;
        std::size_t expected = static_cast<std::size_t>(n);
        for (int i = 0; i < n; ++i) {
            const bool lose = std::uniform_real_distribution<double>(0, 1)(gen) < p;
            records.push_back(make_record(static_cast<std::uint64_t>(i), i * 20000,
                                          lose ? 0 : delay(gen),
                                          lose ? FrameStatus::lost : FrameStatus::delivered));
        }
        const bool any = std::any_of(records.begin(), records.end(), [](const DelayRecord& r) {
            return r.status == FrameStatus::delivered;
        });
        if (!any) continue;
        // shuffle arrival order; stats must not care
        std::shuffle(records.begin(), records.end(), gen);

        const DelayStats a = compute_stats(records, expected);
        const DelayStats b = brute_force_stats(records, expected);
        REQUIRE(a.n == b.n);
        REQUIRE(a.mean_ms == b.mean_ms);
        REQUIRE(a.min_ms == b.min_ms);
        REQUIRE(a.max_ms == b.max_ms);
        REQUIRE(a.stddev_ms == b.stddev_ms);
        REQUIRE(a.q1_ms == b.q1_ms);
        REQUIRE(a.q3_ms == b.q3_ms);
        REQUIRE(a.jitter_ms == b.jitter_ms);
        REQUIRE(a.ci95_ms == b.ci95_ms);
        REQUIRE(a.loss_fraction == b.loss_fraction);
    }
}

TEST_CASE("realign sorts by generation time and preserves the multiset", "[stats]") {
    std::mt19937_64 gen(66);
    std::vector<DelayRecord> records;
    for (int i = 0; i < 200; ++i) {
        DelayRecord r = make_record(static_cast<std::uint64_t>(i), i * 20000,
                                    150000 + static_cast<std::int64_t>(gen() % 40000));
        records.push_back(r);
    }
    std::shuffle(records.begin(), records.end(), gen);

    const auto aligned = realign(records);
    REQUIRE(aligned.size() == records.size());
    for (std::size_t i = 1; i < aligned.size(); ++i) REQUIRE(aligned[i - 1].t_us <= aligned[i].t_us);

    auto key = [](const DelayRecord& r) { return std::make_tuple(r.seq, r.t_us, r.t_prime_us); };
    std::vector<std::tuple<std::uint64_t, std::int64_t, std::int64_t>> before, after;
    for (const auto& r : records) before.push_back(key(r));
    for (const auto& r : aligned) after.push_back(key(r));
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    REQUIRE(before == after);
}

TEST_CASE("in-order arrivals carry no buffer delay", "[stats]") {
    std::vector<DelayRecord> records;
    for (int i = 0; i < 50; ++i)
        records.push_back(make_record(static_cast<std::uint64_t>(i), i * 20000, 150000));
    for (const auto& r : realign(records)) REQUIRE(r.d6_us == 0);
}

TEST_CASE("a swapped pair yields a buffer delay equal to the arrival gap", "[stats]") {
    // Frame A generated first but arriving last; frame B generated later,
    // arriving first. B sits in the buffer until A shows up.
    DelayRecord a = make_record(0, 0, 50000);       // arrives at 50 ms
    DelayRecord b = make_record(1, 20000, 10000);   // arrives at 30 ms
    const auto aligned = realign({b, a});
    REQUIRE(aligned.size() == 2);
    CHECK(aligned[0].seq == 0);
    CHECK(aligned[0].d6_us == 0);
    CHECK(aligned[1].seq == 1);
    CHECK(aligned[1].d6_us == 20000);  // waited from 30 ms to 50 ms

    SECTION("empty input stays empty") { CHECK(realign({}).empty()); }
}

TEST_CASE("lost records pass through realign untouched", "[stats]") {
    std::vector<DelayRecord> records{make_record(0, 0, 100000),
                                     make_record(1, 20000, 0, FrameStatus::lost),
                                     make_record(2, 40000, 50000)};
    const auto aligned = realign(records);
    REQUIRE(aligned.size() == 3);
    CHECK(aligned[1].status == FrameStatus::lost);
    CHECK(aligned[1].d6_us == 0);
    // record 2 arrived at 90 ms, before record 0 at 100 ms
    CHECK(aligned[2].d6_us == 10000);
}
