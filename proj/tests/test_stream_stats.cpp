#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>
#include <set>

#include "iotwarden/autoencoder.hpp"
#include "iotwarden/errors.hpp"
#include "iotwarden/stream_stats.hpp"
#include "random_trace.hpp"
#include "reference_stats.hpp"

using namespace warden;
using warden::testing::make_random_trace;
using warden::testing::reference_extract;
using warden::testing::relative_error;

namespace {

PacketEvent make_event(double t, const char* src, const char* dst, std::uint32_t size,
                       Direction dir, std::optional<std::uint16_t> sport = 1234,
                       std::optional<std::uint16_t> dport = 80) {
    PacketEvent e;
    e.timestamp = t;
    e.src_mac = MacAddress::parse("aa:bb:cc:dd:ee:ff");
    e.src_ip = IpAddress::parse(src);
    e.dst_ip = IpAddress::parse(dst);
    e.src_port = sport;
    e.dst_port = dport;
    e.size = size;
    e.direction = dir;
    return e;
}

}  // namespace

TEST_CASE("decay_factor basics") {
    const DecayRate one{1.0, "test"};
    CHECK(decay_factor(0.0, decay_rates()[0]) == 1.0);
    CHECK(decay_factor(1.0, one) == doctest::Approx(0.5).epsilon(1e-15));
    const DecayRate fast{5.0, "100ms"};
    CHECK(decay_factor(0.2, fast) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(decay_factor(-0.1, one), ContractError);
}

TEST_CASE("five decay rates in descending lambda order") {
    const auto& rates = decay_rates();
    REQUIRE(rates.size() == 5);
    for (std::size_t i = 1; i < rates.size(); ++i) CHECK(rates[i].lambda < rates[i - 1].lambda);
    CHECK(rates[0].lambda == 5.0);
    CHECK(rates[4].lambda == 0.01);
    CHECK(std::string(rates[2].window_label) == "1.5s");
}

TEST_CASE("stat1d update: single observation") {
    DampedStat1D s;
    s.update(60.0, 0.0, decay_rates()[0]);
    auto v = s.read();
    CHECK(v.weight == 1.0);
    CHECK(v.mean == 60.0);
    CHECK(v.variance == 0.0);
}

TEST_CASE("stat1d update: two samples at the same instant") {
    for (const auto& rate : decay_rates()) {
        DampedStat1D s;
        s.update(10.0, 5.0, rate);
        s.update(20.0, 5.0, rate);
        auto v = s.read();
        CHECK(v.weight == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(v.mean == doctest::Approx(15.0).epsilon(1e-15));
        CHECK(v.variance == doctest::Approx(25.0).epsilon(1e-13));
    }
}

TEST_CASE("stat1d update: identical values across a decay step") {
    const DecayRate one{1.0, "test"};
    DampedStat1D s;
    s.update(10.0, 0.0, one);
    s.update(10.0, 1.0, one);
    auto v = s.read();
    CHECK(v.weight == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(v.mean == doctest::Approx(10.0).epsilon(1e-15));
    CHECK(v.variance == doctest::Approx(0.0));
}

TEST_CASE("stat1d read: derived views") {
    DampedStat1D zero;
    auto v0 = zero.read();
    CHECK(v0.weight == 0.0);
    CHECK(v0.mean == 0.0);
    CHECK(v0.variance == 0.0);

    // Formula check on explicit sums: {10, 20} gives w=2, ls=30, ss=500.
    DampedStat1D s;
    s.w = 2.0;
    s.ls = 30.0;
    s.ss = 500.0;
    auto v = s.read();
    CHECK(v.weight == 2.0);
    CHECK(v.mean == 15.0);
    CHECK(v.variance == 25.0);

    // Rounding can push ss/w below mean^2; the view clamps at zero.
    DampedStat1D tiny;
    tiny.w = 1.0;
    tiny.ls = 1.0;
    tiny.ss = 1.0 - 1e-18;
    CHECK(tiny.read().variance == 0.0);
}

TEST_CASE("stat1d rejects contract violations") {
    const DecayRate one{1.0, "test"};
    DampedStat1D s;
    s.update(1.0, 10.0, one);
    CHECK_THROWS_AS(s.update(1.0, 9.0, one), ContractError);
    CHECK_THROWS_AS(s.update(std::nan(""), 11.0, one), ContractError);
}

TEST_CASE("stat2d: one-sided traffic has zero covariance and pcc") {
    const DecayRate one{1.0, "test"};
    DampedStat2D s;
    for (int i = 0; i < 10; ++i)
        s.update(100.0 + 10.0 * i, Direction::Outbound, 0.1 * i, one);
    auto v = s.read();
    CHECK(v.covariance == 0.0);
    CHECK(v.pcc == 0.0);
    CHECK(v.magnitude > 0.0);
}

TEST_CASE("stat2d: empty reads as all zeroes") {
    DampedStat2D s;
    auto v = s.read();
    CHECK(v.magnitude == 0.0);
    CHECK(v.radius == 0.0);
    CHECK(v.covariance == 0.0);
    CHECK(v.pcc == 0.0);
}

TEST_CASE("stat2d: 3-4-5 magnitude with zero variances") {
    const DecayRate one{1.0, "test"};
    DampedStat2D s;
    s.update(3.0, Direction::Outbound, 0.0, one);
    s.update(4.0, Direction::Inbound, 0.0, one);
    auto v = s.read();
    CHECK(v.magnitude == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(v.radius == 0.0);
    CHECK(v.pcc == 0.0);  // zero variance on both sides
}

TEST_CASE("stat2d: interleaved trace matches the scripted recurrence") {
    const DecayRate rate{2.0, "test"};
    // (t, x, side): side 0 = outbound, 1 = inbound.
    const std::tuple<double, double, int> steps[] = {
        {0.0, 100.0, 0}, {0.2, 80.0, 1}, {0.5, 140.0, 0}, {0.6, 90.0, 1}, {0.9, 60.0, 0}};

    DampedStat2D s;
    for (auto [t, x, side] : steps)
        s.update(x, side == 0 ? Direction::Outbound : Direction::Inbound, t, rate);

    // Scripted replay with explicit closed-form sums.
    std::vector<std::pair<double, double>> side_samples[2];
    double last_touch[2] = {0.0, 0.0};
    bool touched[2] = {false, false};
    double sr = 0.0, last_res[2] = {0.0, 0.0};
    for (auto [t, x, side] : steps) {
        double gamma = touched[side] ? std::exp2(-rate.lambda * (t - last_touch[side])) : 1.0;
        side_samples[side].emplace_back(t, x);
        last_touch[side] = t;
        touched[side] = true;
        auto view = warden::testing::reference_stat1d(side_samples[side], t, rate.lambda);
        double r = x - view.mean;
        sr = gamma * sr + r * last_res[1 - side];
        last_res[side] = r;
    }
    CHECK(relative_error(s.sr, sr) < 1e-12);

    auto out_view = warden::testing::reference_stat1d(side_samples[0], last_touch[0], rate.lambda);
    auto in_view = warden::testing::reference_stat1d(side_samples[1], last_touch[1], rate.lambda);
    double wsum = out_view.weight + in_view.weight;
    double cov = sr / wsum;
    double stds = std::sqrt(out_view.variance) * std::sqrt(in_view.variance);
    auto v = s.read();
    CHECK(relative_error(v.covariance, cov) < 1e-12);
    CHECK(relative_error(v.pcc, std::clamp(cov / stds, -1.0, 1.0)) < 1e-12);
}

TEST_CASE("stat2d: pcc stays clamped on symmetric streams") {
    const DecayRate one{1.0, "test"};
    DampedStat2D s;
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        double x = 100.0 + (i % 7) * 10.0;
        s.update(x, Direction::Outbound, 0.05 * i, one);
        s.update(x, Direction::Inbound, 0.05 * i + 0.01, one);
        auto v = s.read();
        CHECK(v.pcc >= -1.0);
        CHECK(v.pcc <= 1.0);
    }
}

TEST_CASE("monotone decay: a gap before the read scales the weight exactly") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const DecayRate& rate = decay_rates()[rng() % kDecayCount];
        DampedStat1D s;
        double t = 0.0;
        int n = 1 + static_cast<int>(rng() % 20);
        for (int i = 0; i < n; ++i) {
            t += uniform01(rng);
            s.update(50.0 + 400.0 * uniform01(rng), t, rate);
        }
        double dt = 90.0 * uniform01(rng);
        auto now = s.read();
        auto later = s.read_at(t + dt, rate);
        CHECK(later.weight == now.weight * decay_factor(dt, rate));
    }
}

TEST_CASE("feature schema v1: 115 uniquely named slots, 23 per window") {
    const auto& schema = FeatureSchema::v1();
    CHECK(schema.version() == 1);
    std::set<std::string> names(schema.slot_names().begin(), schema.slot_names().end());
    CHECK(names.size() == kFeatureCount);
    std::size_t per_window[kDecayCount] = {};
    for (const auto& slot : schema.slots()) ++per_window[slot.decay_index];
    for (std::size_t d = 0; d < kDecayCount; ++d) CHECK(per_window[d] == 23);
    CHECK(*schema.index_of("srcip_100ms_weight") == 0);
    CHECK(schema.slot_names()[0] == "srcip_100ms_weight");
    CHECK(!schema.index_of("nope").has_value());
}

TEST_CASE("extractor: first-ever outbound packet") {
    StatRegistry reg;
    FeatureRecord rec = reg.process(make_event(0.0, "192.168.1.50", "10.0.0.9", 60,
                                               Direction::Outbound));
    REQUIRE(rec.features.size() == kFeatureCount);
    const auto& schema = FeatureSchema::v1();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const SlotDesc& slot = schema.slots()[i];
        if (slot.key == KeyKind::SrcIp) {
            if (slot.stat == SlotStat::Weight) CHECK(rec.features[i] == 1.0);
            if (slot.stat == SlotStat::Mean) CHECK(rec.features[i] == 60.0);
            if (slot.stat == SlotStat::Variance) CHECK(rec.features[i] == 0.0);
        }
        if (slot.key == KeyKind::Channel && slot.stat == SlotStat::Pcc)
            CHECK(rec.features[i] == 0.0);
        if (slot.key == KeyKind::ChannelJitter) CHECK(rec.features[i] == 0.0);
    }
}

TEST_CASE("extractor: jitter arms on the first packet, samples from the second") {
    StatRegistry reg;
    reg.process(make_event(1.0, "192.168.1.50", "10.0.0.9", 60, Direction::Outbound));
    FeatureRecord rec =
        reg.process(make_event(1.25, "192.168.1.50", "10.0.0.9", 60, Direction::Outbound));
    const auto& schema = FeatureSchema::v1();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const SlotDesc& slot = schema.slots()[i];
        if (slot.key != KeyKind::ChannelJitter) continue;
        if (slot.stat == SlotStat::Weight) CHECK(rec.features[i] == 1.0);
        if (slot.stat == SlotStat::Mean) CHECK(rec.features[i] == doctest::Approx(0.25));
    }
}

TEST_CASE("extractor: spoofed source resets to single-observation statistics") {
    StatRegistry reg;
    auto trace = make_random_trace(11, {.packets = 500, .spoof_prob = 0.0});
    for (const auto& e : trace) reg.process(e);
    FeatureRecord rec =
        reg.process(make_event(trace.back().timestamp + 0.001, "203.0.113.77", "10.0.0.9", 444,
                               Direction::Outbound));
    const auto& schema = FeatureSchema::v1();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const SlotDesc& slot = schema.slots()[i];
        if (slot.key == KeyKind::SrcIp || slot.key == KeyKind::SrcMacIp) {
            if (slot.stat == SlotStat::Weight) CHECK(rec.features[i] == 1.0);
            if (slot.stat == SlotStat::Mean) CHECK(rec.features[i] == 444.0);
            if (slot.stat == SlotStat::Variance) CHECK(rec.features[i] == 0.0);
        }
    }
}

TEST_CASE("extractor: snapshots are deterministic") {
    auto trace = make_random_trace(3, {.packets = 800});
    StatRegistry a, b;
    for (const auto& e : trace) {
        FeatureRecord ra = a.process(e);
        FeatureRecord rb = b.process(e);
        CHECK(std::memcmp(ra.features.data(), rb.features.data(),
                          kFeatureCount * sizeof(double)) == 0);
    }
}

TEST_CASE("extractor: rejects out-of-order packets on a stream") {
    StatRegistry reg;
    reg.process(make_event(10.0, "192.168.1.50", "10.0.0.9", 60, Direction::Outbound));
    CHECK_THROWS_AS(
        reg.process(make_event(9.0, "192.168.1.50", "10.0.0.9", 60, Direction::Outbound)),
        ContractError);
}

TEST_CASE("extractor: portless packets form their own socket stream") {
    StatRegistry reg;
    reg.process(make_event(0.0, "192.168.1.50", "10.0.0.9", 100, Direction::Outbound, 5555, 80));
    FeatureRecord rec = reg.process(make_event(0.5, "192.168.1.50", "10.0.0.9", 200,
                                               Direction::Outbound, std::nullopt, std::nullopt));
    const auto& schema = FeatureSchema::v1();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const SlotDesc& slot = schema.slots()[i];
        if (slot.key == KeyKind::Socket && slot.stat == SlotStat::Weight)
            CHECK(rec.features[i] == 1.0);  // fresh socket stream, not the TCP one
    }
    CHECK(reg.sizes().sockets == 2);
}

TEST_CASE("incremental extraction equals full-history recomputation") {
    for (std::uint64_t seed : {101ULL, 202ULL, 303ULL}) {
        auto trace = make_random_trace(seed, {.packets = 2000});
        auto reference = reference_extract(trace);
        StatRegistry reg;
        double worst = 0.0;
        for (std::size_t n = 0; n < trace.size(); ++n) {
            FeatureRecord rec = reg.process(trace[n]);
            for (std::size_t i = 0; i < kFeatureCount; ++i)
                worst = std::max(worst, relative_error(rec.features[i], reference[n][i]));
        }
        CHECK(worst < 1e-9);
    }
}
