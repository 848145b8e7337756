#include "iotwarden/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"

#include "iotwarden/autoencoder.hpp"  // uniform01
#include "iotwarden/errors.hpp"

namespace warden {

namespace {

double expovariate(std::mt19937_64& rng, double rate) {
    double u = uniform01(rng);
    return -std::log1p(-u) / rate;
}

double gaussian(std::mt19937_64& rng) {
    // Box-Muller on the deterministic uniform; one draw per call keeps the
    // stream order independent of caller pairing.
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    double r = std::sqrt(-2.0 * std::log(std::max(u1, 1e-300)));
    return r * std::cos(2.0 * M_PI * u2);
}

std::uint32_t packet_size(std::mt19937_64& rng, double mean, double jitter) {
    double s = mean + jitter * gaussian(rng);
    s = std::clamp(s, 60.0, 1514.0);
    return static_cast<std::uint32_t>(std::lround(s));
}

struct Tagged {
    PacketEvent event;
    int attack_index;  // -1 for benign
};

}  // namespace

void SynthConfig::validate() const {
    if (duration_s <= 0.0) throw ConfigError("duration_s must be positive");
    if (benign.rate_pps <= 0.0) throw ConfigError("benign.rate_pps must be positive");
    if (benign.peer_count < 1) throw ConfigError("benign.peer_count must be at least 1");
    if (benign.inbound_ratio < 0.0 || benign.inbound_ratio > 1.0)
        throw ConfigError("benign.inbound_ratio must lie in [0,1]");
    double prev_end = -1.0;
    for (const auto& a : attacks) {
        if (!a.label.valid() || a.label.is_benign())
            throw ConfigError("attack segments need a valid non-benign label");
        if (a.duration_s <= 0.0) throw ConfigError("attack duration_s must be positive");
        if (a.onset_s < 0.0 || a.onset_s + a.duration_s > duration_s)
            throw ConfigError("attack segment exceeds the run duration");
        if (a.onset_s < prev_end)
            throw ConfigError("attack segments must be sorted and non-overlapping");
        if (a.rate_multiplier <= 0.0) throw ConfigError("rate_multiplier must be positive");
        prev_end = a.onset_s + a.duration_s;
        IpAddress::parse(a.victim_ip);
    }
    IpAddress::parse(device_ip);
    MacAddress::parse(device_mac);
}

SynthConfig SynthConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open synth config '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("synth config '" + path + "' is not valid JSON");
    SynthConfig cfg;
    try {
        cfg.device_ip = j.value("device_ip", cfg.device_ip);
        cfg.device_mac = j.value("device_mac", cfg.device_mac);
        cfg.duration_s = j.value("duration_s", cfg.duration_s);
        cfg.seed = j.value("seed", cfg.seed);
        if (j.contains("benign")) {
            const auto& b = j["benign"];
            cfg.benign.rate_pps = b.value("rate_pps", cfg.benign.rate_pps);
            cfg.benign.size_mean = b.value("size_mean", cfg.benign.size_mean);
            cfg.benign.size_jitter = b.value("size_jitter", cfg.benign.size_jitter);
            cfg.benign.peer_count = b.value("peer_count", cfg.benign.peer_count);
            cfg.benign.inbound_ratio = b.value("inbound_ratio", cfg.benign.inbound_ratio);
            if (b.contains("burst")) {
                const auto& u = b["burst"];
                cfg.benign.burst.period_s = u.value("period_s", cfg.benign.burst.period_s);
                cfg.benign.burst.packets = u.value("packets", cfg.benign.burst.packets);
                cfg.benign.burst.size_multiplier =
                    u.value("size_multiplier", cfg.benign.burst.size_multiplier);
            }
        }
        for (const auto& a : j.value("attacks", nlohmann::json::array())) {
            AttackSegmentSpec seg;
            seg.onset_s = a.at("onset_s").get<double>();
            seg.duration_s = a.at("duration_s").get<double>();
            seg.label = AttackLabel::parse(a.at("family").get<std::string>(),
                                           a.at("vector").get<std::string>());
            seg.rate_multiplier = a.value("rate_multiplier", seg.rate_multiplier);
            seg.size_multiplier = a.value("size_multiplier", seg.size_multiplier);
            seg.spoof_source = a.value("spoof_source", seg.spoof_source);
            seg.victim_ip = a.value("victim_ip", seg.victim_ip);
            cfg.attacks.push_back(std::move(seg));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("synth config '" + path + "': " + e.what());
    }
    cfg.validate();
    return cfg;
}

SynthResult synthesize(const SynthConfig& cfg) {
    cfg.validate();
    const IpAddress device_ip = IpAddress::parse(cfg.device_ip);
    const MacAddress device_mac = MacAddress::parse(cfg.device_mac);

    std::vector<Tagged> packets;

    // Peers are stable per run: addresses, MACs and one socket pair each.
    struct Peer {
        IpAddress ip;
        MacAddress mac;
        std::uint16_t device_port;
        std::uint16_t peer_port;
    };
    std::vector<Peer> peers;
    for (std::size_t i = 0; i < cfg.benign.peer_count; ++i) {
        Peer p;
        p.ip = IpAddress::parse("10.0.0." + std::to_string(10 + i));
        MacAddress m{};
        m.bytes = {0x02, 0x11, 0x11, 0x11, 0x11, static_cast<std::uint8_t>(i + 1)};
        p.mac = m;
        p.device_port = static_cast<std::uint16_t>(40000 + i);
        p.peer_port = static_cast<std::uint16_t>(8000 + i);
        peers.push_back(p);
    }

    // Benign background: one process for the whole run, attacks or not.
    {
        std::mt19937_64 rng(cfg.seed);
        double t = 0.0;
        while (true) {
            t += expovariate(rng, cfg.benign.rate_pps);
            if (t >= cfg.duration_s) break;
            const Peer& peer = peers[static_cast<std::size_t>(rng() % peers.size())];
            bool inbound = uniform01(rng) < cfg.benign.inbound_ratio;
            PacketEvent e;
            e.timestamp = t;
            e.size = packet_size(rng, cfg.benign.size_mean, cfg.benign.size_jitter);
            if (inbound) {
                e.src_mac = peer.mac;
                e.src_ip = peer.ip;
                e.dst_ip = device_ip;
                e.src_port = peer.peer_port;
                e.dst_port = peer.device_port;
                e.direction = Direction::Inbound;
            } else {
                e.src_mac = device_mac;
                e.src_ip = device_ip;
                e.dst_ip = peer.ip;
                e.src_port = peer.device_port;
                e.dst_port = peer.peer_port;
                e.direction = Direction::Outbound;
            }
            packets.push_back({e, -1});
        }
    }

    // Scheduled benign micro-bursts toward peer 0.
    if (cfg.benign.burst.period_s > 0.0 && cfg.benign.burst.packets > 0) {
        const Peer& peer = peers.front();
        std::uint32_t size = static_cast<std::uint32_t>(std::lround(
            std::clamp(cfg.benign.size_mean * cfg.benign.burst.size_multiplier, 60.0, 1514.0)));
        for (double t0 = cfg.benign.burst.period_s; t0 < cfg.duration_s;
             t0 += cfg.benign.burst.period_s) {
            for (std::size_t k = 0; k < cfg.benign.burst.packets; ++k) {
                double t = t0 + 0.001 * static_cast<double>(k);
                if (t >= cfg.duration_s) break;
                PacketEvent e;
                e.timestamp = t;
                e.src_mac = device_mac;
                e.src_ip = device_ip;
                e.dst_ip = peer.ip;
                e.src_port = peer.device_port;
                e.dst_port = peer.peer_port;
                e.size = size;
                e.direction = Direction::Outbound;
                packets.push_back({e, -1});
            }
        }
    }

    // Attack segments: flood toward the victim, optionally with a fresh
    // spoofed source address per packet.
    for (std::size_t ai = 0; ai < cfg.attacks.size(); ++ai) {
        const auto& seg = cfg.attacks[ai];
        std::mt19937_64 rng(cfg.seed ^ (0xa77ac4ULL + 0x10001ULL * (ai + 1)));
        const IpAddress victim = IpAddress::parse(seg.victim_ip);
        double rate = cfg.benign.rate_pps * seg.rate_multiplier;
        double t = seg.onset_s;
        while (true) {
            t += expovariate(rng, rate);
            if (t >= seg.onset_s + seg.duration_s) break;
            PacketEvent e;
            e.timestamp = t;
            e.src_mac = device_mac;
            if (seg.spoof_source) {
                // Random address from 198.18.0.0/15 (benchmark range), never
                // colliding with the device or its peers.
                std::uint32_t lo = static_cast<std::uint32_t>(rng() & 0x1ffff);
                std::string ip = "198." + std::to_string(18 + (lo >> 16)) + "." +
                                 std::to_string((lo >> 8) & 0xff) + "." + std::to_string(lo & 0xff);
                e.src_ip = IpAddress::parse(ip);
            } else {
                e.src_ip = device_ip;
            }
            e.dst_ip = victim;
            e.src_port = static_cast<std::uint16_t>(1024 + rng() % 60000);
            e.dst_port = 80;
            double size = cfg.benign.size_mean * seg.size_multiplier;
            e.size = static_cast<std::uint32_t>(std::lround(std::clamp(size, 60.0, 1514.0)));
            e.direction = e.src_ip == device_ip ? Direction::Outbound : Direction::Inbound;
            packets.push_back({e, static_cast<int>(ai)});
        }
    }

    std::stable_sort(packets.begin(), packets.end(), [](const Tagged& a, const Tagged& b) {
        return a.event.timestamp < b.event.timestamp;
    });

    SynthResult result;
    result.events.reserve(packets.size());
    for (const auto& p : packets) result.events.push_back(p.event);

    // Attack packets as run-length index ranges over the sorted file.
    std::size_t i = 0;
    while (i < packets.size()) {
        if (packets[i].attack_index < 0) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < packets.size() && packets[j + 1].attack_index == packets[i].attack_index)
            ++j;
        result.labels.push_back(
            LabelRange{i, j, cfg.attacks[static_cast<std::size_t>(packets[i].attack_index)].label});
        i = j + 1;
    }
    return result;
}

}  // namespace warden
