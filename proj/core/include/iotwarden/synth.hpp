#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iotwarden/dataset_io.hpp"
#include "iotwarden/events.hpp"

namespace warden {

/// Scheduled benign micro-burst: a short run of oversized packets emitted on
/// a fixed period, giving the benign profile a rare-but-legitimate behavior.
struct BurstSpec {
    double period_s = 0.0;  // 0 disables bursts
    std::size_t packets = 3;
    double size_multiplier = 5.0;
};

struct BenignTrafficSpec {
    double rate_pps = 100.0;
    double size_mean = 300.0;
    double size_jitter = 40.0;
    std::size_t peer_count = 4;
    double inbound_ratio = 0.3;
    BurstSpec burst;
};

struct AttackSegmentSpec {
    double onset_s = 0.0;
    double duration_s = 0.0;
    AttackLabel label;
    double rate_multiplier = 10.0;
    double size_multiplier = 3.0;
    bool spoof_source = true;  // fresh random source IP per packet
    std::string victim_ip = "203.0.113.9";
};

/// Deterministic traffic generator configuration. Attack segments must be
/// disjoint and inside [0, duration); benign background keeps flowing during
/// attacks so the device's stream statistics never starve.
struct SynthConfig {
    std::string device_ip = "192.168.1.50";
    std::string device_mac = "02:00:00:aa:bb:01";
    double duration_s = 60.0;
    std::uint64_t seed = 1;
    BenignTrafficSpec benign;
    std::vector<AttackSegmentSpec> attacks;

    static SynthConfig load(const std::string& path);
    void validate() const;
};

struct SynthResult {
    std::vector<PacketEvent> events;  // sorted by timestamp
    std::vector<LabelRange> labels;   // index ranges of attack-generated packets
};

SynthResult synthesize(const SynthConfig& cfg);

}  // namespace warden
