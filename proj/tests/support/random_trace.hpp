#pragma once

#include <cstdint>
#include <vector>

#include "iotwarden/events.hpp"

namespace warden::testing {

struct TraceOptions {
    std::size_t packets = 1000;
    std::size_t peers = 6;
    double mean_gap_s = 0.01;
    double spoof_prob = 0.02;     // fresh never-seen source IP
    double portless_prob = 0.05;  // ICMP-style packets without ports
    double same_time_prob = 0.03; // duplicate timestamps (dt = 0 path)
    double long_gap_prob = 0.005; // multi-second silences
};

/// Seeded synthetic device-centric packet trace for kernel/extractor tests.
std::vector<PacketEvent> make_random_trace(std::uint64_t seed, const TraceOptions& options = {});

}  // namespace warden::testing
