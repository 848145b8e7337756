#include "random_trace.hpp"

#include <cmath>
#include <random>
#include <string>

#include "iotwarden/autoencoder.hpp"  // uniform01

namespace warden::testing {

std::vector<PacketEvent> make_random_trace(std::uint64_t seed, const TraceOptions& options) {
    std::mt19937_64 rng(seed);
    const IpAddress device_ip = IpAddress::parse("192.168.1.50");
    MacAddress device_mac{};
    device_mac.bytes = {0x02, 0xde, 0xad, 0xbe, 0xef, 0x01};

    std::vector<IpAddress> peer_ips;
    std::vector<MacAddress> peer_macs;
    for (std::size_t i = 0; i < options.peers; ++i) {
        peer_ips.push_back(IpAddress::parse("10.0.0." + std::to_string(10 + i)));
        MacAddress m{};
        m.bytes = {0x02, 0x11, 0x22, 0x33, 0x44, static_cast<std::uint8_t>(i + 1)};
        peer_macs.push_back(m);
    }

    std::vector<PacketEvent> trace;
    double t = 1000.0;
    for (std::size_t n = 0; n < options.packets; ++n) {
        if (uniform01(rng) >= options.same_time_prob || trace.empty()) {
            double gap = -std::log1p(-uniform01(rng)) * options.mean_gap_s;
            if (uniform01(rng) < options.long_gap_prob) gap += 1.0 + 30.0 * uniform01(rng);
            t += gap;
        }
        std::size_t peer = static_cast<std::size_t>(rng() % options.peers);
        bool outbound = uniform01(rng) < 0.6;
        bool portless = uniform01(rng) < options.portless_prob;
        bool spoof = outbound && uniform01(rng) < options.spoof_prob;

        PacketEvent e;
        e.timestamp = t;
        e.size = 60 + static_cast<std::uint32_t>(rng() % 1200);
        if (outbound) {
            e.src_ip = device_ip;
            e.src_mac = device_mac;
            e.dst_ip = peer_ips[peer];
            e.direction = Direction::Outbound;
            if (spoof) {
                std::uint32_t lo = static_cast<std::uint32_t>(rng() & 0xffff);
                e.src_ip = IpAddress::parse("198.51." + std::to_string(lo >> 8) + "." +
                                            std::to_string(lo & 0xff));
            }
        } else {
            e.src_ip = peer_ips[peer];
            e.src_mac = peer_macs[peer];
            e.dst_ip = device_ip;
            e.direction = Direction::Inbound;
        }
        if (!portless) {
            std::uint16_t device_port = static_cast<std::uint16_t>(40000 + peer);
            std::uint16_t peer_port = static_cast<std::uint16_t>(8000 + peer % 3);
            e.src_port = outbound ? device_port : peer_port;
            e.dst_port = outbound ? peer_port : device_port;
        }
        trace.push_back(e);
    }
    return trace;
}

}  // namespace warden::testing
