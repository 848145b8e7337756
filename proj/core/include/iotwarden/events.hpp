#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "iotwarden/net.hpp"

namespace warden {

/// One observed packet. Ports are present iff the transport is TCP or UDP
/// (both or neither); `direction` is relative to the monitored device.
struct PacketEvent {
    double timestamp = 0.0;  // seconds since epoch
    MacAddress src_mac{};
    IpAddress src_ip{};
    IpAddress dst_ip{};
    std::optional<std::uint16_t> src_port;
    std::optional<std::uint16_t> dst_port;
    std::uint32_t size = 0;  // header + payload bytes
    Direction direction = Direction::Outbound;

    /// Enforces the field invariants; throws ContractError on violation.
    void validate() const;

    bool has_ports() const { return src_port.has_value(); }
};

enum class AttackFamily : std::uint8_t { Benign, Bashlite, Mirai };
enum class AttackVector : std::uint8_t { None, Scan, Junk, Udp, Tcp, Combo, Ack, Syn, UdpPlain };

/// Ground-truth label carried by evaluation data. family=benign pairs only
/// with vector=none, and each botnet family allows only its own vectors.
struct AttackLabel {
    AttackFamily family = AttackFamily::Benign;
    AttackVector vector = AttackVector::None;

    static AttackLabel benign() { return {}; }
    static AttackLabel parse(const std::string& family, const std::string& vector);

    bool is_benign() const { return family == AttackFamily::Benign; }
    bool valid() const;

    bool operator==(const AttackLabel&) const = default;
};

std::string to_string(AttackFamily f);
std::string to_string(AttackVector v);
AttackFamily attack_family_from_string(const std::string& s);
AttackVector attack_vector_from_string(const std::string& s);

}  // namespace warden
