#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>

namespace warden {

/// Hardware address, printed as aa:bb:cc:dd:ee:ff.
struct MacAddress {
    std::array<std::uint8_t, 6> bytes{};

    static MacAddress parse(const std::string& text);
    std::string to_string() const;

    bool operator==(const MacAddress&) const = default;
};

/// IPv4 or IPv6 address. Stored as raw network-order bytes so equality and
/// hashing are canonical regardless of the textual spelling.
struct IpAddress {
    enum class Family : std::uint8_t { V4, V6 };

    Family family{Family::V4};
    std::array<std::uint8_t, 16> bytes{};  // first 4 used for V4

    static IpAddress parse(const std::string& text);
    std::string to_string() const;

    bool operator==(const IpAddress&) const = default;
};

/// Packet direction relative to the monitored device.
enum class Direction : std::uint8_t { Outbound, Inbound };

Direction direction_from_string(const std::string& s);
std::string to_string(Direction d);

std::size_t hash_value(const MacAddress& m);
std::size_t hash_value(const IpAddress& a);

/// FNV-1a style mixing for composing key hashes.
inline std::size_t hash_mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

}  // namespace warden

template <>
struct std::hash<warden::MacAddress> {
    std::size_t operator()(const warden::MacAddress& m) const { return warden::hash_value(m); }
};

template <>
struct std::hash<warden::IpAddress> {
    std::size_t operator()(const warden::IpAddress& a) const { return warden::hash_value(a); }
};
