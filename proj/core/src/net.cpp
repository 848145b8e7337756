#include "iotwarden/net.hpp"

#include <arpa/inet.h>

#include <cstdio>
#include <cstring>

#include "iotwarden/errors.hpp"

namespace warden {

MacAddress MacAddress::parse(const std::string& text) {
    MacAddress mac;
    unsigned v[6];
    char tail;
    int n = std::sscanf(text.c_str(), "%x:%x:%x:%x:%x:%x%c", &v[0], &v[1], &v[2], &v[3], &v[4],
                        &v[5], &tail);
    if (n != 6) throw ParseError("invalid MAC address '" + text + "'");
    for (int i = 0; i < 6; ++i) {
        if (v[i] > 0xff) throw ParseError("invalid MAC address '" + text + "'");
        mac.bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v[i]);
    }
    return mac;
}

std::string MacAddress::to_string() const {
    char buf[18];
    std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", bytes[0], bytes[1], bytes[2],
                  bytes[3], bytes[4], bytes[5]);
    return buf;
}

IpAddress IpAddress::parse(const std::string& text) {
    IpAddress ip;
    if (inet_pton(AF_INET, text.c_str(), ip.bytes.data()) == 1) {
        ip.family = Family::V4;
        return ip;
    }
    if (inet_pton(AF_INET6, text.c_str(), ip.bytes.data()) == 1) {
        ip.family = Family::V6;
        return ip;
    }
    throw ParseError("invalid IP address '" + text + "'");
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN];
    int af = family == Family::V4 ? AF_INET : AF_INET6;
    if (!inet_ntop(af, bytes.data(), buf, sizeof(buf))) return "<invalid>";
    return buf;
}

Direction direction_from_string(const std::string& s) {
    if (s == "out" || s == "outbound") return Direction::Outbound;
    if (s == "in" || s == "inbound") return Direction::Inbound;
    throw ParseError("invalid direction '" + s + "' (expected out|in)");
}

std::string to_string(Direction d) {
    return d == Direction::Outbound ? "out" : "in";
}

std::size_t hash_value(const MacAddress& m) {
    std::size_t h = 0x811c9dc5;
    for (auto b : m.bytes) h = hash_mix(h, b);
    return h;
}

std::size_t hash_value(const IpAddress& a) {
    std::size_t h = a.family == IpAddress::Family::V4 ? 4u : 6u;
    std::size_t n = a.family == IpAddress::Family::V4 ? 4u : 16u;
    for (std::size_t i = 0; i < n; ++i) h = hash_mix(h, a.bytes[i]);
    return h;
}

}  // namespace warden
