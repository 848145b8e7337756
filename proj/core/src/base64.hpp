#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace warden::detail {

std::string base64_encode(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Doubles <-> base64 of their little-endian IEEE-754 bytes.
std::string encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const std::string& text);

}  // namespace warden::detail
