#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace adaptlm {

using Fingerprint = std::array<std::uint8_t, 32>;

Fingerprint sha256(std::string_view bytes);
std::string to_hex(const Fingerprint& fp);
// Throws Error(format) on malformed input.
Fingerprint fingerprint_from_hex(std::string_view hex);

}  // namespace adaptlm
