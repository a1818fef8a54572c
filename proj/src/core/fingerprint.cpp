#include "fingerprint.hpp"

#include <openssl/sha.h>

#include "error.hpp"

namespace adaptlm {

Fingerprint sha256(std::string_view bytes) {
  Fingerprint out{};
  SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), out.data());
  return out;
}

std::string to_hex(const Fingerprint& fp) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : fp) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xF]);
  }
  return s;
}

Fingerprint fingerprint_from_hex(std::string_view hex) {
  if (hex.size() != 64) fail(ErrorKind::format, "fingerprint must be 64 hex digits, got '" + std::string(hex) + "'");
  auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    fail(ErrorKind::format, "fingerprint contains non-hex character '" + std::string(1, c) + "'");
  };
  Fingerprint fp{};
  for (std::size_t i = 0; i < 32; ++i) fp[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return fp;
}

}  // namespace adaptlm
