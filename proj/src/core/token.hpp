#pragma once

#include <cstdint>

namespace adaptlm {

using TokenId = std::uint32_t;

// Reserved vocabulary slots, stable across save/load.
inline constexpr TokenId kUnkId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kReservedCount = 3;

inline constexpr const char* kUnkToken = "<unk>";
inline constexpr const char* kBosToken = "<s>";
inline constexpr const char* kEosToken = "</s>";

}  // namespace adaptlm
