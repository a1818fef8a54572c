#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "fingerprint.hpp"
#include "lm/model.hpp"

namespace adaptlm::lm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingMetadata {
  std::uint32_t epochs = 0;
  double final_loss = 0.0;
  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

template <typename Real>
struct Checkpoint {
  HyperParams hyper;
  Fingerprint vocab_fingerprint{};
  TrainingMetadata metadata;
  ModelParameters<Real> params;
};

// Layout (all integers and floats little-endian):
//   "ADLMCKPT"  u32 format_version  u32 scalar_bytes (4 | 8)
//   hyperparams: u32 layers, u32 hidden, u32 embed, u32 vocab,
//                f64 dropout, f64 clip_norm (<0 = off), f64 base_lr,
//                u64 seed, u32 loss_reduction (0 mean, 1 sum)
//   32-byte vocabulary fingerprint (SHA-256)
//   u32 epochs  f64 final_loss
//   u32 tensor_count, then per tensor: u32 rows, u32 cols, rows*cols scalars
//   u64 FNV-1a checksum of every preceding byte
template <typename Real>
void save_checkpoint(const Checkpoint<Real>& checkpoint, const std::filesystem::path& path);

// Rejects version, checksum, layout and (when given) fingerprint mismatches.
// Either the whole model is returned or an Error is thrown.
template <typename Real>
Checkpoint<Real> load_checkpoint(const std::filesystem::path& path,
                                 const std::optional<Fingerprint>& expected_fingerprint = std::nullopt);

// Reads only the header fields; useful for dispatching on precision.
struct CheckpointInfo {
  std::uint32_t format_version = 0;
  std::uint32_t scalar_bytes = 0;
  HyperParams hyper;
  std::size_t vocab_size = 0;
  Fingerprint vocab_fingerprint{};
};
CheckpointInfo peek_checkpoint(const std::filesystem::path& path);

}  // namespace adaptlm::lm
