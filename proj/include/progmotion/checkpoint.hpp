#pragma once

// Checkpoint layout (little-endian):
//   char[4] "PGCK" | u16 version | u32 n | n bytes config text |
//   u32 buffer count | per buffer: u16 name length, name, u8 rank, u32 extents[rank], f32 data |
//   u8 has_optimizer | [u64 step | per parameter: f32 m, f32 v] |
//   u32 crc32 of every preceding byte.
// Buffers are the model parameters followed by batch-norm running statistics,
// in traversal order.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "progmotion/config.hpp"

namespace progmotion {

enum class CheckpointErrorKind { kIo, kFormat, kVersion, kChecksum, kShapeMismatch };

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  CheckpointErrorKind kind() const noexcept { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  ModelParams<float> model;
  std::optional<AdamState> optimizer;  // moments live in the parameters' m/v buffers
};

/// The config's model section must describe `model` exactly.
void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, const ModelParams<float>& model,
                     const AdamState* optimizer = nullptr);
std::string serialize_checkpoint(const RunConfig& config, const ModelParams<float>& model,
                                 const AdamState* optimizer = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// Throws kShapeMismatch naming the first differing field, e.g.
/// "model.stages: checkpoint has 4, requested 2".
void require_compatible(const ModelConfig& checkpoint, const ModelConfig& requested, const std::string& requester);

}  // namespace progmotion
