#pragma once

#include <filesystem>
#include <string>

#include "advmt/config.hpp"
#include "advmt/errors.hpp"
#include "advmt/model.hpp"

namespace advmt {

// Binary layout (all integers little-endian):
//   "ADVMTCK1"                          8-byte magic
//   u32 header length, UTF-8 JSON header (format version, config snapshot,
//       task names, tensor manifest of name / scope / shape)
//   per task, in header order: u32 min_frequency, u32 token count, then
//       each token as u32 byte length + UTF-8 bytes (reserved ids excluded)
//   f64 payloads of every manifest tensor, in manifest order
// Nothing may follow the last payload.
inline constexpr char kCheckpointMagic[] = "ADVMTCK1";
inline constexpr int kCheckpointVersion = 1;

enum class CheckpointErrc { BadMagic = 1, Truncated, VersionMismatch, TrailingBytes, Malformed, Io };

struct CheckpointError : DataError {
  CheckpointError(CheckpointErrc code, const std::string& what) : DataError(what), code(code) {}
  CheckpointErrc code;
};

struct LoadedCheckpoint {
  Model model;
  Config config;
};

std::string serialize_checkpoint(const Model& model, const Config& config);
LoadedCheckpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Config& config);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace advmt
