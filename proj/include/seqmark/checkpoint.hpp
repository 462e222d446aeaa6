#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "seqmark/model.hpp"

namespace seqmark {

/// Layout: "SEQMARK1" | u64 LE manifest length | UTF-8 JSON manifest |
/// f64 LE parameter values. The manifest carries the format version, the
/// model config, the vocabulary, and (name, shape, byte offset) for every
/// parameter; offsets tile the value buffer exactly.
struct CheckpointError : std::runtime_error {
  enum class Kind { Io, BadMagic, VersionMismatch, CorruptManifest, Truncated };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

inline constexpr int kCheckpointVersion = 1;

std::vector<char> serialize_checkpoint(const Tagger& tagger);
Tagger deserialize_checkpoint(const std::vector<char>& bytes);

void save_checkpoint(const Tagger& tagger, const std::string& path);
Tagger load_checkpoint(const std::string& path);

}  // namespace seqmark
