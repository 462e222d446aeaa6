#include <algorithm>
#include "seqmark/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

namespace seqmark {

namespace {

constexpr std::string_view kMagicPrefix = "SEQMARK";
using Kind = CheckpointError::Kind;

void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

std::vector<char> serialize_checkpoint(const Tagger& tagger) {
  const auto& params = tagger.model.params();
  nlohmann::json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = to_json(tagger.model.config());
  manifest["vocab"] = tagger.vocab.tokens();
  nlohmann::json entries = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& p : params) {
    entries.push_back({{"name", p.name}, {"shape", p.var.shape()}, {"offset", offset}});
    offset += 8 * p.var.value().size();
  }
  manifest["params"] = entries;
  manifest["buffer_bytes"] = offset;
  const std::string text = manifest.dump();

  std::vector<char> out(kMagicPrefix.begin(), kMagicPrefix.end());
  out.push_back(static_cast<char>('0' + kCheckpointVersion));
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& p : params)
    for (double v : p.var.value().values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Tagger deserialize_checkpoint(const std::vector<char>& bytes) {
  const std::size_t head = std::min(bytes.size(), kMagicPrefix.size());
  if (std::string_view(bytes.data(), head) != kMagicPrefix.substr(0, head)) {
    throw CheckpointError(Kind::BadMagic, "checkpoint: missing SEQMARK magic");
  }
  if (bytes.size() < kMagicPrefix.size() + 1) throw CheckpointError(Kind::Truncated, "checkpoint: truncated magic");
  const char version = bytes[kMagicPrefix.size()];
  if (version != static_cast<char>('0' + kCheckpointVersion)) {
    throw CheckpointError(Kind::VersionMismatch, std::string("checkpoint: format version ") + version +
                                                     " is not supported (expected " +
                                                     std::to_string(kCheckpointVersion) + ")");
  }
  std::size_t pos = kMagicPrefix.size() + 1;
  if (bytes.size() < pos + 8) throw CheckpointError(Kind::Truncated, "checkpoint: truncated header");
  const std::uint64_t manifest_len = get_u64(bytes.data() + pos);
  pos += 8;
  if (manifest_len > bytes.size() - pos) throw CheckpointError(Kind::Truncated, "checkpoint: truncated manifest");

  nlohmann::json manifest;
  ModelConfig config;
  std::vector<std::string> vocab_tokens;
  try {
    manifest = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + manifest_len));
    if (manifest.at("format_version").get<int>() != kCheckpointVersion) {
      throw CheckpointError(Kind::VersionMismatch, "checkpoint: manifest format version mismatch");
    }
    config = model_config_from_json(manifest.at("config"));
    vocab_tokens = manifest.at("vocab").get<std::vector<std::string>>();
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::CorruptManifest, std::string("checkpoint: corrupt manifest: ") + e.what());
  }
  pos += manifest_len;

  Tagger tagger{Model::assemble(config), Vocabulary(std::move(vocab_tokens))};
  const auto& params = tagger.model.params();
  const auto& entries = manifest.at("params");
  if (!entries.is_array() || entries.size() != params.size()) {
    throw CheckpointError(Kind::CorruptManifest, "checkpoint: parameter manifest does not match the config");
  }
  std::uint64_t expected = 0;
  std::vector<Tensor> values;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = entries[i];
    try {
      if (e.at("name").get<std::string>() != params[i].name ||
          e.at("shape").get<Shape>() != params[i].var.shape() || e.at("offset").get<std::uint64_t>() != expected) {
        throw CheckpointError(Kind::CorruptManifest, "checkpoint: manifest entry " + std::to_string(i) + " (" +
                                                         params[i].name + ") is inconsistent");
      }
    } catch (const nlohmann::json::exception& ex) {
      throw CheckpointError(Kind::CorruptManifest, std::string("checkpoint: corrupt manifest: ") + ex.what());
    }
    const std::size_t n = params[i].var.value().size();
    if (bytes.size() - pos < expected + 8 * n) {
      throw CheckpointError(Kind::Truncated, "checkpoint: parameter buffer truncated at " + params[i].name);
    }
    std::vector<double> buf(n);
    for (std::size_t k = 0; k < n; ++k) {
      buf[k] = std::bit_cast<double>(get_u64(bytes.data() + pos + expected + 8 * k));
    }
    values.emplace_back(params[i].var.shape(), std::move(buf));
    expected += 8 * n;
  }
  if (bytes.size() - pos != expected) {
    throw CheckpointError(Kind::CorruptManifest, "checkpoint: " + std::to_string(bytes.size() - pos - expected) +
                                                     " trailing bytes after the parameter buffer");
  }
  tagger.model.restore(values);
  return tagger;
}

void save_checkpoint(const Tagger& tagger, const std::string& path) {
  const auto bytes = serialize_checkpoint(tagger);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(Kind::Io, "cannot write checkpoint " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(Kind::Io, "write failed for checkpoint " + path);
}

Tagger load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::Io, "cannot open checkpoint " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace seqmark
