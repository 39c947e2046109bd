#include "bop/harness/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bop/common/binio.hpp"
#include "bop/diff/serialize.hpp"

namespace bop::harness {

namespace {
constexpr char kMagic[4] = {'B', 'O', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const ensemble::Trainer& trainer, const std::string& path) {
  std::ostringstream blob_stream(std::ios::binary);
  trainer.serialize(blob_stream);
  const std::string blob = blob_stream.str();

  nlohmann::json manifest;
  manifest["config"] = trainer.config().to_text();
  manifest["config_hash"] = trainer.config().hash();
  manifest["iteration"] = trainer.iteration();
  manifest["env_steps"] = trainer.env_steps();
  manifest["blob_hash"] = diff::fnv1a64(blob.data(), blob.size());
  const std::string manifest_text = manifest.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  f.write(kMagic, 4);
  binio::write_pod<std::uint32_t>(f, kVersion);
  binio::write_string(f, manifest_text);
  binio::write_string(f, blob);
  if (!f) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

namespace {

struct RawCheckpoint {
  nlohmann::json manifest;
  std::string blob;
};

RawCheckpoint read_raw(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw IntegrityError("checkpoint: bad magic in '" + path + "'");
  const auto version = binio::read_pod<std::uint32_t>(f);
  if (version != kVersion) throw IntegrityError("checkpoint: unsupported version");
  RawCheckpoint raw;
  std::string manifest_text;
  try {
    manifest_text = binio::read_string(f);
    raw.blob = binio::read_string(f);
  } catch (const std::runtime_error&) {
    throw IntegrityError("checkpoint: truncated file '" + path + "'");
  }
  try {
    raw.manifest = nlohmann::json::parse(manifest_text);
  } catch (const nlohmann::json::parse_error&) {
    throw IntegrityError("checkpoint: manifest is not valid JSON");
  }
  const auto expected = raw.manifest.at("blob_hash").get<std::uint64_t>();
  const auto actual = diff::fnv1a64(raw.blob.data(), raw.blob.size());
  if (expected != actual)
    throw IntegrityError("checkpoint: manifest hash mismatch (corrupt state blob)");
  return raw;
}

}  // namespace

ensemble::Trainer load_checkpoint(const std::string& path) {
  auto raw = read_raw(path);
  auto cfg = RunConfig::from_text(raw.manifest.at("config").get<std::string>());
  if (cfg.hash() != raw.manifest.at("config_hash").get<std::uint64_t>())
    throw IntegrityError("checkpoint: config hash mismatch");
  ensemble::Trainer trainer(cfg);
  std::istringstream blob_stream(raw.blob, std::ios::binary);
  trainer.deserialize(blob_stream);
  return trainer;
}

CheckpointInfo peek_checkpoint(const std::string& path) {
  auto raw = read_raw(path);
  CheckpointInfo info;
  info.config = RunConfig::from_text(raw.manifest.at("config").get<std::string>());
  info.iteration = raw.manifest.at("iteration").get<int>();
  info.env_steps = raw.manifest.at("env_steps").get<std::uint64_t>();
  return info;
}

}  // namespace bop::harness
