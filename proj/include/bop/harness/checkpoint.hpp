#pragma once

#include <stdexcept>
#include <string>

#include "bop/ensemble/trainer.hpp"

namespace bop::harness {

struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Single-file checkpoint: magic + JSON manifest (config text, config hash,
// iteration, env-step count, blob hash) + the trainer's binary state blob.
void save_checkpoint(const ensemble::Trainer& trainer, const std::string& path);

// Rebuilds a trainer from the embedded config and restores its state
// bit-exactly. Throws IntegrityError on hash mismatch or corruption.
ensemble::Trainer load_checkpoint(const std::string& path);

struct CheckpointInfo {
  RunConfig config;
  int iteration = 0;
  std::uint64_t env_steps = 0;
};

CheckpointInfo peek_checkpoint(const std::string& path);

}  // namespace bop::harness
