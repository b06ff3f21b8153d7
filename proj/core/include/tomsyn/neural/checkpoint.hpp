#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tomsyn::neural {

// A checkpoint is an architecture descriptor plus named flat float arrays
// (parameters, batch-norm running stats, optionally optimizer state) in a
// fixed order. On disk: magic line, payload length, payload, CRC32 of the
// payload. Save/load round-trips bit-exactly; corruption fails the CRC.
struct CheckpointData {
  std::string architecture;
  std::vector<std::pair<std::string, std::vector<float>>> arrays;

  const std::vector<float>* find(const std::string& name) const {
    for (const auto& [n, a] : arrays) {
      if (n == name) return &a;
    }
    return nullptr;
  }
};

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

}  // namespace tomsyn::neural
