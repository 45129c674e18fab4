#ifndef HIM_CHECKPOINT_HPP
#define HIM_CHECKPOINT_HPP

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "him/array.hpp"

namespace him {

/// Checkpoint file layout:
///   8-byte magic "HIMCKPT1"
///   uint64 LE: JSON header byte length
///   UTF-8 JSON header {config, vocab, rng, opt_step, epoch, manifest}
///   raw little-endian f32 tensor payloads in manifest order
/// Manifest entries carry {name, shape, offset}; offsets are relative to
/// the start of the payload section.
struct CheckpointData {
  nlohmann::json config;
  std::vector<std::string> vocab;
  std::string rng_state;
  int64_t opt_step = 0;
  int epoch = 0;
  std::vector<std::pair<std::string, Array>> tensors;  // manifest order

  const Array* find(const std::string& name) const;
};

inline constexpr char kCheckpointMagic[9] = "HIMCKPT1";

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

}  // namespace him

#endif
