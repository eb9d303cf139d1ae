#pragma once

#include <filesystem>
#include <string>

#include "wvsc/training.h"

namespace wvsc {

// Container layout: 8-byte magic "WVSCCKPT", u32 version, u64 header length,
// JSON header (configs, step, statistics, tensor table), then raw
// little-endian doubles in table order.
inline constexpr char kCheckpointMagic[9] = "WVSCCKPT";
inline constexpr uint32_t kCheckpointVersion = 1;

// Writes to a sibling temp file and renames it into place.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// JSON text of the configs, used for manifests and config hashing.
std::string model_config_json(const ModelConfig& config);
std::string train_config_json(const TrainConfig& config);
ModelConfig model_config_from_json(const std::string& text);
TrainConfig train_config_from_json(const std::string& text);

}  // namespace wvsc
