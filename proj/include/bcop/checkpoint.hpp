#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bcop/model.hpp"

namespace bcop {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "BCKP" latent-model checkpoint; layout in docs/formats.md.
std::vector<std::uint8_t> serialize_checkpoint(const TrainedModel& model);
TrainedModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace bcop
