#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bcop/compile.hpp"

namespace bcop {

// "BCOP" deployable model file. Field-by-field layout in docs/formats.md.
// Loading reports ErrorCode::kBadMagic, kBadVersion, kTruncated, kBounds
// or kFormat.
std::vector<std::uint8_t> serialize_model(const CompiledModel& model);
CompiledModel deserialize_model(std::span<const std::uint8_t> bytes);

void emit_model(const CompiledModel& model, const std::filesystem::path& path);
CompiledModel load_model(const std::filesystem::path& path);

}  // namespace bcop
