#pragma once

#include "npplab/models.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace npplab {

// Little-endian container: "NPPM", u32 version = 1, u32 filter kind,
// u32 feature kind, u32 n_channels, u32 n_filters, u32 decim, u32 feature dim,
// u32 flags, then f64 W[C][F] row-major, f64 eigenvalues[F],
// f64 feature_mean[D], f64 feature_scale[D], f64 weights[D], f64 bias.
inline constexpr std::uint32_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_pipeline(const Pipeline& pipeline);
Pipeline deserialize_pipeline(std::span<const std::uint8_t> bytes);

void save_pipeline(const Pipeline& pipeline, const std::filesystem::path& path);
Pipeline load_pipeline(const std::filesystem::path& path);

}  // namespace npplab
