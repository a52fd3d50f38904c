#pragma once

#include "npplab/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace npplab {

// Little-endian "EEGP" container, version 1:
//   magic[4] u32 version u32 n_subjects f32 fs u32 n_channels u32 n_samples u32 n_classes
//   per subject: u32 subject_id u32 n_trials u32 labels[n_trials]
//                f32 data[n_trials][n_channels][n_samples]
// Trials are written grouped by subject (first-appearance order). Samples are
// stored as f32, so the round trip is exact for f32-representable data.
// Name, channel names and class names go to a JSON companion: <path>.json.
inline constexpr std::uint32_t kDatasetFormatVersion = 1;

struct DatasetHeader {
  std::uint32_t version = 0;
  std::uint32_t n_subjects = 0;
  float fs = 0.0f;
  std::uint32_t n_channels = 0;
  std::uint32_t n_samples = 0;
  std::uint32_t n_classes = 0;
};

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
DatasetHeader decode_dataset_header(std::span<const std::uint8_t> bytes);

std::filesystem::path metadata_path(const std::filesystem::path& path);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
// Channel/class names default to generic labels when the companion is missing.
Dataset load_dataset(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace npplab
