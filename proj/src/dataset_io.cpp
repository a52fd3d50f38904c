#include "npplab/dataset_io.hpp"

#include "binary.hpp"
#include "npplab/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace npplab {
namespace {

constexpr std::string_view kMagic = "EEGP";

}  // namespace

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset) {
  if (dataset.empty()) throw ConfigError("cannot encode an empty dataset");
  dataset.validate();
  const Trial& first = dataset.trials.front();
  int max_label = 0;
  for (const Trial& t : dataset.trials) max_label = std::max(max_label, t.label);
  const auto n_classes = static_cast<std::uint32_t>(
      std::max<std::size_t>(dataset.class_names.size(), static_cast<std::size_t>(max_label) + 1));
  const std::vector<std::uint32_t> subjects = dataset.subjects();

  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kDatasetFormatVersion);
  w.u32(static_cast<std::uint32_t>(subjects.size()));
  w.f32(static_cast<float>(first.fs));
  w.u32(static_cast<std::uint32_t>(first.n_channels()));
  w.u32(static_cast<std::uint32_t>(first.n_samples()));
  w.u32(n_classes);
  for (std::uint32_t s : subjects) {
    std::vector<const Trial*> ts;
    for (const Trial& t : dataset.trials) {
      if (t.subject == s) ts.push_back(&t);
    }
    w.u32(s);
    w.u32(static_cast<std::uint32_t>(ts.size()));
    for (const Trial* t : ts) w.u32(static_cast<std::uint32_t>(t->label));
    for (const Trial* t : ts) {
      for (Eigen::Index c = 0; c < t->data.rows(); ++c) {
        for (Eigen::Index i = 0; i < t->data.cols(); ++i) w.f32(static_cast<float>(t->data(c, i)));
      }
    }
  }
  return w.take();
}

DatasetHeader decode_dataset_header(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kMagic);
  DatasetHeader h;
  const std::uint64_t version_at = r.offset();
  h.version = r.u32("version");
  if (h.version != kDatasetFormatVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(h.version), version_at);
  }
  h.n_subjects = r.u32("n_subjects");
  const std::uint64_t fs_at = r.offset();
  h.fs = r.f32("fs");
  if (!(h.fs > 0.0f) || !std::isfinite(h.fs)) throw FormatError("sampling rate must be positive", fs_at);
  const std::uint64_t shape_at = r.offset();
  h.n_channels = r.u32("n_channels");
  h.n_samples = r.u32("n_samples");
  h.n_classes = r.u32("n_classes");
  if (h.n_channels == 0 || h.n_samples == 0) throw FormatError("zero channels or samples", shape_at);
  return h;
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  const DatasetHeader h = decode_dataset_header(bytes);
  detail::ByteReader r(bytes);
  r.expect_magic(kMagic);
  for (int i = 0; i < 6; ++i) r.u32("header");

  Dataset d;
  const std::size_t per_trial = static_cast<std::size_t>(h.n_channels) * h.n_samples;
  for (std::uint32_t s = 0; s < h.n_subjects; ++s) {
    const std::uint32_t subject = r.u32("subject_id");
    const std::uint64_t count_at = r.offset();
    const std::uint32_t n_trials = r.u32("n_trials");
    // Check the whole block up front so a bad count reports where it was read.
    const std::uint64_t block = static_cast<std::uint64_t>(n_trials) * (4 + 4 * per_trial);
    if (block > r.remaining()) {
      throw FormatError("subject " + std::to_string(subject) + " declares " + std::to_string(n_trials) +
                            " trials but only " + std::to_string(r.remaining()) + " bytes remain",
                        count_at);
    }
    std::vector<int> labels(n_trials);
    for (std::uint32_t i = 0; i < n_trials; ++i) {
      const std::uint64_t at = r.offset();
      const std::uint32_t y = r.u32("label");
      if (y >= h.n_classes) throw FormatError("label " + std::to_string(y) + " >= n_classes", at);
      labels[i] = static_cast<int>(y);
    }
    for (std::uint32_t i = 0; i < n_trials; ++i) {
      Trial t;
      t.fs = static_cast<double>(h.fs);
      t.label = labels[i];
      t.subject = subject;
      t.data.resize(h.n_channels, h.n_samples);
      for (std::uint32_t c = 0; c < h.n_channels; ++c) {
        for (std::uint32_t k = 0; k < h.n_samples; ++k) {
          const std::uint64_t at = r.offset();
          const float v = r.f32("sample");
          if (!std::isfinite(v)) throw FormatError("non-finite sample", at);
          t.data(c, k) = static_cast<double>(v);
        }
      }
      d.trials.push_back(std::move(t));
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(std::to_string(r.remaining()) + " trailing bytes after the last subject", r.offset());
  }
  for (std::uint32_t c = 0; c < h.n_channels; ++c) d.channel_names.push_back("ch" + std::to_string(c));
  for (std::uint32_t k = 0; k < h.n_classes; ++k) d.class_names.push_back("class" + std::to_string(k));
  return d;
}

std::filesystem::path metadata_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".json";
  return p;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, encode_dataset(dataset));
  nlohmann::json meta;
  meta["name"] = dataset.name;
  meta["channel_names"] = dataset.channel_names;
  meta["class_names"] = dataset.class_names;
  const std::string text = meta.dump(2) + "\n";
  write_file(metadata_path(path), std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("dataset file not found: " + path.string());
  Dataset d = decode_dataset(read_file(path));
  const auto meta_path = metadata_path(path);
  if (std::filesystem::exists(meta_path)) {
    const std::vector<std::uint8_t> raw = read_file(meta_path);
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(raw.begin(), raw.end());
      d.name = meta.value("name", std::string{});
      if (meta.contains("channel_names")) d.channel_names = meta.at("channel_names").get<std::vector<std::string>>();
      if (meta.contains("class_names")) d.class_names = meta.at("class_names").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad dataset metadata " + meta_path.string() + ": " + e.what());
    }
  } else {
    d.name = path.stem().string();
  }
  d.validate();
  return d;
}

}  // namespace npplab
