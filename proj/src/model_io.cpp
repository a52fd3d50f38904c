#include "npplab/model_io.hpp"

#include "binary.hpp"
#include "npplab/dataset_io.hpp"
#include "npplab/errors.hpp"

#include <cmath>

namespace npplab {
namespace {

constexpr std::string_view kMagic = "NPPM";
constexpr std::uint32_t kFlagLowSeparation = 1u << 0;
constexpr std::uint32_t kFlagDegenerate = 1u << 1;

}  // namespace

std::vector<std::uint8_t> serialize_pipeline(const Pipeline& p) {
  const auto c = p.filters.weights.rows();
  const auto f = p.filters.weights.cols();
  const auto d = p.lr.weights.size();
  if (p.filters.eigenvalues.size() != f || p.lr.feature_mean.size() != d || p.lr.feature_scale.size() != d) {
    throw ConfigError("pipeline parts have inconsistent sizes");
  }
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(p.filters.kind));
  w.u32(static_cast<std::uint32_t>(p.feature_kind));
  w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(f));
  w.u32(static_cast<std::uint32_t>(p.decim));
  w.u32(static_cast<std::uint32_t>(d));
  std::uint32_t flags = 0;
  if (p.filters.low_separation) flags |= kFlagLowSeparation;
  if (p.diagnostics.degenerate) flags |= kFlagDegenerate;
  w.u32(flags);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < f; ++j) w.f64(p.filters.weights(i, j));
  }
  for (Eigen::Index j = 0; j < f; ++j) w.f64(p.filters.eigenvalues(j));
  for (Eigen::Index j = 0; j < d; ++j) w.f64(p.lr.feature_mean(j));
  for (Eigen::Index j = 0; j < d; ++j) w.f64(p.lr.feature_scale(j));
  for (Eigen::Index j = 0; j < d; ++j) w.f64(p.lr.weights(j));
  w.f64(p.lr.bias);
  return w.take();
}

Pipeline deserialize_pipeline(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic(kMagic);
  const std::uint64_t version_at = r.offset();
  const std::uint32_t version = r.u32("version");
  if (version != kModelFormatVersion) throw FormatError("unsupported model version " + std::to_string(version), version_at);

  Pipeline p;
  const std::uint64_t kind_at = r.offset();
  const std::uint32_t filter_kind = r.u32("filter kind");
  const std::uint32_t feature_kind = r.u32("feature kind");
  if (filter_kind > 1 || feature_kind > 1 || filter_kind != feature_kind) {
    throw FormatError("invalid filter/feature kind", kind_at);
  }
  p.filters.kind = static_cast<FilterKind>(filter_kind);
  p.feature_kind = static_cast<FeatureKind>(feature_kind);

  const std::uint64_t dims_at = r.offset();
  const std::uint32_t c = r.u32("n_channels");
  const std::uint32_t f = r.u32("n_filters");
  const std::uint32_t decim = r.u32("decim");
  const std::uint32_t d = r.u32("feature dim");
  const std::uint32_t flags = r.u32("flags");
  if (c == 0 || f == 0 || f > c || decim == 0 || d == 0) throw FormatError("invalid model dimensions", dims_at);
  const std::uint64_t payload = 8ull * (static_cast<std::uint64_t>(c) * f + f + 3ull * d + 1);
  if (payload != r.remaining()) {
    throw FormatError("model payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                          std::to_string(payload),
                      r.offset());
  }
  p.decim = decim;
  p.filters.low_separation = (flags & kFlagLowSeparation) != 0;
  p.diagnostics.degenerate = (flags & kFlagDegenerate) != 0;

  p.filters.weights.resize(c, f);
  for (std::uint32_t i = 0; i < c; ++i) {
    for (std::uint32_t j = 0; j < f; ++j) p.filters.weights(i, j) = r.f64("W");
  }
  p.filters.eigenvalues.resize(f);
  for (std::uint32_t j = 0; j < f; ++j) p.filters.eigenvalues(j) = r.f64("eigenvalue");
  p.lr.feature_mean.resize(d);
  p.lr.feature_scale.resize(d);
  p.lr.weights.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) p.lr.feature_mean(j) = r.f64("feature_mean");
  for (std::uint32_t j = 0; j < d; ++j) {
    const std::uint64_t at = r.offset();
    p.lr.feature_scale(j) = r.f64("feature_scale");
    if (!(p.lr.feature_scale(j) > 0.0)) throw FormatError("feature scale must be > 0", at);
  }
  for (std::uint32_t j = 0; j < d; ++j) p.lr.weights(j) = r.f64("weight");
  p.lr.bias = r.f64("bias");
  return p;
}

void save_pipeline(const Pipeline& pipeline, const std::filesystem::path& path) {
  write_file(path, serialize_pipeline(pipeline));
}

Pipeline load_pipeline(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("model file not found: " + path.string());
  return deserialize_pipeline(read_file(path));
}

}  // namespace npplab
