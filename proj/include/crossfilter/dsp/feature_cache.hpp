#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "crossfilter/core/error.hpp"
#include "crossfilter/dsp/types.hpp"

namespace crossfilter::dsp {

/// On-disk feature file, one per (clip_id, kind):
///
///   offset  size  field
///   0       4     magic "CFFC"
///   4       4     version (u32 LE, currently 1)
///   8       1     kind (u8: 0 spec, 1 logmel, 2 mfcc, 3 cqt)
///   9       3     reserved (zero)
///   12      4     n_bins (u32 LE)
///   16      4     n_frames (u32 LE)
///   20      8     hop_seconds (f64 LE)
///   28      ...   n_bins * n_frames f32 LE, row-major (bin-major)
///
/// File name: <clip_id>.<kind>.cff inside the cache directory.
inline constexpr std::uint32_t kFeatureCacheVersion = 1;

inline std::string feature_cache_path(const std::string& dir, const std::string& clip_id,
                                      RepKind kind) {
  return (std::filesystem::path(dir) / (clip_id + "." + rep_kind_name(kind) + ".cff")).string();
}

inline void write_feature(const std::string& path, const TimeFreqRep& rep) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Errc::io_error, "cannot open for write: " + path);
  f.write("CFFC", 4);
  const std::uint32_t version = kFeatureCacheVersion;
  f.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint8_t kind = static_cast<std::uint8_t>(rep.kind);
  const std::uint8_t pad[3] = {0, 0, 0};
  f.write(reinterpret_cast<const char*>(&kind), 1);
  f.write(reinterpret_cast<const char*>(pad), 3);
  const std::uint32_t n_bins = static_cast<std::uint32_t>(rep.n_bins());
  const std::uint32_t n_frames = static_cast<std::uint32_t>(rep.n_frames());
  f.write(reinterpret_cast<const char*>(&n_bins), 4);
  f.write(reinterpret_cast<const char*>(&n_frames), 4);
  f.write(reinterpret_cast<const char*>(&rep.hop_seconds), 8);
  f.write(reinterpret_cast<const char*>(rep.values.data()),
          static_cast<std::streamsize>(rep.values.size() * sizeof(float)));
  require(f.good(), Errc::io_error, "short write: " + path);
}

inline TimeFreqRep read_feature(const std::string& path, const std::string& clip_id = "") {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), Errc::io_error, "cannot open: " + path);
  char magic[4];
  f.read(magic, 4);
  require(f.good() && std::memcmp(magic, "CFFC", 4) == 0, Errc::parse_error,
          "bad feature file magic: " + path);
  std::uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), 4);
  require(version == kFeatureCacheVersion, Errc::parse_error,
          "unsupported feature file version: " + path);
  std::uint8_t kind = 0, pad[3];
  f.read(reinterpret_cast<char*>(&kind), 1);
  f.read(reinterpret_cast<char*>(pad), 3);
  require(kind <= 3, Errc::parse_error, "bad representation kind: " + path);
  std::uint32_t n_bins = 0, n_frames = 0;
  f.read(reinterpret_cast<char*>(&n_bins), 4);
  f.read(reinterpret_cast<char*>(&n_frames), 4);
  TimeFreqRep rep;
  rep.kind = static_cast<RepKind>(kind);
  rep.clip_id = clip_id;
  f.read(reinterpret_cast<char*>(&rep.hop_seconds), 8);
  require(n_bins >= 1 && n_frames >= 1, Errc::parse_error, "empty feature matrix: " + path);
  rep.values = MatF(n_bins, n_frames);
  f.read(reinterpret_cast<char*>(rep.values.data()),
         static_cast<std::streamsize>(rep.values.size() * sizeof(float)));
  require(f.good(), Errc::parse_error, "truncated feature file: " + path);
  return rep;
}

/// True when a valid cache entry with the expected geometry already exists;
/// the extractor uses this to skip up-to-date entries.
inline bool feature_cache_fresh(const std::string& path, RepKind kind, int n_bins) {
  if (!std::filesystem::exists(path)) return false;
  try {
    const auto rep = read_feature(path);
    return rep.kind == kind && rep.n_bins() == static_cast<std::size_t>(n_bins);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace crossfilter::dsp
