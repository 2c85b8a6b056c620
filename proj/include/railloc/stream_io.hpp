#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "railloc/sensors.hpp"

namespace railloc::io {

// FNV-1a over a file's bytes; used for input fingerprints in manifests.
std::uint64_t fnv1a_file(const std::string& path);
std::uint64_t fnv1a_bytes(const void* data, std::size_t size);
std::string hash_hex(std::uint64_t h);

// Manifest comment placed on the first line of every output file:
//   tool/version seed=<n> inputs=<name>:<hash>,...
std::string manifest_line(std::uint64_t seed,
                          const std::vector<std::pair<std::string, std::string>>& inputs);

// JSONL streams: one record per line, SI units, explicit field names. The
// first line is a meta record {"type":"meta",...} carrying the manifest and
// the plane origin.
void save_truth_jsonl(const std::vector<sim::TruthSample>& truth,
                      const geom::GeoPoint& origin, const std::string& path,
                      const std::string& manifest);
void save_gnss_jsonl(const std::vector<sim::GnssFix>& fixes,
                     const geom::GeoPoint& origin, const std::string& path,
                     const std::string& manifest);
void save_imu_jsonl(const std::vector<sim::ImuSample>& imu,
                    const geom::GeoPoint& origin, const std::string& path,
                    const std::string& manifest);

struct TruthStream {
  std::vector<sim::TruthSample> samples;
  geom::GeoPoint origin;
};
struct GnssStream {
  std::vector<sim::GnssFix> fixes;
  geom::GeoPoint origin;
};
struct ImuStream {
  std::vector<sim::ImuSample> samples;
  geom::GeoPoint origin;
};

TruthStream load_truth_jsonl(const std::string& path);
GnssStream load_gnss_jsonl(const std::string& path);
ImuStream load_imu_jsonl(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace railloc::io
