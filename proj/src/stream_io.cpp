#include "railloc/stream_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "railloc/errors.hpp"
#include "railloc/version.hpp"

namespace railloc::io {

using nlohmann::json;

std::uint64_t fnv1a_bytes(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot hash missing file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto n = static_cast<std::size_t>(in.gcount());
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (in.eof()) break;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

std::string manifest_line(std::uint64_t seed,
                          const std::vector<std::pair<std::string, std::string>>& inputs) {
  std::ostringstream out;
  out << kToolName << "/" << kToolVersion << " seed=" << seed;
  if (!inputs.empty()) {
    out << " inputs=";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (i > 0) out << ",";
      out << inputs[i].first << ":" << inputs[i].second;
    }
  }
  return out.str();
}

namespace {

json meta_record(const geom::GeoPoint& origin, const std::string& manifest,
                 const char* stream) {
  json m;
  m["type"] = "meta";
  m["stream"] = stream;
  m["manifest"] = manifest;
  m["origin_lat_deg"] = origin.lat_deg;
  m["origin_lon_deg"] = origin.lon_deg;
  return m;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  return out;
}

// Shared reader: skips the meta record into `origin`, hands every other
// parsed line to the sink.
template <typename Fn>
void read_jsonl(const std::string& path, geom::GeoPoint& origin, Fn&& sink) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open stream: " + path);
  std::string line;
  long lineno = 0;
  bool have_meta = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad JSONL record: " +
                      e.what());
    }
    if (j.value("type", "") == "meta") {
      origin = {j.value("origin_lat_deg", 0.0), j.value("origin_lon_deg", 0.0)};
      have_meta = true;
      continue;
    }
    try {
      sink(j);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad field: " + e.what());
    }
  }
  if (!have_meta) throw DataError(path + ": missing meta record");
}

}  // namespace

void save_truth_jsonl(const std::vector<sim::TruthSample>& truth,
                      const geom::GeoPoint& origin, const std::string& path,
                      const std::string& manifest) {
  auto out = open_out(path);
  out << meta_record(origin, manifest, "truth").dump() << "\n";
  for (const auto& s : truth) {
    json j;
    j["t"] = s.t;
    j["s"] = s.arclength;
    j["x"] = s.pose.x;
    j["y"] = s.pose.y;
    j["psi"] = s.pose.heading;
    j["kappa"] = s.pose.curvature;
    j["v"] = s.speed;
    j["omega"] = s.yaw_rate;
    j["a"] = s.accel;
    out << j.dump() << "\n";
  }
}

void save_gnss_jsonl(const std::vector<sim::GnssFix>& fixes, const geom::GeoPoint& origin,
                     const std::string& path, const std::string& manifest) {
  auto out = open_out(path);
  out << meta_record(origin, manifest, "gnss").dump() << "\n";
  for (const auto& f : fixes) {
    json j;
    j["t"] = f.t;
    j["lat_deg"] = f.position.lat_deg;
    j["lon_deg"] = f.position.lon_deg;
    j["speed"] = f.speed;
    j["cov_ee"] = f.cov_ee;
    j["cov_en"] = f.cov_en;
    j["cov_nn"] = f.cov_nn;
    j["sigma3_max"] = f.sigma3_max;
    j["valid"] = f.valid;
    out << j.dump() << "\n";
  }
}

void save_imu_jsonl(const std::vector<sim::ImuSample>& imu, const geom::GeoPoint& origin,
                    const std::string& path, const std::string& manifest) {
  auto out = open_out(path);
  out << meta_record(origin, manifest, "imu").dump() << "\n";
  for (const auto& s : imu) {
    json j;
    j["t"] = s.t;
    j["ax"] = s.accel[0];
    j["ay"] = s.accel[1];
    j["az"] = s.accel[2];
    j["gx"] = s.gyro[0];
    j["gy"] = s.gyro[1];
    j["gz"] = s.gyro[2];
    out << j.dump() << "\n";
  }
}

TruthStream load_truth_jsonl(const std::string& path) {
  TruthStream out;
  read_jsonl(path, out.origin, [&](const json& j) {
    sim::TruthSample s;
    s.t = j.at("t").get<double>();
    s.arclength = j.at("s").get<double>();
    s.pose.x = j.at("x").get<double>();
    s.pose.y = j.at("y").get<double>();
    s.pose.heading = j.at("psi").get<double>();
    s.pose.curvature = j.at("kappa").get<double>();
    s.speed = j.at("v").get<double>();
    s.yaw_rate = j.at("omega").get<double>();
    s.accel = j.value("a", 0.0);
    out.samples.push_back(s);
  });
  return out;
}

GnssStream load_gnss_jsonl(const std::string& path) {
  GnssStream out;
  read_jsonl(path, out.origin, [&](const json& j) {
    sim::GnssFix f;
    f.t = j.at("t").get<double>();
    f.position = {j.at("lat_deg").get<double>(), j.at("lon_deg").get<double>()};
    f.speed = j.at("speed").get<double>();
    f.cov_ee = j.at("cov_ee").get<double>();
    f.cov_en = j.at("cov_en").get<double>();
    f.cov_nn = j.at("cov_nn").get<double>();
    f.sigma3_max = j.value("sigma3_max", 0.0);
    f.valid = j.value("valid", true);
    out.fixes.push_back(f);
  });
  return out;
}

ImuStream load_imu_jsonl(const std::string& path) {
  ImuStream out;
  read_jsonl(path, out.origin, [&](const json& j) {
    sim::ImuSample s;
    s.t = j.at("t").get<double>();
    s.accel[0] = j.at("ax").get<double>();
    s.accel[1] = j.at("ay").get<double>();
    s.accel[2] = j.at("az").get<double>();
    s.gyro[0] = j.at("gx").get<double>();
    s.gyro[1] = j.at("gy").get<double>();
    s.gyro[2] = j.at("gz").get<double>();
    out.samples.push_back(s);
  });
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace railloc::io
