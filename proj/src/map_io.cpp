#include "railloc/map_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "railloc/errors.hpp"
#include "railloc/version.hpp"

namespace railloc::maps {

using geom::GeoPoint;
using geom::Shape;
using geom::TrackElement;

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// Radius token for an element row: the curved end's radius, `inf` for
// straight rows (and fully flat transitional arcs).
std::string radius_token(const TrackElement& e) {
  double kappa = 0.0;
  if (e.shape == Shape::kCircularArc) {
    kappa = e.kappa0;
  } else if (e.shape == Shape::kTransitionalArc) {
    kappa = (e.kappa1 != 0.0) ? e.kappa1 : e.kappa0;
  }
  if (kappa == 0.0) return "inf";
  return fmt("%.3f", 1.0 / kappa);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void parse_fail(int row, const std::string& what) {
  throw DataError("map csv row " + std::to_string(row) + ": " + what);
}

double parse_num(const std::string& tok, int row) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) parse_fail(row, "trailing characters in number '" + tok + "'");
    return v;
  } catch (const std::invalid_argument&) {
    parse_fail(row, "expected a number, got '" + tok + "'");
  } catch (const std::out_of_range&) {
    parse_fail(row, "number out of range '" + tok + "'");
  }
}

}  // namespace

std::string map_to_csv(const TrackMap& map, const std::string& manifest) {
  check_map_invariants(map);
  std::ostringstream out;
  out << "# " << kToolName << "/" << kToolVersion << " compact-track-map";
  if (!manifest.empty()) out << " " << manifest;
  out << "\n";
  out << "p0_deg," << fmt("%.6f", map.p0.lat_deg) << "," << fmt("%.6f", map.p0.lon_deg)
      << "\n";
  double psi = std::fmod(map.start_heading_deg, 360.0);
  if (psi < 0.0) psi += 360.0;
  // %.1f of 359.96..360 would print "360.0"; keep the stored range.
  if (psi >= 359.95) psi = 0.0;
  out << "psi0_deg," << fmt("%.1f", psi) << "\n";
  out << "index,shape,length_m,radius_m\n";
  for (std::size_t i = 0; i < map.elements.size(); ++i) {
    const TrackElement& e = map.elements[i];
    out << (i + 1) << "," << geom::shape_token(e.shape) << ","
        << fmt("%.3f", e.length) << "," << radius_token(e) << "\n";
  }
  return out.str();
}

TrackMap map_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int row = 0;
  TrackMap map;
  bool have_p0 = false, have_psi = false, have_header = false;

  struct Row {
    Shape shape;
    double length;
    double radius;  // signed; infinity for straights
    int file_row;
  };
  std::vector<Row> rows;
  long last_index = 0;

  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const auto tok = split_csv(line);
    if (tok[0] == "p0_deg") {
      if (tok.size() != 3) parse_fail(row, "p0_deg needs lat,lon");
      map.p0 = {parse_num(tok[1], row), parse_num(tok[2], row)};
      geom::validate_geo(map.p0);
      have_p0 = true;
    } else if (tok[0] == "psi0_deg") {
      if (tok.size() != 2) parse_fail(row, "psi0_deg needs one value");
      map.start_heading_deg = parse_num(tok[1], row);
      have_psi = true;
    } else if (tok[0] == "index") {
      have_header = true;
    } else {
      if (!have_p0 || !have_psi || !have_header) {
        parse_fail(row, "element row before p0/psi0/header");
      }
      if (tok.size() != 4) parse_fail(row, "expected index,shape,length_m,radius_m");
      const long index = static_cast<long>(parse_num(tok[0], row));
      if (index != last_index + 1) {
        parse_fail(row, "non-monotone element index " + tok[0]);
      }
      last_index = index;
      Row r{};
      r.file_row = row;
      if (tok[1] == "st") r.shape = Shape::kStraight;
      else if (tok[1] == "ta") r.shape = Shape::kTransitionalArc;
      else if (tok[1] == "ca") r.shape = Shape::kCircularArc;
      else parse_fail(row, "unknown shape token '" + tok[1] + "'");
      r.length = parse_num(tok[2], row);
      if (r.length <= 0.0) parse_fail(row, "non-positive length " + tok[2]);
      if (tok[3] == "inf") {
        r.radius = std::numeric_limits<double>::infinity();
      } else {
        r.radius = parse_num(tok[3], row);
        if (r.radius == 0.0) parse_fail(row, "zero radius");
      }
      rows.push_back(r);
    }
  }
  if (rows.empty()) throw DataError("map csv: no element rows");

  // Curvature reconstruction. Straights and arcs are self-contained;
  // transitional arcs take their end curvatures from the neighbor rows.
  auto end_kappa = [](const Row& r) {
    return r.shape == Shape::kCircularArc ? 1.0 / r.radius : 0.0;
  };
  map.elements.clear();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    TrackElement e;
    e.shape = r.shape;
    e.length = r.length;
    if (r.shape == Shape::kStraight) {
      e.kappa0 = e.kappa1 = 0.0;
    } else if (r.shape == Shape::kCircularArc) {
      if (!std::isfinite(r.radius)) parse_fail(r.file_row, "circular arc with radius inf");
      e.kappa0 = e.kappa1 = 1.0 / r.radius;
    } else {
      if (i > 0 && rows[i - 1].shape == Shape::kTransitionalArc) {
        parse_fail(r.file_row, "consecutive transitional arcs are not representable");
      }
      e.kappa0 = (i > 0) ? end_kappa(rows[i - 1]) : 0.0;
      e.kappa1 = (i + 1 < rows.size()) ? end_kappa(rows[i + 1]) : 0.0;
      // The row's own radius must agree with the curved end it encodes.
      const double enc = (e.kappa1 != 0.0) ? e.kappa1 : e.kappa0;
      if (enc == 0.0) {
        if (std::isfinite(r.radius)) {
          parse_fail(r.file_row, "flat transitional arc must use radius inf");
        }
      } else if (!std::isfinite(r.radius) ||
                 std::abs(1.0 / enc - r.radius) > std::max(0.0011, std::abs(r.radius) * 1e-6)) {
        parse_fail(r.file_row, "transitional-arc radius disagrees with neighbors");
      }
    }
    map.elements.push_back(e);
  }
  check_map_invariants(map);
  return map;
}

void map_save(const TrackMap& map, const std::string& path, const std::string& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << map_to_csv(map, manifest);
}

TrackMap map_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open map file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return map_from_csv(ss.str());
}

namespace {

void collect_linestrings(const nlohmann::json& j, std::vector<GeoPoint>& out) {
  if (!j.is_object()) return;
  const std::string type = j.value("type", "");
  if (type == "FeatureCollection") {
    for (const auto& f : j.value("features", nlohmann::json::array())) {
      collect_linestrings(f, out);
      if (!out.empty()) return;
    }
  } else if (type == "Feature") {
    if (j.contains("geometry")) collect_linestrings(j["geometry"], out);
  } else if (type == "LineString") {
    for (const auto& c : j.value("coordinates", nlohmann::json::array())) {
      if (!c.is_array() || c.size() < 2) throw DataError("geojson: bad coordinate");
      // GeoJSON order is [lon, lat].
      out.push_back({c[1].get<double>(), c[0].get<double>()});
    }
  }
}

}  // namespace

std::vector<GeoPoint> load_polyline_geojson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reference polyline: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("geojson parse error in " + path + ": " + e.what());
  }
  std::vector<GeoPoint> pts;
  collect_linestrings(j, pts);
  if (pts.size() < 2) throw DataError("geojson: no LineString with >= 2 points in " + path);
  for (const auto& p : pts) geom::validate_geo(p);
  return pts;
}

std::vector<GeoPoint> load_polyline_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open reference polyline: " + path);
  std::vector<GeoPoint> pts;
  std::string line;
  int row = 0;
  bool skipped_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const auto tok = split_csv(line);
    if (tok.size() < 2) throw DataError("polyline csv row " + std::to_string(row) +
                                        ": expected lat,lon");
    if (!skipped_header && pts.empty() && !tok[0].empty() &&
        !std::isdigit(static_cast<unsigned char>(tok[0][0])) && tok[0][0] != '-' &&
        tok[0][0] != '+') {
      skipped_header = true;  // header row
      continue;
    }
    GeoPoint p{parse_num(tok[0], row), parse_num(tok[1], row)};
    geom::validate_geo(p);
    pts.push_back(p);
  }
  if (pts.size() < 2) throw DataError("polyline csv: fewer than 2 points in " + path);
  return pts;
}

std::vector<GeoPoint> load_polyline(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  if (ext == "json" || ext == "geojson") return load_polyline_geojson(path);
  return load_polyline_csv(path);
}

}  // namespace railloc::maps
