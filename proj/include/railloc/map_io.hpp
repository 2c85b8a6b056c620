#pragma once

#include <string>
#include <vector>

#include "railloc/track_map.hpp"

namespace railloc::maps {

// Compact map CSV, one element per row:
//   # <manifest comment>
//   p0_deg,<lat %.6f>,<lon %.6f>
//   psi0_deg,<heading %.1f, [0, 360)>
//   index,shape,length_m,radius_m
//   1,st,218.000,inf
//   2,ta,76.000,376.000
// Radii are signed (left turn positive); straights use the literal token
// `inf`. Transitional-arc rows store the radius of their curved end; the
// end curvatures themselves are reconstructed from the neighbor rows.
std::string map_to_csv(const TrackMap& map, const std::string& manifest = "");
TrackMap map_from_csv(const std::string& text);

void map_save(const TrackMap& map, const std::string& path,
              const std::string& manifest = "");
TrackMap map_load(const std::string& path);

// Reference polylines: GeoJSON LineString (Feature/FeatureCollection/raw
// geometry) or a two-column CSV of lat,lon in degrees.
std::vector<geom::GeoPoint> load_polyline_geojson(const std::string& path);
std::vector<geom::GeoPoint> load_polyline_csv(const std::string& path);
std::vector<geom::GeoPoint> load_polyline(const std::string& path);  // by extension

}  // namespace railloc::maps
