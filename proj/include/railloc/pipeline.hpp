#pragma once

#include <optional>
#include <string>
#include <vector>

#include "railloc/map_fusion.hpp"
#include "railloc/map_refine.hpp"
#include "railloc/segments.hpp"
#include "railloc/sensors.hpp"
#include "railloc/state_log.hpp"

namespace railloc::pipeline {

enum class Method { kGnss, kKf, kImm };

Method method_from_string(const std::string& name);
const char* method_name(Method m);

struct LocalizeOptions {
  filters::FilterTuning tuning;
  const maps::TrackMap* map = nullptr;  // when set, fused columns are appended
  double map_sigma = 0.5;
  double gate_extra = 20.0;
  bool closed_loop = false;
  // Nominal GNSS position sigma. When > 0, each fix's speed variance is
  // scaled with the square of its reported position degradation (PVT speed
  // quality falls with position quality).
  double gnss_base_sigma = 0.0;
};

// Runs one localization method over the streams and returns the per-epoch
// state log. All methods share the same epoch grid (the GNSS cadence,
// starting at the second valid fix, which initializes the filters).
std::vector<io::StateLogRow> localize(Method method,
                                      const std::vector<sim::GnssFix>& gnss,
                                      const std::vector<sim::ImuSample>& imu,
                                      const geom::GeoPoint& origin,
                                      const LocalizeOptions& opts);

struct MapBuildOptions {
  filters::ClassifyOptions classify;
  geom::GeoPoint origin;
  double gap_threshold = 0.5;
  int min_segment_epochs = 4;
  bool requantize = true;       // snap p0/psi0 to file precision and re-fit
  double map_sigma_floor = 0.25;
  maps::RefineOptions refine;
};

struct MapBuildResult {
  maps::TrackMap map;
  std::vector<filters::GeometryEvent> events;
  std::vector<maps::IdentifiedSegment> segments;
  maps::RefineResult refine;
  double map_sigma = 0.25;  // refinement RMS, floored
};

// Steps 2-3 over an IMM state log: classify the model-probability history,
// fit straight/arc parameters per segment, assemble and refine the map.
MapBuildResult build_map_from_log(const std::vector<io::StateLogRow>& log,
                                  const MapBuildOptions& opts);

}  // namespace railloc::pipeline
