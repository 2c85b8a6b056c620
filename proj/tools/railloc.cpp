// railloc: train-borne GNSS/IMU localization and compact track mapping.
//
// Subcommands form an offline batch pipeline with file handoffs:
//   simulate -> localize (gnss|kf|imm[,+map]) -> map -> evaluate

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "railloc/config.hpp"
#include "railloc/errors.hpp"
#include "railloc/evaluate.hpp"
#include "railloc/map_error.hpp"
#include "railloc/map_io.hpp"
#include "railloc/pipeline.hpp"
#include "railloc/simulator.hpp"
#include "railloc/state_log.hpp"
#include "railloc/stream_io.hpp"
#include "railloc/version.hpp"

namespace fs = std::filesystem;
using namespace railloc;

namespace {

std::string fmt_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Extracts "fit_rms=<v>" from a map file's manifest comment, if present.
std::optional<double> map_fit_rms_from_file(const std::string& path) {
  std::istringstream in(io::read_text_file(path));
  std::string first;
  if (!std::getline(in, first)) return {};
  const auto pos = first.find("fit_rms=");
  if (pos == std::string::npos) return {};
  try {
    return std::stod(first.substr(pos + 8));
  } catch (const std::exception&) {
    return {};
  }
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  const io::ScenarioConfig sc = io::load_scenario(config_path, seed);
  const maps::TrackMap track = maps::map_load(sc.track_path);
  const sim::SimResult result = sim::simulate_run(track, sc.run);

  fs::create_directories(out_dir);
  const std::string manifest = io::manifest_line(
      sc.run.seed, {{"config", io::hash_hex(io::fnv1a_file(config_path))},
                    {"track", io::hash_hex(io::fnv1a_file(sc.track_path))}});
  const std::string truth_path = out_dir + "/truth.jsonl";
  const std::string gnss_path = out_dir + "/gnss.jsonl";
  const std::string imu_path = out_dir + "/imu.jsonl";
  io::save_truth_jsonl(result.truth, result.plane_origin, truth_path, manifest);
  io::save_gnss_jsonl(result.gnss, result.plane_origin, gnss_path, manifest);
  io::save_imu_jsonl(result.imu, result.plane_origin, imu_path, manifest);

  std::ostringstream mf;
  mf << "# " << manifest << "\n";
  mf << "seed," << sc.run.seed << "\n";
  mf << "origin_deg," << fmt_num(result.plane_origin.lat_deg) << ","
     << fmt_num(result.plane_origin.lon_deg) << "\n";
  mf << "file,hash\n";
  for (const auto& p : {truth_path, gnss_path, imu_path}) {
    mf << fs::path(p).filename().string() << "," << io::hash_hex(io::fnv1a_file(p))
       << "\n";
  }
  io::write_text_file(out_dir + "/manifest.csv", mf.str());

  std::cout << "simulate: " << result.truth.size() << " truth samples, "
            << result.gnss.size() << " fixes, " << result.imu.size()
            << " imu samples -> " << out_dir << "\n";
  return 0;
}

int cmd_localize(const std::string& config_path, const std::string& streams_dir,
                 const std::string& method_name, const std::string& map_path,
                 std::optional<double> map_sigma, const std::string& out_dir) {
  const io::ScenarioConfig sc = io::load_scenario(config_path, {});
  const pipeline::Method method = pipeline::method_from_string(method_name);

  const std::string gnss_path = streams_dir + "/gnss.jsonl";
  const std::string imu_path = streams_dir + "/imu.jsonl";
  const io::GnssStream gnss = io::load_gnss_jsonl(gnss_path);
  const io::ImuStream imu = io::load_imu_jsonl(imu_path);

  pipeline::LocalizeOptions opts;
  opts.tuning = sc.tuning;
  opts.gate_extra = sc.gate_extra_m;
  opts.closed_loop = sc.closed_loop;
  opts.gnss_base_sigma = std::max(sc.run.gnss_sigma_east, sc.run.gnss_sigma_north);
  maps::TrackMap map;
  std::vector<std::pair<std::string, std::string>> inputs = {
      {"config", io::hash_hex(io::fnv1a_file(config_path))},
      {"gnss", io::hash_hex(io::fnv1a_file(gnss_path))},
      {"imu", io::hash_hex(io::fnv1a_file(imu_path))}};
  std::string log_name = method_name;
  if (!map_path.empty()) {
    map = maps::map_load(map_path);
    opts.map = &map;
    opts.map_sigma = map_sigma.value_or(std::max(
        sc.map_sigma_floor, 2.0 * map_fit_rms_from_file(map_path).value_or(0.0)));
    inputs.emplace_back("map", io::hash_hex(io::fnv1a_file(map_path)));
    log_name += "_map";
  }

  const auto rows = pipeline::localize(method, gnss.fixes, imu.samples, gnss.origin, opts);

  fs::create_directories(out_dir);
  const std::string manifest = io::manifest_line(0, inputs) + " method=" + log_name;
  const std::string log_path = out_dir + "/" + log_name + ".csv";
  io::state_log_save(rows, log_path, manifest, gnss.origin);
  std::cout << "localize " << log_name << ": " << rows.size() << " epochs -> "
            << log_path << "\n";
  return 0;
}

int cmd_map(const std::string& config_path, const std::string& log_path,
            const std::string& out_dir) {
  const io::ScenarioConfig sc = io::load_scenario(config_path, {});
  std::optional<geom::GeoPoint> origin;
  const auto rows = io::state_log_load(log_path, &origin);
  if (!origin) throw DataError("state log lacks the origin_deg comment: " + log_path);

  pipeline::MapBuildOptions opts;
  opts.classify = sc.classify;
  opts.origin = *origin;
  opts.map_sigma_floor = sc.map_sigma_floor;
  const pipeline::MapBuildResult result = pipeline::build_map_from_log(rows, opts);

  fs::create_directories(out_dir);
  const std::string manifest =
      io::manifest_line(0, {{"config", io::hash_hex(io::fnv1a_file(config_path))},
                            {"log", io::hash_hex(io::fnv1a_file(log_path))}});

  char rms[40];
  std::snprintf(rms, sizeof(rms), "fit_rms=%.4f", result.refine.weighted_rms);
  maps::map_save(result.map, out_dir + "/map.csv", manifest + " " + rms);

  std::ostringstream hist;
  hist << "# " << manifest << "\n";
  hist << "iteration,objective_m2\n";
  for (std::size_t i = 0; i < result.refine.objective_history.size(); ++i) {
    hist << i << "," << fmt_num(result.refine.objective_history[i]) << "\n";
  }
  io::write_text_file(out_dir + "/refine_history.csv", hist.str());

  std::ostringstream ev;
  ev << "# " << manifest << "\n";
  ev << "kind,t_open,t_close\n";
  for (const auto& e : result.events) {
    const char* kind = e.kind == filters::GeometryEvent::Kind::kEnterStraight
                           ? "straight"
                           : (e.kind == filters::GeometryEvent::Kind::kEnterArc
                                  ? "arc"
                                  : "unknown");
    ev << kind << "," << fmt_num(e.t) << "," << fmt_num(e.t_close) << "\n";
  }
  io::write_text_file(out_dir + "/events.csv", ev.str());

  std::cout << "map: " << result.segments.size() << " segments, "
            << result.map.elements.size() << " elements, rms "
            << fmt_num(result.refine.weighted_rms) << " m -> " << out_dir
            << "/map.csv\n";
  return 0;
}

int cmd_evaluate(const std::vector<std::string>& log_specs, const std::string& truth_path,
                 const std::string& reference_path, const std::string& map_path,
                 std::size_t ellipse_every, const std::string& out_dir) {
  const io::TruthStream truth = io::load_truth_jsonl(truth_path);
  fs::create_directories(out_dir);

  std::vector<std::pair<std::string, std::string>> inputs = {
      {"truth", io::hash_hex(io::fnv1a_file(truth_path))}};

  struct NamedLog {
    std::string name;
    std::vector<io::StateLogRow> rows;
    bool fused = false;
  };
  std::vector<NamedLog> logs;
  for (const auto& spec : log_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("log spec must be name=path, got '" + spec + "'");
    }
    NamedLog nl;
    nl.name = spec.substr(0, eq);
    nl.rows = io::state_log_load(spec.substr(eq + 1));
    nl.fused = !nl.rows.empty() && nl.rows.front().has_fused;
    inputs.emplace_back(nl.name, io::hash_hex(io::fnv1a_file(spec.substr(eq + 1))));
    logs.push_back(std::move(nl));
  }
  if (logs.empty()) throw ConfigError("evaluate: no logs given");
  const std::string manifest = io::manifest_line(0, inputs);

  std::vector<eval::EvalReport> reports;
  for (const auto& nl : logs) {
    const auto samples = eval::decompose_errors(nl.rows, truth.samples, nl.fused);
    reports.push_back(eval::make_report(nl.name, samples));
    const eval::EvalReport& rep = reports.back();

    const std::pair<const char*, const eval::CdfTable*> channels[] = {
        {"along", &rep.along}, {"cross", &rep.cross}, {"max", &rep.max3}};
    for (const auto& [channel, table] : channels) {
      std::ostringstream cs;
      cs << "# " << manifest << "\n";
      cs << "value_m,probability\n";
      for (std::size_t i = 0; i < table->values.size(); ++i) {
        cs << fmt_num(table->values[i]) << ","
           << fmt_num(static_cast<double>(i + 1) / static_cast<double>(table->n_total))
           << "\n";
      }
      io::write_text_file(out_dir + "/cdf_" + nl.name + "_" + channel + ".csv",
                          cs.str());
    }

    const auto ellipses = eval::ellipse_export(nl.rows, ellipse_every, nl.fused);
    std::ostringstream es;
    es << "# " << manifest << "\n";
    es << "t,x,y,semi_major_3s,semi_minor_3s,orientation_rad,ok\n";
    for (const auto& e : ellipses) {
      es << fmt_num(e.t) << "," << fmt_num(e.x) << "," << fmt_num(e.y) << ","
         << fmt_num(e.semi_major3) << "," << fmt_num(e.semi_minor3) << ","
         << fmt_num(e.orientation) << "," << (e.ok ? 1 : 0) << "\n";
    }
    io::write_text_file(out_dir + "/ellipses_" + nl.name + ".csv", es.str());
  }

  if (reports.size() >= 2) {
    const eval::Comparison cmp = eval::compare_methods(reports);

    std::ostringstream t1;
    t1 << "# " << manifest << "\n";
    t1 << "channel,cdf";
    for (const auto& m : cmp.methods) t1 << "," << m.method;
    t1 << "\n";
    for (int lvl = 0; lvl < 3; ++lvl) {
      for (const char* ch : {"AT", "CT"}) {
        t1 << ch << "," << fmt_num(eval::kCdfLevels[lvl]);
        for (const auto& m : cmp.methods) {
          t1 << "," << fmt_num(ch[0] == 'A' ? m.at_q[lvl] : m.ct_q[lvl]);
        }
        t1 << "\n";
      }
    }
    io::write_text_file(out_dir + "/table1.csv", t1.str());

    std::ostringstream t2;
    t2 << "# " << manifest << "\n";
    t2 << "channel,threshold_m";
    for (const auto& m : cmp.methods) t2 << "," << m.method;
    t2 << "\n";
    t2 << "AT,5";
    for (const auto& m : cmp.methods) t2 << "," << fmt_num(m.cdf_at_5m_along);
    t2 << "\nCT,1.5";
    for (const auto& m : cmp.methods) t2 << "," << fmt_num(m.cdf_at_1p5m_cross);
    t2 << "\n";
    io::write_text_file(out_dir + "/table2.csv", t2.str());

    std::ostringstream imp;
    imp << "# " << manifest << "\n";
    imp << "base,method,channel,cdf,improvement_pct\n";
    for (const auto& i : cmp.improvements) {
      for (int lvl = 0; lvl < 3; ++lvl) {
        imp << i.base << "," << i.method << ",AT," << fmt_num(eval::kCdfLevels[lvl])
            << "," << fmt_num(i.at_pct[lvl]) << "\n";
        imp << i.base << "," << i.method << ",CT," << fmt_num(eval::kCdfLevels[lvl])
            << "," << fmt_num(i.ct_pct[lvl]) << "\n";
      }
    }
    io::write_text_file(out_dir + "/improvements.csv", imp.str());
  }

  std::ostringstream cons;
  cons << "# " << manifest << "\n";
  cons << "method,availability,consistency_along,consistency_cross\n";
  for (const auto& r : reports) {
    cons << r.method << "," << fmt_num(r.availability) << ","
         << fmt_num(r.consistency_along) << "," << fmt_num(r.consistency_cross) << "\n";
  }
  io::write_text_file(out_dir + "/consistency.csv", cons.str());

  if (!reference_path.empty() && !map_path.empty()) {
    const maps::TrackMap map = maps::map_load(map_path);
    const auto reference = maps::load_polyline(reference_path);
    const maps::MapErrorStats stats = maps::map_error_cdf(map, reference);
    std::ostringstream t4;
    t4 << "# " << manifest << "\n";
    t4 << "mean_m,cdf0.95_m,cdf0.99_m,max_m\n";
    t4 << fmt_num(stats.mean) << "," << fmt_num(stats.quantiles.at(0.95)) << ","
       << fmt_num(stats.quantiles.at(0.99)) << "," << fmt_num(stats.max) << "\n";
    io::write_text_file(out_dir + "/table4.csv", t4.str());

    std::ostringstream mc;
    mc << "# " << manifest << "\n";
    mc << "value_m,probability\n";
    std::vector<double> sorted = stats.samples;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      mc << fmt_num(sorted[i]) << ","
         << fmt_num(static_cast<double>(i + 1) / static_cast<double>(sorted.size()))
         << "\n";
    }
    io::write_text_file(out_dir + "/map_error_cdf.csv", mc.str());
  }

  std::cout << "evaluate: " << reports.size() << " methods -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kToolName) + " " + kToolVersion +
               " - train-borne localization and track mapping"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", streams_dir, method = "imm";
  std::string map_path, log_path, truth_path, reference_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> map_sigma;
  std::vector<std::string> log_specs;
  std::size_t ellipse_every = 10;

  auto* sim_cmd = app.add_subcommand("simulate", "generate truth + sensor streams");
  sim_cmd->add_option("--config", config_path, "scenario config file")->required();
  sim_cmd->add_option("--seed", seed, "override the config seed");
  sim_cmd->add_option("--out", out_dir, "output directory");

  auto* loc_cmd = app.add_subcommand("localize", "run a positioning method");
  loc_cmd->add_option("--config", config_path, "scenario config file")->required();
  loc_cmd->add_option("--streams", streams_dir, "directory from `simulate`")->required();
  loc_cmd->add_option("--method", method, "gnss|kf|imm")->required();
  loc_cmd->add_option("--map", map_path, "compact map file (enables map fusion)");
  loc_cmd->add_option("--map-sigma", map_sigma, "cross-track map trust sigma [m]");
  loc_cmd->add_option("--out", out_dir, "output directory");

  auto* map_cmd = app.add_subcommand("map", "build the compact map from an imm log");
  map_cmd->add_option("--config", config_path, "scenario config file")->required();
  map_cmd->add_option("--log", log_path, "imm state log csv")->required();
  map_cmd->add_option("--out", out_dir, "output directory");

  auto* eval_cmd = app.add_subcommand("evaluate", "error CDF / table reports");
  eval_cmd->add_option("--truth", truth_path, "truth.jsonl")->required();
  eval_cmd->add_option("logs", log_specs, "state logs as name=path")->required();
  eval_cmd->add_option("--reference", reference_path, "reference polyline (geojson/csv)");
  eval_cmd->add_option("--map", map_path, "map file for the map-error report");
  eval_cmd->add_option("--ellipse-every", ellipse_every, "ellipse export stride");
  eval_cmd->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(config_path, seed, out_dir);
    if (loc_cmd->parsed()) {
      return cmd_localize(config_path, streams_dir, method, map_path, map_sigma,
                          out_dir);
    }
    if (map_cmd->parsed()) return cmd_map(config_path, log_path, out_dir);
    if (eval_cmd->parsed()) {
      return cmd_evaluate(log_specs, truth_path, reference_path, map_path,
                          ellipse_every, out_dir);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
