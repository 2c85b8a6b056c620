#include "railloc/state_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "railloc/errors.hpp"
#include "railloc/stream_io.hpp"

namespace railloc::io {

namespace {

constexpr const char* kBaseHeader =
    "t,x,y,v,psi,omega,mu_st,mu_arc,mu_unc,P00,P11,P22,P33,P44,cov_xy,"
    "sigma3_along,sigma3_cross,available";
constexpr const char* kFusedHeader =
    ",fused_x,fused_y,fused_cov_xx,fused_cov_xy,fused_cov_yy,fused_s,map_constrained";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::string state_log_to_csv(const std::vector<StateLogRow>& rows,
                             const std::string& manifest,
                             const std::optional<geom::GeoPoint>& origin) {
  const bool fused = !rows.empty() && rows.front().has_fused;
  std::ostringstream out;
  out << "# " << manifest << "\n";
  if (origin) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "# origin_deg,%.9f,%.9f\n", origin->lat_deg,
                  origin->lon_deg);
    out << buf;
  }
  out << kBaseHeader << (fused ? kFusedHeader : "") << "\n";
  for (const auto& r : rows) {
    out << num(r.t) << "," << num(r.x) << "," << num(r.y) << "," << num(r.v) << ","
        << num(r.psi) << "," << num(r.omega) << "," << num(r.mu[0]) << ","
        << num(r.mu[1]) << "," << num(r.mu[2]);
    for (double d : r.p_diag) out << "," << num(d);
    out << "," << num(r.cov_xy) << "," << num(r.sigma3_along) << ","
        << num(r.sigma3_cross) << "," << (r.available ? 1 : 0);
    if (fused) {
      out << "," << num(r.fused_x) << "," << num(r.fused_y) << ","
          << num(r.fused_cov_xx) << "," << num(r.fused_cov_xy) << ","
          << num(r.fused_cov_yy) << "," << num(r.fused_s) << ","
          << (r.map_constrained ? 1 : 0);
    }
    out << "\n";
  }
  return out.str();
}

std::vector<StateLogRow> state_log_from_csv(const std::string& text,
                                            std::optional<geom::GeoPoint>* origin) {
  std::istringstream in(text);
  std::string line;
  std::vector<StateLogRow> rows;
  long lineno = 0;
  bool fused = false;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind("# origin_deg,", 0) == 0 && origin != nullptr) {
      double lat = 0.0, lon = 0.0;
      if (std::sscanf(line.c_str(), "# origin_deg,%lf,%lf", &lat, &lon) == 2) {
        *origin = geom::GeoPoint{lat, lon};
      }
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      if (line.rfind("t,x,y", 0) != 0) {
        throw DataError("state log line " + std::to_string(lineno) +
                        ": expected header");
      }
      fused = line.find("fused_x") != std::string::npos;
      have_header = true;
      continue;
    }
    std::vector<double> f;
    std::string tok;
    std::istringstream ls(line);
    while (std::getline(ls, tok, ',')) {
      try {
        f.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw DataError("state log line " + std::to_string(lineno) +
                        ": bad number '" + tok + "'");
      }
    }
    const std::size_t expect = fused ? 25 : 18;
    if (f.size() != expect) {
      throw DataError("state log line " + std::to_string(lineno) + ": expected " +
                      std::to_string(expect) + " columns, got " +
                      std::to_string(f.size()));
    }
    StateLogRow r;
    r.t = f[0]; r.x = f[1]; r.y = f[2]; r.v = f[3]; r.psi = f[4]; r.omega = f[5];
    r.mu[0] = f[6]; r.mu[1] = f[7]; r.mu[2] = f[8];
    for (int i = 0; i < 5; ++i) r.p_diag[i] = f[9 + i];
    r.cov_xy = f[14];
    r.sigma3_along = f[15];
    r.sigma3_cross = f[16];
    r.available = f[17] != 0.0;
    if (fused) {
      r.has_fused = true;
      r.fused_x = f[18]; r.fused_y = f[19];
      r.fused_cov_xx = f[20]; r.fused_cov_xy = f[21]; r.fused_cov_yy = f[22];
      r.fused_s = f[23];
      r.map_constrained = f[24] != 0.0;
    }
    rows.push_back(r);
  }
  if (!have_header) throw DataError("state log: missing header");
  return rows;
}

void state_log_save(const std::vector<StateLogRow>& rows, const std::string& path,
                    const std::string& manifest,
                    const std::optional<geom::GeoPoint>& origin) {
  write_text_file(path, state_log_to_csv(rows, manifest, origin));
}

std::vector<StateLogRow> state_log_load(const std::string& path,
                                        std::optional<geom::GeoPoint>* origin) {
  return state_log_from_csv(read_text_file(path), origin);
}

}  // namespace railloc::io
