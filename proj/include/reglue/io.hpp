#pragma once

// Serialization: JSON documents, line-delimited scan records, PPM rasters,
// SVG curve plots and CSV tables. Every writer is deterministic: fixed key
// order, fixed number formatting and no timestamps.

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reglue/classify.hpp"
#include "reglue/cuts.hpp"
#include "reglue/errors.hpp"
#include "reglue/rays.hpp"
#include "reglue/reglue.hpp"
#include "reglue/sphere.hpp"
#include "reglue/spider.hpp"

namespace reglue::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

/// Finite points as [re, im], infinity as the string "inf".
inline Json to_json(const SpherePoint& p) {
  if (p.is_infinity()) return "inf";
  return to_json(p.value());
}

inline SpherePoint point_from_json(const Json& j) {
  if (j.is_string() && j.get<std::string>() == "inf") return SpherePoint::infinity();
  if (j.is_array() && j.size() == 2) return SpherePoint(cplx(j[0].get<double>(), j[1].get<double>()));
  throw ConfigError("malformed point: " + j.dump());
}

inline Json to_json(const Curve& c) {
  Json j;
  j["start_tag"] = c.start_tag;
  j["end_tag"] = c.end_tag;
  j["closed"] = c.closed();
  Json v = Json::array();
  for (const auto& p : c.vertices) v.push_back(to_json(p));
  j["vertices"] = std::move(v);
  return j;
}

inline Json to_json(const Evidence& e) {
  Json j;
  j["orbit_length"] = e.orbit_length;
  if (e.landing_time) j["landing_time"] = *e.landing_time;
  if (e.own_period) j["own_period"] = *e.own_period;
  if (e.entry_step) j["entry_step"] = *e.entry_step;
  if (e.attractor_period) j["attractor_period"] = *e.attractor_period;
  if (e.attractor_multiplier) j["attractor_multiplier"] = to_json(*e.attractor_multiplier);
  if (e.center) j["center"] = to_json(*e.center);
  j["pixels_visited"] = e.pixels_visited;
  j["resolution"] = e.resolution;
  if (!e.note.empty()) j["note"] = e.note;
  return j;
}

inline Json to_json(const Classification& c) {
  Json j;
  j["tag"] = tag_name(c.tag);
  j["evidence"] = to_json(c.evidence);
  return j;
}

inline Json to_json(const Cycle& c) {
  Json j;
  j["period"] = c.period;
  j["multiplier"] = to_json(c.multiplier);
  j["super_attracting"] = c.super_attracting();
  Json pts = Json::array();
  for (const auto& p : c.points) pts.push_back(to_json(p));
  j["points"] = std::move(pts);
  return j;
}

inline Json family_json(const FamilyMember& fm) {
  Json j;
  j["k"] = fm.k;
  j["parameter"] = to_json(fm.parameter);
  return j;
}

inline Json scan_record(const ScanCell& cell) {
  Json j;
  j["row"] = cell.row;
  j["col"] = cell.col;
  j["parameter"] = to_json(cell.parameter);
  j["tag"] = tag_name(cell.classification.tag);
  j["evidence"] = to_json(cell.classification.evidence);
  return j;
}

/// Cut family with its combinatorial description.
inline Json cut_document(const FamilyMember& fm, const CutFamily& cf, const CutComplex& cx) {
  Json j;
  j["family"] = family_json(fm);
  j["depth"] = cf.depth();
  j["disjoint"] = cx.disjoint;
  j["cross_level_intersections"] = cx.cross_level_intersections;
  Json levels = Json::array();
  std::size_t flat = 0;
  for (int n = 0; n <= cf.depth(); ++n) {
    Json lv;
    lv["level"] = n;
    lv["arc_count"] = cx.levels[n].arc_count;
    lv["intersection_count"] = cx.levels[n].intersection_count;
    Json arcs = Json::array();
    for (std::size_t i = 0; i < cf.levels[n].size(); ++i, ++flat) {
      const auto& fa = cf.levels[n][i];
      const auto& ca = cx.arcs[flat];
      Json a;
      a["index"] = static_cast<int>(i);
      a["parent"] = fa.parent;
      a["parent_piece"] = fa.parent_piece;
      a["simple"] = ca.simple;
      Json tr = Json::array();
      for (const auto& t : ca.transitions) {
        tr.push_back({{"first_vertex", t.first_vertex},
                      {"last_vertex", t.last_vertex},
                      {"plus_to", t.plus_to == Side::Plus ? "+" : "-"}});
      }
      a["side_transitions"] = std::move(tr);
      a["curve"] = to_json(fa.curve);
      arcs.push_back(std::move(a));
    }
    lv["arcs"] = std::move(arcs);
    levels.push_back(std::move(lv));
  }
  j["levels"] = std::move(levels);
  return j;
}

inline Json to_json(const Ray& r) {
  Json j;
  j["angle"] = r.angle;
  j["t0"] = r.t0;
  j["t1"] = r.t1;
  if (r.landing) j["landing"] = to_json(*r.landing);
  Json gaps = Json::array();
  for (double g : r.extrapolation_gaps) gaps.push_back(g);
  j["extrapolation_gaps"] = std::move(gaps);
  j["trace"] = to_json(r.trace);
  return j;
}

inline Json to_json(const BetaResult& b) {
  Json j;
  j["angle"] = b.angle;
  j["preperiod"] = b.preperiod;
  j["center"] = to_json(b.center);
  if (b.landing) j["landing"] = to_json(*b.landing);
  j["landing_distance"] = b.landing_distance;
  j["curve"] = to_json(b.curve);
  return j;
}

inline Json to_json(const SpiderResult& r) {
  Json j;
  j["c"] = to_json(r.c);
  j["steps"] = r.history.size();
  j["final_delta"] = r.history.empty() ? 0.0 : r.history.back().delta;
  return j;
}

// ---------------------------------------------------------------------------
// Files

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open output file " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

/// Binary PPM (P6), rows top to bottom.
inline std::string ppm(int width, int height, const std::vector<std::array<std::uint8_t, 3>>& rgb) {
  if (static_cast<std::size_t>(width) * height != rgb.size()) throw DomainError("raster size mismatch");
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + rgb.size() * 3);
  for (const auto& px : rgb) out.append(reinterpret_cast<const char*>(px.data()), 3);
  return out;
}

inline std::array<std::uint8_t, 3> tag_color(Tag t) {
  switch (t) {
    case Tag::PeriodicCritical: return {255, 255, 255};
    case Tag::Immediate: return {40, 90, 200};
    case Tag::Capture: return {230, 140, 30};
    case Tag::OtherAttractor: return {40, 160, 80};
    case Tag::Unresolved: return {0, 0, 0};
  }
  return {0, 0, 0};
}

// ---------------------------------------------------------------------------
// Line-delimited scan records with resume

struct ScanLog {
  /// Tag per cell index row * resolution + col, for the complete records found.
  std::map<std::int64_t, Tag> tags;
  /// Byte length of the prefix made of complete, valid records.
  std::uintmax_t valid_bytes = 0;
};

/// Reads the complete records of a scan log. A torn final line (interrupted
/// write) and records outside the grid end the valid prefix.
inline ScanLog read_scan_log(const std::filesystem::path& path, int resolution) {
  ScanLog log;
  std::ifstream in(path, std::ios::binary);
  if (!in) return log;
  std::string line;
  std::uintmax_t offset = 0;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // no trailing newline: torn record
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::exception&) {
      break;
    }
    if (!j.contains("row") || !j.contains("col") || !j.contains("tag")) break;
    int row = j["row"].get<int>(), col = j["col"].get<int>();
    auto tag = tag_from_name(j["tag"].get<std::string>());
    if (!tag || row < 0 || col < 0 || row >= resolution || col >= resolution) break;
    log.tags[static_cast<std::int64_t>(row) * resolution + col] = *tag;
    offset += line.size() + 1;
    log.valid_bytes = offset;
  }
  return log;
}

// ---------------------------------------------------------------------------
// SVG

struct SvgView {
  double x0 = -3.0, x1 = 3.0, y0 = -3.0, y1 = 3.0;
  int width = 800;
};

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string level_color(int level) {
  static const char* palette[] = {"#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                                  "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939"};
  return palette[std::abs(level) % 13];
}

class SvgWriter {
 public:
  explicit SvgWriter(SvgView view) : v_(view) {
    height_ = static_cast<int>(std::lround(v_.width * (v_.y1 - v_.y0) / (v_.x1 - v_.x0)));
  }

  /// Polyline through the finite vertices; breaks at infinity and at jumps far outside the view.
  void path(const std::vector<SpherePoint>& pts, const std::string& color, double stroke = 1.0,
            const std::string& id = "") {
    std::string d;
    bool pen = false;
    for (const auto& p : pts) {
      if (p.is_infinity() || !visible_enough(p.value())) {
        pen = false;
        continue;
      }
      auto [x, y] = pixel(p.value());
      d += (pen ? " L" : (d.empty() ? "M" : " M")) + fmt(x) + " " + fmt(y);
      pen = true;
    }
    if (d.empty()) return;
    body_ << "<path";
    if (!id.empty()) body_ << " id=\"" << id << "\"";
    body_ << " d=\"" << d << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt(stroke)
          << "\"/>\n";
  }

  void marker(const SpherePoint& p, const std::string& color, const std::string& label = "") {
    if (p.is_infinity() || !visible_enough(p.value())) return;
    auto [x, y] = pixel(p.value());
    body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    if (!label.empty())
      body_ << "<text x=\"" << fmt(x + 4) << "\" y=\"" << fmt(y - 4) << "\" font-size=\"10\">" << label << "</text>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << v_.width << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << v_.width << " " << height_ << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  std::pair<double, double> pixel(cplx z) const {
    double sx = v_.width / (v_.x1 - v_.x0), sy = height_ / (v_.y1 - v_.y0);
    return {(z.real() - v_.x0) * sx, (v_.y1 - z.imag()) * sy};
  }
  bool visible_enough(cplx z) const {
    double mx = 10.0 * (v_.x1 - v_.x0), my = 10.0 * (v_.y1 - v_.y0);
    return z.real() > v_.x0 - mx && z.real() < v_.x1 + mx && z.imag() > v_.y0 - my && z.imag() < v_.y1 + my;
  }

  SvgView v_;
  int height_ = 0;
  std::ostringstream body_;
};

inline std::string cut_svg(const CutFamily& cf, const SvgView& view) {
  SvgWriter svg(view);
  for (int n = cf.depth(); n >= 0; --n)
    for (std::size_t i = 0; i < cf.levels[n].size(); ++i)
      svg.path(cf.levels[n][i].curve.vertices, level_color(n), n == 0 ? 2.0 : 1.0,
               "L" + std::to_string(n) + "A" + std::to_string(i));
  const auto& cps = cf.map.critical_points();
  svg.marker(cps[0], "#000000", "c1");
  svg.marker(cps[1], "#d62728", "c2");
  return svg.str();
}

inline std::string curves_svg(const std::vector<Curve>& curves, const SvgView& view,
                              const std::vector<std::pair<SpherePoint, std::string>>& markers = {}) {
  SvgWriter svg(view);
  for (std::size_t i = 0; i < curves.size(); ++i) svg.path(curves[i].vertices, level_color(static_cast<int>(i) + 1));
  for (const auto& [p, label] : markers) svg.marker(p, "#000000", label);
  return svg.str();
}

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string spider_csv(const std::vector<SpiderStep>& history) {
  std::string out = "step,c_real,c_imag,delta\n";
  for (const auto& s : history)
    out += std::to_string(s.step) + "," + csv_number(s.c.real()) + "," + csv_number(s.c.imag()) + "," +
           csv_number(s.delta) + "\n";
  return out;
}

inline std::string reglue_csv(const std::vector<RegluePair>& pts) {
  std::string out = "w_real,w_imag,side,z_real,z_imag\n";
  for (const auto& p : pts)
    out += csv_number(p.before.w.real()) + "," + csv_number(p.before.w.imag()) + "," + side_name(p.before.side) +
           "," + csv_number(p.after.real()) + "," + csv_number(p.after.imag()) + "\n";
  return out;
}

}  // namespace reglue::io
