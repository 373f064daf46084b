#pragma once

// Command-line front end. Arguments are `key=value` tokens (or `--key=value`);
// `config=FILE` reads a flat key=value file whose entries are overridden by
// the arguments given on the command line.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reglue/classify.hpp"
#include "reglue/cuts.hpp"
#include "reglue/errors.hpp"
#include "reglue/io.hpp"
#include "reglue/parallel.hpp"
#include "reglue/rays.hpp"
#include "reglue/reglue.hpp"
#include "reglue/spider.hpp"

namespace reglue::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"scan", "classify", "center", "cuts", "ray", "reglue-demo"};
  return c;
}

struct JobConfig {
  std::string command;
  int k = 1;
  cplx parameter{0.0, 0.0};
  Window window{};
  int resolution = 256;
  int basin_resolution = 256;
  int max_iter = 2000;
  int depth = 3;
  /// External or internal angle as p/q (exact) or a decimal.
  std::optional<std::pair<std::int64_t, std::int64_t>> angle_fraction;
  std::optional<double> angle;
  int landing_time = 0;
  double tolerance = 1e-13;
  double max_edge = kDefaultMaxEdge;
  double t0 = 0.1;
  double t1 = 1.0 - 1.0 / 4096.0;
  double step = 0.05;
  /// "auto", "boundary", "capture", or an explicit polyline "x,y;x,y;...;inf".
  std::string beta;
  io::SvgView view{};
  std::string out;
  std::uint64_t seed = 1;
  int radial = 12;
  int angular = 48;
  int cut_samples = 64;

  /// Enforces positive tolerances, resolution >= 64 and depth <= 12.
  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (std::find(commands().begin(), commands().end(), command) == commands().end())
      fail("unknown command '" + command + "'");
    if (k != 1 && k != 2) fail("k must be 1 or 2");
    if (resolution < 64) fail("res must be at least 64");
    if (basin_resolution < 64) fail("basin_res must be at least 64");
    if (depth < 0 || depth > 12) fail("depth must lie in [0, 12]");
    if (max_iter < 1) fail("max_iter must be positive");
    if (!(tolerance > 0.0)) fail("tol must be positive");
    if (!(max_edge > 0.0)) fail("max_edge must be positive");
    if (!(step > 0.0)) fail("step must be positive");
    if (!(t0 > 0.0 && t0 < t1 && t1 < 1.0)) fail("potentials must satisfy 0 < t0 < t1 < 1");
    if (!(window.x0 < window.x1 && window.y0 < window.y1)) fail("window must have positive extent");
    if (!(view.x0 < view.x1 && view.y0 < view.y1) || view.width < 16) fail("view must have positive extent");
    if (radial < 1 || angular < 1 || cut_samples < 0) fail("demo sizes must be positive");
    if (out.empty()) fail("out must not be empty");
  }
};

// ---------------------------------------------------------------------------
// Value parsing

namespace detail {

/// Replaces the Unicode minus and multiplication signs by their ASCII forms.
inline std::string ascii(std::string s) {
  auto replace = [&](const std::string& from, const std::string& to) {
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  };
  replace("\xE2\x88\x92", "-");  // U+2212
  replace("\xC3\x97", "x");      // U+00D7
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char ch) { return std::isspace(ch); }), s.end());
  return s;
}

inline double number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) throw ConfigError("malformed " + what + ": '" + s + "'");
  return v;
}

}  // namespace detail

/// Complex numbers as `2+0.1i`, `-i`, `0.5`, `3i` or `[re,im]`.
inline cplx parse_complex(const std::string& raw) {
  std::string s = detail::ascii(raw);
  if (s.empty()) throw ConfigError("empty complex number");
  if (s.front() == '[' && s.back() == ']') {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed complex number: '" + raw + "'");
    return {detail::number(s.substr(1, comma - 1), "real part"),
            detail::number(s.substr(comma + 1, s.size() - comma - 2), "imaginary part")};
  }
  if (s.back() != 'i' && s.back() != 'j') return {detail::number(s, "complex number"), 0.0};
  s.pop_back();
  // Split at the last sign that is not the leading one and not part of an exponent.
  std::size_t split = std::string::npos;
  for (std::size_t p = s.size(); p-- > 1;) {
    if ((s[p] == '+' || s[p] == '-') && s[p - 1] != 'e' && s[p - 1] != 'E') {
      split = p;
      break;
    }
  }
  auto imag_of = [&](const std::string& t) {
    if (t.empty() || t == "+") return 1.0;
    if (t == "-") return -1.0;
    return detail::number(t, "imaginary part");
  };
  if (split == std::string::npos) return {0.0, imag_of(s)};
  return {detail::number(s.substr(0, split), "real part"), imag_of(s.substr(split))};
}

/// Rectangle `[x0,x1]x[y0,y1]`.
inline std::array<double, 4> parse_rectangle(const std::string& raw) {
  static const std::regex re(R"(\[([^,\]]+),([^\]]+)\]x\[([^,\]]+),([^\]]+)\])");
  std::smatch m;
  std::string s = detail::ascii(raw);
  if (!std::regex_match(s, m, re)) throw ConfigError("malformed rectangle '" + raw + "', expected [x0,x1]x[y0,y1]");
  return {detail::number(m[1], "rectangle bound"), detail::number(m[2], "rectangle bound"),
          detail::number(m[3], "rectangle bound"), detail::number(m[4], "rectangle bound")};
}

/// Polyline `x,y;x,y;...` where a vertex may be `inf`.
inline std::vector<SpherePoint> parse_polyline(const std::string& raw) {
  std::vector<SpherePoint> out;
  std::stringstream ss(detail::ascii(raw));
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item == "inf") {
      out.push_back(SpherePoint::infinity());
      continue;
    }
    auto comma = item.find(',');
    if (comma == std::string::npos) throw ConfigError("malformed polyline vertex '" + item + "'");
    out.emplace_back(cplx(detail::number(item.substr(0, comma), "vertex"), detail::number(item.substr(comma + 1), "vertex")));
  }
  if (out.size() < 2) throw ConfigError("polyline needs at least two vertices");
  return out;
}

/// Reads `key=value` lines; blank lines and lines starting with '#' are skipped.
inline std::vector<std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(number) + ": expected key=value");
    std::string key = line.substr(first, eq - first), value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    auto vb = value.find_first_not_of(" \t"), ve = value.find_last_not_of(" \t\r");
    value = vb == std::string::npos ? "" : value.substr(vb, ve - vb + 1);
    if (key == "config") throw ConfigError("config files cannot include other config files");
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

/// Builds a validated JobConfig from the arguments after the program name.
inline JobConfig parse_args(const std::vector<std::string>& args) {
  std::vector<std::string> tokens, file_tokens;
  std::optional<std::string> config_path;
  for (const auto& a : args) {
    std::string t = a;
    if (t.rfind("--", 0) != 0 && t.find('=') != std::string::npos) t = "--" + t;
    if (t.rfind("--config=", 0) == 0) {
      config_path = t.substr(9);
      continue;
    }
    tokens.push_back(t);
  }
  if (config_path) file_tokens = read_config_file(*config_path);
  // File entries first so that command-line values win under TakeLast.
  std::vector<std::string> all = file_tokens;
  all.insert(all.end(), tokens.begin(), tokens.end());

  CLI::App app{"reglue_kit"};
  app.allow_extras(false);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string command, param = "0", window = "[-2.2,0.8]x[-1.3,1.3]", view = "[-3,3]x[-3,3]", angle, out;
  JobConfig cfg;
  std::string command_opt;
  app.add_option("job", command, "scan | classify | center | cuts | ray | reglue-demo");
  app.add_option("--command", command_opt);
  app.add_option("--k", cfg.k);
  app.add_option("--param,--a,--c", param);
  app.add_option("--window", window);
  app.add_option("--res,--resolution", cfg.resolution);
  app.add_option("--basin_res", cfg.basin_resolution);
  app.add_option("--max_iter", cfg.max_iter);
  app.add_option("--depth", cfg.depth);
  app.add_option("--angle", angle);
  app.add_option("--landing_time", cfg.landing_time);
  app.add_option("--tol", cfg.tolerance);
  app.add_option("--max_edge", cfg.max_edge);
  app.add_option("--t0", cfg.t0);
  app.add_option("--t1", cfg.t1);
  app.add_option("--step", cfg.step);
  app.add_option("--beta", cfg.beta);
  app.add_option("--view", view);
  app.add_option("--svg_width", cfg.view.width);
  app.add_option("--out", out);
  app.add_option("--seed", cfg.seed);
  app.add_option("--radial", cfg.radial);
  app.add_option("--angular", cfg.angular);
  app.add_option("--samples", cfg.cut_samples);

  // CLI11 wants argv in reverse order.
  std::vector<std::string> rev(all.rbegin(), all.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string("argument error: ") + e.what());
  }
  cfg.command = !command.empty() ? command : command_opt;
  if (cfg.command.empty()) throw ConfigError("no command given");
  cfg.parameter = parse_complex(param);
  auto w = parse_rectangle(window);
  cfg.window = {w[0], w[1], w[2], w[3]};
  auto v = parse_rectangle(view);
  cfg.view.x0 = v[0];
  cfg.view.x1 = v[1];
  cfg.view.y0 = v[2];
  cfg.view.y1 = v[3];
  if (!angle.empty()) {
    std::string a = detail::ascii(angle);
    auto slash = a.find('/');
    if (slash != std::string::npos) {
      double p = detail::number(a.substr(0, slash), "angle numerator");
      double q = detail::number(a.substr(slash + 1), "angle denominator");
      if (p != std::floor(p) || q != std::floor(q) || q <= 0 || std::abs(q) > 1e15)
        throw ConfigError("angle fraction needs integer p/q with q > 0");
      cfg.angle_fraction = {static_cast<std::int64_t>(p), static_cast<std::int64_t>(q)};
      cfg.angle = p / q;
    } else {
      cfg.angle = detail::number(a, "angle");
    }
    if (!(*cfg.angle >= 0.0 && *cfg.angle < 1.0)) throw ConfigError("angle must lie in [0, 1)");
  }
  cfg.out = out.empty() ? "reglue_" + cfg.command : out;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

inline std::string path_with(const JobConfig& cfg, const std::string& suffix) { return cfg.out + suffix; }

inline void write_json(const JobConfig& cfg, const io::Json& j, const std::string& suffix = ".json") {
  io::write_text(path_with(cfg, suffix), j.dump(2) + "\n");
}

inline int run_scan(const JobConfig& cfg, std::ostream& out_stream, std::ostream& log) {
  const int res = cfg.resolution;
  const std::filesystem::path jsonl = path_with(cfg, ".jsonl");
  if (jsonl.has_parent_path()) std::filesystem::create_directories(jsonl.parent_path());
  io::ScanLog prior = io::read_scan_log(jsonl, res);
  if (std::filesystem::exists(jsonl)) std::filesystem::resize_file(jsonl, prior.valid_bytes);
  std::map<std::int64_t, Tag> tags = std::move(prior.tags);

  std::vector<std::int64_t> todo;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(res) * res; ++i)
    if (!tags.count(i)) todo.push_back(i);
  if (!tags.empty()) log << "resuming: " << tags.size() << " cells present, " << todo.size() << " to compute\n";

  ScanOptions so;
  so.basin_resolution = cfg.basin_resolution;
  so.max_iter = cfg.max_iter;
  std::ofstream out(jsonl, std::ios::binary | std::ios::app);
  if (!out) throw ConfigError("cannot open " + jsonl.string());
  // Workers fill a chunk; the single writer appends it in index order.
  const std::size_t chunk = static_cast<std::size_t>(std::max(res, 4 * worker_count()));
  for (std::size_t start = 0; start < todo.size(); start += chunk) {
    const std::size_t n = std::min(chunk, todo.size() - start);
    std::vector<ScanCell> cells(n);
    parallel_for(0, static_cast<std::int64_t>(n), [&](std::int64_t i) {
      std::int64_t idx = todo[start + i];
      cells[i] = scan_cell(cfg.k, cfg.window, res, static_cast<int>(idx / res), static_cast<int>(idx % res), so);
    });
    for (const auto& c : cells) {
      out << io::scan_record(c).dump() << '\n';
      tags[static_cast<std::int64_t>(c.row) * res + c.col] = c.classification.tag;
    }
    out.flush();
    if (!out) throw ConfigError("write failed: " + jsonl.string());
  }

  std::vector<std::array<std::uint8_t, 3>> rgb(static_cast<std::size_t>(res) * res);
  std::map<std::string, int> counts;
  for (const auto& [idx, tag] : tags) {
    rgb[idx] = io::tag_color(tag);
    ++counts[tag_name(tag)];
  }
  io::write_text(path_with(cfg, ".ppm"), io::ppm(res, res, rgb));
  io::Json summary;
  summary["command"] = "scan";
  summary["k"] = cfg.k;
  summary["window"] = {cfg.window.x0, cfg.window.x1, cfg.window.y0, cfg.window.y1};
  summary["resolution"] = res;
  summary["basin_resolution"] = cfg.basin_resolution;
  summary["counts"] = counts;
  summary["raster"] = path_with(cfg, ".ppm");
  summary["records"] = jsonl.string();
  out_stream << summary.dump() << '\n';
  return kExitOk;
}

inline int run_classify(const JobConfig& cfg, std::ostream& out) {
  FamilyMember fm = family_member(cfg.k, cfg.parameter);
  ClassifyOptions co;
  co.resolution = cfg.basin_resolution;
  co.max_iter = cfg.max_iter;
  auto cl = classify_free_critical(fm, co);
  io::Json j;
  j["command"] = "classify";
  j["family"] = io::family_json(fm);
  j["critical_points"] = {io::to_json(fm.map.c1()), io::to_json(fm.map.c2())};
  j["free_critical_value"] = io::to_json(free_critical_value(fm.map));
  j["marked_cycle"] = io::to_json(marked_cycle(fm));
  j["classification"] = io::to_json(cl);
  write_json(cfg, j);
  out << j.dump() << '\n';
  return kExitOk;
}

inline int run_center(const JobConfig& cfg, std::ostream& out) {
  io::Json j;
  j["command"] = "center";
  j["k"] = cfg.k;
  if (cfg.k == 1 && cfg.angle_fraction) {
    auto [p, q] = *cfg.angle_fraction;
    auto pt = angle_to_portrait(p, q);
    auto res = spider_solve(pt, cfg.tolerance, cfg.max_iter);
    j["method"] = "spider";
    j["angle"] = std::to_string(p) + "/" + std::to_string(q);
    j["preperiod"] = pt.preperiod;
    j["period"] = pt.period;
    j["c"] = io::to_json(res.c);
    j["steps"] = res.history.size();
    j["final_delta"] = res.history.back().delta;
    io::write_text(path_with(cfg, ".csv"), io::spider_csv(res.history));
  } else {
    if (cfg.landing_time < 1) throw ConfigError("center needs angle=p/q (k=1) or landing_time=n");
    cplx c = find_center(cfg.k, cfg.landing_time, cfg.parameter);
    j["method"] = "newton";
    j["landing_time"] = cfg.landing_time;
    j["guess"] = io::to_json(cfg.parameter);
    j["c"] = io::to_json(c);
  }
  write_json(cfg, j);
  out << j.dump() << '\n';
  return kExitOk;
}

/// beta from the configuration: an explicit polyline or a ray construction.
inline std::pair<Curve, io::Json> choose_beta(const JobConfig& cfg, const FamilyMember& fm) {
  const std::string mode = cfg.beta.empty() ? "auto" : cfg.beta;
  if (mode != "auto" && mode != "boundary" && mode != "capture") {
    Curve c = make_polyline(parse_polyline(mode), cfg.max_edge);
    c.start_tag = "critical value";
    c.end_tag = "end";
    return {c, io::Json{{"kind", "polyline"}}};
  }
  BetaOptions bo;
  bo.max_iter = cfg.max_iter;
  bo.continuation.max_edge = cfg.max_edge;
  bool capture = mode == "capture";
  if (mode == "auto") {
    BoettcherData bd = marked_boettcher(fm);
    capture = ::reglue::detail::entry_time(fm.map, bd, free_critical_value(fm.map), bo.max_iter) >= 0;
  }
  BetaResult r = capture ? beta_capture_case(fm, bo) : beta_boundary_case(fm, cfg.angle, bo);
  io::Json info = io::to_json(r);
  info.erase("curve");
  info["kind"] = capture ? "capture" : "boundary";
  Curve c = capture ? r.curve : beta_from_v(r, free_critical_value(fm.map));
  return {c, info};
}

inline int run_cuts(const JobConfig& cfg, std::ostream& out) {
  FamilyMember fm = family_member(cfg.k, cfg.parameter);
  auto [beta, info] = choose_beta(cfg, fm);
  PullbackOptions po;
  po.max_edge = cfg.max_edge;
  Curve z = initial_cut(fm.map, beta, po);
  CutFamily cf = build_cut_family(fm.map, z, cfg.depth, po);
  CutComplex cx = build_cut_complex(cf);
  io::Json j;
  j["command"] = "cuts";
  info["curve"] = io::to_json(beta);
  j["beta"] = std::move(info);
  io::Json doc = io::cut_document(fm, cf, cx);
  for (auto& [key, value] : doc.items()) j[key] = value;
  write_json(cfg, j);
  io::write_text(path_with(cfg, ".svg"), io::cut_svg(cf, cfg.view));
  io::Json summary{{"command", "cuts"}, {"depth", cf.depth()}, {"disjoint", cx.disjoint}};
  io::Json counts = io::Json::array();
  for (const auto& l : cx.levels) counts.push_back(l.arc_count);
  summary["arc_counts"] = counts;
  out << summary.dump() << '\n';
  return kExitOk;
}

inline int run_ray(const JobConfig& cfg, std::ostream& out) {
  FamilyMember fm = family_member(cfg.k, cfg.parameter);
  io::Json j;
  j["command"] = "ray";
  j["family"] = io::family_json(fm);
  Curve curve;
  std::vector<std::pair<SpherePoint, std::string>> marks{{free_critical_value(fm.map), "v"}};
  if (cfg.beta.empty()) {
    if (!cfg.angle) throw ConfigError("ray needs angle= or beta=boundary|capture|auto");
    ContinuationOptions co;
    co.max_edge = cfg.max_edge;
    Ray r = trace_ray(marked_boettcher(fm), *cfg.angle, cfg.t0, cfg.t1, cfg.step, co);
    j["ray"] = io::to_json(r);
    j["residual"] = ray_residual(RayFrame{marked_boettcher(fm), 0}, r);
    curve = r.trace;
  } else {
    auto [beta, info] = choose_beta(cfg, fm);
    info["curve"] = io::to_json(beta);
    j["beta"] = std::move(info);
    curve = beta;
  }
  write_json(cfg, j);
  io::write_text(path_with(cfg, ".svg"), io::curves_svg({curve}, cfg.view, marks));
  out << io::Json{{"command", "ray"}, {"vertices", curve.vertices.size()}}.dump() << '\n';
  return kExitOk;
}

inline int run_reglue_demo(const JobConfig& cfg, std::ostream& out) {
  auto pts = reglue_demo(cfg.radial, cfg.angular, cfg.cut_samples, cfg.seed);
  io::write_text(path_with(cfg, ".csv"), io::reglue_csv(pts));
  out << io::Json{{"command", "reglue-demo"}, {"points", pts.size()}}.dump() << '\n';
  return kExitOk;
}

}  // namespace detail

inline void report_error(std::ostream& err, const std::string& kind, const std::string& message) {
  err << io::Json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

/// Runs a job; one summary JSON line goes to `out`, progress notes to `log`.
inline int run(const JobConfig& cfg, std::ostream& out = std::cout, std::ostream& log = std::cerr) {
  cfg.validate();
  if (cfg.command == "scan") return detail::run_scan(cfg, out, log);
  if (cfg.command == "classify") return detail::run_classify(cfg, out);
  if (cfg.command == "center") return detail::run_center(cfg, out);
  if (cfg.command == "cuts") return detail::run_cuts(cfg, out);
  if (cfg.command == "ray") return detail::run_ray(cfg, out);
  return detail::run_reglue_demo(cfg, out);
}

/// Parses, runs and maps failures to exit codes: 2 for configuration and
/// domain errors, 3 for numeric failures.
inline int main(const std::vector<std::string>& args, std::ostream& err = std::cerr, std::ostream& out = std::cout) {
  try {
    return run(parse_args(args), out, err);
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const DomainError& e) {
    report_error(err, "domain", e.what());
    return kExitConfig;
  } catch (const NumericError& e) {
    report_error(err, "numeric", e.what());
    return kExitNumeric;
  } catch (const std::filesystem::filesystem_error& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error(err, "numeric", e.what());
    return kExitNumeric;
  }
}

}  // namespace reglue::cli
