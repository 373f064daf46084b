#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "oracles.hpp"
#include "reglue/cli.hpp"

using namespace reglue;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "reglue_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::vector<std::string>& args, std::string* err = nullptr) {
  std::ostringstream e, o;
  int code = cli::main(args, e, o);
  if (err) *err = e.str();
  return code;
}

io::Json load(const fs::path& p) { return io::Json::parse(slurp(p)); }

}  // namespace

TEST(CliParse, ComplexNumbers) {
  EXPECT_EQ(cli::parse_complex("2+0.1i"), cplx(2.0, 0.1));
  EXPECT_EQ(cli::parse_complex("-0.12-0.75i"), cplx(-0.12, -0.75));
  EXPECT_EQ(cli::parse_complex("i"), cplx(0.0, 1.0));
  EXPECT_EQ(cli::parse_complex("-i"), cplx(0.0, -1.0));
  EXPECT_EQ(cli::parse_complex("1e-3+2e-2i"), cplx(1e-3, 2e-2));
  EXPECT_EQ(cli::parse_complex("\xE2\x88\x92" "2"), cplx(-2.0, 0.0));
  EXPECT_EQ(cli::parse_complex("[1.5,-2]"), cplx(1.5, -2.0));
  EXPECT_THROW(cli::parse_complex("2+x"), ConfigError);
  EXPECT_THROW(cli::parse_complex(""), ConfigError);
}

TEST(CliParse, Rectangles) {
  auto r = cli::parse_rectangle("[\xE2\x88\x92" "2.2,0.8]\xC3\x97[\xE2\x88\x92" "1.3,1.3]");
  EXPECT_EQ(r, (std::array<double, 4>{-2.2, 0.8, -1.3, 1.3}));
  EXPECT_THROW(cli::parse_rectangle("[0,1]"), ConfigError);
}

TEST(CliParse, FlagsOverrideConfigFile) {
  fs::path dir = scratch("config");
  std::ofstream(dir / "job.cfg") << "# job\ncommand = scan\nk = 2\nres = 96\nwindow = [-1,1]x[-1,1]\n";
  auto cfg = cli::parse_args({"config=" + (dir / "job.cfg").string(), "res=128"});
  EXPECT_EQ(cfg.command, "scan");
  EXPECT_EQ(cfg.k, 2);
  EXPECT_EQ(cfg.resolution, 128);
  EXPECT_EQ(cfg.window.x0, -1.0);
  auto cfg2 = cli::parse_args({"classify", "--config=" + (dir / "job.cfg").string()});
  EXPECT_EQ(cfg2.command, "classify");
  EXPECT_EQ(cfg2.resolution, 96);
}

TEST(CliErrors, ExitCodesAndErrorJson) {
  std::string err;
  EXPECT_EQ(run({"scan", "res=32"}, &err), cli::kExitConfig);
  auto j = io::Json::parse(err);
  EXPECT_EQ(j["error"]["kind"], "config");
  EXPECT_EQ(run({"cuts", "depth=13"}), cli::kExitConfig);
  EXPECT_EQ(run({"center", "tol=0", "angle=1/3"}), cli::kExitConfig);
  EXPECT_EQ(run({"center", "tol=-1e-9", "angle=1/3"}), cli::kExitConfig);
  EXPECT_EQ(run({"frobnicate"}), cli::kExitConfig);
  EXPECT_EQ(run({"center", "unknown=1"}), cli::kExitConfig);
  EXPECT_EQ(run({"center", "angle=2/4"}), cli::kExitConfig);
  EXPECT_EQ(run({"config=/nonexistent/file.cfg"}), cli::kExitConfig);
  // The spider cannot reach 1e-13 in two steps: a numeric failure.
  fs::path dir = scratch("errors");
  EXPECT_EQ(run({"center", "angle=1/7", "max_iter=2", "out=" + (dir / "c").string()}, &err), cli::kExitNumeric);
  EXPECT_EQ(io::Json::parse(err)["error"]["kind"], "numeric");
}

TEST(CliCenter, RabbitFromSpider) {
  fs::path dir = scratch("center");
  ASSERT_EQ(run({"center", "k=1", "angle=1/7", "out=" + (dir / "rabbit").string()}), 0);
  auto j = load(dir / "rabbit.json");
  cplx c(j["c"][0].get<double>(), j["c"][1].get<double>());
  cplx best = 0.0;
  for (cplx r : oracle::exact_period_centers(3))
    if (std::abs(r - cplx(-0.12, 0.74)) < std::abs(best - cplx(-0.12, 0.74))) best = r;
  EXPECT_LT(std::abs(c - best), 1e-8);
  EXPECT_EQ(j["period"], 3);
  std::string csv = slurp(dir / "rabbit.csv");
  EXPECT_EQ(csv.rfind("step,c_real,c_imag,delta\n", 0), 0u);
}

TEST(CliCenter, NewtonCenter) {
  fs::path dir = scratch("newton");
  ASSERT_EQ(run({"center", "k=2", "landing_time=2", "a=2.1+0.1i", "out=" + (dir / "c").string()}), 0);
  auto j = load(dir / "c.json");
  EXPECT_LT(std::abs(cplx(j["c"][0].get<double>(), j["c"][1].get<double>()) - 2.0), 1e-10);
}

TEST(CliScan, OriginIsPeriodicCritical) {
  fs::path dir = scratch("scan");
  const std::string out = (dir / "m").string();
  ASSERT_EQ(run({"scan", "k=1", "window=[-2.2,0.8]x[-1.3,1.3]", "res=64", "basin_res=64", "out=" + out}), 0);
  // 0 sits on the edge between rows 31 and 32 in column 46.
  std::map<std::pair<int, int>, std::string> tags;
  std::ifstream in(out + ".jsonl");
  std::string line;
  int count = 0;
  while (std::getline(in, line)) {
    auto j = io::Json::parse(line);
    tags[{j["row"].get<int>(), j["col"].get<int>()}] = j["tag"].get<std::string>();
    ++count;
  }
  EXPECT_EQ(count, 64 * 64);
  EXPECT_EQ(tags.size(), 64u * 64u);
  EXPECT_EQ((tags[{31, 46}]), "PERIODIC_CRITICAL");
  EXPECT_EQ((tags[{32, 46}]), "PERIODIC_CRITICAL");
  std::string ppm = slurp(out + ".ppm");
  const std::string header = "P6\n64 64\n255\n";
  ASSERT_EQ(ppm.size(), header.size() + 64 * 64 * 3);
  auto white = io::tag_color(Tag::PeriodicCritical);
  std::size_t px = header.size() + 3 * (31 * 64 + 46);
  for (int ch = 0; ch < 3; ++ch) EXPECT_EQ(static_cast<std::uint8_t>(ppm[px + ch]), white[ch]);
}

TEST(CliScan, ResumeCompletesTheSameCells) {
  fs::path dir = scratch("resume");
  const std::vector<std::string> base{"scan", "k=2", "window=[-3,3]x[-3,3]", "res=64", "basin_res=64"};
  auto with_out = [&](const std::string& o) {
    auto a = base;
    a.push_back("out=" + (dir / o).string());
    return a;
  };
  ASSERT_EQ(run(with_out("full")), 0);
  const std::string full = slurp(dir / "full.jsonl");
  // An interrupted run: 700 complete records and a torn one.
  std::size_t cut = 0;
  for (int i = 0; i < 700; ++i) cut = full.find('\n', cut) + 1;
  {
    std::ofstream part(dir / "part.jsonl", std::ios::binary);
    part << full.substr(0, cut + 25);
  }
  std::string err;
  ASSERT_EQ(run(with_out("part"), &err), 0);
  EXPECT_NE(err.find("resuming: 700 cells present"), std::string::npos);
  EXPECT_EQ(slurp(dir / "part.jsonl"), full);
  EXPECT_EQ(slurp(dir / "part.ppm"), slurp(dir / "full.ppm"));
  // A finished scan is left untouched.
  ASSERT_EQ(run(with_out("part")), 0);
  EXPECT_EQ(slurp(dir / "part.jsonl"), full);
}

TEST(CliScan, Deterministic) {
  fs::path dir = scratch("det");
  for (const char* o : {"a", "b"})
    ASSERT_EQ(run({"scan", "k=1", "res=64", "basin_res=64", "out=" + (dir / o).string()}), 0);
  EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
  EXPECT_EQ(slurp(dir / "a.ppm"), slurp(dir / "b.ppm"));
}

TEST(CliCuts, CaptureFamilyFollowsTheDoublingRule) {
  fs::path dir = scratch("cuts");
  ASSERT_EQ(run({"cuts", "k=2", "a=2+0.1i", "depth=3", "out=" + (dir / "c").string()}), 0);
  auto j = load(dir / "c.json");
  EXPECT_EQ(j["beta"]["kind"], "capture");
  ASSERT_EQ(j["levels"].size(), 4u);
  EXPECT_EQ(j["levels"][0]["arc_count"], 1);
  // No arc meets a critical value, so every arc has exactly two preimage arcs.
  for (int n = 1; n <= 3; ++n) {
    const auto& prev = j["levels"][n - 1];
    const auto& lv = j["levels"][n];
    EXPECT_EQ(lv["arc_count"].get<int>(), 2 * prev["arc_count"].get<int>());
    std::map<int, int> children;
    for (const auto& a : lv["arcs"]) ++children[a["parent"].get<int>()];
    EXPECT_EQ(children.size(), prev["arcs"].size());
    for (auto [parent, count] : children) EXPECT_EQ(count, 2) << "level " << n << " parent " << parent;
  }
  EXPECT_TRUE(j["disjoint"].get<bool>());
  std::string svg = slurp(dir / "c.svg");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("version=\"1.1\""), std::string::npos);
  for (int n = 0; n <= 3; ++n) EXPECT_NE(svg.find("stroke=\"" + io::level_color(n) + "\""), std::string::npos) << n;
}

TEST(CliCuts, ExplicitPolylineBeta) {
  fs::path dir = scratch("poly");
  // z^2 with beta = [0, 1] gives Z = [-1, 1].
  ASSERT_EQ(run({"cuts", "k=1", "c=0", "beta=0,0;1,0", "depth=2", "out=" + (dir / "p").string()}), 0);
  auto j = load(dir / "p.json");
  EXPECT_EQ(j["levels"][0]["arc_count"], 1);
  const auto& v = j["levels"][0]["arcs"][0]["curve"]["vertices"];
  EXPECT_NEAR(std::abs(v.front()[0].get<double>()), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(v.back()[0].get<double>()), 1.0, 1e-9);
}

TEST(CliRay, TraceAndBeta) {
  fs::path dir = scratch("ray");
  ASSERT_EQ(run({"ray", "k=1", "c=0", "angle=0", "out=" + (dir / "r").string()}), 0);
  auto j = load(dir / "r.json");
  ASSERT_TRUE(j["ray"].contains("landing"));
  EXPECT_NEAR(j["ray"]["landing"][0].get<double>(), 1.0, 1e-6);
  EXPECT_LT(j["residual"].get<double>(), 1e-8);
  ASSERT_EQ(run({"ray", "k=1", "c=-2", "beta=boundary", "out=" + (dir / "b").string()}), 0);
  auto b = load(dir / "b.json");
  EXPECT_NEAR(b["beta"]["angle"].get<double>(), 0.5, 1e-6);
  EXPECT_NE(slurp(dir / "b.svg").find("<path"), std::string::npos);
  EXPECT_EQ(run({"ray", "k=1", "c=3", "beta=boundary", "out=" + (dir / "x").string()}), cli::kExitConfig);
}

TEST(CliReglueDemo, SeededCsv) {
  fs::path dir = scratch("demo");
  for (const char* o : {"a", "b"})
    ASSERT_EQ(run({"reglue-demo", "seed=5", "radial=3", "angular=8", "samples=4", "out=" + (dir / o).string()}), 0);
  std::string a = slurp(dir / "a.csv");
  EXPECT_EQ(a, slurp(dir / "b.csv"));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 3 * 8 + 2 * 4);
}
