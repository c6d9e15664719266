#include <gtest/gtest.h>

#include <filesystem>

#include "finsler/app/commands.hpp"
#include "finsler/app/yaml_config.hpp"

using namespace finsler;
using namespace finsler::app;
namespace fs = std::filesystem;

namespace {

Json base() {
  return parse_yaml(R"(
seed: 5
plan: {radii: 2, angles: 3, directions: 2, r_max: 0.6}
metrics:
  - {id: disk, family: poincare, complex_dim: 1, expect: {class: strongly_kahler, pseudoconvex: true}}
  - {id: flat, family: euclidean, complex_dim: 2}
  - id: s2
    family: unitary
    complex_dim: 2
    profile: {kind: poly, terms: [[0, 0, 1.0], [0, 2, 1.0]]}
    expect: {weakly_kahler_pde: false}
maps:
  - {id: identity, type: identity}
  - {id: square, type: power, k: 2}
schwarz:
  pairs:
    - {map: identity, domain: disk, target: disk}
    - {map: square, domain: disk, target: disk}
)");
}

const ItemReport& item(const RunResult& r, const std::string& id) {
  for (const auto& i : r.items)
    if (i.id == id) return i;
  throw std::runtime_error("missing item " + id);
}

}  // namespace

TEST(Config, YamlScalarsAndQuoting) {
  const Json j = parse_yaml("a: 3\nb: 2.5\nc: true\nd: '7'\ne: ~\nf: [1, x]\n");
  EXPECT_TRUE(j["a"].is_number_integer());
  EXPECT_EQ(j["b"].get<double>(), 2.5);
  EXPECT_EQ(j["c"], true);
  EXPECT_EQ(j["d"], "7");
  EXPECT_TRUE(j["e"].is_null());
  EXPECT_EQ(j["f"][1], "x");
  EXPECT_THROW(parse_yaml("a: [1, 2"), ConfigError);
}

TEST(Config, DefaultsAreEchoedAndIdempotent) {
  const Json e = effective_config(base());
  EXPECT_EQ(e["schema"], 1);
  EXPECT_EQ(e["plan"]["seed"], 5);
  EXPECT_EQ(e["schwarz"]["fan"], 17);
  EXPECT_EQ(e["schwarz"]["pairs"][0]["id"], "identity");
  EXPECT_EQ(e["schwarz"]["pairs"][0]["expect"], "PASS");
  EXPECT_EQ(e["geodesic"]["steps"], 32);
  EXPECT_EQ(effective_config(e), e);
}

TEST(Config, Rejections) {
  Json j = base();
  j.erase("seed");
  EXPECT_THROW(effective_config(j), ConfigError);
  j = base();
  j["bogus"] = 1;
  EXPECT_THROW(effective_config(j), ConfigError);
  j = base();
  j["metrics"][1]["id"] = "disk";
  EXPECT_THROW(effective_config(j), ConfigError);
  j = base();
  j["metrics"][0]["id"] = "../escape";
  EXPECT_THROW(effective_config(j), ConfigError);
  j = base();
  j["schwarz"]["pairs"][0]["map"] = "nope";
  EXPECT_THROW(effective_config(j), ConfigError);
  j = base();
  j["metrics"][0]["family"] = "nope";
  EXPECT_THROW(effective_config(j), ConfigError);
  EXPECT_THROW(run("warp", effective_config(base())), ConfigError);
}

TEST(Commands, CheckRecordsFactsAndExpectations) {
  const RunResult r = run("check", effective_config(base()));
  ASSERT_EQ(r.items.size(), 3u);
  const auto& disk = item(r, "disk");
  EXPECT_TRUE(disk.passed);
  EXPECT_EQ(disk.result["facts"]["class"], "strongly Kähler");
  const auto& s2 = item(r, "s2");
  EXPECT_TRUE(s2.passed);
  EXPECT_EQ(s2.result["facts"]["weakly_kahler_pde"], false);
  EXPECT_GT(s2.result["weakly_kahler_pde"]["summary"]["max_residual"].get<double>(), 1e-3);
  Json j = base();
  j["metrics"][1]["expect"] = {{"class", "weakly Kähler"}};
  const RunResult bad = run("check", effective_config(j), "flat");
  EXPECT_FALSE(bad.passed());
}

TEST(Commands, CurvatureTableOnDisk) {
  const RunResult r = run("curvature", effective_config(base()), "disk");
  const auto& d = r.items.front();
  EXPECT_TRUE(d.passed);
  EXPECT_NEAR(d.result["K_G_min"].get<double>(), -4.0, 1e-9);
  EXPECT_NEAR(d.result["K_G_max"].get<double>(), -4.0, 1e-9);
  EXPECT_NE(d.tables.at("curvature.csv").find("point,direction,x0,x1,K_G,flag,error\n"), std::string::npos);
}

TEST(Commands, DistanceOnEuclideanIsTheNorm) {
  Json j = base();
  j["distance"] = {{"points", Json::array({Json::array({0.3, 0.4, 0.0, 0.0}), Json::array({Json::array({1.0, -1.0}), 0.5})})},
                   {"hessian", false}};
  const RunResult r = run("distance", effective_config(j), "flat");
  const auto& d = r.items.front();
  EXPECT_TRUE(d.passed) << d.result.dump();
  EXPECT_LT(d.result["flat_max_error"].get<double>(), 1e-12);
  EXPECT_NE(d.tables.at("distance.csv").find(",0.5,0.5,"), std::string::npos);
}

TEST(Commands, GeodesicRaysOnFlat) {
  const RunResult r = run("geodesic", effective_config(base()), "flat");
  const auto& g = r.items.front();
  EXPECT_TRUE(g.passed);
  for (const auto& row : g.result["geodesics"]) EXPECT_LT(row["ray_error"].get<double>(), 1e-9);
  EXPECT_EQ(g.tables.size(), g.result["geodesics"].size());
}

TEST(Commands, SchwarzIdentityCertificate) {
  const RunResult r = run("schwarz", effective_config(base()));
  const auto& id = item(r, "identity");
  EXPECT_TRUE(id.passed);
  EXPECT_NEAR(id.result["max_ratio"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(id.result["status"], "PASS");
  Json j = base();
  j["schwarz"]["pairs"][1]["expect"] = "FAIL";
  EXPECT_FALSE(run("schwarz", effective_config(j), "square").passed());
}

TEST(Commands, ItemErrorsAreReportedNotThrown) {
  Json j = base();
  j["distance"] = {{"pole", Json::array({0.1, 0.0})}, {"points", Json::array({Json::array({0.1, 0.0})})}};
  const RunResult r = run("distance", effective_config(j), "disk");
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.items.front().result["errors"], 1);
}

TEST(Replay, DeterministicPayloadAndTamperDetection) {
  const Json cfg = effective_config(base());
  const RunResult a = run("schwarz", cfg, "square"), b = run("schwarz", cfg, "square");
  const Json pa = payload("schwarz", cfg, a.items.front());
  EXPECT_EQ(pa, payload("schwarz", cfg, b.items.front()));
  EXPECT_FALSE(pa.contains("metadata"));
  Json stored = pa;
  stored["metadata"] = metadata();
  EXPECT_TRUE(replay(stored).passed);
  Json tampered = stored;
  tampered["result"]["max_ratio"] = 0.5;
  const ReplayResult t = replay(tampered);
  EXPECT_FALSE(t.passed);
  ASSERT_FALSE(t.differences.empty());
  EXPECT_NE(t.differences.front().find("/result/max_ratio"), std::string::npos);
  Json perturbed = stored;
  perturbed["config"]["plan"]["r_max"] = 0.6 + 1e-9;
  EXPECT_FALSE(replay(perturbed).passed);
  EXPECT_TRUE(replay(perturbed, 1e-6).passed);
  Json schema = stored;
  schema["schema"] = 2;
  EXPECT_THROW(replay(schema), ConfigError);
}

TEST(Replay, WrittenReportsRoundTrip) {
  const fs::path out = fs::temp_directory_path() / "finsler_cli_test";
  fs::remove_all(out);
  const RunResult r = run("curvature", effective_config(base()), "disk");
  const auto paths = write_reports(r, out);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0], out / "curvature" / "disk" / "report.json");
  EXPECT_TRUE(fs::exists(out / "curvature" / "disk" / "curvature.csv"));
  const Json stored = read_json_file(paths[0]);
  EXPECT_TRUE(stored["metadata"].contains("timestamp"));
  EXPECT_TRUE(replay(stored).passed);
  fs::remove_all(out);
}
