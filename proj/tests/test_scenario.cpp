#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "ritcbf/scenario.hpp"

namespace ritcbf {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(ScenarioJson, RoundTripsBothBuilders) {
  for (const ScenarioConfig& c : {build_rendezvous_scenario(), build_stationkeeping_scenario()}) {
    const json j = to_json(c);
    EXPECT_EQ(to_json(scenario_from_json(j)), j) << c.name;
    EXPECT_EQ(to_json(parse_scenario(j.dump(2))), j) << c.name;
  }
}

TEST(ScenarioJson, ShippedFilesMatchBuilders) {
  const std::string dir = std::string(RITCBF_SOURCE_DIR) + "/scenarios/";
  EXPECT_EQ(json::parse(read_file(dir + "rendezvous.json")), to_json(build_rendezvous_scenario()));
  EXPECT_EQ(json::parse(read_file(dir + "stationkeeping.json")), to_json(build_stationkeeping_scenario()));
  EXPECT_NO_THROW(load_scenario(dir + "rendezvous.json"));
  EXPECT_THROW(load_scenario(dir + "missing.json"), Error);
}

TEST(ScenarioJson, UnknownKeyReportsLine) {
  const std::string text = "{\n  \"name\": \"x\",\n  \"timing\": {\"T_s\": 10},\n  \"bogus\": 1\n}\n";
  const std::string msg = error_of(text);
  EXPECT_NE(msg.find("unknown key 'bogus'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
}

TEST(ScenarioJson, NestedUnknownKeyNamesPath) {
  const std::string msg = error_of("{\n\"controller\": {\n  \"u_maxx\": 1\n}\n}");
  EXPECT_NE(msg.find("/controller"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(ScenarioJson, TypeAndRangeErrors) {
  EXPECT_NE(error_of("{\"dimension\": 4}").find("/dimension"), std::string::npos);
  EXPECT_NE(error_of("{\"mu\": \"big\"}").find("/mu must be a number"), std::string::npos);
  EXPECT_NE(error_of("{\"controller\": {\"u_max\": -1}}").find("u_max"), std::string::npos);
  EXPECT_NE(error_of("{\"mode\": \"hybrid\"}").find("unknown mode"), std::string::npos);
  EXPECT_NE(error_of("{\"barriers\": [{\"kind\": \"halfspace\", \"p\": [1, 1], \"gamma\": 1}]}").find("unit vector"),
            std::string::npos);
  EXPECT_NE(error_of("{ not json").find("parse error"), std::string::npos);
}

TEST(ScenarioJson, TimingViolationNamesInequality) {
  const std::string text = "{\n  \"name\": \"x\",\n  \"timing\": {\"T_s\": 10, \"T_a\": 120, \"T_m\": 30, \"T_L\": 100, \"T_M\": 300}\n}";
  const std::string msg = error_of(text);
  EXPECT_NE(msg.find("/timing violates"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(ScenarioJson, MissingKeysTakeDefaults) {
  const ScenarioConfig c = parse_scenario("{}");
  const ScenarioConfig d;
  EXPECT_EQ(to_json(c), to_json(d));
}

TEST(ScenarioJson, OverridesMergeAndValidate) {
  const ScenarioConfig c = build_rendezvous_scenario(300.0, {{"controller", {{"u_max", 1.5}}}, {"seed", 7}});
  EXPECT_DOUBLE_EQ(c.ctl.u_max, 1.5);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.barriers.size(), 7u);
  EXPECT_THROW(build_rendezvous_scenario(300.0, {{"nope", 1}}), Error);
}

TEST(ScenarioTiming, WithTmPinsInterval) {
  const ScenarioConfig c = with_T_M(build_rendezvous_scenario(300.0), 600.0);
  EXPECT_DOUBLE_EQ(c.timing.T_M, 600.0);
  EXPECT_DOUBLE_EQ(c.timing.T_L, 600.0);
  EXPECT_FALSE(validate_timing(c.timing).has_value());
}

// Face normals checked against an icosahedron built from its vertices.
TEST(Icosahedron, NormalsSupportTheSolid) {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> verts;
  for (int a : {-1, 1})
    for (int b : {-1, 1}) {
      verts.emplace_back(0, a * phi, b);
      verts.emplace_back(a * phi, b, 0);
      verts.emplace_back(b, 0, a * phi);
    }
  const double R = verts[0].norm();
  const auto normals = icosahedron_face_normals();
  ASSERT_EQ(normals.size(), 20u);
  Vec3 sum = Vec3::Zero();
  for (const Vec3& n : normals) {
    EXPECT_NEAR(n.norm(), 1.0, 1e-12);
    double support = -1e9;
    for (const Vec3& v : verts) support = std::max(support, n.dot(v));
    int touching = 0;
    for (const Vec3& v : verts) touching += std::abs(n.dot(v) - support) < 1e-9;
    EXPECT_EQ(touching, 3);
    EXPECT_NEAR(support / R, icosahedron_inradius_ratio(), 1e-12);
    sum += n;
  }
  EXPECT_LT(sum.norm(), 1e-12);
}

TEST(Families, StationkeepingBoxAroundTarget) {
  const ScenarioConfig c = build_stationkeeping_scenario();
  const auto fams = build_families(c);
  ASSERT_EQ(fams.size(), 20u);
  const KeplerOrbit tgt = target_orbit(c);
  const GravityModel g{c.mu, c.domain.r_min};
  for (const auto& f : fams) {
    EXPECT_NEAR(h_eval(f, 1234.0, tgt.at(1234.0), g).h, -10.0e3 * icosahedron_inradius_ratio(), 1e-6);
    EXPECT_DOUBLE_EQ(f.gamma, 120.0);
  }
  // The chaser starts inside every face.
  for (const auto& f : fams) EXPECT_LT(h_eval(f, 0.0, chaser_initial_state(c), g).h, 0.0);
}

TEST(Families, RendezvousZonesSitOnRadialOffsets) {
  const ScenarioConfig c = build_rendezvous_scenario();
  const auto fams = build_families(c);
  ASSERT_EQ(fams.size(), 7u);
  const KeplerOrbit chs = chaser_nominal_orbit(c);
  for (std::size_t k = 0; k < fams.size(); ++k) {
    const double epoch = c.barriers[k].epoch;
    const PlantState x = chs.at(epoch), z = fams[k].center.at(epoch);
    EXPECT_NEAR((z.r - x.r).norm(), std::abs(c.barriers[k].dr.x()), 1e-6);
    EXPECT_NEAR((z.r - x.r).normalized().dot(x.r.normalized()), c.barriers[k].dr.x() > 0 ? 1.0 : -1.0, 1e-9);
    EXPECT_EQ(z.r.z(), 0.0);
  }
  // Nothing is violated at the start.
  const GravityModel g{c.mu, c.domain.r_min};
  for (const auto& f : fams) EXPECT_LT(h_eval(f, c.t0, chaser_initial_state(c), g).h, 0.0);
}

}  // namespace
}  // namespace ritcbf
