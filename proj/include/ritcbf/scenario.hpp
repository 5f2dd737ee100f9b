#pragma once

// Scenario configuration: the JSON schema, strict parsing, serialization, and
// builders for the rendezvous and GEO stationkeeping case studies.

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ritcbf/controller.hpp"
#include "ritcbf/verify.hpp"

namespace ritcbf {

using json = nlohmann::json;

struct OrbitElements {
  double a = 7.775e6;
  double e = 0.1;
  double inc = 0.0;
  double raan = 0.0;
  double argp = 0.0;
  double M0 = 0.0;
};

/// One entry of the barrier list. Exclusion zones are anchored at an epoch relative to the
/// target orbit or to the chaser's uncontrolled orbit; halfspaces are relative to the target.
struct BarrierSpec {
  std::string kind = "exclusion_zone";  // exclusion_zone | halfspace | icosahedron
  std::string name;
  double R_o = 200.0;
  std::string relative_to = "chaser";  // target | chaser
  std::string frame = "lvlh";          // inertial | lvlh (radial, along-track, orbit normal)
  double epoch = 0.0;
  Vec3 dr = Vec3::Zero();
  Vec3 dv = Vec3::Zero();
  Vec3 p = Vec3::UnitX();
  double rho_off = 0.0;
  double gamma = 0.0;
  double radius = 0.0;  // icosahedron circumradius
};

struct MeasurementConfig {
  double rho_r = 5.0;
  double rho_v = 0.005;
  double shrink_factor = 1.0;
  bool pin_interval = true;  // every interval equals T_M
};

struct IntegratorConfig {
  double truth_dt = 0.0;  // 0 selects min(T_s, 1)/10
  double predict_rtol = 1e-10;
  double log_every = 0.0;  // flow-record cadence in seconds; 0 logs jumps only
};

struct ScenarioConfig {
  std::string name = "scenario";
  ActuationMode mode = ActuationMode::Impulsive;
  int dim = 2;
  double mu = kMuEarth;
  double t0 = 0.0;
  TimingConfig timing;
  StateDomain domain;
  DisturbanceBounds db;
  DisturbanceMode dist_mode = DisturbanceMode::RandomBall;
  Vec3 fixed_direction = Vec3::UnitX();
  LipschitzPair lip;
  MeasurementConfig meas;
  OrbitElements target;
  PlantState chaser_offset;  // chaser minus target at t0
  std::vector<BarrierSpec> barriers;
  ControllerConfig ctl;
  double psi_grid_divisor = 12.0;  // psi grid = T_M / divisor; <= 0 keeps ctl.psi_grid
  IntegratorConfig integ;
  VerifierSampling verifier;
  std::string verifier_reference = "chaser";  // orbit the verifier samples around
  double verifier_t_span = 0.0;               // 0 samples one reference period
  double duration = 1800.0;
  std::uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Enum strings

inline std::string to_string(ActuationMode m) { return m == ActuationMode::Impulsive ? "impulsive" : "continuous"; }
inline std::string to_string(ImpulsePolicy p) { return p == ImpulsePolicy::FuelMin ? "fuel_min" : "always_actuate"; }
inline std::string to_string(BoundForm b) { return b == BoundForm::Pointwise ? "pointwise" : "decoupled"; }
inline std::string to_string(InfeasiblePolicy p) {
  return p == InfeasiblePolicy::Abort ? "abort" : "least_violating";
}

namespace detail {

template <class E>
E enum_from(const std::string& s, std::initializer_list<std::pair<const char*, E>> table, const char* what) {
  for (const auto& [k, v] : table)
    if (s == k) return v;
  throw Error(ErrorKind::kConfig, std::string("unknown ") + what + " '" + s + "'");
}

inline json vec_json(const Vec3& v, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(v(i));
  return a;
}

// Reads an object field by field and rejects keys that were never consumed.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_ + " must be an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw Error(ErrorKind::kConfig, "unknown key '" + it.key() + "' in " + path_);
  }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }
  std::string sub(const std::string& k) const { return path_ + "/" + k; }

  void num(const std::string& k, double& out) {
    if (!has(k)) return;
    const json& v = raw(k);
    if (!v.is_number()) fail(sub(k) + " must be a number");
    out = v.get<double>();
  }
  void integer(const std::string& k, int& out) {
    if (!has(k)) return;
    const json& v = raw(k);
    if (!v.is_number_integer()) fail(sub(k) + " must be an integer");
    out = v.get<int>();
  }
  void u64(const std::string& k, std::uint64_t& out) {
    if (!has(k)) return;
    const json& v = raw(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(sub(k) + " must be a nonnegative integer");
    out = v.get<std::uint64_t>();
  }
  void boolean(const std::string& k, bool& out) {
    if (!has(k)) return;
    const json& v = raw(k);
    if (!v.is_boolean()) fail(sub(k) + " must be true or false");
    out = v.get<bool>();
  }
  void str(const std::string& k, std::string& out) {
    if (!has(k)) return;
    const json& v = raw(k);
    if (!v.is_string()) fail(sub(k) + " must be a string");
    out = v.get<std::string>();
  }
  void vec(const std::string& k, Vec3& out) {
    if (!has(k)) return;
    const json& v = raw(k);
    if (!v.is_array() || v.size() < 2 || v.size() > 3) fail(sub(k) + " must be an array of 2 or 3 numbers");
    out.setZero();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(sub(k) + " must contain numbers");
      out(i) = v[i].get<double>();
    }
  }

  [[noreturn]] static void fail(const std::string& msg) { throw Error(ErrorKind::kConfig, msg); }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(const ScenarioConfig& c) {
  const int n = c.dim;
  json barriers = json::array();
  for (const auto& b : c.barriers) {
    json e = {{"kind", b.kind}, {"name", b.name}};
    if (b.kind == "exclusion_zone") {
      e["R_o"] = b.R_o;
      e["relative_to"] = b.relative_to;
      e["frame"] = b.frame;
      e["epoch"] = b.epoch;
      e["dr"] = detail::vec_json(b.dr, n);
      e["dv"] = detail::vec_json(b.dv, n);
    } else if (b.kind == "halfspace") {
      e["p"] = detail::vec_json(b.p, n);
      e["rho_off"] = b.rho_off;
      e["gamma"] = b.gamma;
    } else {
      e["radius"] = b.radius;
      e["gamma"] = b.gamma;
    }
    barriers.push_back(e);
  }
  return {
      {"name", c.name},
      {"mode", to_string(c.mode)},
      {"dimension", c.dim},
      {"mu", c.mu},
      {"t0", c.t0},
      {"timing", {{"T_s", c.timing.T_s}, {"T_a", c.timing.T_a}, {"T_m", c.timing.T_m},
                  {"T_L", c.timing.T_L}, {"T_M", c.timing.T_M}}},
      {"domain", {{"r_min", c.domain.r_min}, {"r_max", c.domain.r_max}, {"v_max", c.domain.v_max}}},
      {"disturbances", {{"w_c", c.db.w_c}, {"w_g_slope", c.db.w_g_slope}, {"w_g_cap", c.db.w_g_cap},
                        {"mode", to_string(c.dist_mode)},
                        {"fixed_direction", detail::vec_json(c.fixed_direction, n)}}},
      {"lipschitz", {{"l_fr", c.lip.l_fr}, {"l_fv", c.lip.l_fv}}},
      {"measurement", {{"rho_r", c.meas.rho_r}, {"rho_v", c.meas.rho_v},
                       {"shrink_factor", c.meas.shrink_factor}, {"pin_interval", c.meas.pin_interval}}},
      {"target", {{"a", c.target.a}, {"e", c.target.e}, {"inc", c.target.inc}, {"raan", c.target.raan},
                  {"argp", c.target.argp}, {"M0", c.target.M0}}},
      {"chaser", {{"dr", detail::vec_json(c.chaser_offset.r, n)}, {"dv", detail::vec_json(c.chaser_offset.v, n)}}},
      {"barriers", barriers},
      {"controller", {{"policy", to_string(c.ctl.policy)},
                      {"bound", to_string(c.ctl.bound)},
                      {"on_infeasible", to_string(c.ctl.on_infeasible)},
                      {"u_max", c.ctl.u_max},
                      {"gamma", c.ctl.gamma},
                      {"alpha_slope", c.ctl.alpha_slope},
                      {"psi_grid", c.ctl.psi_grid},
                      {"psi_grid_divisor", c.psi_grid_divisor},
                      {"lookahead", c.ctl.lookahead},
                      {"multistart", {{"directions", c.ctl.multistart_dirs}, {"magnitudes", c.ctl.multistart_mags}}},
                      {"nelder_mead", {{"iterations", c.ctl.nm_iters}, {"tolerance", c.ctl.nm_tol}}},
                      {"relax_weight", c.ctl.relax_weight},
                      {"fuel_refine", c.ctl.fuel_refine},
                      {"extend_to_measurement", c.ctl.extend_to_measurement}}},
      {"integrator", {{"truth_dt", c.integ.truth_dt}, {"predict_tol", c.integ.predict_rtol},
                      {"log_every", c.integ.log_every}}},
      {"verifier", {{"samples", c.verifier.samples}, {"seed", c.verifier.seed},
                    {"pos_radius", c.verifier.pos_radius}, {"vel_radius", c.verifier.vel_radius},
                    {"reference", c.verifier_reference}, {"t_span", c.verifier_t_span}}},
      {"duration", c.duration},
      {"seed", c.seed},
  };
}

inline ScenarioConfig scenario_from_json(const json& j) {
  using detail::Reader;
  ScenarioConfig c;
  Reader R(j, "");
  R.str("name", c.name);
  if (R.has("mode")) {
    std::string m;
    R.str("mode", m);
    c.mode = detail::enum_from<ActuationMode>(
        m, {{"impulsive", ActuationMode::Impulsive}, {"continuous", ActuationMode::Continuous}}, "mode");
  }
  R.integer("dimension", c.dim);
  if (c.dim != 2 && c.dim != 3) Reader::fail("/dimension must be 2 or 3");
  R.num("mu", c.mu);
  R.num("t0", c.t0);
  if (R.has("timing")) {
    Reader T(R.raw("timing"), "/timing");
    T.num("T_s", c.timing.T_s);
    T.num("T_a", c.timing.T_a);
    T.num("T_m", c.timing.T_m);
    T.num("T_L", c.timing.T_L);
    T.num("T_M", c.timing.T_M);
  }
  if (R.has("domain")) {
    Reader D(R.raw("domain"), "/domain");
    D.num("r_min", c.domain.r_min);
    D.num("r_max", c.domain.r_max);
    D.num("v_max", c.domain.v_max);
  }
  if (R.has("disturbances")) {
    Reader D(R.raw("disturbances"), "/disturbances");
    D.num("w_c", c.db.w_c);
    D.num("w_g_slope", c.db.w_g_slope);
    D.num("w_g_cap", c.db.w_g_cap);
    if (D.has("mode")) {
      std::string m;
      D.str("mode", m);
      c.dist_mode = disturbance_mode_from_string(m);
    }
    D.vec("fixed_direction", c.fixed_direction);
  }
  if (R.has("lipschitz")) {
    Reader L(R.raw("lipschitz"), "/lipschitz");
    L.num("l_fr", c.lip.l_fr);
    L.num("l_fv", c.lip.l_fv);
  }
  if (R.has("measurement")) {
    Reader M(R.raw("measurement"), "/measurement");
    M.num("rho_r", c.meas.rho_r);
    M.num("rho_v", c.meas.rho_v);
    M.num("shrink_factor", c.meas.shrink_factor);
    M.boolean("pin_interval", c.meas.pin_interval);
  }
  if (R.has("target")) {
    Reader T(R.raw("target"), "/target");
    T.num("a", c.target.a);
    T.num("e", c.target.e);
    T.num("inc", c.target.inc);
    T.num("raan", c.target.raan);
    T.num("argp", c.target.argp);
    T.num("M0", c.target.M0);
  }
  if (R.has("chaser")) {
    Reader C(R.raw("chaser"), "/chaser");
    C.vec("dr", c.chaser_offset.r);
    C.vec("dv", c.chaser_offset.v);
  }
  if (R.has("barriers")) {
    const json& arr = R.raw("barriers");
    if (!arr.is_array()) Reader::fail("/barriers must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "/barriers/" + std::to_string(i);
      Reader B(arr[i], path);
      BarrierSpec b;
      B.str("kind", b.kind);
      B.str("name", b.name);
      if (b.kind == "exclusion_zone") {
        B.num("R_o", b.R_o);
        B.str("relative_to", b.relative_to);
        if (b.relative_to != "target" && b.relative_to != "chaser")
          Reader::fail(path + "/relative_to must be 'target' or 'chaser'");
        B.str("frame", b.frame);
        if (b.frame != "inertial" && b.frame != "lvlh") Reader::fail(path + "/frame must be 'inertial' or 'lvlh'");
        B.num("epoch", b.epoch);
        B.vec("dr", b.dr);
        B.vec("dv", b.dv);
        if (!(b.R_o > 0.0)) Reader::fail(path + "/R_o must be positive");
      } else if (b.kind == "halfspace") {
        B.vec("p", b.p);
        B.num("rho_off", b.rho_off);
        B.num("gamma", b.gamma);
        if (std::abs(b.p.norm() - 1.0) > 1e-9) Reader::fail(path + "/p must be a unit vector");
      } else if (b.kind == "icosahedron") {
        B.num("radius", b.radius);
        B.num("gamma", b.gamma);
        if (!(b.radius > 0.0)) Reader::fail(path + "/radius must be positive");
      } else {
        Reader::fail(path + "/kind must be exclusion_zone, halfspace or icosahedron");
      }
      if (b.kind != "exclusion_zone" && !(b.gamma > 0.0)) Reader::fail(path + "/gamma must be positive");
      c.barriers.push_back(b);
    }
  }
  if (R.has("controller")) {
    Reader K(R.raw("controller"), "/controller");
    std::string s;
    if (K.has("policy")) {
      K.str("policy", s);
      c.ctl.policy = detail::enum_from<ImpulsePolicy>(
          s, {{"fuel_min", ImpulsePolicy::FuelMin}, {"always_actuate", ImpulsePolicy::AlwaysActuate}}, "policy");
    }
    if (K.has("bound")) {
      K.str("bound", s);
      c.ctl.bound = detail::enum_from<BoundForm>(
          s, {{"pointwise", BoundForm::Pointwise}, {"decoupled", BoundForm::Decoupled}}, "bound form");
    }
    if (K.has("on_infeasible")) {
      K.str("on_infeasible", s);
      c.ctl.on_infeasible = detail::enum_from<InfeasiblePolicy>(
          s, {{"abort", InfeasiblePolicy::Abort}, {"least_violating", InfeasiblePolicy::LeastViolating}},
          "infeasibility policy");
    }
    K.num("u_max", c.ctl.u_max);
    K.num("gamma", c.ctl.gamma);
    K.num("alpha_slope", c.ctl.alpha_slope);
    K.num("psi_grid", c.ctl.psi_grid);
    K.num("psi_grid_divisor", c.psi_grid_divisor);
    K.boolean("lookahead", c.ctl.lookahead);
    if (K.has("multistart")) {
      Reader M(K.raw("multistart"), "/controller/multistart");
      M.integer("directions", c.ctl.multistart_dirs);
      M.integer("magnitudes", c.ctl.multistart_mags);
    }
    if (K.has("nelder_mead")) {
      Reader M(K.raw("nelder_mead"), "/controller/nelder_mead");
      M.integer("iterations", c.ctl.nm_iters);
      M.num("tolerance", c.ctl.nm_tol);
    }
    K.num("relax_weight", c.ctl.relax_weight);
    K.boolean("fuel_refine", c.ctl.fuel_refine);
    K.boolean("extend_to_measurement", c.ctl.extend_to_measurement);
    if (!(c.ctl.u_max >= 0.0)) Reader::fail("/controller/u_max must be nonnegative");
    if (!(c.ctl.psi_grid > 0.0)) Reader::fail("/controller/psi_grid must be positive");
  }
  if (R.has("integrator")) {
    Reader I(R.raw("integrator"), "/integrator");
    I.num("truth_dt", c.integ.truth_dt);
    I.num("predict_tol", c.integ.predict_rtol);
    I.num("log_every", c.integ.log_every);
  }
  if (R.has("verifier")) {
    Reader V(R.raw("verifier"), "/verifier");
    V.integer("samples", c.verifier.samples);
    V.u64("seed", c.verifier.seed);
    V.num("pos_radius", c.verifier.pos_radius);
    V.num("vel_radius", c.verifier.vel_radius);
    V.str("reference", c.verifier_reference);
    V.num("t_span", c.verifier_t_span);
    if (c.verifier_reference != "target" && c.verifier_reference != "chaser")
      Reader::fail("/verifier/reference must be 'target' or 'chaser'");
    if (c.verifier.samples < 1) Reader::fail("/verifier/samples must be positive");
  }
  R.num("duration", c.duration);
  R.u64("seed", c.seed);

  if (!(c.mu > 0.0)) Reader::fail("/mu must be positive");
  if (!(c.domain.r_min > 0.0 && c.domain.r_min < c.domain.r_max)) Reader::fail("/domain needs 0 < r_min < r_max");
  if (c.db.w_c < 0.0 || c.db.w_g_slope < 0.0 || c.db.w_g_cap < 0.0)
    Reader::fail("/disturbances bounds must be nonnegative");
  if (c.lip.l_fr < 0.0 || c.lip.l_fv < 0.0) Reader::fail("/lipschitz constants must be nonnegative");
  if (c.meas.shrink_factor <= 0.0 || c.meas.shrink_factor > 1.0)
    Reader::fail("/measurement/shrink_factor must lie in (0, 1]");
  if (!(c.duration >= 0.0)) Reader::fail("/duration must be nonnegative");
  return c;
}

/// 1-based line of the first occurrence of a quoted key in the source text, or 0.
inline int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + pos, '\n'));
}

/// Parses scenario text; errors carry a line number when one can be located.
inline ScenarioConfig parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, std::string("config parse error: ") + e.what());
  }
  try {
    ScenarioConfig c = scenario_from_json(j);
    if (auto v = validate_timing(c.timing))
      throw Error(ErrorKind::kConfig, "/timing violates " + v->inequality + " (" + v->detail + ")");
    return c;
  } catch (const Error& e) {
    std::string msg = e.what();
    // The last path component (or quoted key) points at the offending entry.
    std::string key;
    if (const auto q = msg.find('\''); q != std::string::npos) {
      key = msg.substr(q + 1, msg.find('\'', q + 1) - q - 1);
    } else if (const auto s = msg.rfind('/'); s != std::string::npos) {
      key = msg.substr(s + 1, msg.find(' ', s) - s - 1);
    }
    const int line = key.empty() ? 0 : line_of_key(text, key);
    if (line > 0) msg = "line " + std::to_string(line) + ": " + msg;
    throw Error(e.kind(), msg);
  }
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kConfig, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

/// Applies an RFC 7386 merge patch to the serialized config and reparses it.
inline ScenarioConfig apply_overrides(const ScenarioConfig& c, const json& overrides) {
  if (overrides.is_null()) return c;
  json j = to_json(c);
  j.merge_patch(overrides);
  return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Geometry helpers

/// Outward unit normals of the 20 faces of a regular icosahedron (dodecahedron vertices).
inline std::vector<Vec3> icosahedron_face_normals() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  std::vector<Vec3> n;
  for (int i : {-1, 1})
    for (int j : {-1, 1})
      for (int k : {-1, 1}) n.emplace_back(i, j, k);
  for (int i : {-1, 1})
    for (int j : {-1, 1}) {
      n.emplace_back(0.0, i / phi, j * phi);
      n.emplace_back(i / phi, j * phi, 0.0);
      n.emplace_back(i * phi, 0.0, j / phi);
    }
  for (auto& v : n) v.normalize();
  return n;
}

/// Inradius over circumradius of the regular icosahedron.
inline double icosahedron_inradius_ratio() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  return phi * phi / std::sqrt(3.0) / std::sqrt(phi * std::sqrt(5.0));
}

// ---------------------------------------------------------------------------
// Materialization

inline KeplerOrbit target_orbit(const ScenarioConfig& c) {
  const auto& e = c.target;
  return KeplerOrbit::from_elements(e.a, e.e, e.inc, e.raan, e.argp, e.M0, c.t0, c.mu);
}

inline PlantState chaser_initial_state(const ScenarioConfig& c) {
  const PlantState tgt = target_orbit(c).at(c.t0);
  return {tgt.r + c.chaser_offset.r, tgt.v + c.chaser_offset.v};
}

/// The chaser's orbit if no input were ever applied.
inline KeplerOrbit chaser_nominal_orbit(const ScenarioConfig& c) {
  return KeplerOrbit(chaser_initial_state(c), c.t0, c.mu);
}

inline std::vector<BarrierFamily> build_families(const ScenarioConfig& c) {
  const KeplerOrbit tgt = target_orbit(c);
  const KeplerOrbit chs = chaser_nominal_orbit(c);
  std::vector<BarrierFamily> out;
  for (const auto& b : c.barriers) {
    if (b.kind == "exclusion_zone") {
      const KeplerOrbit& ref = b.relative_to == "target" ? tgt : chs;
      const PlantState x = ref.at(b.epoch);
      Vec3 dr = b.dr, dv = b.dv;
      if (b.frame == "lvlh") {
        // Rotating-frame offsets mapped to inertial ones: dv_in = Q dv + w x (Q dr).
        const Vec3 hvec = x.r.cross(x.v);
        Eigen::Matrix3d Q;
        Q.col(0) = x.r.normalized();
        Q.col(2) = hvec.normalized();
        Q.col(1) = Q.col(2).cross(Q.col(0));
        const Vec3 w = hvec / x.r.squaredNorm();
        dr = Q * b.dr;
        dv = Q * b.dv + w.cross(dr);
      }
      BarrierFamily f;
      f.kind = BarrierKind::ExclusionZone;
      f.center = KeplerOrbit({x.r + dr, x.v + dv}, b.epoch, c.mu);
      f.R_o = b.R_o;
      f.name = b.name;
      out.push_back(f);
    } else if (b.kind == "halfspace") {
      BarrierFamily f;
      f.kind = BarrierKind::Halfspace;
      f.center = tgt;
      f.p = b.p;
      f.rho_off = b.rho_off;
      f.gamma = b.gamma;
      f.name = b.name;
      out.push_back(f);
    } else {
      const auto normals = icosahedron_face_normals();
      for (std::size_t i = 0; i < normals.size(); ++i) {
        BarrierFamily f;
        f.kind = BarrierKind::Halfspace;
        f.center = tgt;
        f.p = normals[i];
        f.rho_off = b.radius * icosahedron_inradius_ratio();
        f.gamma = b.gamma;
        f.name = (b.name.empty() ? std::string("face") : b.name) + std::to_string(i);
        out.push_back(f);
      }
    }
  }
  return out;
}

inline ControlContext make_context(const ScenarioConfig& c) {
  ControlContext ctx;
  ctx.families = build_families(c);
  ctx.grav = {c.mu, c.domain.r_min};
  ctx.lip = c.lip;
  ctx.db = c.db;
  ctx.timing = c.timing;
  ctx.pred.rtol = c.integ.predict_rtol;
  ctx.ctl = c.ctl;
  if (c.psi_grid_divisor > 0.0) ctx.ctl.psi_grid = c.timing.T_M / c.psi_grid_divisor;
  ctx.mode = c.mode;
  ctx.dim = c.dim;
  return ctx;
}

inline VerifierDomain make_verifier_domain(const ScenarioConfig& c) {
  VerifierDomain d;
  d.reference = c.verifier_reference == "target" ? target_orbit(c) : chaser_nominal_orbit(c);
  d.t0 = c.t0;
  d.t_span = c.verifier_t_span > 0.0 ? c.verifier_t_span : d.reference.period();
  return d;
}

inline UncertaintyBound station_rho_max(const ScenarioConfig& c) { return {c.meas.rho_r, c.meas.rho_v}; }

/// Copy of the config with T_M replaced; T_L follows T_M when the interval is pinned.
inline ScenarioConfig with_T_M(ScenarioConfig c, double T_M) {
  if (c.meas.pin_interval || c.timing.T_L > T_M) c.timing.T_L = T_M;
  c.timing.T_M = T_M;
  return c;
}

/// Offline check at the config's own T_M, dispatched on the actuation mode.
inline VerifyReport verify_scenario(const ScenarioConfig& c, std::optional<int> samples = std::nullopt,
                                    std::optional<UncertaintyBound> rho_cap = std::nullopt) {
  if (auto v = validate_timing(c.timing)) throw Error(ErrorKind::kConfig, "timing violates " + v->inequality);
  const ControlContext ctx = make_context(c);
  VerifierSampling smp = c.verifier;
  if (samples) smp.samples = *samples;
  if (rho_cap) smp.rho_cap = rho_cap;
  const VerifierDomain dom = make_verifier_domain(c);
  return c.mode == ActuationMode::Impulsive ? verify_rit_cbf(ctx, station_rho_max(c), dom, smp)
                                            : verify_rt_cbf(ctx, station_rho_max(c), dom, smp);
}

/// Tube bound the verifier samples under at a given T_M.
inline UncertaintyBound verifier_bound(const ScenarioConfig& c) {
  const ControlContext ctx = make_context(c);
  return c.mode == ActuationMode::Impulsive
             ? pre_actuation_bound_impulsive(ctx.timing, ctx.lip, ctx.db.w_c, ctx.W_g(), station_rho_max(c))
             : pre_actuation_bound_continuous(ctx.timing, ctx.lip, ctx.db.w_c, ctx.W_g(), station_rho_max(c));
}

/// Every probe draws its error radii from the box under the upper bracket's bound, so a sample
/// admitted at some T_M is admitted at every larger one.
inline HorizonResult max_horizon(const ScenarioConfig& c, double lo, double hi, double tol,
                                 std::optional<int> samples = std::nullopt) {
  const UncertaintyBound cap = verifier_bound(with_T_M(c, hi));
  return max_horizon([&](double T) { return verify_scenario(with_T_M(c, T), samples, cap); }, lo, hi, tol);
}

// ---------------------------------------------------------------------------
// Case-study builders

/// Impulsive rendezvous near a 7775 km, e = 0.1 orbit with seven moving exclusion zones.
inline ScenarioConfig build_rendezvous_scenario(double T_M = 300.0, const json& overrides = nullptr) {
  ScenarioConfig c;
  c.name = "rendezvous";
  c.mode = ActuationMode::Impulsive;
  c.dim = 2;
  c.target = {7.775e6, 0.1, 0.0, 0.0, 0.0, 0.0};
  c.timing = {10.0, 120.0, 30.0, T_M, T_M};
  c.domain = {6.9e6, 8.7e6, 8.0e3};
  c.db = {9.2e-6, 0.05, 5.0};
  c.lip = {shell_lipschitz(kMuEarth, c.domain.r_min), 0.0};
  c.meas = {0.01, 1e-4, 1.0, true};
  c.chaser_offset = {Vec3(0.0, -1500.0, 0.0), Vec3(0.0, 0.5, 0.0)};
  // Zone k starts co-rotating at a radial offset from the uncontrolled chaser at its epoch; the
  // period mismatch makes it drift along-track through the chaser around that epoch.
  const std::array<std::array<double, 2>, 7> zones = {{
      {150.0, 1600.0}, {-100.0, 2300.0}, {60.0, 3000.0}, {-140.0, 3700.0},
      {120.0, 4400.0}, {-80.0, 5100.0}, {100.0, 5800.0},
  }};
  for (int k = 0; k < 7; ++k) {
    BarrierSpec b;
    b.kind = "exclusion_zone";
    b.name = "zone" + std::to_string(k);
    b.R_o = 200.0;
    b.relative_to = "chaser";
    b.frame = "lvlh";
    b.epoch = zones[k][1];
    b.dr = Vec3(zones[k][0], 0.0, 0.0);
    b.dv = Vec3::Zero();
    c.barriers.push_back(b);
  }
  c.ctl.policy = ImpulsePolicy::FuelMin;
  c.ctl.extend_to_measurement = true;
  c.ctl.u_max = 2.0;
  c.ctl.gamma = 1.0;
  c.psi_grid_divisor = 12.0;
  c.integ = {0.0, 1e-10, 10.0};
  c.verifier = {4096, 0, 600.0, 0.3, std::nullopt};
  c.verifier_reference = "chaser";
  c.verifier_t_span = 6800.0;
  c.duration = 6800.0;
  c.seed = 1;
  return apply_overrides(c, overrides);
}

/// Continuous GEO stationkeeping inside a 10 km icosahedron around a virtual target.
inline ScenarioConfig build_stationkeeping_scenario(double T_M = 41040.0, const json& overrides = nullptr) {
  ScenarioConfig c;
  c.name = "stationkeeping";
  c.mode = ActuationMode::Continuous;
  c.dim = 3;
  c.target = {42164.0e3, 0.0, 0.0, 0.0, 0.0, 0.0};
  c.timing = {10.0, 10.0, 0.0, T_M, T_M};
  c.domain = {42144.0e3, 42184.0e3, 3.1e3};
  c.db = {4.56e-6, 0.02, 5e-5};
  c.lip = {shell_lipschitz(kMuEarth, c.domain.r_min), 0.0};
  c.meas = {5.0, 0.005, 1.0, true};
  c.chaser_offset = {Vec3(1000.0, 0.0, 0.0), Vec3(0.0, 0.0, 0.0)};
  BarrierSpec b;
  b.kind = "icosahedron";
  b.name = "face";
  b.radius = 10.0e3;
  b.gamma = 120.0;
  c.barriers.push_back(b);
  c.ctl.u_max = 5e-3;
  c.ctl.gamma = 120.0;
  c.ctl.alpha_slope = 0.004;
  c.ctl.on_infeasible = InfeasiblePolicy::LeastViolating;
  c.psi_grid_divisor = 0.0;
  c.integ = {0.0, 1e-10, 600.0};
  c.verifier = {4096, 0, 8.0e3, 0.05, std::nullopt};
  c.verifier_reference = "target";
  c.verifier_t_span = 0.0;
  c.duration = T_M;
  c.seed = 1;
  return apply_overrides(c, overrides);
}

}  // namespace ritcbf
