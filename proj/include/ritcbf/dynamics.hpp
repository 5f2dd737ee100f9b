#pragma once

// Truth and nominal two-body dynamics, Kepler propagation of reference orbits,
// bounded disturbance generators, and the prediction function p.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ritcbf/core.hpp"
#include "ritcbf/uncertainty.hpp"

namespace ritcbf {

using Vec3 = Eigen::Vector3d;

inline constexpr double kMuEarth = 3.986004418e14;

struct PlantState {
  Vec3 r = Vec3::Zero();
  Vec3 v = Vec3::Zero();

  friend PlantState operator+(const PlantState& a, const PlantState& b) { return {a.r + b.r, a.v + b.v}; }
  friend PlantState operator*(double s, const PlantState& a) { return {s * a.r, s * a.v}; }
};

struct StateDomain {
  double r_min = 6.6e6;
  double r_max = 5e7;
  double v_max = 1e4;
};

/// -mu r / |r|^3; throws when r leaves the shell from below.
inline Vec3 nominal_accel(const Vec3& r, double mu, double r_min) {
  const double n = r.norm();
  if (!(n >= r_min))
    throw Error(ErrorKind::kSingularity,
                "position norm " + std::to_string(n) + " below r_min " + std::to_string(r_min));
  return -mu / (n * n * n) * r;
}

/// Lipschitz constant of the inverse-square field over |r| >= r_min.
inline double shell_lipschitz(double mu, double r_min) { return 2.0 * mu / (r_min * r_min * r_min); }

/// Two-body orbit anchored at an epoch state; evaluated in closed form.
class KeplerOrbit {
 public:
  KeplerOrbit() = default;
  KeplerOrbit(const PlantState& x0, double t0, double mu) : r0_(x0.r), v0_(x0.v), t0_(t0), mu_(mu) {
    const double rn = r0_.norm();
    a_ = 1.0 / (2.0 / rn - v0_.squaredNorm() / mu_);
    if (!(a_ > 0.0)) throw Error(ErrorKind::kConfig, "reference orbit is not elliptic");
    n_ = std::sqrt(mu_ / (a_ * a_ * a_));
    ecosE0_ = 1.0 - rn / a_;
    esinE0_ = r0_.dot(v0_) / std::sqrt(mu_ * a_);
  }

  /// Builds the orbit from classical elements (mean anomaly M0 at epoch t0).
  static KeplerOrbit from_elements(double a, double e, double inc, double raan, double argp,
                                   double M0, double t0, double mu) {
    double E = e < 0.8 ? M0 : M_PI;
    for (int i = 0; i < 100; ++i) {
      const double dE = (E - e * std::sin(E) - M0) / (1.0 - e * std::cos(E));
      E -= dE;
      if (std::abs(dE) < 1e-15) break;
    }
    const double b = a * std::sqrt(1.0 - e * e);
    const double n = std::sqrt(mu / (a * a * a));
    const double Ed = n / (1.0 - e * std::cos(E));
    const Vec3 rp(a * (std::cos(E) - e), b * std::sin(E), 0.0);
    const Vec3 vp(-a * std::sin(E) * Ed, b * std::cos(E) * Ed, 0.0);
    const Eigen::Matrix3d R = (Eigen::AngleAxisd(raan, Vec3::UnitZ()) *
                               Eigen::AngleAxisd(inc, Vec3::UnitX()) *
                               Eigen::AngleAxisd(argp, Vec3::UnitZ()))
                                  .toRotationMatrix();
    return KeplerOrbit({R * rp, R * vp}, t0, mu);
  }

  PlantState at(double t) const {
    double dt = t - t0_;
    double dM = n_ * dt;
    const double k = std::floor(dM / (2.0 * M_PI));
    dM -= 2.0 * M_PI * k;
    dt -= 2.0 * M_PI * k / n_;
    // Kepler's equation in the eccentric-anomaly increment.
    double dE = dM;
    for (int i = 0; i < 60; ++i) {
      const double s = std::sin(dE), c = std::cos(dE);
      const double F = dE - ecosE0_ * s + esinE0_ * (1.0 - c) - dM;
      const double dF = 1.0 - ecosE0_ * c + esinE0_ * s;
      const double step = F / dF;
      dE -= step;
      if (std::abs(step) < 1e-15) break;
    }
    const double s = std::sin(dE), c = std::cos(dE);
    const double rn0 = r0_.norm();
    const double f = 1.0 - a_ / rn0 * (1.0 - c);
    const double g = dt - (dE - s) / n_;
    const Vec3 r = f * r0_ + g * v0_;
    const double rn = a_ * (1.0 - ecosE0_ * c + esinE0_ * s);
    const double fd = -std::sqrt(mu_ * a_) * s / (rn * rn0);
    const double gd = 1.0 - a_ / rn * (1.0 - c);
    return {r, fd * r0_ + gd * v0_};
  }

  double semi_major_axis() const { return a_; }
  double period() const { return 2.0 * M_PI / n_; }
  double mean_motion() const { return n_; }
  PlantState epoch_state() const { return {r0_, v0_}; }
  double epoch() const { return t0_; }

 private:
  Vec3 r0_ = Vec3::Zero(), v0_ = Vec3::Zero();
  double t0_ = 0.0, mu_ = kMuEarth;
  double a_ = 1.0, n_ = 1.0, ecosE0_ = 0.0, esinE0_ = 0.0;
};

// ---------------------------------------------------------------------------
// Disturbances

enum class DisturbanceMode { None, RandomBall, WorstCaseRadial, FixedDirection };

inline DisturbanceMode disturbance_mode_from_string(const std::string& s) {
  if (s == "none") return DisturbanceMode::None;
  if (s == "random_ball") return DisturbanceMode::RandomBall;
  if (s == "worst_case_radial") return DisturbanceMode::WorstCaseRadial;
  if (s == "fixed_direction") return DisturbanceMode::FixedDirection;
  throw Error(ErrorKind::kConfig, "unknown disturbance mode '" + s + "'");
}

inline std::string to_string(DisturbanceMode m) {
  switch (m) {
    case DisturbanceMode::None: return "none";
    case DisturbanceMode::RandomBall: return "random_ball";
    case DisturbanceMode::WorstCaseRadial: return "worst_case_radial";
    case DisturbanceMode::FixedDirection: return "fixed_direction";
  }
  return "?";
}

/// Unit vector uniform on the sphere (n = 3) or on the circle in the xy plane (n = 2).
template <class Rng>
Vec3 random_unit(Rng& rng, int n) {
  std::normal_distribution<double> N(0.0, 1.0);
  Vec3 d(N(rng), N(rng), n == 3 ? N(rng) : 0.0);
  const double s = d.norm();
  return s > 0.0 ? Vec3(d / s) : Vec3::UnitX();
}

/// Realizes bounded disturbances. Not thread-safe; one instance per run.
class DisturbanceGenerator {
 public:
  DisturbanceGenerator(DisturbanceMode mode, std::uint64_t seed, int dim,
                       Vec3 fixed_direction = Vec3::UnitX())
      : mode_(mode), rng_(seed), dim_(dim), fixed_(fixed_direction.normalized()) {}

  /// Direction that increases the currently most active barrier; used by the worst-case mode.
  void set_push_direction(const Vec3& d) {
    const double n = d.norm();
    push_ = n > 0.0 ? Vec3(d / n) : Vec3::Zero();
  }

  /// Flow disturbance with |d| <= radius.
  Vec3 flow(double radius) { return draw(radius); }
  /// Impulse disturbance with |d| <= radius.
  Vec3 impulse(double radius) { return draw(radius); }

  DisturbanceMode mode() const { return mode_; }

 private:
  Vec3 draw(double radius) {
    if (radius <= 0.0) return Vec3::Zero();
    switch (mode_) {
      case DisturbanceMode::None: return Vec3::Zero();
      case DisturbanceMode::RandomBall: {
        std::uniform_real_distribution<double> mag(0.9, 1.0);
        return radius * mag(rng_) * random_unit(rng_, dim_);
      }
      case DisturbanceMode::WorstCaseRadial:
        return push_.squaredNorm() > 0.0 ? Vec3(radius * push_) : Vec3(radius * random_unit(rng_, dim_));
      case DisturbanceMode::FixedDirection: return radius * fixed_;
    }
    return Vec3::Zero();
  }

  DisturbanceMode mode_;
  std::mt19937_64 rng_;
  int dim_;
  Vec3 fixed_;
  Vec3 push_ = Vec3::Zero();
};

// ---------------------------------------------------------------------------
// Integration

struct GravityModel {
  double mu = kMuEarth;
  double r_min = 6.6e6;
  Vec3 accel(const Vec3& r) const { return nominal_accel(r, mu, r_min); }
};

/// One RK4 step of r' = v, v' = f(r) + a_const, where a_const collects the disturbance and
/// any continuous input held over the step.
inline PlantState rk4_step(const PlantState& x, const Vec3& a_const, double dt, const GravityModel& g) {
  if (!(dt > 0.0)) throw Error(ErrorKind::kStepSize, "non-positive step " + std::to_string(dt));
  auto rhs = [&](const PlantState& y) { return PlantState{y.v, g.accel(y.r) + a_const}; };
  const PlantState k1 = rhs(x);
  const PlantState k2 = rhs(x + (0.5 * dt) * k1);
  const PlantState k3 = rhs(x + (0.5 * dt) * k2);
  const PlantState k4 = rhs(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Truth flow step with the disturbance held constant over the step. Returns the realized
/// disturbance through d_out when non-null.
inline PlantState true_flow_step(const PlantState& x, const Vec3& u_cont, double w_total,
                                 DisturbanceGenerator& dist, double dt, const GravityModel& g,
                                 Vec3* d_out = nullptr) {
  const Vec3 d = dist.flow(w_total);
  if (d_out) *d_out = d;
  return rk4_step(x, u_cont + d, dt, g);
}

/// Impulsive velocity change with a bounded actuation error.
inline PlantState apply_impulse(const PlantState& x, const Vec3& u, const DisturbanceBounds& db,
                                double u_max, DisturbanceGenerator& dist) {
  if (u.norm() > u_max * (1.0 + 1e-12))
    throw Error(ErrorKind::kActuationLimit,
                "impulse norm " + std::to_string(u.norm()) + " exceeds " + std::to_string(u_max));
  PlantState y = x;
  y.v = x.v + u + dist.impulse(db.w_g(u.norm()));
  return y;
}

// Dormand-Prince 5(4) coefficients.
namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                        b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

struct PredictOptions {
  double rtol = 1e-10;
  double atol_r = 1e-6;  // meters
  double atol_v = 1e-9;  // meters per second
  int max_steps = 200000;
};

/// Adaptive RK45 from (t0, x0) to t1 under r' = v, v' = f(r) + a_const. Reentrant.
inline PlantState integrate_rk45(const PlantState& x0, double t0, double t1, const Vec3& a_const,
                                 const GravityModel& g, const PredictOptions& opt = {},
                                 double* h_hint = nullptr) {
  if (t1 < t0) throw Error(ErrorKind::kStepSize, "prediction backwards in time");
  if (t1 == t0) return x0;
  auto rhs = [&](const PlantState& y) { return PlantState{y.v, g.accel(y.r) + a_const}; };
  using namespace dp;
  PlantState x = x0;
  double t = t0;
  double h = (h_hint && *h_hint > 0.0) ? *h_hint : std::min(t1 - t0, 10.0);
  PlantState k1 = rhs(x);
  for (int step = 0; step < opt.max_steps; ++step) {
    const bool last = t + h >= t1;
    const double hh = last ? t1 - t : h;
    const PlantState k2 = rhs(x + hh * (a21 * k1));
    const PlantState k3 = rhs(x + hh * (a31 * k1 + a32 * k2));
    const PlantState k4 = rhs(x + hh * (a41 * k1 + a42 * k2 + a43 * k3));
    const PlantState k5 = rhs(x + hh * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const PlantState k6 = rhs(x + hh * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const PlantState y = x + hh * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const PlantState k7 = rhs(y);
    const PlantState err = hh * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double sr = opt.atol_r + opt.rtol * std::max(std::abs(x.r(i)), std::abs(y.r(i)));
      const double sv = opt.atol_v + opt.rtol * std::max(std::abs(x.v(i)), std::abs(y.v(i)));
      en = std::max({en, std::abs(err.r(i)) / sr, std::abs(err.v(i)) / sv});
    }
    if (en <= 1.0) {
      t = last ? t1 : t + hh;
      x = y;
      k1 = k7;
      if (last) {
        if (h_hint) *h_hint = h;
        return x;
      }
    }
    const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h = hh * fac;
    if (h < 1e-9) throw Error(ErrorKind::kStepSize, "prediction step size underflow");
  }
  throw Error(ErrorKind::kIterationLimit, "prediction exceeded the step budget");
}

/// p(tau, t, x_hat): nominal prediction without jumps.
inline PlantState predict_p(double tau, double t, const PlantState& x_hat, const GravityModel& g,
                            const PredictOptions& opt = {}) {
  return integrate_rk45(x_hat, t, tau, Vec3::Zero(), g, opt);
}

/// Prediction sampled at increasing times (first entry may equal t).
inline std::vector<PlantState> predict_path(const std::vector<double>& times, double t,
                                            const PlantState& x_hat, const GravityModel& g,
                                            const PredictOptions& opt = {},
                                            const Vec3& a_const = Vec3::Zero()) {
  std::vector<PlantState> out;
  out.reserve(times.size());
  PlantState x = x_hat;
  double tc = t;
  double hint = 0.0;
  for (double s : times) {
    x = integrate_rk45(x, tc, s, a_const, g, opt, &hint);
    tc = s;
    out.push_back(x);
  }
  return out;
}

}  // namespace ritcbf
