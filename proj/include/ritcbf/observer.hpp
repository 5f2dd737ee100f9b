#pragma once

// Open-loop observer: nominal propagation of the estimate with a worst-case
// error tube, impulse updates, filtered measurement resets, and a simulated
// ground station.

#include <random>

#include "ritcbf/dynamics.hpp"
#include "ritcbf/uncertainty.hpp"

namespace ritcbf {

enum class ActuationMode { Impulsive, Continuous };

struct EstimateState {
  PlantState x_hat;
  UncertaintyBound rho_hat;
};

struct Measurement {
  PlantState x_bar;
  UncertaintyBound rho_bar;
  double sigma_m_next = 0.0;
};

/// True when the truth lies in the estimate's balls.
inline bool contains_truth(const EstimateState& est, const PlantState& x) {
  return (x.r - est.x_hat.r).norm() <= est.rho_hat.rho_r &&
         (x.v - est.x_hat.v).norm() <= est.rho_hat.rho_v;
}

/// Flow over dt. In continuous mode u is held constant and adds w_g(|u|) to the tube input.
inline EstimateState observer_flow_step(const EstimateState& est, double t, double dt,
                                        const LipschitzPair& lip, const DisturbanceBounds& db,
                                        ActuationMode mode, const Vec3& u_cont,
                                        const GravityModel& g, const PredictOptions& opt = {}) {
  const bool cont = mode == ActuationMode::Continuous;
  const Vec3 a = cont ? u_cont : Vec3::Zero();
  const double w = db.w_c + (cont ? db.w_g(u_cont.norm()) : 0.0);
  EstimateState out;
  out.x_hat = integrate_rk45(est.x_hat, t, t + dt, a, g, opt);
  out.rho_hat = propagate_q(dt, est.rho_hat, lip, w);
  return out;
}

inline EstimateState observer_actuation_jump(const EstimateState& est, const Vec3& u,
                                             const DisturbanceBounds& db) {
  EstimateState out = est;
  out.x_hat.v += u;
  out.rho_hat.rho_v += db.w_g(u.norm());
  return out;
}

/// Containment of the measurement balls inside the prior estimate balls.
inline bool measurement_contained(const EstimateState& pre, const Measurement& m) {
  return (m.x_bar.r - pre.x_hat.r).norm() + m.rho_bar.rho_r <= pre.rho_hat.rho_r &&
         (m.x_bar.v - pre.x_hat.v).norm() + m.rho_bar.rho_v <= pre.rho_hat.rho_v;
}

struct MeasurementUpdate {
  EstimateState est;
  bool accepted = false;
};

/// Accepts the measurement only when it refines the prior; otherwise keeps the prior.
inline MeasurementUpdate observer_measurement_jump(const EstimateState& pre, const Measurement& m) {
  if (measurement_contained(pre, m)) return {{m.x_bar, m.rho_bar}, true};
  return {pre, false};
}

/// Simulated station: uniform-in-ball noise of radius 0.9 rho_bar around the truth. When a
/// prior is supplied the reported radii are halved until the packet refines it.
class GroundStation {
 public:
  GroundStation(UncertaintyBound rho_max, double shrink_factor, int dim, std::uint64_t seed)
      : rho_max_(rho_max), shrink_(shrink_factor), dim_(dim), rng_(seed) {}

  Measurement measure(const PlantState& truth, const EstimateState* prior, double sigma_next) {
    UncertaintyBound rb{shrink_ * rho_max_.rho_r, shrink_ * rho_max_.rho_v};
    Measurement m;
    for (int attempt = 0; attempt <= kMaxHalvings; ++attempt) {
      m.x_bar.r = truth.r + ball(0.9 * rb.rho_r);
      m.x_bar.v = truth.v + ball(0.9 * rb.rho_v);
      m.rho_bar = rb;
      m.sigma_m_next = sigma_next;
      if (!prior || measurement_contained(*prior, m)) break;
      rb.rho_r *= 0.5;
      rb.rho_v *= 0.5;
    }
    return m;
  }

  static constexpr int kMaxHalvings = 30;

 private:
  Vec3 ball(double radius) {
    if (radius <= 0.0) return Vec3::Zero();
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double s = std::pow(U(rng_), 1.0 / dim_);
    return radius * s * random_unit(rng_, dim_);
  }

  UncertaintyBound rho_max_;
  double shrink_;
  int dim_;
  std::mt19937_64 rng_;
};

}  // namespace ritcbf
