#pragma once

// Barrier families, the worst-case bound h_hat, and certified upper bounds on
// the barrier along a predicted path (with or without the error tube added).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ritcbf/dynamics.hpp"
#include "ritcbf/observer.hpp"
#include "ritcbf/uncertainty.hpp"

namespace ritcbf {

enum class BarrierKind { ExclusionZone, Halfspace };

/// h <= 0 is safe. ExclusionZone: h = R_o - |r - c(t)|. Halfspace relative to a reference
/// orbit c(t): h = p.(r - c) - rho_off + gamma p.(v - c').
struct BarrierFamily {
  BarrierKind kind = BarrierKind::ExclusionZone;
  KeplerOrbit center;
  double R_o = 0.0;
  Vec3 p = Vec3::UnitX();
  double rho_off = 0.0;
  double gamma = 0.0;
  std::string name;
};

struct BarrierEval {
  double h = 0.0;
  Vec3 grad_r = Vec3::Zero();
  Vec3 grad_v = Vec3::Zero();
  double dh_dt_explicit = 0.0;
};

struct LipschitzProfile {
  double l_hr = 0.0;
  double l_hv = 0.0;
};

/// Barrier at state x given the center state c = center(t) already evaluated.
inline BarrierEval h_eval_at(const BarrierFamily& f, const PlantState& c, const PlantState& x,
                             const GravityModel& g) {
  BarrierEval e;
  if (f.kind == BarrierKind::ExclusionZone) {
    const Vec3 d = x.r - c.r;
    const double n = d.norm();
    if (n == 0.0) throw Error(ErrorKind::kSingularity, "state at exclusion-zone center " + f.name);
    e.h = f.R_o - n;
    e.grad_r = -d / n;
    e.dh_dt_explicit = d.dot(c.v) / n;
  } else {
    e.h = f.p.dot(x.r - c.r) - f.rho_off + f.gamma * f.p.dot(x.v - c.v);
    e.grad_r = f.p;
    e.grad_v = f.gamma * f.p;
    e.dh_dt_explicit = -f.p.dot(c.v) - f.gamma * f.p.dot(g.accel(c.r));
  }
  return e;
}

inline BarrierEval h_eval(const BarrierFamily& f, double t, const PlantState& x, const GravityModel& g) {
  return h_eval_at(f, f.center.at(t), x, g);
}

inline LipschitzProfile lipschitz(const BarrierFamily& f) {
  return f.kind == BarrierKind::ExclusionZone ? LipschitzProfile{1.0, 0.0}
                                               : LipschitzProfile{1.0, f.gamma};
}

/// Constant profiles: the max over any interval is the pointwise profile.
inline LipschitzProfile lip_along_traj(const BarrierFamily& f, double /*tau*/, double /*t*/) {
  return lipschitz(f);
}

inline double h_hat(const BarrierFamily& f, double t, const EstimateState& est, const GravityModel& g) {
  const auto l = lipschitz(f);
  return h_eval(f, t, est.x_hat, g).h + l.l_hr * est.rho_hat.rho_r + l.l_hv * est.rho_hat.rho_v;
}

/// Nominal prediction sampled on a uniform grid over [t, tau] with cells no wider than grid.
struct PredictedPath {
  std::vector<double> s;
  std::vector<PlantState> x;
  Vec3 a_const = Vec3::Zero();
  double t0() const { return s.front(); }
  double t1() const { return s.back(); }
};

inline PredictedPath predict_grid(double t, double tau, const PlantState& x_hat, double grid,
                                  const GravityModel& g, const PredictOptions& opt = {},
                                  const Vec3& a_const = Vec3::Zero()) {
  PredictedPath P;
  P.a_const = a_const;
  const double span = tau - t;
  const int cells = span > 0.0 ? std::max(1, static_cast<int>(std::ceil(span / grid - 1e-12))) : 0;
  P.s.reserve(cells + 1);
  for (int k = 0; k <= cells; ++k) P.s.push_back(k == cells ? tau : t + span * k / cells);
  P.x = predict_path(P.s, t, x_hat, g, opt, a_const);
  return P;
}

namespace detail {

// Value and slope of h along the nominal path at one node.
struct HNode {
  double h, hdot;
};

inline HNode h_node(const BarrierFamily& f, double s, const PlantState& x, const Vec3& a_const,
                    const GravityModel& g) {
  const BarrierEval e = h_eval(f, s, x, g);
  const Vec3 acc = g.accel(x.r) + a_const;
  return {e.h, e.dh_dt_explicit + e.grad_r.dot(x.v) + e.grad_v.dot(acc)};
}

// Upper bound on d^2/ds^2 h along the path over a cell of width w starting at x.
inline double h_curvature_bound(const BarrierFamily& f, double s, const PlantState& x, double w,
                                const Vec3& a_const, const GravityModel& g) {
  const PlantState c = f.center.at(s);
  const double lt = shell_lipschitz(g.mu, g.r_min);
  const double an = a_const.norm();
  const UncertaintyBound rel0{(x.r - c.r).norm(), (x.v - c.v).norm()};
  const UncertaintyBound rel = propagate_q(w, rel0, {lt, 0.0}, an);  // sup over the cell
  const double acc_rel = lt * rel.rho_r + an;
  if (f.kind == BarrierKind::ExclusionZone) return acc_rel;
  const double rmin = g.r_min;
  const double vc = c.v.norm() + g.mu / (rmin * rmin) * w;
  const double jerk = lt * rel.rho_v + 24.0 * g.mu / (rmin * rmin * rmin * rmin) * rel.rho_r * vc;
  return acc_rel + f.gamma * jerk;
}

}  // namespace detail

/// Certified upper bound on sup over s in the path of h(s, p(s)) + l.q(s - t0, rho), where q is
/// the error tube driven by input w. With rho = 0 and w = 0 this is a bound on the barrier alone.
inline double tube_bound(const BarrierFamily& f, const PredictedPath& P, const UncertaintyBound& rho,
                         const LipschitzPair& lip, double w, const GravityModel& g,
                         double pad_rtol = 1e-9) {
  const auto l = lipschitz(f);
  const double t0 = P.t0();
  auto lq = [&](double s) {
    const auto q = propagate_q(s - t0, rho, lip, w);
    return l.l_hr * q.rho_r + l.l_hv * q.rho_v;
  };
  const PlantState& x0 = P.x.front();
  const double pad = pad_rtol * (l.l_hr * x0.r.norm() + l.l_hv * x0.v.norm());
  auto n0 = detail::h_node(f, P.s[0], P.x[0], P.a_const, g);
  double best = n0.h + lq(P.s[0]);
  for (std::size_t k = 0; k + 1 < P.s.size(); ++k) {
    const double w_cell = P.s[k + 1] - P.s[k];
    const auto n1 = detail::h_node(f, P.s[k + 1], P.x[k + 1], P.a_const, g);
    const double M = detail::h_curvature_bound(f, P.s[k], P.x[k], w_cell, P.a_const, g);
    // Quadratic envelopes from the left and right nodes; split where they cross.
    const double alpha = n0.h - n1.h + n1.hdot * w_cell - 0.5 * M * w_cell * w_cell;
    const double beta = n0.hdot - n1.hdot + M * w_cell;
    double ts = beta != 0.0 ? -alpha / beta : 0.5 * w_cell;
    ts = std::clamp(std::isfinite(ts) ? ts : 0.5 * w_cell, 0.0, w_cell);
    const double L = n0.h + n0.hdot * ts + 0.5 * M * ts * ts;
    const double R = n1.h - n1.hdot * (w_cell - ts) + 0.5 * M * (w_cell - ts) * (w_cell - ts);
    const double q_split = lq(P.s[k] + ts);
    best = std::max({best, std::max(L, R) + q_split, n1.h + lq(P.s[k + 1])});
    n0 = n1;
  }
  return best + pad;
}

/// psi_h: certified bound on the barrier along the nominal path.
inline double psi_h(const BarrierFamily& f, const PredictedPath& P, const GravityModel& g) {
  return tube_bound(f, P, {0.0, 0.0}, {0.0, 0.0}, 0.0, g);
}

inline double psi_h(const BarrierFamily& f, double tau, double t, const PlantState& x_hat,
                    double grid, const GravityModel& g, const PredictOptions& opt = {}) {
  return psi_h(f, predict_grid(t, tau, x_hat, grid, g, opt), g);
}

/// Separated form psi_h(tau) + l.q(tau - t): the barrier bound and the end-of-horizon tube.
inline double decoupled_bound(const BarrierFamily& f, const PredictedPath& P,
                              const UncertaintyBound& rho, const LipschitzPair& lip, double w,
                              const GravityModel& g) {
  const auto l = lipschitz(f);
  const auto q = propagate_q(P.t1() - P.t0(), rho, lip, w);
  return psi_h(f, P, g) + l.l_hr * q.rho_r + l.l_hv * q.rho_v;
}

}  // namespace ritcbf
