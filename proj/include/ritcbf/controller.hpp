#pragma once

// Online safety filters: coast-or-impulse decisions for impulsive actuation and
// the min-norm QP filter for continuous actuation.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ritcbf/cbf.hpp"
#include "ritcbf/core.hpp"
#include "ritcbf/qp.hpp"

namespace ritcbf {

enum class ImpulsePolicy { FuelMin, AlwaysActuate };
enum class BoundForm { Pointwise, Decoupled };
enum class InfeasiblePolicy { Abort, LeastViolating };

struct ControllerConfig {
  ImpulsePolicy policy = ImpulsePolicy::FuelMin;
  BoundForm bound = BoundForm::Pointwise;
  InfeasiblePolicy on_infeasible = InfeasiblePolicy::Abort;
  double u_max = 1.0;       // impulse ball radius (m/s) or per-axis box (m/s^2)
  double gamma = 1.0;       // recorded for reports; halfspace families carry their own
  double alpha_slope = 0.0;
  double psi_grid = 25.0;   // seconds
  bool lookahead = true;
  int multistart_dirs = 26;
  int multistart_mags = 5;
  int nm_iters = 200;
  double nm_tol = 1e-6;     // relative to u_max
  double relax_weight = 1e6;
  bool fuel_refine = true;  // shrink a certified impulse to the smallest certified scaling
  bool extend_to_measurement = false;
};

struct ControlContext {
  std::vector<BarrierFamily> families;
  GravityModel grav;
  LipschitzPair lip;
  DisturbanceBounds db;
  TimingConfig timing;
  PredictOptions pred;
  ControllerConfig ctl;
  ActuationMode mode = ActuationMode::Impulsive;
  int dim = 3;

  /// Sup of w_g over the admissible inputs.
  double W_g() const {
    const double sup = mode == ActuationMode::Impulsive ? ctl.u_max : std::sqrt(double(dim)) * ctl.u_max;
    return db.W_g(sup);
  }
};

struct HorizonCheck {
  double margin = -std::numeric_limits<double>::infinity();
  int family = -1;
};

/// Max over families of the configured bound on h + l.q over [t, t + horizon].
inline HorizonCheck horizon_margin(const ControlContext& ctx, const EstimateState& est, double t,
                                   double horizon) {
  const PredictedPath P = predict_grid(t, t + horizon, est.x_hat, ctx.ctl.psi_grid, ctx.grav, ctx.pred);
  HorizonCheck out;
  for (std::size_t i = 0; i < ctx.families.size(); ++i) {
    const auto& f = ctx.families[i];
    const double v = ctx.ctl.bound == BoundForm::Pointwise
                         ? tube_bound(f, P, est.rho_hat, ctx.lip, ctx.db.w_c, ctx.grav)
                         : decoupled_bound(f, P, est.rho_hat, ctx.lip, ctx.db.w_c, ctx.grav);
    if (v > out.margin) {
      out.margin = v;
      out.family = static_cast<int>(i);
    }
  }
  return out;
}

struct CoastCheck {
  bool feasible = false;
  double margin = 0.0;
  double horizon = 0.0;
  std::string reason;
};

inline CoastCheck coast_feasible(const ControlContext& ctx, const EstimateState& est, double t,
                                 double horizon) {
  CoastCheck c;
  c.horizon = horizon;
  try {
    c.margin = horizon_margin(ctx, est, t, horizon).margin;
    c.feasible = c.margin <= 0.0;
  } catch (const Error& e) {
    c.feasible = false;
    c.margin = std::numeric_limits<double>::infinity();
    c.reason = e.what();
  }
  return c;
}

inline CoastCheck coast_feasible(const ControlContext& ctx, const EstimateState& est, double t,
                                 const Timers& sigma) {
  return coast_feasible(ctx, est, t, horizon_delta1(sigma.sigma_m, ctx.timing));
}

struct ImpulsiveDecision {
  bool b = false;
  Vec3 u = Vec3::Zero();
  double margin = 0.0;   // coast or impulse bound at the returned choice
  double horizon = 0.0;
  bool feasible = true;
  int evaluations = 0;
};

/// Impulse objective: bound after applying u at t over the post-impulse horizon.
inline double impulse_objective(const ControlContext& ctx, const EstimateState& est, double t,
                                double horizon, const Vec3& u) {
  const EstimateState post = observer_actuation_jump(est, u, ctx.db);
  try {
    return horizon_margin(ctx, post, t, horizon).margin;
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

namespace detail {

inline std::vector<Vec3> multistart_directions(int dim, int count) {
  std::vector<Vec3> dirs;
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * M_PI * k / count;
      dirs.emplace_back(std::cos(a), std::sin(a), 0.0);
    }
    return dirs;
  }
  for (int i = -1; i <= 1; ++i)
    for (int j = -1; j <= 1; ++j)
      for (int k = -1; k <= 1; ++k)
        if (i || j || k) dirs.push_back(Vec3(i, j, k).normalized());
  // Extra directions, if requested, from a Fibonacci lattice.
  for (int k = 0; static_cast<int>(dirs.size()) < count; ++k) {
    const double z = 1.0 - 2.0 * (k + 0.5) / count;
    const double r = std::sqrt(1.0 - z * z);
    const double ph = M_PI * (3.0 - std::sqrt(5.0)) * k;
    dirs.emplace_back(r * std::cos(ph), r * std::sin(ph), z);
  }
  dirs.resize(std::min<std::size_t>(dirs.size(), static_cast<std::size_t>(count)));
  return dirs;
}

inline Vec3 project_ball(const Vec3& u, double radius) {
  const double n = u.norm();
  return n > radius ? Vec3(u * (radius / n)) : u;
}

}  // namespace detail

/// Searches the impulse ball for the smallest post-impulse bound. With early_exit the search
/// stops at the first candidate meeting the bound.
inline ImpulsiveDecision impulse_program(const ControlContext& ctx, const EstimateState& est, double t,
                                         double horizon, bool early_exit = false) {
  const double umax = ctx.ctl.u_max;
  const int dim = ctx.dim;
  ImpulsiveDecision best;
  best.horizon = horizon;
  best.b = true;
  best.margin = std::numeric_limits<double>::infinity();
  auto consider = [&](const Vec3& u_raw) {
    Vec3 u = detail::project_ball(u_raw, umax);
    if (dim == 2) u.z() = 0.0;
    const double J = impulse_objective(ctx, est, t, horizon, u);
    ++best.evaluations;
    if (J < best.margin) {
      best.margin = J;
      best.u = u;
    }
    return J;
  };
  auto done = [&] { return early_exit && best.margin <= 0.0; };

  consider(Vec3::Zero());
  if (done() || umax <= 0.0) {
    best.feasible = best.margin <= 0.0;
    best.b = false;
    return best;
  }

  // Push directly away from the most active family.
  const HorizonCheck worst = horizon_margin(ctx, est, t, horizon);
  if (worst.family >= 0) {
    const BarrierEval e = h_eval(ctx.families[worst.family], t, est.x_hat, ctx.grav);
    Vec3 away = -(e.grad_v.squaredNorm() > 0.0 ? e.grad_v : e.grad_r);
    if (dim == 2) away.z() = 0.0;
    if (away.norm() > 0.0) {
      away.normalize();
      for (int m = 1; m <= ctx.ctl.multistart_mags && !done(); ++m)
        consider(away * (umax * m / ctx.ctl.multistart_mags));
    }
  }
  for (const Vec3& d : detail::multistart_directions(dim, ctx.ctl.multistart_dirs)) {
    for (int m = 1; m <= ctx.ctl.multistart_mags && !done(); ++m)
      consider(d * (umax * m / ctx.ctl.multistart_mags));
    if (done()) break;
  }

  // Nelder-Mead refinement in the active coordinates.
  if (!done() && ctx.ctl.nm_iters > 0) {
    const int n = dim;
    std::vector<Vec3> simplex(n + 1, best.u);
    std::vector<double> val(n + 1);
    const double step = 0.1 * umax;
    for (int i = 0; i < n; ++i) simplex[i + 1](i) += step;
    for (int i = 0; i <= n; ++i) val[i] = consider(simplex[i]);
    for (int it = 0; it < ctx.ctl.nm_iters && !done(); ++it) {
      std::vector<int> idx(n + 1);
      for (int i = 0; i <= n; ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return val[a] < val[b]; });
      double diam = 0.0;
      for (int i = 1; i <= n; ++i) diam = std::max(diam, (simplex[idx[i]] - simplex[idx[0]]).norm());
      if (diam < ctx.ctl.nm_tol * umax) break;
      const int hi = idx[n], lo = idx[0], sh = idx[n - 1];
      Vec3 centroid = Vec3::Zero();
      for (int i = 0; i < n; ++i) centroid += simplex[idx[i]];
      centroid /= n;
      const Vec3 xr = centroid + (centroid - simplex[hi]);
      const double fr = consider(xr);
      if (fr < val[lo]) {
        const Vec3 xe = centroid + 2.0 * (centroid - simplex[hi]);
        const double fe = consider(xe);
        if (fe < fr) simplex[hi] = xe, val[hi] = fe;
        else simplex[hi] = xr, val[hi] = fr;
      } else if (fr < val[sh]) {
        simplex[hi] = xr, val[hi] = fr;
      } else {
        const Vec3 xc = centroid + 0.5 * (simplex[hi] - centroid);
        const double fc = consider(xc);
        if (fc < val[hi]) {
          simplex[hi] = xc, val[hi] = fc;
        } else {
          for (int i = 1; i <= n; ++i) {
            simplex[idx[i]] = simplex[lo] + 0.5 * (simplex[idx[i]] - simplex[lo]);
            val[idx[i]] = consider(simplex[idx[i]]);
          }
        }
      }
    }
  }
  best.feasible = best.margin <= 0.0;
  best.b = best.u.squaredNorm() > 0.0;
  return best;
}

/// Smallest s in (0, 1] (to bisection resolution) with J(s u) <= 0, given J(u) <= 0.
inline ImpulsiveDecision refine_fuel(const ControlContext& ctx, const EstimateState& est, double t,
                                     const ImpulsiveDecision& d, int iters = 12) {
  ImpulsiveDecision out = d;
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < iters; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double J = impulse_objective(ctx, est, t, d.horizon, Vec3(mid * d.u));
    ++out.evaluations;
    if (J <= 0.0) {
      hi = mid;
      out.u = mid * d.u;
      out.margin = J;
    } else {
      lo = mid;
    }
  }
  return out;
}

/// Per-run controller memory.
struct ImpulsiveControllerState {
  bool fired_this_cycle = false;
};

struct DecisionTrace {
  ImpulsiveDecision decision;
  CoastCheck coast;
  bool safety_infeasible = false;
};

/// Coast-or-impulse choice at a sample instant. With extend_to_measurement the controller
/// first tries horizons reaching one sample past the next measurement; the shorter horizons
/// are the fallback and decide feasibility.
inline DecisionTrace decide_impulsive(const ControlContext& ctx, const EstimateState& est, double t,
                                      const Timers& sigma, ImpulsiveControllerState& mem) {
  const TimingConfig& T = ctx.timing;
  DecisionTrace tr;
  tr.coast = coast_feasible(ctx, est, t, sigma);
  const bool guaranteed = is_guaranteed_opportunity(sigma, T);
  tr.decision.horizon = tr.coast.horizon;
  tr.decision.margin = tr.coast.margin;

  if (!guaranteed) {
    // No impulse may be relied on here; coasting is the only choice.
    tr.safety_infeasible = !tr.coast.feasible;
    tr.decision.feasible = tr.coast.feasible;
    return tr;
  }

  const double d2 = horizon_delta2(sigma.sigma_m, T);
  const double reach = sigma.sigma_m + T.T_s;
  auto fire = [&](const ImpulsiveDecision& imp) {
    tr.decision = imp;
    mem.fired_this_cycle = true;
    return tr;
  };
  auto search = [&](double horizon) {
    ImpulsiveDecision imp = impulse_program(ctx, est, t, horizon);
    if (imp.feasible && imp.b && ctx.ctl.fuel_refine) imp = refine_fuel(ctx, est, t, imp);
    return imp;
  };

  const bool force = ctx.ctl.policy == ImpulsePolicy::AlwaysActuate && !mem.fired_this_cycle;
  if (ctx.ctl.extend_to_measurement && reach > d2) {
    const CoastCheck far = coast_feasible(ctx, est, t, reach);
    if (far.feasible && !force) return tr;
    const ImpulsiveDecision imp = search(reach);
    if (imp.feasible && imp.b) return fire(imp);
    if (imp.feasible && !force) return tr;
  }

  bool want_impulse = !tr.coast.feasible || force;
  if (!want_impulse && ctx.ctl.lookahead) {
    // Coast only if an impulse window after the next sample is still covered by coasting.
    const double ahead = T.T_s + horizon_delta2(std::max(sigma.sigma_m - T.T_s, 0.0), T);
    want_impulse = !coast_feasible(ctx, est, t, ahead).feasible;
  }
  if (!want_impulse) return tr;

  ImpulsiveDecision imp = search(d2);
  if (imp.feasible && imp.b) return fire(imp);
  if (imp.feasible && !imp.b) {
    // The zero impulse already certifies the longer horizon.
    tr.decision.margin = imp.margin;
    return tr;
  }
  if (tr.coast.feasible) return tr;  // search failed but coasting still certifies the next step
  tr.safety_infeasible = true;
  tr.decision = imp;
  tr.decision.feasible = false;
  return tr;
}

// ---------------------------------------------------------------------------
// Continuous mode

struct QPFilterResult {
  Vec3 u = Vec3::Zero();
  bool feasible = true;
  bool relaxed = false;
  double slack = 0.0;
  QPProblem problem;
};

/// Rows a_i.u <= c_i from d/dt h_hat_i <= -alpha_slope * h_hat_i with w_g bounded by W_g.
inline QPProblem build_cbf_qp(const ControlContext& ctx, const EstimateState& est, double t) {
  const int n = ctx.dim;
  const int m = static_cast<int>(ctx.families.size());
  QPProblem P;
  P.A.resize(m, n);
  P.c.resize(m);
  P.u_nom = Eigen::VectorXd::Zero(n);
  P.u_max = ctx.ctl.u_max;
  const Vec3 f = ctx.grav.accel(est.x_hat.r);
  const double Wg = ctx.W_g();
  for (int i = 0; i < m; ++i) {
    const auto& fam = ctx.families[i];
    const BarrierEval e = h_eval(fam, t, est.x_hat, ctx.grav);
    const auto l = lipschitz(fam);
    const double hh = e.h + l.l_hr * est.rho_hat.rho_r + l.l_hv * est.rho_hat.rho_v;
    const double drift = e.dh_dt_explicit + e.grad_r.dot(est.x_hat.v) + e.grad_v.dot(f) +
                         l.l_hr * est.rho_hat.rho_v +
                         l.l_hv * (ctx.lip.l_fr * est.rho_hat.rho_r + ctx.lip.l_fv * est.rho_hat.rho_v +
                                   ctx.db.w_c + Wg);
    for (int d = 0; d < n; ++d) P.A(i, d) = e.grad_v(d);
    P.c(i) = -ctx.ctl.alpha_slope * hh - drift;
  }
  return P;
}

/// Least-violating input: min |u|^2 + K s^2 subject to a_i.u - s <= c_i and the box.
inline QPResult solve_relaxed(const QPProblem& P, double K, double& slack) {
  const int n = static_cast<int>(P.u_nom.size());
  const int m = static_cast<int>(P.A.rows());
  const double sk = std::sqrt(K);
  QPProblem R;
  R.A.resize(m + 2 * n, n + 1);
  R.c.resize(m + 2 * n);
  R.A.setZero();
  for (int i = 0; i < m; ++i) {
    R.A.block(i, 0, 1, n) = P.A.row(i);
    R.A(i, n) = -1.0 / sk;  // scaled slack s' = sqrt(K) s
    R.c(i) = P.c(i);
  }
  for (int d = 0; d < n; ++d) {
    R.A(m + 2 * d, d) = 1.0;
    R.c(m + 2 * d) = P.u_max;
    R.A(m + 2 * d + 1, d) = -1.0;
    R.c(m + 2 * d + 1) = P.u_max;
  }
  R.u_nom = Eigen::VectorXd::Zero(n + 1);
  R.u_nom.head(n) = P.u_nom;
  QPResult r = solve_qp(R);
  slack = r.feasible ? r.u(n) / sk : std::numeric_limits<double>::infinity();
  r.u.conservativeResize(n);
  return r;
}

inline QPFilterResult qp_filter(const ControlContext& ctx, const EstimateState& est, double t) {
  QPFilterResult out;
  out.problem = build_cbf_qp(ctx, est, t);
  const QPResult r = solve_qp(out.problem);
  if (r.feasible) {
    for (int d = 0; d < ctx.dim; ++d) out.u(d) = r.u(d);
    return out;
  }
  out.feasible = false;
  if (ctx.ctl.on_infeasible == InfeasiblePolicy::LeastViolating) {
    const QPResult rr = solve_relaxed(out.problem, ctx.ctl.relax_weight, out.slack);
    out.relaxed = true;
    for (int d = 0; d < ctx.dim; ++d) out.u(d) = rr.u(d);
  }
  return out;
}

}  // namespace ritcbf
