#pragma once

// Closed-form propagation of the uncertainty radii rho = (rho_r, rho_v) under
//   d/dt rho = A rho + [0; w],   A = [[0, 1], [l_fr, l_fv]].
//
// Every quantity is written through c0, c1 with e^{A t} = c0 I + c1 A, and the
// input response Phi(t) e2 = [F; c1] with F = int_0^t c1. With m = l_fv / 2 and
// h^2 = (l_fv^2 + 4 l_fr) t^2 / 4 there are three branches:
//   |h^2| <= 1/4 : series in h^2 (contains the repeated root),
//   h^2 > 1/4    : distinct real eigenvalues,
//   h^2 < -1/4   : complex pair.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>

#include "ritcbf/core.hpp"

namespace ritcbf {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

struct UncertaintyBound {
  double rho_r = 0.0;
  double rho_v = 0.0;

  Vec2 vec() const { return {rho_r, rho_v}; }
  static UncertaintyBound from(const Vec2& v) { return {v(0), v(1)}; }
  friend bool operator==(const UncertaintyBound&, const UncertaintyBound&) = default;
};

/// Componentwise a <= b.
inline bool dominated_by(const UncertaintyBound& a, const UncertaintyBound& b) {
  return a.rho_r <= b.rho_r && a.rho_v <= b.rho_v;
}

struct LipschitzPair {
  double l_fr = 0.0;
  double l_fv = 0.0;
};

struct DisturbanceBounds {
  double w_c = 0.0;
  double w_g_slope = 0.0;
  double w_g_cap = 0.0;

  /// Impulse/actuation disturbance radius as a function of the input norm.
  double w_g(double lambda) const { return std::min(w_g_slope * lambda, w_g_cap); }
  /// Supremum of w_g over inputs of norm at most u_norm_sup.
  double W_g(double u_norm_sup) const { return w_g(u_norm_sup); }
};

namespace detail {

// Coefficients of e^{At} = c0 I + c1 A, and F = int_0^t c1(s) ds.
struct FlowCoeffs {
  double c0 = 1.0;
  double c1 = 0.0;
  double F = 0.0;
};

// sum_j z^j / (2j+1)!  and  sum_j z^j / (2j)!  for |z| <= 1/4.
inline void sinhc_cosh_series(double z, double& sinhc, double& cosh_) {
  double ts = 1.0, tc = 1.0;
  sinhc = 1.0;
  cosh_ = 1.0;
  for (int j = 1; j < 30; ++j) {
    ts *= z / ((2.0 * j) * (2.0 * j + 1.0));
    tc *= z / ((2.0 * j - 1.0) * (2.0 * j));
    sinhc += ts;
    cosh_ += tc;
    if (std::abs(ts) < 1e-18 * std::abs(sinhc) && std::abs(tc) < 1e-18 * std::abs(cosh_)) break;
  }
}

// I_n(c) = int_0^1 s^n e^{cs} ds for |c| <= 1, by the series sum_k c^k / (k! (n+k+1)).
inline double moment_series(int n, double c) {
  double term = 1.0, sum = 1.0 / (n + 1);
  for (int k = 1; k < 60; ++k) {
    term *= c / k;
    const double add = term / (n + k + 1);
    sum += add;
    if (std::abs(add) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// (e^z - 1) / z, stable at z = 0.
inline double phi1(double z) { return z == 0.0 ? 1.0 : std::expm1(z) / z; }

inline FlowCoeffs flow_coeffs(double t, double a, double b) {
  FlowCoeffs k;
  if (t == 0.0) return k;
  const double c = 0.5 * b * t;       // m t
  const double disc = b * b + 4.0 * a;
  const double h2 = 0.25 * disc * t * t;
  if (std::abs(h2) <= 0.25) {
    double sc = 0.0, ch = 0.0;
    sinhc_cosh_series(h2, sc, ch);
    const double ec = std::exp(c);
    k.c1 = ec * t * sc;
    k.c0 = ec * (ch - c * sc);
    if (std::abs(c) <= 1.0) {
      // F / t^2 = sum_j h^{2j} / (2j+1)! * I_{2j+1}(c)
      double fac = 1.0, sum = 0.0;
      for (int j = 0; j < 30; ++j) {
        if (j > 0) fac *= h2 / ((2.0 * j) * (2.0 * j + 1.0));
        const double add = fac * moment_series(2 * j + 1, c);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
      }
      k.F = t * t * sum;
    } else {
      // c^2 - h^2 >= 3/4 here, so a != 0 and 1 - c0 carries no cancellation.
      k.F = (k.c0 - 1.0) / a;
    }
    return k;
  }
  if (h2 > 0.0) {
    const double kk = 0.5 * std::sqrt(disc);
    const double m = 0.5 * b;
    const double l1 = m >= 0.0 ? m + kk : m - kk;  // larger magnitude root
    const double l2 = -a / l1;                     // product of the roots is -a
    const double x1 = l1 * t, x2 = l2 * t;
    const double gap = l1 - l2;
    const double e1 = std::exp(x1), e2 = std::exp(x2);
    k.c1 = e2 * std::expm1(x1 - x2) / gap;
    k.c0 = (l1 * e2 - l2 * e1) / gap;
    k.F = t * t * (phi1(x1) - phi1(x2)) / (x1 - x2);
    return k;
  }
  const double w = 0.5 * std::sqrt(-disc);
  const double ec = std::exp(c);
  const double s = std::sin(w * t) / w;
  k.c1 = ec * s;
  k.c0 = ec * (std::cos(w * t) - 0.5 * b * s);
  k.F = (k.c0 - 1.0) / a;  // a < -b^2/4 - 1/t^2 is bounded away from 0
  return k;
}

}  // namespace detail

/// e^{A t} for A = [[0, 1], [a, b]].
inline Mat2 expm_A(double t, double a, double b) {
  const auto k = detail::flow_coeffs(t, a, b);
  Mat2 E;
  E << k.c0, k.c1, a * k.c1, k.c0 + b * k.c1;
  return E;
}

inline Mat2 expm_A(double t, const LipschitzPair& lip) { return expm_A(t, lip.l_fr, lip.l_fv); }

/// Phi(t) e2 = int_0^t e^{As} ds [0; 1].
inline Vec2 input_response(double t, const LipschitzPair& lip) {
  const auto k = detail::flow_coeffs(t, lip.l_fr, lip.l_fv);
  return {k.F, k.c1};
}

/// Radii after flowing for delta under constant input w.
inline UncertaintyBound propagate_q(double delta, const UncertaintyBound& rho,
                                    const LipschitzPair& lip, double w_c) {
  if (delta == 0.0) return rho;
  const auto k = detail::flow_coeffs(delta, lip.l_fr, lip.l_fv);
  const double a = lip.l_fr, b = lip.l_fv;
  const double r = k.c0 * rho.rho_r + k.c1 * rho.rho_v + k.F * w_c;
  const double v = a * k.c1 * rho.rho_r + (k.c0 + b * k.c1) * rho.rho_v + k.c1 * w_c;
  return {r, v};
}

inline UncertaintyBound propagate_q_star(double delta, const UncertaintyBound& rho,
                                         const LipschitzPair& lip, double w_c, double W_g) {
  return propagate_q(delta, rho, lip, w_c + W_g);
}

/// Right-hand side of the radius flow; used for tube slopes.
inline UncertaintyBound q_rate(const UncertaintyBound& rho, const LipschitzPair& lip, double w) {
  return {rho.rho_v, lip.l_fr * rho.rho_r + lip.l_fv * rho.rho_v + w};
}

struct ImpulsiveTube {
  UncertaintyBound q1, q2, q3;
  int N = 1;
};

/// Worst-case radii at any impulse opportunity of a measurement cycle.
inline ImpulsiveTube pre_actuation_tube(const TimingConfig& cfg, const LipschitzPair& lip,
                                        double w_c, double W_g, const UncertaintyBound& rho_max) {
  ImpulsiveTube out;
  const double span = std::max(cfg.T_M - cfg.T_m, 0.0);
  out.q1 = propagate_q(span, rho_max, lip, w_c);
  out.N = 1 + static_cast<int>(std::floor(span / cfg.T_a));
  Vec2 acc = Vec2::Zero();
  for (int i = 1; i <= out.N - 1; ++i) {
    const double d = span - cfg.T_a * (i - 1);
    acc += expm_A(d, lip) * Vec2(0.0, W_g);
  }
  out.q2 = UncertaintyBound::from(acc);
  out.q3 = {out.q1.rho_r + out.q2.rho_r, out.q1.rho_v + out.q2.rho_v};
  return out;
}

inline UncertaintyBound pre_actuation_bound_impulsive(const TimingConfig& cfg,
                                                      const LipschitzPair& lip, double w_c,
                                                      double W_g,
                                                      const UncertaintyBound& rho_max) {
  return pre_actuation_tube(cfg, lip, w_c, W_g, rho_max).q3;
}

inline UncertaintyBound pre_actuation_bound_continuous(const TimingConfig& cfg,
                                                       const LipschitzPair& lip, double w_c,
                                                       double W_g,
                                                       const UncertaintyBound& rho_max) {
  return propagate_q_star(cfg.T_M, rho_max, lip, w_c, W_g);
}

}  // namespace ritcbf
