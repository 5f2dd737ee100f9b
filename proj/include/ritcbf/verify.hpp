#pragma once

// Offline certification at a sampling resolution: RIT-CBF and RT-CBF checks
// over Halton samples of (t, estimate, error radii), and bisection for the
// largest certified measurement interval.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "ritcbf/controller.hpp"

namespace ritcbf {

/// Radical-inverse Halton sequence over the first primes; index 0 is skipped.
class Halton {
 public:
  explicit Halton(int dims, std::uint64_t offset = 0) : dims_(dims), offset_(offset) {
    static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (dims < 1 || dims > 16) throw Error(ErrorKind::kConfig, "Halton dimension out of range");
    primes_.assign(kPrimes, kPrimes + dims);
  }
  std::vector<double> point(std::uint64_t i) const {
    std::vector<double> p(dims_);
    const std::uint64_t idx = i + 1 + offset_;
    for (int d = 0; d < dims_; ++d) p[d] = radical_inverse(idx, primes_[d]);
    return p;
  }

 private:
  static double radical_inverse(std::uint64_t n, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (n > 0) {
      r += f * static_cast<double>(n % base);
      n /= base;
      f *= inv;
    }
    return r;
  }
  int dims_;
  std::uint64_t offset_;
  std::vector<int> primes_;
};

struct VerifierSampling {
  int samples = 4096;
  std::uint64_t seed = 0;      // Halton index offset
  double pos_radius = 1000.0;  // relative position ball around the reference orbit (m)
  double vel_radius = 1.0;     // relative velocity ball (m/s)
  // Error radii are drawn log-uniformly between the station radii and this cap; samples above
  // the tube bound are dropped. Unset means the bound itself. A cap shared across T_M
  // candidates makes the sample sets nested.
  std::optional<UncertaintyBound> rho_cap;
};

struct VerifierDomain {
  KeplerOrbit reference;
  double t0 = 0.0;
  double t_span = 0.0;  // sampled time window, one reference period by default
};

struct VerifyReport {
  bool verified = false;
  double worst_margin = -std::numeric_limits<double>::infinity();
  int samples_total = 0;
  int samples_in_domain = 0;
  int failing = 0;
  double T_M = 0.0;
  UncertaintyBound rho_bound;
  std::optional<EstimateState> witness;
  double witness_t = 0.0;
  Vec3 witness_u = Vec3::Zero();
  VerifierSampling sampling;
};

inline int worker_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n <= 0) n = 1;
  if (const char* env = std::getenv("RITCBF_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

/// Runs fn(i) for i in [0, n) on worker threads; results are indexed so order does not matter.
inline void parallel_for(int n, const std::function<void(int)>& fn, int workers = worker_count()) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex mu;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

namespace detail {

struct Sample {
  double t;
  EstimateState est;
};

inline Vec3 ball_from_unit(const double* u, int dim, double radius) {
  const double rad = radius * std::pow(u[0], 1.0 / dim);
  if (dim == 2) {
    const double a = 2.0 * M_PI * u[1];
    return {rad * std::cos(a), rad * std::sin(a), 0.0};
  }
  const double z = 2.0 * u[1] - 1.0;
  const double a = 2.0 * M_PI * u[2];
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {rad * s * std::cos(a), rad * s * std::sin(a), rad * z};
}

inline Sample make_sample(const std::vector<double>& h, int dim, const VerifierDomain& dom,
                          const VerifierSampling& smp, const UncertaintyBound& floor,
                          const UncertaintyBound& cap) {
  const int per = dim == 2 ? 2 : 3;
  Sample s;
  s.t = dom.t0 + h[0] * dom.t_span;
  const PlantState ref = dom.reference.at(s.t);
  s.est.x_hat.r = ref.r + ball_from_unit(&h[1], dim, smp.pos_radius);
  s.est.x_hat.v = ref.v + ball_from_unit(&h[1 + per], dim, smp.vel_radius);
  auto log_mix = [](double lo, double hi, double f) {
    if (!(lo > 0.0) || !(hi > lo)) return f * hi;
    return lo * std::pow(hi / lo, f);
  };
  s.est.rho_hat = {log_mix(floor.rho_r, cap.rho_r, h[1 + 2 * per]),
                   log_mix(floor.rho_v, cap.rho_v, h[2 + 2 * per])};
  return s;
}

inline bool in_estimated_safe_set(const ControlContext& ctx, double t, const EstimateState& est) {
  for (const auto& f : ctx.families)
    if (h_hat(f, t, est, ctx.grav) > 0.0) return false;
  return true;
}

template <class Check>
VerifyReport run_verifier(const ControlContext& ctx, const VerifierDomain& dom,
                          const VerifierSampling& smp, const UncertaintyBound& floor,
                          const UncertaintyBound& bound, Check check) {
  const int dim = ctx.dim;
  const int dims = 3 + 2 * (dim == 2 ? 2 : 3);
  const UncertaintyBound cap = smp.rho_cap.value_or(bound);
  const Halton H(dims, smp.seed);
  struct Out {
    bool in = false;
    double margin = -std::numeric_limits<double>::infinity();
    Vec3 u = Vec3::Zero();
  };
  std::vector<Out> outs(smp.samples);
  std::vector<Sample> samples(smp.samples);
  parallel_for(smp.samples, [&](int i) {
    samples[i] = make_sample(H.point(i), dim, dom, smp, floor, cap);
    const Sample& s = samples[i];
    if (s.est.rho_hat.rho_r > bound.rho_r || s.est.rho_hat.rho_v > bound.rho_v) return;
    try {
      if (!in_estimated_safe_set(ctx, s.t, s.est)) return;
    } catch (const Error&) {
      return;  // outside the modelled shell
    }
    outs[i].in = true;
    check(s, outs[i].margin, outs[i].u);
  });
  VerifyReport rep;
  rep.samples_total = smp.samples;
  rep.sampling = smp;
  rep.rho_bound = bound;
  int arg = -1;
  for (int i = 0; i < smp.samples; ++i) {
    if (!outs[i].in) continue;
    ++rep.samples_in_domain;
    if (outs[i].margin > 0.0) ++rep.failing;
    if (arg < 0 || outs[i].margin > rep.worst_margin) {
      rep.worst_margin = outs[i].margin;
      arg = i;
    }
  }
  if (rep.samples_in_domain == 0)
    throw Error(ErrorKind::kDomainEmpty, "no verifier sample satisfies h_hat <= 0");
  rep.verified = rep.failing == 0;
  rep.witness = samples[arg].est;
  rep.witness_t = samples[arg].t;
  rep.witness_u = outs[arg].u;
  return rep;
}

}  // namespace detail

/// Every sampled estimate with rho <= q3 and h_hat <= 0 must admit an impulse that certifies
/// the bound over delta_r.
inline VerifyReport verify_rit_cbf(const ControlContext& ctx, const UncertaintyBound& rho_max,
                                   const VerifierDomain& dom, const VerifierSampling& smp) {
  const UncertaintyBound q3 =
      pre_actuation_bound_impulsive(ctx.timing, ctx.lip, ctx.db.w_c, ctx.W_g(), rho_max);
  const double horizon = delta_r(ctx.timing);
  auto rep = detail::run_verifier(ctx, dom, smp, rho_max, q3, [&](const detail::Sample& s, double& margin, Vec3& u) {
    const ImpulsiveDecision d = impulse_program(ctx, s.est, s.t, horizon, true);
    margin = d.margin;
    u = d.u;
  });
  rep.T_M = ctx.timing.T_M;
  return rep;
}

/// Per-family affine check of the continuous condition at each sample with rho <= q4: the
/// box must contain a u with a.u <= c.
inline VerifyReport verify_rt_cbf(const ControlContext& ctx, const UncertaintyBound& rho_max,
                                  const VerifierDomain& dom, const VerifierSampling& smp) {
  const UncertaintyBound q4 =
      pre_actuation_bound_continuous(ctx.timing, ctx.lip, ctx.db.w_c, ctx.W_g(), rho_max);
  auto rep = detail::run_verifier(ctx, dom, smp, rho_max, q4, [&](const detail::Sample& s, double& margin, Vec3& u) {
    const QPProblem P = build_cbf_qp(ctx, s.est, s.t);
    margin = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < P.A.rows(); ++i) {
      const double l1 = P.A.row(i).lpNorm<1>();
      const double reach = l1 > 0.0 ? P.u_max * l1 : 0.0;
      margin = std::max(margin, -P.c(i) - reach);
    }
    u.setZero();
  });
  rep.T_M = ctx.timing.T_M;
  return rep;
}

struct HorizonProbe {
  double T_M;
  bool verified;
  double worst_margin;
};

struct HorizonResult {
  double T_M = 0.0;
  std::vector<HorizonProbe> probes;
  bool monotone = true;
};

/// Bisection for the largest T_M in [lo, hi] that verify() certifies, to within tol.
inline HorizonResult max_horizon(const std::function<VerifyReport(double)>& verify, double lo,
                                 double hi, double tol) {
  if (!(lo < hi)) throw Error(ErrorKind::kBracket, "max-horizon needs lo < hi");
  if (!(tol > 0.0)) throw Error(ErrorKind::kBracket, "max-horizon needs tol > 0");
  HorizonResult res;
  auto probe = [&](double T) {
    const VerifyReport r = verify(T);
    res.probes.push_back({T, r.verified, r.worst_margin});
    return r.verified;
  };
  if (!probe(lo)) throw Error(ErrorKind::kBracket, "verification fails at the lower bracket");
  if (probe(hi)) throw Error(ErrorKind::kBracket, "verification passes at the upper bracket");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) ? lo : hi) = mid;
  }
  res.T_M = lo;
  auto sorted = res.probes;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.T_M < b.T_M; });
  bool failed = false;
  for (const auto& p : sorted) {
    if (!p.verified) failed = true;
    else if (failed) res.monotone = false;
  }
  return res;
}

}  // namespace ritcbf
