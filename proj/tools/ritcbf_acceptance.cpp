// Acceptance runner: one PASS/FAIL line per primary criterion. Exit status is
// the number of failing criteria (0 when everything passes).

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ritcbf/sim.hpp"

using namespace ritcbf;

namespace {

// Pinned tolerances and budgets.
constexpr int kRendezvousRuns = 100;
constexpr double kRendezvousTM = 300.0;
constexpr double kRendezvousBudget = 300.0;  // s
constexpr int kGeoRuns = 50;
constexpr double kGeoTM = 41040.0;
constexpr double kGeoBudget = 600.0;  // s
constexpr double kGeoUMax = 8e-4;     // m/s^2, hard bound
constexpr int kTubeDraws = 1000;
constexpr double kTubeStep = 1e-3;
constexpr double kTubeRelTol = 1e-9;
constexpr double kTubeBudget = 60.0;  // s
constexpr int kExpmDraws = 1000;
constexpr double kExpmRelTol = 1e-12;
constexpr int kPsiCalls = 200;
constexpr int kPsiRefine = 100;
constexpr int kDeltaConfigs = 100;
constexpr int kDeltaGrid = 10000;
constexpr int kQpProblems = 10000;
constexpr double kQpTol = 1e-8;
constexpr double kRendezvousHorizonLo = 100.0, kRendezvousHorizonHi = 1500.0, kRendezvousHorizonTol = 5.0;
constexpr double kRendezvousBracketLo = 150.0;  // smallest T_M with a valid timing for this scenario
constexpr double kGeoHorizonLo = 2 * 3600.0, kGeoHorizonHi = 24 * 3600.0, kGeoHorizonTol = 300.0;
constexpr int kMaxJumpsPerInstant = 3;

int failures = 0;

void report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s  %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(double x, double ref) { return std::abs(x - ref) / std::max(std::abs(ref), 1e-300); }

// Tube closed forms against fixed-step RK4 of the radius flow.
void tube_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0, 1);
  double worst = 0.0;
  int zero_lfr = 0;
  for (int i = 0; i < kTubeDraws; ++i) {
    const bool no_lfr = i % 4 == 0;
    zero_lfr += no_lfr;
    const LipschitzPair lip{no_lfr ? 0.0 : 1e-3 * u01(rng), i % 3 == 0 ? 0.0 : 5e-3 * u01(rng)};
    const UncertaintyBound rho{10.0 * u01(rng), 0.01 * u01(rng)};
    const double wc = 1e-5 * u01(rng), Wg = 1e-4 * u01(rng);
    const double d = 300.0 * u01(rng);
    const auto q = propagate_q(d, rho, lip, wc);
    const auto o = oracle::tube_rk4(d, rho.rho_r, rho.rho_v, lip.l_fr, lip.l_fv, wc, kTubeStep);
    const auto qs = propagate_q_star(d, rho, lip, wc, Wg);
    const auto os = oracle::tube_rk4(d, rho.rho_r, rho.rho_v, lip.l_fr, lip.l_fv, wc + Wg, kTubeStep);
    worst = std::max({worst, rel(q.rho_r, o[0]), rel(q.rho_v, o[1]), rel(qs.rho_r, os[0]), rel(qs.rho_v, os[1])});
  }
  const double wall = seconds_since(t0);
  report(worst <= kTubeRelTol && wall <= kTubeBudget, "tube oracle equivalence",
         fmt("%d draws (%d with l_fr = 0), max rel err %.2e (tol %.0e), %.1f s (budget %.0f s)", kTubeDraws,
             zero_lfr, worst, kTubeRelTol, wall, kTubeBudget));
}

void expm_oracle() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u01(0, 1);
  int branches[3] = {0, 0, 0};
  double worst = 0.0;
  for (int i = 0; i < kExpmDraws; ++i) {
    const double t = 1000.0 * u01(rng);
    const double b = i % 5 == 0 ? 0.0 : 0.02 * u01(rng);
    double a;
    switch (i % 3) {
      case 0: a = 1e-3 * u01(rng); break;
      case 1: a = -b * b / 4 * (1 + 1e-7 * (u01(rng) - 0.5)); break;
      default: a = -b * b / 4 - 1e-3 * u01(rng); break;
    }
    const double disc = b * b + 4 * a;
    branches[std::abs(disc) <= 1e-12 * std::max(1.0, b * b) ? 1 : (disc > 0 ? 0 : 2)]++;
    const Mat2 E = expm_A(t, a, b);
    const auto R = oracle::expm_series(t, a, b);
    long double mx = 0, err = 0;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        mx = std::max(mx, std::fabs(R[r][c]));
        err = std::max(err, std::fabs((long double)E(r, c) - R[r][c]));
      }
    worst = std::max(worst, static_cast<double>(err / mx));
  }
  const bool all = branches[0] > 0 && branches[1] > 0 && branches[2] > 0;
  report(worst <= kExpmRelTol && all, "expm oracle",
         fmt("%d draws (real %d, repeated %d, complex %d), max rel err %.2e (tol %.0e)", kExpmDraws, branches[0],
             branches[1], branches[2], worst, kExpmRelTol));
}

// psi_h against the barrier sampled 100x finer along a closed-form Kepler prediction.
// Draws whose predicted path leaves the shell domain are skipped and counted.
int psi_violations(const ScenarioConfig& c, std::uint64_t seed, double& worst_gap, int& skipped) {
  const ControlContext ctx = make_context(c);
  const KeplerOrbit ref = c.verifier_reference == "target" ? target_orbit(c) : chaser_nominal_orbit(c);
  const double span = c.verifier_t_span > 0.0 ? c.verifier_t_span : ref.period();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0, 1), sym(-1, 1);
  int bad = 0;
  for (int k = 0; k < kPsiCalls; ++k) {
    const double t = c.t0 + span * u01(rng);
    PlantState x = ref.at(t);
    Vec3 dr(sym(rng), sym(rng), c.dim == 3 ? sym(rng) : 0.0), dv(sym(rng), sym(rng), c.dim == 3 ? sym(rng) : 0.0);
    x.r += c.verifier.pos_radius * dr;
    x.v += c.verifier.vel_radius * dv;
    const double horizon = c.timing.T_M * (0.05 + 0.95 * u01(rng));
    const double grid = ctx.ctl.psi_grid;
    const double step = grid / kPsiRefine;
    const int n = static_cast<int>(std::ceil(horizon / step));
    std::vector<double> psi(ctx.families.size()), dense(ctx.families.size(), -1e300);
    try {
      const PredictedPath P = predict_grid(t, t + horizon, x, grid, ctx.grav, ctx.pred);
      const KeplerOrbit truth_path(x, t, ctx.grav.mu);
      for (std::size_t j = 0; j < ctx.families.size(); ++j) psi[j] = psi_h(ctx.families[j], P, ctx.grav);
      for (int i = 0; i <= n; ++i) {
        const double s = std::min(t + i * step, t + horizon);
        const PlantState xs = truth_path.at(s);
        for (std::size_t j = 0; j < ctx.families.size(); ++j)
          dense[j] = std::max(dense[j], h_eval(ctx.families[j], s, xs, ctx.grav).h);
      }
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    for (std::size_t j = 0; j < ctx.families.size(); ++j) {
      worst_gap = std::min(worst_gap, psi[j] - dense[j]);
      if (psi[j] < dense[j]) ++bad;
    }
  }
  return bad;
}

void psi_soundness() {
  double gap_rv = std::numeric_limits<double>::infinity(), gap_geo = gap_rv;
  int skip_rv = 0, skip_geo = 0;
  const int bad_rv = psi_violations(build_rendezvous_scenario(kRendezvousTM), 21, gap_rv, skip_rv);
  const int bad_geo = psi_violations(build_stationkeeping_scenario(kGeoTM), 22, gap_geo, skip_geo);
  const bool enough = skip_rv < kPsiCalls / 2 && skip_geo < kPsiCalls / 2;
  report(bad_rv == 0 && bad_geo == 0 && enough, "psi_h soundness",
         fmt("%d draws per scenario, dense step grid/%d: violations rendezvous %d (min slack %.3g m, %d left the "
             "domain), stationkeeping %d (min slack %.3g m, %d left the domain)",
             kPsiCalls, kPsiRefine, bad_rv, gap_rv, skip_rv, bad_geo, gap_geo, skip_geo));
}

void delta_r_dominance() {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u01(0, 1);
  int configs = 0;
  long bad = 0;
  while (configs < kDeltaConfigs) {
    TimingConfig c;
    c.T_s = 0.1 + 20 * u01(rng);
    c.T_a = 0.1 + 200 * u01(rng);
    c.T_m = 60 * u01(rng);
    c.T_L = (c.T_m + c.T_s + std::max(c.T_a - c.T_m, 0.0)) * (1.0 + 2.0 * u01(rng)) + 1e-6;
    c.T_M = c.T_L * (1.0 + 3.0 * u01(rng));
    if (validate_timing(c)) continue;
    ++configs;
    const double dr = delta_r(c);
    for (int i = 0; i < kDeltaGrid; ++i) {
      const double sm = c.T_M * i / (kDeltaGrid - 1);
      if (dr < horizon_delta2(sm, c)) ++bad;
    }
  }
  report(bad == 0, "delta_r dominance",
         fmt("%d timing configs x %d sigma_m grid points, %ld violations", configs, kDeltaGrid, bad));
}

void qp_oracle() {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> nd(0, 1);
  std::uniform_int_distribution<int> dim_d(1, 3), rows_d(0, 6);
  double worst = 0.0;
  int verdict_mismatch = 0, infeasible = 0;
  for (int k = 0; k < kQpProblems; ++k) {
    const int n = dim_d(rng), m = rows_d(rng);
    QPProblem P;
    P.A.resize(m, n);
    P.c.resize(m);
    P.u_nom.resize(n);
    std::vector<std::vector<double>> A(m, std::vector<double>(n));
    std::vector<double> c(m), u0(n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) P.A(i, j) = A[i][j] = nd(rng);
      P.c(i) = c[i] = nd(rng);
    }
    for (int j = 0; j < n; ++j) P.u_nom(j) = u0[j] = 2.0 * nd(rng);
    std::vector<double> best;
    const bool feasible_oracle = oracle::qp_bruteforce(n, A, c, u0, best);
    const QPResult r = solve_qp(P);
    if (r.feasible != feasible_oracle) {
      ++verdict_mismatch;
      continue;
    }
    if (!feasible_oracle) {
      ++infeasible;
      continue;
    }
    double bn = 0.0;
    for (int j = 0; j < n; ++j) bn += best[j] * best[j];
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(r.u(j) - best[j]) / (1.0 + std::sqrt(bn)));
  }
  report(verdict_mismatch == 0 && worst <= kQpTol, "QP solver vs brute-force oracle",
         fmt("%d problems (%d infeasible), verdict mismatches %d, max |u - u_oracle| / (1 + |u_oracle|) %.2e (tol %.0e)", kQpProblems,
             infeasible, verdict_mismatch, worst, kQpTol));
}

void horizon_check() {
  std::string detail;
  bool pass = true;
  auto one = [&](const char* label, const ScenarioConfig& c, double lo, double hi, double tol, double unit,
                 const char* unit_name) {
    try {
      const HorizonResult h = max_horizon(c, lo, hi, tol);
      const bool ok = h.monotone && h.T_M >= lo && h.T_M <= hi;
      pass = pass && ok;
      detail += fmt("%s %.4g %s (%zu probes%s); ", label, h.T_M / unit, unit_name, h.probes.size(),
                    h.monotone ? ", monotone" : ", NON-MONOTONE");
    } catch (const Error& e) {
      pass = false;
      detail += fmt("%s error: %s; ", label, e.what());
    }
  };
  one("rendezvous", build_rendezvous_scenario(kRendezvousTM), kRendezvousBracketLo, kRendezvousHorizonHi,
      kRendezvousHorizonTol, 1.0, "s");
  one("stationkeeping", build_stationkeeping_scenario(kGeoTM), kGeoHorizonLo, kGeoHorizonHi, kGeoHorizonTol,
      3600.0, "h");
  detail += "ranges [100, 1500] s and [2, 24] h";
  report(pass, "horizon order of magnitude", detail);
}

}  // namespace

int main() {
  std::printf("Acceptance (%d worker thread%s)\n", worker_count(), worker_count() == 1 ? "" : "s");

  const auto t_rv = std::chrono::steady_clock::now();
  const MonteCarloReport rv =
      monte_carlo(build_rendezvous_scenario(kRendezvousTM), seed_range(1, kRendezvousRuns));
  const double wall_rv = seconds_since(t_rv);
  report(rv.violations == 0 && rv.aborted_runs == 0 && wall_rv <= kRendezvousBudget,
         "safety invariance, impulsive",
         fmt("%d runs at T_M = %.0f s: violating steps %ld, safety-infeasible runs %ld, max true h %.3f m, "
             "dv p50 %.3f / p95 %.3f m/s, %.1f s (budget %.0f s)",
             kRendezvousRuns, kRendezvousTM, rv.violations, rv.aborted_runs, rv.max_h, rv.dv_p50, rv.dv_p95, wall_rv,
             kRendezvousBudget));

  const auto t_geo = std::chrono::steady_clock::now();
  const MonteCarloReport geo = monte_carlo(build_stationkeeping_scenario(kGeoTM), seed_range(1, kGeoRuns));
  const double wall_geo = seconds_since(t_geo);
  report(geo.violations == 0 && geo.max_u_norm <= kGeoUMax && wall_geo <= kGeoBudget,
         "safety invariance, continuous",
         fmt("%d runs at T_M = %.0f s: violating steps %ld, max true h %.1f m, max |u| %.3e m/s^2 (bound %.0e), "
             "infeasible QP steps %ld, %.1f s (budget %.0f s)",
             kGeoRuns, kGeoTM, geo.violations, geo.max_h, geo.max_u_norm, kGeoUMax, geo.infeasible_events, wall_geo,
             kGeoBudget));

  long checks = 0;
  for (const auto* mc : {&rv, &geo})
    for (const auto& m : mc->runs) checks += m.soundness_checks;
  report(rv.unsound + geo.unsound == 0, "observer soundness",
         fmt("%ld checked samples, %ld outside the error balls", checks, rv.unsound + geo.unsound));

  tube_oracle();
  expm_oracle();
  psi_soundness();

  long accepted = 0;
  for (const auto* mc : {&rv, &geo})
    for (const auto& m : mc->runs) accepted += m.meas_accepted;
  report(rv.lemma2_violations + geo.lemma2_violations == 0, "measurement monotonicity",
         fmt("%ld accepted measurements, %ld with h_hat increasing for some family", accepted,
             rv.lemma2_violations + geo.lemma2_violations));

  delta_r_dominance();
  qp_oracle();
  horizon_check();

  const int jumps = std::max(rv.max_jumps_per_instant, geo.max_jumps_per_instant);
  report(jumps <= kMaxJumpsPerInstant, "Zeno guard",
         fmt("max jumps at one instant %d (limit %d)", jumps, kMaxJumpsPerInstant));

  std::printf("%d criteria failed\n", failures);
  return failures;
}
