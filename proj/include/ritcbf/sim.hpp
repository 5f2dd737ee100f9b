#pragma once

// Hybrid executor. Flows run to exact event times (sample and measurement
// timestamps are kept as absolute times, never integrated); jumps at an
// instant are processed as Measure, then the controller sample, then Actuate,
// then SampleReset.

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ritcbf/scenario.hpp"

namespace ritcbf {

enum RecordFlag : std::uint32_t {
  kFlagUnsafe = 1u << 0,      // some true h > 0
  kFlagUnsound = 1u << 1,     // truth outside the estimate balls
  kFlagInfeasible = 1u << 2,  // safety filter found no certified input
  kFlagRejected = 1u << 3,    // measurement rejected by the filter
  kFlagRelaxed = 1u << 4,     // least-violating input applied
  kFlagHhatBelow = 1u << 5,   // h_hat < h for a sound estimate
};

struct RunRecord {
  HybridTime time;
  std::string event;  // flow | Measure | Actuate | SampleReset
  PlantState truth;
  EstimateState est;
  Timers sigma;
  bool b = false;
  Vec3 u = Vec3::Zero();
  std::vector<double> h, hhat;
  std::uint32_t flags = 0;
};

struct RunLog {
  int dim = 2;
  std::vector<std::string> family_names;
  std::vector<RunRecord> records;
};

enum class RunStatus { Safe, SafetyInfeasible, Violation };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Safe: return "safe";
    case RunStatus::SafetyInfeasible: return "safety_infeasible";
    case RunStatus::Violation: return "violation";
  }
  return "?";
}

struct RunMetrics {
  RunStatus status = RunStatus::Safe;
  bool aborted = false;
  std::string abort_reason;
  std::uint64_t seed = 0;
  double t_end = 0.0;
  std::vector<double> max_h;  // per family, true state, after the first jump
  double max_h_all = -std::numeric_limits<double>::infinity();
  double max_hhat_all = -std::numeric_limits<double>::infinity();
  long violations = 0;      // truth steps with some h > 0
  long unsound = 0;         // checked samples with truth outside the balls
  long soundness_checks = 0;
  long hhat_below_h = 0;
  long lemma2_violations = 0;
  long meas_accepted = 0;
  long meas_rejected = 0;
  long impulses = 0;
  double total_dv = 0.0;
  double control_effort = 0.0;  // integral of |u| dt in continuous mode
  double max_u_norm = 0.0;
  long infeasible_events = 0;
  long relaxed_steps = 0;
  int max_jumps_per_instant = 0;
  int min_impulses_per_cycle = std::numeric_limits<int>::max();
  int max_impulses_per_cycle = 0;
  long cycles = 0;
  double max_rho_r = 0.0;
  double max_rho_v = 0.0;
  double wall_time = 0.0;
};

struct RunOptions {
  bool keep_log = true;
  std::optional<double> duration;
};

namespace detail {

// Groups families that share a center orbit so each center is evaluated once per time.
struct CenterCache {
  std::vector<int> group;
  std::vector<const KeplerOrbit*> orbit;
  explicit CenterCache(const std::vector<BarrierFamily>& fams) {
    for (const auto& f : fams) {
      int g = -1;
      for (std::size_t k = 0; k < orbit.size(); ++k) {
        const auto a = orbit[k]->epoch_state(), b = f.center.epoch_state();
        if (orbit[k]->epoch() == f.center.epoch() && a.r == b.r && a.v == b.v) g = static_cast<int>(k);
      }
      if (g < 0) {
        g = static_cast<int>(orbit.size());
        orbit.push_back(&f.center);
      }
      group.push_back(g);
    }
  }
  std::vector<PlantState> centers(double t) const {
    std::vector<PlantState> c;
    c.reserve(orbit.size());
    for (const auto* o : orbit) c.push_back(o->at(t));
    return c;
  }
};

}  // namespace detail

/// Executes one seeded run of the scenario.
class Simulator {
 public:
  Simulator(const ScenarioConfig& cfg, std::uint64_t seed, RunOptions opt = {})
      : cfg_(cfg),
        ctx_(make_context(cfg)),
        cache_(ctx_.families),
        opt_(opt),
        dist_(cfg.dist_mode, seed * 2 + 1, cfg.dim, cfg.fixed_direction),
        station_(station_rho_max(cfg), cfg.meas.shrink_factor, cfg.dim, seed * 2 + 2),
        sched_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
    metrics_.seed = seed;
    log_.dim = cfg.dim;
    for (const auto& f : ctx_.families) log_.family_names.push_back(f.name);
    metrics_.max_h.assign(ctx_.families.size(), -std::numeric_limits<double>::infinity());
    if (auto v = validate_timing(cfg.timing)) throw Error(ErrorKind::kConfig, "timing violates " + v->inequality);
    truth_dt_ = cfg.integ.truth_dt > 0.0 ? cfg.integ.truth_dt : std::min(cfg.timing.T_s, 1.0) / 10.0;
  }

  void run() {
    const auto wall0 = std::chrono::steady_clock::now();
    const double t0 = cfg_.t0;
    const double t_end = t0 + opt_.duration.value_or(cfg_.duration);
    t_ = t0;
    x_ = chaser_initial_state(cfg_);
    next_sample_ = t0;
    sample_index_ = 0;
    next_meas_ = t0;
    t_act_ = t0 - 1e9;
    est_ = {x_, station_rho_max(cfg_)};
    try {
      while (true) {
        process_jumps();
        if (stopped_ || t_ >= t_end) break;
        const double te = std::min({next_sample_, next_meas_, t_end});
        flow_to(te);
        if (stopped_) break;
      }
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kZeno) throw;
      metrics_.aborted = true;
      metrics_.abort_reason = e.what();
      if (metrics_.status == RunStatus::Safe) metrics_.status = RunStatus::SafetyInfeasible;
    }
    metrics_.t_end = t_;
    if (metrics_.cycles > 0 && metrics_.min_impulses_per_cycle == std::numeric_limits<int>::max())
      metrics_.min_impulses_per_cycle = 0;
    if (metrics_.violations > 0) metrics_.status = RunStatus::Violation;
    metrics_.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  }

  const RunLog& log() const { return log_; }
  const RunMetrics& metrics() const { return metrics_; }

 private:
  Timers timers() const {
    return {next_sample_ - t_, std::min(ctx_.timing.T_a - (t_ - t_act_), ctx_.timing.T_a), next_meas_ - t_};
  }

  // Per-family true h and h_hat at the current instant; updates the safety metrics.
  void evaluate(const PlantState& x, const EstimateState& est, double t, std::vector<double>& h,
                std::vector<double>& hh) {
    const auto cs = cache_.centers(t);
    const std::size_t m = ctx_.families.size();
    h.resize(m);
    hh.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& f = ctx_.families[i];
      const PlantState& c = cs[cache_.group[i]];
      h[i] = h_eval_at(f, c, x, ctx_.grav).h;
      const auto l = lipschitz(f);
      hh[i] = h_eval_at(f, c, est.x_hat, ctx_.grav).h + l.l_hr * est.rho_hat.rho_r + l.l_hv * est.rho_hat.rho_v;
    }
  }

  // True-state check used at every truth step.
  bool truth_safe(const PlantState& x, double t) {
    const auto cs = cache_.centers(t);
    bool safe = true;
    for (std::size_t i = 0; i < ctx_.families.size(); ++i) {
      const double h = h_eval_at(ctx_.families[i], cs[cache_.group[i]], x, ctx_.grav).h;
      if (after_first_jump_) {
        metrics_.max_h[i] = std::max(metrics_.max_h[i], h);
        metrics_.max_h_all = std::max(metrics_.max_h_all, h);
      }
      if (h > 0.0) safe = false;
    }
    if (!safe && after_first_jump_) ++metrics_.violations;
    return safe;
  }

  void record(const std::string& event, bool b, const Vec3& u, std::uint32_t flags,
              const PlantState& x, const EstimateState& est, double t, std::int64_t j) {
    std::vector<double> h, hh;
    evaluate(x, est, t, h, hh);
    const bool sound = contains_truth(est, x);
    ++metrics_.soundness_checks;
    if (!sound) {
      flags |= kFlagUnsound;
      ++metrics_.unsound;
    }
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (h[i] > 0.0) flags |= kFlagUnsafe;
      if (sound && hh[i] < h[i]) {
        flags |= kFlagHhatBelow;
        ++metrics_.hhat_below_h;
      }
      metrics_.max_hhat_all = std::max(metrics_.max_hhat_all, hh[i]);
    }
    metrics_.max_rho_r = std::max(metrics_.max_rho_r, est.rho_hat.rho_r);
    metrics_.max_rho_v = std::max(metrics_.max_rho_v, est.rho_hat.rho_v);
    if (!opt_.keep_log) return;
    RunRecord r;
    r.time = {t, j};
    r.event = event;
    r.truth = x;
    r.est = est;
    r.sigma = {next_sample_ - t, std::min(ctx_.timing.T_a - (t - t_act_), ctx_.timing.T_a), next_meas_ - t};
    r.b = b;
    r.u = u;
    r.h = std::move(h);
    r.hhat = std::move(hh);
    r.flags = flags;
    log_.records.push_back(std::move(r));
  }

  void stop(RunStatus s, const std::string& why) {
    stopped_ = true;
    metrics_.status = s;
    metrics_.aborted = true;
    metrics_.abort_reason = why;
  }

  void measure() {
    const double sigma_next = cfg_.meas.pin_interval
                                  ? ctx_.timing.T_M
                                  : std::uniform_real_distribution<double>(ctx_.timing.T_L, ctx_.timing.T_M)(sched_rng_);
    const bool first = !after_first_jump_;
    const Measurement m = station_.measure(x_, first ? nullptr : &est_, sigma_next);
    std::uint32_t flags = 0;
    if (first) {
      est_ = {m.x_bar, m.rho_bar};
      ++metrics_.meas_accepted;
    } else {
      std::vector<double> h0, hh0, h1, hh1;
      evaluate(x_, est_, t_, h0, hh0);
      const MeasurementUpdate up = observer_measurement_jump(est_, m);
      if (up.accepted) {
        ++metrics_.meas_accepted;
        evaluate(x_, up.est, t_, h1, hh1);
        for (std::size_t i = 0; i < hh0.size(); ++i)
          if (hh1[i] > hh0[i]) ++metrics_.lemma2_violations;
      } else {
        ++metrics_.meas_rejected;
        flags |= kFlagRejected;
      }
      est_ = up.est;
    }
    if (!first) close_cycle();
    next_meas_ = t_ + m.sigma_m_next;
    after_first_jump_ = true;
    ++j_;
    record("Measure", false, Vec3::Zero(), flags, x_, est_, t_, j_);
  }

  void close_cycle() {
    ++metrics_.cycles;
    metrics_.min_impulses_per_cycle = std::min(metrics_.min_impulses_per_cycle, impulses_this_cycle_);
    metrics_.max_impulses_per_cycle = std::max(metrics_.max_impulses_per_cycle, impulses_this_cycle_);
    impulses_this_cycle_ = 0;
    mem_.fired_this_cycle = false;
  }

  void sample() {
    const Timers sig = timers();
    bool b = false;
    Vec3 u = Vec3::Zero();
    std::uint32_t flags = 0;
    if (ctx_.mode == ActuationMode::Impulsive) {
      const DecisionTrace tr = decide_impulsive(ctx_, est_, t_, sig, mem_);
      if (tr.safety_infeasible) {
        ++metrics_.infeasible_events;
        flags |= kFlagInfeasible;
        if (ctx_.ctl.on_infeasible == InfeasiblePolicy::Abort) {
          ++j_;
          record("SampleReset", false, Vec3::Zero(), flags, x_, est_, t_, j_);
          stop(RunStatus::SafetyInfeasible, "no certified impulse or coast at t = " + std::to_string(t_));
          return;
        }
        flags |= kFlagRelaxed;
        ++metrics_.relaxed_steps;
      }
      b = tr.decision.b && tr.decision.u.squaredNorm() > 0.0;
      u = b ? tr.decision.u : Vec3::Zero();
    } else {
      const QPFilterResult q = qp_filter(ctx_, est_, t_);
      if (!q.feasible) {
        ++metrics_.infeasible_events;
        flags |= kFlagInfeasible;
        if (ctx_.ctl.on_infeasible == InfeasiblePolicy::Abort) {
          ++j_;
          record("SampleReset", false, Vec3::Zero(), flags, x_, est_, t_, j_);
          stop(RunStatus::SafetyInfeasible, "QP infeasible at t = " + std::to_string(t_));
          return;
        }
        flags |= kFlagRelaxed;
        ++metrics_.relaxed_steps;
      }
      u_cont_ = q.u;
      metrics_.max_u_norm = std::max(metrics_.max_u_norm, u_cont_.norm());
    }
    const JumpSet labels = classify_jumps(b, sig, ctx_.timing);
    if (labels.contains(JumpLabel::Actuate)) {
      set_push();
      x_ = apply_impulse(x_, u, ctx_.db, ctx_.ctl.u_max, dist_);
      est_ = observer_actuation_jump(est_, u, ctx_.db);
      t_act_ = t_;
      ++metrics_.impulses;
      ++impulses_this_cycle_;
      metrics_.total_dv += u.norm();
      metrics_.max_u_norm = std::max(metrics_.max_u_norm, u.norm());
      ++j_;
      ++jumps_now_;
      record("Actuate", true, u, flags, x_, est_, t_, j_);
    }
    // Sample reset: sigma_s jumps back to T_s.
    ++sample_index_;
    next_sample_ = cfg_.t0 + sample_index_ * ctx_.timing.T_s;
    ++j_;
    record("SampleReset", b, ctx_.mode == ActuationMode::Continuous ? u_cont_ : u, flags, x_, est_, t_, j_);
  }

  void process_jumps() {
    jumps_now_ = 0;
    if (t_ == next_meas_) {
      measure();
      ++jumps_now_;
    }
    if (t_ == next_sample_) {
      sample();
      ++jumps_now_;
    }
    metrics_.max_jumps_per_instant = std::max(metrics_.max_jumps_per_instant, jumps_now_);
    if (jumps_now_ > 3) throw Error(ErrorKind::kZeno, "more than 3 jumps at t = " + std::to_string(t_));
    if (!stopped_) truth_safe(x_, t_);
  }

  void set_push() {
    if (dist_.mode() != DisturbanceMode::WorstCaseRadial) return;
    const auto cs = cache_.centers(t_);
    double worst = -std::numeric_limits<double>::infinity();
    Vec3 dir = Vec3::Zero();
    for (std::size_t i = 0; i < ctx_.families.size(); ++i) {
      const BarrierEval e = h_eval_at(ctx_.families[i], cs[cache_.group[i]], x_, ctx_.grav);
      if (e.h > worst) {
        worst = e.h;
        dir = e.grad_v.squaredNorm() > 0.0 ? e.grad_v : e.grad_r;
      }
    }
    dist_.set_push_direction(dir);
  }

  void flow_to(double te) {
    const double span = te - t_;
    if (span <= 0.0) {
      t_ = te;
      return;
    }
    const bool cont = ctx_.mode == ActuationMode::Continuous;
    const Vec3 u = cont ? u_cont_ : Vec3::Zero();
    const double w = ctx_.db.w_c + (cont ? ctx_.db.w_g(u.norm()) : 0.0);
    const int steps = std::max(1, static_cast<int>(std::ceil(span / truth_dt_ - 1e-9)));
    const double dt = span / steps;
    const EstimateState est0 = est_;
    const double ta = t_;
    const double cadence = cfg_.integ.log_every;
    double next_log = cadence > 0.0 ? cfg_.t0 + cadence * (std::floor((ta - cfg_.t0) / cadence) + 1.0) : te;
    set_push();
    for (int k = 1; k <= steps; ++k) {
      const double tk = k == steps ? te : ta + span * k / steps;
      x_ = true_flow_step(x_, u, w, dist_, dt, ctx_.grav);
      truth_safe(x_, tk);
      if (cadence > 0.0 && tk >= next_log && tk < te) {
        const EstimateState ek = observer_flow_step(est0, ta, tk - ta, ctx_.lip, ctx_.db, ctx_.mode, u,
                                                    ctx_.grav, ctx_.pred);
        record("flow", false, u, 0, x_, ek, tk, j_);
        while (next_log <= tk) next_log += cadence;
      }
    }
    if (cont) metrics_.control_effort += u.norm() * span;
    est_ = observer_flow_step(est0, ta, span, ctx_.lip, ctx_.db, ctx_.mode, u, ctx_.grav, ctx_.pred);
    t_ = te;
    // Soundness at the end of every flow interval.
    ++metrics_.soundness_checks;
    if (!contains_truth(est_, x_)) ++metrics_.unsound;
  }

  ScenarioConfig cfg_;
  ControlContext ctx_;
  detail::CenterCache cache_;
  RunOptions opt_;
  DisturbanceGenerator dist_;
  GroundStation station_;
  std::mt19937_64 sched_rng_;
  RunLog log_;
  RunMetrics metrics_;
  ImpulsiveControllerState mem_;

  double truth_dt_ = 0.1;
  double t_ = 0.0;
  std::int64_t j_ = 0;
  PlantState x_;
  EstimateState est_;
  Vec3 u_cont_ = Vec3::Zero();
  double next_sample_ = 0.0, next_meas_ = 0.0, t_act_ = 0.0;
  std::int64_t sample_index_ = 0;
  bool after_first_jump_ = false;
  bool stopped_ = false;
  int jumps_now_ = 0;
  int impulses_this_cycle_ = 0;
};

struct RunResult {
  RunLog log;
  RunMetrics metrics;
};

inline RunResult run_scenario(const ScenarioConfig& cfg, std::uint64_t seed, RunOptions opt = {}) {
  Simulator sim(cfg, seed, opt);
  sim.run();
  return {sim.log(), sim.metrics()};
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloReport {
  std::vector<RunMetrics> runs;
  long violations = 0;
  long unsound = 0;
  long lemma2_violations = 0;
  long hhat_below_h = 0;
  long infeasible_events = 0;
  long aborted_runs = 0;
  int max_jumps_per_instant = 0;
  double max_h = -std::numeric_limits<double>::infinity();
  double max_u_norm = 0.0;
  double dv_p50 = 0.0, dv_p95 = 0.0, dv_max = 0.0;
  double wall_time = 0.0;
};

inline MonteCarloReport monte_carlo(const ScenarioConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw Error(ErrorKind::kConfig, "monte carlo needs at least one run");
  const auto wall0 = std::chrono::steady_clock::now();
  MonteCarloReport rep;
  rep.runs.resize(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), [&](int i) {
    try {
      rep.runs[i] = run_scenario(cfg, seeds[i], {false, std::nullopt}).metrics;
    } catch (const Error& e) {
      throw Error(e.kind(), "run " + std::to_string(i) + " (seed " + std::to_string(seeds[i]) + "): " + e.what());
    }
  });
  std::vector<double> dv;
  for (const auto& m : rep.runs) {
    rep.violations += m.violations;
    rep.unsound += m.unsound;
    rep.lemma2_violations += m.lemma2_violations;
    rep.hhat_below_h += m.hhat_below_h;
    rep.infeasible_events += m.infeasible_events;
    rep.aborted_runs += m.aborted ? 1 : 0;
    rep.max_jumps_per_instant = std::max(rep.max_jumps_per_instant, m.max_jumps_per_instant);
    rep.max_h = std::max(rep.max_h, m.max_h_all);
    rep.max_u_norm = std::max(rep.max_u_norm, m.max_u_norm);
    dv.push_back(m.total_dv);
  }
  std::sort(dv.begin(), dv.end());
  auto pct = [&](double p) { return dv[static_cast<std::size_t>(std::round(p * (dv.size() - 1)))]; };
  rep.dv_p50 = pct(0.5);
  rep.dv_p95 = pct(0.95);
  rep.dv_max = dv.back();
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return rep;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, int n) {
  std::vector<std::uint64_t> s(n);
  for (int i = 0; i < n; ++i) s[i] = first + i;
  return s;
}

// ---------------------------------------------------------------------------
// Output

inline void write_csv(std::ostream& os, const RunLog& log) {
  const int n = log.dim;
  const char* ax = "xyz";
  os << "t,j,event";
  for (const char* p : {"r", "v", "r_hat", "v_hat"})
    for (int i = 0; i < n; ++i) os << ',' << p << '_' << ax[i];
  os << ",rho_r,rho_v,sigma_s,sigma_a,sigma_m,b";
  for (int i = 0; i < n; ++i) os << ",u_" << ax[i];
  for (const auto& f : log.family_names) os << ",h_" << f;
  for (const auto& f : log.family_names) os << ",hhat_" << f;
  os << ",flags\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : log.records) {
    line.str("");
    line << r.time.t << ',' << r.time.j << ',' << r.event;
    for (const Vec3* v : {&r.truth.r, &r.truth.v, &r.est.x_hat.r, &r.est.x_hat.v})
      for (int i = 0; i < n; ++i) line << ',' << (*v)(i);
    line << ',' << r.est.rho_hat.rho_r << ',' << r.est.rho_hat.rho_v << ',' << r.sigma.sigma_s << ','
         << r.sigma.sigma_a << ',' << r.sigma.sigma_m << ',' << (r.b ? 1 : 0);
    for (int i = 0; i < n; ++i) line << ',' << r.u(i);
    for (double h : r.h) line << ',' << h;
    for (double h : r.hhat) line << ',' << h;
    line << ',' << r.flags << '\n';
    os << line.str();
  }
}

inline json metrics_json(const RunMetrics& m) {
  json j = {
      {"status", to_string(m.status)},
      {"aborted", m.aborted},
      {"abort_reason", m.abort_reason},
      {"seed", m.seed},
      {"t_end", m.t_end},
      {"max_h", m.max_h},
      {"max_h_all", m.max_h_all},
      {"max_hhat_all", m.max_hhat_all},
      {"violations", m.violations},
      {"unsound", m.unsound},
      {"soundness_checks", m.soundness_checks},
      {"hhat_below_h", m.hhat_below_h},
      {"lemma2_violations", m.lemma2_violations},
      {"measurements_accepted", m.meas_accepted},
      {"measurements_rejected", m.meas_rejected},
      {"impulses", m.impulses},
      {"total_dv", m.total_dv},
      {"control_effort", m.control_effort},
      {"max_u_norm", m.max_u_norm},
      {"infeasible_events", m.infeasible_events},
      {"relaxed_steps", m.relaxed_steps},
      {"max_jumps_per_instant", m.max_jumps_per_instant},
      {"cycles", m.cycles},
      {"min_impulses_per_cycle", m.cycles > 0 ? m.min_impulses_per_cycle : 0},
      {"max_impulses_per_cycle", m.max_impulses_per_cycle},
      {"max_rho_r", m.max_rho_r},
      {"max_rho_v", m.max_rho_v},
      {"wall_time", m.wall_time},
  };
  // Infinite maxima (no samples) serialize as null.
  for (auto& [k, v] : j.items())
    if (v.is_number_float() && !std::isfinite(v.get<double>())) v = nullptr;
  return j;
}

inline json verify_report_json(const VerifyReport& r, const std::string& kind) {
  json j = {
      {"kind", kind},
      {"verified", r.verified},
      {"verified_at_resolution", r.verified},
      {"T_M", r.T_M},
      {"worst_margin", r.worst_margin},
      {"samples_total", r.samples_total},
      {"samples_in_domain", r.samples_in_domain},
      {"failing_samples", r.failing},
      {"rho_bound", {{"rho_r", r.rho_bound.rho_r}, {"rho_v", r.rho_bound.rho_v}}},
      {"sampler", {{"kind", "halton"}, {"count", r.sampling.samples}, {"seed", r.sampling.seed},
                   {"pos_radius", r.sampling.pos_radius}, {"vel_radius", r.sampling.vel_radius}}},
  };
  if (r.witness) {
    const auto& w = *r.witness;
    j["witness"] = {{"t", r.witness_t},
                    {"r_hat", {w.x_hat.r.x(), w.x_hat.r.y(), w.x_hat.r.z()}},
                    {"v_hat", {w.x_hat.v.x(), w.x_hat.v.y(), w.x_hat.v.z()}},
                    {"rho_hat", {w.rho_hat.rho_r, w.rho_hat.rho_v}},
                    {"u", {r.witness_u.x(), r.witness_u.y(), r.witness_u.z()}}};
  }
  if (r.sampling.rho_cap)
    j["sampler"]["rho_cap"] = {r.sampling.rho_cap->rho_r, r.sampling.rho_cap->rho_v};
  if (!std::isfinite(r.worst_margin)) j["worst_margin"] = nullptr;
  return j;
}

}  // namespace ritcbf
