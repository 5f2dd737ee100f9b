#include <gtest/gtest.h>

#include "ritcbf/controller.hpp"

namespace ritcbf {
namespace {

const KeplerOrbit kTarget = KeplerOrbit::from_elements(7.0e6, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0, kMuEarth);

ControlContext impulsive_context() {
  ControlContext ctx;
  BarrierFamily z;
  z.kind = BarrierKind::ExclusionZone;
  z.center = kTarget;
  z.R_o = 200.0;
  z.name = "zone";
  ctx.families = {z};
  ctx.grav = {kMuEarth, 6.6e6};
  ctx.lip = {shell_lipschitz(kMuEarth, 6.6e6), 0.0};
  ctx.db = {1e-5, 0.05, 0.1};
  ctx.timing = {10.0, 120.0, 30.0, 300.0, 300.0};
  ctx.ctl.u_max = 2.0;
  ctx.ctl.psi_grid = 25.0;
  ctx.mode = ActuationMode::Impulsive;
  return ctx;
}

// Estimate offset along the target's velocity and closing on it.
EstimateState approaching(double along, double closing, UncertaintyBound rho = {5.0, 0.005}) {
  PlantState x = kTarget.at(0.0);
  const Vec3 t_hat = x.v.normalized();
  x.r -= along * t_hat;
  x.v += closing * t_hat;
  return {x, rho};
}

const Timers kReady{0.0, -1.0, 200.0};  // guaranteed opportunity

TEST(ImpulseProgram, FindsCertifiedImpulseOnCollisionCourse) {
  const ControlContext ctx = impulsive_context();
  const EstimateState est = approaching(600.0, 2.0);
  EXPECT_FALSE(coast_feasible(ctx, est, 0.0, 300.0).feasible);
  const ImpulsiveDecision d = impulse_program(ctx, est, 0.0, 300.0);
  ASSERT_TRUE(d.feasible);
  EXPECT_TRUE(d.b);
  EXPECT_LE(d.u.norm(), ctx.ctl.u_max * (1 + 1e-12));
  EXPECT_LE(impulse_objective(ctx, est, 0.0, 300.0, d.u), 0.0);

  const ImpulsiveDecision r = refine_fuel(ctx, est, 0.0, d);
  EXPECT_LE(r.u.norm(), d.u.norm());
  EXPECT_LE(impulse_objective(ctx, est, 0.0, 300.0, r.u), 0.0);
  EXPECT_GT(impulse_objective(ctx, est, 0.0, 300.0, 0.5 * r.u), 0.0);
}

TEST(ImpulseProgram, ZeroImpulseWhenCoastIsSafe) {
  const ControlContext ctx = impulsive_context();
  const EstimateState est = approaching(2000.0, -0.5);
  const ImpulsiveDecision d = impulse_program(ctx, est, 0.0, 300.0, true);
  EXPECT_TRUE(d.feasible);
  EXPECT_FALSE(d.b);
  EXPECT_EQ(d.evaluations, 1);
}

TEST(DecideImpulsive, CoastsOutsideGuaranteedOpportunity) {
  const ControlContext ctx = impulsive_context();
  ImpulsiveControllerState mem;
  for (Timers s : {Timers{3.0, -1.0, 200.0}, Timers{0.0, 50.0, 200.0}, Timers{0.0, -1.0, 20.0}}) {
    const DecisionTrace tr = decide_impulsive(ctx, approaching(600.0, 2.0), 0.0, s, mem);
    EXPECT_FALSE(tr.decision.b);
    EXPECT_FALSE(mem.fired_this_cycle);
  }
}

TEST(DecideImpulsive, WaitsWhileLaterWindowCovers) {
  const ControlContext ctx = impulsive_context();
  ImpulsiveControllerState mem;
  // Closest approach is ~250 s out; the next window still certifies it.
  const DecisionTrace tr = decide_impulsive(ctx, approaching(700.0, 2.0), 0.0, kReady, mem);
  EXPECT_FALSE(tr.decision.b);
  EXPECT_TRUE(tr.coast.feasible);
}

TEST(DecideImpulsive, FiresWhenLookaheadFails) {
  const ControlContext ctx = impulsive_context();
  ImpulsiveControllerState mem;
  const DecisionTrace tr = decide_impulsive(ctx, approaching(400.0, 2.0), 0.0, kReady, mem);
  EXPECT_FALSE(tr.safety_infeasible);
  EXPECT_TRUE(tr.decision.b);
  EXPECT_TRUE(mem.fired_this_cycle);
  EXPECT_LE(tr.decision.margin, 0.0);
}

TEST(DecideImpulsive, StaysQuietFarAway) {
  const ControlContext ctx = impulsive_context();
  ImpulsiveControllerState mem;
  const DecisionTrace tr = decide_impulsive(ctx, approaching(5000.0, -0.2), 0.0, kReady, mem);
  EXPECT_FALSE(tr.decision.b);
  EXPECT_TRUE(tr.coast.feasible);
  EXPECT_FALSE(tr.safety_infeasible);
}

TEST(DecideImpulsive, AlwaysActuateFiresOncePerCycle) {
  ControlContext ctx = impulsive_context();
  ctx.ctl.policy = ImpulsePolicy::AlwaysActuate;
  ctx.ctl.lookahead = false;
  ImpulsiveControllerState mem;
  const EstimateState est = approaching(5000.0, -0.2);
  EXPECT_TRUE(decide_impulsive(ctx, est, 0.0, kReady, mem).decision.b);
  EXPECT_FALSE(decide_impulsive(ctx, est, 0.0, kReady, mem).decision.b);
}

TEST(DecideImpulsive, ReportsInfeasibleWhenInsideZone) {
  const ControlContext ctx = impulsive_context();
  ImpulsiveControllerState mem;
  const DecisionTrace tr = decide_impulsive(ctx, approaching(150.0, 0.0), 0.0, kReady, mem);
  EXPECT_TRUE(tr.safety_infeasible);
  EXPECT_FALSE(tr.decision.feasible);
}

TEST(MultistartDirections, UnitVectors) {
  for (int dim : {2, 3}) {
    const auto dirs = detail::multistart_directions(dim, dim == 2 ? 16 : 40);
    EXPECT_EQ(dirs.size(), dim == 2 ? 16u : 40u);
    for (const Vec3& d : dirs) {
      EXPECT_NEAR(d.norm(), 1.0, 1e-12);
      if (dim == 2) {
        EXPECT_EQ(d.z(), 0.0);
      }
    }
  }
  EXPECT_EQ(detail::multistart_directions(3, 26).size(), 26u);
}

ControlContext continuous_context() {
  ControlContext ctx = impulsive_context();
  BarrierFamily face;
  face.kind = BarrierKind::Halfspace;
  face.center = kTarget;
  face.p = kTarget.at(0.0).v.normalized();
  face.rho_off = 1000.0;
  face.gamma = 100.0;
  face.name = "face";
  ctx.families = {face};
  ctx.mode = ActuationMode::Continuous;
  ctx.ctl.u_max = 5e-3;
  ctx.ctl.alpha_slope = 0.01;
  ctx.db = {1e-7, 0.01, 1e-4};
  return ctx;
}

TEST(CbfQp, RowsMatchBarrierGradient) {
  const ControlContext ctx = continuous_context();
  const EstimateState est = approaching(-500.0, 0.1, {2.0, 0.002});
  const QPProblem P = build_cbf_qp(ctx, est, 0.0);
  ASSERT_EQ(P.A.rows(), 1);
  const Vec3 g = ctx.families[0].gamma * ctx.families[0].p;
  for (int d = 0; d < 3; ++d) EXPECT_NEAR(P.A(0, d), g(d), 1e-12);
  EXPECT_DOUBLE_EQ(P.u_max, ctx.ctl.u_max);
  EXPECT_EQ(P.u_nom, Eigen::VectorXd::Zero(3));
}

TEST(CbfQp, FilterKeepsZeroInputWhenSlack) {
  const ControlContext ctx = continuous_context();
  const QPFilterResult r = qp_filter(ctx, approaching(2000.0, -0.05, {2.0, 0.002}), 0.0);
  EXPECT_TRUE(r.feasible);
  EXPECT_LT(r.u.norm(), 1e-12);
}

TEST(CbfQp, FilterBrakesNearFace) {
  const ControlContext ctx = continuous_context();
  const QPFilterResult r = qp_filter(ctx, approaching(-900.0, 0.8, {2.0, 0.002}), 0.0);
  ASSERT_TRUE(r.feasible);
  EXPECT_LT(r.u.dot(ctx.families[0].p), 0.0);
  EXPECT_LE(r.u.cwiseAbs().maxCoeff(), ctx.ctl.u_max * (1 + 1e-12));
  Eigen::VectorXd u(3);
  u << r.u(0), r.u(1), r.u(2);
  EXPECT_LE(qp_max_violation(r.problem, u), 1e-10);
}

TEST(CbfQp, LeastViolatingWhenBoxTooSmall) {
  ControlContext ctx = continuous_context();
  ctx.ctl.on_infeasible = InfeasiblePolicy::LeastViolating;
  const QPFilterResult r = qp_filter(ctx, approaching(-990.0, 3.0, {2.0, 0.002}), 0.0);
  EXPECT_FALSE(r.feasible);
  EXPECT_TRUE(r.relaxed);
  EXPECT_GT(r.slack, 0.0);
  EXPECT_NEAR(r.u.dot(ctx.families[0].p), -ctx.ctl.u_max * ctx.families[0].p.cwiseAbs().sum(), 1e-6);

  ctx.ctl.on_infeasible = InfeasiblePolicy::Abort;
  const QPFilterResult a = qp_filter(ctx, approaching(-990.0, 3.0, {2.0, 0.002}), 0.0);
  EXPECT_FALSE(a.feasible);
  EXPECT_FALSE(a.relaxed);
}

}  // namespace
}  // namespace ritcbf
