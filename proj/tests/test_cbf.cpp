#include <gtest/gtest.h>

#include <random>

#include "ritcbf/cbf.hpp"

namespace ritcbf {
namespace {

const GravityModel kG{kMuEarth, 6.6e6};

KeplerOrbit target() { return KeplerOrbit::from_elements(7.0e6, 0.001, 0.9, 0.1, 0.2, 0.0, 0.0, kMuEarth); }

BarrierFamily zone(double R_o) {
  BarrierFamily f;
  f.kind = BarrierKind::ExclusionZone;
  f.center = target();
  f.R_o = R_o;
  f.name = "zone";
  return f;
}

BarrierFamily face(double gamma) {
  BarrierFamily f;
  f.kind = BarrierKind::Halfspace;
  f.center = target();
  f.p = Vec3(0.3, -0.5, 0.8).normalized();
  f.rho_off = 500.0;
  f.gamma = gamma;
  f.name = "face";
  return f;
}

PlantState offset_state(const KeplerOrbit& o, double t, const Vec3& dr, const Vec3& dv) {
  PlantState x = o.at(t);
  x.r += dr;
  x.v += dv;
  return x;
}

TEST(Barrier, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0, 1);
  for (const BarrierFamily& f : {zone(200.0), face(120.0)}) {
    for (int k = 0; k < 50; ++k) {
      const double t = 500.0 * k;
      const Vec3 dir = Vec3(nd(rng), nd(rng), nd(rng)).normalized();
      const PlantState x = offset_state(f.center, t, (300.0 + 200.0 * std::abs(nd(rng))) * dir,
                                        0.2 * Vec3(nd(rng), nd(rng), nd(rng)));
      const BarrierEval e = h_eval(f, t, x, kG);
      for (int i = 0; i < 3; ++i) {
        const double hr = 1e-3, hv = 1e-6;
        PlantState xp = x, xm = x;
        xp.r(i) += hr;
        xm.r(i) -= hr;
        EXPECT_NEAR(e.grad_r(i), (h_eval(f, t, xp, kG).h - h_eval(f, t, xm, kG).h) / (2 * hr), 1e-6);
        xp = x;
        xm = x;
        xp.v(i) += hv;
        xm.v(i) -= hv;
        EXPECT_NEAR(e.grad_v(i), (h_eval(f, t, xp, kG).h - h_eval(f, t, xm, kG).h) / (2 * hv),
                    1e-5 * (1.0 + f.gamma));
      }
      const double ht = 1e-5;
      const double dt_fd = (h_eval(f, t + ht, x, kG).h - h_eval(f, t - ht, x, kG).h) / (2 * ht);
      EXPECT_NEAR(e.dh_dt_explicit, dt_fd, (1e-3 + 1e-6 * std::abs(dt_fd)) * (1.0 + f.gamma));
    }
  }
}

TEST(Barrier, SignConventions) {
  const BarrierFamily z = zone(200.0);
  EXPECT_GT(h_eval(z, 0.0, offset_state(z.center, 0.0, Vec3(100, 0, 0), Vec3::Zero()), kG).h, 0.0);
  EXPECT_LT(h_eval(z, 0.0, offset_state(z.center, 0.0, Vec3(300, 0, 0), Vec3::Zero()), kG).h, 0.0);
  EXPECT_THROW(h_eval(z, 0.0, z.center.at(0.0), kG), Error);
  const BarrierFamily f = face(0.0);
  EXPECT_NEAR(h_eval(f, 10.0, f.center.at(10.0), kG).h, -500.0, 1e-6);
}

TEST(Barrier, EstimateBoundCoversBall) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0, 1);
  for (const BarrierFamily& f : {zone(200.0), face(60.0)}) {
    const EstimateState est{offset_state(f.center, 0.0, Vec3(400, 100, 0), Vec3(0.1, 0, 0)), {80.0, 0.05}};
    const double bound = h_hat(f, 0.0, est, kG);
    for (int k = 0; k < 1000; ++k) {
      PlantState x = est.x_hat;
      x.r += 80.0 * Vec3(nd(rng), nd(rng), nd(rng)).normalized();
      x.v += 0.05 * Vec3(nd(rng), nd(rng), nd(rng)).normalized();
      EXPECT_LE(h_eval(f, 0.0, x, kG).h, bound + 1e-9);
    }
  }
}

TEST(PathSlope, MatchesNumericalDerivative) {
  const BarrierFamily f = face(80.0);
  const PlantState x0 = offset_state(f.center, 0.0, Vec3(900, -300, 50), Vec3(0.3, 0.1, -0.2));
  const std::vector<double> s = {99.99, 100.0, 100.01};
  const auto xs = predict_path(s, 0.0, x0, kG);
  const auto node = detail::h_node(f, 100.0, xs[1], Vec3::Zero(), kG);
  const double fd = (h_eval(f, s[2], xs[2], kG).h - h_eval(f, s[0], xs[0], kG).h) / 0.02;
  EXPECT_NEAR(node.hdot, fd, 1e-5 * (1.0 + std::abs(fd)));
}

// The certified bound must dominate a dense sampling of the same quantity.
TEST(TubeBound, DominatesDenseMaximum) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0, 1);
  std::uniform_real_distribution<double> u01(0, 1);
  const LipschitzPair lip{shell_lipschitz(kMuEarth, kG.r_min), 0.0};
  int tight = 0;
  for (int k = 0; k < 120; ++k) {
    const BarrierFamily f = k % 2 ? zone(200.0) : face(100.0 * u01(rng));
    const double t = 3000.0 * u01(rng);
    const PlantState x = offset_state(f.center, t, 1500.0 * u01(rng) * Vec3(nd(rng), nd(rng), nd(rng)).normalized(),
                                      2.0 * u01(rng) * Vec3(nd(rng), nd(rng), nd(rng)).normalized());
    const double horizon = 30.0 + 600.0 * u01(rng);
    const double grid = 5.0 + 40.0 * u01(rng);
    const UncertaintyBound rho = k % 3 ? UncertaintyBound{20.0 * u01(rng), 0.02 * u01(rng)} : UncertaintyBound{};
    const double w = k % 3 ? 1e-5 : 0.0;
    const PredictedPath P = predict_grid(t, t + horizon, x, grid, kG);
    const double bound = tube_bound(f, P, rho, lip, w, kG);
    const auto l = lipschitz(f);
    const int n = 2000;
    std::vector<double> dense_s(n + 1);
    for (int i = 0; i <= n; ++i) dense_s[i] = t + horizon * i / n;
    const auto dense_x = predict_path(dense_s, t, x, kG);
    double mx = -1e300;
    for (int i = 0; i <= n; ++i) {
      const auto q = propagate_q(dense_s[i] - t, rho, lip, w);
      mx = std::max(mx, h_eval(f, dense_s[i], dense_x[i], kG).h + l.l_hr * q.rho_r + l.l_hv * q.rho_v);
    }
    EXPECT_GE(bound, mx) << "draw " << k;
    tight += bound - mx < 5.0;
  }
  EXPECT_GT(tight, 60);  // the bound is not trivially loose
}

TEST(TubeBound, MonotoneInRadius) {
  const BarrierFamily f = zone(200.0);
  const LipschitzPair lip{shell_lipschitz(kMuEarth, kG.r_min), 0.0};
  const PredictedPath P = predict_grid(0.0, 300.0, offset_state(f.center, 0.0, Vec3(500, 0, 0), Vec3(-1, 0, 0)), 20.0, kG);
  double prev = -1e300;
  for (double r : {0.0, 1.0, 5.0, 20.0, 80.0}) {
    const double b = tube_bound(f, P, {r, 0.01 * r}, lip, 1e-5, kG);
    EXPECT_GE(b, prev);
    prev = b;
  }
  EXPECT_LE(tube_bound(f, P, {10.0, 0.01}, lip, 1e-5, kG),
            decoupled_bound(f, P, {10.0, 0.01}, lip, 1e-5, kG) + 1e-9);
}

TEST(PsiH, EqualsZeroRadiusTube) {
  const BarrierFamily f = face(30.0);
  const PlantState x = offset_state(f.center, 0.0, Vec3(100, 200, 300), Vec3(0.1, 0.2, 0.0));
  const PredictedPath P = predict_grid(0.0, 250.0, x, 25.0, kG);
  EXPECT_DOUBLE_EQ(psi_h(f, P, kG), tube_bound(f, P, {}, {}, 0.0, kG));
  EXPECT_DOUBLE_EQ(psi_h(f, 250.0, 0.0, x, 25.0, kG), psi_h(f, P, kG));
  EXPECT_EQ(P.s.size(), 11u);
  EXPECT_DOUBLE_EQ(P.t1(), 250.0);
}

}  // namespace
}  // namespace ritcbf
