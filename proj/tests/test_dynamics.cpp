#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ritcbf/dynamics.hpp"

namespace ritcbf {
namespace {

TEST(KeplerOrbit, MatchesPlanarOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> a_d(6.8e6, 4.5e7), e_d(0.0, 0.7), ang(0.0, 2 * M_PI),
      t_d(-2e5, 2e5);
  for (int k = 0; k < 200; ++k) {
    const oracle::KeplerPlanar ref{kMuEarth, a_d(rng), e_d(rng), ang(rng), ang(rng)};
    const KeplerOrbit orb = KeplerOrbit::from_elements(ref.a, ref.e, 0.0, 0.0, ref.omega, ref.M0, 0.0, kMuEarth);
    for (int j = 0; j < 5; ++j) {
      const double t = t_d(rng);
      double r[2], v[2];
      ref.at(t, r, v);
      const PlantState x = orb.at(t);
      const double rn = std::hypot(r[0], r[1]), vn = std::hypot(v[0], v[1]);
      EXPECT_NEAR(x.r.x(), r[0], 1e-8 * rn);
      EXPECT_NEAR(x.r.y(), r[1], 1e-8 * rn);
      EXPECT_NEAR(x.v.x(), v[0], 1e-8 * vn);
      EXPECT_NEAR(x.v.y(), v[1], 1e-8 * vn);
      EXPECT_EQ(x.r.z(), 0.0);
    }
  }
}

TEST(KeplerOrbit, EpochAndPeriod) {
  const KeplerOrbit orb = KeplerOrbit::from_elements(7.0e6, 0.1, 0.5, 1.0, 2.0, 0.3, 100.0, kMuEarth);
  const PlantState x0 = orb.at(100.0), x1 = orb.at(100.0 + orb.period());
  EXPECT_LT((x0.r - orb.epoch_state().r).norm(), 1e-6);
  EXPECT_LT((x1.r - x0.r).norm(), 1e-5);
  EXPECT_LT((x1.v - x0.v).norm(), 1e-8);
  EXPECT_NEAR(orb.period(), 2 * M_PI * std::sqrt(std::pow(7.0e6, 3) / kMuEarth), 1e-6);
}

TEST(KeplerOrbit, RejectsHyperbolic) {
  const PlantState x{Vec3(7e6, 0, 0), Vec3(0, 12e3, 0)};
  EXPECT_THROW(KeplerOrbit(x, 0.0, kMuEarth), Error);
}

TEST(Integrator, AgreesWithClosedForm) {
  const KeplerOrbit orb = KeplerOrbit::from_elements(6.9e6, 0.01, 0.9, 0.2, 0.4, 0.0, 0.0, kMuEarth);
  const GravityModel g{kMuEarth, 6.6e6};
  const double T = orb.period();
  const PlantState x = integrate_rk45(orb.at(0.0), 0.0, T, Vec3::Zero(), g);
  EXPECT_LT((x.r - orb.at(T).r).norm(), 1e-2);
  EXPECT_LT((x.v - orb.at(T).v).norm(), 1e-5);
}

TEST(Integrator, ConservesEnergyAndMomentum) {
  const KeplerOrbit orb = KeplerOrbit::from_elements(4.2164e7, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, kMuEarth);
  const GravityModel g{kMuEarth, 4.2e7};
  auto energy = [](const PlantState& x) { return 0.5 * x.v.squaredNorm() - kMuEarth / x.r.norm(); };
  const PlantState x0 = orb.at(0.0);
  const PlantState x1 = integrate_rk45(x0, 0.0, 86400.0, Vec3::Zero(), g);
  EXPECT_NEAR(energy(x1), energy(x0), 1e-8 * std::abs(energy(x0)));
  EXPECT_NEAR(x1.r.cross(x1.v).norm(), x0.r.cross(x0.v).norm(), 1e-8 * x0.r.cross(x0.v).norm());
}

TEST(Integrator, ConstantAccelerationShiftsState) {
  // Far from the attractor the field is negligible and the drift is ballistic.
  const GravityModel g{1e-6, 1.0};
  const PlantState x0{Vec3(1e9, 0, 0), Vec3(1, 2, 3)};
  const Vec3 a(0.01, -0.02, 0.0);
  const PlantState x = integrate_rk45(x0, 0.0, 100.0, a, g);
  const Vec3 expect = x0.r + 100.0 * x0.v + 0.5 * 1e4 * a;
  EXPECT_LT((x.r - expect).norm(), 1e-6);
}

TEST(Integrator, RejectsBackwardsAndSingularity) {
  const GravityModel g{kMuEarth, 6.6e6};
  const PlantState x{Vec3(7e6, 0, 0), Vec3(0, 7.5e3, 0)};
  EXPECT_THROW(integrate_rk45(x, 10.0, 0.0, Vec3::Zero(), g), Error);
  EXPECT_THROW(rk4_step(x, Vec3::Zero(), 0.0, g), Error);
  EXPECT_THROW(nominal_accel(Vec3(6.5e6, 0, 0), kMuEarth, 6.6e6), Error);
}

TEST(ShellLipschitz, BoundsJacobianNorm) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd(0, 1);
  std::uniform_real_distribution<double> rad(6.9e6, 5e7);
  const double rmin = 6.9e6;
  const double L = shell_lipschitz(kMuEarth, rmin);
  for (int k = 0; k < 500; ++k) {
    const Vec3 r = rad(rng) * Vec3(nd(rng), nd(rng), nd(rng)).normalized();
    const Vec3 d = Vec3(nd(rng), nd(rng), nd(rng)).normalized();
    const double h = 1e-3 * r.norm();
    Vec3 r2 = r + h * d;
    if (r2.norm() < rmin) r2 = r - h * d;
    const double ratio = (nominal_accel(r2, kMuEarth, rmin) - nominal_accel(r, kMuEarth, rmin)).norm() /
                         (r2 - r).norm();
    EXPECT_LE(ratio, L * (1.0 + 1e-9));
  }
  // Radial direction at the inner radius attains the bound.
  const Vec3 r(rmin, 0, 0);
  const double hr = 1e-3;
  const double radial = (nominal_accel(r + Vec3(hr, 0, 0), kMuEarth, rmin) - nominal_accel(r, kMuEarth, rmin)).norm() / hr;
  EXPECT_NEAR(radial, L, 1e-6 * L);
}

TEST(Disturbance, StaysInsideRadius) {
  for (auto mode : {DisturbanceMode::RandomBall, DisturbanceMode::WorstCaseRadial, DisturbanceMode::FixedDirection}) {
    for (int dim : {2, 3}) {
      DisturbanceGenerator gen(mode, 9, dim, Vec3(1, 1, 0));
      gen.set_push_direction(Vec3(0, 3, 0));
      for (int i = 0; i < 200; ++i) {
        const Vec3 d = gen.flow(0.5);
        EXPECT_LE(d.norm(), 0.5 * (1.0 + 1e-12));
        if (dim == 2 && mode == DisturbanceMode::RandomBall) {
          EXPECT_EQ(d.z(), 0.0);
        }
      }
    }
  }
  DisturbanceGenerator none(DisturbanceMode::None, 1, 3);
  EXPECT_EQ(none.flow(1.0), Vec3::Zero());
}

TEST(Disturbance, ModeNamesRoundTrip) {
  for (auto m : {DisturbanceMode::None, DisturbanceMode::RandomBall, DisturbanceMode::WorstCaseRadial,
                 DisturbanceMode::FixedDirection})
    EXPECT_EQ(disturbance_mode_from_string(to_string(m)), m);
  EXPECT_THROW(disturbance_mode_from_string("gusty"), Error);
}

TEST(Impulse, RespectsLimitAndActuationError) {
  DisturbanceBounds db;
  db.w_g_slope = 0.1;
  db.w_g_cap = 1.0;
  DisturbanceGenerator gen(DisturbanceMode::RandomBall, 4, 3);
  const PlantState x{Vec3(7e6, 0, 0), Vec3(0, 7.5e3, 0)};
  const Vec3 u(1.0, 0.5, 0.0);
  for (int i = 0; i < 100; ++i) {
    const PlantState y = apply_impulse(x, u, db, 2.0, gen);
    EXPECT_EQ(y.r, x.r);
    EXPECT_LE((y.v - x.v - u).norm(), db.w_g(u.norm()) * (1.0 + 1e-12));
  }
  EXPECT_THROW(apply_impulse(x, Vec3(3, 0, 0), db, 2.0, gen), Error);
}

}  // namespace
}  // namespace ritcbf
