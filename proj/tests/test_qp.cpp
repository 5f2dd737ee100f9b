#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ritcbf/controller.hpp"

namespace ritcbf {
namespace {

QPProblem make(int n, std::initializer_list<std::initializer_list<double>> rows, std::initializer_list<double> c,
               std::initializer_list<double> u0, double u_max = std::numeric_limits<double>::infinity()) {
  QPProblem P;
  P.A.resize(static_cast<int>(rows.size()), n);
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) P.A(i, j++) = v;
    ++i;
  }
  P.c = Eigen::Map<const Eigen::VectorXd>(c.begin(), static_cast<int>(c.size()));
  P.u_nom = Eigen::Map<const Eigen::VectorXd>(u0.begin(), n);
  P.u_max = u_max;
  return P;
}

TEST(SolveQp, UnconstrainedReturnsNominal) {
  QPProblem P;
  P.A.resize(0, 3);
  P.c.resize(0);
  P.u_nom = Eigen::Vector3d(1, -2, 3);
  const QPResult r = solve_qp(P);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.u, P.u_nom);
  EXPECT_TRUE(r.active.empty());
}

TEST(SolveQp, ProjectsOntoHalfplane) {
  const QPResult r = solve_qp(make(2, {{1, 1}}, {1}, {2, 2}));
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.u(0), 0.5, 1e-12);
  EXPECT_NEAR(r.u(1), 0.5, 1e-12);
}

TEST(SolveQp, BoxClipsEachAxis) {
  const QPResult r = solve_qp(make(2, {}, {}, {5, -0.5}, 1.0));
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.u(0), 1.0, 1e-12);
  EXPECT_NEAR(r.u(1), -0.5, 1e-12);
}

TEST(SolveQp, DetectsContradiction) {
  EXPECT_FALSE(solve_qp(make(1, {{1}, {-1}}, {-1, -1}, {0})).feasible);
  EXPECT_FALSE(solve_qp(make(2, {{1, 0}}, {-3}, {0, 0}, 2.0)).feasible);
  QPProblem neg = make(1, {}, {}, {0}, -1.0);
  EXPECT_FALSE(solve_qp(neg).feasible);
}

// Two nearly antiparallel rows plus a third that cuts off their far wedge.
TEST(SolveQp, NearParallelRowsInfeasible) {
  const QPProblem P = make(2,
                           {{0.60697332441190943, -0.72092898583925913},
                            {0.0024251711051396382, 0.53769983573821734},
                            {-0.011768475719159606, -2.1888361508153529}},
                           {-0.43702218690893146, -0.70794231261158902, -1.4100706283595035},
                           {-1.0016829525925079, 0.77499139236479053});
  EXPECT_FALSE(solve_qp(P).feasible);
}

TEST(SolveQp, NearParallelRowsFeasibleFarAway) {
  const QPProblem P = make(2, {{0.7115658173801207, 0.22453086355630625}, {-0.6135930887418356, -0.19385565127844459}},
                           {-1.8781809778171481, 0.014444007794963579}, {-0.85394224725753121, 1.4518069034271763});
  const QPResult r = solve_qp(P);
  ASSERT_TRUE(r.feasible);
  EXPECT_LE(qp_max_violation(P, r.u), 1e-9 * (1.0 + r.u.norm()));
}

TEST(SolveQp, DimensionMismatchThrows) {
  QPProblem P = make(2, {{1, 1}}, {1}, {0, 0});
  P.u_nom = Eigen::Vector3d::Zero();
  EXPECT_THROW(solve_qp(P), Error);
}

TEST(SolveQp, AgreesWithEnumeration) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd(0, 1);
  std::uniform_int_distribution<int> dim_d(1, 3), rows_d(0, 6);
  int infeasible = 0;
  for (int k = 0; k < 2000; ++k) {
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
    const bool ok = oracle::qp_bruteforce(n, A, c, u0, best);
    const QPResult r = solve_qp(P);
    ASSERT_EQ(r.feasible, ok) << "problem " << k;
    if (!ok) {
      ++infeasible;
      continue;
    }
    double bn = 0.0;
    for (double b : best) bn += b * b;
    for (int j = 0; j < n; ++j) EXPECT_NEAR(r.u(j), best[j], 1e-8 * (1.0 + std::sqrt(bn)));
  }
  EXPECT_GT(infeasible, 100);
}

TEST(SolveQp, SatisfiesKkt) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> nd(0, 1);
  for (int k = 0; k < 500; ++k) {
    QPProblem P;
    P.A.resize(4, 3);
    P.c.resize(4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 3; ++j) P.A(i, j) = nd(rng);
      P.c(i) = 0.5 + std::abs(nd(rng));  // origin strictly feasible
    }
    P.u_nom = 3.0 * Eigen::Vector3d(nd(rng), nd(rng), nd(rng));
    P.u_max = 2.0;
    const QPResult r = solve_qp(P);
    ASSERT_TRUE(r.feasible);
    EXPECT_LE(qp_max_violation(P, r.u), 1e-10);
    // Stationarity: u_nom - u lies in the cone of the active normals.
    Eigen::MatrixXd N;
    Eigen::VectorXd b;
    detail::stacked_rows(P, N, b);
    Eigen::MatrixXd Na(3, r.active.size());
    for (std::size_t j = 0; j < r.active.size(); ++j) Na.col(j) = N.row(r.active[j]).transpose();
    const Eigen::VectorXd g = P.u_nom - r.u;
    if (r.active.empty()) {
      EXPECT_LT(g.norm(), 1e-10);
      continue;
    }
    const Eigen::VectorXd lam = Na.colPivHouseholderQr().solve(g);
    EXPECT_LT((Na * lam - g).norm(), 1e-8 * (1.0 + g.norm()));
    for (int j = 0; j < lam.size(); ++j) EXPECT_GE(lam(j), -1e-9);
  }
}

TEST(SolveRelaxed, ZeroSlackWhenFeasible) {
  const QPProblem P = make(2, {{1, 0}}, {0.5}, {0, 0}, 1.0);
  double slack = -1.0;
  const QPResult r = solve_relaxed(P, 1e6, slack);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(slack, 0.0, 1e-12);
  EXPECT_LT(r.u.norm(), 1e-12);
}

TEST(SolveRelaxed, SaturatesAndReportsSlack) {
  // a.u <= -3 with |u_i| <= 1 needs a slack of at least 1.
  const QPProblem P = make(2, {{1, 1}}, {-3}, {0, 0}, 1.0);
  ASSERT_FALSE(solve_qp(P).feasible);
  double slack = 0.0;
  const QPResult r = solve_relaxed(P, 1e6, slack);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.u(0), -1.0, 1e-5);
  EXPECT_NEAR(r.u(1), -1.0, 1e-5);
  EXPECT_NEAR(slack, 1.0, 1e-5);
}

}  // namespace
}  // namespace ritcbf
