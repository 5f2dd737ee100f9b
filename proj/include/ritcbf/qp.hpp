#pragma once

// Small dense projection QP:  min |u - u_nom|^2  s.t.  A u <= c,  |u_i| <= u_max.
// Dual active-set iteration (Goldfarb-Idnani with identity Hessian). Starts from
// the unconstrained minimizer, adds the most violated constraint each round and
// drops constraints whose multiplier would turn negative. A violated constraint
// that cannot be added with a finite step certifies infeasibility.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ritcbf/core.hpp"

namespace ritcbf {

struct QPProblem {
  Eigen::MatrixXd A;  // m x n
  Eigen::VectorXd c;  // m
  Eigen::VectorXd u_nom;
  double u_max = std::numeric_limits<double>::infinity();
};

struct QPResult {
  bool feasible = false;
  Eigen::VectorXd u;
  std::vector<int> active;  // indices into the stacked rows [A; box]
  int iterations = 0;
};

namespace detail {

inline void stacked_rows(const QPProblem& P, Eigen::MatrixXd& N, Eigen::VectorXd& b) {
  const int n = static_cast<int>(P.u_nom.size());
  const int m = static_cast<int>(P.A.rows());
  const bool box = std::isfinite(P.u_max);
  const int rows = m + (box ? 2 * n : 0);
  N.resize(rows, n);
  b.resize(rows);
  if (m > 0) {
    N.topRows(m) = P.A;
    b.head(m) = P.c;
  }
  if (box) {
    for (int i = 0; i < n; ++i) {
      N.row(m + 2 * i).setZero();
      N(m + 2 * i, i) = 1.0;
      b(m + 2 * i) = P.u_max;
      N.row(m + 2 * i + 1).setZero();
      N(m + 2 * i + 1, i) = -1.0;
      b(m + 2 * i + 1) = P.u_max;
    }
  }
}

}  // namespace detail

inline QPResult solve_qp(const QPProblem& P, double tol = 1e-12) {
  const int n = static_cast<int>(P.u_nom.size());
  Eigen::MatrixXd N;
  Eigen::VectorXd b;
  detail::stacked_rows(P, N, b);
  const int m = static_cast<int>(N.rows());
  if (P.A.rows() > 0 && P.A.cols() != n) throw Error(ErrorKind::kConfig, "QP dimension mismatch");
  if (!(P.u_max >= 0.0)) return {false, P.u_nom, {}, 0};

  QPResult res;
  Eigen::VectorXd x = P.u_nom;
  std::vector<int> act;
  std::vector<double> lam;
  const int max_iter = std::max(10 * m, 50);
  int iter = 0;

  auto scale_of = [&](int i) { return 1.0 + std::abs(b(i)) + N.row(i).norm() * (1.0 + x.norm()); };

  while (true) {
    // Most violated inactive row; ties go to the lowest index.
    int p = -1;
    double worst = 0.0;
    for (int i = 0; i < m; ++i) {
      if (std::find(act.begin(), act.end(), i) != act.end()) continue;
      const double viol = (N.row(i).dot(x) - b(i)) / scale_of(i);
      if (viol > tol && viol > worst) {
        worst = viol;
        p = i;
      }
    }
    if (p < 0) break;

    double lam_p = 0.0;
    while (true) {
      if (++iter > max_iter) throw Error(ErrorKind::kIterationLimit, "QP iteration limit");
      const int k = static_cast<int>(act.size());
      Eigen::VectorXd z = N.row(p).transpose();
      Eigen::VectorXd r(k);
      if (k > 0) {
        Eigen::MatrixXd Na(n, k);
        for (int j = 0; j < k; ++j) Na.col(j) = N.row(act[j]).transpose();
        r = (Na.transpose() * Na).ldlt().solve(Na.transpose() * N.row(p).transpose());
        z -= Na * r;
      }
      // Moving along -z reduces the violation of row p; multipliers change by t * r.
      double t1 = std::numeric_limits<double>::infinity();
      int drop = -1;
      for (int j = 0; j < k; ++j) {
        if (r(j) < -1e-14) continue;
        if (r(j) > 1e-14) {
          const double tj = lam[j] / r(j);
          if (tj < t1) {
            t1 = tj;
            drop = j;
          }
        }
      }
      const double zn2 = z.squaredNorm();
      const double viol = N.row(p).dot(x) - b(p);
      const bool has_primal = k < n && zn2 > 1e-16 * N.row(p).squaredNorm();
      const double t2 = has_primal ? viol / zn2 : std::numeric_limits<double>::infinity();
      const double t = std::min(t1, t2);
      if (!std::isfinite(t)) {
        res.feasible = false;
        res.u = x;
        res.iterations = iter;
        return res;
      }
      if (has_primal) x -= t * z;
      for (int j = 0; j < k; ++j) lam[j] -= t * r(j);
      lam_p += t;
      if (t == t2) {
        act.push_back(p);
        lam.push_back(lam_p);
        break;
      }
      act.erase(act.begin() + drop);
      lam.erase(lam.begin() + drop);
    }
  }
  res.feasible = true;
  res.u = x;
  res.active = act;
  res.iterations = iter;
  return res;
}

/// Max over rows of (N u - b), including the box.
inline double qp_max_violation(const QPProblem& P, const Eigen::VectorXd& u) {
  Eigen::MatrixXd N;
  Eigen::VectorXd b;
  detail::stacked_rows(P, N, b);
  if (N.rows() == 0) return -std::numeric_limits<double>::infinity();
  return (N * u - b).maxCoeff();
}

}  // namespace ritcbf
