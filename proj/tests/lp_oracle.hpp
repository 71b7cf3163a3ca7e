#pragma once
// Brute-force LP oracle shared by the unit and acceptance suites: enumerate
// candidate vertices as intersections of n active constraints drawn from the
// rows and variable bounds, keep the feasible ones, return the best
// objective. Assumes finite variable bounds.

#include <functional>
#include <random>

#include "opfv/lp.hpp"

namespace opfv::testing {

struct LpOracleResult {
  bool feasible = false;
  double objective = 0.0;
};

inline LpOracleResult vertex_enumeration(const lp::LpProblem& p) {
  using namespace opfv::lp;
  int n = p.num_vars();
  int m = p.num_rows();
  struct Plane {
    Eigen::VectorXd a;
    double b;
  };
  std::vector<Plane> planes;
  for (int i = 0; i < m; ++i) planes.push_back({p.rows.row(i).transpose(), p.rhs[i]});
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    planes.push_back({e, p.var_lower[j]});
    planes.push_back({e, p.var_upper[j]});
  }

  LpOracleResult best;
  std::vector<int> combo(n);
  int total = static_cast<int>(planes.size());
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd mat(n, n);
      Eigen::VectorXd rhs(n);
      for (int k = 0; k < n; ++k) {
        mat.row(k) = planes[combo[k]].a.transpose();
        rhs[k] = planes[combo[k]].b;
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(mat);
      if (!lu.isInvertible()) return;
      Eigen::VectorXd x = lu.solve(rhs);
      const double tol = 1e-7;
      for (int j = 0; j < n; ++j)
        if (x[j] < p.var_lower[j] - tol || x[j] > p.var_upper[j] + tol) return;
      for (int i = 0; i < m; ++i) {
        double lhs = p.rows.row(i).dot(x);
        double scale = 1.0 + std::abs(p.rhs[i]);
        switch (p.row_sense[i]) {
          case RowSense::LessEqual:
            if (lhs > p.rhs[i] + tol * scale) return;
            break;
          case RowSense::Equal:
            if (std::abs(lhs - p.rhs[i]) > tol * scale) return;
            break;
          case RowSense::GreaterEqual:
            if (lhs < p.rhs[i] - tol * scale) return;
            break;
        }
      }
      double obj = p.objective.dot(x);
      if (!best.feasible ||
          (p.sense == Sense::Minimize ? obj < best.objective : obj > best.objective)) {
        best.feasible = true;
        best.objective = obj;
      }
      return;
    }
    for (int i = start; i < total; ++i) {
      combo[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

inline lp::LpProblem random_box_lp(std::mt19937_64& rng) {
  using namespace opfv::lp;
  std::uniform_int_distribution<int> nvars(1, 6), nrows(0, 6);
  std::uniform_real_distribution<double> coef(-2.0, 2.0), rhsd(-4.0, 4.0);
  std::uniform_int_distribution<int> sense3(0, 2), coin(0, 1);
  int n = nvars(rng);
  int m = nrows(rng);
  LpProblem p;
  p.sense = coin(rng) ? Sense::Minimize : Sense::Maximize;
  p.objective.resize(n);
  p.var_lower.resize(n);
  p.var_upper.resize(n);
  for (int j = 0; j < n; ++j) {
    p.objective[j] = std::round(coef(rng) * 4.0) / 4.0;
    double lo = std::round(std::uniform_real_distribution<double>(-3.0, 0.0)(rng) * 4.0) / 4.0;
    double width = std::round(std::uniform_real_distribution<double>(0.0, 4.0)(rng) * 4.0) / 4.0;
    p.var_lower[j] = lo;
    p.var_upper[j] = lo + width;
  }
  p.rows.resize(m, n);
  p.rhs.resize(m);
  p.row_sense.resize(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) p.rows(i, j) = std::round(coef(rng) * 4.0) / 4.0;
    p.rhs[i] = std::round(rhsd(rng) * 4.0) / 4.0;
    int s = sense3(rng);
    p.row_sense[i] = s == 0   ? RowSense::LessEqual
                     : s == 1 ? RowSense::Equal
                              : RowSense::GreaterEqual;
  }
  return p;
}

}  // namespace opfv::testing
