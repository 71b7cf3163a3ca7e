#include "opfv/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace opfv::lp {
namespace {

struct Work {
  int n = 0;               // structural columns
  int m = 0;               // rows == slack columns
  int total = 0;           // n + m
  Eigen::MatrixXd cols;    // m x total, [A | I]
  Eigen::VectorXd lo, up;  // column bounds
  Eigen::VectorXd cost;    // minimization costs (slacks zero)
  Eigen::VectorXd rhs;
};

Work build_work(const LpProblem& p) {
  Work w;
  w.n = p.num_vars();
  w.m = p.num_rows();
  w.total = w.n + w.m;
  w.cols.resize(w.m, w.total);
  w.cols.leftCols(w.n) = p.rows;
  w.cols.rightCols(w.m) = Eigen::MatrixXd::Identity(w.m, w.m);
  w.lo.resize(w.total);
  w.up.resize(w.total);
  w.cost = Eigen::VectorXd::Zero(w.total);
  double sign = (p.sense == Sense::Minimize) ? 1.0 : -1.0;
  for (int j = 0; j < w.n; ++j) {
    w.lo[j] = p.var_lower[j];
    w.up[j] = p.var_upper[j];
    w.cost[j] = sign * p.objective[j];
  }
  for (int i = 0; i < w.m; ++i) {
    // Slack s_i = b_i - a_i'x; its bounds encode the row sense.
    switch (p.row_sense[i]) {
      case RowSense::LessEqual:
        w.lo[w.n + i] = 0.0;
        w.up[w.n + i] = kInf;
        break;
      case RowSense::Equal:
        w.lo[w.n + i] = 0.0;
        w.up[w.n + i] = 0.0;
        break;
      case RowSense::GreaterEqual:
        w.lo[w.n + i] = -kInf;
        w.up[w.n + i] = 0.0;
        break;
    }
  }
  w.rhs = p.rhs;
  return w;
}

VarStatus default_nonbasic_status(double lo, double up) {
  if (std::isfinite(lo)) return VarStatus::AtLower;
  if (std::isfinite(up)) return VarStatus::AtUpper;
  return VarStatus::Free;
}

double nonbasic_value(VarStatus s, double lo, double up) {
  switch (s) {
    case VarStatus::AtLower: return lo;
    case VarStatus::AtUpper: return up;
    case VarStatus::Free: return 0.0;
    case VarStatus::Basic: break;
  }
  return 0.0;
}

}  // namespace

void LpProblem::check_dimensions() const {
  int n = num_vars();
  int m = num_rows();
  if (rows.rows() != m || (m > 0 && rows.cols() != n) ||
      static_cast<int>(row_sense.size()) != m || var_lower.size() != n ||
      var_upper.size() != n) {
    throw InconsistentDimensions("LpProblem dimensions are inconsistent");
  }
  for (int j = 0; j < n; ++j) {
    if (var_lower[j] > var_upper[j]) {
      throw InconsistentDimensions("variable " + std::to_string(j) +
                                   " has lower bound above upper bound");
    }
  }
}

bool Basis::valid_for(const LpProblem& p) const {
  if (static_cast<int>(status.size()) != p.num_vars() + p.num_rows()) return false;
  int basics = 0;
  for (VarStatus s : status)
    if (s == VarStatus::Basic) ++basics;
  return basics == p.num_rows();
}

LpSolution solve_lp(const LpProblem& problem, const Basis* warm_basis,
                    const SolverOptions& opt) {
  problem.check_dimensions();
  Work w = build_work(problem);
  const int m = w.m;
  const int total = w.total;

  std::vector<VarStatus> vstat(total);
  auto reset_slack_basis = [&] {
    for (int j = 0; j < w.n; ++j) vstat[j] = default_nonbasic_status(w.lo[j], w.up[j]);
    for (int i = 0; i < m; ++i) vstat[w.n + i] = VarStatus::Basic;
  };
  if (warm_basis != nullptr && warm_basis->valid_for(problem)) {
    vstat = warm_basis->status;
    // Bounds may have changed since the basis was produced (branch-and-bound
    // fixes binaries); repoint nonbasics whose bound is no longer finite.
    for (int j = 0; j < total; ++j) {
      if (vstat[j] == VarStatus::AtLower && !std::isfinite(w.lo[j]))
        vstat[j] = default_nonbasic_status(w.lo[j], w.up[j]);
      else if (vstat[j] == VarStatus::AtUpper && !std::isfinite(w.up[j]))
        vstat[j] = default_nonbasic_status(w.lo[j], w.up[j]);
    }
  } else {
    reset_slack_basis();
  }

  std::vector<int> basic;
  Eigen::VectorXd xval(total);
  Eigen::MatrixXd basis_mat(m, m);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  auto factorize_singular = [&]() {
    if (m == 0) return false;
    lu.compute(basis_mat);
    double scale = std::max(1.0, basis_mat.cwiseAbs().maxCoeff());
    return lu.matrixLU().diagonal().cwiseAbs().minCoeff() <= 1e-11 * scale;
  };
  LpSolution sol;
  sol.primal = Eigen::VectorXd::Zero(w.n);
  sol.row_duals = Eigen::VectorXd::Zero(m);
  sol.reduced_costs = Eigen::VectorXd::Zero(w.n);

  bool bland = false;
  int degenerate_run = 0;
  bool repaired_once = false;
  const double kDegenStep = 1e-10;

  auto bound_tol = [&](double bound) {
    return opt.feas_tol * (1.0 + std::abs(bound));
  };

  int iter = 0;
  while (true) {
    if (++iter > opt.max_iterations) {
      sol.status = SolveStatus::IterationLimit;
      sol.iterations = iter - 1;
      return sol;
    }

    basic.clear();
    for (int j = 0; j < total; ++j)
      if (vstat[j] == VarStatus::Basic) basic.push_back(j);
    if (static_cast<int>(basic.size()) != m)
      throw NumericalBreakdown("basis lost cardinality");

    for (int i = 0; i < m; ++i) basis_mat.col(i) = w.cols.col(basic[i]);
    if (factorize_singular()) {
      if (repaired_once) throw NumericalBreakdown("singular basis after repair");
      repaired_once = true;
      reset_slack_basis();
      continue;
    }

    // Values of nonbasics at their bounds, basics from B xB = b - N xN.
    Eigen::VectorXd rhs_eff = w.rhs;
    for (int j = 0; j < total; ++j) {
      if (vstat[j] == VarStatus::Basic) continue;
      xval[j] = nonbasic_value(vstat[j], w.lo[j], w.up[j]);
      if (xval[j] != 0.0) rhs_eff -= w.cols.col(j) * xval[j];
    }
    Eigen::VectorXd xb = (m > 0) ? lu.solve(rhs_eff).eval() : Eigen::VectorXd();
    for (int i = 0; i < m; ++i) xval[basic[i]] = xb[i];

    // Phase detection: any basic variable outside its bounds?
    Eigen::VectorXd phase_cost = Eigen::VectorXd::Zero(m);
    bool feasible = true;
    for (int i = 0; i < m; ++i) {
      int j = basic[i];
      if (xb[i] < w.lo[j] - bound_tol(w.lo[j])) {
        phase_cost[i] = -1.0;
        feasible = false;
      } else if (xb[i] > w.up[j] + bound_tol(w.up[j])) {
        phase_cost[i] = 1.0;
        feasible = false;
      }
    }

    Eigen::VectorXd cb(m);
    if (feasible) {
      for (int i = 0; i < m; ++i) cb[i] = w.cost[basic[i]];
    } else {
      cb = phase_cost;
    }
    Eigen::VectorXd y = (m > 0) ? lu.transpose().solve(cb).eval() : Eigen::VectorXd();

    // Pricing. Entering column q moving in direction dir improves the
    // current (phase 1 or phase 2) objective.
    int q = -1;
    double q_dir = 0.0;
    double best_score = opt.opt_tol;
    for (int j = 0; j < total; ++j) {
      if (vstat[j] == VarStatus::Basic) continue;
      if (w.up[j] - w.lo[j] <= 0.0) continue;  // fixed column never enters
      double rc = (feasible ? w.cost[j] : 0.0) - y.dot(w.cols.col(j));
      double score = 0.0;
      double dir = 0.0;
      if (vstat[j] == VarStatus::AtLower && rc < -opt.opt_tol) {
        score = -rc;
        dir = 1.0;
      } else if (vstat[j] == VarStatus::AtUpper && rc > opt.opt_tol) {
        score = rc;
        dir = -1.0;
      } else if (vstat[j] == VarStatus::Free && std::abs(rc) > opt.opt_tol) {
        score = std::abs(rc);
        dir = (rc < 0.0) ? 1.0 : -1.0;
      } else {
        continue;
      }
      if (bland) {  // first eligible index
        q = j;
        q_dir = dir;
        break;
      }
      if (score > best_score) {
        best_score = score;
        q = j;
        q_dir = dir;
      }
    }

    if (q < 0) {
      if (feasible) {
        sol.status = SolveStatus::Optimal;
        sol.iterations = iter;
        break;
      }
      // Phase-1 optimum with residual infeasibility: no feasible point.
      sol.status = SolveStatus::Infeasible;
      sol.iterations = iter;
      for (int i = 0; i < m; ++i) {
        int j = basic[i];
        if (xb[i] < w.lo[j] - bound_tol(w.lo[j]) ||
            xb[i] > w.up[j] + bound_tol(w.up[j])) {
          if (j >= w.n) sol.infeasible_rows.push_back(j - w.n);
        }
      }
      return sol;
    }

    // Ratio test along x_q += dir * t. Basic i changes at rate -dir*d_i.
    Eigen::VectorXd d = (m > 0) ? lu.solve(w.cols.col(q)).eval() : Eigen::VectorXd();
    double t_best = kInf;
    int leaving = -1;        // index into basic[], -1 = bound flip of q
    bool leaving_to_upper = false;
    double range_q = w.up[q] - w.lo[q];
    if (std::isfinite(range_q)) t_best = range_q;

    const double piv_tol = 1e-11;
    for (int i = 0; i < m; ++i) {
      int j = basic[i];
      double delta = -q_dir * d[i];  // dx_basic/dt
      if (std::abs(delta) <= piv_tol) continue;
      double t_i = kInf;
      bool to_upper = false;
      bool below = xb[i] < w.lo[j] - bound_tol(w.lo[j]);
      bool above = xb[i] > w.up[j] + bound_tol(w.up[j]);
      if (below) {
        // Infeasible basic gains feasibility at its lower bound.
        if (delta > 0.0) {
          t_i = (w.lo[j] - xb[i]) / delta;
          to_upper = false;
        }
      } else if (above) {
        if (delta < 0.0) {
          t_i = (w.up[j] - xb[i]) / delta;
          to_upper = true;
        }
      } else if (delta > 0.0) {
        if (std::isfinite(w.up[j])) {
          t_i = (w.up[j] - xb[i]) / delta;
          to_upper = true;
        }
      } else {
        if (std::isfinite(w.lo[j])) {
          t_i = (w.lo[j] - xb[i]) / delta;
          to_upper = false;
        }
      }
      if (t_i < 0.0) t_i = 0.0;  // degenerate, clamp
      if (t_i < t_best - 1e-12 ||
          (t_i < t_best + 1e-12 && leaving >= 0 &&
           (bland ? j < basic[leaving] : std::abs(delta) > std::abs(-q_dir * d[leaving])))) {
        t_best = t_i;
        leaving = i;
        leaving_to_upper = to_upper;
      }
    }

    if (!std::isfinite(t_best)) {
      if (feasible) {
        sol.status = SolveStatus::Unbounded;
        sol.iterations = iter;
        return sol;
      }
      throw NumericalBreakdown("phase-1 direction unbounded");
    }

    if (t_best <= kDegenStep) {
      if (++degenerate_run > opt.degenerate_limit) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }

    if (leaving < 0) {
      // Bound flip: q crosses to its opposite bound, basis unchanged.
      vstat[q] = (q_dir > 0.0) ? VarStatus::AtUpper : VarStatus::AtLower;
    } else {
      int out = basic[leaving];
      vstat[out] = leaving_to_upper ? VarStatus::AtUpper : VarStatus::AtLower;
      if (!std::isfinite(leaving_to_upper ? w.up[out] : w.lo[out]))
        throw NumericalBreakdown("leaving variable has no finite bound");
      vstat[q] = VarStatus::Basic;
    }
  }

  // Optimal: assemble solution, duals from phase-2 pricing at the final basis.
  Eigen::VectorXd rhs_eff = w.rhs;
  for (int j = 0; j < total; ++j) {
    if (vstat[j] == VarStatus::Basic) continue;
    xval[j] = nonbasic_value(vstat[j], w.lo[j], w.up[j]);
    if (xval[j] != 0.0) rhs_eff -= w.cols.col(j) * xval[j];
  }
  basic.clear();
  for (int j = 0; j < total; ++j)
    if (vstat[j] == VarStatus::Basic) basic.push_back(j);
  for (int i = 0; i < m; ++i) basis_mat.col(i) = w.cols.col(basic[i]);
  if (m > 0) lu.compute(basis_mat);
  Eigen::VectorXd xb = (m > 0) ? lu.solve(rhs_eff).eval() : Eigen::VectorXd();
  for (int i = 0; i < m; ++i) xval[basic[i]] = xb[i];

  Eigen::VectorXd cb(m);
  for (int i = 0; i < m; ++i) cb[i] = w.cost[basic[i]];
  Eigen::VectorXd y = (m > 0) ? lu.transpose().solve(cb).eval() : Eigen::VectorXd();

  double dual_sign = (problem.sense == Sense::Minimize) ? 1.0 : -1.0;
  sol.primal = xval.head(w.n);
  sol.objective = problem.objective.dot(sol.primal);
  sol.row_duals = dual_sign * y;
  for (int j = 0; j < w.n; ++j)
    sol.reduced_costs[j] = dual_sign * (w.cost[j] - y.dot(w.cols.col(j)));
  sol.basis.status = vstat;
  return sol;
}

std::string dump_problem(const LpProblem& p) {
  std::ostringstream out;
  auto num = [](double v) {
    if (v == kInf) return std::string("inf");
    if (v == -kInf) return std::string("-inf");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
  };
  out << "LP " << (p.sense == Sense::Minimize ? "min" : "max")
      << " vars=" << p.num_vars() << " rows=" << p.num_rows() << "\n";
  out << "obj:";
  for (int j = 0; j < p.num_vars(); ++j) out << " " << num(p.objective[j]);
  out << "\n";
  for (int i = 0; i < p.num_rows(); ++i) {
    out << "row " << i << ":";
    for (int j = 0; j < p.num_vars(); ++j) out << " " << num(p.rows(i, j));
    const char* s = p.row_sense[i] == RowSense::LessEqual   ? "<="
                    : p.row_sense[i] == RowSense::Equal     ? "=="
                                                            : ">=";
    out << " " << s << " " << num(p.rhs[i]) << "\n";
  }
  for (int j = 0; j < p.num_vars(); ++j)
    out << "bnd " << j << ": [" << num(p.var_lower[j]) << ", " << num(p.var_upper[j])
        << "]\n";
  return out.str();
}

}  // namespace opfv::lp
