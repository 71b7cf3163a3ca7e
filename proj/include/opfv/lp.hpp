#pragma once
// Dense bounded-variable linear programming kernel.
//
// Solves   min/max c'x   s.t.  A x {<=,=,>=} b,  l <= x <= u
// with a revised simplex over [A | I] using a composite (big-M free) phase 1
// and Bland's rule as an anti-cycling fallback. Intended for the small dense
// problems produced by DC-OPF, MILP node relaxations and bound tightening.

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace opfv::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct InconsistentDimensions : std::runtime_error {
  explicit InconsistentDimensions(const std::string& what) : std::runtime_error(what) {}
};
struct NumericalBreakdown : std::runtime_error {
  explicit NumericalBreakdown(const std::string& what) : std::runtime_error(what) {}
};

struct LpProblem {
  Sense sense = Sense::Minimize;
  Eigen::VectorXd objective;               // size n
  Eigen::MatrixXd rows;                    // m x n
  std::vector<RowSense> row_sense;         // size m
  Eigen::VectorXd rhs;                     // size m
  Eigen::VectorXd var_lower, var_upper;    // size n, +-kInf allowed

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }
  void check_dimensions() const;           // throws InconsistentDimensions
};

// Column status over the extended system [A | I]; columns n..n+m-1 are the
// logical slack of each row.
enum class VarStatus : uint8_t { Basic, AtLower, AtUpper, Free };

struct Basis {
  std::vector<VarStatus> status;  // size n + m
  bool valid_for(const LpProblem& p) const;
};

struct LpSolution {
  SolveStatus status = SolveStatus::IterationLimit;
  Eigen::VectorXd primal;         // size n, meaningful when Optimal
  double objective = 0.0;         // in the problem's own sense
  Eigen::VectorXd row_duals;      // size m, d(optimal objective)/d(rhs)
  Eigen::VectorXd reduced_costs;  // size n, same sign convention as row_duals
  Basis basis;                    // final basis, reusable as a warm start
  std::vector<int> infeasible_rows;  // rows still violated when Infeasible
  int iterations = 0;
};

struct SolverOptions {
  int max_iterations = 50000;
  double feas_tol = 1e-8;    // scaled by 1 + |bound| / row norm
  double opt_tol = 1e-9;     // reduced-cost threshold
  int degenerate_limit = 100;  // consecutive degenerate pivots before Bland's rule
};

LpSolution solve_lp(const LpProblem& problem, const Basis* warm_basis = nullptr,
                    const SolverOptions& options = {});

// Fixed-layout text dump (objective row, then constraint rows, then bounds)
// used by golden-file tests.
std::string dump_problem(const LpProblem& problem);

}  // namespace opfv::lp
