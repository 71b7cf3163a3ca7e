#pragma once
// DC optimal power flow: cost-minimal dispatch under power balance, generator
// limits and branch thermal limits, solved as an LP over the PTDF model.

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfv/grid.hpp"
#include "opfv/lp.hpp"

namespace opfv::dcopf {

struct Dispatch {
  Eigen::VectorXd pg;     // per generator, p.u.
  double cost = 0.0;
  Eigen::VectorXd flows;  // per branch, p.u.
  double balance_dual = 0.0;
};

struct Infeasible : std::runtime_error {
  std::vector<std::string> violated_rows;
  explicit Infeasible(std::vector<std::string> rows);
};

// Builds the dispatch LP: min c'pg subject to total generation == total
// demand, generator bounds, and two one-sided flow rows per branch.
lp::LpProblem build_lp(const grid::Network& net, const grid::PtdfMatrix& ptdf,
                       const Eigen::VectorXd& demand);

Dispatch solve_dcopf(const grid::Network& net, const grid::PtdfMatrix& ptdf,
                     const Eigen::VectorXd& demand);

}  // namespace opfv::dcopf
