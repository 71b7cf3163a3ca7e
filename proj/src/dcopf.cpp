#include "opfv/dcopf.hpp"

#include <sstream>

namespace opfv::dcopf {

namespace {
std::string join(const std::vector<std::string>& parts) {
  std::ostringstream out;
  for (size_t i = 0; i < parts.size(); ++i) out << (i ? "; " : "") << parts[i];
  return out.str();
}
}  // namespace

Infeasible::Infeasible(std::vector<std::string> rows)
    : std::runtime_error("DC-OPF infeasible: " + join(rows)), violated_rows(std::move(rows)) {}

lp::LpProblem build_lp(const grid::Network& net, const grid::PtdfMatrix& ptdf,
                       const Eigen::VectorXd& demand) {
  int ng = net.num_generators();
  int ne = net.num_branches();
  Eigen::MatrixXd phi_g = ptdf.phi * net.gen_map();   // ne x ng
  Eigen::VectorXd load_flow = ptdf.phi * (net.load_map() * demand);  // demand share of flows
  Eigen::VectorXd limits = net.branch_limits();

  lp::LpProblem p;
  p.sense = lp::Sense::Minimize;
  p.objective = net.gen_cost();
  p.var_lower = net.gen_pmin();
  p.var_upper = net.gen_pmax();
  int m = 1 + 2 * ne;
  p.rows.resize(m, ng);
  p.rhs.resize(m);
  p.row_sense.assign(m, lp::RowSense::LessEqual);

  // Row 0: power balance.
  p.rows.row(0).setOnes();
  p.row_sense[0] = lp::RowSense::Equal;
  p.rhs[0] = demand.sum();

  // The thermal constraint |phi (Gg pg - Gd pd)| <= limit becomes two
  // one-sided rows in pg.
  for (int e = 0; e < ne; ++e) {
    p.rows.row(1 + 2 * e) = phi_g.row(e);
    p.rhs[1 + 2 * e] = limits[e] + load_flow[e];
    p.rows.row(2 + 2 * e) = -phi_g.row(e);
    p.rhs[2 + 2 * e] = limits[e] - load_flow[e];
  }
  return p;
}

Dispatch solve_dcopf(const grid::Network& net, const grid::PtdfMatrix& ptdf,
                     const Eigen::VectorXd& demand) {
  if (demand.size() != net.num_loads())
    throw lp::InconsistentDimensions("demand vector length mismatch");
  if ((demand.array() < 0.0).any())
    throw std::invalid_argument("demand must be nonnegative");

  lp::LpProblem p = build_lp(net, ptdf, demand);
  lp::LpSolution s = lp::solve_lp(p);
  if (s.status != lp::SolveStatus::Optimal) {
    std::vector<std::string> rows;
    for (int r : s.infeasible_rows) {
      if (r == 0)
        rows.push_back("power balance");
      else
        rows.push_back("thermal limit on branch " + std::to_string((r - 1) / 2));
    }
    if (rows.empty()) rows.push_back("generator capacity vs demand");
    throw Infeasible(rows);
  }
  Dispatch out;
  out.pg = s.primal;
  out.cost = s.objective;
  out.flows = grid::branch_flows(ptdf, net, out.pg, demand);
  out.balance_dual = s.row_duals[0];
  return out;
}

}  // namespace opfv::dcopf
