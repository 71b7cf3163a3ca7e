#include "opfv/verify.hpp"

#include <chrono>
#include <cmath>
#include <queue>

#include "opfv/util.hpp"

namespace opfv::verify {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

MilpProblem encode_milp(const nn::ReluNetwork& net, const bounds::BoundsTable& table,
                        const bounds::Box& box, const grid::Network* grid_net,
                        const grid::PtdfMatrix* ptdf, int upto_layer) {
  int n_layers = net.num_layers();
  if (upto_layer < 0) upto_layer = n_layers;
  if (!table.covers(net)) throw UnboundedNeuron("bounds table does not cover the network");
  if (box.dims() != net.input_dim)
    throw lp::InconsistentDimensions("box dimension does not match the network input");

  MilpProblem mp;
  mp.encoded_layers = upto_layer;
  VarMap& vm = mp.vars;
  vm.n_demand = net.input_dim;
  vm.demand = 0;
  int next = vm.n_demand;
  vm.zhat.resize(upto_layer);
  vm.z.resize(upto_layer);
  vm.binary.resize(upto_layer);
  int n_rows = 0;
  for (int k = 0; k < upto_layer; ++k) {
    int w = net.width(k);
    vm.zhat[k] = next;
    next += w;
    vm.z[k] = next;
    next += w;
    n_rows += w;  // affine definition rows
    vm.binary[k].assign(w, -1);
  }
  // Binaries for unstable neurons, layer-major, so the lowest variable index
  // is the earliest layer / lowest neuron.
  for (int k = 0; k < upto_layer; ++k) {
    for (int j = 0; j < net.width(k); ++j) {
      auto st = table.stability(k, j);
      if (st == bounds::Stability::Unstable) {
        if (!std::isfinite(table.lo[k][j]) || !std::isfinite(table.hi[k][j]))
          throw UnboundedNeuron("neuron (" + std::to_string(k) + "," + std::to_string(j) +
                                ") has unbounded pre-activation; compute bounds first");
        vm.binary[k][j] = next;
        mp.binaries.push_back(next);
        ++next;
        n_rows += 3;  // Relu1..Relu3; Relu4 is the z >= 0 variable bound
      } else if (st == bounds::Stability::Active) {
        n_rows += 1;  // z == zhat
      }
    }
  }
  bool with_flows = grid_net != nullptr && ptdf != nullptr && upto_layer == n_layers;
  if (with_flows) {
    vm.flow = next;
    next += grid_net->num_branches();
    n_rows += grid_net->num_branches();
  }
  vm.total = next;

  lp::LpProblem& p = mp.relaxation;
  p.sense = lp::Sense::Maximize;
  p.objective = Eigen::VectorXd::Zero(vm.total);
  p.var_lower = Eigen::VectorXd::Constant(vm.total, -kInf);
  p.var_upper = Eigen::VectorXd::Constant(vm.total, kInf);
  p.rows = Eigen::MatrixXd::Zero(n_rows, vm.total);
  p.rhs = Eigen::VectorXd::Zero(n_rows);
  p.row_sense.assign(n_rows, lp::RowSense::Equal);

  p.var_lower.segment(vm.demand, vm.n_demand) = box.lo;
  p.var_upper.segment(vm.demand, vm.n_demand) = box.hi;

  int row = 0;
  for (int k = 0; k < upto_layer; ++k) {
    int w = net.width(k);
    int prev_start = (k == 0) ? vm.demand : vm.z[k - 1];
    int prev_w = (k == 0) ? vm.n_demand : net.width(k - 1);
    // zhat_k - W_k z_{k-1} = b_k
    for (int j = 0; j < w; ++j) {
      p.rows(row, vm.zhat[k] + j) = 1.0;
      p.rows.block(row, prev_start, 1, prev_w) = -net.stages[k].W.row(j);
      p.rhs[row] = net.stages[k].b[j];
      ++row;
    }
    for (int j = 0; j < w; ++j) {
      double lo = table.lo[k][j], hi = table.hi[k][j];
      p.var_lower[vm.zhat[k] + j] = lo;
      p.var_upper[vm.zhat[k] + j] = hi;
      p.var_lower[vm.z[k] + j] = std::max(lo, 0.0);
      p.var_upper[vm.z[k] + j] = std::max(hi, 0.0);
      auto st = table.stability(k, j);
      if (st == bounds::Stability::Active) {
        p.rows(row, vm.z[k] + j) = 1.0;
        p.rows(row, vm.zhat[k] + j) = -1.0;
        ++row;
      } else if (st == bounds::Stability::Unstable) {
        int y = vm.binary[k][j];
        p.var_lower[y] = 0.0;
        p.var_upper[y] = 1.0;
        // z <= zhat - lo (1 - y), i.e. z - zhat - lo y <= -lo
        p.rows(row, vm.z[k] + j) = 1.0;
        p.rows(row, vm.zhat[k] + j) = -1.0;
        p.rows(row, y) = -lo;
        p.row_sense[row] = lp::RowSense::LessEqual;
        p.rhs[row] = -lo;
        ++row;
        // z >= zhat
        p.rows(row, vm.z[k] + j) = 1.0;
        p.rows(row, vm.zhat[k] + j) = -1.0;
        p.row_sense[row] = lp::RowSense::GreaterEqual;
        ++row;
        // z <= hi y
        p.rows(row, vm.z[k] + j) = 1.0;
        p.rows(row, y) = -hi;
        p.row_sense[row] = lp::RowSense::LessEqual;
        ++row;
      }
      // Stable inactive: z is fixed to 0 by its bounds; no row needed.
    }
  }

  if (with_flows) {
    int zl = vm.z[n_layers - 1];
    int wl = net.width(n_layers - 1);
    Eigen::MatrixXd phi_g = ptdf->phi * grid_net->gen_map();   // E x ng
    Eigen::MatrixXd phi_d = ptdf->phi * grid_net->load_map();  // E x nd
    Eigen::MatrixXd m = phi_g * net.out.W;                     // E x wl
    Eigen::VectorXd c = phi_g * net.out.b;
    for (int e = 0; e < grid_net->num_branches(); ++e) {
      p.rows(row, vm.flow + e) = 1.0;
      p.rows.block(row, zl, 1, wl) = -m.row(e);
      p.rows.block(row, vm.demand, 1, vm.n_demand) = phi_d.row(e);
      p.rhs[row] = c[e];
      ++row;
    }
  }
  return mp;
}

void set_power_balance_objective(MilpProblem& p, const nn::ReluNetwork& net, int sign) {
  p.relaxation.objective.setZero();
  double s = sign >= 0 ? 1.0 : -1.0;
  int last = p.encoded_layers - 1;
  p.relaxation.objective.segment(p.vars.demand, p.vars.n_demand).setConstant(s);
  Eigen::VectorXd ew = net.out.W.colwise().sum();  // e' out.W
  p.relaxation.objective.segment(p.vars.z[last], net.width(last)) = -s * ew;
  p.objective_constant = -s * net.out.b.sum();
}

void set_line_flow_objective(MilpProblem& p, const grid::Network& grid_net, int line,
                             int sign) {
  if (p.vars.flow < 0) throw lp::InconsistentDimensions("problem encoded without flows");
  p.relaxation.objective.setZero();
  p.relaxation.objective[p.vars.flow + line] = sign >= 0 ? 1.0 : -1.0;
  p.objective_constant = -grid_net.branches[line].limit;
}

void set_preactivation_objective(MilpProblem& p, const nn::ReluNetwork& net, int layer,
                                 int index, int sign) {
  p.relaxation.objective.setZero();
  double s = sign >= 0 ? 1.0 : -1.0;
  int prev_start = (layer == 0) ? p.vars.demand : p.vars.z[layer - 1];
  Eigen::VectorXd w = net.stages[layer].W.row(index).transpose();
  p.relaxation.objective.segment(prev_start, w.size()) = s * w;
  p.objective_constant = s * net.stages[layer].b[index];
}

namespace {

struct Node {
  long id = 0;
  double bound = kInf;
  std::vector<std::pair<int, int>> fixes;  // binary column -> 0/1
  lp::Basis basis;
  bool has_basis = false;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;  // max-heap on bound
    return a.id > b.id;                                // then FIFO
  }
};

}  // namespace

BnbResult branch_and_bound(const MilpProblem& problem, const std::optional<Incumbent>& warm,
                           const BnbLimits& limits,
                           const std::function<double(const Eigen::VectorXd&)>& exact_eval) {
  auto t0 = std::chrono::steady_clock::now();
  BnbResult res;
  lp::LpProblem work = problem.relaxation;
  const Eigen::VectorXd base_lower = work.var_lower;
  const Eigen::VectorXd base_upper = work.var_upper;

  if (warm) {
    res.primal = warm->value;
    res.witness = warm->demand;
    res.has_witness = true;
  }
  res.initial_incumbent = res.primal;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push(Node{});
  long next_id = 1;
  double dual_global = kInf;

  auto finish = [&](double open_bound) {
    dual_global = std::min(dual_global, std::max(res.primal, open_bound));
    res.dual = dual_global;
    res.status = (res.dual - res.primal <= limits.gap_tol + 1e-12)
                     ? BnbStatus::ProvedOptimal
                     : BnbStatus::BudgetExhausted;
    res.wall_seconds = elapsed_since(t0);
  };

  while (!open.empty()) {
    if (res.nodes >= limits.max_nodes || elapsed_since(t0) > limits.time_seconds) {
      finish(open.top().bound);
      return res;
    }
    Node nd = open.top();
    open.pop();
    if (nd.bound <= res.primal + limits.gap_tol) {
      // Best-first: every remaining open node is bounded by nd.bound too.
      finish(nd.bound);
      return res;
    }

    work.var_lower = base_lower;
    work.var_upper = base_upper;
    for (auto [col, val] : nd.fixes) {
      work.var_lower[col] = val;
      work.var_upper[col] = val;
    }
    lp::LpSolution sol = lp::solve_lp(work, nd.has_basis ? &nd.basis : nullptr);
    ++res.nodes;

    if (sol.status == lp::SolveStatus::Unbounded)
      throw RelaxationUnbounded("node relaxation is unbounded");
    if (sol.status == lp::SolveStatus::IterationLimit)
      throw lp::NumericalBreakdown("node LP hit the iteration limit");

    if (sol.status == lp::SolveStatus::Optimal) {
      double v = std::min(sol.objective + problem.objective_constant, nd.bound);
      if (res.nodes == 1) res.root_dual = v;
      if (v > res.primal + limits.gap_tol) {
        // Branch on the relaxed binary nearest 0.5 among the unfixed ones.
        int pick = -1;
        double best_dist = kInf;
        for (int col : problem.binaries) {
          bool fixed = false;
          for (auto [fcol, fval] : nd.fixes)
            if (fcol == col) {
              fixed = true;
              break;
            }
          if (fixed) continue;
          double y = sol.primal[col];
          if (y < 1e-7 || y > 1.0 - 1e-7) continue;  // already integral
          double dist = std::abs(y - 0.5);
          if (dist < best_dist - 1e-15) {
            best_dist = dist;
            pick = col;
          }
        }
        if (pick < 0) {
          // Integral point: the big-M rows make it an exact forward trace.
          Eigen::VectorXd demand =
              sol.primal.segment(problem.vars.demand, problem.vars.n_demand);
          double value = exact_eval ? exact_eval(demand)
                                    : sol.objective + problem.objective_constant;
          if (value > res.primal) {
            res.primal = value;
            res.witness = demand;
            res.has_witness = true;
          }
        } else {
          for (int val = 0; val <= 1; ++val) {
            Node child;
            child.id = next_id++;
            child.bound = v;
            child.fixes = nd.fixes;
            child.fixes.emplace_back(pick, val);
            child.basis = sol.basis;
            child.has_basis = true;
            open.push(std::move(child));
          }
        }
      }
    }
    // Infeasible and fathomed nodes fall through to the log update.
    double top = open.empty() ? -kInf : open.top().bound;
    dual_global = std::min(dual_global, std::max(res.primal, top));
    res.log.push_back({res.nodes, res.primal, dual_global});
  }

  finish(-kInf);
  return res;
}

double signed_power_balance(const nn::ReluNetwork& net, const Eigen::VectorXd& x, int sign) {
  double s = sign >= 0 ? 1.0 : -1.0;
  return s * (x.sum() - nn::forward(net, x).sum());
}

double power_balance_violation(const nn::ReluNetwork& net, const Eigen::VectorXd& x) {
  return std::abs(signed_power_balance(net, x, +1));
}

double signed_line_flow(const nn::ReluNetwork& net, const grid::Network& grid_net,
                        const grid::PtdfMatrix& ptdf, int line, const Eigen::VectorXd& x,
                        int sign) {
  double s = sign >= 0 ? 1.0 : -1.0;
  Eigen::VectorXd pg = nn::forward(net, x);
  double flow = grid::branch_flows(ptdf, grid_net, pg, x)[line];
  return s * flow - grid_net.branches[line].limit;
}

double line_flow_violation(const nn::ReluNetwork& net, const grid::Network& grid_net,
                           const grid::PtdfMatrix& ptdf, int line, const Eigen::VectorXd& x) {
  double margin = std::max(signed_line_flow(net, grid_net, ptdf, line, x, +1),
                           signed_line_flow(net, grid_net, ptdf, line, x, -1));
  return std::max(0.0, margin);
}

namespace {

struct SignedRuns {
  BnbResult plus, minus;
};

VerifyResult combine_signed(const SignedRuns& runs,
                            const std::function<double(const Eigen::VectorXd&)>& replay,
                            bool clamp_at_zero, const BnbLimits& limits) {
  VerifyResult r;
  double best = -kInf;
  for (const BnbResult* run : {&runs.plus, &runs.minus}) {
    if (!run->has_witness) continue;
    double v = replay(run->witness);
    if (v > best) {
      best = v;
      r.witness = run->witness;
    }
  }
  r.primal_bound = clamp_at_zero ? std::max(0.0, best) : best;
  double dual_signed = std::max(runs.plus.dual, runs.minus.dual);
  r.dual_bound = clamp_at_zero ? std::max(0.0, dual_signed) : dual_signed;
  r.gap = r.dual_bound - r.primal_bound;
  r.root_dual = std::max(runs.plus.root_dual, runs.minus.root_dual);
  double inc = std::max(runs.plus.initial_incumbent, runs.minus.initial_incumbent);
  r.root_incumbent = clamp_at_zero ? std::max(0.0, inc) : inc;
  r.nodes = runs.plus.nodes + runs.minus.nodes;
  r.wall_seconds = runs.plus.wall_seconds + runs.minus.wall_seconds;
  r.status = (r.gap <= limits.gap_tol + 1e-12) ? BnbStatus::ProvedOptimal
                                               : BnbStatus::BudgetExhausted;
  r.log = runs.plus.log;
  r.log.insert(r.log.end(), runs.minus.log.begin(), runs.minus.log.end());
  return r;
}

}  // namespace

VerifyResult verify_power_balance(const nn::ReluNetwork& net,
                                  const bounds::BoundsTable& table, const bounds::Box& box,
                                  const std::optional<Eigen::VectorXd>& warm,
                                  const BnbLimits& limits) {
  MilpProblem mp = encode_milp(net, table, box);
  Eigen::VectorXd w = warm ? *warm : box.midpoint();
  SignedRuns runs;
  for (int sign : {+1, -1}) {
    set_power_balance_objective(mp, net, sign);
    Incumbent inc{signed_power_balance(net, w, sign), w};
    auto eval = [&net, sign](const Eigen::VectorXd& x) {
      return signed_power_balance(net, x, sign);
    };
    (sign > 0 ? runs.plus : runs.minus) = branch_and_bound(mp, inc, limits, eval);
  }
  return combine_signed(
      runs, [&](const Eigen::VectorXd& x) { return power_balance_violation(net, x); },
      /*clamp_at_zero=*/false, limits);
}

bool line_screened_out(const nn::ReluNetwork& net, const grid::Network& grid_net,
                       const grid::PtdfMatrix& ptdf, const bounds::BoundsTable& table,
                       const bounds::Box& box, int line) {
  int last = net.num_layers() - 1;
  Eigen::VectorXd z_lo = table.lo[last].cwiseMax(0.0);
  Eigen::VectorXd z_hi = table.hi[last].cwiseMax(0.0);
  Eigen::MatrixXd phi_g = ptdf.phi * grid_net.gen_map();
  Eigen::MatrixXd phi_d = ptdf.phi * grid_net.load_map();
  Eigen::VectorXd m = (phi_g.row(line) * net.out.W).transpose();
  double c = phi_g.row(line).dot(net.out.b);
  Eigen::VectorXd q = -phi_d.row(line).transpose();
  double flow_lo = c, flow_hi = c;
  for (int j = 0; j < m.size(); ++j) {
    flow_lo += std::min(m[j] * z_lo[j], m[j] * z_hi[j]);
    flow_hi += std::max(m[j] * z_lo[j], m[j] * z_hi[j]);
  }
  for (int d = 0; d < q.size(); ++d) {
    flow_lo += std::min(q[d] * box.lo[d], q[d] * box.hi[d]);
    flow_hi += std::max(q[d] * box.lo[d], q[d] * box.hi[d]);
  }
  double lim = grid_net.branches[line].limit;
  return flow_hi <= lim && flow_lo >= -lim;
}

VerifyResult verify_line_flow(const nn::ReluNetwork& net, const grid::Network& grid_net,
                              const grid::PtdfMatrix& ptdf, const bounds::BoundsTable& table,
                              const bounds::Box& box, int line,
                              const std::optional<Eigen::VectorXd>& warm,
                              const BnbLimits& limits) {
  if (line_screened_out(net, grid_net, ptdf, table, box, line)) {
    VerifyResult r;
    r.witness = box.midpoint();
    r.status = BnbStatus::ProvedOptimal;
    r.screened_zero = true;
    return r;
  }
  MilpProblem mp = encode_milp(net, table, box, &grid_net, &ptdf);
  Eigen::VectorXd w = warm ? *warm : box.midpoint();
  SignedRuns runs;
  for (int sign : {+1, -1}) {
    set_line_flow_objective(mp, grid_net, line, sign);
    Incumbent inc{signed_line_flow(net, grid_net, ptdf, line, w, sign), w};
    auto eval = [&net, &grid_net, &ptdf, line, sign](const Eigen::VectorXd& x) {
      return signed_line_flow(net, grid_net, ptdf, line, x, sign);
    };
    (sign > 0 ? runs.plus : runs.minus) = branch_and_bound(mp, inc, limits, eval);
  }
  return combine_signed(
      runs,
      [&](const Eigen::VectorXd& x) {
        return line_flow_violation(net, grid_net, ptdf, line, x);
      },
      /*clamp_at_zero=*/true, limits);
}

AllLinesResult verify_all_lines(const nn::ReluNetwork& net, const grid::Network& grid_net,
                                const grid::PtdfMatrix& ptdf,
                                const bounds::BoundsTable& table, const bounds::Box& box,
                                const std::vector<std::optional<Eigen::VectorXd>>& warm,
                                const BnbLimits& limits, int workers) {
  int ne = grid_net.num_branches();
  AllLinesResult out;
  out.per_line.resize(ne);
  parallel_for(ne, workers, [&](int e) {
    std::optional<Eigen::VectorXd> w;
    if (static_cast<int>(warm.size()) > e) w = warm[e];
    out.per_line[e] = verify_line_flow(net, grid_net, ptdf, table, box, e, w, limits);
  });
  out.v_line = 0.0;
  out.dual_bound = 0.0;
  for (const auto& r : out.per_line) {
    out.v_line = std::max(out.v_line, r.primal_bound);
    out.dual_bound = std::max(out.dual_bound, r.dual_bound);
  }
  return out;
}

OracleResult pattern_enumeration_oracle(const nn::ReluNetwork& net,
                                        const grid::Network* grid_net,
                                        const grid::PtdfMatrix* ptdf,
                                        const bounds::BoundsTable& table,
                                        const bounds::Box& box, const OracleQuery& query) {
  std::vector<std::pair<int, int>> unstable;
  for (int k = 0; k < net.num_layers(); ++k)
    for (int j = 0; j < net.width(k); ++j)
      if (table.stability(k, j) == bounds::Stability::Unstable) unstable.emplace_back(k, j);
  if (unstable.size() > 16)
    throw TooManyUnstable("pattern enumeration limited to 16 unstable neurons, got " +
                          std::to_string(unstable.size()));
  if (query.kind == OracleQuery::Kind::LineFlow && (grid_net == nullptr || ptdf == nullptr))
    throw lp::InconsistentDimensions("line-flow oracle needs the grid and its PTDF");

  int nd = net.input_dim;
  OracleResult best;
  double best_signed = -kInf;

  Eigen::MatrixXd phi_g, phi_d;
  if (grid_net != nullptr && ptdf != nullptr) {
    phi_g = ptdf->phi * grid_net->gen_map();
    phi_d = ptdf->phi * grid_net->load_map();
  }

  long n_patterns = 1L << unstable.size();
  for (long mask = 0; mask < n_patterns; ++mask) {
    // Forward affine composition under the fixed activation pattern.
    Eigen::MatrixXd post_a = Eigen::MatrixXd::Identity(nd, nd);
    Eigen::VectorXd post_c = Eigen::VectorXd::Zero(nd);
    std::vector<Eigen::VectorXd> con_rows;
    std::vector<lp::RowSense> con_sense;
    std::vector<double> con_rhs;

    int u = 0;
    for (int k = 0; k < net.num_layers(); ++k) {
      Eigen::MatrixXd pre_a = net.stages[k].W * post_a;
      Eigen::VectorXd pre_c = net.stages[k].W * post_c + net.stages[k].b;
      post_a = Eigen::MatrixXd::Zero(net.width(k), nd);
      post_c = Eigen::VectorXd::Zero(net.width(k));
      for (int j = 0; j < net.width(k); ++j) {
        bool active = false;
        switch (table.stability(k, j)) {
          case bounds::Stability::Active:
            active = true;
            break;
          case bounds::Stability::Inactive:
            active = false;
            break;
          case bounds::Stability::Unstable:
            active = (mask >> u) & 1;
            // Pattern-consistency constraint on the pre-activation sign.
            con_rows.push_back(pre_a.row(j).transpose());
            con_sense.push_back(active ? lp::RowSense::GreaterEqual
                                       : lp::RowSense::LessEqual);
            con_rhs.push_back(-pre_c[j]);
            ++u;
            break;
        }
        if (active) {
          post_a.row(j) = pre_a.row(j);
          post_c[j] = pre_c[j];
        }
      }
    }
    Eigen::MatrixXd out_a = net.out.W * post_a;
    Eigen::VectorXd out_c = net.out.W * post_c + net.out.b;

    lp::LpProblem lpp;
    lpp.sense = lp::Sense::Maximize;
    lpp.var_lower = box.lo;
    lpp.var_upper = box.hi;
    int m = static_cast<int>(con_rows.size());
    lpp.rows.resize(m, nd);
    lpp.rhs.resize(m);
    lpp.row_sense = con_sense;
    for (int i = 0; i < m; ++i) {
      lpp.rows.row(i) = con_rows[i].transpose();
      lpp.rhs[i] = con_rhs[i];
    }

    for (int sign : {+1, -1}) {
      double s = sign;
      double constant;
      if (query.kind == OracleQuery::Kind::PowerBalance) {
        lpp.objective =
            s * (Eigen::VectorXd::Ones(nd) - out_a.transpose() * Eigen::VectorXd::Ones(out_a.rows()));
        constant = -s * out_c.sum();
      } else {
        Eigen::VectorXd row = (phi_g.row(query.line) * out_a).transpose() -
                              phi_d.row(query.line).transpose();
        lpp.objective = s * row;
        constant =
            s * phi_g.row(query.line).dot(out_c) - grid_net->branches[query.line].limit;
      }
      lp::LpSolution sol = lp::solve_lp(lpp);
      if (sol.status != lp::SolveStatus::Optimal) continue;
      double v = sol.objective + constant;
      if (v > best_signed) {
        best_signed = v;
        best.witness = sol.primal;
      }
    }
    ++best.patterns;
  }

  if (query.kind == OracleQuery::Kind::PowerBalance)
    best.value = best_signed;  // both signs explored, so this is the |.| maximum
  else
    best.value = std::max(0.0, best_signed);
  return best;
}

void save_verify_result(const VerifyResult& r, const std::string& target,
                        const std::string& bounds_method, const std::string& warm_source,
                        const std::string& path) {
  nlohmann::json doc{{"target", target},
                     {"primal", r.primal_bound},
                     {"dual", r.dual_bound},
                     {"gap", r.gap},
                     {"witness_pd", to_std(r.witness)},
                     {"nodes", r.nodes},
                     {"wall_time", r.wall_seconds},
                     {"bounds_method", bounds_method},
                     {"warm_source", warm_source},
                     {"status", r.status == BnbStatus::ProvedOptimal ? "proved-optimal"
                                                                     : "budget-exhausted"},
                     {"screened_zero", r.screened_zero},
                     {"root_dual", r.root_dual},
                     {"root_incumbent", r.root_incumbent}};
  save_json_file(path, doc);
}

}  // namespace opfv::verify
