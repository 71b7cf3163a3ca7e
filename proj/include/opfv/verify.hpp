#pragma once
// Exact worst-case verification: big-M MILP encoding of the proxy,
// best-first branch and bound with warm starts, and the power-balance and
// line-flow verification problems.

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfv/bounds.hpp"
#include "opfv/grid.hpp"
#include "opfv/lp.hpp"
#include "opfv/nn.hpp"

namespace opfv::verify {

struct UnboundedNeuron : std::runtime_error {
  explicit UnboundedNeuron(const std::string& what) : std::runtime_error(what) {}
};
struct RelaxationUnbounded : std::runtime_error {
  explicit RelaxationUnbounded(const std::string& what) : std::runtime_error(what) {}
};
struct TooManyUnstable : std::runtime_error {
  explicit TooManyUnstable(const std::string& what) : std::runtime_error(what) {}
};

struct VarMap {
  int demand = 0;                        // start of the demand block
  int n_demand = 0;
  std::vector<int> zhat;                 // block start per layer
  std::vector<int> z;
  std::vector<std::vector<int>> binary;  // variable index per neuron, -1 if stable
  int flow = -1;                         // start of the flow block, -1 if absent
  int total = 0;
};

struct MilpProblem {
  lp::LpProblem relaxation;   // maximization; binaries relaxed to [0,1]
  std::vector<int> binaries;  // column indices, layer-major order
  VarMap vars;
  double objective_constant = 0.0;
  int encoded_layers = 0;
};

// Big-M encoding of stages [0, upto_layer) plus optional branch-flow
// variables (needs grid_net and ptdf, only when all layers are encoded).
// Throws UnboundedNeuron if an unstable neuron lacks finite bounds.
MilpProblem encode_milp(const nn::ReluNetwork& net, const bounds::BoundsTable& table,
                        const bounds::Box& box, const grid::Network* grid_net = nullptr,
                        const grid::PtdfMatrix* ptdf = nullptr, int upto_layer = -1);

// Objective setters; sign in {+1,-1} selects the signed half of an |.|.
void set_power_balance_objective(MilpProblem& p, const nn::ReluNetwork& net, int sign);
void set_line_flow_objective(MilpProblem& p, const grid::Network& grid_net, int line,
                             int sign);
void set_preactivation_objective(MilpProblem& p, const nn::ReluNetwork& net, int layer,
                                 int index, int sign);

enum class BnbStatus { ProvedOptimal, BudgetExhausted };

struct NodeLogEntry {
  long node = 0;
  double primal = 0.0;
  double dual = 0.0;
};

struct Incumbent {
  double value = 0.0;
  Eigen::VectorXd demand;
};

struct BnbLimits {
  double time_seconds = std::numeric_limits<double>::infinity();
  long max_nodes = std::numeric_limits<long>::max();
  double gap_tol = 1e-6;
};

struct BnbResult {
  double primal = -std::numeric_limits<double>::infinity();
  double dual = std::numeric_limits<double>::infinity();
  double root_dual = std::numeric_limits<double>::infinity();
  double initial_incumbent = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd witness;  // demand part of the best point
  bool has_witness = false;
  long nodes = 0;
  BnbStatus status = BnbStatus::BudgetExhausted;
  std::vector<NodeLogEntry> log;
  double wall_seconds = 0.0;
};

// Best-first search on node dual bounds, branching on the relaxed binary
// nearest 0.5 (ties: lowest variable index). exact_eval, when given, maps a
// demand vector to the exact objective value and supplies incumbent values.
BnbResult branch_and_bound(const MilpProblem& problem,
                           const std::optional<Incumbent>& warm, const BnbLimits& limits,
                           const std::function<double(const Eigen::VectorXd&)>& exact_eval = {});

struct VerifyResult {
  double primal_bound = 0.0;
  double dual_bound = 0.0;
  double gap = 0.0;
  double root_dual = 0.0;
  double root_incumbent = 0.0;  // incumbent installed before search
  Eigen::VectorXd witness;
  BnbStatus status = BnbStatus::BudgetExhausted;
  long nodes = 0;
  double wall_seconds = 0.0;
  bool screened_zero = false;
  std::vector<NodeLogEntry> log;  // signed runs concatenated
};

// Signed evaluation helpers (forward passes, used for incumbents and replay).
double signed_power_balance(const nn::ReluNetwork& net, const Eigen::VectorXd& x, int sign);
double signed_line_flow(const nn::ReluNetwork& net, const grid::Network& grid_net,
                        const grid::PtdfMatrix& ptdf, int line, const Eigen::VectorXd& x,
                        int sign);
double power_balance_violation(const nn::ReluNetwork& net, const Eigen::VectorXd& x);
double line_flow_violation(const nn::ReluNetwork& net, const grid::Network& grid_net,
                           const grid::PtdfMatrix& ptdf, int line, const Eigen::VectorXd& x);

VerifyResult verify_power_balance(const nn::ReluNetwork& net,
                                  const bounds::BoundsTable& table, const bounds::Box& box,
                                  const std::optional<Eigen::VectorXd>& warm = {},
                                  const BnbLimits& limits = {});

VerifyResult verify_line_flow(const nn::ReluNetwork& net, const grid::Network& grid_net,
                              const grid::PtdfMatrix& ptdf, const bounds::BoundsTable& table,
                              const bounds::Box& box, int line,
                              const std::optional<Eigen::VectorXd>& warm = {},
                              const BnbLimits& limits = {});

// Interval screen: true when the line cannot be violated anywhere in the box.
bool line_screened_out(const nn::ReluNetwork& net, const grid::Network& grid_net,
                       const grid::PtdfMatrix& ptdf, const bounds::BoundsTable& table,
                       const bounds::Box& box, int line);

struct AllLinesResult {
  double v_line = 0.0;       // max primal bound over lines
  double dual_bound = 0.0;   // max dual bound over lines
  std::vector<VerifyResult> per_line;
};

AllLinesResult verify_all_lines(const nn::ReluNetwork& net, const grid::Network& grid_net,
                                const grid::PtdfMatrix& ptdf,
                                const bounds::BoundsTable& table, const bounds::Box& box,
                                const std::vector<std::optional<Eigen::VectorXd>>& warm = {},
                                const BnbLimits& limits = {}, int workers = 1);

// Independent oracle: enumerate activation patterns of the unstable neurons,
// solve one input-space LP per pattern. Exact for sound tables.
struct OracleQuery {
  enum class Kind { PowerBalance, LineFlow } kind = Kind::PowerBalance;
  int line = -1;
};
struct OracleResult {
  double value = 0.0;  // |.| for power balance, max(0,.) for line flow
  Eigen::VectorXd witness;
  long patterns = 0;
};
OracleResult pattern_enumeration_oracle(const nn::ReluNetwork& net,
                                        const grid::Network* grid_net,
                                        const grid::PtdfMatrix* ptdf,
                                        const bounds::BoundsTable& table,
                                        const bounds::Box& box, const OracleQuery& query);

void save_verify_result(const VerifyResult& r, const std::string& target,
                        const std::string& bounds_method, const std::string& warm_source,
                        const std::string& path);

}  // namespace opfv::verify
