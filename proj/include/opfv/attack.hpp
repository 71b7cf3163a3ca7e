#pragma once
// Primal acceleration: projected gradient ascent on the violation objective,
// started from the worst dataset points, to produce MILP warm starts.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfv/bounds.hpp"
#include "opfv/dataset.hpp"
#include "opfv/grid.hpp"
#include "opfv/nn.hpp"

namespace opfv::attack {

struct EmptyDataset : std::runtime_error {
  explicit EmptyDataset(const std::string& what) : std::runtime_error(what) {}
};

struct AttackObjective {
  enum class Kind { PowerBalance, Line, MaxLine } kind = Kind::PowerBalance;
  int line = -1;  // for Kind::Line
};

struct AttackConfig {
  AttackObjective objective;
  double lambda = 0.0;   // step size; <= 0 selects 0.01 x per-dimension box width
  int iterations = 200;
  int starts = 50;
  uint64_t seed = 0;
  int workers = 1;
};

struct Trajectory {
  int seed_index = -1;   // dataset index of the start
  int line = -1;         // line attacked, -1 for power balance / max-line
  std::vector<double> values;
};

struct AttackResult {
  double best_value = 0.0;
  Eigen::VectorXd best_pd;
  int best_line = -1;  // violated line at the best point, -1 for power balance
  double dataset_best = 0.0;
  std::vector<Trajectory> trajectories;
  int iterations = 0;
  double lambda = 0.0;  // as configured; 0 means auto
};

// Violation of the objective at x: |imbalance| for power balance,
// max(0, |flow| - limit) for lines.
double violation(const nn::ReluNetwork& net, const grid::Network* grid_net,
                 const grid::PtdfMatrix* ptdf, const AttackObjective& objective,
                 const Eigen::VectorXd& x);

// Ascent direction of the violation at x (subgradient 0 at kinks).
Eigen::VectorXd violation_gradient(const nn::ReluNetwork& net, const grid::Network* grid_net,
                                   const grid::PtdfMatrix* ptdf,
                                   const AttackObjective& objective,
                                   const Eigen::VectorXd& x);

// Dataset indices of the k largest violations, ties kept in dataset order.
std::vector<int> select_seeds(const data::Dataset& dataset, const nn::ReluNetwork& net,
                              const grid::Network* grid_net, const grid::PtdfMatrix* ptdf,
                              const AttackObjective& objective, int k);

// One ascent step with elementwise clamping to the box; subgradient 0 at
// kinks.
Eigen::VectorXd pga_step(const nn::ReluNetwork& net, const grid::Network* grid_net,
                         const grid::PtdfMatrix* ptdf, const AttackObjective& objective,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& step,
                         const bounds::Box& box);

AttackResult run_attack(const nn::ReluNetwork& net, const grid::Network* grid_net,
                        const grid::PtdfMatrix* ptdf, const bounds::Box& box,
                        const data::Dataset& dataset, const AttackConfig& config);

void save_attack(const AttackResult& r, const AttackConfig& cfg, const std::string& path);
AttackResult load_attack(const std::string& path);

}  // namespace opfv::attack
