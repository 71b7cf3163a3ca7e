#pragma once
// Pre-activation intervals for every ReLU (clip layers included) over the
// demand box: interval propagation, backward linear propagation with
// optimizable lower-relaxation slopes, and time-limited MILP tightening.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfv/nn.hpp"

namespace opfv::bounds {

struct EmptyBox : std::runtime_error {
  explicit EmptyBox(const std::string& what) : std::runtime_error(what) {}
};
struct MissingPriorBounds : std::runtime_error {
  explicit MissingPriorBounds(const std::string& what) : std::runtime_error(what) {}
};
struct BudgetZero : std::runtime_error {
  explicit BudgetZero(const std::string& what) : std::runtime_error(what) {}
};

struct Box {
  Eigen::VectorXd lo, hi;
  int dims() const { return static_cast<int>(lo.size()); }
  Eigen::VectorXd midpoint() const { return 0.5 * (lo + hi); }
};

enum class Method { None, Ibp, Crown, ObbtMilp };
enum class Stability { Active, Inactive, Unstable };

const char* method_name(Method m);
Method method_from(const std::string& name);

struct BoundsTable {
  std::vector<Eigen::VectorXd> lo, hi;           // per layer, pre-activation
  std::vector<std::vector<Method>> method;       // producing method per neuron

  int num_layers() const { return static_cast<int>(lo.size()); }
  int width(int k) const { return static_cast<int>(lo[k].size()); }
  Stability stability(int layer, int index) const;
  // Intersects with the stored interval; updates may only shrink it.
  void refine(int layer, int index, double new_lo, double new_hi, Method by);
  int count_unstable() const;
  bool covers(const nn::ReluNetwork& net) const;

  static BoundsTable unbounded(const nn::ReluNetwork& net);
};

BoundsTable ibp(const nn::ReluNetwork& net, const Box& box);

struct AlphaConfig {
  int steps = 20;          // projected-gradient steps on the concretized bound
  double step_size = 0.1;
  bool optimize = true;
  // Initial lower-relaxation slope per layer/neuron; empty selects
  // alpha = 1 when hi >= -lo, else 0.
  std::vector<Eigen::VectorXd> slopes;
};

// Backward linear propagation, layer by layer, refining `prior`. Resulting
// intervals are intersections with the prior, so widths never grow.
BoundsTable crown_bounds(const nn::ReluNetwork& net, const Box& box,
                         const BoundsTable& prior, const AlphaConfig& alpha = {});

// Input-level linear bound expressions for one layer's pre-activations.
struct LinearBoundExpr {
  Eigen::VectorXd coeffs;  // over the demand inputs
  double offset = 0.0;
  enum class Side { Lower, Upper } side = Side::Lower;
  double eval(const Eigen::VectorXd& x) const { return coeffs.dot(x) + offset; }
};
struct LayerBoundExprs {
  std::vector<LinearBoundExpr> lower, upper;
};
LayerBoundExprs crown_input_exprs(const nn::ReluNetwork& net, const Box& box,
                                  const BoundsTable& prior, int layer,
                                  const AlphaConfig& alpha = {});

enum class BoundSense { Lower, Upper };

struct ObbtBudget {
  double seconds = std::numeric_limits<double>::infinity();
  long max_nodes = std::numeric_limits<long>::max();
};

struct ObbtResult {
  double value = 0.0;
  bool optimal = false;  // true when branch and bound closed the gap
};

// Branch-and-bound min/max of one pre-activation over the box; returns the
// dual (outer) bound when the budget runs out, never the incumbent.
ObbtResult obbt_milp(const nn::ReluNetwork& net, const Box& box, int layer, int index,
                     BoundSense sense, const ObbtBudget& budget, const BoundsTable& prior);

// Layer-by-layer driver: every neuron's interval is the intersection of the
// IBP interval with the requested method's interval. Neurons already stable
// under IBP are skipped by the costlier methods.
BoundsTable tighten_all(const nn::ReluNetwork& net, const Box& box, Method method,
                        double per_neuron_budget_seconds = 10.0, int workers = 1,
                        const AlphaConfig& alpha = {});

void save_bounds(const BoundsTable& table, Method method, double budget,
                 double wall_seconds, const std::string& path);
BoundsTable load_bounds(const std::string& path, Method* method = nullptr);

}  // namespace opfv::bounds
