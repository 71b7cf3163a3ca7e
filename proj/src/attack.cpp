#include "opfv/attack.hpp"

#include <algorithm>
#include <cmath>

#include "opfv/util.hpp"
#include "opfv/verify.hpp"

namespace opfv::attack {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Raw signed margin of one line, |flow| - limit without the clamp.
double line_margin(const nn::ReluNetwork& net, const grid::Network& grid_net,
                   const grid::PtdfMatrix& ptdf, int line, const Eigen::VectorXd& x) {
  Eigen::VectorXd pg = nn::forward(net, x);
  double flow = grid::branch_flows(ptdf, grid_net, pg, x)[line];
  return std::abs(flow) - grid_net.branches[line].limit;
}

int worst_line(const nn::ReluNetwork& net, const grid::Network& grid_net,
               const grid::PtdfMatrix& ptdf, const Eigen::VectorXd& x) {
  int best = 0;
  double best_m = -std::numeric_limits<double>::infinity();
  for (int e = 0; e < grid_net.num_branches(); ++e) {
    double m = line_margin(net, grid_net, ptdf, e, x);
    if (m > best_m) {
      best_m = m;
      best = e;
    }
  }
  return best;
}

}  // namespace

Eigen::VectorXd violation_gradient(const nn::ReluNetwork& net, const grid::Network* grid_net,
                                   const grid::PtdfMatrix* ptdf,
                                   const AttackObjective& objective,
                                   const Eigen::VectorXd& x) {
  if (objective.kind == AttackObjective::Kind::PowerBalance) {
    double s = sgn(x.sum() - nn::forward(net, x).sum());
    if (s == 0.0) return Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd cot = Eigen::VectorXd::Constant(net.output_dim, -s);
    return Eigen::VectorXd::Constant(x.size(), s) + nn::input_gradient(net, x, cot);
  }
  int line = objective.kind == AttackObjective::Kind::Line
                 ? objective.line
                 : worst_line(net, *grid_net, *ptdf, x);
  Eigen::VectorXd pg = nn::forward(net, x);
  double flow = grid::branch_flows(*ptdf, *grid_net, pg, x)[line];
  double s = sgn(flow);
  if (s == 0.0) return Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd phi_gen = (ptdf->phi.row(line) * grid_net->gen_map()).transpose();
  Eigen::VectorXd phi_load = (ptdf->phi.row(line) * grid_net->load_map()).transpose();
  return nn::input_gradient(net, x, s * phi_gen) - s * phi_load;
}

double violation(const nn::ReluNetwork& net, const grid::Network* grid_net,
                 const grid::PtdfMatrix* ptdf, const AttackObjective& objective,
                 const Eigen::VectorXd& x) {
  switch (objective.kind) {
    case AttackObjective::Kind::PowerBalance:
      return std::abs(x.sum() - nn::forward(net, x).sum());
    case AttackObjective::Kind::Line:
      return std::max(0.0, line_margin(net, *grid_net, *ptdf, objective.line, x));
    case AttackObjective::Kind::MaxLine: {
      double best = 0.0;
      for (int e = 0; e < grid_net->num_branches(); ++e)
        best = std::max(best, line_margin(net, *grid_net, *ptdf, e, x));
      return std::max(0.0, best);
    }
  }
  return 0.0;
}

std::vector<int> select_seeds(const data::Dataset& dataset, const nn::ReluNetwork& net,
                              const grid::Network* grid_net, const grid::PtdfMatrix* ptdf,
                              const AttackObjective& objective, int k) {
  int n = static_cast<int>(dataset.samples.size());
  if (n == 0) throw EmptyDataset("cannot select attack seeds from an empty dataset");
  std::vector<std::pair<double, int>> scored(n);
  for (int i = 0; i < n; ++i)
    scored[i] = {violation(net, grid_net, ptdf, objective, dataset.samples[i].pd), i};
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<int> out;
  for (int i = 0; i < std::min(k, n); ++i) out.push_back(scored[i].second);
  return out;
}

Eigen::VectorXd pga_step(const nn::ReluNetwork& net, const grid::Network* grid_net,
                         const grid::PtdfMatrix* ptdf, const AttackObjective& objective,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& step,
                         const bounds::Box& box) {
  Eigen::VectorXd g = violation_gradient(net, grid_net, ptdf, objective, x);
  Eigen::VectorXd next = x + step.cwiseProduct(g);
  return next.cwiseMax(box.lo).cwiseMin(box.hi);
}

AttackResult run_attack(const nn::ReluNetwork& net, const grid::Network* grid_net,
                        const grid::PtdfMatrix* ptdf, const bounds::Box& box,
                        const data::Dataset& dataset, const AttackConfig& config) {
  if (config.lambda < 0.0 && config.lambda != 0.0)
    throw std::invalid_argument("lambda must be positive (or 0 for auto)");
  Eigen::VectorXd step =
      config.lambda > 0.0
          ? Eigen::VectorXd::Constant(box.dims(), config.lambda)
          : (0.01 * (box.hi - box.lo)).eval();

  // Work list: (objective, seed dataset index) pairs. For the max-line
  // objective this is one per-line search over the screened-in lines plus a
  // follow-the-worst-line variant, all multi-start.
  struct Run {
    AttackObjective objective;
    int seed_index;
  };
  std::vector<Run> runs;
  if (config.objective.kind == AttackObjective::Kind::MaxLine) {
    bounds::BoundsTable screen_table = bounds::ibp(net, box);
    for (int e = 0; e < grid_net->num_branches(); ++e) {
      if (verify::line_screened_out(net, *grid_net, *ptdf, screen_table, box, e)) continue;
      AttackObjective line_obj{AttackObjective::Kind::Line, e};
      for (int s : select_seeds(dataset, net, grid_net, ptdf, line_obj, config.starts))
        runs.push_back({line_obj, s});
    }
    for (int s : select_seeds(dataset, net, grid_net, ptdf, config.objective, config.starts))
      runs.push_back({config.objective, s});
  } else {
    for (int s :
         select_seeds(dataset, net, grid_net, ptdf, config.objective, config.starts))
      runs.push_back({config.objective, s});
  }

  AttackResult res;
  res.iterations = config.iterations;
  res.lambda = config.lambda;
  res.trajectories.resize(runs.size());

  struct Best {
    double value = -1.0;
    Eigen::VectorXd point;
  };
  std::vector<Best> bests(runs.size());

  parallel_for(static_cast<int>(runs.size()), config.workers, [&](int r) {
    const Run& run = runs[r];
    Eigen::VectorXd x = dataset.samples[run.seed_index].pd;
    Trajectory& traj = res.trajectories[r];
    traj.seed_index = run.seed_index;
    traj.line = run.objective.kind == AttackObjective::Kind::Line ? run.objective.line : -1;
    double v = violation(net, grid_net, ptdf, run.objective, x);
    traj.values.push_back(v);
    Best best{v, x};
    for (int it = 0; it < config.iterations; ++it) {
      x = pga_step(net, grid_net, ptdf, run.objective, x, step, box);
      v = violation(net, grid_net, ptdf, run.objective, x);
      traj.values.push_back(v);
      // Best-so-far: PGA on a piecewise-linear objective may oscillate.
      if (v > best.value) best = {v, x};
    }
    bests[r] = best;
  });

  // Dataset column semantics: the best violation over the raw dataset.
  res.dataset_best = 0.0;
  for (const auto& s : dataset.samples)
    res.dataset_best =
        std::max(res.dataset_best, violation(net, grid_net, ptdf, config.objective, s.pd));

  res.best_value = -1.0;
  for (const auto& b : bests) {
    if (b.value > res.best_value) {
      res.best_value = b.value;
      res.best_pd = b.point;
    }
  }
  if (res.best_value < res.dataset_best) {
    // Can only happen when every start was screened away; fall back to the
    // best dataset point.
    for (const auto& s : dataset.samples) {
      if (violation(net, grid_net, ptdf, config.objective, s.pd) == res.dataset_best) {
        res.best_value = res.dataset_best;
        res.best_pd = s.pd;
        break;
      }
    }
  }
  if (config.objective.kind == AttackObjective::Kind::Line)
    res.best_line = config.objective.line;
  else if (config.objective.kind == AttackObjective::Kind::MaxLine)
    res.best_line = worst_line(net, *grid_net, *ptdf, res.best_pd);
  return res;
}

void save_attack(const AttackResult& r, const AttackConfig& cfg, const std::string& path) {
  const char* obj = cfg.objective.kind == AttackObjective::Kind::PowerBalance ? "pb"
                    : cfg.objective.kind == AttackObjective::Kind::Line       ? "line"
                                                                              : "flow";
  nlohmann::json doc{{"objective", obj},
                     {"line", cfg.objective.line},
                     {"best_line", r.best_line},
                     {"seeds", cfg.starts},
                     {"best_value", r.best_value},
                     {"best_pd", to_std(r.best_pd)},
                     {"iters", r.iterations},
                     {"lambda", r.lambda},
                     {"dataset_best", r.dataset_best},
                     {"seed", cfg.seed}};
  save_json_file(path, doc);
}

AttackResult load_attack(const std::string& path) {
  nlohmann::json doc = load_json_file(path);
  AttackResult r;
  r.best_value = doc.at("best_value").get<double>();
  r.best_pd = to_eigen(doc.at("best_pd").get<std::vector<double>>());
  r.best_line = doc.value("best_line", -1);
  r.dataset_best = doc.at("dataset_best").get<double>();
  r.iterations = doc.at("iters").get<int>();
  r.lambda = doc.at("lambda").get<double>();
  return r;
}

}  // namespace opfv::attack
