#include "opfv/bounds.hpp"

#include <chrono>
#include <cmath>

#include "opfv/util.hpp"
#include "opfv/verify.hpp"

namespace opfv::bounds {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* method_name(Method m) {
  switch (m) {
    case Method::None: return "none";
    case Method::Ibp: return "ibp";
    case Method::Crown: return "crown";
    case Method::ObbtMilp: return "obbt-milp";
  }
  return "none";
}

Method method_from(const std::string& name) {
  if (name == "ibp") return Method::Ibp;
  if (name == "crown") return Method::Crown;
  if (name == "obbt" || name == "obbt-milp") return Method::ObbtMilp;
  if (name == "none") return Method::None;
  throw std::invalid_argument("unknown bounds method: " + name);
}

Stability BoundsTable::stability(int layer, int index) const {
  if (lo[layer][index] >= 0.0) return Stability::Active;
  if (hi[layer][index] <= 0.0) return Stability::Inactive;
  return Stability::Unstable;
}

void BoundsTable::refine(int layer, int index, double new_lo, double new_hi, Method by) {
  double cur_lo = lo[layer][index], cur_hi = hi[layer][index];
  double merged_lo = std::max(cur_lo, new_lo);
  double merged_hi = std::min(cur_hi, new_hi);
  if (merged_lo > merged_hi) {
    // Sound intervals can only disagree by roundoff; collapse to a point.
    double mid = 0.5 * (merged_lo + merged_hi);
    merged_lo = merged_hi = mid;
  }
  if (merged_lo > cur_lo || merged_hi < cur_hi) method[layer][index] = by;
  lo[layer][index] = merged_lo;
  hi[layer][index] = merged_hi;
}

int BoundsTable::count_unstable() const {
  int n = 0;
  for (int k = 0; k < num_layers(); ++k)
    for (int j = 0; j < width(k); ++j)
      if (stability(k, j) == Stability::Unstable) ++n;
  return n;
}

bool BoundsTable::covers(const nn::ReluNetwork& net) const {
  if (num_layers() != net.num_layers()) return false;
  for (int k = 0; k < num_layers(); ++k)
    if (width(k) != net.width(k)) return false;
  return true;
}

BoundsTable BoundsTable::unbounded(const nn::ReluNetwork& net) {
  BoundsTable t;
  for (int k = 0; k < net.num_layers(); ++k) {
    t.lo.push_back(Eigen::VectorXd::Constant(net.width(k), -kInf));
    t.hi.push_back(Eigen::VectorXd::Constant(net.width(k), kInf));
    t.method.emplace_back(net.width(k), Method::None);
  }
  return t;
}

BoundsTable ibp(const nn::ReluNetwork& net, const Box& box) {
  if (box.dims() != net.input_dim) throw EmptyBox("box dimension mismatch");
  for (int d = 0; d < box.dims(); ++d)
    if (box.lo[d] > box.hi[d]) throw EmptyBox("box dimension " + std::to_string(d) + " empty");

  BoundsTable t = BoundsTable::unbounded(net);
  Eigen::VectorXd lo = box.lo, hi = box.hi;
  for (int k = 0; k < net.num_layers(); ++k) {
    const Eigen::MatrixXd& w = net.stages[k].W;
    Eigen::MatrixXd wp = w.cwiseMax(0.0), wn = w.cwiseMin(0.0);
    t.lo[k] = wp * lo + wn * hi + net.stages[k].b;
    t.hi[k] = wp * hi + wn * lo + net.stages[k].b;
    std::fill(t.method[k].begin(), t.method[k].end(), Method::Ibp);
    lo = t.lo[k].cwiseMax(0.0);
    hi = t.hi[k].cwiseMax(0.0);
  }
  return t;
}

namespace {

// One backward pass bounding zhat_target given relaxation slopes for the
// earlier layers; returns input-level coefficients and offsets.
struct BackwardOut {
  Eigen::MatrixXd a_lo, a_up;
  Eigen::VectorXd c_lo, c_up;
};

BackwardOut backward_pass(const nn::ReluNetwork& net, const BoundsTable& table,
                          const std::vector<Eigen::VectorXd>& alpha, int target) {
  BackwardOut out;
  out.a_lo = net.stages[target].W;
  out.a_up = net.stages[target].W;
  out.c_lo = net.stages[target].b;
  out.c_up = net.stages[target].b;
  for (int k = target - 1; k >= 0; --k) {
    int w = net.width(k);
    // Relaxation lines for layer k: identity, zero, or the triangle.
    Eigen::VectorXd up_s(w), up_i(w), lo_s(w), lo_i(w);
    for (int j = 0; j < w; ++j) {
      double l = table.lo[k][j], u = table.hi[k][j];
      if (l >= 0.0) {
        up_s[j] = lo_s[j] = 1.0;
        up_i[j] = lo_i[j] = 0.0;
      } else if (u <= 0.0) {
        up_s[j] = lo_s[j] = 0.0;
        up_i[j] = lo_i[j] = 0.0;
      } else {
        up_s[j] = u / (u - l);
        up_i[j] = -l * u / (u - l);
        lo_s[j] = alpha[k][j];
        lo_i[j] = 0.0;
      }
    }
    auto substitute = [&](Eigen::MatrixXd& a, Eigen::VectorXd& c, bool lower_side) {
      Eigen::MatrixXd a_new(a.rows(), w);
      for (int r = 0; r < a.rows(); ++r) {
        for (int j = 0; j < w; ++j) {
          double coef = a(r, j);
          // For a lower bound, nonnegative coefficients take the lower
          // relaxation line; negative ones take the upper line. Mirrored for
          // an upper bound.
          bool use_lower = lower_side ? (coef >= 0.0) : (coef < 0.0);
          double slope = use_lower ? lo_s[j] : up_s[j];
          double icept = use_lower ? lo_i[j] : up_i[j];
          a_new(r, j) = coef * slope;
          c[r] += coef * icept;
        }
      }
      a = a_new * net.stages[k].W;
      c += a_new * net.stages[k].b;
    };
    substitute(out.a_lo, out.c_lo, true);
    substitute(out.a_up, out.c_up, false);
  }
  return out;
}

void concretize(const BackwardOut& bw, const Box& box, Eigen::VectorXd& lo,
                Eigen::VectorXd& hi) {
  Eigen::MatrixXd lp = bw.a_lo.cwiseMax(0.0), ln = bw.a_lo.cwiseMin(0.0);
  Eigen::MatrixXd up = bw.a_up.cwiseMax(0.0), un = bw.a_up.cwiseMin(0.0);
  lo = bw.c_lo + lp * box.lo + ln * box.hi;
  hi = bw.c_up + up * box.hi + un * box.lo;
}

std::vector<Eigen::VectorXd> init_alpha(const nn::ReluNetwork& net, const BoundsTable& table,
                                        const AlphaConfig& cfg) {
  std::vector<Eigen::VectorXd> alpha(net.num_layers());
  for (int k = 0; k < net.num_layers(); ++k) {
    if (static_cast<int>(cfg.slopes.size()) > k && cfg.slopes[k].size() == net.width(k)) {
      alpha[k] = cfg.slopes[k].cwiseMax(0.0).cwiseMin(1.0);
      continue;
    }
    alpha[k].resize(net.width(k));
    for (int j = 0; j < net.width(k); ++j) {
      double l = table.lo[k][j], u = table.hi[k][j];
      // Smaller relaxation area: identity when the interval leans positive.
      alpha[k][j] = (u >= -l) ? 1.0 : 0.0;
    }
  }
  return alpha;
}

double layer_width_total(const nn::ReluNetwork& net, const BoundsTable& table,
                         const std::vector<Eigen::VectorXd>& alpha, int target,
                         const Box& box) {
  Eigen::VectorXd lo, hi;
  concretize(backward_pass(net, table, alpha, target), box, lo, hi);
  return (hi - lo).sum();
}

// Projected gradient descent on the summed concretized width of the target
// layer, over the slopes of earlier unstable neurons. Gradients by central
// differences; the best iterate wins.
void optimize_alpha(const nn::ReluNetwork& net, const BoundsTable& table,
                    std::vector<Eigen::VectorXd>& alpha, int target, const Box& box,
                    const AlphaConfig& cfg) {
  std::vector<std::pair<int, int>> tunable;
  for (int k = 0; k < target; ++k)
    for (int j = 0; j < net.width(k); ++j)
      if (table.stability(k, j) == Stability::Unstable) tunable.emplace_back(k, j);
  if (tunable.empty()) return;

  double best_w = layer_width_total(net, table, alpha, target, box);
  std::vector<Eigen::VectorXd> best_alpha = alpha;
  const double h = 1e-4;
  for (int step = 0; step < cfg.steps; ++step) {
    Eigen::VectorXd grad(tunable.size());
    for (size_t i = 0; i < tunable.size(); ++i) {
      auto [k, j] = tunable[i];
      double saved = alpha[k][j];
      alpha[k][j] = std::min(1.0, saved + h);
      double up = layer_width_total(net, table, alpha, target, box);
      alpha[k][j] = std::max(0.0, saved - h);
      double dn = layer_width_total(net, table, alpha, target, box);
      alpha[k][j] = saved;
      grad[i] = (up - dn) / (2.0 * h);
    }
    double norm = grad.lpNorm<Eigen::Infinity>();
    if (norm < 1e-12) break;
    for (size_t i = 0; i < tunable.size(); ++i) {
      auto [k, j] = tunable[i];
      alpha[k][j] =
          std::min(1.0, std::max(0.0, alpha[k][j] - cfg.step_size * grad[i] / norm));
    }
    double w = layer_width_total(net, table, alpha, target, box);
    if (w < best_w) {
      best_w = w;
      best_alpha = alpha;
    }
  }
  alpha = best_alpha;
}

}  // namespace

BoundsTable crown_bounds(const nn::ReluNetwork& net, const Box& box,
                         const BoundsTable& prior, const AlphaConfig& alpha_cfg) {
  if (!prior.covers(net)) throw MissingPriorBounds("prior table does not cover the network");
  for (int k = 0; k < prior.num_layers(); ++k)
    if (!prior.lo[k].allFinite() || !prior.hi[k].allFinite())
      throw MissingPriorBounds("prior table has unbounded intervals");

  BoundsTable table = prior;
  std::vector<Eigen::VectorXd> alpha = init_alpha(net, table, alpha_cfg);
  for (int target = 0; target < net.num_layers(); ++target) {
    if (alpha_cfg.optimize) optimize_alpha(net, table, alpha, target, box, alpha_cfg);
    Eigen::VectorXd lo, hi;
    concretize(backward_pass(net, table, alpha, target), box, lo, hi);
    for (int j = 0; j < net.width(target); ++j)
      table.refine(target, j, lo[j], hi[j], Method::Crown);
  }
  return table;
}

LayerBoundExprs crown_input_exprs(const nn::ReluNetwork& net, const Box& box,
                                  const BoundsTable& prior, int layer,
                                  const AlphaConfig& alpha_cfg) {
  if (!prior.covers(net)) throw MissingPriorBounds("prior table does not cover the network");
  (void)box;
  std::vector<Eigen::VectorXd> alpha = init_alpha(net, prior, alpha_cfg);
  BackwardOut bw = backward_pass(net, prior, alpha, layer);
  LayerBoundExprs out;
  for (int j = 0; j < net.width(layer); ++j) {
    out.lower.push_back(
        {bw.a_lo.row(j).transpose(), bw.c_lo[j], LinearBoundExpr::Side::Lower});
    out.upper.push_back(
        {bw.a_up.row(j).transpose(), bw.c_up[j], LinearBoundExpr::Side::Upper});
  }
  return out;
}

ObbtResult obbt_milp(const nn::ReluNetwork& net, const Box& box, int layer, int index,
                     BoundSense sense, const ObbtBudget& budget, const BoundsTable& prior) {
  if (budget.seconds <= 0.0 || budget.max_nodes <= 0)
    throw BudgetZero("OBBT budget must be positive");
  if (!prior.covers(net)) throw MissingPriorBounds("prior table does not cover the network");

  // The first layer is affine in the box: the exact extremum is closed-form.
  if (layer == 0) {
    Eigen::VectorXd w = net.stages[0].W.row(index).transpose();
    double b = net.stages[0].b[index];
    double lo = b, hi = b;
    for (int d = 0; d < box.dims(); ++d) {
      lo += std::min(w[d] * box.lo[d], w[d] * box.hi[d]);
      hi += std::max(w[d] * box.lo[d], w[d] * box.hi[d]);
    }
    return {sense == BoundSense::Lower ? lo : hi, true};
  }

  verify::MilpProblem mp = verify::encode_milp(net, prior, box, nullptr, nullptr, layer);
  // Minimization is the negated maximization; the dual (outer) bound of the
  // max problem maps back to a sound outer bound of the min problem.
  int sign = (sense == BoundSense::Upper) ? +1 : -1;
  verify::set_preactivation_objective(mp, net, layer, index, sign);
  verify::BnbLimits limits;
  limits.time_seconds = budget.seconds;
  limits.max_nodes = budget.max_nodes;
  limits.gap_tol = 1e-9;
  verify::BnbResult run = verify::branch_and_bound(mp, std::nullopt, limits);
  bool optimal = run.status == verify::BnbStatus::ProvedOptimal;
  double outer = run.dual;  // only the dual side is sound as a big-M value
  return {sense == BoundSense::Upper ? outer : -outer, optimal};
}

BoundsTable tighten_all(const nn::ReluNetwork& net, const Box& box, Method method,
                        double per_neuron_budget_seconds, int workers,
                        const AlphaConfig& alpha_cfg) {
  BoundsTable base = ibp(net, box);
  if (method == Method::Ibp || method == Method::None) return base;
  if (method == Method::Crown) return crown_bounds(net, box, base, alpha_cfg);

  // OBBT: layer by layer, earlier layers first; later encodings consume the
  // already-refined bounds. Stable neurons have no gap to close.
  BoundsTable table = base;
  ObbtBudget budget;
  budget.seconds = per_neuron_budget_seconds;
  for (int k = 0; k < net.num_layers(); ++k) {
    std::vector<int> todo;
    for (int j = 0; j < net.width(k); ++j)
      if (table.stability(k, j) == Stability::Unstable) todo.push_back(j);
    std::vector<std::pair<double, double>> results(todo.size());
    parallel_for(static_cast<int>(todo.size()), workers, [&](int i) {
      int j = todo[i];
      double lo = obbt_milp(net, box, k, j, BoundSense::Lower, budget, table).value;
      double hi = obbt_milp(net, box, k, j, BoundSense::Upper, budget, table).value;
      results[i] = {lo, hi};
    });
    for (size_t i = 0; i < todo.size(); ++i)
      table.refine(k, todo[i], results[i].first, results[i].second, Method::ObbtMilp);
  }
  return table;
}

void save_bounds(const BoundsTable& table, Method method, double budget,
                 double wall_seconds, const std::string& path) {
  nlohmann::json per = nlohmann::json::array();
  for (int k = 0; k < table.num_layers(); ++k) {
    for (int j = 0; j < table.width(k); ++j) {
      const char* flag = table.stability(k, j) == Stability::Active     ? "active"
                         : table.stability(k, j) == Stability::Inactive ? "inactive"
                                                                        : "unstable";
      per.push_back({{"layer", k},
                     {"index", j},
                     {"lo", table.lo[k][j]},
                     {"hi", table.hi[k][j]},
                     {"flag", flag},
                     {"method", method_name(table.method[k][j])}});
    }
  }
  nlohmann::json doc{{"method", method_name(method)},
                     {"per_neuron", per},
                     {"budget", budget},
                     {"wall_time", wall_seconds}};
  save_json_file(path, doc);
}

BoundsTable load_bounds(const std::string& path, Method* method) {
  nlohmann::json doc = load_json_file(path);
  if (method != nullptr) *method = method_from(doc.at("method").get<std::string>());
  std::vector<std::vector<double>> lo, hi;
  std::vector<std::vector<Method>> tag;
  for (const auto& n : doc.at("per_neuron")) {
    size_t k = n.at("layer").get<int>();
    size_t j = n.at("index").get<int>();
    if (lo.size() <= k) {
      lo.resize(k + 1);
      hi.resize(k + 1);
      tag.resize(k + 1);
    }
    if (lo[k].size() <= j) {
      lo[k].resize(j + 1);
      hi[k].resize(j + 1);
      tag[k].resize(j + 1, Method::None);
    }
    lo[k][j] = n.at("lo").get<double>();
    hi[k][j] = n.at("hi").get<double>();
    tag[k][j] = method_from(n.value("method", "none"));
  }
  BoundsTable t;
  for (size_t k = 0; k < lo.size(); ++k) {
    t.lo.push_back(to_eigen(lo[k]));
    t.hi.push_back(to_eigen(hi[k]));
    t.method.push_back(tag[k]);
  }
  return t;
}

}  // namespace opfv::bounds
