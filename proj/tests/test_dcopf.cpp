#include <doctest.h>

#include <random>

#include "opfv/dcopf.hpp"

using namespace opfv;
using nlohmann::json;

namespace {

grid::Network two_bus() {
  return grid::load_network(
      json{{"base_mva", 1.0},
           {"slack_bus", 1},
           {"buses", {1, 2}},
           {"generators",
            {{{"bus", 1}, {"cost", 1.0}, {"pmin", 0.0}, {"pmax", 1.0}},
             {{"bus", 2}, {"cost", 2.0}, {"pmin", 0.0}, {"pmax", 1.0}}}},
           {"branches", {{{"from", 1}, {"to", 2}, {"susceptance", 1.0}, {"limit", 0.5}}}},
           {"loads", {{{"bus", 2}, {"nominal", 1.0}}}}});
}

// Five buses, ring plus chord; three generators with distinct costs.
grid::Network five_bus() {
  return grid::load_network(
      json{{"base_mva", 1.0},
           {"slack_bus", 1},
           {"buses", {1, 2, 3, 4, 5}},
           {"generators",
            {{{"bus", 1}, {"cost", 1.0}, {"pmin", 0.0}, {"pmax", 1.0}},
             {{"bus", 3}, {"cost", 3.0}, {"pmin", 0.0}, {"pmax", 1.0}},
             {{"bus", 5}, {"cost", 2.0}, {"pmin", 0.0}, {"pmax", 1.0}}}},
           {"branches",
            {{{"from", 1}, {"to", 2}, {"susceptance", 2.0}, {"limit", 1.0}},
             {{"from", 2}, {"to", 3}, {"susceptance", 1.0}, {"limit", 1.0}},
             {{"from", 3}, {"to", 4}, {"susceptance", 1.5}, {"limit", 1.0}},
             {{"from", 4}, {"to", 5}, {"susceptance", 1.0}, {"limit", 1.0}},
             {{"from", 5}, {"to", 1}, {"susceptance", 2.0}, {"limit", 1.0}},
             {{"from", 2}, {"to", 4}, {"susceptance", 1.0}, {"limit", 0.8}}}},
           {"loads",
            {{{"bus", 2}, {"nominal", 0.6}},
             {{"bus", 3}, {"nominal", 0.4}},
             {{"bus", 4}, {"nominal", 0.5}}}}});
}

bool dispatch_feasible(const grid::Network& net, const grid::PtdfMatrix& ptdf,
                       const Eigen::VectorXd& pg, const Eigen::VectorXd& pd,
                       double tol = 1e-8) {
  if (std::abs(pg.sum() - pd.sum()) > tol) return false;
  for (int g = 0; g < net.num_generators(); ++g)
    if (pg[g] < net.generators[g].pmin - tol || pg[g] > net.generators[g].pmax + tol)
      return false;
  Eigen::VectorXd flows = grid::branch_flows(ptdf, net, pg, pd);
  for (int e = 0; e < net.num_branches(); ++e)
    if (std::abs(flows[e]) > net.branches[e].limit + tol) return false;
  return true;
}

}  // namespace

TEST_CASE("two-bus hand case: line limit binds the cheap unit") {
  auto net = two_bus();
  auto ptdf = grid::compute_ptdf(net);
  Eigen::VectorXd demand(1);
  demand << 1.0;
  auto d = dcopf::solve_dcopf(net, ptdf, demand);
  CHECK(d.pg[0] == doctest::Approx(0.5));
  CHECK(d.pg[1] == doctest::Approx(0.5));
  CHECK(d.cost == doctest::Approx(1.5));
  CHECK(std::abs(d.flows[0]) <= 0.5 + 1e-8);
}

TEST_CASE("zero demand yields zero dispatch at zero cost") {
  auto net = two_bus();
  auto ptdf = grid::compute_ptdf(net);
  Eigen::VectorXd demand = Eigen::VectorXd::Zero(1);
  auto d = dcopf::solve_dcopf(net, ptdf, demand);
  CHECK(d.pg.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(d.cost == doctest::Approx(0.0));
}

TEST_CASE("demand above total capacity is infeasible and names the rows") {
  auto net = two_bus();
  auto ptdf = grid::compute_ptdf(net);
  Eigen::VectorXd demand(1);
  demand << 2.2;  // 1.1 x total capacity
  try {
    dcopf::solve_dcopf(net, ptdf, demand);
    FAIL("expected Infeasible");
  } catch (const dcopf::Infeasible& e) {
    CHECK(!e.violated_rows.empty());
    CHECK(std::string(e.what()).find("infeasible") != std::string::npos);
  }
}

TEST_CASE("dispatch satisfies every model constraint") {
  auto net = five_bus();
  auto ptdf = grid::compute_ptdf(net);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> frac(0.6, 1.0);
  Eigen::VectorXd nominal = net.nominal_load();
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::VectorXd demand = nominal;
    for (int i = 0; i < demand.size(); ++i) demand[i] *= frac(rng);
    auto d = dcopf::solve_dcopf(net, ptdf, demand);
    CHECK(dispatch_feasible(net, ptdf, d.pg, demand));
  }
}

TEST_CASE("cost beats brute-force grid search over set-points") {
  // Fix all generators but the last on a 0.05 grid; the last one closes the
  // balance. Any feasible candidate must cost at least the LP optimum.
  auto net = five_bus();
  auto ptdf = grid::compute_ptdf(net);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> frac(0.6, 1.0);
  Eigen::VectorXd nominal = net.nominal_load();
  Eigen::VectorXd cost = net.gen_cost();
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd demand = nominal;
    for (int i = 0; i < demand.size(); ++i) demand[i] *= frac(rng);
    auto d = dcopf::solve_dcopf(net, ptdf, demand);
    const double step = 0.05;
    for (double g0 = 0.0; g0 <= 1.0 + 1e-9; g0 += step) {
      for (double g1 = 0.0; g1 <= 1.0 + 1e-9; g1 += step) {
        double g2 = demand.sum() - g0 - g1;
        Eigen::VectorXd pg(3);
        pg << g0, g1, g2;
        if (!dispatch_feasible(net, ptdf, pg, demand)) continue;
        CHECK(d.cost <= cost.dot(pg) + 1e-7);
      }
    }
  }
}

TEST_CASE("balance dual is nonnegative when more demand costs more") {
  auto net = five_bus();
  auto ptdf = grid::compute_ptdf(net);
  Eigen::VectorXd demand = net.nominal_load();
  auto d = dcopf::solve_dcopf(net, ptdf, demand);
  CHECK(d.balance_dual >= -1e-9);
  auto d2 = dcopf::solve_dcopf(net, ptdf, 0.9 * demand);
  CHECK(d2.cost <= d.cost + 1e-9);
}
