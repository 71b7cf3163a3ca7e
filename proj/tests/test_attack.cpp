#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "opfv/attack.hpp"
#include "opfv/verify.hpp"

using namespace opfv;
using opfv::testing::make_instance;

namespace {

data::Dataset inputs_only_dataset(const bounds::Box& box, int n, uint64_t seed, int out_dim) {
  data::Dataset ds;
  auto pts = data::lhs_sample(n, box.lo, box.hi, seed);
  for (const auto& p : pts)
    ds.samples.push_back({p, Eigen::VectorXd::Zero(out_dim), data::Split::Train});
  ds.box_lo = box.lo;
  ds.box_hi = box.hi;
  return ds;
}

}  // namespace

TEST_CASE("select_seeds: k=1 returns the argmax violation") {
  auto inst = make_instance(601, 10);
  auto ds = inputs_only_dataset(inst.box, 30, 5, inst.relu.output_dim);
  attack::AttackObjective obj;
  auto seeds = attack::select_seeds(ds, inst.relu, &inst.net, &inst.ptdf, obj, 1);
  REQUIRE(seeds.size() == 1);
  double best = attack::violation(inst.relu, &inst.net, &inst.ptdf, obj,
                                  ds.samples[seeds[0]].pd);
  for (const auto& s : ds.samples)
    CHECK(best >= attack::violation(inst.relu, &inst.net, &inst.ptdf, obj, s.pd) - 1e-12);
}

TEST_CASE("select_seeds: all-zero violations fall back to dataset order") {
  // A line with an enormous limit is never violated.
  auto inst = make_instance(611, 10);
  auto big = inst.net;
  for (auto& b : big.branches) b.limit = 1e6;
  auto ds = inputs_only_dataset(inst.box, 10, 6, inst.relu.output_dim);
  attack::AttackObjective obj{attack::AttackObjective::Kind::Line, 0};
  auto seeds = attack::select_seeds(ds, inst.relu, &big, &inst.ptdf, obj, 4);
  REQUIRE(seeds.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(seeds[i] == i);
}

TEST_CASE("select_seeds clamps k to the dataset size") {
  auto inst = make_instance(621, 10);
  auto ds = inputs_only_dataset(inst.box, 5, 7, inst.relu.output_dim);
  auto seeds =
      attack::select_seeds(ds, inst.relu, &inst.net, &inst.ptdf, {}, 50);
  CHECK(seeds.size() == 5);

  data::Dataset empty;
  CHECK_THROWS_AS(attack::select_seeds(empty, inst.relu, &inst.net, &inst.ptdf, {}, 1),
                  attack::EmptyDataset);
}

TEST_CASE("pga_step: zero gradient leaves the point unchanged") {
  // Constant proxy and demand sum equal to the prediction: the imbalance is
  // zero and sign(0) kills the gradient.
  nn::MlpModel m;
  m.input_dim = 2;
  m.hidden = {1};
  m.output_dim = 1;
  m.clip_lo = Eigen::VectorXd::Zero(1);
  m.clip_hi = Eigen::VectorXd::Constant(1, 10.0);
  m.layers.resize(2);
  m.layers[0] = {Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Zero(1)};
  m.layers[1] = {Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 1.0)};
  auto net = nn::flatten(m);
  bounds::Box box{Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2)};
  Eigen::VectorXd x(2);
  x << 0.5, 0.5;  // sum equals the constant output 1.0
  auto next = attack::pga_step(net, nullptr, nullptr, {}, x,
                               Eigen::VectorXd::Constant(2, 0.1), box);
  CHECK((next - x).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("monotone objective drives iterates to the box corner") {
  // Constant zero proxy: imbalance equals the total demand, increasing in
  // every coordinate, so PGA must reach the upper corner and stay there.
  nn::MlpModel m;
  m.input_dim = 2;
  m.hidden = {1};
  m.output_dim = 1;
  m.clip_lo = Eigen::VectorXd::Zero(1);
  m.clip_hi = Eigen::VectorXd::Constant(1, 10.0);
  m.layers.resize(2);
  m.layers[0] = {Eigen::MatrixXd::Zero(1, 2), Eigen::VectorXd::Constant(1, -1.0)};
  m.layers[1] = {Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1)};
  auto net = nn::flatten(m);
  bounds::Box box{Eigen::VectorXd::Constant(2, 0.6), Eigen::VectorXd::Ones(2)};
  Eigen::VectorXd x = box.lo;
  Eigen::VectorXd step = Eigen::VectorXd::Constant(2, 0.05);
  for (int i = 0; i < 20; ++i) x = attack::pga_step(net, nullptr, nullptr, {}, x, step, box);
  CHECK((x - box.hi).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  // Projection fixed point.
  auto again = attack::pga_step(net, nullptr, nullptr, {}, x, step, box);
  CHECK((again - box.hi).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("PGA input gradient matches finite differences off kinks") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int checked = 0;
  for (uint64_t seed : {631u, 632u, 633u}) {
    auto inst = make_instance(seed, 10);
    attack::AttackObjective obj;
    const double h = 1e-5;
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd x(inst.box.dims());
      for (int d = 0; d < x.size(); ++d)
        x[d] = inst.box.lo[d] + unit(rng) * (inst.box.hi[d] - inst.box.lo[d]);
      if (attack::violation(inst.relu, &inst.net, &inst.ptdf, obj, x) < 1e-5)
        continue;  // at or near the |.| kink
      Eigen::VectorXd grad =
          attack::violation_gradient(inst.relu, &inst.net, &inst.ptdf, obj, x);
      for (int d = 0; d < x.size(); ++d) {
        Eigen::VectorXd xp = x, xm = x;
        xp[d] += h;
        xm[d] -= h;
        double vp = attack::violation(inst.relu, &inst.net, &inst.ptdf, obj, xp);
        double vm = attack::violation(inst.relu, &inst.net, &inst.ptdf, obj, xm);
        double v0 = attack::violation(inst.relu, &inst.net, &inst.ptdf, obj, x);
        double fwd = (vp - v0) / h, bwd = (v0 - vm) / h;
        if (std::abs(fwd - bwd) > 1e-6 * std::max(1.0, std::abs(fwd)))
          continue;  // a ReLU kink sits inside the stencil
        double fd = (vp - vm) / (2 * h);
        CAPTURE(seed);
        CAPTURE(trial);
        CAPTURE(d);
        CHECK(std::abs(grad[d] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
        ++checked;
      }
    }
  }
  CHECK(checked > 30);
}

TEST_CASE("iterations=0 reproduces the dataset column") {
  auto inst = make_instance(641, 10);
  auto ds = inputs_only_dataset(inst.box, 25, 9, inst.relu.output_dim);
  attack::AttackConfig cfg;
  cfg.iterations = 0;
  cfg.starts = 5;
  auto r = attack::run_attack(inst.relu, &inst.net, &inst.ptdf, inst.box, ds, cfg);
  CHECK(r.best_value == doctest::Approx(r.dataset_best).epsilon(1e-12));
}

TEST_CASE("attack result is a valid MILP warm start") {
  auto inst = make_instance(651, 8);
  auto ds = inputs_only_dataset(inst.box, 25, 10, inst.relu.output_dim);
  attack::AttackConfig cfg;
  cfg.iterations = 60;
  cfg.starts = 5;
  auto r = attack::run_attack(inst.relu, &inst.net, &inst.ptdf, inst.box, ds, cfg);
  auto v = verify::verify_power_balance(inst.relu, inst.ibp_table, inst.box, r.best_pd);
  CHECK(v.primal_bound >= r.best_value - 1e-9);
  // Feasibility: every iterate stays inside the box, so the best point does.
  for (int d = 0; d < r.best_pd.size(); ++d) {
    CHECK(r.best_pd[d] >= inst.box.lo[d]);
    CHECK(r.best_pd[d] <= inst.box.hi[d]);
  }
}

TEST_CASE("sandwich: dataset best <= PGA best <= proved optimum") {
  for (uint64_t seed : {661u, 662u, 663u}) {
    auto inst = make_instance(seed, 8);
    auto ds = inputs_only_dataset(inst.box, 30, seed, inst.relu.output_dim);
    attack::AttackConfig cfg;
    cfg.iterations = 80;
    cfg.starts = 8;
    auto r = attack::run_attack(inst.relu, &inst.net, &inst.ptdf, inst.box, ds, cfg);
    verify::OracleQuery q;
    auto oracle = verify::pattern_enumeration_oracle(inst.relu, nullptr, nullptr,
                                                     inst.ibp_table, inst.box, q);
    CAPTURE(seed);
    CHECK(r.dataset_best <= r.best_value + 1e-12);
    CHECK(r.best_value <= oracle.value + 1e-9);
  }
}

TEST_CASE("fixed seed and single worker give identical trajectories") {
  auto inst = make_instance(671, 10);
  auto ds = inputs_only_dataset(inst.box, 20, 11, inst.relu.output_dim);
  attack::AttackConfig cfg;
  cfg.iterations = 30;
  cfg.starts = 4;
  auto a = attack::run_attack(inst.relu, &inst.net, &inst.ptdf, inst.box, ds, cfg);
  auto b = attack::run_attack(inst.relu, &inst.net, &inst.ptdf, inst.box, ds, cfg);
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  for (size_t i = 0; i < a.trajectories.size(); ++i) {
    REQUIRE(a.trajectories[i].values.size() == b.trajectories[i].values.size());
    for (size_t t = 0; t < a.trajectories[i].values.size(); ++t)
      CHECK(a.trajectories[i].values[t] == b.trajectories[i].values[t]);
  }
  CHECK(a.best_value == b.best_value);
}

TEST_CASE("attack report round trip") {
  auto inst = make_instance(681, 10);
  auto ds = inputs_only_dataset(inst.box, 15, 12, inst.relu.output_dim);
  attack::AttackConfig cfg;
  cfg.iterations = 10;
  cfg.starts = 3;
  auto r = attack::run_attack(inst.relu, &inst.net, &inst.ptdf, inst.box, ds, cfg);
  attack::save_attack(r, cfg, "attack_rt.json");
  auto l = attack::load_attack("attack_rt.json");
  CHECK(l.best_value == doctest::Approx(r.best_value));
  CHECK((l.best_pd - r.best_pd).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(l.dataset_best == doctest::Approx(r.dataset_best));
  std::remove("attack_rt.json");
}

TEST_CASE("max-line attack runs per screened-in line plus the worst-line chase") {
  auto inst = make_instance(691, 8);
  auto ds = inputs_only_dataset(inst.box, 20, 13, inst.relu.output_dim);
  attack::AttackConfig cfg;
  cfg.objective.kind = attack::AttackObjective::Kind::MaxLine;
  cfg.iterations = 30;
  cfg.starts = 3;
  cfg.workers = 2;
  auto r = attack::run_attack(inst.relu, &inst.net, &inst.ptdf, inst.box, ds, cfg);
  CHECK(r.best_value >= r.dataset_best - 1e-12);
  CHECK(r.best_value >= 0.0);
}
