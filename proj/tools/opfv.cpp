// opfv: batch driver for the DC-OPF proxy verification pipeline.
// Stages: gen-data -> train -> attack / tighten -> verify -> report.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "opfv/attack.hpp"
#include "opfv/bounds.hpp"
#include "opfv/dataset.hpp"
#include "opfv/dcopf.hpp"
#include "opfv/grid.hpp"
#include "opfv/nn.hpp"
#include "opfv/report.hpp"
#include "opfv/util.hpp"
#include "opfv/verify.hpp"

namespace {

using namespace opfv;

std::vector<int> parse_hidden(const std::string& spec) {
  std::vector<int> widths;
  std::string cur;
  for (char c : spec + ",") {
    if (c == ',') {
      if (!cur.empty()) widths.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  return widths;
}

bounds::Box demand_box(const grid::Network& net) {
  Eigen::VectorXd nominal = net.nominal_load();
  return {0.6 * nominal, nominal};
}

// Config file support: keys mirror long option names; command-line flags win.
std::vector<std::string> merge_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--config") config_path = args[i + 1];
  if (config_path.empty()) return args;
  nlohmann::json cfg = load_json_file(config_path);
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    std::string flag = "--" + it.key();
    bool present = false;
    for (const auto& a : args)
      if (a == flag) present = true;
    if (present) continue;
    args.push_back(flag);
    if (it.value().is_string())
      args.push_back(it.value().get<std::string>());
    else
      args.push_back(it.value().dump());
  }
  return args;
}

struct TrainMetrics {
  double test_loss = 0.0;
  double avg_pb_pct = 0.0;
  double avg_line_pct = 0.0;
};

TrainMetrics test_metrics(const nn::ReluNetwork& relu, const grid::Network& net,
                          const grid::PtdfMatrix& ptdf, const data::Dataset& ds) {
  TrainMetrics m;
  auto idx = ds.split_indices(data::Split::Test);
  if (idx.empty()) return m;
  double max_load = net.nominal_load().sum();
  Eigen::MatrixXd preds(relu.output_dim, idx.size()), labels(relu.output_dim, idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    const auto& s = ds.samples[idx[i]];
    Eigen::VectorXd y = nn::forward(relu, s.pd);
    preds.col(i) = y;
    labels.col(i) = s.pg;
    m.avg_pb_pct += 100.0 * std::abs(s.pd.sum() - y.sum()) / max_load;
    Eigen::VectorXd flows = grid::branch_flows(ptdf, net, y, s.pd);
    double worst = 0.0;
    for (int e = 0; e < net.num_branches(); ++e)
      worst = std::max(worst, std::max(0.0, std::abs(flows[e]) - net.branches[e].limit) /
                                  net.branches[e].limit);
    m.avg_line_pct += 100.0 * worst;
  }
  m.test_loss = nn::loss_l0(preds, labels);
  m.avg_pb_pct /= idx.size();
  m.avg_line_pct /= idx.size();
  return m;
}

int run(int argc, char** argv) {
  CLI::App app{"DC-OPF proxy training and worst-case verification toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  std::string grid_path, dataset_path, model_path, bounds_path, warm_path, out_path;
  uint64_t seed = 0;
  int workers = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--grid", grid_path, "grid document")->required();
    cmd->add_option("--seed", seed, "global seed");
    cmd->add_option("--workers", workers, "worker pool size");
    cmd->add_option("--config", config_path, "JSON config file");
  };

  auto* gen = app.add_subcommand("gen-data", "sample demands by LHS and label with DC-OPF");
  int n_samples = 1000;
  add_common(gen);
  gen->add_option("--n", n_samples, "sample count");
  gen->add_option("--out", out_path, "dataset file")->required();

  auto* train = app.add_subcommand("train", "train the dispatch proxy");
  std::string hidden_spec = "50,50,50";
  double lr = 0.001, lr_decay = 1.0;
  int patience = 20, max_epochs = 500, batch_size = 32;
  add_common(train);
  train->add_option("--dataset", dataset_path, "dataset file")->required();
  train->add_option("--hidden", hidden_spec, "hidden widths, comma separated");
  train->add_option("--lr", lr, "Adam learning rate");
  train->add_option("--lr-decay", lr_decay, "per-epoch learning-rate factor");
  train->add_option("--patience", patience, "early-stopping patience");
  train->add_option("--epochs", max_epochs, "epoch cap");
  train->add_option("--batch", batch_size, "minibatch size");
  train->add_option("--out", out_path, "model file")->required();

  auto* atk = app.add_subcommand("attack", "projected gradient ascent warm starts");
  std::string objective = "pb";
  int starts = 50, iters = 200, attack_line = -1;
  double lambda = 0.0;
  add_common(atk);
  atk->add_option("--dataset", dataset_path, "dataset file")->required();
  atk->add_option("--model", model_path, "model file")->required();
  atk->add_option("--objective", objective, "pb|flow")->check(CLI::IsMember({"pb", "flow"}));
  atk->add_option("--line", attack_line, "restrict the flow objective to one line");
  atk->add_option("--starts", starts, "number of dataset seeds");
  atk->add_option("--lambda", lambda, "step size; 0 = 1% of the box width per dim");
  atk->add_option("--iters", iters, "ascent iterations");
  atk->add_option("--out", out_path, "attack report")->required();

  auto* tighten = app.add_subcommand("tighten", "pre-activation bound tightening");
  std::string method = "ibp";
  double budget_sec = 10.0;
  add_common(tighten);
  tighten->add_option("--model", model_path, "model file")->required();
  tighten->add_option("--method", method, "ibp|crown|obbt")
      ->check(CLI::IsMember({"ibp", "crown", "obbt"}));
  tighten->add_option("--budget-sec", budget_sec, "per-neuron OBBT budget in seconds");
  tighten->add_option("--out", out_path, "bounds file")->required();

  auto* ver = app.add_subcommand("verify", "exact worst-case verification");
  std::string target = "pb";
  double time_limit = std::numeric_limits<double>::infinity();
  double gap = 1e-6;
  long node_limit = std::numeric_limits<long>::max();
  int verify_line = -1;
  add_common(ver);
  ver->add_option("--model", model_path, "model file")->required();
  ver->add_option("--target", target, "pb|flow|all-lines")
      ->check(CLI::IsMember({"pb", "flow", "all-lines"}));
  ver->add_option("--line", verify_line, "line index for --target flow");
  ver->add_option("--bounds", bounds_path, "bounds file from `tighten`");
  ver->add_option("--warm", warm_path, "attack report used as warm start");
  ver->add_option("--time-limit", time_limit, "wall-clock budget per MILP, seconds");
  ver->add_option("--node-limit", node_limit, "node budget per MILP");
  ver->add_option("--gap", gap, "absolute gap tolerance");
  ver->add_option("--out", out_path, "verification report")->required();

  auto* rep = app.add_subcommand("report", "render result tables from artifacts");
  std::string format = "table";
  std::vector<std::string> attack_paths, verify_paths;
  add_common(rep);
  rep->add_option("--model", model_path, "model file");
  rep->add_option("--attack", attack_paths, "attack report(s)");
  rep->add_option("--verify", verify_paths, "verification report(s)");
  rep->add_option("--format", format, "table|json")->check(CLI::IsMember({"table", "json"}));
  rep->add_option("--out", out_path, "write to file instead of stdout");

  std::vector<std::string> args = merge_config(argc, argv);
  std::reverse(args.begin(), args.end());  // CLI11 parses reversed argument lists
  app.parse(args);

  if (gen->parsed()) {
    auto net = grid::load_network_file(grid_path);
    auto ptdf = grid::compute_ptdf(net);
    auto ds = data::generate_dataset(net, ptdf, n_samples, seed, workers);
    data::save_dataset(ds, out_path);
    std::cerr << "dataset: " << ds.samples.size() << " samples (" << ds.dropped_infeasible
              << " infeasible dropped)\n";
    return 0;
  }

  if (train->parsed()) {
    auto net = grid::load_network_file(grid_path);
    auto ptdf = grid::compute_ptdf(net);
    auto ds = data::load_dataset(dataset_path);
    auto model = nn::init_model(net.num_loads(), parse_hidden(hidden_spec), net.gen_pmin(),
                                net.gen_pmax(), seed);
    nn::TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.lr_decay = lr_decay;
    cfg.patience = patience;
    cfg.max_epochs = max_epochs;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    auto hist = nn::train(model, ds, cfg);
    auto metrics = test_metrics(nn::flatten(model), net, ptdf, ds);
    double max_load = net.nominal_load().sum();
    model.train_meta = {
        {"seed", seed},
        {"lr", lr},
        {"patience", patience},
        {"epochs", hist.train_loss.size()},
        {"best_epoch", hist.best_epoch},
        {"final_val_loss", hist.val_loss.empty() ? 0.0 : hist.val_loss.back()},
        {"test_loss", metrics.test_loss},
        {"test_loss_pct_max_load", 100.0 * metrics.test_loss / max_load},
        {"avg_pb_violation_pct", metrics.avg_pb_pct},
        {"avg_line_violation_pct", metrics.avg_line_pct},
        {"loss_normalizer", "max total load"}};
    nn::save_model(model, out_path);
    std::cerr << "train: " << hist.train_loss.size() << " epochs, best epoch "
              << hist.best_epoch << ", test loss " << metrics.test_loss << "\n";
    return 0;
  }

  if (atk->parsed()) {
    auto net = grid::load_network_file(grid_path);
    auto ptdf = grid::compute_ptdf(net);
    auto ds = data::load_dataset(dataset_path);
    auto model = nn::load_model(model_path);
    auto relu = nn::flatten(model);
    attack::AttackConfig cfg;
    if (objective == "pb")
      cfg.objective.kind = attack::AttackObjective::Kind::PowerBalance;
    else if (attack_line >= 0)
      cfg.objective = {attack::AttackObjective::Kind::Line, attack_line};
    else
      cfg.objective.kind = attack::AttackObjective::Kind::MaxLine;
    cfg.lambda = lambda;
    cfg.iterations = iters;
    cfg.starts = starts;
    cfg.seed = seed;
    cfg.workers = workers;
    auto res = attack::run_attack(relu, &net, &ptdf, demand_box(net), ds, cfg);
    attack::save_attack(res, cfg, out_path);
    std::cerr << "attack: dataset best " << res.dataset_best << ", PGA best "
              << res.best_value << "\n";
    return 0;
  }

  if (tighten->parsed()) {
    auto net = grid::load_network_file(grid_path);
    auto model = nn::load_model(model_path);
    auto relu = nn::flatten(model);
    auto t0 = std::chrono::steady_clock::now();
    auto table = bounds::tighten_all(relu, demand_box(net), bounds::method_from(method),
                                     budget_sec, workers);
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bounds::save_bounds(table, bounds::method_from(method), budget_sec, wall, out_path);
    std::cerr << "tighten: " << table.count_unstable() << " unstable neurons under "
              << method << "\n";
    return 0;
  }

  if (ver->parsed()) {
    auto net = grid::load_network_file(grid_path);
    auto ptdf = grid::compute_ptdf(net);
    auto model = nn::load_model(model_path);
    auto relu = nn::flatten(model);
    if (bounds_path.empty())
      throw verify::UnboundedNeuron(
          "no bounds file given, so every ReLU big-M is unbounded; run `opfv tighten` "
          "first and pass --bounds");
    bounds::Method bmethod;
    auto table = bounds::load_bounds(bounds_path, &bmethod);
    std::optional<Eigen::VectorXd> warm;
    std::string warm_source = "none";
    if (!warm_path.empty()) {
      warm = attack::load_attack(warm_path).best_pd;
      warm_source = warm_path;
    }
    verify::BnbLimits limits;
    limits.time_seconds = time_limit;
    limits.max_nodes = node_limit;
    limits.gap_tol = gap;
    auto box = demand_box(net);

    if (target == "pb") {
      auto r = verify::verify_power_balance(relu, table, box, warm, limits);
      verify::save_verify_result(r, "pb", bounds::method_name(bmethod), warm_source,
                                 out_path);
      std::cerr << "verify pb: primal " << r.primal_bound << ", dual " << r.dual_bound
                << ", nodes " << r.nodes << "\n";
    } else if (target == "flow") {
      if (verify_line < 0) throw CLI::ValidationError("--target flow needs --line");
      auto r =
          verify::verify_line_flow(relu, net, ptdf, table, box, verify_line, warm, limits);
      verify::save_verify_result(r, "line:" + std::to_string(verify_line),
                                 bounds::method_name(bmethod), warm_source, out_path);
      std::cerr << "verify line " << verify_line << ": primal " << r.primal_bound
                << ", dual " << r.dual_bound << "\n";
    } else {
      std::vector<std::optional<Eigen::VectorXd>> warm_map(net.num_branches(), warm);
      auto all =
          verify::verify_all_lines(relu, net, ptdf, table, box, warm_map, limits, workers);
      nlohmann::json lines = nlohmann::json::array();
      for (int e = 0; e < net.num_branches(); ++e) {
        const auto& r = all.per_line[e];
        lines.push_back({{"line", e},
                         {"limit", net.branches[e].limit},
                         {"primal", r.primal_bound},
                         {"dual", r.dual_bound},
                         {"gap", r.gap},
                         {"witness_pd", to_std(r.witness)},
                         {"nodes", r.nodes},
                         {"wall_time", r.wall_seconds},
                         {"screened", r.screened_zero},
                         {"status", r.status == verify::BnbStatus::ProvedOptimal
                                        ? "proved-optimal"
                                        : "budget-exhausted"}});
      }
      bool all_proved = true;
      for (const auto& r : all.per_line)
        all_proved = all_proved && r.status == verify::BnbStatus::ProvedOptimal;
      nlohmann::json doc{{"target", "all-lines"},
                         {"lines", lines},
                         {"v_line_primal", all.v_line},
                         {"v_line_dual", all.dual_bound},
                         {"status", all_proved ? "proved-optimal" : "budget-exhausted"},
                         {"bounds_method", bounds::method_name(bmethod)},
                         {"warm_source", warm_source},
                         {"seed", seed}};
      save_json_file(out_path, doc);
      std::cerr << "verify all-lines: v_l " << all.v_line << " (dual " << all.dual_bound
                << ")\n";
    }
    return 0;
  }

  if (rep->parsed()) {
    report::ReportInputs in;
    in.grid_path = grid_path;
    in.model_path = model_path;
    in.attack_paths = attack_paths;
    in.verify_paths = verify_paths;
    std::string rendered = format == "json" ? report::render_json(in).dump(2) + "\n"
                                            : report::render_table(in);
    if (out_path.empty()) {
      std::cout << rendered;
    } else {
      std::ofstream out(out_path);
      out << rendered;
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    CLI::App dummy;
    return dummy.exit(e);
  } catch (const std::exception& e) {
    nlohmann::json record{{"error", {{"type", typeid(e).name()}, {"message", e.what()}}}};
    std::cerr << record.dump() << "\n";
    return 1;
  }
}
