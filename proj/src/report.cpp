#include "opfv/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "opfv/grid.hpp"
#include "opfv/util.hpp"

namespace opfv::report {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string pad(const std::string& s, size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace

nlohmann::json render_json(const ReportInputs& in) {
  nlohmann::json out;
  grid::Network net = grid::load_network_file(in.grid_path);
  double max_load_pu = net.nominal_load().sum();
  std::string name = in.case_name;
  if (name.empty()) name = std::filesystem::path(in.grid_path).stem().string();
  out["case"] = name;

  out["characteristics"] = {{"buses", net.num_buses()},
                            {"loads", net.num_loads()},
                            {"generators", net.num_generators()},
                            {"branches", net.num_branches()},
                            {"max_total_load_mw", max_load_pu * net.base_mva}};

  if (!in.model_path.empty()) {
    nlohmann::json model = load_json_file(in.model_path);
    nlohmann::json nn_row = {{"hidden", model.at("arch").at("hidden")}};
    if (model.contains("train_meta")) {
      for (const char* key : {"test_loss_pct_max_load", "avg_pb_violation_pct",
                              "avg_line_violation_pct", "epochs", "best_epoch"})
        if (model["train_meta"].contains(key)) nn_row[key] = model["train_meta"][key];
    }
    out["nn_performance"] = nn_row;
  }

  // Attack artifacts fill the Dataset and PGA columns, verify artifacts the
  // MILP Primal and Dual columns, matched by target.
  auto percent_pb = [&](double v) { return 100.0 * v / max_load_pu; };
  auto percent_line = [&](double v, int line) {
    return 100.0 * v / net.branches[line].limit;
  };

  nlohmann::json pb = nlohmann::json::object();
  nlohmann::json flow = nlohmann::json::object();
  for (const auto& path : in.attack_paths) {
    nlohmann::json a = load_json_file(path);
    std::string obj = a.at("objective").get<std::string>();
    if (obj == "pb") {
      pb["dataset_pct"] = percent_pb(a.at("dataset_best").get<double>());
      pb["pga_pct"] = percent_pb(a.at("best_value").get<double>());
      pb["attack_source"] = path;
    } else {
      int line = a.value("best_line", -1);
      if (line < 0) line = a.value("line", 0);
      flow["dataset_pct"] = percent_line(a.at("dataset_best").get<double>(), line);
      flow["pga_pct"] = percent_line(a.at("best_value").get<double>(), line);
      flow["attack_source"] = path;
    }
  }
  for (const auto& path : in.verify_paths) {
    nlohmann::json v = load_json_file(path);
    std::string target = v.at("target").get<std::string>();
    if (target == "pb") {
      pb["primal_pct"] = percent_pb(v.at("primal").get<double>());
      pb["dual_pct"] = percent_pb(v.at("dual").get<double>());
      pb["status"] = v.value("status", "");
      pb["bounds_method"] = v.value("bounds_method", "");
      pb["verify_source"] = path;
    } else if (target == "flow" || target == "all-lines") {
      // Per-line values normalize against their own capacity before the max.
      double best_primal = 0.0, best_dual = 0.0;
      for (const auto& l : v.at("lines")) {
        int e = l.at("line").get<int>();
        best_primal = std::max(best_primal, percent_line(l.at("primal").get<double>(), e));
        best_dual = std::max(best_dual, percent_line(l.at("dual").get<double>(), e));
      }
      flow["primal_pct"] = best_primal;
      flow["dual_pct"] = best_dual;
      flow["status"] = v.value("status", "");
      flow["bounds_method"] = v.value("bounds_method", "");
      flow["verify_source"] = path;
    } else if (target.rfind("line:", 0) == 0) {
      int e = std::stoi(target.substr(5));
      flow["primal_pct"] = percent_line(v.at("primal").get<double>(), e);
      flow["dual_pct"] = percent_line(v.at("dual").get<double>(), e);
      flow["status"] = v.value("status", "");
      flow["bounds_method"] = v.value("bounds_method", "");
      flow["verify_source"] = path;
    }
  }
  if (!pb.empty()) out["power_balance"] = pb;
  if (!flow.empty()) out["line_flow"] = flow;
  return out;
}

namespace {

void violation_table(std::ostringstream& os, const std::string& title,
                     const std::string& case_name, const nlohmann::json& row,
                     const std::string& footnote) {
  os << title << "\n";
  os << pad("Case", 10) << pad("Dataset", 10) << pad("PGA", 10) << pad("Primal", 10)
     << pad("Dual", 10) << "Status\n";
  auto cell = [&](const char* key) {
    return row.contains(key) ? fmt(row[key].get<double>()) : std::string("-");
  };
  os << pad(case_name, 10) << pad(cell("dataset_pct"), 10) << pad(cell("pga_pct"), 10)
     << pad(cell("primal_pct"), 10) << pad(cell("dual_pct"), 10)
     << (row.contains("status") ? row["status"].get<std::string>() : std::string("-"))
     << "\n";
  os << footnote << "\n\n";
}

}  // namespace

std::string render_table(const ReportInputs& in) {
  nlohmann::json j = render_json(in);
  std::ostringstream os;
  std::string name = j["case"].get<std::string>();

  const auto& c = j["characteristics"];
  os << "Test case characteristics\n";
  os << pad("Case", 10) << pad("Buses", 8) << pad("Loads", 8) << pad("Gens", 8)
     << pad("Branches", 10) << "MaxLoad(MW)\n";
  os << pad(name, 10) << pad(std::to_string(c["buses"].get<int>()), 8)
     << pad(std::to_string(c["loads"].get<int>()), 8)
     << pad(std::to_string(c["generators"].get<int>()), 8)
     << pad(std::to_string(c["branches"].get<int>()), 10)
     << fmt(c["max_total_load_mw"].get<double>()) << "\n\n";

  if (j.contains("nn_performance")) {
    const auto& n = j["nn_performance"];
    os << "Average proxy performance\n";
    os << pad("Case", 10) << pad("Hidden", 14) << pad("TestLoss%", 12) << pad("vPB%", 10)
       << "vLine%\n";
    std::string hidden;
    for (const auto& h : n["hidden"]) hidden += (hidden.empty() ? "" : ",") + std::to_string(h.get<int>());
    auto cell = [&](const char* key) {
      return n.contains(key) ? fmt(n[key].get<double>()) : std::string("-");
    };
    os << pad(name, 10) << pad(hidden, 14) << pad(cell("test_loss_pct_max_load"), 12)
       << pad(cell("avg_pb_violation_pct"), 10) << cell("avg_line_violation_pct") << "\n";
    os << "Test loss normalized by the maximum total load.\n\n";
  }

  if (j.contains("power_balance"))
    violation_table(os, "Worst-case power balance violations", name, j["power_balance"],
                    "All values in % w.r.t. the max loading.");
  if (j.contains("line_flow"))
    violation_table(os, "Worst-case line flow violations", name, j["line_flow"],
                    "All values in % w.r.t. the line capacity.");
  return os.str();
}

}  // namespace opfv::report
