#pragma once
// Power-network data model and PTDF computation. Documents carry MW with a
// network-level MVA base; everything internal is per-unit.

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace opfv::grid {

struct Generator {
  int bus = 0;
  double cost = 0.0;  // currency per p.u.
  double pmin = 0.0, pmax = 0.0;
};

struct Branch {
  int from = 0, to = 0;
  double susceptance = 0.0;  // p.u.
  double limit = 0.0;        // p.u. flow limit
};

struct Load {
  int bus = 0;
  double nominal = 0.0;  // p.u.
};

struct SchemaError : std::runtime_error {
  std::vector<std::string> violations;
  explicit SchemaError(std::vector<std::string> v);
};
struct DisconnectedGraph : std::runtime_error {
  explicit DisconnectedGraph(const std::string& what) : std::runtime_error(what) {}
};
struct InvalidSlack : std::runtime_error {
  explicit InvalidSlack(const std::string& what) : std::runtime_error(what) {}
};
struct SingularSystem : std::runtime_error {
  explicit SingularSystem(const std::string& what) : std::runtime_error(what) {}
};

struct Network {
  double base_mva = 100.0;
  std::vector<int> buses;  // ids, order defines bus indexing
  int slack_bus = 0;
  std::vector<Generator> generators;
  std::vector<Branch> branches;
  std::vector<Load> loads;

  int num_buses() const { return static_cast<int>(buses.size()); }
  int num_generators() const { return static_cast<int>(generators.size()); }
  int num_branches() const { return static_cast<int>(branches.size()); }
  int num_loads() const { return static_cast<int>(loads.size()); }
  int bus_index(int id) const;  // position of a bus id, throws if unknown

  Eigen::VectorXd gen_pmin() const;
  Eigen::VectorXd gen_pmax() const;
  Eigen::VectorXd gen_cost() const;
  Eigen::VectorXd nominal_load() const;
  Eigen::VectorXd branch_limits() const;

  // Bus-incidence maps: num_buses x num_generators / num_loads.
  Eigen::MatrixXd gen_map() const;
  Eigen::MatrixXd load_map() const;

  // Net bus injection for a dispatch/demand pair.
  Eigen::VectorXd bus_injection(const Eigen::VectorXd& pg, const Eigen::VectorXd& pd) const;
};

struct PtdfMatrix {
  Eigen::MatrixXd phi;  // branches x buses, slack column all zero
  int slack_bus = 0;
};

Network load_network(const nlohmann::json& doc);
Network load_network_file(const std::string& path);
nlohmann::json to_json(const Network& net);  // canonical MW document
std::string network_hash(const Network& net);

PtdfMatrix compute_ptdf(const Network& net);

// Branch flows Phi * (Gg pg - Gd pd).
Eigen::VectorXd branch_flows(const PtdfMatrix& ptdf, const Network& net,
                             const Eigen::VectorXd& pg, const Eigen::VectorXd& pd);

}  // namespace opfv::grid
