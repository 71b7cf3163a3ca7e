#include "opfv/grid.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

#include "opfv/util.hpp"

namespace opfv::grid {

namespace {
std::string join(const std::vector<std::string>& parts) {
  std::ostringstream out;
  for (size_t i = 0; i < parts.size(); ++i) out << (i ? "; " : "") << parts[i];
  return out.str();
}
}  // namespace

SchemaError::SchemaError(std::vector<std::string> v)
    : std::runtime_error("grid schema violations: " + join(v)), violations(std::move(v)) {}

int Network::bus_index(int id) const {
  auto it = std::find(buses.begin(), buses.end(), id);
  if (it == buses.end()) throw std::out_of_range("unknown bus id " + std::to_string(id));
  return static_cast<int>(it - buses.begin());
}

Eigen::VectorXd Network::gen_pmin() const {
  Eigen::VectorXd v(num_generators());
  for (int g = 0; g < num_generators(); ++g) v[g] = generators[g].pmin;
  return v;
}
Eigen::VectorXd Network::gen_pmax() const {
  Eigen::VectorXd v(num_generators());
  for (int g = 0; g < num_generators(); ++g) v[g] = generators[g].pmax;
  return v;
}
Eigen::VectorXd Network::gen_cost() const {
  Eigen::VectorXd v(num_generators());
  for (int g = 0; g < num_generators(); ++g) v[g] = generators[g].cost;
  return v;
}
Eigen::VectorXd Network::nominal_load() const {
  Eigen::VectorXd v(num_loads());
  for (int d = 0; d < num_loads(); ++d) v[d] = loads[d].nominal;
  return v;
}
Eigen::VectorXd Network::branch_limits() const {
  Eigen::VectorXd v(num_branches());
  for (int e = 0; e < num_branches(); ++e) v[e] = branches[e].limit;
  return v;
}

Eigen::MatrixXd Network::gen_map() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_buses(), num_generators());
  for (int g = 0; g < num_generators(); ++g) m(bus_index(generators[g].bus), g) = 1.0;
  return m;
}
Eigen::MatrixXd Network::load_map() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(num_buses(), num_loads());
  for (int d = 0; d < num_loads(); ++d) m(bus_index(loads[d].bus), d) = 1.0;
  return m;
}

Eigen::VectorXd Network::bus_injection(const Eigen::VectorXd& pg,
                                       const Eigen::VectorXd& pd) const {
  Eigen::VectorXd inj = Eigen::VectorXd::Zero(num_buses());
  for (int g = 0; g < num_generators(); ++g) inj[bus_index(generators[g].bus)] += pg[g];
  for (int d = 0; d < num_loads(); ++d) inj[bus_index(loads[d].bus)] -= pd[d];
  return inj;
}

Network load_network(const nlohmann::json& doc) {
  std::vector<std::string> bad;
  auto need = [&](const char* key) {
    if (!doc.contains(key)) bad.push_back(std::string("missing field '") + key + "'");
    return doc.contains(key);
  };
  Network net;
  if (need("base_mva")) net.base_mva = doc.at("base_mva").get<double>();
  if (net.base_mva <= 0.0) bad.push_back("base_mva must be positive");
  double base = net.base_mva > 0.0 ? net.base_mva : 1.0;

  if (need("buses")) {
    for (const auto& b : doc.at("buses")) net.buses.push_back(b.get<int>());
  }
  if (net.buses.empty()) bad.push_back("bus list is empty");
  std::vector<int> sorted = net.buses;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    bad.push_back("duplicate bus ids");

  auto known_bus = [&](int id) {
    return std::find(net.buses.begin(), net.buses.end(), id) != net.buses.end();
  };

  if (need("slack_bus")) {
    net.slack_bus = doc.at("slack_bus").get<int>();
    if (!known_bus(net.slack_bus)) {
      if (bad.empty())
        throw InvalidSlack("slack_bus " + std::to_string(net.slack_bus) +
                           " is not a listed bus");
      bad.push_back("slack_bus is not a listed bus");
    }
  }

  if (need("generators")) {
    int g = 0;
    for (const auto& j : doc.at("generators")) {
      Generator gen;
      gen.bus = j.at("bus").get<int>();
      gen.cost = j.at("cost").get<double>() * base;  // currency/MW -> currency/p.u.
      gen.pmin = j.at("pmin").get<double>() / base;
      gen.pmax = j.at("pmax").get<double>() / base;
      if (!known_bus(gen.bus))
        bad.push_back("generator " + std::to_string(g) + " references unknown bus");
      if (gen.pmin > gen.pmax)
        bad.push_back("generator " + std::to_string(g) + " has pmin > pmax");
      net.generators.push_back(gen);
      ++g;
    }
  }
  if (need("branches")) {
    int e = 0;
    for (const auto& j : doc.at("branches")) {
      Branch br;
      br.from = j.at("from").get<int>();
      br.to = j.at("to").get<int>();
      br.susceptance = j.at("susceptance").get<double>();
      br.limit = j.at("limit").get<double>() / base;
      if (!known_bus(br.from) || !known_bus(br.to))
        bad.push_back("branch " + std::to_string(e) + " references unknown bus");
      if (br.from == br.to) bad.push_back("branch " + std::to_string(e) + " is a self-loop");
      if (br.susceptance <= 0.0)
        bad.push_back("branch " + std::to_string(e) + " needs susceptance > 0");
      if (br.limit <= 0.0) bad.push_back("branch " + std::to_string(e) + " needs limit > 0");
      net.branches.push_back(br);
      ++e;
    }
  }
  if (need("loads")) {
    int d = 0;
    for (const auto& j : doc.at("loads")) {
      Load ld;
      ld.bus = j.at("bus").get<int>();
      ld.nominal = j.at("nominal").get<double>() / base;
      if (!known_bus(ld.bus))
        bad.push_back("load " + std::to_string(d) + " references unknown bus");
      if (ld.nominal < 0.0) bad.push_back("load " + std::to_string(d) + " has negative nominal");
      net.loads.push_back(ld);
      ++d;
    }
  }
  if (!bad.empty()) throw SchemaError(bad);

  // Connectivity over branches.
  int n = net.num_buses();
  std::vector<char> seen(n, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (const Branch& br : net.branches) {
      int a = net.bus_index(br.from), b = net.bus_index(br.to);
      int v = -1;
      if (a == u && !seen[b]) v = b;
      if (b == u && !seen[a]) v = a;
      if (v >= 0) {
        seen[v] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  if (reached != n) {
    std::vector<std::string> isolated;
    for (int i = 0; i < n; ++i)
      if (!seen[i]) isolated.push_back(std::to_string(net.buses[i]));
    throw DisconnectedGraph("buses unreachable from bus " + std::to_string(net.buses[0]) +
                            ": " + join(isolated));
  }
  return net;
}

Network load_network_file(const std::string& path) {
  return load_network(load_json_file(path));
}

nlohmann::json to_json(const Network& net) {
  nlohmann::json doc;
  double base = net.base_mva;
  doc["base_mva"] = base;
  doc["slack_bus"] = net.slack_bus;
  doc["buses"] = net.buses;
  doc["generators"] = nlohmann::json::array();
  for (const auto& g : net.generators)
    doc["generators"].push_back({{"bus", g.bus},
                                 {"cost", g.cost / base},
                                 {"pmin", g.pmin * base},
                                 {"pmax", g.pmax * base}});
  doc["branches"] = nlohmann::json::array();
  for (const auto& b : net.branches)
    doc["branches"].push_back({{"from", b.from},
                               {"to", b.to},
                               {"susceptance", b.susceptance},
                               {"limit", b.limit * base}});
  doc["loads"] = nlohmann::json::array();
  for (const auto& l : net.loads)
    doc["loads"].push_back({{"bus", l.bus}, {"nominal", l.nominal * base}});
  return doc;
}

std::string network_hash(const Network& net) { return fnv1a64_hex(to_json(net).dump()); }

PtdfMatrix compute_ptdf(const Network& net) {
  int n = net.num_buses();
  int ne = net.num_branches();
  int slack = net.bus_index(net.slack_bus);

  Eigen::MatrixXd bbus = Eigen::MatrixXd::Zero(n, n);
  for (const Branch& br : net.branches) {
    int f = net.bus_index(br.from), t = net.bus_index(br.to);
    bbus(f, f) += br.susceptance;
    bbus(t, t) += br.susceptance;
    bbus(f, t) -= br.susceptance;
    bbus(t, f) -= br.susceptance;
  }

  // Reduced system: drop the slack row/column, factorize once, back-solve
  // per branch row.
  std::vector<int> keep;
  std::vector<int> reduced_pos(n, -1);
  for (int i = 0; i < n; ++i) {
    if (i == slack) continue;
    reduced_pos[i] = static_cast<int>(keep.size());
    keep.push_back(i);
  }
  int r = n - 1;
  Eigen::MatrixXd bred(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) bred(i, j) = bbus(keep[i], keep[j]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(bred);
  if (r > 0 && !lu.isInvertible())
    throw SingularSystem("reduced susceptance matrix is singular");
  Eigen::MatrixXd x = r > 0 ? lu.inverse() : Eigen::MatrixXd(0, 0);

  PtdfMatrix out;
  out.slack_bus = net.slack_bus;
  out.phi = Eigen::MatrixXd::Zero(ne, n);
  for (int e = 0; e < ne; ++e) {
    const Branch& br = net.branches[e];
    int f = net.bus_index(br.from), t = net.bus_index(br.to);
    for (int j = 0; j < r; ++j) {
      double theta_f = (f == slack) ? 0.0 : x(reduced_pos[f], j);
      double theta_t = (t == slack) ? 0.0 : x(reduced_pos[t], j);
      out.phi(e, keep[j]) = br.susceptance * (theta_f - theta_t);
    }
  }
  return out;
}

Eigen::VectorXd branch_flows(const PtdfMatrix& ptdf, const Network& net,
                             const Eigen::VectorXd& pg, const Eigen::VectorXd& pd) {
  return ptdf.phi * net.bus_injection(pg, pd);
}

}  // namespace opfv::grid
