#pragma once
// Random tiny grid + proxy instances for oracle-based tests: grids of 3-5
// buses and nets of one or two hidden layers, kept small enough for
// activation-pattern enumeration.

#include <random>

#include "opfv/bounds.hpp"
#include "opfv/dcopf.hpp"
#include "opfv/grid.hpp"
#include "opfv/nn.hpp"

namespace opfv::testing {

struct TinyInstance {
  grid::Network net;
  grid::PtdfMatrix ptdf;
  nn::MlpModel model;
  nn::ReluNetwork relu;
  bounds::Box box;
  bounds::BoundsTable ibp_table;
  int unstable = 0;
};

inline grid::Network random_grid(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nbuses(3, 5);
  std::uniform_real_distribution<double> sus(1.0, 3.0), lim(0.4, 1.0), cost(1.0, 3.0),
      load(0.2, 0.5);
  int n = nbuses(rng);
  nlohmann::json doc;
  doc["base_mva"] = 1.0;
  doc["slack_bus"] = 1;
  for (int i = 1; i <= n; ++i) doc["buses"].push_back(i);
  // Spanning tree plus one chord when possible.
  for (int i = 2; i <= n; ++i) {
    std::uniform_int_distribution<int> parent(1, i - 1);
    doc["branches"].push_back({{"from", parent(rng)},
                               {"to", i},
                               {"susceptance", sus(rng)},
                               {"limit", lim(rng)}});
  }
  if (n >= 4)
    doc["branches"].push_back(
        {{"from", 1}, {"to", n}, {"susceptance", sus(rng)}, {"limit", lim(rng)}});

  std::uniform_int_distribution<int> buspick(1, n);
  std::uniform_int_distribution<int> ngen(2, 3), nload(2, 4);
  int g = ngen(rng), d = nload(rng);
  double total_load = 0.0;
  for (int i = 0; i < d; ++i) {
    double nom = load(rng);
    total_load += nom;
    doc["loads"].push_back({{"bus", buspick(rng)}, {"nominal", nom}});
  }
  for (int i = 0; i < g; ++i)
    doc["generators"].push_back({{"bus", buspick(rng)},
                                 {"cost", cost(rng)},
                                 {"pmin", 0.0},
                                 {"pmax", 1.5 * total_load / g}});
  return grid::load_network(doc);
}

// Builds an instance whose IBP-unstable count is within [1, max_unstable];
// weights are rescaled until the count fits.
inline TinyInstance make_instance(uint64_t seed, int max_unstable = 12,
                                  int max_hidden_layers = 2, int max_width = 6) {
  std::mt19937_64 rng(seed);
  TinyInstance inst;
  inst.net = random_grid(rng);
  inst.ptdf = grid::compute_ptdf(inst.net);

  Eigen::VectorXd nominal = inst.net.nominal_load();
  inst.box.lo = 0.6 * nominal;
  inst.box.hi = nominal;

  std::uniform_int_distribution<int> nlayers(1, max_hidden_layers),
      width(3, max_width);
  std::vector<int> hidden(nlayers(rng));
  for (auto& w : hidden) w = width(rng);

  // Scan weight scales and keep the candidate with the most unstable neurons
  // that still fits the enumeration limit.
  std::normal_distribution<double> noise(0.0, 0.5);
  int best_unstable = -1;
  for (int attempt = 0; attempt < 24; ++attempt) {
    auto model = nn::init_model(inst.net.num_loads(), hidden, inst.net.gen_pmin(),
                                inst.net.gen_pmax(), seed + attempt);
    double scale = 3.0 * std::pow(0.82, attempt);
    std::mt19937_64 brng(seed + 1000 + attempt);
    for (auto& l : model.layers) {
      l.W *= scale;
      for (int i = 0; i < l.b.size(); ++i) l.b[i] = 0.1 * noise(brng);
    }
    auto relu = nn::flatten(model);
    auto table = bounds::ibp(relu, inst.box);
    int unstable = table.count_unstable();
    if (unstable >= 1 && unstable <= max_unstable && unstable > best_unstable) {
      inst.model = std::move(model);
      inst.relu = std::move(relu);
      inst.ibp_table = std::move(table);
      inst.unstable = unstable;
      best_unstable = unstable;
    }
  }
  if (best_unstable >= 1) return inst;
  // Deterministic fallback: shrink until everything stabilizes.
  auto model = nn::init_model(inst.net.num_loads(), hidden, inst.net.gen_pmin(),
                              inst.net.gen_pmax(), seed);
  for (auto& l : model.layers) l.W *= 0.1;
  inst.model = std::move(model);
  inst.relu = nn::flatten(inst.model);
  inst.ibp_table = bounds::ibp(inst.relu, inst.box);
  inst.unstable = inst.ibp_table.count_unstable();
  return inst;
}

}  // namespace opfv::testing
