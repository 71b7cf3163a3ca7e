#include "opfv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "opfv/dcopf.hpp"
#include "opfv/util.hpp"

namespace opfv::data {

std::vector<int> Dataset::split_indices(Split s) const {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i)
    if (samples[i].split == s) idx.push_back(i);
  return idx;
}

std::vector<Eigen::VectorXd> lhs_sample(int n, const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("lhs_sample needs n >= 1");
  if (lo.size() != hi.size()) throw std::invalid_argument("box dimension mismatch");
  for (int d = 0; d < lo.size(); ++d)
    if (lo[d] > hi[d]) throw EmptyBox("box dimension " + std::to_string(d) + " is empty");

  int dims = static_cast<int>(lo.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::VectorXd> out(n, Eigen::VectorXd(dims));

  std::vector<int> strata(n);
  for (int d = 0; d < dims; ++d) {
    std::iota(strata.begin(), strata.end(), 0);
    std::shuffle(strata.begin(), strata.end(), rng);
    double width = (hi[d] - lo[d]) / n;
    for (int i = 0; i < n; ++i)
      out[i][d] = lo[d] + (strata[i] + unit(rng)) * width;
  }
  return out;
}

Dataset generate_dataset(const grid::Network& net, const grid::PtdfMatrix& ptdf, int n,
                         uint64_t seed, int workers) {
  Dataset ds;
  ds.seed = seed;
  ds.requested = n;
  ds.network_hash = grid::network_hash(net);
  Eigen::VectorXd nominal = net.nominal_load();
  ds.box_lo = 0.6 * nominal;
  ds.box_hi = nominal;

  std::vector<Eigen::VectorXd> demands = lhs_sample(n, ds.box_lo, ds.box_hi, seed);
  std::vector<std::optional<Eigen::VectorXd>> labels(n);
  parallel_for(n, workers, [&](int i) {
    try {
      labels[i] = dcopf::solve_dcopf(net, ptdf, demands[i]).pg;
    } catch (const dcopf::Infeasible&) {
      labels[i] = std::nullopt;  // dropped, counted below
    }
  });

  for (int i = 0; i < n; ++i) {
    if (!labels[i]) {
      ++ds.dropped_infeasible;
      continue;
    }
    ds.samples.push_back({demands[i], *labels[i], Split::Train});
  }
  if (ds.samples.empty()) throw AllInfeasible("no LHS sample admits a feasible dispatch");

  // Seeded shuffle, then contiguous 70/10/20 slices.
  int kept = static_cast<int>(ds.samples.size());
  std::vector<int> order(kept);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::shuffle(order.begin(), order.end(), rng);
  int n_train = static_cast<int>(std::llround(0.7 * kept));
  int n_val = static_cast<int>(std::llround(0.1 * kept));
  n_train = std::min(n_train, kept);
  n_val = std::min(n_val, kept - n_train);
  for (int pos = 0; pos < kept; ++pos) {
    Split s = pos < n_train ? Split::Train : pos < n_train + n_val ? Split::Val : Split::Test;
    ds.samples[order[pos]].split = s;
  }
  return ds;
}

namespace {
const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}
Split split_from(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::runtime_error("unknown split tag: " + s);
}
}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::vector<nlohmann::json> records;
  records.push_back({{"header",
                      {{"box_lo", to_std(ds.box_lo)},
                       {"box_hi", to_std(ds.box_hi)},
                       {"seed", ds.seed},
                       {"network_hash", ds.network_hash},
                       {"n_requested", ds.requested},
                       {"n_kept", ds.samples.size()},
                       {"dropped_infeasible", ds.dropped_infeasible}}}});
  for (const auto& s : ds.samples)
    records.push_back(
        {{"pd", to_std(s.pd)}, {"pg", to_std(s.pg)}, {"split", split_name(s.split)}});
  save_json_lines(path, records);
}

Dataset load_dataset(const std::string& path) {
  auto records = load_json_lines(path);
  if (records.empty() || !records[0].contains("header"))
    throw std::runtime_error("dataset file lacks header record: " + path);
  Dataset ds;
  const auto& h = records[0]["header"];
  ds.box_lo = to_eigen(h.at("box_lo").get<std::vector<double>>());
  ds.box_hi = to_eigen(h.at("box_hi").get<std::vector<double>>());
  ds.seed = h.at("seed").get<uint64_t>();
  ds.network_hash = h.at("network_hash").get<std::string>();
  ds.requested = h.at("n_requested").get<int>();
  ds.dropped_infeasible = h.at("dropped_infeasible").get<int>();
  for (size_t i = 1; i < records.size(); ++i) {
    Sample s;
    s.pd = to_eigen(records[i].at("pd").get<std::vector<double>>());
    s.pg = to_eigen(records[i].at("pg").get<std::vector<double>>());
    s.split = split_from(records[i].at("split").get<std::string>());
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace opfv::data
