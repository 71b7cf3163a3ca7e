#pragma once
// Training-corpus generation: Latin hypercube demand samples in the
// 60-100%-of-nominal box, labeled by DC-OPF, split 70/10/20.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "opfv/grid.hpp"

namespace opfv::data {

enum class Split { Train, Val, Test };

struct Sample {
  Eigen::VectorXd pd;
  Eigen::VectorXd pg;
  Split split = Split::Train;
};

struct Dataset {
  std::vector<Sample> samples;
  Eigen::VectorXd box_lo, box_hi;
  uint64_t seed = 0;
  std::string network_hash;
  int requested = 0;
  int dropped_infeasible = 0;

  std::vector<int> split_indices(Split s) const;
};

struct EmptyBox : std::runtime_error {
  explicit EmptyBox(const std::string& what) : std::runtime_error(what) {}
};
struct AllInfeasible : std::runtime_error {
  explicit AllInfeasible(const std::string& what) : std::runtime_error(what) {}
};

// One sample per equal-width stratum in every dimension, deterministic in
// the seed.
std::vector<Eigen::VectorXd> lhs_sample(int n, const Eigen::VectorXd& lo,
                                        const Eigen::VectorXd& hi, uint64_t seed);

Dataset generate_dataset(const grid::Network& net, const grid::PtdfMatrix& ptdf, int n,
                         uint64_t seed, int workers = 1);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace opfv::data
