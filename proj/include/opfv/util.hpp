#pragma once
// Shared utilities: worker-pool loop, FNV-1a hashing, JSON file IO.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace opfv {

// Runs fn(i) for i in [0, count). With workers > 1, indices are pulled from a
// shared counter; fn must only write to per-index slots. The first exception
// thrown by any worker is rethrown after all threads join.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

uint64_t fnv1a64(const std::string& data);
std::string fnv1a64_hex(const std::string& data);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

// Line-delimited JSON: one document per line.
std::vector<nlohmann::json> load_json_lines(const std::string& path);
void save_json_lines(const std::string& path, const std::vector<nlohmann::json>& records);

std::vector<double> to_std(const Eigen::VectorXd& v);
Eigen::VectorXd to_eigen(const std::vector<double>& v);

}  // namespace opfv
