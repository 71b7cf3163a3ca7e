#pragma once
// Renders paper-style result tables from stored artifacts. The renderer only
// formats and normalizes stored numbers; it never recomputes results.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace opfv::report {

struct ReportInputs {
  std::string grid_path;                 // required
  std::string model_path;                // optional
  std::vector<std::string> attack_paths; // optional
  std::vector<std::string> verify_paths; // optional
  std::string case_name;                 // defaults to the grid file stem
};

// Structured assembly of all table cells.
nlohmann::json render_json(const ReportInputs& in);
// Plain-text tables mirroring the Dataset / PGA / Primal / Dual layout.
std::string render_table(const ReportInputs& in);

}  // namespace opfv::report
