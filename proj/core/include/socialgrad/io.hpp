#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "socialgrad/planner.hpp"
#include "socialgrad/ttsa.hpp"

namespace socialgrad {

// 17 significant digits ("%.17g"), enough to round-trip any double.
std::string format_double(double v);

// Columns: t, p_1..p_n, xstar_1..xstar_n, V, grad_norm, dist_to_pdagger.
void write_flow_csv(std::ostream& os, const FlowRecord& rec);
nlohmann::json flow_to_json(const FlowRecord& rec);

// Columns: k, x_1..x_n, p_1..p_n, tracking_error, incentive_error, V,
// indicator_accepted, xi_norm.
void write_ttsa_csv(std::ostream& os, const TtsaRecord& rec);
nlohmann::json ttsa_config_to_json(const TtsaConfig& cfg);
// Array of samples under "samples", the config under "config".
nlohmann::json ttsa_to_json(const TtsaRecord& rec, const TtsaConfig& cfg);

// Writes text to path, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace socialgrad
