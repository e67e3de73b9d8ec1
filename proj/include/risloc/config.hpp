#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "risloc/harness.hpp"

namespace risloc {

/// JSON experiment description. Scenario fields sit at the top level under
/// their parameter names (f_hz, p_tx_dbm, g_bs_db, g_ue_db, n_f_db, t_k, b_hz,
/// p_bs_m, t_s, l, reflection_phases_deg); the objects "layout", "grid",
/// "fine_grid", "estimator" and "experiment" hold the rest. Every key is
/// optional and defaults to the reference setup. SI units throughout except
/// the *_deg grid fields. Unknown keys, wrong types and invalid values raise
/// ConfigError.
ExperimentConfig parse_config(std::string_view json_text);

/// As parse_config; a missing or unreadable file is a ConfigError too.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every field of `config`, in the format parse_config reads.
std::string config_to_json(const ExperimentConfig& config);

/// FNV-1a 64 over the compact, key-sorted serialisation of `config`, as 16
/// hex digits. Key order and whitespace of the source file do not matter.
std::string config_hash(const ExperimentConfig& config);

}  // namespace risloc
