#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "negpanel/datagen.hpp"
#include "negpanel/neg_core.hpp"

namespace negpanel {

// Flat key=value configuration. '#' starts a comment line; keys and values
// are trimmed. Later keys override earlier ones.
using RunConfig = std::map<std::string, std::string>;

RunConfig read_config(const std::string& path);
RunConfig parse_config(std::istream& in);

// FNV-1a over the sorted "key=value" lines, hex encoded.
std::string config_hash(const RunConfig& cfg);

// Economy keys: regions, income, labor, immobile_income (lists separated by
// ','), transport (rows separated by ';'), sigma, mu.
SpatialEconomyd economy_from_config(const RunConfig& cfg);
SolverOptions solver_options_from_config(const RunConfig& cfg);

// Synthetic keys: spec, seed, n_regions, n_industries, n_years, first_year,
// effect_sd, noise_sd, effect_correlation, missing_rate, missing_count,
// leader, coef.<column>=<value>. Missing coefficients come from
// default_coefficients(spec).
SyntheticConfig synthetic_from_config(const RunConfig& cfg, const std::string& spec);
std::map<std::string, double> default_coefficients(const std::string& spec);

// Entry point behind the negpanel binary. Returns the process exit code:
// 0 success, 1 validation error, 2 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace negpanel
