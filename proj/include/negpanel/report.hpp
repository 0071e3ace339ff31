#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "negpanel/panel.hpp"

namespace negpanel {

enum class Layout { Text, Csv };

struct TableCell {
  std::string coefficient;  // 3 decimals
  std::string marker;       // "*", "**" or ""
  std::string t_stat;       // "(15.239)"
  std::string p_value;      // "(0.000)"
  std::string summary() const { return coefficient + " / " + t_stat + " / " + p_value; }
};

struct EstimatorBlock {
  std::string label;
  Estimator estimator = Estimator::Pooled;
  std::vector<std::optional<TableCell>> cells;  // aligned with EstimationTable::columns
  std::string r_squared;
  std::string durbin_watson;
  std::string dof;
  std::string n_obs;
  std::string residual_sd;
};

struct EstimationTable {
  std::string title;
  std::string spec;
  std::vector<std::string> columns;
  std::vector<EstimatorBlock> blocks;
  std::optional<std::string> hausman;  // "72.843*" or "-3.100 (invalid contrast)"
  std::vector<std::string> footnotes;
};

std::string format_fixed3(double v);
std::string spec_title(const std::string& spec);

// Throws SpecMismatch when the fits come from different specs.
EstimationTable build_table(const std::vector<FitResult>& results, const std::optional<HausmanResult>& hausman);
std::string render_table(const std::vector<FitResult>& results, const std::optional<HausmanResult>& hausman,
                         Layout layout = Layout::Text);
std::string render_table(const EstimationTable& table, Layout layout = Layout::Text);

// One row per coefficient per estimator, full precision beside display values.
std::string export_csv(const std::vector<FitResult>& results, const std::optional<HausmanResult>& hausman = std::nullopt);

struct ImportedResults {
  std::vector<FitResult> results;
  std::optional<HausmanResult> hausman;
};
ImportedResults import_csv_export(std::istream& in);

}  // namespace negpanel
