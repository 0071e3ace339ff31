#pragma once

// Regression specifications for the log-linear real-wage equations:
//
//   eq3 / eq3p  ln ω_rt on national aggregates (+ ln P_rt)
//   eq4         ln ω_rt on regional values
//   eq5 / eq5p  ln(ω_rt / ω_lt) on national totals, flows to the leader
//               region and the four employment ratios (+ ln P_rt)
//   eq3w / eq4w employment-share weighted variants of eq3 and eq4

#include <string>
#include <vector>

#include "negpanel/dataset.hpp"
#include "negpanel/panel.hpp"

namespace negpanel {

struct DroppedCell {
  std::string region;
  std::string industry;
  int year = 0;
  std::string reason;
};

enum class WeightMode { WholeRow, RegressorsOnly };

struct SpecOptions {
  Effects effects = Effects::Unit;
  std::string leader = "LVT";
  bool include_leader = false;  // keep leader rows in eq5 (response is 0 there)
  bool strict = false;          // throw instead of dropping bad cells
  WeightMode weight_mode = WeightMode::WholeRow;
};

struct SpecBuild {
  DesignMatrix design;
  std::vector<DroppedCell> dropped;
};

// Employment ratios of one observation.
struct RatioSet {
  double rl_rmt = 0;  // regional manufacturing employment / industry employment
  double rl_rgt = 0;  // industry employment / regional employment, all activities
  double rl_rkt = 0;  // industry employment / region area
  double rl_rnt = 0;  // industry employment / national industry employment
};

const std::vector<std::string>& spec_names();
bool is_weighted_spec(const std::string& spec);
// Column names of the design a spec produces, intercept first.
std::vector<std::string> spec_columns(const std::string& spec);

PanelDataset aggregate_national(const PanelDataset& data, bool require_complete = false);

// Throws ZeroDenominator naming the first offending cell.
std::vector<RatioSet> compute_rl_ratios(const PanelDataset& data);

SpecBuild build_eq3(const PanelDataset& data, bool with_productivity, const SpecOptions& opt = {});
SpecBuild build_eq4(const PanelDataset& data, const SpecOptions& opt = {});
SpecBuild build_eq5(const PanelDataset& data, const std::string& leader_region, bool with_productivity,
                    const SpecOptions& opt = {});

DesignMatrix build_weighted_alternative(const DesignMatrix& base, const Eigen::VectorXd& weights,
                                        WeightMode mode = WeightMode::WholeRow);

// Share of the cell's employment in its region's manufacturing total (eq3w)
// or in the national total of its industry (eq4w), per design row.
Eigen::VectorXd regional_employment_weights(const PanelDataset& data, const DesignMatrix& design);
Eigen::VectorXd national_employment_weights(const PanelDataset& data, const DesignMatrix& design);

SpecBuild build_spec(const std::string& spec, const PanelDataset& data, const SpecOptions& opt = {});

}  // namespace negpanel
