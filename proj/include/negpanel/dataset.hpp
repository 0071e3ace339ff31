#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace negpanel {

// One region × industry × year cell. Regional fields come from ingestion;
// national fields are filled by aggregate_national().
struct PanelObservation {
  std::string region;
  std::string industry;
  int year = 0;

  double real_wage = 0;                          // ω_rt
  double gva_regional = 0;                       // Y_rt
  double price_index_regional = 0;               // G_rt
  double employees_regional = 0;                 // λ_rt
  double employees_all_activities_regional = 0;  // all sectors, region r, year t
  double nominal_wage_regional = 0;              // w_rt
  double flow_to_nation = 0;                     // T_rpt
  double flow_from_nation = 0;                   // T_prt
  double flow_to_leader = 0;                     // T_rlt
  double region_area_km2 = 0;

  // Derived.
  double productivity = 0;                      // P_rt = Y_rt / λ_rt
  double gva_national = 0;                      // Y_pt (= Y_nt)
  double price_index_national = 0;              // G_pt
  double employees_national = 0;                // λ_pt
  double employees_manufacturing_national = 0;  // L_nt
  double nominal_wage_national = 0;             // w_pt

  auto key() const { return std::tie(region, industry, year); }
  bool operator==(const PanelObservation&) const = default;
};

struct RegionInfo {
  std::string id;
  double area_km2 = 0;
  bool operator==(const RegionInfo&) const = default;
};

struct PanelDataset {
  std::vector<PanelObservation> observations;  // sorted by (region, industry, year)
  std::vector<RegionInfo> regions;             // registry, in observation order
  std::vector<std::string> industries;         // registry, sorted
  int first_year = 0;
  int last_year = 0;
  bool has_national = false;

  std::size_t size() const { return observations.size(); }
  const RegionInfo* region(const std::string& id) const;
  bool operator==(const PanelDataset&) const = default;
};

// Builds registries and year range from the observations, sorts them and
// rejects duplicate keys. Derived fields are left untouched.
PanelDataset make_dataset(std::vector<PanelObservation> observations);

}  // namespace negpanel
