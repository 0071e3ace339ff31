#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "negpanel/dataset.hpp"

namespace negpanel {

// xorshift64* (Vigna 2014) seeded through one round of splitmix64, so that
// seed 0 is usable. Uniforms take the top 53 bits; normals use the polar-free
// Box–Muller transform and cache the second variate. Fixed here rather than
// taken from <random> so fixtures are identical across platforms.
class Xorshift64Star {
 public:
  explicit Xorshift64Star(std::uint64_t seed);
  std::uint64_t next();
  double uniform();                    // [0, 1)
  double normal(double mean = 0.0, double sd = 1.0);
  std::size_t below(std::size_t n);    // uniform integer in [0, n)

 private:
  std::uint64_t state_;
  std::optional<double> spare_;
};

// CSV columns in their canonical order.
const std::vector<std::string>& csv_columns();

struct RejectedRow {
  long line = 0;
  std::string reason;
};

struct LoadResult {
  PanelDataset dataset;
  std::vector<RejectedRow> rejected;
  long rows_read = 0;
};

// Parses the panel CSV (schema version 1), computes national aggregates and
// productivity. Lines starting with '#' are comments. Rows with empty fields
// are rejected with a reason; malformed numbers throw ParseError.
LoadResult load_csv(const std::string& path, int schema_version = 1);
LoadResult parse_csv(std::istream& in, int schema_version = 1);

// Regional columns only, full round-trip precision.
void write_csv(const PanelDataset& data, std::ostream& out, const std::string& comment = "");
void save_csv(const PanelDataset& data, const std::string& path, const std::string& comment = "");

struct CellRef {
  std::string region;
  std::string industry;
  int year = 0;
  bool operator==(const CellRef&) const = default;
};

struct Finding {
  CellRef cell;
  std::string detail;
};

struct ValidationReport {
  std::vector<Finding> findings;
  std::vector<CellRef> missing_cells;  // registry product minus present rows
  std::size_t units = 0;
  std::size_t min_periods = 0;
  std::size_t max_periods = 0;
  bool balanced() const { return missing_cells.empty(); }
};

ValidationReport validate_panel(const PanelDataset& data);

struct SyntheticConfig {
  std::map<std::string, double> true_coefficients;  // keyed by design column name
  double effect_sd = 1.0;
  double noise_sd = 0.1;
  double effect_correlation = 0.0;  // loading of the unit effect on regional regressors
  double missing_rate = 0.0;
  std::optional<std::size_t> missing_count;  // exact number of blanked cells, overrides the rate
  std::uint64_t seed = 1;
  std::size_t n_regions = 5;
  std::size_t n_industries = 9;
  std::size_t n_years = 8;
  int first_year = 1987;
  std::string leader = "LVT";
};

struct TruthRecord {
  std::string spec;
  std::uint64_t seed = 0;
  std::map<std::string, double> coefficients;
  std::map<std::string, double> unit_effects;
};

struct SyntheticResult {
  PanelDataset dataset;
  TruthRecord truth;
};

SyntheticResult generate_synthetic(const SyntheticConfig& cfg, const std::string& spec);

void write_truth(const TruthRecord& truth, std::ostream& out);
TruthRecord read_truth(std::istream& in);

}  // namespace negpanel
