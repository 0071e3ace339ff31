#include "negpanel/specs.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "negpanel/errors.hpp"

namespace negpanel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string cell_name(const PanelObservation& o) {
  return "(" + o.region + ", " + o.industry + ", " + std::to_string(o.year) + ")";
}

std::string unit_of(const PanelObservation& o) { return o.region + "|" + o.industry; }

using Extractor = std::function<double(const PanelObservation&, const RatioSet&)>;

struct Column {
  std::string name;
  std::string source;
  Extractor value;
};

double ratio(double num, double den) { return den > 0 ? num / den : kNaN; }

// Ratios with NaN in place of a zero denominator.
std::vector<RatioSet> ratios_or_nan(const PanelDataset& data) {
  std::map<std::tuple<std::string, int>, double> manufacturing;
  for (const auto& o : data.observations) manufacturing[{o.region, o.year}] += o.employees_regional;
  std::vector<RatioSet> out;
  out.reserve(data.size());
  for (const auto& o : data.observations) {
    const double lam = o.employees_regional;
    out.push_back({ratio(manufacturing[{o.region, o.year}], lam), ratio(lam, o.employees_all_activities_regional),
                   ratio(lam, o.region_area_km2), ratio(lam, o.employees_national)});
  }
  return out;
}

void require_national(const PanelDataset& data) {
  if (!data.has_national) throw MissingColumn("national aggregates (run aggregate_national)");
}

SpecBuild build_design(const PanelDataset& data, const std::string& spec, const std::vector<Column>& columns,
                       const std::function<double(const PanelObservation&)>& response_level,
                       const std::function<bool(const PanelObservation&)>& keep, const SpecOptions& opt) {
  const auto ratios = ratios_or_nan(data);
  SpecBuild out;
  std::vector<std::vector<double>> rows;
  std::vector<double> response;
  for (std::size_t i = 0; i < data.observations.size(); ++i) {
    const auto& o = data.observations[i];
    if (!keep(o)) continue;
    std::vector<double> row{1.0};
    std::string bad;
    const double level = response_level(o);
    if (!(level > 0) || !std::isfinite(level)) bad = "response";
    for (const auto& c : columns) {
      if (!bad.empty()) break;
      const double v = c.value(o, ratios[i]);
      if (!(v > 0) || !std::isfinite(v)) bad = c.source;
      row.push_back(std::log(v));
    }
    if (!bad.empty()) {
      if (opt.strict) throw NonPositiveValue("non-positive " + bad + " at cell " + cell_name(o));
      out.dropped.push_back({o.region, o.industry, o.year, "non-positive " + bad});
      continue;
    }
    rows.push_back(std::move(row));
    response.push_back(std::log(level));
    out.design.index.push_back({unit_of(o), o.year, o.region, o.industry});
  }
  if (rows.empty()) throw EmptySample("spec " + spec + " has no usable observations");

  auto& d = out.design;
  d.spec = spec;
  d.effects = opt.effects;
  d.names.push_back("const");
  for (const auto& c : columns) d.names.push_back(c.name);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(d.names.size());
  d.response = Eigen::Map<const Eigen::VectorXd>(response.data(), n);
  d.regressors.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) d.regressors(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return out;
}

std::vector<Column> eq3_columns(bool with_productivity) {
  std::vector<Column> c{
      {"lnY_pt", "gva_national", [](const auto& o, const auto&) { return o.gva_national; }},
      {"lnT_rpt", "flow_to_nation", [](const auto& o, const auto&) { return o.flow_to_nation; }},
      {"lnG_pt", "price_index_national", [](const auto& o, const auto&) { return o.price_index_national; }},
      {"lnλ_pt", "employees_national", [](const auto& o, const auto&) { return o.employees_national; }},
      {"lnw_pt", "nominal_wage_national", [](const auto& o, const auto&) { return o.nominal_wage_national; }},
      {"lnT_prt", "flow_from_nation", [](const auto& o, const auto&) { return o.flow_from_nation; }},
  };
  if (with_productivity)
    c.push_back({"lnP_rt", "productivity", [](const auto& o, const auto&) { return o.productivity; }});
  return c;
}

std::vector<Column> eq4_columns() {
  return {
      {"lnY_rt", "gva_regional", [](const auto& o, const auto&) { return o.gva_regional; }},
      {"lnT_rpt", "flow_to_nation", [](const auto& o, const auto&) { return o.flow_to_nation; }},
      {"lnG_rt", "price_index_regional", [](const auto& o, const auto&) { return o.price_index_regional; }},
      {"lnλ_rt", "employees_regional", [](const auto& o, const auto&) { return o.employees_regional; }},
      {"lnw_rt", "nominal_wage_regional", [](const auto& o, const auto&) { return o.nominal_wage_regional; }},
      {"lnT_prt", "flow_from_nation", [](const auto& o, const auto&) { return o.flow_from_nation; }},
  };
}

std::vector<Column> eq5_columns(bool with_productivity) {
  std::vector<Column> c{
      {"lnY_nt", "gva_national", [](const auto& o, const auto&) { return o.gva_national; }},
      {"lnT_rlt", "flow_to_leader", [](const auto& o, const auto&) { return o.flow_to_leader; }},
      {"lnL_nt", "employees_manufacturing_national",
       [](const auto& o, const auto&) { return o.employees_manufacturing_national; }},
  };
  if (with_productivity)
    c.push_back({"lnP_rt", "productivity", [](const auto& o, const auto&) { return o.productivity; }});
  c.push_back({"lnRL_rmt", "RL_rmt", [](const auto&, const RatioSet& r) { return r.rl_rmt; }});
  c.push_back({"lnRL_rgt", "RL_rgt", [](const auto&, const RatioSet& r) { return r.rl_rgt; }});
  c.push_back({"lnRL_rkt", "RL_rkt", [](const auto&, const RatioSet& r) { return r.rl_rkt; }});
  c.push_back({"lnRL_rnt", "RL_rnt", [](const auto&, const RatioSet& r) { return r.rl_rnt; }});
  return c;
}

std::vector<std::string> names_of(const std::vector<Column>& cols) {
  std::vector<std::string> out{"const"};
  for (const auto& c : cols) out.push_back(c.name);
  return out;
}

using CellKey = std::tuple<std::string, std::string, int>;

std::map<CellKey, const PanelObservation*> by_cell(const PanelDataset& data) {
  std::map<CellKey, const PanelObservation*> m;
  for (const auto& o : data.observations) m[{o.region, o.industry, o.year}] = &o;
  return m;
}

}  // namespace

const std::vector<std::string>& spec_names() {
  static const std::vector<std::string> names{"eq3", "eq3p", "eq4", "eq5", "eq5p", "eq3w", "eq4w"};
  return names;
}

bool is_weighted_spec(const std::string& spec) { return spec == "eq3w" || spec == "eq4w"; }

std::vector<std::string> spec_columns(const std::string& spec) {
  if (spec == "eq3" || spec == "eq3w") return names_of(eq3_columns(false));
  if (spec == "eq3p") return names_of(eq3_columns(true));
  if (spec == "eq4" || spec == "eq4w") return names_of(eq4_columns());
  if (spec == "eq5") return names_of(eq5_columns(false));
  if (spec == "eq5p") return names_of(eq5_columns(true));
  throw UnknownSpec(spec);
}

PanelDataset aggregate_national(const PanelDataset& data, bool require_complete) {
  struct Cell {
    double gva = 0, employees = 0, wage_bill = 0, price_weighted = 0;
    std::set<std::string> regions;
  };
  std::map<std::pair<std::string, int>, Cell> cells;
  std::map<int, double> manufacturing;
  for (const auto& o : data.observations) {
    auto& c = cells[{o.industry, o.year}];
    c.gva += o.gva_regional;
    c.employees += o.employees_regional;
    c.wage_bill += o.employees_regional * o.nominal_wage_regional;
    c.price_weighted += o.employees_regional * o.price_index_regional;
    c.regions.insert(o.region);
    manufacturing[o.year] += o.employees_regional;
  }
  if (require_complete) {
    for (const auto& [key, c] : cells)
      if (c.regions.size() != data.regions.size())
        throw IncompleteCell("cell (" + key.first + ", " + std::to_string(key.second) + ") covers " +
                             std::to_string(c.regions.size()) + " of " + std::to_string(data.regions.size()) +
                             " regions");
  }
  PanelDataset out = data;
  for (auto& o : out.observations) {
    const auto& c = cells.at({o.industry, o.year});
    o.productivity = o.employees_regional > 0 ? o.gva_regional / o.employees_regional : 0.0;
    o.gva_national = c.gva;
    o.employees_national = c.employees;
    o.employees_manufacturing_national = manufacturing.at(o.year);
    o.nominal_wage_national = c.employees > 0 ? c.wage_bill / c.employees : 0.0;
    o.price_index_national = c.employees > 0 ? c.price_weighted / c.employees : 0.0;
  }
  out.has_national = true;
  return out;
}

std::vector<RatioSet> compute_rl_ratios(const PanelDataset& data) {
  require_national(data);
  auto r = ratios_or_nan(data);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& x = r[i];
    if (std::isnan(x.rl_rmt) || std::isnan(x.rl_rgt) || std::isnan(x.rl_rkt) || std::isnan(x.rl_rnt))
      throw ZeroDenominator("zero denominator in employment ratios at cell " + cell_name(data.observations[i]));
  }
  return r;
}

SpecBuild build_eq3(const PanelDataset& data, bool with_productivity, const SpecOptions& opt) {
  require_national(data);
  return build_design(
      data, with_productivity ? "eq3p" : "eq3", eq3_columns(with_productivity),
      [](const PanelObservation& o) { return o.real_wage; }, [](const PanelObservation&) { return true; }, opt);
}

SpecBuild build_eq4(const PanelDataset& data, const SpecOptions& opt) {
  return build_design(
      data, "eq4", eq4_columns(), [](const PanelObservation& o) { return o.real_wage; },
      [](const PanelObservation&) { return true; }, opt);
}

SpecBuild build_eq5(const PanelDataset& data, const std::string& leader_region, bool with_productivity,
                    const SpecOptions& opt) {
  require_national(data);
  if (!data.region(leader_region)) throw LeaderMissing("leader region " + leader_region + " not in dataset");
  std::map<std::pair<std::string, int>, double> leader_wage;
  for (const auto& o : data.observations)
    if (o.region == leader_region) leader_wage[{o.industry, o.year}] = o.real_wage;

  std::vector<DroppedCell> missing;
  auto keep = [&](const PanelObservation& o) {
    if (o.region == leader_region) return opt.include_leader;
    if (leader_wage.count({o.industry, o.year})) return true;
    if (opt.strict) throw LeaderMissing("leader " + leader_region + " missing for (" + o.industry + ", " + std::to_string(o.year) + ")");
    missing.push_back({o.region, o.industry, o.year, "leader cell missing"});
    return false;
  };
  auto level = [&](const PanelObservation& o) {
    if (o.region == leader_region) return 1.0;
    const double l = leader_wage.at({o.industry, o.year});
    return l > 0 ? o.real_wage / l : kNaN;
  };
  auto out = build_design(data, with_productivity ? "eq5p" : "eq5", eq5_columns(with_productivity), level, keep, opt);
  out.dropped.insert(out.dropped.end(), missing.begin(), missing.end());
  return out;
}

DesignMatrix build_weighted_alternative(const DesignMatrix& base, const Eigen::VectorXd& weights, WeightMode mode) {
  if (weights.size() != base.rows())
    throw WeightMismatch("expected " + std::to_string(base.rows()) + " weights, got " + std::to_string(weights.size()));
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (!(weights[i] > 0) || !std::isfinite(weights[i]))
      throw NonPositiveWeight("weight " + std::to_string(i) + " must be finite and > 0");
  DesignMatrix out = base;
  const Eigen::VectorXd prior = base.row_scale.size() ? base.row_scale : Eigen::VectorXd::Ones(base.rows());
  if (mode == WeightMode::WholeRow) {
    out.response = weights.asDiagonal() * base.response;
    out.regressors = weights.asDiagonal() * base.regressors;
    out.row_scale = prior.cwiseProduct(weights);
  } else {
    const auto icpt = base.intercept();
    for (Eigen::Index j = 0; j < base.cols(); ++j)
      if (!icpt || *icpt != j) out.regressors.col(j) = base.regressors.col(j).cwiseProduct(weights);
  }
  return out;
}

Eigen::VectorXd regional_employment_weights(const PanelDataset& data, const DesignMatrix& design) {
  std::map<std::pair<std::string, int>, double> manufacturing;
  for (const auto& o : data.observations) manufacturing[{o.region, o.year}] += o.employees_regional;
  const auto cells = by_cell(data);
  Eigen::VectorXd w(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const auto& ix = design.index[static_cast<std::size_t>(i)];
    const auto* o = cells.at({ix.region, ix.industry, ix.period});
    w[i] = ratio(o->employees_regional, manufacturing.at({ix.region, ix.period}));
  }
  return w;
}

Eigen::VectorXd national_employment_weights(const PanelDataset& data, const DesignMatrix& design) {
  require_national(data);
  const auto cells = by_cell(data);
  Eigen::VectorXd w(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const auto& ix = design.index[static_cast<std::size_t>(i)];
    const auto* o = cells.at({ix.region, ix.industry, ix.period});
    w[i] = ratio(o->employees_regional, o->employees_national);
  }
  return w;
}

SpecBuild build_spec(const std::string& spec, const PanelDataset& data, const SpecOptions& opt) {
  if (spec == "eq3") return build_eq3(data, false, opt);
  if (spec == "eq3p") return build_eq3(data, true, opt);
  if (spec == "eq4") return build_eq4(data, opt);
  if (spec == "eq5") return build_eq5(data, opt.leader, false, opt);
  if (spec == "eq5p") return build_eq5(data, opt.leader, true, opt);
  if (spec == "eq3w" || spec == "eq4w") {
    auto base = spec == "eq3w" ? build_eq3(data, false, opt) : build_eq4(data, opt);
    const Eigen::VectorXd w = spec == "eq3w" ? regional_employment_weights(data, base.design)
                                             : national_employment_weights(data, base.design);
    base.design = build_weighted_alternative(base.design, w, opt.weight_mode);
    base.design.spec = spec;
    return base;
  }
  throw UnknownSpec(spec);
}

}  // namespace negpanel
