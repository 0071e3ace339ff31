#include "negpanel/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "negpanel/errors.hpp"
#include "negpanel/specs.hpp"

namespace negpanel {

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

using Setter = void (*)(PanelObservation&, double);

const std::vector<std::pair<std::string, Setter>>& numeric_fields() {
  static const std::vector<std::pair<std::string, Setter>> f{
      {"real_wage", [](PanelObservation& o, double v) { o.real_wage = v; }},
      {"gva_regional", [](PanelObservation& o, double v) { o.gva_regional = v; }},
      {"price_index_regional", [](PanelObservation& o, double v) { o.price_index_regional = v; }},
      {"employees_regional", [](PanelObservation& o, double v) { o.employees_regional = v; }},
      {"employees_all_activities_regional",
       [](PanelObservation& o, double v) { o.employees_all_activities_regional = v; }},
      {"nominal_wage_regional", [](PanelObservation& o, double v) { o.nominal_wage_regional = v; }},
      {"flow_to_nation", [](PanelObservation& o, double v) { o.flow_to_nation = v; }},
      {"flow_from_nation", [](PanelObservation& o, double v) { o.flow_from_nation = v; }},
      {"flow_to_leader", [](PanelObservation& o, double v) { o.flow_to_leader = v; }},
      {"region_area_km2", [](PanelObservation& o, double v) { o.region_area_km2 = v; }},
  };
  return f;
}

std::vector<double> regional_values(const PanelObservation& o) {
  return {o.real_wage,          o.gva_regional,       o.price_index_regional, o.employees_regional,
          o.employees_all_activities_regional, o.nominal_wage_regional, o.flow_to_nation,
          o.flow_from_nation,   o.flow_to_leader,     o.region_area_km2};
}

}  // namespace

const RegionInfo* PanelDataset::region(const std::string& id) const {
  for (const auto& r : regions)
    if (r.id == id) return &r;
  return nullptr;
}

PanelDataset make_dataset(std::vector<PanelObservation> observations) {
  std::sort(observations.begin(), observations.end(),
            [](const auto& a, const auto& b) { return a.key() < b.key(); });
  for (std::size_t i = 1; i < observations.size(); ++i)
    if (observations[i].key() == observations[i - 1].key()) {
      const auto& o = observations[i];
      throw DuplicateKey("duplicate cell (" + o.region + ", " + o.industry + ", " + std::to_string(o.year) + ")");
    }
  PanelDataset d;
  std::set<std::string> seen_r, seen_i;
  for (const auto& o : observations) {
    if (seen_r.insert(o.region).second) d.regions.push_back({o.region, o.region_area_km2});
    if (seen_i.insert(o.industry).second) d.industries.push_back(o.industry);
  }
  std::sort(d.industries.begin(), d.industries.end());
  if (!observations.empty()) {
    auto [lo, hi] = std::minmax_element(observations.begin(), observations.end(),
                                        [](const auto& a, const auto& b) { return a.year < b.year; });
    d.first_year = lo->year;
    d.last_year = hi->year;
  }
  d.observations = std::move(observations);
  return d;
}

Xorshift64Star::Xorshift64Star(std::uint64_t seed) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  state_ = z ^ (z >> 31);
  if (state_ == 0) state_ = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t Xorshift64Star::next() {
  state_ ^= state_ >> 12;
  state_ ^= state_ << 25;
  state_ ^= state_ >> 27;
  return state_ * 0x2545f4914f6cdd1dULL;
}

double Xorshift64Star::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Xorshift64Star::normal(double mean, double sd) {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return mean + sd * z;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  return mean + sd * r * std::cos(a);
}

std::size_t Xorshift64Star::below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"region", "industry", "year"};
    for (const auto& [name, setter] : numeric_fields()) c.push_back(name);
    return c;
  }();
  return cols;
}

LoadResult parse_csv(std::istream& in, int schema_version) {
  if (schema_version != 1) throw SchemaMismatch("unsupported schema version " + std::to_string(schema_version));
  LoadResult result;
  std::string line;
  long line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split(t, ',');
    for (auto& h : header) h = trim(h);
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);
    break;
  }
  if (header.empty()) throw SchemaMismatch("missing header row");

  const auto& expected = csv_columns();
  std::vector<std::string> missing, extra;
  for (const auto& c : expected)
    if (std::find(header.begin(), header.end(), c) == header.end()) missing.push_back(c);
  for (const auto& h : header)
    if (std::find(expected.begin(), expected.end(), h) == expected.end()) extra.push_back(h);
  if (!missing.empty() || !extra.empty() || header.size() != expected.size()) {
    std::string msg = "header does not match schema;";
    for (const auto& m : missing) msg += " missing '" + m + "'";
    for (const auto& e : extra) msg += " extra '" + e + "'";
    if (missing.empty() && extra.empty()) msg += " duplicated columns";
    throw SchemaMismatch(msg);
  }
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos[header[i]] = i;

  std::vector<PanelObservation> obs;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    ++result.rows_read;
    auto fields = split(t, ',');
    for (auto& f : fields) f = trim(f);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "*", "expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    std::string empty_col;
    for (const auto& c : expected)
      if (fields[pos[c]].empty()) {
        empty_col = c;
        break;
      }
    if (!empty_col.empty()) {
      result.rejected.push_back({line_no, "empty field '" + empty_col + "'"});
      continue;
    }
    PanelObservation o;
    o.region = fields[pos["region"]];
    o.industry = fields[pos["industry"]];
    const auto& ys = fields[pos["year"]];
    auto yr = std::from_chars(ys.data(), ys.data() + ys.size(), o.year);
    if (yr.ec != std::errc() || yr.ptr != ys.data() + ys.size()) throw ParseError(line_no, "year", "not an integer: " + ys);
    for (const auto& [name, setter] : numeric_fields()) {
      const auto& s = fields[pos[name]];
      double v = 0;
      auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError(line_no, name, "not a finite number: " + s);
      setter(o, v);
    }
    obs.push_back(std::move(o));
  }
  result.dataset = aggregate_national(make_dataset(std::move(obs)));
  return result;
}

LoadResult load_csv(const std::string& path, int schema_version) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  return parse_csv(in, schema_version);
}

void write_csv(const PanelDataset& data, std::ostream& out, const std::string& comment) {
  if (!comment.empty()) out << "# " << comment << '\n';
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& o : data.observations) {
    out << o.region << ',' << o.industry << ',' << o.year;
    for (double v : regional_values(o)) out << ',' << format_double(v);
    out << '\n';
  }
}

void save_csv(const PanelDataset& data, const std::string& path, const std::string& comment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path);
  write_csv(data, out, comment);
}

ValidationReport validate_panel(const PanelDataset& data) {
  ValidationReport rep;
  static const char* kNames[] = {"real_wage", "gva_regional", "price_index_regional", "employees_regional",
                                 "employees_all_activities_regional", "nominal_wage_regional", "flow_to_nation",
                                 "flow_from_nation", "flow_to_leader", "region_area_km2"};
  std::map<std::pair<std::string, int>, double> manufacturing;
  std::map<std::pair<std::string, int>, double> all_activities;
  std::set<std::tuple<std::string, std::string, int>> present;
  std::map<std::string, std::size_t> periods;
  for (const auto& o : data.observations) {
    const CellRef cell{o.region, o.industry, o.year};
    const auto vals = regional_values(o);
    for (std::size_t i = 0; i < vals.size(); ++i)
      if (!(vals[i] > 0)) rep.findings.push_back({cell, std::string("non-positive ") + kNames[i]});
    if (const auto* reg = data.region(o.region); reg && reg->area_km2 != o.region_area_km2)
      rep.findings.push_back({cell, "region area differs from the registry value"});
    manufacturing[{o.region, o.year}] += o.employees_regional;
    all_activities[{o.region, o.year}] = std::max(all_activities[{o.region, o.year}], o.employees_all_activities_regional);
    present.emplace(o.region, o.industry, o.year);
    ++periods[o.region + "|" + o.industry];
  }
  for (const auto& [key, total] : manufacturing)
    if (total > all_activities[key])
      rep.findings.push_back({{key.first, "*", key.second}, "manufacturing employment exceeds all-activities total"});
  if (!data.observations.empty() && data.last_year - data.first_year + 1 < 2)
    rep.findings.push_back({{"*", "*", data.first_year}, "year range shorter than two periods"});

  for (const auto& r : data.regions)
    for (const auto& ind : data.industries)
      for (int y = data.first_year; y <= data.last_year && !data.observations.empty(); ++y)
        if (!present.count({r.id, ind, y})) rep.missing_cells.push_back({r.id, ind, y});

  rep.units = periods.size();
  if (!periods.empty()) {
    auto [lo, hi] = std::minmax_element(periods.begin(), periods.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
    rep.min_periods = lo->second;
    rep.max_periods = hi->second;
  }
  return rep;
}

SyntheticResult generate_synthetic(const SyntheticConfig& cfg, const std::string& spec) {
  const auto columns = spec_columns(spec);
  for (const auto& [name, value] : cfg.true_coefficients)
    if (std::find(columns.begin(), columns.end(), name) == columns.end())
      throw BadCoefficientNames("coefficient '" + name + "' is not a column of " + spec);
  for (const auto& c : columns)
    if (c != "const" && !cfg.true_coefficients.count(c))
      throw BadCoefficientNames("missing true coefficient for '" + c + "' in " + spec);
  if (cfg.n_regions < 1 || cfg.n_industries < 1 || cfg.n_years < 2)
    throw ValidationError("synthetic panel needs >= 1 region, >= 1 industry and >= 2 years");
  if (!(cfg.missing_rate >= 0.0 && cfg.missing_rate < 1.0)) throw ValidationError("missing_rate must lie in [0, 1)");
  if (cfg.effect_sd < 0 || cfg.noise_sd < 0) throw ValidationError("standard deviations must be >= 0");

  Xorshift64Star rng(cfg.seed);
  static const char* kRegionNames[] = {"NORTE", "CENTRO", "ALENTEJO", "ALGARVE"};
  std::vector<std::string> regions{cfg.leader};
  for (std::size_t r = 1; r < cfg.n_regions; ++r)
    regions.push_back(r <= 4 ? kRegionNames[r - 1] : "R" + std::to_string(r + 1));
  std::vector<std::string> industries;
  for (std::size_t m = 0; m < cfg.n_industries; ++m) industries.push_back("IND" + std::to_string(m + 1));

  TruthRecord truth;
  truth.spec = spec;
  truth.seed = cfg.seed;
  truth.coefficients = cfg.true_coefficients;
  if (!truth.coefficients.count("const")) truth.coefficients["const"] = 0.0;

  // Draw every cell of the full grid, then blank some.
  std::vector<PanelObservation> grid;
  std::map<std::string, double> effect;
  std::vector<double> area(cfg.n_regions);
  for (auto& a : area) a = std::exp(rng.normal(9.0, 0.4));
  for (std::size_t r = 0; r < cfg.n_regions; ++r) {
    for (std::size_t m = 0; m < cfg.n_industries; ++m) {
      const std::string unit = regions[r] + "|" + industries[m];
      const double alpha = rng.normal(0.0, cfg.effect_sd);
      effect[unit] = alpha;
      const double load = cfg.effect_correlation * alpha;
      const double base_gva = rng.normal(4.0, 0.5), base_emp = rng.normal(7.0, 0.5), base_w = rng.normal(0.0, 0.2),
                   base_g = rng.normal(0.0, 0.1), base_to = rng.normal(3.0, 0.5), base_from = rng.normal(3.0, 0.5),
                   base_lead = rng.normal(2.0, 0.5);
      for (std::size_t t = 0; t < cfg.n_years; ++t) {
        PanelObservation o;
        o.region = regions[r];
        o.industry = industries[m];
        o.year = cfg.first_year + static_cast<int>(t);
        o.region_area_km2 = area[r];
        o.gva_regional = std::exp(base_gva + load + rng.normal(0.0, 0.3));
        o.employees_regional = std::round(std::exp(base_emp + rng.normal(0.0, 0.3)));
        o.nominal_wage_regional = std::exp(base_w + load + rng.normal(0.0, 0.3));
        o.price_index_regional = std::exp(base_g + rng.normal(0.0, 0.3));
        o.flow_to_nation = std::exp(base_to + load + rng.normal(0.0, 0.3));
        o.flow_from_nation = std::exp(base_from - load + rng.normal(0.0, 0.3));
        o.flow_to_leader = r == 0 ? 1.0 : std::exp(base_lead + load + rng.normal(0.0, 0.3));
        o.real_wage = 1.0;
        grid.push_back(o);
      }
    }
  }
  // All-activities employment exceeds the full manufacturing total of the region-year.
  std::map<std::pair<std::string, int>, double> manufacturing;
  for (const auto& o : grid) manufacturing[{o.region, o.year}] += o.employees_regional;
  std::map<std::pair<std::string, int>, double> all_act;
  for (const auto& [key, total] : manufacturing) all_act[key] = std::round(total * (2.0 + rng.uniform()));
  for (auto& o : grid) o.employees_all_activities_regional = all_act[{o.region, o.year}];

  std::vector<bool> drop(grid.size(), false);
  if (cfg.missing_count) {
    if (*cfg.missing_count >= grid.size()) throw ValidationError("missing_count must be below the number of cells");
    std::vector<std::size_t> order(grid.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < *cfg.missing_count; ++i) {
      const std::size_t j = i + rng.below(order.size() - i);
      std::swap(order[i], order[j]);
      drop[order[i]] = true;
    }
  } else if (cfg.missing_rate > 0) {
    for (std::size_t i = 0; i < grid.size(); ++i) drop[i] = rng.uniform() < cfg.missing_rate;
  }
  std::vector<PanelObservation> kept;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (!drop[i]) kept.push_back(grid[i]);

  PanelDataset data = aggregate_national(make_dataset(std::move(kept)));

  // Responses follow the spec's log-linear form on the built regressors.
  const bool ratio_spec = spec == "eq5" || spec == "eq5p";
  std::map<std::pair<std::string, int>, double> leader_log_wage;
  if (ratio_spec) {
    for (auto& o : data.observations)
      if (o.region == cfg.leader) {
        const double lw = rng.normal(0.5, 0.2);
        o.real_wage = std::exp(lw);
        leader_log_wage[{o.industry, o.year}] = lw;
      }
  }
  SpecOptions opt;
  opt.leader = cfg.leader;
  const std::string base_spec = spec == "eq3w" ? "eq3" : spec == "eq4w" ? "eq4" : spec;
  const auto built = build_spec(base_spec, data, opt);
  const auto& d = built.design;
  Eigen::VectorXd beta(d.cols());
  for (Eigen::Index j = 0; j < d.cols(); ++j) beta[j] = truth.coefficients.at(d.names[static_cast<std::size_t>(j)]);
  const Eigen::VectorXd xb = d.regressors * beta;

  std::map<std::tuple<std::string, std::string, int>, PanelObservation*> cell;
  for (auto& o : data.observations) cell[{o.region, o.industry, o.year}] = &o;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    const auto& ix = d.index[static_cast<std::size_t>(i)];
    double lw = xb[i] + effect.at(ix.unit) + rng.normal(0.0, cfg.noise_sd);
    if (ratio_spec) lw += leader_log_wage.at({ix.industry, ix.period});
    cell.at({ix.region, ix.industry, ix.period})->real_wage = std::exp(lw);
  }
  // Non-leader rows without a leader cell never enter eq5; give them a wage anyway.
  if (ratio_spec)
    for (auto& o : data.observations)
      if (o.region != cfg.leader && !leader_log_wage.count({o.industry, o.year}))
        o.real_wage = std::exp(rng.normal(0.0, 0.3));

  for (const auto& [unit, a] : effect) truth.unit_effects[unit] = a;
  return {std::move(data), std::move(truth)};
}

void write_truth(const TruthRecord& truth, std::ostream& out) {
  out << "spec=" << truth.spec << '\n';
  out << "seed=" << truth.seed << '\n';
  for (const auto& [name, v] : truth.coefficients) out << "coef." << name << '=' << format_double(v) << '\n';
  for (const auto& [unit, v] : truth.unit_effects) out << "effect." << unit << '=' << format_double(v) << '\n';
}

TruthRecord read_truth(std::istream& in) {
  TruthRecord t;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("truth line without '=': " + line);
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    auto num = [&] {
      double v = 0;
      auto r = std::from_chars(val.data(), val.data() + val.size(), v);
      if (r.ec != std::errc()) throw ValidationError("bad number in truth file: " + val);
      return v;
    };
    if (key == "spec") t.spec = val;
    else if (key == "seed") t.seed = std::stoull(val);
    else if (key.rfind("coef.", 0) == 0) t.coefficients[key.substr(5)] = num();
    else if (key.rfind("effect.", 0) == 0) t.unit_effects[key.substr(7)] = num();
  }
  return t;
}

}  // namespace negpanel
