#include "negpanel/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <sstream>

#include "negpanel/errors.hpp"

namespace negpanel {

namespace {

std::string full(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string paren(double v) { return "(" + format_fixed3(v) + ")"; }

std::string block_label(Estimator e) {
  switch (e) {
    case Estimator::Pooled: return "Pooled OLS";
    case Estimator::Lsdv: return "LSDV";
    case Estimator::RandomEffects: return "Random effects";
  }
  return "?";
}

std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : std::string(width - w, ' ') + s;
}

std::string hausman_text(const HausmanResult& h) {
  if (!h.valid) return format_fixed3(h.statistic) + " (invalid contrast)";
  return format_fixed3(h.statistic) + significance_marker(h.p_value, 0.05, 0.05);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ValidationError("bad number in export: " + s);
  return v;
}

const std::vector<std::string> kExportColumns{
    "spec",        "estimator",     "effects",     "name",         "coefficient",   "std_error",
    "t_stat",      "p_value",       "coefficient_display", "t_display", "p_display", "marker",
    "r_squared",   "durbin_watson", "residual_sd", "regression_se", "dof",          "n_obs",
    "hausman_statistic", "hausman_dof", "hausman_p", "hausman_valid"};

}  // namespace

std::string format_fixed3(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string spec_title(const std::string& spec) {
  if (spec == "eq3") return "Estimation of the real-wage equation with national-level regressors (without productivity)";
  if (spec == "eq3p") return "Estimation of the real-wage equation with national-level regressors (with productivity)";
  if (spec == "eq4") return "Estimation of the real-wage equation with regional-level regressors";
  if (spec == "eq5") return "Estimation of the agglomeration equation without productivity";
  if (spec == "eq5p") return "Estimation of the agglomeration equation with productivity";
  if (spec == "eq3w")
    return "Estimation of the real-wage equation with national-level regressors, weighted by industry share of regional employment";
  if (spec == "eq4w")
    return "Estimation of the real-wage equation with regional-level regressors, weighted by regional share of national industry employment";
  return "Estimation of " + spec;
}

EstimationTable build_table(const std::vector<FitResult>& results, const std::optional<HausmanResult>& hausman) {
  if (results.empty()) throw SpecMismatch("no fits to render");
  EstimationTable t;
  t.spec = results.front().spec;
  for (const auto& r : results)
    if (r.spec != t.spec) throw SpecMismatch("fits come from different specs: " + t.spec + " and " + r.spec);
  t.title = spec_title(t.spec);

  // Column order: intercept first, then first-seen order across fits.
  for (const auto& r : results)
    for (const auto& n : r.names)
      if (std::find(t.columns.begin(), t.columns.end(), n) == t.columns.end()) t.columns.push_back(n);
  auto icpt = std::find(t.columns.begin(), t.columns.end(), std::string("const"));
  if (icpt != t.columns.end()) std::rotate(t.columns.begin(), icpt, icpt + 1);

  for (const auto& r : results) {
    EstimatorBlock b;
    b.label = block_label(r.estimator);
    b.estimator = r.estimator;
    for (const auto& col : t.columns) {
      auto it = std::find(r.names.begin(), r.names.end(), col);
      if (it == r.names.end()) {
        b.cells.emplace_back();
        continue;
      }
      const auto j = it - r.names.begin();
      b.cells.push_back(TableCell{format_fixed3(r.coefficients[j]), significance_marker(r.p_values[j]),
                                  paren(r.t_stats[j]), paren(r.p_values[j])});
    }
    b.r_squared = format_fixed3(r.r_squared);
    b.durbin_watson = format_fixed3(r.durbin_watson);
    b.dof = std::to_string(r.dof);
    b.n_obs = std::to_string(r.n_obs);
    b.residual_sd = format_fixed3(r.residual_sd);
    t.blocks.push_back(std::move(b));
  }
  if (hausman) t.hausman = hausman_text(*hausman);
  t.footnotes = {"(*) Coefficient statistically significant at 5%.",
                 "(**) Coefficient statistically significant at 10%."};
  return t;
}

std::string render_table(const EstimationTable& t, Layout layout) {
  std::ostringstream out;
  if (layout == Layout::Csv) {
    out << "block,estimator,name,value,t_stat,p_value,marker\n";
    for (const auto& b : t.blocks) {
      const std::string est = to_string(b.estimator);
      for (std::size_t j = 0; j < t.columns.size(); ++j) {
        if (!b.cells[j]) continue;
        const auto& c = *b.cells[j];
        auto strip = [](const std::string& s) { return s.substr(1, s.size() - 2); };
        out << "coef," << est << ',' << t.columns[j] << ',' << c.coefficient << ',' << strip(c.t_stat) << ','
            << strip(c.p_value) << ',' << c.marker << '\n';
      }
      out << "stat," << est << ",r_squared," << b.r_squared << ",,,\n";
      out << "stat," << est << ",durbin_watson," << b.durbin_watson << ",,,\n";
      out << "stat," << est << ",dof," << b.dof << ",,,\n";
      out << "stat," << est << ",n_obs," << b.n_obs << ",,,\n";
      out << "stat," << est << ",residual_sd," << b.residual_sd << ",,,\n";
    }
    if (t.hausman) out << "hausman,,statistic," << *t.hausman << ",,,\n";
    return out.str();
  }

  const std::size_t label_w = 24;
  std::size_t col_w = 10;
  for (const auto& c : t.columns) col_w = std::max(col_w, display_width(c) + 2);
  for (const auto& b : t.blocks)
    for (const auto& c : b.cells)
      if (c) col_w = std::max({col_w, display_width(c->coefficient + c->marker) + 2, display_width(c->t_stat) + 2});

  auto row = [&](const std::string& label, const std::vector<std::string>& cells, const std::vector<std::string>& tail) {
    std::string line = pad(label, label_w);
    for (const auto& c : cells) line += lpad(c, col_w);
    for (const auto& c : tail) line += lpad(c, 8);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  };

  out << t.title << '\n';
  out << "Specification: " << t.spec << "\n\n";
  row("Variable", t.columns, {"R^2", "DW"});
  for (const auto& b : t.blocks) {
    out << b.label << '\n';
    std::vector<std::string> coef, tstat, sig;
    for (const auto& c : b.cells) {
      coef.push_back(c ? c->coefficient + c->marker : "");
      tstat.push_back(c ? c->t_stat : "");
      sig.push_back(c ? c->p_value : "");
    }
    row("Coefficients", coef, {b.r_squared, b.durbin_watson});
    row("T-stat.", tstat, {});
    row("L. signif.", sig, {});
  }
  std::vector<std::string> dof, n, sd;
  for (const auto& b : t.blocks) {
    dof.push_back(b.dof);
    n.push_back(b.n_obs);
    sd.push_back(b.residual_sd);
  }
  std::vector<std::string> labels;
  for (const auto& b : t.blocks) labels.push_back(b.label);
  out << pad("Estimators", label_w) << join(labels, " - ") << '\n';
  out << pad("Degrees of freedom", label_w) << join(dof, " - ") << '\n';
  out << pad("Number of observations", label_w) << join(n, " - ") << '\n';
  out << pad("Residual SD", label_w) << join(sd, " - ") << '\n';
  if (t.hausman) out << pad("T.HAUSMAN", label_w) << *t.hausman << '\n';
  out << '\n';
  for (const auto& f : t.footnotes) out << f << '\n';
  return out.str();
}

std::string render_table(const std::vector<FitResult>& results, const std::optional<HausmanResult>& hausman,
                         Layout layout) {
  return render_table(build_table(results, hausman), layout);
}

std::string export_csv(const std::vector<FitResult>& results, const std::optional<HausmanResult>& hausman) {
  std::ostringstream out;
  out << join(kExportColumns, ",") << '\n';
  for (const auto& r : results) {
    for (std::size_t j = 0; j < r.names.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(j);
      std::vector<std::string> f{r.spec,
                                 to_string(r.estimator),
                                 to_string(r.effects),
                                 r.names[j],
                                 full(r.coefficients[i]),
                                 full(r.std_errors[i]),
                                 full(r.t_stats[i]),
                                 full(r.p_values[i]),
                                 format_fixed3(r.coefficients[i]),
                                 format_fixed3(r.t_stats[i]),
                                 format_fixed3(r.p_values[i]),
                                 significance_marker(r.p_values[i]),
                                 full(r.r_squared),
                                 full(r.durbin_watson),
                                 full(r.residual_sd),
                                 full(r.regression_se),
                                 std::to_string(r.dof),
                                 std::to_string(r.n_obs)};
      if (hausman) {
        f.push_back(full(hausman->statistic));
        f.push_back(std::to_string(hausman->dof));
        f.push_back(full(hausman->p_value));
        f.push_back(hausman->valid ? "1" : "0");
      } else {
        f.insert(f.end(), {"", "", "", ""});
      }
      out << join(f, ",") << '\n';
    }
  }
  return out.str();
}

ImportedResults import_csv_export(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    header = split(line);
    break;
  }
  if (header != kExportColumns) throw SchemaMismatch("not an estimation export (header mismatch)");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  struct Rows {
    FitResult fit;
    std::vector<double> coef, se, t, p;
  };
  std::vector<Rows> acc;
  ImportedResults out;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto f = split(line);
    if (f.size() != header.size()) throw SchemaMismatch("export row has wrong field count");
    const Estimator est = parse_estimator(f[col["estimator"]]);
    if (acc.empty() || acc.back().fit.estimator != est || acc.back().fit.spec != f[col["spec"]]) {
      Rows r;
      r.fit.spec = f[col["spec"]];
      r.fit.estimator = est;
      r.fit.effects = parse_effects(f[col["effects"]]);
      r.fit.r_squared = parse_double(f[col["r_squared"]]);
      r.fit.durbin_watson = parse_double(f[col["durbin_watson"]]);
      r.fit.residual_sd = parse_double(f[col["residual_sd"]]);
      r.fit.regression_se = parse_double(f[col["regression_se"]]);
      r.fit.dof = std::stol(f[col["dof"]]);
      r.fit.n_obs = std::stol(f[col["n_obs"]]);
      acc.push_back(std::move(r));
    }
    auto& r = acc.back();
    r.fit.names.push_back(f[col["name"]]);
    r.coef.push_back(parse_double(f[col["coefficient"]]));
    r.se.push_back(parse_double(f[col["std_error"]]));
    r.t.push_back(parse_double(f[col["t_stat"]]));
    r.p.push_back(parse_double(f[col["p_value"]]));
    if (!f[col["hausman_statistic"]].empty()) {
      HausmanResult h;
      h.statistic = parse_double(f[col["hausman_statistic"]]);
      h.dof = std::stol(f[col["hausman_dof"]]);
      h.p_value = parse_double(f[col["hausman_p"]]);
      h.valid = f[col["hausman_valid"]] == "1";
      out.hausman = h;
    }
  }
  for (auto& r : acc) {
    auto vec = [](const std::vector<double>& v) { return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))); };
    r.fit.coefficients = vec(r.coef);
    r.fit.std_errors = vec(r.se);
    r.fit.t_stats = vec(r.t);
    r.fit.p_values = vec(r.p);
    r.fit.covariance = r.fit.std_errors.array().square().matrix().asDiagonal();
    out.results.push_back(std::move(r.fit));
  }
  return out;
}

}  // namespace negpanel
