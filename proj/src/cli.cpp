#include "negpanel/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "negpanel/errors.hpp"
#include "negpanel/panel.hpp"
#include "negpanel/report.hpp"
#include "negpanel/specs.hpp"

namespace negpanel {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "': not a number: '" + s + "'");
  return v;
}

long to_long(const std::string& key, const std::string& s) {
  long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ValidationError("config key '" + key + "': not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError("config key '" + key + "': not a boolean: '" + s + "'");
}

const std::string& require(const RunConfig& cfg, const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end()) throw ValidationError("missing config key '" + key + "'");
  return it->second;
}

std::string get(const RunConfig& cfg, const std::string& key, const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

Eigen::VectorXd vector_of(const RunConfig& cfg, const std::string& key, Eigen::Index n) {
  const auto parts = split(require(cfg, key), ',');
  if (static_cast<Eigen::Index>(parts.size()) != n)
    throw ValidationError("config key '" + key + "' needs " + std::to_string(n) + " values");
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = to_double(key, parts[static_cast<std::size_t>(i)]);
  return v;
}

std::string full(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string header_line(const std::string& command, const RunConfig& cfg) {
  return "# negpanel " + command + " config_hash=" + config_hash(cfg) + " seed=" + get(cfg, "seed", "none");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);
  f << content;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
  const auto econ = economy_from_config(cfg);
  const auto opt = solver_options_from_config(cfg);
  std::ostringstream body;
  body << header_line("simulate", cfg) << '\n';
  try {
    const auto st = solve_equilibrium(econ, opt);
    body << "region,nominal_wage,price_index,real_wage\n";
    for (Eigen::Index r = 0; r < econ.size(); ++r)
      body << econ.regions()[static_cast<std::size_t>(r)] << ',' << full(st.nominal_wage[r]) << ','
           << full(st.price_index[r]) << ',' << full(st.real_wage[r]) << '\n';
    body << "iterations," << st.iterations << '\n';
    body << "residual," << full(st.residual) << '\n';
    body << "income_scale," << full(st.income_scale) << '\n';
    out << body.str();
    if (cfg.count("out")) write_file(cfg.at("out"), body.str());
    return 0;
  } catch (const NoConvergence& e) {
    body << "status,no_convergence\n";
    body << "iterations," << e.iterations << '\n';
    body << "residual," << full(e.residual) << '\n';
    out << body.str();
    throw;
  }
}

PanelDataset dataset_for(const RunConfig& cfg, const std::string& spec, std::ostream& err) {
  if (cfg.count("input")) {
    auto loaded = load_csv(cfg.at("input"));
    for (const auto& r : loaded.rejected) err << "rejected line " << r.line << ": " << r.reason << '\n';
    if (loaded.dataset.observations.empty()) throw EmptySample("input has no usable rows");
    return std::move(loaded.dataset);
  }
  return generate_synthetic(synthetic_from_config(cfg, spec), spec).dataset;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::string spec = get(cfg, "spec", "eq3");
  if (std::find(spec_names().begin(), spec_names().end(), spec) == spec_names().end()) throw UnknownSpec(spec);
  SpecOptions opt;
  opt.effects = parse_effects(get(cfg, "effects", "unit"));
  opt.leader = get(cfg, "leader", "LVT");
  opt.include_leader = to_bool("include_leader", get(cfg, "include_leader", "false"));
  opt.strict = to_bool("strict", get(cfg, "strict", "false"));
  if (get(cfg, "weight_mode", "row") == "regressors") opt.weight_mode = WeightMode::RegressorsOnly;

  std::vector<Estimator> estimators;
  for (const auto& e : split(get(cfg, "estimators", "lsdv,re"), ',')) {
    const auto est = parse_estimator(e);
    if (std::find(estimators.begin(), estimators.end(), est) == estimators.end()) estimators.push_back(est);
  }
  if (estimators.empty()) throw ValidationError("no estimators requested");

  const auto data = dataset_for(cfg, spec, err);
  const auto built = build_spec(spec, data, opt);
  if (!built.dropped.empty()) err << "dropped " << built.dropped.size() << " cells while building " << spec << '\n';

  std::vector<FitResult> fits;
  for (auto e : estimators) fits.push_back(fit(built.design, e));

  std::optional<HausmanResult> hausman;
  const FitResult* fe = nullptr;
  const FitResult* re = nullptr;
  for (const auto& f : fits) {
    if (f.estimator == Estimator::Lsdv) fe = &f;
    if (f.estimator == Estimator::RandomEffects) re = &f;
  }
  if (fe && re) hausman = hausman_test(*fe, *re);

  const Layout layout = get(cfg, "layout", "text") == "csv" ? Layout::Csv : Layout::Text;
  out << header_line("estimate", cfg) << '\n' << render_table(fits, hausman, layout);
  if (cfg.count("out")) write_file(cfg.at("out"), header_line("estimate", cfg) + "\n" + export_csv(fits, hausman));
  return 0;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const std::string spec = get(cfg, "spec", "eq4");
  const auto sc = synthetic_from_config(cfg, spec);
  const auto result = generate_synthetic(sc, spec);
  const std::string prefix = get(cfg, "out", "synthetic");
  const std::string header = header_line("synth", cfg).substr(2);
  save_csv(result.dataset, prefix + ".csv", header);
  std::ostringstream truth;
  truth << "# " << header << '\n';
  write_truth(result.truth, truth);
  write_file(prefix + ".truth", truth.str());
  out << "# " << header << '\n';
  out << "wrote " << result.dataset.size() << " rows to " << prefix << ".csv and truth to " << prefix << ".truth\n";
  return 0;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  std::ifstream in(require(cfg, "input"));
  if (!in) throw ValidationError("cannot open " + cfg.at("input"));
  const auto imported = import_csv_export(in);
  const Layout layout = get(cfg, "layout", "text") == "csv" ? Layout::Csv : Layout::Text;
  out << render_table(imported.results, imported.hausman, layout);
  return 0;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ValidationError("config line " + std::to_string(n) + ": expected key=value");
    cfg[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return cfg;
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path);
  return parse_config(in);
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : cfg) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SpatialEconomyd economy_from_config(const RunConfig& cfg) {
  const auto regions = split(require(cfg, "regions"), ',');
  const auto n = static_cast<Eigen::Index>(regions.size());
  const Eigen::VectorXd labor = vector_of(cfg, "labor", n);
  const Eigen::VectorXd income = cfg.count("income") ? vector_of(cfg, "income", n) : Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd phi =
      cfg.count("immobile_income") ? vector_of(cfg, "immobile_income", n) : Eigen::VectorXd::Zero(n);
  const auto rows = split(require(cfg, "transport"), ';');
  if (static_cast<Eigen::Index>(rows.size()) != n) throw ValidationError("transport needs one row per region");
  Eigen::MatrixXd t(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto vals = split(rows[static_cast<std::size_t>(r)], ',');
    if (static_cast<Eigen::Index>(vals.size()) != n) throw ValidationError("transport row " + std::to_string(r) + " has wrong length");
    for (Eigen::Index s = 0; s < n; ++s) t(r, s) = to_double("transport", vals[static_cast<std::size_t>(s)]);
  }
  const NegParametersd params(to_double("sigma", get(cfg, "sigma", "5")), to_double("mu", get(cfg, "mu", "0.4")));
  return SpatialEconomyd(regions, income, labor, phi, t, params);
}

SolverOptions solver_options_from_config(const RunConfig& cfg) {
  SolverOptions o;
  o.endogenous_income = to_bool("endogenous_income", get(cfg, "endogenous_income", "false"));
  o.damping = to_double("damping", get(cfg, "damping", "0.5"));
  o.tol = to_double("tol", get(cfg, "tol", "1e-10"));
  o.max_iter = to_long("max_iter", get(cfg, "max_iter", "10000"));
  return o;
}

std::map<std::string, double> default_coefficients(const std::string& spec) {
  if (spec == "eq3" || spec == "eq3w")
    return {{"lnY_pt", -0.038}, {"lnT_rpt", 0.674}, {"lnG_pt", -0.967},
            {"lnλ_pt", 0.025},  {"lnw_pt", 0.937},  {"lnT_prt", -0.594}};
  if (spec == "eq3p")
    return {{"lnY_pt", -0.259}, {"lnT_rpt", 0.557}, {"lnG_pt", -0.884}, {"lnλ_pt", 0.256},
            {"lnw_pt", 0.883},  {"lnT_prt", -0.493}, {"lnP_rt", 0.258}};
  if (spec == "eq4" || spec == "eq4w")
    return {{"const", 1.530}, {"lnY_rt", 0.098}, {"lnT_rpt", 0.559}, {"lnG_rt", -0.624},
            {"lnλ_rt", -0.155}, {"lnw_rt", 0.619}, {"lnT_prt", -0.411}};
  if (spec == "eq5")
    return {{"const", -3.991},   {"lnY_nt", -0.040},   {"lnT_rlt", 0.012},   {"lnL_nt", 0.390},
            {"lnRL_rmt", -0.413}, {"lnRL_rgt", -0.507}, {"lnRL_rkt", -0.228}, {"lnRL_rnt", 0.368}};
  if (spec == "eq5p")
    return {{"const", -3.053},  {"lnY_nt", -0.240},   {"lnT_rlt", 0.015},   {"lnL_nt", 0.486},   {"lnP_rt", 0.218},
            {"lnRL_rmt", -0.266}, {"lnRL_rgt", -0.333}, {"lnRL_rkt", -0.141}, {"lnRL_rnt", 0.230}};
  throw UnknownSpec(spec);
}

SyntheticConfig synthetic_from_config(const RunConfig& cfg, const std::string& spec) {
  SyntheticConfig s;
  s.true_coefficients = default_coefficients(spec);
  for (const auto& [k, v] : cfg)
    if (k.rfind("coef.", 0) == 0) s.true_coefficients[k.substr(5)] = to_double(k, v);
  s.seed = static_cast<std::uint64_t>(to_long("seed", get(cfg, "seed", "1")));
  s.n_regions = static_cast<std::size_t>(to_long("n_regions", get(cfg, "n_regions", "5")));
  s.n_industries = static_cast<std::size_t>(to_long("n_industries", get(cfg, "n_industries", "9")));
  s.n_years = static_cast<std::size_t>(to_long("n_years", get(cfg, "n_years", "8")));
  s.first_year = static_cast<int>(to_long("first_year", get(cfg, "first_year", "1987")));
  s.effect_sd = to_double("effect_sd", get(cfg, "effect_sd", "1"));
  s.noise_sd = to_double("noise_sd", get(cfg, "noise_sd", "0.1"));
  s.effect_correlation = to_double("effect_correlation", get(cfg, "effect_correlation", "0"));
  s.missing_rate = to_double("missing_rate", get(cfg, "missing_rate", "0"));
  if (cfg.count("missing_count"))
    s.missing_count = static_cast<std::size_t>(to_long("missing_count", cfg.at("missing_count")));
  s.leader = get(cfg, "leader", "LVT");
  return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"negpanel: core-periphery equilibria and regional wage panel estimation"};
  app.require_subcommand(1);

  std::string config_path, spec, estimators, effects, leader, input, layout, out_path;
  std::optional<double> sigma, mu, damping, tol;
  std::optional<long> seed, max_iter;
  std::vector<std::string> sets;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value configuration file");
    sub->add_option("--out", out_path, "output path (estimate: CSV export; synth: file prefix)");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--set", sets, "override any config key, key=value");
  };
  auto* simulate = app.add_subcommand("simulate", "solve the short-run equilibrium of an economy file");
  add_common(simulate);
  simulate->add_option("--sigma", sigma, "elasticity of substitution (> 1)");
  simulate->add_option("--mu", mu, "manufacturing expenditure share (0, 1)");
  simulate->add_option("--damping", damping, "relaxation factor in (0, 1]");
  simulate->add_option("--tol", tol, "relative fixed-point tolerance");
  simulate->add_option("--max-iter", max_iter, "iteration cap");

  auto* estimate = app.add_subcommand("estimate", "estimate a regression specification");
  add_common(estimate);
  estimate->add_option("--input", input, "panel CSV (otherwise a synthetic panel is generated)");
  estimate->add_option("--spec", spec, "eq3|eq3p|eq4|eq5|eq5p|eq3w|eq4w");
  estimate->add_option("--estimators", estimators, "comma list of lsdv, re, pooled");
  estimate->add_option("--effects", effects, "unit|region|industry|none");
  estimate->add_option("--leader", leader, "leader region for eq5/eq5p");
  estimate->add_option("--layout", layout, "text|csv");

  auto* synth = app.add_subcommand("synth", "write a synthetic panel CSV and its truth sidecar");
  add_common(synth);
  synth->add_option("--spec", spec, "specification the response follows");
  synth->add_option("--leader", leader, "leader region name");

  auto* report = app.add_subcommand("report", "re-render an estimation CSV export");
  report->add_option("--input", input, "CSV written by estimate --out")->required();
  report->add_option("--layout", layout, "text|csv");

  std::vector<const char*> argv{"negpanel"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : read_config(config_path);
    auto put = [&](const std::string& k, const std::string& v) {
      if (!v.empty()) cfg[k] = v;
    };
    put("spec", spec);
    put("estimators", estimators);
    put("effects", effects);
    put("leader", leader);
    put("input", input);
    put("layout", layout);
    put("out", out_path);
    if (sigma) cfg["sigma"] = full(*sigma);
    if (mu) cfg["mu"] = full(*mu);
    if (damping) cfg["damping"] = full(*damping);
    if (tol) cfg["tol"] = full(*tol);
    if (seed) cfg["seed"] = std::to_string(*seed);
    if (max_iter) cfg["max_iter"] = std::to_string(*max_iter);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects key=value, got " + s);
      cfg[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
    }

    if (simulate->parsed()) return cmd_simulate(cfg, out);
    if (estimate->parsed()) return cmd_estimate(cfg, out, err);
    if (synth->parsed()) return cmd_synth(cfg, out);
    if (report->parsed()) return cmd_report(cfg, out);
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::Numerical ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace negpanel
