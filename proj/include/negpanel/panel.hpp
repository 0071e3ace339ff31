#pragma once

// Estimators for unbalanced region × industry panels: pooled OLS, least
// squares with dummy variables, Swamy–Arora random effects, plus the
// Hausman contrast and the panel Durbin–Watson statistic.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace negpanel {

enum class Effects { None, Unit, Region, Industry };
enum class Estimator { Pooled, Lsdv, RandomEffects };

std::string to_string(Effects e);
std::string to_string(Estimator e);
Effects parse_effects(const std::string& s);
Estimator parse_estimator(const std::string& s);

struct PanelIndex {
  std::string unit;  // region×industry pair
  int period = 0;
  std::string region;
  std::string industry;
};

// Response, regressors and the panel layout of each row. The column named
// "const" (if any) is the intercept slot; it is absorbed by the dummies in
// LSDV fits. `row_scale` is set for weighted designs: every row, intercept
// included, has already been multiplied by it, and LSDV dummies are scaled
// the same way.
struct DesignMatrix {
  std::string spec;
  Eigen::VectorXd response;
  Eigen::MatrixXd regressors;
  std::vector<std::string> names;
  std::vector<PanelIndex> index;
  Effects effects = Effects::Unit;
  Eigen::VectorXd row_scale;

  Eigen::Index rows() const { return response.size(); }
  Eigen::Index cols() const { return regressors.cols(); }
  std::optional<Eigen::Index> intercept() const;
  Eigen::Index column(const std::string& name) const;  // throws NameMismatch
  std::vector<std::string> slope_names() const;        // names without "const"

  // Group label per row for the effects design (Effects::None groups by unit).
  std::vector<std::string> groups() const;
  std::vector<std::string> unit_labels() const;

  // Throws InvalidDesign on shape errors, non-finite entries, duplicate names,
  // duplicate (unit, period) rows or too few observations.
  void validate() const;
};

struct VarianceComponents {
  double unit = 0;            // σ²_u
  double idiosyncratic = 0;   // σ²_e
};

struct FitResult {
  Estimator estimator = Estimator::Pooled;
  std::string spec;
  Effects effects = Effects::None;
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  double r_squared = 0;
  double durbin_watson = 0;
  double residual_sd = 0;     // sample SD of residuals
  double regression_se = 0;   // sqrt(SSR / dof)
  long dof = 0;
  long n_obs = 0;
  long absorbed = 0;          // dummy parameters absorbed by LSDV
  Eigen::VectorXd residuals;
  std::optional<VarianceComponents> variance_components;
  Eigen::VectorXd theta;      // per-row quasi-demeaning factor (random effects)

  Eigen::Index coefficient_index(const std::string& name) const;  // throws NameMismatch
};

struct HausmanResult {
  double statistic = 0;
  long dof = 0;
  double p_value = 1;
  bool valid = true;
};

// Plain least squares on the design as given (no dummies added).
FitResult ols_fit(const DesignMatrix& d);

// Least squares with explicit dummy columns for the effects design.
FitResult lsdv_fit(const DesignMatrix& d);

// Slopes from OLS on group-demeaned data (weighted demeaning when the design
// carries row scales). Independent route to the LSDV slopes.
Eigen::VectorXd within_slopes(const DesignMatrix& d);

FitResult random_effects_fit(const DesignMatrix& d);

FitResult fit(const DesignMatrix& d, Estimator e);

HausmanResult hausman_test(const FitResult& fe, const FitResult& re, const std::vector<std::string>& common);
// Contrast over every slope shared by both fits (intercept excluded).
HausmanResult hausman_test(const FitResult& fe, const FitResult& re);
// Raw form: statistic from a coefficient difference and covariance difference.
HausmanResult hausman_statistic(const Eigen::VectorXd& q, const Eigen::MatrixXd& v_diff);

double durbin_watson(const std::vector<std::vector<double>>& runs);
// Splits residuals into runs of consecutive periods within each unit.
std::vector<std::vector<double>> residual_runs(const Eigen::VectorXd& residuals, const std::vector<PanelIndex>& index);

double two_sided_p(double t, long dof);
double chi_squared_sf(double x, long dof);

// "*" below 5%, "**" in [5%, 10%), "" otherwise.
std::string significance_marker(double p, double alpha5 = 0.05, double alpha10 = 0.10);
std::vector<std::string> summarize_fit(const FitResult& f, std::pair<double, double> alpha_levels = {0.05, 0.10});

}  // namespace negpanel
