#include "negpanel/panel.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "negpanel/errors.hpp"

namespace negpanel {

namespace {

constexpr double kRankTolerance = 1e-10;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct LeastSquares {
  Eigen::VectorXd beta;
  Eigen::MatrixXd xtx_inv;
  Eigen::VectorXd residuals;
  double ssr = 0;
};

LeastSquares least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
  const Eigen::Index k = x.cols();
  LeastSquares out;
  if (k == 0) {
    out.beta.resize(0);
    out.xtx_inv.resize(0, 0);
    out.residuals = y;
    out.ssr = y.squaredNorm();
    return out;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankTolerance);
  if (qr.rank() < k || x.rows() < k) {
    std::vector<std::string> bad;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < k; ++j) bad.push_back(names.at(static_cast<std::size_t>(perm[j])));
    std::sort(bad.begin(), bad.end());
    throw RankDeficient(bad);
  }
  out.beta = qr.solve(y);
  out.residuals = y - x * out.beta;
  out.ssr = out.residuals.squaredNorm();

  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd inv_perm = r_inv * r_inv.transpose();
  const auto& p = qr.colsPermutation();
  out.xtx_inv = p * inv_perm * p.transpose();
  out.xtx_inv = 0.5 * (out.xtx_inv + out.xtx_inv.transpose());
  return out;
}

double centered_r2(const Eigen::VectorXd& y, double ssr) {
  const double sst = (y.array() - y.mean()).square().sum();
  if (!(sst > 0)) return 0.0;
  return std::clamp(1.0 - ssr / sst, 0.0, 1.0);
}

double sample_sd(const Eigen::VectorXd& e) {
  if (e.size() < 2) return 0.0;
  return std::sqrt((e.array() - e.mean()).square().sum() / static_cast<double>(e.size() - 1));
}

// Dense group ids in first-seen order.
std::vector<int> group_ids(const std::vector<std::string>& labels, std::vector<std::string>* order = nullptr) {
  std::map<std::string, int> id;
  std::vector<int> out;
  out.reserve(labels.size());
  for (const auto& l : labels) {
    auto [it, inserted] = id.try_emplace(l, static_cast<int>(id.size()));
    if (inserted && order) order->push_back(l);
    out.push_back(it->second);
  }
  return out;
}

int count_groups(const std::vector<int>& ids) {
  return ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end()) + 1;
}

Eigen::VectorXd scales_of(const DesignMatrix& d) {
  return d.row_scale.size() == 0 ? Eigen::VectorXd::Ones(d.rows()) : d.row_scale;
}

// Weighted within transform: rows were scaled by s, so undo the scale, take
// s²-weighted group means, demean, and rescale.
Eigen::MatrixXd within_transform(const Eigen::MatrixXd& m, const std::vector<int>& ids, const Eigen::VectorXd& s) {
  const int g = count_groups(ids);
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(g, m.cols());
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(g);
  for (Eigen::Index i = 0; i < n; ++i) {
    sums.row(ids[i]) += s[i] * m.row(i);  // s² · (row / s)
    weight[ids[i]] += s[i] * s[i];
  }
  Eigen::MatrixXd out(n, m.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = m.row(i) - s[i] * sums.row(ids[i]) / weight[ids[i]];
  return out;
}

Eigen::MatrixXd group_means(const Eigen::MatrixXd& m, const std::vector<int>& ids, Eigen::VectorXd* counts) {
  const int g = count_groups(ids);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(g, m.cols());
  Eigen::VectorXd n = Eigen::VectorXd::Zero(g);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    sums.row(ids[i]) += m.row(i);
    n[ids[i]] += 1;
  }
  for (int j = 0; j < g; ++j) sums.row(j) /= n[j];
  if (counts) *counts = n;
  return sums;
}

void finish_inference(FitResult& f, double s2) {
  f.covariance *= s2;
  const Eigen::Index k = f.coefficients.size();
  f.std_errors.resize(k);
  f.t_stats.resize(k);
  f.p_values.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    f.std_errors[j] = std::sqrt(std::max(f.covariance(j, j), 0.0));
    f.t_stats[j] = f.coefficients[j] / f.std_errors[j];
    f.p_values[j] = two_sided_p(f.t_stats[j], f.dof);
  }
}

double dw_or_nan(const Eigen::VectorXd& residuals, const std::vector<PanelIndex>& index) {
  try {
    return durbin_watson(residual_runs(residuals, index));
  } catch (const NoConsecutivePairs&) {
    return kNaN;
  }
}

Eigen::MatrixXd slope_block(const DesignMatrix& d, std::vector<std::string>& names) {
  const auto icpt = d.intercept();
  names.clear();
  Eigen::MatrixXd x(d.rows(), d.cols() - (icpt ? 1 : 0));
  Eigen::Index c = 0;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    if (icpt && *icpt == j) continue;
    x.col(c++) = d.regressors.col(j);
    names.push_back(d.names[static_cast<std::size_t>(j)]);
  }
  return x;
}

void check_within_variation(const Eigen::MatrixXd& demeaned, const Eigen::MatrixXd& raw,
                            const std::vector<std::string>& names) {
  for (Eigen::Index j = 0; j < demeaned.cols(); ++j) {
    const double scale = std::max(1.0, raw.col(j).cwiseAbs().maxCoeff());
    if (demeaned.col(j).cwiseAbs().maxCoeff() <= 1e-12 * scale)
      throw AllWithinVariationZero(names[static_cast<std::size_t>(j)]);
  }
}

}  // namespace

std::string to_string(Effects e) {
  switch (e) {
    case Effects::None: return "none";
    case Effects::Unit: return "unit";
    case Effects::Region: return "region";
    case Effects::Industry: return "industry";
  }
  return "?";
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::Pooled: return "pooled";
    case Estimator::Lsdv: return "lsdv";
    case Estimator::RandomEffects: return "re";
  }
  return "?";
}

Effects parse_effects(const std::string& s) {
  if (s == "none") return Effects::None;
  if (s == "unit") return Effects::Unit;
  if (s == "region") return Effects::Region;
  if (s == "industry") return Effects::Industry;
  throw ValidationError("unknown effects design: " + s);
}

Estimator parse_estimator(const std::string& s) {
  if (s == "pooled") return Estimator::Pooled;
  if (s == "lsdv") return Estimator::Lsdv;
  if (s == "re") return Estimator::RandomEffects;
  throw ValidationError("unknown estimator: " + s);
}

std::optional<Eigen::Index> DesignMatrix::intercept() const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == "const") return static_cast<Eigen::Index>(j);
  return std::nullopt;
}

Eigen::Index DesignMatrix::column(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return static_cast<Eigen::Index>(j);
  throw NameMismatch("no column named " + name);
}

std::vector<std::string> DesignMatrix::slope_names() const {
  std::vector<std::string> out;
  for (const auto& n : names)
    if (n != "const") out.push_back(n);
  return out;
}

std::vector<std::string> DesignMatrix::unit_labels() const {
  std::vector<std::string> out;
  out.reserve(index.size());
  for (const auto& ix : index) out.push_back(ix.unit);
  return out;
}

std::vector<std::string> DesignMatrix::groups() const {
  std::vector<std::string> out;
  out.reserve(index.size());
  for (const auto& ix : index) {
    switch (effects) {
      case Effects::Region: out.push_back(ix.region); break;
      case Effects::Industry: out.push_back(ix.industry); break;
      default: out.push_back(ix.unit); break;
    }
  }
  return out;
}

void DesignMatrix::validate() const {
  const Eigen::Index n = response.size();
  if (regressors.rows() != n) throw InvalidDesign("regressor rows do not match response length");
  if (static_cast<Eigen::Index>(names.size()) != regressors.cols()) throw InvalidDesign("one name per column required");
  if (static_cast<Eigen::Index>(index.size()) != n) throw InvalidDesign("one panel index per row required");
  if (row_scale.size() != 0 && row_scale.size() != n) throw InvalidDesign("row_scale length mismatch");
  if (!response.allFinite() || !regressors.allFinite()) throw InvalidDesign("design contains non-finite entries");
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size())
    throw InvalidDesign("column names must be unique");
  std::set<std::pair<std::string, int>> seen;
  for (const auto& ix : index)
    if (!seen.emplace(ix.unit, ix.period).second)
      throw InvalidDesign("duplicate (unit, period) row: " + ix.unit + " " + std::to_string(ix.period));
  const Eigen::Index dummies = effects == Effects::None ? 0 : count_groups(group_ids(groups()));
  if (n <= regressors.cols() + dummies)
    throw InvalidDesign("need more observations (" + std::to_string(n) + ") than parameters (" +
                        std::to_string(regressors.cols() + dummies) + ")");
}

Eigen::Index FitResult::coefficient_index(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return static_cast<Eigen::Index>(j);
  throw NameMismatch("fit has no coefficient named " + name);
}

FitResult ols_fit(const DesignMatrix& d) {
  d.validate();
  const auto ls = least_squares(d.regressors, d.response, d.names);
  FitResult f;
  f.estimator = Estimator::Pooled;
  f.spec = d.spec;
  f.effects = Effects::None;
  f.names = d.names;
  f.coefficients = ls.beta;
  f.covariance = ls.xtx_inv;
  f.n_obs = d.rows();
  f.dof = d.rows() - d.cols();
  f.residuals = ls.residuals;
  const double s2 = ls.ssr / static_cast<double>(f.dof);
  finish_inference(f, s2);
  f.r_squared = centered_r2(d.response, ls.ssr);
  f.regression_se = std::sqrt(s2);
  f.residual_sd = sample_sd(ls.residuals);
  f.durbin_watson = dw_or_nan(ls.residuals, d.index);
  return f;
}

Eigen::VectorXd within_slopes(const DesignMatrix& d) {
  d.validate();
  std::vector<std::string> names;
  const Eigen::MatrixXd x = slope_block(d, names);
  const auto ids = group_ids(d.groups());
  const Eigen::VectorXd s = scales_of(d);
  const Eigen::MatrixXd xw = within_transform(x, ids, s);
  check_within_variation(xw, x, names);
  const Eigen::VectorXd yw = within_transform(d.response, ids, s);
  return least_squares(xw, yw, names).beta;
}

FitResult lsdv_fit(const DesignMatrix& d) {
  d.validate();
  if (d.effects == Effects::None) throw InvalidDesign("LSDV needs an effects design other than none");

  std::vector<std::string> names;
  const Eigen::MatrixXd x = slope_block(d, names);
  std::vector<std::string> group_order;
  const auto ids = group_ids(d.groups(), &group_order);
  const int g = count_groups(ids);
  const Eigen::VectorXd s = scales_of(d);
  check_within_variation(within_transform(x, ids, s), x, names);

  const Eigen::Index k = x.cols();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(d.rows(), k + g);
  full.leftCols(k) = x;
  for (Eigen::Index i = 0; i < d.rows(); ++i) full(i, k + ids[i]) = s[i];
  std::vector<std::string> full_names = names;
  for (const auto& grp : group_order) full_names.push_back("dummy:" + grp);

  const auto ls = least_squares(full, d.response, full_names);
  FitResult f;
  f.estimator = Estimator::Lsdv;
  f.spec = d.spec;
  f.effects = d.effects;
  f.names = names;
  f.coefficients = ls.beta.head(k);
  f.covariance = ls.xtx_inv.topLeftCorner(k, k);
  f.n_obs = d.rows();
  f.absorbed = g;
  f.dof = d.rows() - k - g;
  f.residuals = ls.residuals;
  const double s2 = ls.ssr / static_cast<double>(f.dof);
  finish_inference(f, s2);
  f.r_squared = centered_r2(d.response, ls.ssr);
  f.regression_se = std::sqrt(s2);
  f.residual_sd = sample_sd(ls.residuals);
  f.durbin_watson = dw_or_nan(ls.residuals, d.index);
  return f;
}

FitResult random_effects_fit(const DesignMatrix& d) {
  d.validate();
  const auto ids = group_ids(d.groups());
  const int g = count_groups(ids);
  const Eigen::Index n = d.rows();
  const Eigen::Index k = d.cols();
  if (g < 2) throw InvalidDesign("random effects needs at least two groups");
  if (g <= k) throw InvalidDesign("random effects needs more groups than regressors for the between regression");

  // Idiosyncratic variance from the within regression; columns without
  // within variation (the intercept) drop out.
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const Eigen::MatrixXd xw_all = within_transform(d.regressors, ids, ones);
  std::vector<Eigen::Index> keep;
  std::vector<std::string> keep_names;
  for (Eigen::Index j = 0; j < k; ++j) {
    const double scale = std::max(1.0, d.regressors.col(j).cwiseAbs().maxCoeff());
    if (xw_all.col(j).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      keep.push_back(j);
      keep_names.push_back(d.names[static_cast<std::size_t>(j)]);
    }
  }
  Eigen::MatrixXd xw(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) xw.col(static_cast<Eigen::Index>(c)) = xw_all.col(keep[c]);
  const Eigen::VectorXd yw = within_transform(d.response, ids, ones);
  const auto within = least_squares(xw, yw, keep_names);
  const Eigen::Index within_dof = n - g - xw.cols();
  if (within_dof <= 0) throw InvalidDesign("not enough within-group observations for random effects");
  const double sigma2_e = within.ssr / static_cast<double>(within_dof);

  Eigen::VectorXd counts;
  const Eigen::MatrixXd xb = group_means(d.regressors, ids, &counts);
  const Eigen::VectorXd yb = group_means(d.response, ids, nullptr);
  const auto between = least_squares(xb, yb, d.names);
  const double sigma2_b = between.ssr / static_cast<double>(g - k);
  const double t_harmonic = static_cast<double>(g) / counts.cwiseInverse().sum();
  const double sigma2_u = std::max(0.0, sigma2_b - sigma2_e / t_harmonic);

  Eigen::VectorXd theta_g(g);
  for (int j = 0; j < g; ++j) {
    if (sigma2_u <= 0.0) theta_g[j] = 0.0;
    else if (sigma2_e <= 0.0) theta_g[j] = 1.0;
    else theta_g[j] = 1.0 - std::sqrt(sigma2_e / (counts[j] * sigma2_u + sigma2_e));
  }

  Eigen::MatrixXd xs(n, k);
  Eigen::VectorXd ys(n);
  Eigen::VectorXd theta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    theta[i] = theta_g[ids[i]];
    xs.row(i) = d.regressors.row(i) - theta[i] * xb.row(ids[i]);
    ys[i] = d.response[i] - theta[i] * yb[ids[i]];
  }
  const auto gls = least_squares(xs, ys, d.names);

  FitResult f;
  f.estimator = Estimator::RandomEffects;
  f.spec = d.spec;
  f.effects = d.effects;
  f.names = d.names;
  f.coefficients = gls.beta;
  f.covariance = gls.xtx_inv;
  f.n_obs = n;
  f.dof = n - k;
  f.residuals = gls.residuals;
  const double s2 = gls.ssr / static_cast<double>(f.dof);
  finish_inference(f, s2);
  const Eigen::VectorXd fitted = d.regressors * gls.beta;
  const double vy = (d.response.array() - d.response.mean()).square().sum();
  const double vf = (fitted.array() - fitted.mean()).square().sum();
  if (vy > 0 && vf > 0) {
    const double c = ((d.response.array() - d.response.mean()) * (fitted.array() - fitted.mean())).sum();
    f.r_squared = std::clamp(c * c / (vy * vf), 0.0, 1.0);
  }
  f.regression_se = std::sqrt(s2);
  f.residual_sd = sample_sd(gls.residuals);
  f.durbin_watson = dw_or_nan(gls.residuals, d.index);
  f.variance_components = VarianceComponents{sigma2_u, sigma2_e};
  f.theta = theta;
  return f;
}

FitResult fit(const DesignMatrix& d, Estimator e) {
  switch (e) {
    case Estimator::Pooled: return ols_fit(d);
    case Estimator::Lsdv: return lsdv_fit(d);
    case Estimator::RandomEffects: return random_effects_fit(d);
  }
  throw ValidationError("unknown estimator");
}

HausmanResult hausman_statistic(const Eigen::VectorXd& q, const Eigen::MatrixXd& v_diff) {
  if (v_diff.rows() != q.size() || v_diff.cols() != q.size()) throw NameMismatch("contrast dimensions differ");
  HausmanResult h;
  if (q.size() == 0) return h;
  const Eigen::MatrixXd v = 0.5 * (v_diff + v_diff.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(v);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double norm = lambda.cwiseAbs().maxCoeff();
  const double tol = 1e-10 * norm;
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * q;
  double stat = 0.0;
  long rank = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda[i]) <= tol || norm == 0.0) continue;
    stat += proj[i] * proj[i] / lambda[i];
    ++rank;
    if (lambda[i] < 0) h.valid = false;
  }
  h.statistic = stat;
  h.dof = rank;
  h.p_value = rank > 0 ? chi_squared_sf(std::max(stat, 0.0), rank) : 1.0;
  return h;
}

HausmanResult hausman_test(const FitResult& fe, const FitResult& re, const std::vector<std::string>& common) {
  const auto k = static_cast<Eigen::Index>(common.size());
  Eigen::VectorXd q(k);
  Eigen::MatrixXd v(k, k);
  std::vector<Eigen::Index> fi, ri;
  for (const auto& name : common) {
    fi.push_back(fe.coefficient_index(name));
    ri.push_back(re.coefficient_index(name));
  }
  for (Eigen::Index a = 0; a < k; ++a) {
    q[a] = fe.coefficients[fi[a]] - re.coefficients[ri[a]];
    for (Eigen::Index b = 0; b < k; ++b) v(a, b) = fe.covariance(fi[a], fi[b]) - re.covariance(ri[a], ri[b]);
  }
  return hausman_statistic(q, v);
}

HausmanResult hausman_test(const FitResult& fe, const FitResult& re) {
  std::vector<std::string> common;
  for (const auto& name : fe.names) {
    if (name == "const") continue;
    if (std::find(re.names.begin(), re.names.end(), name) != re.names.end()) common.push_back(name);
  }
  return hausman_test(fe, re, common);
}

double durbin_watson(const std::vector<std::vector<double>>& runs) {
  double num = 0.0;
  double den = 0.0;
  bool any_pair = false;
  for (const auto& run : runs) {
    for (std::size_t t = 0; t < run.size(); ++t) {
      den += run[t] * run[t];
      if (t > 0) {
        const double diff = run[t] - run[t - 1];
        num += diff * diff;
        any_pair = true;
      }
    }
  }
  if (!any_pair) throw NoConsecutivePairs();
  if (!(den > 0.0)) return kNaN;
  return num / den;
}

std::vector<std::vector<double>> residual_runs(const Eigen::VectorXd& residuals, const std::vector<PanelIndex>& index) {
  std::map<std::string, std::vector<std::pair<int, double>>> by_unit;
  for (std::size_t i = 0; i < index.size(); ++i)
    by_unit[index[i].unit].emplace_back(index[i].period, residuals[static_cast<Eigen::Index>(i)]);
  std::vector<std::vector<double>> runs;
  for (auto& [unit, seq] : by_unit) {
    std::sort(seq.begin(), seq.end());
    std::vector<double> run;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      if (t > 0 && seq[t].first != seq[t - 1].first + 1) {
        runs.push_back(std::move(run));
        run.clear();
      }
      run.push_back(seq[t].second);
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

double two_sided_p(double t, long dof) {
  if (dof < 1 || std::isnan(t)) return kNaN;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(static_cast<double>(dof));
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

double chi_squared_sf(double x, long dof) {
  if (dof < 1) return kNaN;
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::cdf(boost::math::complement(dist, x));
}

std::string significance_marker(double p, double alpha5, double alpha10) {
  if (std::isnan(p)) return "";
  if (p < alpha5) return "*";
  if (p < alpha10) return "**";
  return "";
}

std::vector<std::string> summarize_fit(const FitResult& f, std::pair<double, double> alpha_levels) {
  std::vector<std::string> out;
  for (Eigen::Index j = 0; j < f.p_values.size(); ++j)
    out.push_back(significance_marker(f.p_values[j], alpha_levels.first, alpha_levels.second));
  return out;
}

}  // namespace negpanel
