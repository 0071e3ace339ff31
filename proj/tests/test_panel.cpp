#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <map>
#include <random>

#include "negpanel/errors.hpp"
#include "negpanel/panel.hpp"
#include "test_support.hpp"

using namespace negpanel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// One unit, consecutive years; columns given explicitly.
DesignMatrix simple_design(const MatrixXd& x, const VectorXd& y, std::vector<std::string> names) {
  DesignMatrix d;
  d.spec = "test";
  d.response = y;
  d.regressors = x;
  d.names = std::move(names);
  d.effects = Effects::None;
  for (Eigen::Index i = 0; i < y.size(); ++i) d.index.push_back({"u", 2000 + static_cast<int>(i), "r", "m"});
  return d;
}

// Normal equations with explicit dummy columns, solved by LDLT. Kept apart
// from the library's QR path on purpose.
VectorXd dummy_oracle(const DesignMatrix& d) {
  std::map<std::string, int> id;
  for (const auto& g : d.groups()) id.try_emplace(g, static_cast<int>(id.size()));
  std::vector<Eigen::Index> slopes;
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    if (d.names[static_cast<std::size_t>(j)] != "const") slopes.push_back(j);
  const auto k = static_cast<Eigen::Index>(slopes.size());
  MatrixXd x = MatrixXd::Zero(d.rows(), k + static_cast<Eigen::Index>(id.size()));
  const auto groups = d.groups();
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index c = 0; c < k; ++c) x(i, c) = d.regressors(i, slopes[static_cast<std::size_t>(c)]);
    const double s = d.row_scale.size() ? d.row_scale[i] : 1.0;
    x(i, k + id[groups[static_cast<std::size_t>(i)]]) = s;
  }
  const VectorXd b = (x.transpose() * x).ldlt().solve(x.transpose() * d.response);
  return b.head(k);
}

double max_rel(const VectorXd& a, const VectorXd& b) {
  return ((a - b).array().abs() / b.array().abs().max(1e-300)).maxCoeff();
}

}  // namespace

TEST_CASE("ols_fit: exact line") {
  MatrixXd x(5, 2);
  x << 1, 1, 1, 2, 1, 3, 1, 4, 1, 5;
  const VectorXd y = 2.0 * x.col(1);
  const auto f = ols_fit(simple_design(x, y, {"const", "x"}));
  CHECK(f.coefficients[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(f.coefficients[0]) < 1e-12);
  CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.dof == 3);
}

TEST_CASE("ols_fit: constant response") {
  MatrixXd x(5, 2);
  x << 1, 1, 1, 2, 1, 7, 1, 4, 1, 5;
  const auto f = ols_fit(simple_design(x, VectorXd::Constant(5, 3.0), {"const", "x"}));
  CHECK(std::abs(f.coefficients[1]) < 1e-12);
  CHECK(f.r_squared == 0.0);
}

TEST_CASE("ols_fit: six-observation oracle") {
  // tests/oracles/ols_oracle.py, exact rational solve
  MatrixXd x(6, 3);
  x << 1, 1, 2, 1, 2, 1, 1, 3, 4, 1, 4, 3, 1, 5, 6, 1, 6, 5;
  const VectorXd y{{3.1, 2.9, 7.2, 6.8, 11.1, 10.7}};
  const auto f = ols_fit(simple_design(x, y, {"const", "x1", "x2"}));
  CHECK(f.coefficients[0] == doctest::Approx(0.05416666666666667).epsilon(1e-10));
  CHECK(f.coefficients[1] == doctest::Approx(0.8208333333333333).epsilon(1e-10));
  CHECK(f.coefficients[2] == doctest::Approx(1.1541666666666666).epsilon(1e-10));
  CHECK(f.r_squared == doctest::Approx(0.9997337309617638).epsilon(1e-10));
  CHECK(f.std_errors[0] == doctest::Approx(0.07196803560017564).epsilon(1e-9));
  CHECK(f.std_errors[1] == doctest::Approx(0.031823442326082224).epsilon(1e-9));
  CHECK(f.std_errors[2] == doctest::Approx(0.031823442326082224).epsilon(1e-9));
  for (Eigen::Index j = 0; j < 3; ++j)
    CHECK(std::abs(f.t_stats[j] - f.coefficients[j] / std::sqrt(f.covariance(j, j))) <= 1e-10 * std::abs(f.t_stats[j]));
  CHECK(f.dof == 3);
  CHECK(f.n_obs == 6);
}

TEST_CASE("ols_fit: residuals are orthogonal to the regressors") {
  std::mt19937_64 gen(11);
  for (int rep = 0; rep < 20; ++rep) {
    auto d = testsupport::random_panel(gen, VectorXd{{0.7, -0.3, 1.2}}, 1.0, 0.5);
    d.effects = Effects::None;
    const auto f = ols_fit(d);
    const double scale = d.regressors.cwiseAbs().maxCoeff() * d.response.cwiseAbs().maxCoeff() * d.rows();
    CHECK((d.regressors.transpose() * f.residuals).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  }
}

TEST_CASE("ols_fit: collinear columns are named") {
  MatrixXd x(6, 3);
  x << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10, 1, 6, 12;
  try {
    ols_fit(simple_design(x, VectorXd::LinSpaced(6, 0, 1), {"const", "a", "b"}));
    FAIL("expected RankDeficient");
  } catch (const RankDeficient& e) {
    REQUIRE(e.columns.size() == 1);
    CHECK((e.columns[0] == "a" || e.columns[0] == "b"));
  }
}

TEST_CASE("design validation") {
  MatrixXd x(2, 2);
  x << 1, 1, 1, 2;
  CHECK_THROWS_AS(ols_fit(simple_design(x, VectorXd{{1.0, 2.0}}, {"const", "x"})), InvalidDesign);
  MatrixXd x3(3, 2);
  x3 << 1, 1, 1, 2, 1, NAN;
  CHECK_THROWS_AS(ols_fit(simple_design(x3, VectorXd{{1.0, 2.0, 3.0}}, {"const", "x"})), InvalidDesign);
  x3(2, 1) = 3;
  CHECK_THROWS_AS(ols_fit(simple_design(x3, VectorXd{{1.0, 2.0, 3.0}}, {"x", "x"})), InvalidDesign);
  auto dup = simple_design(x3, VectorXd{{1.0, 2.0, 4.0}}, {"const", "x"});
  dup.index[2].period = dup.index[1].period;
  CHECK_THROWS_AS(ols_fit(dup), InvalidDesign);
}

TEST_CASE("lsdv_fit: regressor without within variation") {
  std::mt19937_64 gen(3);
  auto d = testsupport::random_panel(gen, VectorXd{{0.7, -0.3}}, 1.0, 0.1, {3, 3, 5, 0});
  std::map<std::string, double> level;
  std::normal_distribution<double> n01;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    auto [it, fresh] = level.try_emplace(d.index[static_cast<std::size_t>(i)].unit, 0.0);
    if (fresh) it->second = n01(gen);
    d.regressors(i, 2) = it->second;
  }
  try {
    lsdv_fit(d);
    FAIL("expected AllWithinVariationZero");
  } catch (const AllWithinVariationZero& e) {
    CHECK(e.column == "x2");
  }
  d.effects = Effects::None;
  CHECK_THROWS_AS(lsdv_fit(d), InvalidDesign);
}

TEST_CASE("lsdv_fit: recovers slopes within three standard errors") {
  std::mt19937_64 gen(2024);
  const VectorXd beta{{0.7, -0.3}};
  const auto d = testsupport::random_panel(gen, beta, 1.0, 0.1, {}, 0.8);
  const auto f = lsdv_fit(d);
  REQUIRE(f.names == std::vector<std::string>{"x1", "x2"});
  for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(f.coefficients[j] - beta[j]) <= 3 * f.std_errors[j]);
  CHECK(f.absorbed == 45);
  CHECK(f.n_obs == 302);
  CHECK(f.dof == 302 - 2 - 45);
}

TEST_CASE("lsdv_fit: dummy columns and within demeaning agree") {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> missing(0, 200);
  for (int rep = 0; rep < 30; ++rep) {
    const int miss = rep % 3 == 0 ? 58 : missing(gen);
    auto d = testsupport::random_panel(gen, VectorXd{{0.098, 0.559, -0.624}}, 1.0, 0.3, {5, 9, 8, miss}, 0.5);
    for (Effects e : {Effects::Unit, Effects::Region, Effects::Industry}) {
      d.effects = e;
      const auto f = lsdv_fit(d);
      CHECK(max_rel(f.coefficients, within_slopes(d)) <= 1e-8);
      CHECK(max_rel(f.coefficients, dummy_oracle(d)) <= 1e-8);
    }
  }
}

TEST_CASE("lsdv_fit: weighted designs keep the equivalence") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> w(0.05, 1.0);
  auto d = testsupport::random_panel(gen, VectorXd{{0.4, 0.2}}, 1.0, 0.2);
  d.row_scale.resize(d.rows());
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    d.row_scale[i] = w(gen);
    d.response[i] *= d.row_scale[i];
    d.regressors.row(i) *= d.row_scale[i];
  }
  const auto f = lsdv_fit(d);
  CHECK(max_rel(f.coefficients, within_slopes(d)) <= 1e-8);
  CHECK(max_rel(f.coefficients, dummy_oracle(d)) <= 1e-8);
}

TEST_CASE("random_effects_fit: no unit variance collapses to pooled OLS") {
  std::mt19937_64 gen(99);
  int collapsed = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const auto d = testsupport::random_panel(gen, VectorXd{{0.5, -1.0}}, 0.0, 1.0);
    const auto re = random_effects_fit(d);
    REQUIRE(re.variance_components.has_value());
    if (re.variance_components->unit != 0.0) continue;
    ++collapsed;
    CHECK(re.theta.cwiseAbs().maxCoeff() == 0.0);
    CHECK((re.coefficients - ols_fit(d).coefficients).cwiseAbs().maxCoeff() <= 1e-6);
  }
  CHECK(collapsed >= 5);
}

TEST_CASE("random_effects_fit: theta follows the closed form on a balanced panel") {
  std::mt19937_64 gen(8);
  const auto d = testsupport::random_panel(gen, VectorXd{{0.3, 0.6}}, 1.0, 0.1, {5, 9, 8, 0});
  const auto re = random_effects_fit(d);
  const double su = re.variance_components->unit, se = re.variance_components->idiosyncratic;
  CHECK(su > 0.5);
  CHECK(su < 1.5);
  CHECK(se == doctest::Approx(0.01).epsilon(0.2));
  const double closed = 1.0 - std::sqrt(se / (8.0 * su + se));
  for (Eigen::Index i = 0; i < d.rows(); ++i) CHECK(std::abs(re.theta[i] - closed) <= 1e-10);

  // σ²_e is the LSDV residual variance.
  const auto fe = lsdv_fit(d);
  CHECK(se == doctest::Approx(fe.regression_se * fe.regression_se).epsilon(1e-10));
}

TEST_CASE("random_effects_fit: recovery and preconditions") {
  std::mt19937_64 gen(31);
  const VectorXd beta{{0.098, 0.559, -0.624}};
  const auto d = testsupport::random_panel(gen, beta, 1.0, 0.3);
  const auto re = random_effects_fit(d);
  for (Eigen::Index j = 0; j < 3; ++j) CHECK(std::abs(re.coefficients[j + 1] - beta[j]) <= 3 * re.std_errors[j + 1]);
  CHECK(re.dof == re.n_obs - 4);
  CHECK(re.r_squared >= 0.0);
  CHECK(re.r_squared <= 1.0);

  auto one = testsupport::random_panel(gen, beta, 1.0, 0.3, {1, 1, 8, 0});
  CHECK_THROWS_AS(random_effects_fit(one), InvalidDesign);
}

TEST_CASE("hausman: zero contrast") {
  std::mt19937_64 gen(1);
  const auto d = testsupport::random_panel(gen, VectorXd{{0.7, -0.3}}, 1.0, 0.1);
  const auto fe = lsdv_fit(d);
  const auto h = hausman_test(fe, fe);
  CHECK(h.statistic == 0.0);
  CHECK(h.p_value == 1.0);
  CHECK(h.valid);
  CHECK_THROWS_AS(hausman_test(fe, fe, {"x1", "nope"}), NameMismatch);
}

TEST_CASE("hausman: scalar contrast") {
  const auto h = hausman_statistic(VectorXd::Constant(1, 0.5), MatrixXd::Constant(1, 1, 0.25));
  CHECK(h.statistic == 1.0);
  CHECK(h.dof == 1);
  CHECK(h.valid);
  CHECK(h.p_value == doctest::Approx(0.31731050786291415).epsilon(1e-12));

  const auto neg = hausman_statistic(VectorXd::Constant(1, 0.5), MatrixXd::Constant(1, 1, -0.25));
  CHECK_FALSE(neg.valid);
  CHECK(neg.statistic == -1.0);
  CHECK(neg.p_value == 1.0);
}

TEST_CASE("hausman: correlated effects are rejected") {
  std::mt19937_64 gen(123);
  int rejected = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = testsupport::random_panel(gen, VectorXd{{0.7, -0.3}}, 1.0, 0.5, {}, 1.0);
    const auto h = hausman_test(lsdv_fit(d), random_effects_fit(d));
    if (h.p_value < 0.05) ++rejected;
  }
  CHECK(rejected >= 18);
}

TEST_CASE("hausman: invariant to rescaling a regressor") {
  std::mt19937_64 gen(4);
  auto d = testsupport::random_panel(gen, VectorXd{{0.7, -0.3, 0.2}}, 1.0, 0.5, {}, 0.3);
  const double base = hausman_test(lsdv_fit(d), random_effects_fit(d)).statistic;
  for (double c : {-3.0, 0.01, 250.0}) {
    auto scaled = d;
    scaled.regressors.col(2) *= c;
    const double h = hausman_test(lsdv_fit(scaled), random_effects_fit(scaled)).statistic;
    CHECK(std::abs(h - base) <= 1e-8 * std::abs(base));
  }
}

TEST_CASE("durbin_watson") {
  CHECK(durbin_watson({{0.7, 0.7, 0.7, 0.7}}) == 0.0);
  CHECK(durbin_watson({{1, -1, 1, -1}}) == 3.0);
  CHECK_THROWS_AS(durbin_watson({{1.0}, {2.0}}), NoConsecutivePairs);
  CHECK(std::isnan(durbin_watson({{0.0, 0.0}})));

  std::mt19937_64 gen(2);
  std::normal_distribution<double> n01;
  std::vector<double> e(10000);
  for (auto& v : e) v = n01(gen);
  const double dw = durbin_watson({e});
  CHECK(dw >= 1.9);
  CHECK(dw <= 2.1);
}

TEST_CASE("residual_runs split at unit boundaries and gaps") {
  std::vector<PanelIndex> idx{{"a", 1990, "", ""}, {"b", 1990, "", ""}, {"a", 1991, "", ""},
                              {"a", 1993, "", ""}, {"b", 1991, "", ""}};
  const auto runs = residual_runs(VectorXd{{1.0, 5.0, 2.0, 3.0, 6.0}}, idx);
  REQUIRE(runs.size() == 3);
  CHECK(runs[0] == std::vector<double>{1.0, 2.0});
  CHECK(runs[1] == std::vector<double>{3.0});
  CHECK(runs[2] == std::vector<double>{5.0, 6.0});
  CHECK(durbin_watson(runs) == doctest::Approx(2.0 / 75.0));
}

TEST_CASE("significance markers") {
  CHECK(significance_marker(0.000) == "*");
  CHECK(significance_marker(0.333) == "");
  CHECK(significance_marker(0.07) == "**");
  CHECK(significance_marker(0.05) == "**");
  CHECK(significance_marker(0.10) == "");

  FitResult f;
  f.p_values = VectorXd{{0.01, 0.08, 0.5}};
  CHECK(summarize_fit(f) == std::vector<std::string>{"*", "**", ""});
  CHECK(summarize_fit(f, {0.001, 0.02}) == std::vector<std::string>{"**", "", ""});
  CHECK(two_sided_p(0.0, 10) == 1.0);
  CHECK(two_sided_p(2.228138851986, 10) == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("R-squared bounds and nesting") {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> n01;
  for (int rep = 0; rep < 20; ++rep) {
    auto d = testsupport::random_panel(gen, VectorXd{{0.2, 0.1}}, 0.5, 2.0);
    d.effects = Effects::None;
    const auto small = ols_fit(d);
    auto bigger = d;
    bigger.regressors.conservativeResize(Eigen::NoChange, d.cols() + 1);
    for (Eigen::Index i = 0; i < d.rows(); ++i) bigger.regressors(i, d.cols()) = n01(gen);
    bigger.names.push_back("noise");
    const auto big = ols_fit(bigger);
    for (const auto* f : {&small, &big}) {
      CHECK(f->r_squared >= 0.0);
      CHECK(f->r_squared <= 1.0);
    }
    CHECK(big.r_squared >= small.r_squared - 1e-14);
  }
}

TEST_CASE("covariance matrices are symmetric positive semi-definite") {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = testsupport::random_panel(gen, VectorXd{{0.7, -0.3, 0.1}}, 1.0, 0.4, {}, 0.4);
    for (Estimator e : {Estimator::Pooled, Estimator::Lsdv, Estimator::RandomEffects}) {
      const auto f = fit(d, e);
      const double norm = f.covariance.cwiseAbs().maxCoeff();
      CHECK((f.covariance - f.covariance.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * norm);
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(f.covariance);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * norm);
    }
  }
}

TEST_CASE("confidence intervals cover the truth in Monte Carlo") {
  std::mt19937_64 gen(555);
  const VectorXd beta{{0.098, 0.559, -0.624}};
  int lsdv_cover = 0, re_cover = 0, total = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto d = testsupport::random_panel(gen, beta, 1.0, 0.3);
    const auto fe = lsdv_fit(d);
    const auto re = random_effects_fit(d);
    const double qf = boost::math::quantile(boost::math::students_t(static_cast<double>(fe.dof)), 0.975);
    const double qr = boost::math::quantile(boost::math::students_t(static_cast<double>(re.dof)), 0.975);
    for (Eigen::Index j = 0; j < 3; ++j) {
      ++total;
      if (std::abs(fe.coefficients[j] - beta[j]) <= qf * fe.std_errors[j]) ++lsdv_cover;
      if (std::abs(re.coefficients[j + 1] - beta[j]) <= qr * re.std_errors[j + 1]) ++re_cover;
    }
  }
  CHECK(lsdv_cover >= 0.9 * total);
  CHECK(re_cover >= 0.9 * total);
}

TEST_CASE("names and parsing") {
  CHECK(parse_estimator("lsdv") == Estimator::Lsdv);
  CHECK(parse_estimator("re") == Estimator::RandomEffects);
  CHECK(parse_estimator("pooled") == Estimator::Pooled);
  CHECK(parse_effects("industry") == Effects::Industry);
  CHECK_THROWS_AS(parse_estimator("gmm"), ValidationError);
  CHECK_THROWS_AS(parse_effects("time"), ValidationError);
}
