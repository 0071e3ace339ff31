#pragma once

// Short-run equilibrium of the core-periphery wage equation.
//
// For regions r, s with incomes Y, labor λ, iceberg factors T (T_rs ≥ 1,
// T_rr = 1), elasticity σ > 1 and manufacturing share μ:
//
//   G_r = [ Σ_s λ_s (w_s T_sr)^(1-σ) ]^(1/(1-σ))          price index
//   w_r = [ Σ_s Y_s T_rs^(1-σ) G_s^(σ-1) ]^(1/σ)           wage equation
//   ω_r = w_r G_r^(-μ)                                    real wage
//
// The system is jointly homogeneous of degree one in (w, G, Y, φ), so the
// solver reports every nominal quantity in numeraire units where the
// labor-weighted mean nominal wage equals one. `income_scale` records the
// factor that converts the economy's incomes into those units.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "negpanel/errors.hpp"

namespace negpanel {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct NegParameters {
  Scalar sigma = Scalar(5);
  Scalar mu = Scalar(0.4);

  NegParameters() = default;
  NegParameters(Scalar sigma_, Scalar mu_) : sigma(sigma_), mu(mu_) { validate(); }

  void validate() const {
    if (!(sigma > Scalar(1)) || !std::isfinite(double(sigma)))
      throw InvalidEconomy("sigma must be finite and > 1");
    if (!(mu > Scalar(0) && mu < Scalar(1))) throw InvalidEconomy("mu must lie in (0, 1)");
  }
};

template <typename Scalar>
class SpatialEconomy {
 public:
  SpatialEconomy(std::vector<std::string> regions, VectorX<Scalar> income, VectorX<Scalar> labor,
                 VectorX<Scalar> immobile_income, MatrixX<Scalar> transport, NegParameters<Scalar> params)
      : regions_(std::move(regions)),
        income_(std::move(income)),
        labor_(std::move(labor)),
        immobile_income_(std::move(immobile_income)),
        transport_(std::move(transport)),
        params_(params) {
    params_.validate();
    const auto n = static_cast<Eigen::Index>(regions_.size());
    if (n == 0) throw InvalidEconomy("economy needs at least one region");
    if (income_.size() != n || labor_.size() != n || immobile_income_.size() != n)
      throw InvalidEconomy("income, labor and immobile income must have one entry per region");
    if (transport_.rows() != n || transport_.cols() != n)
      throw InvalidEconomy("transport matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    auto nonneg = [](const VectorX<Scalar>& v) {
      return v.allFinite() && (v.array() >= Scalar(0)).all();
    };
    if (!nonneg(income_) || !nonneg(labor_) || !nonneg(immobile_income_))
      throw InvalidEconomy("income and labor entries must be finite and non-negative");
    if (!(labor_.sum() > Scalar(0))) throw InvalidEconomy("total labor must be positive");
    if (!transport_.allFinite()) throw InvalidEconomy("transport entries must be finite");
    transport_.diagonal().setOnes();
    if ((transport_.array() < Scalar(1)).any()) throw InvalidEconomy("transport factors must be >= 1");
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(regions_.size()); }
  const std::vector<std::string>& regions() const { return regions_; }
  const VectorX<Scalar>& income() const { return income_; }
  const VectorX<Scalar>& labor() const { return labor_; }
  const VectorX<Scalar>& immobile_income() const { return immobile_income_; }
  const MatrixX<Scalar>& transport() const { return transport_; }
  const NegParameters<Scalar>& params() const { return params_; }

  // Same economy with incomes and immobile incomes multiplied by `factor`.
  SpatialEconomy scaled_income(Scalar factor) const {
    return SpatialEconomy(regions_, income_ * factor, labor_, immobile_income_ * factor, transport_, params_);
  }

 private:
  std::vector<std::string> regions_;
  VectorX<Scalar> income_;
  VectorX<Scalar> labor_;
  VectorX<Scalar> immobile_income_;
  MatrixX<Scalar> transport_;
  NegParameters<Scalar> params_;
};

template <typename Scalar>
struct EquilibriumState {
  VectorX<Scalar> nominal_wage;
  VectorX<Scalar> price_index;
  VectorX<Scalar> real_wage;
  VectorX<Scalar> income;  // incomes at the fixed point, numeraire units
  Scalar income_scale = Scalar(1);
  long iterations = 0;
  Scalar residual = Scalar(0);
};

namespace detail {

template <typename Scalar>
void require_positive(const VectorX<Scalar>& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] > Scalar(0)) || !std::isfinite(double(v[i])))
      throw NonPositiveWage(std::string(what) + " must be finite and > 0 (entry " + std::to_string(i) + ")");
}

template <typename Scalar>
void require_region(const SpatialEconomy<Scalar>& econ, Eigen::Index r) {
  if (r < 0 || r >= econ.size()) throw InvalidEconomy("region index out of range");
}

}  // namespace detail

template <typename Scalar>
Scalar price_index(const SpatialEconomy<Scalar>& econ, const std::type_identity_t<VectorX<Scalar>>& wages, Eigen::Index r) {
  detail::require_region(econ, r);
  if (wages.size() != econ.size()) throw InvalidEconomy("wage vector length mismatch");
  detail::require_positive(wages, "wages");
  const Scalar one_minus_sigma = Scalar(1) - econ.params().sigma;
  Scalar sum(0);
  for (Eigen::Index s = 0; s < econ.size(); ++s)
    sum += econ.labor()[s] * std::pow(wages[s] * econ.transport()(s, r), one_minus_sigma);
  if (!(sum > Scalar(0))) throw DegenerateLabor("price index sum is zero (no labor)");
  return std::pow(sum, Scalar(1) / one_minus_sigma);
}

template <typename Scalar>
VectorX<Scalar> price_indices(const SpatialEconomy<Scalar>& econ, const std::type_identity_t<VectorX<Scalar>>& wages) {
  VectorX<Scalar> g(econ.size());
  for (Eigen::Index r = 0; r < econ.size(); ++r) g[r] = price_index(econ, wages, r);
  return g;
}

// Wage the market-access condition assigns region r for the given incomes.
template <typename Scalar>
Scalar nominal_wage_rhs(const SpatialEconomy<Scalar>& econ, const std::type_identity_t<VectorX<Scalar>>& incomes,
                        const std::type_identity_t<VectorX<Scalar>>& price_idx, Eigen::Index r) {
  detail::require_region(econ, r);
  if (price_idx.size() != econ.size() || incomes.size() != econ.size())
    throw InvalidEconomy("price index / income vector length mismatch");
  detail::require_positive(price_idx, "price indices");
  const Scalar sigma = econ.params().sigma;
  Scalar sum(0);
  for (Eigen::Index s = 0; s < econ.size(); ++s)
    sum += incomes[s] * std::pow(econ.transport()(r, s), Scalar(1) - sigma) * std::pow(price_idx[s], sigma - Scalar(1));
  if (!(sum > Scalar(0))) throw DegenerateLabor("market-access sum is zero (no income)");
  return std::pow(sum, Scalar(1) / sigma);
}

template <typename Scalar>
Scalar nominal_wage_rhs(const SpatialEconomy<Scalar>& econ, const std::type_identity_t<VectorX<Scalar>>& price_idx, Eigen::Index r) {
  return nominal_wage_rhs(econ, econ.income(), price_idx, r);
}

template <typename Scalar>
Scalar real_wage(Scalar w, Scalar g, const NegParameters<Scalar>& params) {
  if (!(w > Scalar(0)) || !(g > Scalar(0))) throw NonPositiveInput("real_wage needs w > 0 and G > 0");
  return w * std::pow(g, -params.mu);
}

// Y_r = μ λ_r w_r + (1 - μ) φ_r, with μ allowed on the closed interval [0, 1].
template <typename Scalar>
VectorX<Scalar> income(const std::type_identity_t<VectorX<Scalar>>& labor, const std::type_identity_t<VectorX<Scalar>>& immobile_income,
                       const std::type_identity_t<VectorX<Scalar>>& wages, Scalar mu) {
  if (labor.size() != wages.size() || immobile_income.size() != wages.size())
    throw InvalidEconomy("income inputs must have equal length");
  if (!(mu >= Scalar(0) && mu <= Scalar(1))) throw InvalidEconomy("mu must lie in [0, 1]");
  detail::require_positive(wages, "wages");
  return (mu * labor.array() * wages.array() + (Scalar(1) - mu) * immobile_income.array()).matrix();
}

template <typename Scalar>
VectorX<Scalar> income(const SpatialEconomy<Scalar>& econ, const std::type_identity_t<VectorX<Scalar>>& wages) {
  return income(econ.labor(), econ.immobile_income(), wages, econ.params().mu);
}

// log ω = (1/σ) log B1 - μ/(1-σ) log B2 for the two bracket sums of the reduced form.
template <typename Scalar>
Scalar log_real_wage(Scalar market_access, Scalar price_bracket, const NegParameters<Scalar>& params) {
  if (!(market_access > Scalar(0)) || !(price_bracket > Scalar(0)))
    throw NonPositiveInput("log_real_wage needs positive bracket values");
  return std::log(market_access) / params.sigma - params.mu / (Scalar(1) - params.sigma) * std::log(price_bracket);
}

// The reduced form evaluated directly from the same brackets.
template <typename Scalar>
Scalar reduced_real_wage(Scalar market_access, Scalar price_bracket, const NegParameters<Scalar>& params) {
  if (!(market_access > Scalar(0)) || !(price_bracket > Scalar(0)))
    throw NonPositiveInput("reduced_real_wage needs positive bracket values");
  return std::pow(market_access, Scalar(1) / params.sigma) *
         std::pow(price_bracket, -params.mu / (Scalar(1) - params.sigma));
}

template <typename Scalar>
struct Brackets {
  VectorX<Scalar> market_access;  // Σ_s Y_s T_rs^(1-σ) G_s^(σ-1)
  VectorX<Scalar> price;          // Σ_s λ_s (w_s T_sr)^(1-σ)
};

template <typename Scalar>
Brackets<Scalar> brackets(const SpatialEconomy<Scalar>& econ, const std::type_identity_t<VectorX<Scalar>>& incomes,
                          const std::type_identity_t<VectorX<Scalar>>& wages) {
  const Scalar sigma = econ.params().sigma;
  const VectorX<Scalar> g = price_indices(econ, wages);
  Brackets<Scalar> b{VectorX<Scalar>(econ.size()), VectorX<Scalar>(econ.size())};
  for (Eigen::Index r = 0; r < econ.size(); ++r) {
    b.market_access[r] = std::pow(nominal_wage_rhs(econ, incomes, g, r), sigma);
    b.price[r] = std::pow(g[r], Scalar(1) - sigma);
  }
  return b;
}

struct SolverOptions {
  bool endogenous_income = false;
  double damping = 0.5;
  double tol = 1e-10;
  long max_iter = 10000;
};

// Largest relative defect of a state against the economy with incomes
// multiplied by `state.income_scale`: wage equation, price index, and the
// numeraire condition.
template <typename Scalar>
Scalar equilibrium_defect(const SpatialEconomy<Scalar>& econ, const EquilibriumState<Scalar>& state,
                          bool endogenous_income) {
  const auto scaled = econ.scaled_income(state.income_scale);
  const VectorX<Scalar> y = endogenous_income ? income(scaled, state.nominal_wage) : scaled.income();
  Scalar defect(0);
  for (Eigen::Index r = 0; r < econ.size(); ++r) {
    const Scalar w_rhs = nominal_wage_rhs(scaled, y, state.price_index, r);
    const Scalar g_rhs = price_index(scaled, state.nominal_wage, r);
    defect = std::max(defect, std::abs(state.nominal_wage[r] - w_rhs) / state.nominal_wage[r]);
    defect = std::max(defect, std::abs(state.price_index[r] - g_rhs) / state.price_index[r]);
  }
  const Scalar mean_w = econ.labor().dot(state.nominal_wage) / econ.labor().sum();
  return std::max(defect, std::abs(mean_w - Scalar(1)));
}

// Damped successive substitution on (w, G). Each sweep rescales w, G and the
// income unit jointly so the labor-weighted mean wage stays at one; since the
// system is homogeneous this is a change of units, not a change of dynamics.
template <typename Scalar>
EquilibriumState<Scalar> solve_equilibrium(const SpatialEconomy<Scalar>& econ, const SolverOptions& opt = {}) {
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw InvalidEconomy("damping must lie in (0, 1]");
  if (!(opt.tol > 0.0)) throw InvalidEconomy("tol must be > 0");
  if (opt.max_iter < 1) throw InvalidEconomy("max_iter must be >= 1");
  if (!opt.endogenous_income && !(econ.income().sum() > Scalar(0)))
    throw InvalidEconomy("total income must be positive");

  const Scalar d(opt.damping);
  const Scalar total_labor = econ.labor().sum();
  const Eigen::Index n = econ.size();

  EquilibriumState<Scalar> st;
  st.nominal_wage = VectorX<Scalar>::Ones(n);
  st.price_index = price_indices(econ, st.nominal_wage);
  st.income_scale = Scalar(1);

  for (long it = 1; it <= opt.max_iter; ++it) {
    const auto scaled = econ.scaled_income(st.income_scale);
    const VectorX<Scalar> y = opt.endogenous_income ? income(scaled, st.nominal_wage) : scaled.income();
    VectorX<Scalar> w_target(n);
    for (Eigen::Index r = 0; r < n; ++r) w_target[r] = nominal_wage_rhs(scaled, y, st.price_index, r);
    const VectorX<Scalar> g_target = price_indices(econ, st.nominal_wage);

    Scalar step(0);
    for (Eigen::Index r = 0; r < n; ++r) {
      step = std::max(step, std::abs(w_target[r] - st.nominal_wage[r]) / st.nominal_wage[r]);
      step = std::max(step, std::abs(g_target[r] - st.price_index[r]) / st.price_index[r]);
    }

    VectorX<Scalar> w = (Scalar(1) - d) * st.nominal_wage + d * w_target;
    VectorX<Scalar> g = (Scalar(1) - d) * st.price_index + d * g_target;
    const Scalar m = econ.labor().dot(w) / total_labor;
    if (!(m > Scalar(0)) || !std::isfinite(double(m))) throw NoConvergence(it, std::numeric_limits<double>::infinity());
    st.nominal_wage = w / m;
    st.price_index = g / m;
    st.income_scale /= m;
    st.iterations = it;

    if (step <= Scalar(opt.tol) * Scalar(0.01) || it == opt.max_iter) {
      st.residual = equilibrium_defect(econ, st, opt.endogenous_income);
      if (st.residual <= Scalar(opt.tol)) break;
      if (it == opt.max_iter) throw NoConvergence(it, double(st.residual));
    }
  }

  st.real_wage.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) st.real_wage[r] = real_wage(st.nominal_wage[r], st.price_index[r], econ.params());
  const auto scaled = econ.scaled_income(st.income_scale);
  st.income = opt.endogenous_income ? income(scaled, st.nominal_wage) : scaled.income();
  return st;
}

using NegParametersd = NegParameters<double>;
using SpatialEconomyd = SpatialEconomy<double>;
using EquilibriumStated = EquilibriumState<double>;

}  // namespace negpanel
