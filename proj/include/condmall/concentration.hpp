#ifndef CONDMALL_CONCENTRATION_HPP
#define CONDMALL_CONCENTRATION_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "condmall/model.hpp"

namespace condmall {

inline constexpr double kSlackTolerance = 1e-10;

struct InequalityRecord {
  Eigen::Index latent = 0;
  std::optional<double> threshold;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
};

struct ConcentrationReport {
  std::string functional;
  std::string inequality;
  std::vector<InequalityRecord> records;
  bool pass = true;
  // Efron-Stein: chaos order when F - E[F|Z] lies in a single chaos, and the
  // residual of Var[F|Z] = E[Gamma(F,F)|Z] / p in that case.
  std::optional<std::size_t> pure_chaos_order;
  std::optional<double> equality_residual;
  // McDiarmid: per-coordinate bounded differences.
  std::vector<double> bounded_differences;

  void add(InequalityRecord r);
  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Cov(F, G | Z = z) by enumeration.
Eigen::VectorXd conditional_covariance(const Functional& f, const Functional& g);

// sum_a E[D_a F * D_a(-L^{-1} G) | Z = z], with G centered internally.
Eigen::VectorXd covariance_malliavin(const Functional& f, const Functional& g);

// int_0^horizon sum_a E[D_a F * D_a P_t G | Z] dt by Gauss-Legendre panels,
// with P_t from the chaos expansion of the centered G.
Eigen::VectorXd covariance_quadrature(const Functional& f, const Functional& g, double horizon = 40.0);

// Var[F | Z] <= E[Gamma(F,F) | Z] per latent state.
ConcentrationReport efron_stein_check(const Functional& f, const std::string& name = "F");

// max over (z, x, x'_a) of |F(z,x) - F(z, x^{a}, x'_a)|.
std::vector<double> bounded_differences(const Functional& f);

// P(F - E[F|Z] >= x | Z = z) <= exp(-x^2 / (2 sum_a d_a^2)).
ConcentrationReport mcdiarmid_check(const Functional& f, const std::vector<double>& thresholds,
                                    const std::string& name = "F");

}  // namespace condmall

#endif  // CONDMALL_CONCENTRATION_HPP
