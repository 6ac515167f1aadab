#ifndef CONDMALL_NORMAL_APPROX_HPP
#define CONDMALL_NORMAL_APPROX_HPP

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "condmall/model.hpp"
#include "condmall/operators.hpp"

namespace condmall {

// A finite law: sorted distinct atoms with positive weights summing to 1.
struct FiniteDistribution {
  std::vector<double> atoms;
  std::vector<double> probs;

  // Sorts, merges equal atoms and drops zero weights.
  static FiniteDistribution from_pairs(std::vector<std::pair<double, double>> pairs);
};

struct EmpiricalDistribution {
  std::vector<double> values;  // sorted ascending

  static EmpiricalDistribution from_samples(std::vector<double> samples);
  std::size_t size() const { return values.size(); }
  FiniteDistribution law() const;
};

// Law of F(Z, X) under the joint distribution.
FiniteDistribution finite_law(const Functional& f);

// int |F_dist(x) - Phi(x)| dx, evaluated piecewise in closed form.
double w1_to_std_normal(const FiniteDistribution& dist);
double w1_to_std_normal(const EmpiricalDistribution& dist);

// int |F_1(x) - F_2(x)| dx between two finite laws.
double w1_distance(const FiniteDistribution& a, const FiniteDistribution& b);

// sum_a (X_a - E[X_a|Z]) / s_Z with s_Z^2 = sum_a Var(X_a | Z).
Functional normalized_sum(const ModelPtr<double>& model);

// 2(sqrt 2 + 1) E[s_Z^{-3} sum_a E(|X_a - E[X_a|Z]|^3 | Z)] for the normalized
// sum of all components of the model. Needs no enumeration.
double lyapunov_bound(const ProductModel& model);

// Closed form for n conditionally Bernoulli(Z) coordinates:
// 2(sqrt 2 + 1) E[(1 - 2Z + 2Z^2) / sqrt(Z(1 - Z))] n^{-1/2}.
double conditional_bernoulli_lyapunov_bound(const std::vector<double>& zs, const std::vector<double>& probs,
                                            std::size_t n);

struct WassersteinBoundBreakdown {
  double term1 = 0.0;  // sqrt(2/pi) E|Gamma(F, -L^{-1}F) - 1|
  double term2 = 0.0;  // (1/2) sum_a E[|Delta^a L^{-1}F| (Delta^a F)^2]
  double total = 0.0;
  double variance_term1 = 0.0;  // sqrt(2/pi) sqrt(Var Gamma(F, L^{-1}F))
  double variance_term2 = 0.0;  // (sqrt 2 / 2) sqrt(-E[F LF]) sqrt(sum_a E|Delta^a F|^4)
  double variance_total = 0.0;
  double exact_dw = 0.0;

  nlohmann::json to_json() const;
};

// Requires max_z |E[F|Z=z]| <= 1e-8 and |E[F^2] - 1| <= 1e-8.
WassersteinBoundBreakdown general_w1_bound(const Functional& f);

double multi_chaos_bound(const ChaosDecomposition& d);

struct CltRow {
  std::size_t n = 0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double dw_empirical = 0.0;
  double bound = 0.0;
};

// Samples the normalized sum of n conditionally Bernoulli(Z) coordinates
// and measures its W1 distance to N(0,1).
std::vector<CltRow> conditional_bernoulli_experiment(const std::vector<double>& zs, const std::vector<double>& probs,
                                                     const std::vector<std::size_t>& ns, std::size_t samples,
                                                     std::uint64_t seed, unsigned workers = 1);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace condmall

#endif  // CONDMALL_NORMAL_APPROX_HPP
