#ifndef CONDMALL_SUITES_HPP
#define CONDMALL_SUITES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "condmall/fixtures.hpp"
#include "condmall/hypergraph.hpp"
#include "condmall/normal_approx.hpp"
#include "condmall/ustat.hpp"

namespace condmall {

// One measured quantity against its threshold.
struct SuiteCheck {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<", "<=", ">=", "in", "=="
  double threshold = 0.0;
  double threshold_hi = 0.0;  // upper end for "in"
  bool pass = false;
};

struct SuiteReport {
  std::string suite;
  bool pass = true;
  std::vector<SuiteCheck> checks;
  nlohmann::json details = nlohmann::json::object();
  double seconds = 0.0;

  void less(const std::string& name, double value, double threshold);
  void at_most(const std::string& name, double value, double threshold);
  void at_least(const std::string& name, double value, double threshold);
  void within(const std::string& name, double value, double lo, double hi);
  void require(const std::string& name, bool ok);

  nlohmann::json to_json() const;
  std::string summary() const;  // one line per check
};

struct OperatorSuiteOptions {
  std::size_t models = 100;
  std::uint64_t seed = 7;
  RandomModelLimits limits{};
  double tolerance = 1e-12;
};

// D_a D_a = D_a, D_a D_b = D_b D_a, E[D_a F | G^a] = 0 and integration by
// parts on random models.
SuiteReport operator_suite(const OperatorSuiteOptions& o);

struct ChaosSuiteOptions {
  std::size_t models = 100;
  std::uint64_t seed = 11;
  RandomModelLimits limits{};
  double tolerance = 1e-10;
  double mobius_tolerance = 1e-12;
};

SuiteReport chaos_suite(const ChaosSuiteOptions& o);

// The same invariants for one functional, plus E[(pi_n F)^2] per order.
SuiteReport chaos_report(const Functional& f, double tolerance = 1e-10, double mobius_tolerance = 1e-12);

struct GlauberSuiteOptions {
  std::size_t paths = 100000;
  std::vector<double> times{0.5, 1.0, 2.0};
  double ergodic_time = 20.0;
  double se_multiplier = 4.0;
  std::uint64_t seed = 3;
  unsigned workers = 1;
};

// Monte Carlo P_t F against the spectral value on the CM1 model with
// F = X_1 + X_2 X_3.
SuiteReport glauber_suite(const GlauberSuiteOptions& o);

struct ConcentrationSuiteOptions {
  std::size_t pairs = 100;
  std::size_t mcdiarmid_functionals = 20;
  std::vector<double> thresholds{0.5, 1.0, 2.0, 3.0};
  std::uint64_t seed = 5;
  double tolerance = 1e-10;
};

SuiteReport concentration_suite(const ConcentrationSuiteOptions& o);

struct CltBernoulliSuiteOptions {
  std::vector<double> zs{0.3, 0.5, 0.7};
  std::vector<double> probs{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::vector<std::size_t> ns{64, 256, 1024};
  std::vector<std::size_t> slope_ns{64, 256, 1024, 4096};
  std::size_t samples = 200000;
  double slope_lo = -0.70;
  double slope_hi = -0.30;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

SuiteReport clt_bernoulli_suite(const CltBernoulliSuiteOptions& o, std::vector<CltRow>* rows = nullptr);

struct WassersteinSuiteOptions {
  std::size_t functionals = 50;
  RandomModelLimits limits{8, 3, 3, 1, 2};
  double margin = -1e-9;
  std::uint64_t seed = 13;
};

// general_w1_bound total against the exact W1 distance on random
// conditionally centred, standardized functionals.
SuiteReport wasserstein_suite(const WassersteinSuiteOptions& o);

struct FourthMomentSuiteOptions {
  std::size_t functionals = 50;
  RandomModelLimits limits{5, 3, 2, 2, 2};
  std::size_t max_degree = 3;
  double hermite_tolerance = 1e-9;
  std::uint64_t seed = 17;
  unsigned workers = 1;
};

// A standardized pure-chaos piece of a random homogeneous sum, with its
// Hoeffding components rescaled to match.
struct ChaosUStat {
  Functional f;
  std::vector<DegenerateUStat> components;
  std::size_t degree = 0;
};

// Draws until the top-order piece is non-negligible.
ChaosUStat random_chaos_ustat(RandomStream& rng, const RandomModelLimits& limits, std::size_t max_degree);

SuiteReport fourth_moment_suite(const FourthMomentSuiteOptions& o);

struct DejongSuiteOptions {
  std::size_t functionals = 20;
  RandomModelLimits limits{5, 3, 2, 2, 2};
  std::size_t max_degree = 3;
  std::uint64_t seed = 19;
  unsigned workers = 1;
};

// De Jong quantities and the exact distance d_W for random homogeneous
// chaos functionals. Checks the EGF and H1 conditions and that the explicit
// part of the bound is finite.
SuiteReport dejong_suite(const DejongSuiteOptions& o);

struct HypergraphSuiteOptions {
  std::size_t identity_samples = 1000;
  std::size_t identity_max_n = 12;
  double modified_tolerance = 1e-8;
  double plain_tolerance = 1e-9;
  std::size_t moment_samples = 10000;
  std::size_t brute_force_samples = 100;
  std::vector<std::size_t> experiment_ns{10, 20, 40};
  double experiment_p = 0.3;
  std::size_t experiment_samples = 20000;
  double ratio_spread = 3.0;
  std::uint64_t seed = 23;
  unsigned workers = 1;
};

SuiteReport hypergraph_suite(const HypergraphSuiteOptions& o, std::vector<MotifCltRow>* rows = nullptr);

}  // namespace condmall

#endif  // CONDMALL_SUITES_HPP
