#ifndef CONDMALL_USTAT_HPP
#define CONDMALL_USTAT_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "condmall/model.hpp"
#include "condmall/operators.hpp"
#include "condmall/random.hpp"

namespace condmall {

// a_I prod_{i in I} X_i. A coefficient of length 1 is a constant, otherwise it
// holds one value per latent state.
struct HomogeneousTerm {
  Subset support;
  Eigen::VectorXd coefficient;
};

struct HomogeneousSum {
  std::size_t degree = 1;
  std::vector<HomogeneousTerm> terms;
};

// A functional together with the homogeneous-sum description it came from,
// when there is one.
class UStatistic {
 public:
  explicit UStatistic(Functional value) : value_(std::move(value)) {}
  UStatistic(Functional value, HomogeneousSum spec) : value_(std::move(value)), spec_(std::move(spec)) {}

  const Functional& value() const { return value_; }
  const std::optional<HomogeneousSum>& spec() const { return spec_; }

 private:
  Functional value_;
  std::optional<HomogeneousSum> spec_;
};

UStatistic build_homogeneous_sum(const ModelPtr<double>& model, const HomogeneousSum& spec);

// Random homogeneous sum of the given degree on `model`; every support of size
// `degree` gets a term, lower orders appear with probability 1/2.
HomogeneousSum random_homogeneous_sum(const ProductModel& model, std::size_t degree, RandomStream& rng,
                                      bool latent_coefficients = true);

// W_I = weight(Z) * prod_{i in I} (X_i - E[X_i | Z]).
struct DegenerateUStat {
  Subset support;
  Functional kernel;
  Eigen::VectorXd weight;

  std::size_t order() const { return support.size(); }
};

struct HoeffdingDecomposition {
  Functional conditional_mean;  // E[W | Z]
  std::vector<DegenerateUStat> components;  // ordered by size, then lexicographically

  Functional sum() const;
  // sum of the W_I with |I| = k
  Functional chaos(std::size_t k) const;
  const DegenerateUStat* find(const Subset& support) const;
};

HoeffdingDecomposition hoeffding_decompose(const UStatistic& w);

// Y_i = X_i - E[X_i | Z].
Functional centered_product(const ModelPtr<double>& model, const Subset& support);

// max over cells of |E[W_I | X_K, Z]| for a given K.
double degeneracy_residual(const DegenerateUStat& w, const Subset& keep);

// Chaos order p when F lies in a single chaos up to `tol`, relative to max|F|.
std::optional<std::size_t> pure_chaos_order(const Functional& f, double tol = 1e-9);

// pi_k(F^2) = 0 for every k > 2p. Throws NotPureChaos when F is not in chaos p.
bool check_egf(const Functional& f, std::size_t p);

using Quadruple = std::array<std::size_t, 4>;

inline constexpr std::size_t kQuadrupleCap = 200;

// Whether the intersection graph of the four slots is connected.
bool quadruple_connected(const Subset& i, const Subset& j, const Subset& k, const Subset& l);

// Ordered quadruples of indices into `supports` with connected intersection
// graph.
std::vector<Quadruple> connected_quadruples(const std::vector<Subset>& supports);

// sum over connected (I, J, K, L) of |E[W_I W_J W_K W_L]|.
double connected_sum(const std::vector<DegenerateUStat>& components, unsigned workers = 1);

struct FourthMomentReport {
  std::optional<std::size_t> chaos_order;
  double second_moment = 0.0;
  double fourth_moment = 0.0;
  double fourth_moment_gap = 0.0;  // |E[F^4] - 3 E[F^2]^2|
  double variance_gamma = 0.0;     // Var Gamma(F, F)
  std::optional<double> gamma_deviation;  // E[(Gamma(F, F) - p)^2], chaos p only
  double remainder = 0.0;          // sum_a E|Delta^a F|^4
  double max_influence = 0.0;      // rho^2
  double hc_ratio = 0.0;
  double kappa = 0.0;
  double connected = 0.0;
  bool egf = false;
  std::optional<double> proposition_rhs;
  std::optional<bool> proposition_holds;
  double influence_rhs = 0.0;  // 16 p * connected
  bool influence_holds = false;

  nlohmann::json to_json() const;
};

FourthMomentReport fourth_moment_report(const Functional& f, const std::vector<DegenerateUStat>& components,
                                        unsigned workers = 1);

// max_i sum_{I containing i, |I| = p} E[W_I^2] with p the largest order present.
double maximal_influence(const std::vector<DegenerateUStat>& components);

// sup_J E[W_J^4] / E[W_J^2]^2 over the components of top order.
double hc_ratio(const std::vector<DegenerateUStat>& components);

// sup_{I,J} E[W_I^2] E[W_J^2] / E[W_I^2 W_J^2].
double h2_kappa(const std::vector<DegenerateUStat>& components);

struct H1Result {
  bool bounded = true;
  double max_constant = 0.0;
  std::size_t pairs = 0;  // pairs (I, J) with a in I and J
};

// Ratio E[W_I W_J | G^a] / (W_{I\a} W_{J\a}) over pairs sharing a. W_{I\a} is
// the listed component with that support, or the reduced product
// prod_{I\a} Y_i when none is listed.
H1Result check_h1(const std::vector<DegenerateUStat>& components, std::size_t a);

struct DeJongReport {
  double connected = 0.0;
  double fourth_cumulant_gap = 0.0;
  double dejong1_explicit = 0.0;  // sqrt(2/(3 pi)) sqrt|E F^4 - 3|
  double rho = 0.0;               // multiplies an unspecified constant C_p
  double dejong2_radicand = 0.0;  // multiplies an unspecified constant C_m
  bool egf = false;
  double hc_ratio = 0.0;
  double h1_constant = 0.0;
  double kappa = 0.0;

  nlohmann::json to_json() const;
};

DeJongReport dejong_quantities(const Functional& f, const std::vector<DegenerateUStat>& components,
                               unsigned workers = 1);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

// E[H_2(F)(L + 2p)H_2(F)] against p E[2(F^2-1)^2 - 4F^4/3] + E[R] with
// E[R] = (1/6) sum_a E|Delta^a F|^4, for F in chaos p.
IdentityCheck hermite_identity(const Functional& f);

struct SandwichCheck {
  std::size_t q = 0;
  double eta = 0.0;
  double quadratic = 0.0;  // E[G (L + eta)^2 G]
  double linear = 0.0;     // eta E[G (L + eta) G]
  bool lower_holds = false;
  std::optional<double> constant;  // eta / (eta - q)
  std::optional<bool> upper_holds;
};

SandwichCheck sandwich_check(const Functional& g, double eta);

}  // namespace condmall

#endif  // CONDMALL_USTAT_HPP
