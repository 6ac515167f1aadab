#include "condmall/ustat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "condmall/error.hpp"
#include "condmall/parallel.hpp"

namespace condmall {
namespace {

struct SubsetLess {
  bool operator()(const Subset& a, const Subset& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

std::string subset_string(const Subset& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "}";
}

// E[X_i | Z = z] as a (latent x component) matrix.
Eigen::MatrixXd conditional_means(const ProductModel& model) {
  Eigen::MatrixXd mu(model.latent_count(), static_cast<Eigen::Index>(model.component_count()));
  for (std::size_t a = 0; a < model.component_count(); ++a) {
    const auto& c = model.component(a);
    mu.col(static_cast<Eigen::Index>(a)) = c.cond_pmf * c.values;
  }
  return mu;
}

bool intersects(const Subset& a, const Subset& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

// Connectivity of a 4-vertex graph given as a 6-bit edge mask over the pairs
// (01, 02, 03, 12, 13, 23).
bool graph4_connected(unsigned mask) {
  static const int ends[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  unsigned reached = 1;
  for (int round = 0; round < 3; ++round) {
    for (int e = 0; e < 6; ++e) {
      if (!(mask >> e & 1u)) continue;
      unsigned u = 1u << ends[e][0], v = 1u << ends[e][1];
      if (reached & (u | v)) reached |= u | v;
    }
  }
  return reached == 0xFu;
}

double scale_of(const Functional& f) { return std::max(1.0, max_abs(f)); }

void require_standardized(const Functional& f, bool centered) {
  const double second = expectation(f * f);
  const double mean = centered ? max_abs_conditional_mean(f) : 0.0;
  if (std::abs(second - 1.0) > 1e-8 || mean > 1e-8) {
    throw Error(ErrorCode::NotStandardized, "need E[F^2] = 1" + std::string(centered ? " and E[F|Z] = 0" : "") +
                                                " (E[F^2] = " + std::to_string(second) + ")");
  }
}

double fourth_difference_sum(const Functional& f) {
  double total = 0.0;
  for (std::size_t a = 0; a < f.model().component_count(); ++a) total += expectation(difference_moment(f, a, 4, true));
  return total;
}

std::size_t top_order(const std::vector<DegenerateUStat>& components) {
  std::size_t p = 0;
  for (const auto& c : components) p = std::max(p, c.order());
  return p;
}

}  // namespace

UStatistic build_homogeneous_sum(const ModelPtr<double>& model, const HomogeneousSum& spec) {
  HomogeneousSum normalized = spec;
  for (std::size_t t = 0; t < normalized.terms.size(); ++t) {
    auto& term = normalized.terms[t];
    const std::string where = "terms[" + std::to_string(t) + "]";
    for (auto i : term.support) model->check_index(i);
    std::sort(term.support.begin(), term.support.end());
    if (std::adjacent_find(term.support.begin(), term.support.end()) != term.support.end()) {
      throw Error(ErrorCode::InvalidArgument, where + ": repeated index in support");
    }
    if (term.support.empty() || term.support.size() > spec.degree) {
      throw Error(ErrorCode::InvalidArgument, where + ": support size must be in [1, " + std::to_string(spec.degree) + "]");
    }
    if (term.coefficient.size() != 1 && term.coefficient.size() != model->latent_count()) {
      throw Error(ErrorCode::InvalidArgument, where + ": coefficient needs 1 or |latent| entries");
    }
    if (!term.coefficient.allFinite()) throw Error(ErrorCode::InvalidArgument, where + ": non-finite coefficient");
  }
  auto f = Functional::from_cells(model, [&](Eigen::Index z, const std::vector<int>& d) {
    double acc = 0.0;
    for (const auto& term : normalized.terms) {
      double v = term.coefficient.size() == 1 ? term.coefficient(0) : term.coefficient(z);
      for (auto i : term.support) v *= model->value(i, d[i]);
      acc += v;
    }
    return acc;
  });
  return UStatistic(std::move(f), std::move(normalized));
}

HomogeneousSum random_homogeneous_sum(const ProductModel& model, std::size_t degree, RandomStream& rng,
                                      bool latent_coefficients) {
  const std::size_t m = model.component_count();
  if (degree == 0 || degree > m) throw Error(ErrorCode::InvalidArgument, "degree must be in [1, |A|]");
  if (m > 20) throw Error(ErrorCode::InvalidArgument, "random homogeneous sums need |A| <= 20");
  HomogeneousSum spec;
  spec.degree = degree;
  const Eigen::Index coeffs = latent_coefficients ? model.latent_count() : 1;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcount(mask));
    if (size > degree) continue;
    if (size < degree && !rng.bernoulli(0.5)) continue;
    HomogeneousTerm term;
    for (std::size_t i = 0; i < m; ++i) {
      if (mask >> i & 1u) term.support.push_back(i);
    }
    term.coefficient.resize(coeffs);
    for (Eigen::Index z = 0; z < coeffs; ++z) term.coefficient(z) = rng.normal();
    spec.terms.push_back(std::move(term));
  }
  return spec;
}

Functional centered_product(const ModelPtr<double>& model, const Subset& support) {
  for (auto i : support) model->check_index(i);
  const Eigen::MatrixXd mu = conditional_means(*model);
  return Functional::from_cells(model, [&](Eigen::Index z, const std::vector<int>& d) {
    double v = 1.0;
    for (auto i : support) v *= model->value(i, d[i]) - mu(z, static_cast<Eigen::Index>(i));
    return v;
  });
}

HoeffdingDecomposition hoeffding_decompose(const UStatistic& w) {
  if (!w.spec()) throw Error(ErrorCode::NotHomogeneous, "functional has no homogeneous-sum description attached");
  const auto& model_ptr = w.value().model_ptr();
  const auto& model = *model_ptr;
  const Eigen::Index nz = model.latent_count();
  const Eigen::MatrixXd mu = conditional_means(model);

  // prod_I (Y_i + mu_i) = sum_{K subset I} prod_K Y_i prod_{I \ K} mu_i
  std::map<Subset, Eigen::VectorXd, SubsetLess> weights;
  for (const auto& term : w.spec()->terms) {
    const std::size_t k = term.support.size();
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
      Subset kept;
      Eigen::VectorXd c(nz);
      for (Eigen::Index z = 0; z < nz; ++z) c(z) = term.coefficient.size() == 1 ? term.coefficient(0) : term.coefficient(z);
      for (std::size_t j = 0; j < k; ++j) {
        const auto i = term.support[j];
        if (mask >> j & 1u) kept.push_back(i);
        else c.array() *= mu.col(static_cast<Eigen::Index>(i)).array();
      }
      auto it = weights.find(kept);
      if (it == weights.end()) weights.emplace(std::move(kept), std::move(c));
      else it->second += c;
    }
  }

  HoeffdingDecomposition out{Functional::zero(model_ptr), {}};
  for (auto& [support, weight] : weights) {
    if (support.empty()) {
      out.conditional_mean = Functional::latent(model_ptr, weight);
      continue;
    }
    Functional kernel = Functional::from_cells(model_ptr, [&](Eigen::Index z, const std::vector<int>& d) {
      double v = weight(z);
      for (auto i : support) v *= model.value(i, d[i]) - mu(z, static_cast<Eigen::Index>(i));
      return v;
    });
    bool null = true;
    const auto& joint = model.joint_weights();
    for (Eigen::Index cell = 0; cell < joint.size() && null; ++cell) null = joint(cell) == 0.0 || kernel.table()(cell) == 0.0;
    if (null) continue;
    out.components.push_back(DegenerateUStat{support, std::move(kernel), weight});
  }
  return out;
}

Functional HoeffdingDecomposition::sum() const {
  Eigen::VectorXd t = conditional_mean.table();
  for (const auto& c : components) t += c.kernel.table();
  return conditional_mean.with_table(std::move(t));
}

Functional HoeffdingDecomposition::chaos(std::size_t k) const {
  if (k == 0) return conditional_mean;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(conditional_mean.table().size());
  for (const auto& c : components) {
    if (c.order() == k) t += c.kernel.table();
  }
  return conditional_mean.with_table(std::move(t));
}

const DegenerateUStat* HoeffdingDecomposition::find(const Subset& support) const {
  for (const auto& c : components) {
    if (c.support == support) return &c;
  }
  return nullptr;
}

double degeneracy_residual(const DegenerateUStat& w, const Subset& keep) {
  return max_abs(cond_exp_given(w.kernel, keep));
}

std::optional<std::size_t> pure_chaos_order(const Functional& f, double tol) {
  const auto d = chaos_decomposition(f);
  const double cut = tol * scale_of(f);
  std::optional<std::size_t> order;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (max_abs(d[k]) <= cut) continue;
    if (order) return std::nullopt;
    order = k;
  }
  return order;
}

bool check_egf(const Functional& f, std::size_t p) {
  auto order = pure_chaos_order(f);
  if (!order || *order != p) {
    throw Error(ErrorCode::NotPureChaos,
                "F is not in chaos " + std::to_string(p) +
                    (order ? " (found chaos " + std::to_string(*order) + ")" : " (several chaoses present)"));
  }
  const Functional sq = f * f;
  const auto d = chaos_decomposition(sq);
  const double cut = 1e-10 * scale_of(sq);
  for (std::size_t k = 2 * p + 1; k < d.size(); ++k) {
    if (max_abs(d[k]) > cut) return false;
  }
  return true;
}

bool quadruple_connected(const Subset& i, const Subset& j, const Subset& k, const Subset& l) {
  const Subset* s[4] = {&i, &j, &k, &l};
  static const int ends[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  unsigned mask = 0;
  for (int e = 0; e < 6; ++e) {
    if (intersects(*s[ends[e][0]], *s[ends[e][1]])) mask |= 1u << e;
  }
  return graph4_connected(mask);
}

namespace {

void check_quadruple_cap(std::size_t m) {
  if (m > kQuadrupleCap) {
    throw Error(ErrorCode::SizeCapExceeded,
                std::to_string(m) + " supports exceed the quadruple cap of " + std::to_string(kQuadrupleCap));
  }
}

std::vector<std::vector<char>> intersection_matrix(const std::vector<Subset>& supports) {
  const std::size_t m = supports.size();
  std::vector<std::vector<char>> out(m, std::vector<char>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i][j] = intersects(supports[i], supports[j]) ? 1 : 0;
  }
  return out;
}

}  // namespace

std::vector<Quadruple> connected_quadruples(const std::vector<Subset>& supports) {
  const std::size_t m = supports.size();
  check_quadruple_cap(m);
  std::vector<Subset> sorted = supports;
  for (auto& s : sorted) std::sort(s.begin(), s.end());
  const auto inter = intersection_matrix(sorted);
  std::vector<Quadruple> out;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        const unsigned base = static_cast<unsigned>(inter[i][j]) | static_cast<unsigned>(inter[i][k]) << 1 |
                              static_cast<unsigned>(inter[j][k]) << 3;
        for (std::size_t l = 0; l < m; ++l) {
          const unsigned mask = base | static_cast<unsigned>(inter[i][l]) << 2 |
                                static_cast<unsigned>(inter[j][l]) << 4 | static_cast<unsigned>(inter[k][l]) << 5;
          if (graph4_connected(mask)) out.push_back({i, j, k, l});
        }
      }
    }
  }
  return out;
}

double connected_sum(const std::vector<DegenerateUStat>& components, unsigned workers) {
  const std::size_t m = components.size();
  if (m == 0) return 0.0;
  check_quadruple_cap(m);
  const auto& model = components.front().kernel.model();
  std::vector<Subset> supports;
  for (const auto& c : components) {
    require_same_model(components.front().kernel, c.kernel);
    supports.push_back(c.support);
  }
  const auto inter = intersection_matrix(supports);
  const Eigen::VectorXd& w = model.joint_weights();
  Eigen::MatrixXd kernels(w.size(), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) kernels.col(static_cast<Eigen::Index>(i)) = components[i].kernel.table();

  // E[W_I W_J W_K W_L] is symmetric, so visit I <= J <= K and weight by the
  // number of orderings; connectivity is symmetric too.
  std::vector<double> partial(m, 0.0);
  parallel_for_blocks(m, workers, [&](std::size_t i) {
    double acc = 0.0;
    Eigen::VectorXd r(w.size());
    for (std::size_t j = i; j < m; ++j) {
      for (std::size_t k = j; k < m; ++k) {
        const double mult = (i == j && j == k) ? 1.0 : (i == j || j == k) ? 3.0 : 6.0;
        const unsigned base = static_cast<unsigned>(inter[i][j]) | static_cast<unsigned>(inter[i][k]) << 1 |
                              static_cast<unsigned>(inter[j][k]) << 3;
        r = w.cwiseProduct(kernels.col(static_cast<Eigen::Index>(i)))
                .cwiseProduct(kernels.col(static_cast<Eigen::Index>(j)))
                .cwiseProduct(kernels.col(static_cast<Eigen::Index>(k)));
        const Eigen::VectorXd v = kernels.transpose() * r;
        for (std::size_t l = 0; l < m; ++l) {
          const unsigned mask = base | static_cast<unsigned>(inter[i][l]) << 2 |
                                static_cast<unsigned>(inter[j][l]) << 4 | static_cast<unsigned>(inter[k][l]) << 5;
          if (graph4_connected(mask)) acc += mult * std::abs(v(static_cast<Eigen::Index>(l)));
        }
      }
    }
    partial[i] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double maximal_influence(const std::vector<DegenerateUStat>& components) {
  const std::size_t p = top_order(components);
  std::map<std::size_t, double> influence;
  for (const auto& c : components) {
    if (c.order() != p) continue;
    const double e2 = expectation(c.kernel * c.kernel);
    for (auto i : c.support) influence[i] += e2;
  }
  double best = 0.0;
  for (const auto& [i, v] : influence) best = std::max(best, v);
  return best;
}

double hc_ratio(const std::vector<DegenerateUStat>& components) {
  const std::size_t p = top_order(components);
  double best = 0.0;
  for (const auto& c : components) {
    if (c.order() != p) continue;
    const Functional sq = c.kernel * c.kernel;
    const double e2 = expectation(sq);
    const double e4 = expectation(sq * sq);
    if (e2 <= 0.0) return std::numeric_limits<double>::infinity();
    best = std::max(best, e4 / (e2 * e2));
  }
  return best;
}

double h2_kappa(const std::vector<DegenerateUStat>& components) {
  std::vector<Functional> squares;
  std::vector<double> e2;
  for (const auto& c : components) {
    squares.push_back(c.kernel * c.kernel);
    e2.push_back(expectation(squares.back()));
  }
  double best = 0.0;
  for (std::size_t i = 0; i < squares.size(); ++i) {
    for (std::size_t j = i; j < squares.size(); ++j) {
      const double num = e2[i] * e2[j];
      if (num == 0.0) continue;
      const double den = expectation(squares[i] * squares[j]);
      if (den <= 0.0) return std::numeric_limits<double>::infinity();
      best = std::max(best, num / den);
    }
  }
  return best;
}

H1Result check_h1(const std::vector<DegenerateUStat>& components, std::size_t a) {
  H1Result out;
  if (components.empty()) return out;
  const auto& model_ptr = components.front().kernel.model_ptr();
  model_ptr->check_index(a);
  for (const auto& c : components) {
    require_same_model(components.front().kernel, c.kernel);
    if (c.weight.size() != model_ptr->latent_count()) {
      throw Error(ErrorCode::NonProductForm, "component " + subset_string(c.support) + " has no product weight");
    }
    const Functional expected = Functional::latent(model_ptr, c.weight) * centered_product(model_ptr, c.support);
    if (max_abs_diff(expected, c.kernel) > 1e-10 * scale_of(c.kernel)) {
      throw Error(ErrorCode::NonProductForm,
                  "component " + subset_string(c.support) + " is not weight(Z) * prod (X_i - E[X_i|Z])");
    }
  }
  auto reduced = [&](const DegenerateUStat& c) {
    Subset rest;
    for (auto i : c.support) {
      if (i != a) rest.push_back(i);
    }
    if (rest.empty()) return Functional::constant(model_ptr, 1.0);
    for (const auto& other : components) {
      if (other.support == rest) return other.kernel;
    }
    return centered_product(model_ptr, rest);
  };
  for (const auto& ci : components) {
    if (!std::binary_search(ci.support.begin(), ci.support.end(), a)) continue;
    for (const auto& cj : components) {
      if (!std::binary_search(cj.support.begin(), cj.support.end(), a)) continue;
      ++out.pairs;
      const Functional num = cond_exp_excluding(ci.kernel * cj.kernel, a);
      const Functional den = reduced(ci) * reduced(cj);
      const double den_scale = max_abs(den);
      if (den_scale == 0.0) {
        throw Error(ErrorCode::NonProductForm, "denominator vanishes for " + subset_string(ci.support) + ", " +
                                                   subset_string(cj.support) + " at a = " + std::to_string(a));
      }
      const double num_tol = 1e-10 * std::max(1.0, max_abs(num));
      for (Eigen::Index cell = 0; cell < num.table().size(); ++cell) {
        const double d = den.table()(cell);
        const double n = num.table()(cell);
        if (std::abs(d) <= 1e-12 * den_scale) {
          if (std::abs(n) > num_tol) out.bounded = false;
          continue;
        }
        out.max_constant = std::max(out.max_constant, std::abs(n / d));
      }
    }
  }
  return out;
}

FourthMomentReport fourth_moment_report(const Functional& f, const std::vector<DegenerateUStat>& components,
                                        unsigned workers) {
  require_standardized(f, false);
  Eigen::VectorXd rebuilt = Eigen::VectorXd::Zero(f.table().size());
  for (const auto& c : components) {
    require_same_model(f, c.kernel);
    rebuilt += c.kernel.table();
  }
  const Functional centered = f - given_Z(f);
  if ((rebuilt - centered.table()).cwiseAbs().maxCoeff() > 1e-8 * scale_of(f)) {
    throw Error(ErrorCode::InvalidArgument, "components do not sum to F - E[F|Z]");
  }

  FourthMomentReport r;
  const Functional sq = f * f;
  r.second_moment = expectation(sq);
  r.fourth_moment = expectation(sq * sq);
  r.fourth_moment_gap = std::abs(r.fourth_moment - 3.0 * r.second_moment * r.second_moment);
  const Functional gam = carre_du_champ(f, f);
  r.variance_gamma = variance(gam);
  r.remainder = fourth_difference_sum(f);
  r.max_influence = maximal_influence(components);
  r.hc_ratio = hc_ratio(components);
  r.kappa = h2_kappa(components);
  r.connected = connected_sum(components, workers);
  r.chaos_order = pure_chaos_order(f);
  std::size_t p = top_order(components);
  if (r.chaos_order && *r.chaos_order > 0) {
    p = *r.chaos_order;
    const double pd = static_cast<double>(p);
    r.gamma_deviation = expectation(gam.map([pd](double v) { return (v - pd) * (v - pd); }));
    r.egf = check_egf(f, p);
    if (r.egf) {
      r.proposition_rhs = pd * pd / 3.0 * std::abs(r.fourth_moment - 3.0) + pd / 12.0 * r.remainder;
      r.proposition_holds = *r.gamma_deviation <= *r.proposition_rhs + 1e-10;
    }
  }
  r.influence_rhs = 16.0 * static_cast<double>(p) * r.connected;
  r.influence_holds = r.remainder <= r.influence_rhs * (1.0 + 1e-12) + 1e-12;
  return r;
}

nlohmann::json FourthMomentReport::to_json() const {
  nlohmann::json j = {{"second_moment", second_moment},
                      {"fourth_moment", fourth_moment},
                      {"fourth_moment_gap", fourth_moment_gap},
                      {"variance_gamma", variance_gamma},
                      {"remainder", remainder},
                      {"max_influence", max_influence},
                      {"hc_ratio", hc_ratio},
                      {"kappa", kappa},
                      {"connected_sum", connected},
                      {"egf", egf},
                      {"influence_rhs", influence_rhs},
                      {"influence_holds", influence_holds}};
  j["chaos_order"] = chaos_order ? nlohmann::json(*chaos_order) : nlohmann::json(nullptr);
  j["gamma_deviation"] = gamma_deviation ? nlohmann::json(*gamma_deviation) : nlohmann::json(nullptr);
  j["proposition_rhs"] = proposition_rhs ? nlohmann::json(*proposition_rhs) : nlohmann::json(nullptr);
  j["proposition_holds"] = proposition_holds ? nlohmann::json(*proposition_holds) : nlohmann::json(nullptr);
  return j;
}

DeJongReport dejong_quantities(const Functional& f, const std::vector<DegenerateUStat>& components,
                               unsigned workers) {
  require_standardized(f, true);
  DeJongReport r;
  std::map<std::size_t, Eigen::VectorXd> by_order;
  for (const auto& c : components) {
    require_same_model(f, c.kernel);
    auto it = by_order.find(c.order());
    if (it == by_order.end()) by_order.emplace(c.order(), c.kernel.table());
    else it->second += c.kernel.table();
  }
  r.egf = true;
  for (const auto& [k, table] : by_order) {
    try {
      r.egf = r.egf && check_egf(f.with_table(table), k);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotPureChaos) throw;
      r.egf = false;
    }
  }
  r.hc_ratio = hc_ratio(components);
  r.kappa = h2_kappa(components);
  bool h1 = true;
  for (std::size_t a = 0; a < f.model().component_count(); ++a) {
    try {
      const auto res = check_h1(components, a);
      h1 = h1 && res.bounded;
      r.h1_constant = std::max(r.h1_constant, res.max_constant);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonProductForm) throw;
      h1 = false;
    }
  }
  std::vector<std::string> failed;
  if (!r.egf) failed.push_back("EGF");
  if (!std::isfinite(r.hc_ratio)) failed.push_back("HC");
  if (!h1) failed.push_back("H1");
  if (!std::isfinite(r.kappa)) failed.push_back("H2");
  if (!failed.empty()) {
    std::string names;
    for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::ConditionFailed, "failed: " + names);
  }
  r.connected = connected_sum(components, workers);
  const Functional sq = f * f;
  r.fourth_cumulant_gap = std::abs(expectation(sq * sq) - 3.0);
  r.dejong1_explicit = std::sqrt(2.0 / (3.0 * M_PI)) * std::sqrt(r.fourth_cumulant_gap);
  r.rho = std::sqrt(maximal_influence(components));
  r.dejong2_radicand = r.connected;
  return r;
}

nlohmann::json DeJongReport::to_json() const {
  return {{"connected_sum", connected},
          {"fourth_cumulant_gap", fourth_cumulant_gap},
          {"dejong1_explicit", dejong1_explicit},
          {"dejong1_rho", rho},
          {"dejong1_rho_multiplier", "C_p (unspecified)"},
          {"dejong2_radicand", dejong2_radicand},
          {"dejong2_multiplier", "C_m (unspecified)"},
          {"egf", egf},
          {"hc_ratio", hc_ratio},
          {"h1_constant", h1_constant},
          {"kappa", kappa}};
}

IdentityCheck hermite_identity(const Functional& f) {
  const auto order = pure_chaos_order(f);
  if (!order || *order == 0) throw Error(ErrorCode::NotPureChaos, "F must lie in a single chaos of order >= 1");
  const double p = static_cast<double>(*order);
  const Functional sq = f * f;
  const Functional h2 = sq - Functional::constant(f.model_ptr(), 1.0);
  IdentityCheck out;
  out.lhs = expectation(h2 * (generator_L(h2) + 2.0 * p * h2));
  const double poly = expectation(sq.map([](double v) { return 2.0 * (v - 1.0) * (v - 1.0) - 4.0 / 3.0 * v * v; }));
  out.rhs = p * poly + fourth_difference_sum(f) / 6.0;
  out.residual = std::abs(out.lhs - out.rhs);
  return out;
}

SandwichCheck sandwich_check(const Functional& g, double eta) {
  const auto d = chaos_decomposition(g);
  SandwichCheck out;
  out.q = d.order(1e-12 * scale_of(g));
  out.eta = eta;
  const double q = static_cast<double>(out.q);
  if (!(eta >= q)) throw Error(ErrorCode::InvalidArgument, "need eta >= q = " + std::to_string(out.q));
  const Functional h = generator_L(g) + eta * g;
  out.quadratic = expectation(h * h);
  out.linear = eta * expectation(g * h);
  const double tol = 1e-10 * std::max(1.0, std::abs(out.linear));
  out.lower_holds = out.quadratic <= out.linear + tol;
  if (eta > q) {
    out.constant = eta / (eta - q);
    out.upper_holds = out.linear <= *out.constant * out.quadratic + tol;
  }
  return out;
}

}  // namespace condmall
