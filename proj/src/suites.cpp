#include "condmall/suites.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "condmall/concentration.hpp"
#include "condmall/error.hpp"
#include "condmall/glauber.hpp"
#include "condmall/operators.hpp"

namespace condmall {
namespace {

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string number(double x) {
  std::ostringstream os;
  os << std::setprecision(6) << x;
  return os.str();
}

// Largest |estimate - exact| / SE over cells; cells with zero SE must match
// exactly (up to 1e-12), otherwise the score is infinite.
double worst_z_score(const PtEstimate& est, const Functional& exact) {
  double worst = 0.0;
  const auto& e = est.estimate.table();
  const auto& x = exact.table();
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double diff = std::abs(e(i) - x(i));
    const double se = est.standard_error(i);
    if (se > 0.0) {
      worst = std::max(worst, diff / se);
    } else if (diff > 1e-12) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

}  // namespace

void SuiteReport::less(const std::string& name, double value, double threshold) {
  checks.push_back({name, value, "<", threshold, 0.0, value < threshold});
  pass = pass && checks.back().pass;
}

void SuiteReport::at_most(const std::string& name, double value, double threshold) {
  checks.push_back({name, value, "<=", threshold, 0.0, value <= threshold});
  pass = pass && checks.back().pass;
}

void SuiteReport::at_least(const std::string& name, double value, double threshold) {
  checks.push_back({name, value, ">=", threshold, 0.0, value >= threshold});
  pass = pass && checks.back().pass;
}

void SuiteReport::within(const std::string& name, double value, double lo, double hi) {
  checks.push_back({name, value, "in", lo, hi, value >= lo && value <= hi});
  pass = pass && checks.back().pass;
}

void SuiteReport::require(const std::string& name, bool ok) {
  checks.push_back({name, ok ? 1.0 : 0.0, "==", 1.0, 0.0, ok});
  pass = pass && ok;
}

nlohmann::json SuiteReport::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json j = {{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"pass", c.pass}};
    if (c.relation == "in") {
      j["threshold"] = {c.threshold, c.threshold_hi};
    } else {
      j["threshold"] = c.threshold;
    }
    cs.push_back(std::move(j));
  }
  return {{"suite", suite}, {"pass", pass}, {"checks", cs}, {"details", details}, {"seconds", seconds}};
}

std::string SuiteReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.pass ? "  ok   " : "  FAIL ") << c.name << " = " << number(c.value) << ' ' << c.relation << ' ';
    if (c.relation == "in") {
      os << '[' << number(c.threshold) << ", " << number(c.threshold_hi) << ']';
    } else {
      os << number(c.threshold);
    }
    os << '\n';
  }
  return os.str();
}

SuiteReport operator_suite(const OperatorSuiteOptions& o) {
  Timer timer;
  SuiteReport r;
  r.suite = "verify-operators";
  RandomStream rng(o.seed);
  double idem = 0.0, commute = 0.0, centred = 0.0, ibp = 0.0;
  for (std::size_t trial = 0; trial < o.models; ++trial) {
    auto model = random_model(rng, o.limits);
    auto f = random_functional(model, rng);
    const std::size_t m = model->component_count();
    std::vector<Functional> grads;
    for (std::size_t a = 0; a < m; ++a) grads.push_back(gradient(f, a));
    for (std::size_t a = 0; a < m; ++a) {
      idem = std::max(idem, max_abs_diff(gradient(grads[a], a), grads[a]));
      centred = std::max(centred, max_abs(cond_exp_excluding(grads[a], a)));
      for (std::size_t b = a + 1; b < m; ++b) {
        commute = std::max(commute, max_abs_diff(gradient(grads[a], b), gradient(grads[b], a)));
      }
    }
    SimpleProcess u(model);
    for (std::size_t a = 0; a < m; ++a) u.set(a, random_functional(model, rng));
    ibp = std::max(ibp, std::abs(gradient_pairing(f, u) - expectation(f * divergence(u))));
  }
  r.less("max |D_a D_a F - D_a F|", idem, o.tolerance);
  r.less("max |D_a D_b F - D_b D_a F|", commute, o.tolerance);
  r.less("max |E[D_a F | G^a]|", centred, o.tolerance);
  r.less("max |E<DF, u> - E[F delta(u)]|", ibp, o.tolerance);
  r.details = {{"models", o.models}, {"seed", o.seed}};
  r.seconds = timer.seconds();
  return r;
}

SuiteReport chaos_suite(const ChaosSuiteOptions& o) {
  Timer timer;
  SuiteReport r;
  r.suite = "chaos";
  RandomStream rng(o.seed);
  double recon = 0.0, idem = 0.0, ortho = 0.0, eigen = 0.0, inverse = 0.0, mobius = 0.0;
  for (std::size_t trial = 0; trial < o.models; ++trial) {
    auto model = random_model(rng, o.limits);
    auto f = random_functional(model, rng);
    auto d = chaos_decomposition(f);
    recon = std::max(recon, max_abs_diff(d.sum(), f));
    for (std::size_t n = 0; n < d.size(); ++n) {
      idem = std::max(idem, max_abs_diff(chaos_projector(d[n], n), d[n]));
      eigen = std::max(eigen, max_abs_diff(generator_L(d[n]), -static_cast<double>(n) * d[n]));
      mobius = std::max(mobius, max_abs_diff(chaos_projector_mobius(f, n), d[n]));
      for (std::size_t k = n + 1; k < d.size(); ++k) {
        ortho = std::max(ortho, std::abs(expectation(d[n] * d[k])));
      }
    }
    auto fc = center(f);
    inverse = std::max(inverse, max_abs_diff(generator_L(inverse_L(fc)), fc));
  }
  r.less("max |sum_n pi_n F - F|", recon, o.tolerance);
  r.less("max |pi_n pi_n F - pi_n F|", idem, o.tolerance);
  r.less("max |E[pi_n F pi_k F]|, n != k", ortho, o.tolerance);
  r.less("max |L pi_n F + n pi_n F|", eigen, o.tolerance);
  r.less("max |L L^{-1} F - F| (centred F)", inverse, o.tolerance);
  r.less("max |pi_n mobius - pi_n tree|", mobius, o.mobius_tolerance);
  r.details = {{"models", o.models}, {"seed", o.seed}};
  r.seconds = timer.seconds();
  return r;
}

SuiteReport chaos_report(const Functional& f, double tolerance, double mobius_tolerance) {
  Timer timer;
  SuiteReport r;
  r.suite = "chaos";
  auto d = chaos_decomposition(f);
  double idem = 0.0, ortho = 0.0, eigen = 0.0, mobius = 0.0;
  nlohmann::json energy = nlohmann::json::array();
  for (std::size_t n = 0; n < d.size(); ++n) {
    idem = std::max(idem, max_abs_diff(chaos_projector(d[n], n), d[n]));
    eigen = std::max(eigen, max_abs_diff(generator_L(d[n]), -static_cast<double>(n) * d[n]));
    mobius = std::max(mobius, max_abs_diff(chaos_projector_mobius(f, n), d[n]));
    for (std::size_t k = n + 1; k < d.size(); ++k) ortho = std::max(ortho, std::abs(expectation(d[n] * d[k])));
    energy.push_back(expectation(d[n] * d[n]));
  }
  auto fc = center(f);
  r.less("max |sum_n pi_n F - F|", max_abs_diff(d.sum(), f), tolerance);
  r.less("max |pi_n pi_n F - pi_n F|", idem, tolerance);
  r.less("max |E[pi_n F pi_k F]|, n != k", ortho, tolerance);
  r.less("max |L pi_n F + n pi_n F|", eigen, tolerance);
  r.less("max |L L^{-1} F - F| (centred F)", max_abs_diff(generator_L(inverse_L(fc)), fc), tolerance);
  r.less("max |pi_n mobius - pi_n tree|", mobius, mobius_tolerance);
  r.details = {{"chaos_energy", energy}, {"components", f.model().component_count()},
               {"cells", f.model().cell_count()}};
  r.seconds = timer.seconds();
  return r;
}

SuiteReport glauber_suite(const GlauberSuiteOptions& o) {
  Timer timer;
  SuiteReport r;
  r.suite = "glauber";
  auto model = cm1_model();
  auto f = Functional::coordinate(model, 0) + Functional::coordinate(model, 1) * Functional::coordinate(model, 2);
  auto d = chaos_decomposition(f);
  nlohmann::json per_time = nlohmann::json::array();
  for (std::size_t i = 0; i < o.times.size(); ++i) {
    const double t = o.times[i];
    auto est = estimate_Pt(f, t, o.paths, o.seed + i, o.workers);
    const double z = worst_z_score(est, semigroup_Pt(d, t));
    r.at_most("max |MC - P_t F| / SE at t = " + number(t), z, o.se_multiplier);
    per_time.push_back({{"t", t}, {"max_z", z}, {"max_se", est.standard_error.maxCoeff()}});
  }
  auto est = estimate_Pt(f, o.ergodic_time, o.paths, o.seed + o.times.size(), o.workers);
  const double z = worst_z_score(est, given_Z(f));
  r.at_most("max |MC - E[F|Z]| / SE at t = " + number(o.ergodic_time), z, o.se_multiplier);
  r.details = {{"paths", o.paths}, {"seed", o.seed}, {"workers", o.workers}, {"times", per_time},
               {"ergodic", {{"t", o.ergodic_time}, {"max_z", z}}}};
  r.seconds = timer.seconds();
  return r;
}

SuiteReport concentration_suite(const ConcentrationSuiteOptions& o) {
  Timer timer;
  SuiteReport r;
  r.suite = "concentration";
  RandomStream rng(o.seed);
  double cov = 0.0, es_slack = std::numeric_limits<double>::infinity(), es_equality = 0.0;
  double mcd_slack = std::numeric_limits<double>::infinity();
  std::size_t pure_checked = 0;
  bool mcd_pass = true;
  for (std::size_t trial = 0; trial < o.pairs; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto g = random_functional(model, rng);
    cov = std::max(cov, (covariance_malliavin(f, g) - conditional_covariance(f, g)).cwiseAbs().maxCoeff());
    for (const auto* h : {&f, &g}) {
      for (const auto& rec : efron_stein_check(*h).records) es_slack = std::min(es_slack, rec.slack);
    }
    auto d = chaos_decomposition(f);
    for (std::size_t p = 1; p < d.size(); ++p) {
      if (max_abs(d[p]) < 1e-6) continue;
      auto es = efron_stein_check(d[p]);
      if (!es.pure_chaos_order || *es.pure_chaos_order != p || !es.equality_residual) {
        es_equality = std::numeric_limits<double>::infinity();
      } else {
        es_equality = std::max(es_equality, *es.equality_residual);
      }
      ++pure_checked;
    }
    if (trial < o.mcdiarmid_functionals) {
      auto mc = mcdiarmid_check(f, o.thresholds);
      mcd_pass = mcd_pass && mc.pass;
      for (const auto& rec : mc.records) mcd_slack = std::min(mcd_slack, rec.slack);
    }
  }
  r.less("max |Cov_malliavin - Cov_direct|", cov, o.tolerance);
  r.at_least("min Efron-Stein slack", es_slack, -o.tolerance);
  r.less("max pure-chaos equality residual (x 1/p)", es_equality, o.tolerance);
  r.at_least("min McDiarmid slack (bound - exact tail)", mcd_slack, 0.0);
  r.require("McDiarmid reports pass", mcd_pass);
  r.details = {{"pairs", o.pairs}, {"pure_chaos_pieces", pure_checked},
               {"mcdiarmid_functionals", std::min(o.pairs, o.mcdiarmid_functionals)}, {"thresholds", o.thresholds},
               {"seed", o.seed}};
  r.seconds = timer.seconds();
  return r;
}

SuiteReport clt_bernoulli_suite(const CltBernoulliSuiteOptions& o, std::vector<CltRow>* rows_out) {
  Timer timer;
  SuiteReport r;
  r.suite = "clt-bernoulli";
  std::vector<std::size_t> all(o.ns);
  all.insert(all.end(), o.slope_ns.begin(), o.slope_ns.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  auto rows = conditional_bernoulli_experiment(o.zs, o.probs, all, o.samples, o.seed, o.workers);
  std::map<std::size_t, const CltRow*> by_n;
  for (const auto& row : rows) by_n[row.n] = &row;
  for (auto n : o.ns) {
    const auto& row = *by_n.at(n);
    r.at_most("d_W at n = " + std::to_string(n) + " (bound " + number(row.bound) + ")", row.dw_empirical, row.bound);
  }
  if (o.slope_ns.size() >= 2) {
    std::vector<double> x, y;
    for (auto n : o.slope_ns) {
      x.push_back(static_cast<double>(n));
      y.push_back(by_n.at(n)->dw_empirical);
    }
    r.within("log-log slope of d_W", loglog_slope(x, y), o.slope_lo, o.slope_hi);
  }
  nlohmann::json table = nlohmann::json::array();
  for (const auto& row : rows) {
    table.push_back({{"n", row.n}, {"samples", row.samples}, {"dw_empirical", row.dw_empirical}, {"bound", row.bound}});
  }
  r.details = {{"rows", table}, {"seed", o.seed}, {"workers", o.workers}, {"zs", o.zs}, {"probs", o.probs}};
  if (rows_out) *rows_out = rows;
  r.seconds = timer.seconds();
  return r;
}

SuiteReport wasserstein_suite(const WassersteinSuiteOptions& o) {
  Timer timer;
  SuiteReport r;
  r.suite = "wass-bounds";
  RandomStream rng(o.seed);
  double margin = std::numeric_limits<double>::infinity();
  double variance_margin = std::numeric_limits<double>::infinity();
  double max_dw = 0.0;
  std::size_t done = 0;
  while (done < o.functionals) {
    auto model = random_model(rng, o.limits);
    auto g = random_functional(model, rng);
    g = g - given_Z(g);
    const double norm = std::sqrt(expectation(g * g));
    if (norm < 1e-6) continue;
    g = g / norm;
    // conditional variance must not vanish for any latent state
    if (conditional_variance(g).minCoeff() < 1e-10) continue;
    auto b = general_w1_bound(g);
    margin = std::min(margin, b.total - b.exact_dw);
    variance_margin = std::min(variance_margin, b.variance_total - b.exact_dw);
    max_dw = std::max(max_dw, b.exact_dw);
    ++done;
  }
  r.at_least("min (bound - exact d_W)", margin, o.margin);
  r.details = {{"functionals", o.functionals}, {"seed", o.seed}, {"variance_form_min_margin", variance_margin},
               {"max_exact_dw", max_dw}, {"max_components", o.limits.max_components}};
  r.seconds = timer.seconds();
  return r;
}

ChaosUStat random_chaos_ustat(RandomStream& rng, const RandomModelLimits& limits, std::size_t max_degree) {
  for (;;) {
    auto model = random_model(rng, limits);
    const std::size_t top = std::min(max_degree, model->component_count());
    const std::size_t p = 1 + static_cast<std::size_t>(rng.below(top));
    auto d = hoeffding_decompose(build_homogeneous_sum(model, random_homogeneous_sum(*model, p, rng)));
    auto fp = d.chaos(p);
    const double norm = std::sqrt(expectation(fp * fp));
    if (norm < 1e-6) continue;
    ChaosUStat out{fp / norm, {}, p};
    for (const auto& c : d.components) {
      if (c.order() == p) out.components.push_back({c.support, c.kernel / norm, c.weight / norm});
    }
    return out;
  }
}

SuiteReport fourth_moment_suite(const FourthMomentSuiteOptions& o) {
  Timer timer;
  SuiteReport r;
  r.suite = "fourth-moment";
  RandomStream rng(o.seed);
  std::size_t prop_fail = 0, infl_fail = 0;
  double hermite = 0.0, prop_slack = std::numeric_limits<double>::infinity();
  double infl_slack = std::numeric_limits<double>::infinity();
  std::map<std::size_t, std::size_t> degrees;
  for (std::size_t i = 0; i < o.functionals; ++i) {
    auto u = random_chaos_ustat(rng, o.limits, o.max_degree);
    auto rep = fourth_moment_report(u.f, u.components, o.workers);
    if (!rep.proposition_holds || !*rep.proposition_holds) ++prop_fail;
    if (rep.proposition_rhs && rep.gamma_deviation) {
      prop_slack = std::min(prop_slack, *rep.proposition_rhs - *rep.gamma_deviation);
    }
    if (!rep.influence_holds) ++infl_fail;
    infl_slack = std::min(infl_slack, rep.influence_rhs - rep.remainder);
    hermite = std::max(hermite, hermite_identity(u.f).residual);
    ++degrees[u.degree];
  }
  r.at_most("fourth-moment proposition failures", static_cast<double>(prop_fail), 0.0);
  r.at_most("influence lemma failures", static_cast<double>(infl_fail), 0.0);
  r.less("max Hermite identity residual", hermite, o.hermite_tolerance);
  nlohmann::json by_degree = nlohmann::json::object();
  for (const auto& [p, c] : degrees) by_degree[std::to_string(p)] = c;
  r.details = {{"functionals", o.functionals}, {"seed", o.seed}, {"degrees", by_degree},
               {"min_proposition_slack", prop_slack}, {"min_influence_slack", infl_slack}};
  r.seconds = timer.seconds();
  return r;
}

SuiteReport dejong_suite(const DejongSuiteOptions& o) {
  Timer timer;
  SuiteReport r;
  r.suite = "dejong";
  RandomStream rng(o.seed);
  nlohmann::json items = nlohmann::json::array();
  std::size_t failed_conditions = 0;
  bool finite = true;
  for (std::size_t i = 0; i < o.functionals; ++i) {
    auto u = random_chaos_ustat(rng, o.limits, o.max_degree);
    // De Jong needs E[F | Z] = 0; the top-order piece of a homogeneous sum is
    // conditionally centred already.
    try {
      auto q = dejong_quantities(u.f, u.components, o.workers);
      finite = finite && std::isfinite(q.dejong1_explicit) && std::isfinite(q.dejong2_radicand);
      auto j = q.to_json();
      j["degree"] = u.degree;
      j["exact_dw"] = w1_to_std_normal(finite_law(u.f));
      items.push_back(std::move(j));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConditionFailed) throw;
      ++failed_conditions;
      items.push_back({{"degree", u.degree}, {"condition_failed", e.what()}});
    }
  }
  r.at_most("functionals failing EGF or H1", static_cast<double>(failed_conditions), 0.0);
  r.require("explicit bound parts finite", finite);
  r.details = {{"functionals", items}, {"seed", o.seed}};
  r.seconds = timer.seconds();
  return r;
}

SuiteReport hypergraph_suite(const HypergraphSuiteOptions& o, std::vector<MotifCltRow>* rows_out) {
  Timer timer;
  SuiteReport r;
  r.suite = "hypergraph-motif";
  RandomStream root(o.seed);
  const auto library = motif_library();

  // per-sample decomposition identities
  {
    RandomStream rng = root.split(0);
    std::map<std::pair<std::size_t, std::size_t>, MotifPlacements> cache;
    double plain = 0.0, modified = 0.0;
    std::size_t max_n = 0;
    for (std::size_t i = 0; i < o.identity_samples; ++i) {
      const std::size_t mi = i % library.size();
      const std::size_t lo = library[mi].vertices() < 6 ? 6 : library[mi].vertices();
      const std::size_t n = lo + static_cast<std::size_t>(rng.below(o.identity_max_n - lo + 1));
      const double p = 0.1 + 0.8 * rng.uniform();
      const bool g3 = rng.bernoulli(1.0 / 3.0);
      const double q = g3 ? 1.0 : 0.3 + 0.7 * rng.uniform();
      auto key = std::make_pair(mi, n);
      auto it = cache.find(key);
      if (it == cache.end()) it = cache.emplace(key, MotifPlacements(library[mi], n)).first;
      auto s = g3 ? gen_g3(n, p, rng) : gen_t3(n, q, p, rng);
      auto d = hoeffding_terms(s, it->second, p, q);
      plain = std::max(plain, d.plain_residual());
      modified = std::max(modified, d.modified_residual());
      max_n = std::max(max_n, n);
    }
    r.less("max plain Hoeffding residual", plain, o.plain_tolerance);
    r.less("max modified Hoeffding residual", modified, o.modified_tolerance);
    r.details["identity"] = {{"samples", o.identity_samples}, {"max_n", max_n}};
  }

  // law of T3(n, 1, p) against G3(n, p): first two moments of the hyperedge count
  {
    RandomStream rng = root.split(1);
    const std::size_t n = 10;
    const double p = 0.3;
    double zmax = 0.0;
    std::vector<double> g(o.moment_samples), t(o.moment_samples);
    for (std::size_t i = 0; i < o.moment_samples; ++i) {
      g[i] = static_cast<double>(gen_g3(n, p, rng).hyperedge_count());
      t[i] = static_cast<double>(gen_t3(n, 1.0, p, rng).hyperedge_count());
    }
    for (int k = 1; k <= 2; ++k) {
      double mg = 0, mt = 0, sg = 0, st = 0;
      for (std::size_t i = 0; i < o.moment_samples; ++i) {
        const double a = std::pow(g[i], k), b = std::pow(t[i], k);
        mg += a;
        mt += b;
        sg += a * a;
        st += b * b;
      }
      const double m = static_cast<double>(o.moment_samples);
      mg /= m;
      mt /= m;
      const double se = std::sqrt((sg / m - mg * mg) / m + (st / m - mt * mt) / m);
      const double z = std::abs(mg - mt) / se;
      zmax = std::max(zmax, z);
      r.at_most("|T3(q=1) - G3| moment " + std::to_string(k) + " / SE", z, 4.0);
    }
    r.details["law_equality"] = {{"n", n}, {"p", p}, {"samples", o.moment_samples}};
  }

  // injection counting against subset enumeration
  {
    RandomStream rng = root.split(2);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < o.brute_force_samples; ++i) {
      const std::size_t n = 5 + static_cast<std::size_t>(rng.below(4));
      const double p = 0.2 + 0.6 * rng.uniform();
      auto s = rng.bernoulli(0.5) ? gen_g3(n, p, rng) : gen_t3(n, 0.7, p, rng);
      for (const auto& m : library) {
        if (count_motif(s, m) != count_motif_by_subsets(s, m)) ++mismatches;
      }
    }
    r.at_most("count_motif mismatches against subset enumeration (n <= 8)", static_cast<double>(mismatches), 0.0);
  }

  // single-hyperedge G3 experiment
  {
    MotifCltConfig cfg;
    cfg.samples = o.experiment_samples;
    cfg.seed = o.seed;
    cfg.workers = o.workers;
    std::vector<MotifScheduleEntry> schedule;
    for (auto n : o.experiment_ns) schedule.push_back({n, o.experiment_p, 1.0});
    auto rows = clt_experiment(library[0], schedule, cfg);
    bool decreasing = true;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    nlohmann::json table = nlohmann::json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && !(rows[i].dw_empirical < rows[i - 1].dw_empirical)) decreasing = false;
      lo = std::min(lo, rows[i].ratio);
      hi = std::max(hi, rows[i].ratio);
      table.push_back(to_json(rows[i]));
    }
    r.require("empirical d_W strictly decreasing in n", decreasing);
    r.less("max ratio / min ratio (d_W / rate)", hi / lo, o.ratio_spread);
    r.details["experiment"] = table;
    if (rows_out) *rows_out = rows;
  }
  r.details["seed"] = o.seed;
  r.seconds = timer.seconds();
  return r;
}

}  // namespace condmall
