#include "condmall/normal_approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "condmall/normal.hpp"
#include "condmall/parallel.hpp"
#include "condmall/random.hpp"

namespace condmall {

namespace {

const double kPhi0 = 1.0 / std::sqrt(2.0 * M_PI);

// Antiderivative of Phi vanishing at -infinity.
double lower_primitive(double x) { return x * std_normal_cdf(x) + std_normal_pdf(x); }

// int_x^infinity (1 - Phi).
double upper_primitive(double x) { return std_normal_pdf(x) - x * std_normal_sf(x); }

// int_a^b Phi for finite a <= b.
double integral_cdf(double a, double b) {
  if (b <= 0.0) return lower_primitive(b) - lower_primitive(a);
  if (a >= 0.0) return (b - a) - (upper_primitive(a) - upper_primitive(b));
  return (kPhi0 - lower_primitive(a)) + b - (kPhi0 - upper_primitive(b));
}

// int_a^b (c - Phi) for finite a <= b; the right half-line uses the
// complementary form to avoid cancellation.
double integral_below(double c, double a, double b) {
  if (a >= 0.0) return (c - 1.0) * (b - a) + (upper_primitive(a) - upper_primitive(b));
  return c * (b - a) - integral_cdf(a, b);
}

// int_a^b |c - Phi| for finite a <= b and c in (0, 1).
double segment(double c, double a, double b) {
  if (b <= a) return 0.0;
  double cross = std_normal_quantile(c);
  if (cross <= a) return -integral_below(c, a, b);
  if (cross >= b) return integral_below(c, a, b);
  return integral_below(c, a, cross) - integral_below(c, cross, b);
}

// int_{-infinity}^x Phi.
double left_tail(double x) { return x <= 0.0 ? lower_primitive(x) : kPhi0 + x - (kPhi0 - upper_primitive(x)); }

// int_x^infinity (1 - Phi).
double right_tail(double x) { return x >= 0.0 ? upper_primitive(x) : -x + lower_primitive(x); }

}  // namespace

FiniteDistribution FiniteDistribution::from_pairs(std::vector<std::pair<double, double>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  FiniteDistribution d;
  double total = 0.0;
  for (const auto& [x, p] : pairs) {
    if (!std::isfinite(x) || !(p >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bad atom in finite law");
    if (p == 0.0) continue;
    total += p;
    if (!d.atoms.empty() && d.atoms.back() == x) {
      d.probs.back() += p;
    } else {
      d.atoms.push_back(x);
      d.probs.push_back(p);
    }
  }
  if (d.atoms.empty()) throw Error(ErrorCode::InvalidArgument, "finite law has no mass");
  for (double& p : d.probs) p /= total;
  return d;
}

EmpiricalDistribution EmpiricalDistribution::from_samples(std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorCode::InvalidArgument, "empirical distribution needs at least one value");
  for (double x : samples) {
    if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "non-finite sample");
  }
  std::sort(samples.begin(), samples.end());
  return {std::move(samples)};
}

FiniteDistribution EmpiricalDistribution::law() const {
  FiniteDistribution d;
  const double w = 1.0 / static_cast<double>(values.size());
  for (double x : values) {
    if (!d.atoms.empty() && d.atoms.back() == x) {
      d.probs.back() += w;
    } else {
      d.atoms.push_back(x);
      d.probs.push_back(w);
    }
  }
  return d;
}

FiniteDistribution finite_law(const Functional& f) {
  const auto& w = f.model().joint_weights();
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(static_cast<std::size_t>(w.size()));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w(i) > 0.0) pairs.emplace_back(f.table()(i), w(i));
  }
  return FiniteDistribution::from_pairs(std::move(pairs));
}

double w1_to_std_normal(const FiniteDistribution& dist) {
  const auto& x = dist.atoms;
  if (x.empty()) throw Error(ErrorCode::InvalidArgument, "empty distribution");
  double total = left_tail(x.front());
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    cum += dist.probs[i];
    double c = std::min(cum, 1.0);
    total += segment(c, x[i], x[i + 1]);
  }
  total += right_tail(x.back());
  return total;
}

double w1_to_std_normal(const EmpiricalDistribution& dist) { return w1_to_std_normal(dist.law()); }

double w1_distance(const FiniteDistribution& a, const FiniteDistribution& b) {
  std::vector<double> grid = a.atoms;
  grid.insert(grid.end(), b.atoms.begin(), b.atoms.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double total = 0.0, ca = 0.0, cb = 0.0;
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    while (ia < a.atoms.size() && a.atoms[ia] <= grid[k]) ca += a.probs[ia++];
    while (ib < b.atoms.size() && b.atoms[ib] <= grid[k]) cb += b.probs[ib++];
    total += std::abs(ca - cb) * (grid[k + 1] - grid[k]);
  }
  return total;
}

Functional normalized_sum(const ModelPtr<double>& model) {
  const Eigen::Index lz = model->latent_count();
  Eigen::MatrixXd mean(lz, static_cast<Eigen::Index>(model->component_count()));
  Eigen::VectorXd sd = Eigen::VectorXd::Zero(lz);
  for (std::size_t a = 0; a < model->component_count(); ++a) {
    const auto& c = model->component(a);
    for (Eigen::Index z = 0; z < lz; ++z) {
      double mu = c.cond_pmf.row(z).dot(c.values);
      mean(z, static_cast<Eigen::Index>(a)) = mu;
      sd(z) += c.cond_pmf.row(z).dot((c.values.array() - mu).square().matrix());
    }
  }
  for (Eigen::Index z = 0; z < lz; ++z) {
    sd(z) = std::sqrt(sd(z));
    if (sd(z) == 0.0 && model->latent_prob(z) > 0.0) {
      throw Error(ErrorCode::DegenerateVariance, "s_Z = 0 at latent state " + std::to_string(z));
    }
  }
  return Functional::from_cells(model, [&](Eigen::Index z, const std::vector<int>& d) {
    if (sd(z) == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t a = 0; a < d.size(); ++a) s += model->value(a, d[a]) - mean(z, static_cast<Eigen::Index>(a));
    return s / sd(z);
  });
}

double lyapunov_bound(const ProductModel& model) {
  double acc = 0.0;
  for (Eigen::Index z = 0; z < model.latent_count(); ++z) {
    double pz = model.latent_prob(z);
    if (pz == 0.0) continue;
    double var = 0.0, third = 0.0;
    for (const auto& c : model.components()) {
      double mu = c.cond_pmf.row(z).dot(c.values);
      Eigen::ArrayXd dev = (c.values.array() - mu).abs();
      var += c.cond_pmf.row(z).dot(dev.square().matrix());
      third += c.cond_pmf.row(z).dot(dev.cube().matrix());
    }
    if (var == 0.0) throw Error(ErrorCode::DegenerateVariance, "s_Z = 0 at latent state " + std::to_string(z));
    acc += pz * third / std::pow(var, 1.5);
  }
  return 2.0 * (std::sqrt(2.0) + 1.0) * acc;
}

double conditional_bernoulli_lyapunov_bound(const std::vector<double>& zs, const std::vector<double>& probs,
                                            std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (probs[i] == 0.0) continue;
    double z = zs[i];
    if (z <= 0.0 || z >= 1.0) throw Error(ErrorCode::DegenerateVariance, "Bernoulli parameter must be in (0,1)");
    acc += probs[i] * (1.0 - 2.0 * z + 2.0 * z * z) / std::sqrt(z * (1.0 - z));
  }
  return 2.0 * (std::sqrt(2.0) + 1.0) * acc / std::sqrt(static_cast<double>(n));
}

nlohmann::json WassersteinBoundBreakdown::to_json() const {
  return {{"term1", term1},
          {"term2", term2},
          {"total", total},
          {"variance_term1", variance_term1},
          {"variance_term2", variance_term2},
          {"variance_total", variance_total},
          {"exact_dw", exact_dw}};
}

WassersteinBoundBreakdown general_w1_bound(const Functional& f) {
  const double centered = max_abs_conditional_mean(f);
  const double second = expectation(f * f);
  if (centered > 1e-8 || std::abs(second - 1.0) > 1e-8) {
    throw Error(ErrorCode::NotStandardized, "need E[F|Z] = 0 and E[F^2] = 1 (max|E[F|Z]| = " +
                                                std::to_string(centered) + ", E[F^2] = " + std::to_string(second) + ")");
  }
  const auto& model = f.model();
  auto d = chaos_decomposition(f);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(f.table().size());
  for (std::size_t n = 1; n < d.size(); ++n) inv -= d[n].table() / static_cast<double>(n);
  Functional g = f.with_table(std::move(inv));  // L^{-1} F
  const double c = std::sqrt(2.0 / M_PI);

  WassersteinBoundBreakdown out;
  Functional gam = carre_du_champ(f, -g);
  out.term1 = c * expectation(gam.map([](double v) { return std::abs(v - 1.0); }));
  double remainder = 0.0, fourth = 0.0;
  for (std::size_t a = 0; a < model.component_count(); ++a) {
    remainder += expectation(mixed_difference_moment(f, g, a));
    fourth += expectation(difference_moment(f, a, 4, true));
  }
  out.term2 = 0.5 * remainder;
  out.total = out.term1 + out.term2;
  out.variance_term1 = c * std::sqrt(std::max(0.0, variance(gam)));
  out.variance_term2 = (std::sqrt(2.0) / 2.0) * std::sqrt(std::max(0.0, -expectation(f * generator_L(f)))) *
                       std::sqrt(fourth);
  out.variance_total = out.variance_term1 + out.variance_term2;
  out.exact_dw = w1_to_std_normal(finite_law(f));
  return out;
}

double multi_chaos_bound(const ChaosDecomposition& d) {
  const std::size_t m = d.order();
  const auto& model = d.source.model();
  double first = 0.0;
  for (std::size_t p = 1; p <= m; ++p) {
    for (std::size_t q = 1; q <= m; ++q) {
      double v = variance(carre_du_champ(d[p], d[q]));
      first += std::sqrt(std::max(0.0, v)) / static_cast<double>(q);
    }
  }
  first *= std::sqrt(2.0 / M_PI);
  Eigen::VectorXd centered = Eigen::VectorXd::Zero(d.source.table().size());
  double weight = 0.0;
  for (std::size_t p = 1; p <= m; ++p) {
    centered += d[p].table();
    weight += std::sqrt(std::max(0.0, expectation(d[p] * d[p]))) / static_cast<double>(p);
  }
  Functional f = d.source.with_table(std::move(centered));
  double fourth = 0.0;
  for (std::size_t a = 0; a < model.component_count(); ++a) fourth += expectation(difference_moment(f, a, 4, true));
  double braces = 0.0;
  for (std::size_t p = 1; p <= m; ++p) braces += std::pow(static_cast<double>(p), 0.25) * std::pow(fourth, 0.25);
  return first + std::sqrt(2.0) * weight * braces * braces;
}

std::vector<CltRow> conditional_bernoulli_experiment(const std::vector<double>& zs, const std::vector<double>& probs,
                                                     const std::vector<std::size_t>& ns, std::size_t samples,
                                                     std::uint64_t seed, unsigned workers) {
  if (zs.empty() || zs.size() != probs.size()) throw Error(ErrorCode::InvalidArgument, "latent law mismatch");
  if (samples == 0) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  for (double z : zs) {
    if (z <= 0.0 || z >= 1.0) throw Error(ErrorCode::DegenerateVariance, "Bernoulli parameter must be in (0,1)");
  }
  Eigen::VectorXd latent = Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
  constexpr std::size_t kBlock = 4096;
  std::vector<CltRow> rows;
  RandomStream root(seed);
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const std::size_t n = ns[k];
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
    RandomStream stream = root.split(n);
    std::vector<double> values(samples);
    const std::size_t blocks = (samples + kBlock - 1) / kBlock;
    parallel_for_blocks(blocks, workers, [&](std::size_t b) {
      RandomStream rng = stream.split(b);
      const std::size_t end = std::min(samples, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        const double z = zs[static_cast<std::size_t>(rng.categorical(latent))];
        std::size_t hits = 0;
        for (std::size_t j = 0; j < n; ++j) hits += rng.uniform() < z;
        const double nn = static_cast<double>(n);
        values[i] = (static_cast<double>(hits) - nn * z) / std::sqrt(nn * z * (1.0 - z));
      }
    });
    CltRow row;
    row.n = n;
    row.samples = samples;
    row.seed = seed;
    row.dw_empirical = w1_to_std_normal(EmpiricalDistribution::from_samples(std::move(values)));
    row.bound = conditional_bernoulli_lyapunov_bound(zs, probs, n);
    rows.push_back(row);
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidArgument, "slope needs >= 2 points");
  Eigen::ArrayXd lx(static_cast<Eigen::Index>(x.size())), ly(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx(static_cast<Eigen::Index>(i)) = std::log(x[i]);
    ly(static_cast<Eigen::Index>(i)) = std::log(y[i]);
  }
  Eigen::ArrayXd cx = lx - lx.mean();
  return (cx * (ly - ly.mean())).sum() / cx.square().sum();
}

}  // namespace condmall
