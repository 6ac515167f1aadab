#include "condmall/concentration.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "condmall/operators.hpp"
#include "condmall/quadrature.hpp"

namespace condmall {

void ConcentrationReport::add(InequalityRecord r) {
  r.slack = r.rhs - r.lhs;
  if (r.slack < -kSlackTolerance) pass = false;
  records.push_back(r);
}

nlohmann::json ConcentrationReport::to_json() const {
  nlohmann::json j;
  j["functional"] = functional;
  j["inequality"] = inequality;
  j["pass"] = pass;
  j["records"] = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json rj = {{"latent", r.latent}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"slack", r.slack}};
    if (r.threshold) rj["threshold"] = *r.threshold;
    j["records"].push_back(rj);
  }
  if (pure_chaos_order) j["pure_chaos_order"] = *pure_chaos_order;
  if (equality_residual) j["equality_residual"] = *equality_residual;
  if (!bounded_differences.empty()) j["bounded_differences"] = bounded_differences;
  return j;
}

std::string ConcentrationReport::to_text() const {
  std::ostringstream out;
  out << inequality << " for " << functional << ": " << (pass ? "pass" : "FAIL") << "\n";
  out << std::setw(8) << "latent" << std::setw(12) << "threshold" << std::setw(16) << "lhs" << std::setw(16) << "rhs"
      << std::setw(16) << "slack" << "\n";
  out << std::setprecision(8);
  for (const auto& r : records) {
    out << std::setw(8) << r.latent << std::setw(12);
    if (r.threshold) out << *r.threshold;
    else out << "-";
    out << std::setw(16) << r.lhs << std::setw(16) << r.rhs << std::setw(16) << r.slack << "\n";
  }
  if (pure_chaos_order) {
    out << "pure chaos of order " << *pure_chaos_order << ", equality residual " << *equality_residual << "\n";
  }
  return out.str();
}

Eigen::VectorXd conditional_covariance(const Functional& f, const Functional& g) {
  require_same_model(f, g);
  return conditional_expectation_given_Z(center(f) * center(g));
}

namespace {

Eigen::VectorXd gradient_pairing_given_Z(const Functional& f, const Functional& h) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.model().latent_count());
  for (std::size_t a = 0; a < f.model().component_count(); ++a) {
    acc += conditional_expectation_given_Z(gradient(f, a) * gradient(h, a));
  }
  return acc;
}

}  // namespace

Eigen::VectorXd covariance_malliavin(const Functional& f, const Functional& g) {
  require_same_model(f, g);
  return gradient_pairing_given_Z(f, -inverse_L(center(g)));
}

Eigen::VectorXd covariance_quadrature(const Functional& f, const Functional& g, double horizon) {
  require_same_model(f, g);
  auto d = chaos_decomposition(center(g));
  const int panels = 80;
  const int order = 10;
  auto rule = gauss_legendre<double>(order);
  const double h = horizon / panels;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(f.model().latent_count());
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (int i = 0; i < order; ++i) {
      const double t = mid + 0.5 * h * rule.nodes(i);
      acc += (0.5 * h * rule.weights(i)) * gradient_pairing_given_Z(f, semigroup_Pt(d, t));
    }
  }
  return acc;
}

ConcentrationReport efron_stein_check(const Functional& f, const std::string& name) {
  ConcentrationReport report;
  report.functional = name;
  report.inequality = "conditional Efron-Stein";
  Eigen::VectorXd var = conditional_variance(f);
  Eigen::VectorXd gam = conditional_expectation_given_Z(carre_du_champ(f, f));
  for (Eigen::Index z = 0; z < var.size(); ++z) report.add({z, std::nullopt, var(z), gam(z), 0.0});

  auto d = chaos_decomposition(center(f));
  const double scale = std::max(1.0, max_abs(f));
  std::optional<std::size_t> order;
  bool single = true;
  for (std::size_t n = 1; n < d.size(); ++n) {
    if (max_abs(d[n]) > 1e-10 * scale) {
      if (order) single = false;
      order = n;
    }
  }
  if (order && single) {
    report.pure_chaos_order = order;
    report.equality_residual = (var - gam / static_cast<double>(*order)).cwiseAbs().maxCoeff();
  }
  return report;
}

std::vector<double> bounded_differences(const Functional& f) {
  const auto& model = f.model();
  std::vector<double> out(model.component_count(), 0.0);
  const auto& t = f.table();
  for (std::size_t a = 0; a < model.component_count(); ++a) {
    double worst = 0.0;
    detail::for_each_fibre(model, a, [&](Eigen::Index base, Eigen::Index s, Eigen::Index r, Eigen::Index) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (Eigen::Index v = 0; v < r; ++v) {
        lo = std::min(lo, t(base + v * s));
        hi = std::max(hi, t(base + v * s));
      }
      worst = std::max(worst, hi - lo);
    });
    out[a] = worst;
  }
  return out;
}

ConcentrationReport mcdiarmid_check(const Functional& f, const std::vector<double>& thresholds,
                                    const std::string& name) {
  for (double x : thresholds) {
    if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "McDiarmid thresholds must be > 0");
  }
  ConcentrationReport report;
  report.functional = name;
  report.inequality = "conditional McDiarmid";
  report.bounded_differences = bounded_differences(f);
  double k2 = 0.0;
  for (double d : report.bounded_differences) k2 += d * d;
  const auto& model = f.model();
  const Eigen::Index n = model.configuration_count();
  const auto& w = model.conditional_weights();
  Eigen::VectorXd mean = conditional_expectation_given_Z(f);
  for (Eigen::Index z = 0; z < model.latent_count(); ++z) {
    for (double x : thresholds) {
      double tail = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        // Boundary cells count toward the tail.
        if (f(z, c) - mean(z) >= x - 1e-12) tail += w(z * n + c);
      }
      double bound = k2 > 0.0 ? std::exp(-x * x / (2.0 * k2)) : 0.0;
      report.add({z, x, tail, bound, 0.0});
    }
  }
  return report;
}

}  // namespace condmall
