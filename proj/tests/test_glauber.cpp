#include <cmath>

#include <gtest/gtest.h>

#include "condmall/fixtures.hpp"
#include "condmall/glauber.hpp"
#include "condmall/operators.hpp"

namespace condmall {
namespace {

Functional cm1_f(const ModelPtr<double>& m) {
  return Functional::coordinate(m, 0) + Functional::coordinate(m, 1) * Functional::coordinate(m, 2);
}

void expect_within_se(const PtEstimate& mc, const Functional& exact, double k = 4.0) {
  for (Eigen::Index i = 0; i < exact.table().size(); ++i) {
    EXPECT_LE(std::abs(mc.estimate.table()(i) - exact.table()(i)), k * mc.standard_error(i) + 1e-12)
        << "cell " << i;
  }
}

TEST(Glauber, ZeroHorizonHasNoEvents) {
  auto model = cm1_model();
  RandomStream rng(1);
  auto path = simulate_path(*model, 0, {1, 0, 1}, 0.0, rng);
  EXPECT_TRUE(path.events.empty());
  EXPECT_EQ(path.endpoint(), (std::vector<int>{1, 0, 1}));
}

TEST(Glauber, PointMassModelIsFrozen) {
  LatentSpace latent{{"z"}, Eigen::VectorXd::Ones(1), {}};
  ComponentSpace c{"a", Eigen::Vector2d(0, 1), Eigen::RowVector2d(0, 1)};
  auto model = ProductModel::create(latent, {c, c});
  RandomStream rng(2);
  for (int i = 0; i < 50; ++i) {
    auto path = simulate_path(*model, 0, {1, 1}, 3.0, rng);
    for (const auto& e : path.events) {
      if (e.index != kCemetery) EXPECT_EQ(e.value, 1);
    }
  }
}

TEST(Glauber, EventTimesAndRate) {
  auto model = cm1_model();
  RandomStream rng(3);
  const int paths = 100000;
  double total = 0.0, total_sq = 0.0;
  for (int i = 0; i < paths; ++i) {
    auto path = simulate_path(*model, i % 2, {0, 1, 0}, 5.0, rng);
    double prev = 0.0;
    for (const auto& e : path.events) {
      EXPECT_GT(e.time, prev);
      EXPECT_LE(e.time, 5.0);
      prev = e.time;
    }
    double n = static_cast<double>(path.events.size());
    total += n;
    total_sq += n * n;
  }
  double mean = total / paths;
  double var = total_sq / paths - mean * mean;
  EXPECT_NEAR(mean, 20.0, 4.0 * std::sqrt(var / paths));
}

TEST(Glauber, TrivialEstimates) {
  auto model = cm1_model();
  auto c = Functional::constant(model, 2.75);
  auto est = estimate_Pt(c, 1.0, 200, 9);
  EXPECT_EQ(max_abs_diff(est.estimate, c), 0.0);
  EXPECT_EQ(est.standard_error.cwiseAbs().maxCoeff(), 0.0);
  auto f = cm1_f(model);
  auto at0 = estimate_Pt(f, 0.0, 10, 9);
  EXPECT_EQ(max_abs_diff(at0.estimate, f), 0.0);
}

TEST(Glauber, MatchesMehlerFormula) {
  auto model = cm1_model();
  auto f = cm1_f(model);
  auto d = chaos_decomposition(f);
  for (double t : {0.5, 1.0}) {
    expect_within_se(estimate_Pt(f, t, 20000, 77), semigroup_Pt(d, t));
    GlauberOptions thin;
    thin.skip_idle = true;
    expect_within_se(estimate_Pt(f, t, 20000, 78, 1, thin), semigroup_Pt(d, t));
  }
}

TEST(Glauber, DeterministicAcrossWorkerCounts) {
  auto model = cm1_model();
  auto f = cm1_f(model);
  auto a = estimate_Pt(f, 1.0, 3000, 5, 1);
  auto b = estimate_Pt(f, 1.0, 3000, 5, 4);
  EXPECT_EQ(max_abs_diff(a.estimate, b.estimate), 0.0);
  EXPECT_EQ((a.standard_error - b.standard_error).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Glauber, StationaryStartStaysStationary) {
  auto model = cm1_model();
  RandomStream rng(12);
  const int paths = 100000;
  int ones[2] = {0, 0}, count[2] = {0, 0};
  for (int i = 0; i < paths; ++i) {
    auto s = model->sample(rng);
    advance(*model, s.latent, s.digits, 0.8, rng);
    ones[s.latent] += s.digits[2];
    count[s.latent] += 1;
  }
  for (int z = 0; z < 2; ++z) {
    double p = z == 0 ? 0.3 : 0.7;
    EXPECT_NEAR(static_cast<double>(ones[z]) / count[z], p, 4.0 * std::sqrt(p * (1 - p) / count[z]));
  }
}

TEST(Glauber, ExponentialDecayOfFirstChaos) {
  auto model = cm1_model();
  auto y1 = centered_coordinate(model, 0);
  const Eigen::Index cell = 1;  // z = 0.3, x = (1, 0, 0): E[F|Z] = 0
  std::vector<double> ts{0.5, 1.0, 1.5, 2.0}, logs;
  for (double t : ts) {
    auto est = estimate_Pt(y1, t, 100000, 31);
    logs.push_back(std::log(std::abs(est.estimate.table()(cell))));
  }
  double mt = 1.25, ml = 0.0;
  for (double l : logs) ml += l / 4.0;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 4; ++i) {
    num += (ts[i] - mt) * (logs[i] - ml);
    den += (ts[i] - mt) * (ts[i] - mt);
  }
  EXPECT_NEAR(num / den, -1.0, 0.15);
}

TEST(Glauber, CommutationMonteCarlo) {
  auto model = cm1_model();
  auto f = cm1_f(model);
  for (std::size_t a = 0; a < 3; ++a) {
    auto mc = estimate_commutation(f, a, 0.6, 20000, 50 + a);
    expect_within_se(mc, commutation_rhs(f, a, 0.6));
  }
}

TEST(Glauber, PathJson) {
  auto model = cm1_model();
  RandomStream rng(4);
  auto path = simulate_path(*model, 1, {0, 0, 0}, 2.0, rng);
  auto j = path_to_json(*model, path);
  EXPECT_EQ(j["events"].size(), path.events.size());
  EXPECT_EQ(j["latent"].get<int>(), 1);
}

}  // namespace
}  // namespace condmall
