#include <cmath>

#include <gtest/gtest.h>

#include "condmall/concentration.hpp"
#include "condmall/fixtures.hpp"
#include "condmall/operators.hpp"

namespace condmall {
namespace {

TEST(Covariance, Cm1Examples) {
  auto model = cm1_model();
  auto x1 = Functional::coordinate(model, 0);
  auto x2 = Functional::coordinate(model, 1);
  auto c = covariance_malliavin(x1, Functional::constant(model, 5.0));
  EXPECT_LT(c.cwiseAbs().maxCoeff(), 1e-15);
  auto v = covariance_malliavin(x1, x1);
  EXPECT_NEAR(v(0), 0.21, 1e-15);
  EXPECT_NEAR(v(1), 0.21, 1e-15);
  auto direct = conditional_covariance(x1, x1);
  EXPECT_NEAR(direct(0), 0.21, 1e-15);
  EXPECT_LT(covariance_malliavin(x1, x2).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(conditional_covariance(x1, x2).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Covariance, RandomPairsAllForms) {
  RandomStream rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto g = random_functional(model, rng);
    auto direct = conditional_covariance(f, g);
    EXPECT_LT((covariance_malliavin(f, g) - direct).cwiseAbs().maxCoeff(), 1e-10);
    if (trial < 10) EXPECT_LT((covariance_quadrature(f, g) - direct).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(EfronStein, Examples) {
  auto model = cm1_model();
  auto zf = Functional::latent(model, Eigen::Vector2d(1.0, -2.0));
  auto r0 = efron_stein_check(zf);
  EXPECT_TRUE(r0.pass);
  for (const auto& rec : r0.records) {
    EXPECT_NEAR(rec.lhs, 0.0, 1e-15);
    EXPECT_NEAR(rec.rhs, 0.0, 1e-15);
  }
  auto y1 = centered_coordinate(model, 0);
  auto r1 = efron_stein_check(y1);
  ASSERT_TRUE(r1.pure_chaos_order.has_value());
  EXPECT_EQ(*r1.pure_chaos_order, 1u);
  EXPECT_LT(*r1.equality_residual, 1e-15);
  auto f = Functional::coordinate(model, 0) + Functional::coordinate(model, 1) * Functional::coordinate(model, 2);
  auto r2 = efron_stein_check(f);
  EXPECT_TRUE(r2.pass);
  EXPECT_FALSE(r2.pure_chaos_order.has_value());
  for (const auto& rec : r2.records) EXPECT_GE(rec.slack, 0.0);
  EXPECT_NE(r2.to_text().find("pass"), std::string::npos);
  EXPECT_EQ(r2.to_json()["records"].size(), 2u);
}

TEST(EfronStein, RandomFunctionalsAndPureChaos) {
  RandomStream rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto r = efron_stein_check(f);
    EXPECT_TRUE(r.pass);
    auto d = chaos_decomposition(f);
    for (std::size_t p = 1; p < d.size(); ++p) {
      if (max_abs(d[p]) < 1e-6) continue;
      auto rp = efron_stein_check(d[p]);
      ASSERT_TRUE(rp.pure_chaos_order.has_value());
      EXPECT_EQ(*rp.pure_chaos_order, p);
      EXPECT_LT(*rp.equality_residual, 1e-10);
    }
  }
}

TEST(McDiarmid, Cm1Sum) {
  auto model = cm1_model();
  auto s = Functional::coordinate(model, 0) + Functional::coordinate(model, 1) + Functional::coordinate(model, 2);
  auto r = mcdiarmid_check(s, {2.0});
  EXPECT_EQ(r.bounded_differences, (std::vector<double>{1.0, 1.0, 1.0}));
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_NEAR(r.records[0].lhs, 0.027, 1e-15);
  EXPECT_NEAR(r.records[0].rhs, std::exp(-4.0 / 6.0), 1e-15);
  EXPECT_TRUE(r.pass);
  auto far = mcdiarmid_check(s, {3.5});
  for (const auto& rec : far.records) {
    EXPECT_EQ(rec.lhs, 0.0);
    EXPECT_GT(rec.rhs, 0.0);
  }
  auto c = mcdiarmid_check(Functional::constant(model, 1.0), {0.5, 1.0});
  EXPECT_TRUE(c.pass);
  EXPECT_THROW(mcdiarmid_check(s, {0.0}), Error);
}

TEST(McDiarmid, RandomBoundedFunctionals) {
  RandomStream rng(107);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto r = mcdiarmid_check(f, {0.5, 1.0, 2.0, 3.0});
    EXPECT_TRUE(r.pass);
    for (std::size_t i = 0; i + 1 < r.records.size(); ++i) {
      if (r.records[i].latent == r.records[i + 1].latent) EXPECT_GE(r.records[i].lhs, r.records[i + 1].lhs);
    }
  }
}

}  // namespace
}  // namespace condmall
