#include <cmath>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "condmall/fixtures.hpp"
#include "condmall/model_io.hpp"
#include "condmall/operators.hpp"

namespace condmall {
namespace {

class Cm1 : public ::testing::Test {
 protected:
  ModelPtr<double> model = cm1_model();
  Functional x1 = Functional::coordinate(model, 0);
  Functional x2 = Functional::coordinate(model, 1);
  Functional x3 = Functional::coordinate(model, 2);
  Functional z = Functional::latent(model, Eigen::Vector2d(0.3, 0.7));
  Functional f = x1 + x2 * x3;

  Functional golden(const char* name) {
    std::ifstream in(std::string(CONDMALL_GOLDEN_DIR) + "/" + name);
    return functional_from_json(model, nlohmann::json::parse(in));
  }
};

TEST_F(Cm1, CondExpExcluding) {
  EXPECT_LT(max_abs_diff(cond_exp_excluding(x1, 0), z), 1e-15);
  EXPECT_EQ(max_abs_diff(cond_exp_excluding(x2, 0), x2), 0.0);
  auto c = Functional::constant(model, 3.0);
  EXPECT_LT(max_abs_diff(cond_exp_excluding(c, 1), c), 1e-15);
  EXPECT_THROW(cond_exp_excluding(x1, 7), Error);
}

TEST_F(Cm1, Gradient) {
  EXPECT_LT(max_abs_diff(gradient(x1, 0), x1 - z), 1e-15);
  EXPECT_EQ(max_abs(gradient(x1, 1)), 0.0);
  EXPECT_EQ(max_abs(gradient(Functional::constant(model, 1.0), 2)), 0.0);
  EXPECT_THROW(gradient(x1, 3), Error);
}

TEST_F(Cm1, Generator) {
  EXPECT_LT(max_abs_diff(generator_L(x1), z - x1), 1e-15);
  auto y12 = (x1 - z) * (x2 - z);
  EXPECT_LT(max_abs_diff(generator_L(y12), -2.0 * y12), 1e-15);
  EXPECT_LT(max_abs(generator_L(given_Z(f))), 1e-15);
}

TEST_F(Cm1, DivergenceOfGradientIsMinusL) {
  auto u = gradient_process(f);
  EXPECT_LT(max_abs_diff(divergence(u), -generator_L(f)), 1e-14);
  SimpleProcess consts(model);
  consts.set(0, Functional::constant(model, 2.0));
  consts.set(2, Functional::constant(model, -1.0));
  EXPECT_LT(max_abs(divergence(consts)), 1e-15);
  SimpleProcess other(cm1_model());
  EXPECT_THROW(gradient_pairing(f, other), Error);
}

TEST_F(Cm1, ChaosProjectionsMatchSymbolicExpansion) {
  auto y1 = x1 - z, y2 = x2 - z, y3 = x3 - z;
  auto d = chaos_decomposition(f);
  ASSERT_EQ(d.size(), 4u);
  EXPECT_LT(max_abs_diff(d[0], z + z * z), 1e-15);
  EXPECT_LT(max_abs_diff(d[1], y1 + z * y2 + z * y3), 1e-15);
  EXPECT_LT(max_abs_diff(d[2], y2 * y3), 1e-15);
  EXPECT_LT(max_abs(d[3]), 1e-15);
  EXPECT_LT(max_abs_diff(d[1], golden("cm1_pi1.json")), 1e-12);
  EXPECT_LT(max_abs_diff(d[2], golden("cm1_pi2.json")), 1e-12);
  EXPECT_EQ(d.order(), 2u);
  for (std::size_t n = 0; n <= 3; ++n) {
    EXPECT_LT(max_abs_diff(chaos_projector(f, n), d[n]), 1e-15);
    EXPECT_LT(max_abs_diff(chaos_projector_mobius(f, n), d[n]), 1e-14);
  }
  EXPECT_THROW(chaos_projector(f, 4), Error);
}

TEST_F(Cm1, InverseL) {
  auto y1 = x1 - z, y2 = x2 - z;
  EXPECT_LT(max_abs_diff(inverse_L(y1), -1.0 * y1), 1e-15);
  EXPECT_LT(max_abs_diff(inverse_L(y1 * y2), -0.5 * (y1 * y2)), 1e-15);
  auto fc = center(f);
  auto d = chaos_decomposition(fc);
  EXPECT_LT(max_abs_diff(inverse_L(fc), -1.0 * d[1] - 0.5 * d[2]), 1e-15);
  EXPECT_LT(max_abs_diff(generator_L(inverse_L(fc)), fc), 1e-12);
  try {
    inverse_L(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotCentered);
  }
}

TEST_F(Cm1, CarreDuChampBothForms) {
  auto g1 = carre_du_champ(x1, x1);
  auto g2 = carre_du_champ_difference(x1, x1);
  // (1/2) E[(x1 - X1')^2 | X, Z] = ((x1 - z)^2 + z(1 - z)) / 2
  auto expected = 0.5 * ((x1 - z) * (x1 - z) + z * (Functional::constant(model, 1.0) - z));
  EXPECT_LT(max_abs_diff(g1, expected), 1e-15);
  EXPECT_LT(max_abs_diff(g2, expected), 1e-15);
  EXPECT_LT(max_abs(carre_du_champ(Functional::constant(model, 4.0), f)), 1e-15);
}

TEST_F(Cm1, DifferenceMoment) {
  EXPECT_LT(max_abs_diff(difference_moment(f, 1, 1, false), gradient(f, 1)), 1e-15);
  EXPECT_LT(max_abs(difference_moment(x2, 0, 3, true)), 1e-15);
  // F = X1, a = 0, k = 2: E[(x1 - X1')^2] = (x1 - z)^2 + z(1 - z).
  auto m2 = difference_moment(x1, 0, 2, false);
  for (Eigen::Index zi = 0; zi < 2; ++zi) {
    double zz = zi == 0 ? 0.3 : 0.7;
    for (Eigen::Index c = 0; c < 8; ++c) {
      double x = static_cast<double>(c & 1);
      EXPECT_NEAR(m2(zi, c), zz * (x - 1) * (x - 1) + (1 - zz) * x * x, 1e-15);
    }
  }
  EXPECT_THROW(difference_moment(f, 0, 0, false), Error);
}

TEST_F(Cm1, Semigroup) {
  auto y1 = x1 - z;
  EXPECT_LT(max_abs_diff(semigroup_Pt(f, 0.0), f), 1e-15);
  EXPECT_LT(max_abs_diff(semigroup_Pt(y1, std::log(2.0)), 0.5 * y1), 1e-15);
  auto d = chaos_decomposition(f);
  auto p1 = semigroup_Pt(f, 1.0);
  EXPECT_LT(max_abs_diff(p1, d[0] + std::exp(-1.0) * d[1] + std::exp(-2.0) * d[2]), 1e-15);
  EXPECT_LT(max_abs_diff(p1, semigroup_product(f, 1.0)), 1e-14);
  EXPECT_LT(max_abs_diff(semigroup_Pt(f, 60.0), d[0]), 1e-15);
  EXPECT_THROW(semigroup_Pt(f, -0.1), Error);
}

TEST_F(Cm1, SingleCoordinateCommutation) {
  // With one coordinate, D_a P_t F = e^{-t} D_a F.
  LatentSpace latent{{"a", "b"}, Eigen::Vector2d(0.5, 0.5), {}};
  ComponentSpace c{"1", Eigen::Vector3d(0, 1, 3), Eigen::MatrixXd(2, 3)};
  c.cond_pmf << 0.2, 0.5, 0.3, 0.6, 0.1, 0.3;
  auto one = ProductModel::create(latent, {c});
  RandomStream rng(8);
  auto g = random_functional(one, rng);
  for (double t : {0.1, 1.0, 3.0}) {
    EXPECT_LT(max_abs_diff(gradient(semigroup_Pt(g, t), 0), std::exp(-t) * gradient(g, 0)), 1e-14);
  }
}

TEST(Operators, RandomModelIdentities) {
  RandomStream rng(17);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    const std::size_t m = model->component_count();
    for (std::size_t a = 0; a < m; ++a) {
      auto da = gradient(f, a);
      worst = std::max(worst, max_abs_diff(gradient(da, a), da));
      worst = std::max(worst, max_abs(cond_exp_excluding(da, a)));
      for (std::size_t b = 0; b < m; ++b) {
        worst = std::max(worst, max_abs_diff(gradient(da, b), gradient(gradient(f, b), a)));
      }
    }
    SimpleProcess u(model);
    for (std::size_t a = 0; a < m; ++a) u.set(a, random_functional(model, rng));
    double lhs = gradient_pairing(f, u);
    double rhs = expectation(f * divergence(u));
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(Operators, ChaosInvariantsOnRandomModels) {
  RandomStream rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto d = chaos_decomposition(f);
    EXPECT_LT(max_abs_diff(d.sum(), f), 1e-10);
    EXPECT_LT(max_abs_diff(d[0], given_Z(f)), 1e-12);
    for (std::size_t n = 0; n < d.size(); ++n) {
      EXPECT_LT(max_abs_diff(generator_L(d[n]), -static_cast<double>(n) * d[n]), 1e-10);
      EXPECT_LT(max_abs_diff(chaos_projector(d[n], n), d[n]), 1e-10);
      EXPECT_LT(max_abs_diff(chaos_projector_mobius(f, n), d[n]), 1e-12);
      for (std::size_t k = 0; k < d.size(); ++k) {
        if (k == n) continue;
        EXPECT_LT(std::abs(expectation(d[n] * d[k])), 1e-10);
        EXPECT_LT(max_abs(chaos_projector(d[n], k)), 1e-10);
      }
    }
    auto fc = center(f);
    EXPECT_LT(max_abs_diff(generator_L(inverse_L(fc)), fc), 1e-10);
    EXPECT_LT(max_abs(given_Z(inverse_L(fc))), 1e-12);
  }
}

TEST(Operators, MobiusIteratedGradientMatchesComposition) {
  RandomStream rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    const std::size_t m = model->component_count();
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      Subset j;
      for (std::size_t a = 0; a < m; ++a)
        if (mask >> a & 1) j.push_back(a);
      EXPECT_LT(max_abs_diff(iterated_gradient(f, j), iterated_gradient_mobius(f, j)), 1e-12);
    }
  }
}

TEST(Operators, DirichletFormAndCarreDuChamp) {
  RandomStream rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto g = random_functional(model, rng);
    auto gam = carre_du_champ(f, g);
    EXPECT_LT(max_abs_diff(gam, carre_du_champ_difference(f, g)), 1e-12);
    EXPECT_LT(max_abs_diff(gam, carre_du_champ(g, f)), 1e-14);
    EXPECT_GE(carre_du_champ(f, f).table().minCoeff(), -1e-14);
    EXPECT_NEAR(expectation(gam), -expectation(f * generator_L(g)), 1e-12);
  }
}

TEST(Operators, SemigroupPropertiesAndQuadrature) {
  RandomStream rng(37);
  for (int trial = 0; trial < 15; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto d = chaos_decomposition(f);
    for (double s : {0.2, 1.3}) {
      for (double t : {0.0, 0.7}) {
        EXPECT_LT(max_abs_diff(semigroup_Pt(semigroup_Pt(f, s), t), semigroup_Pt(d, s + t)), 1e-10);
      }
      EXPECT_LT(max_abs_diff(semigroup_Pt(d, s), semigroup_product(f, s)), 1e-12);
      auto ez = conditional_expectation_given_Z(semigroup_Pt(d, s)) - conditional_expectation_given_Z(f);
      EXPECT_LT(ez.cwiseAbs().maxCoeff(), 1e-12);
    }
    auto fc = center(f);
    EXPECT_LT(max_abs_diff(inverse_L_quadrature(fc), inverse_L(fc)), 1e-8);
  }
}

TEST(Operators, CommutationWithSemigroup) {
  RandomStream rng(41);
  for (int trial = 0; trial < 15; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto d = chaos_decomposition(f);
    for (double t : {0.3, 1.0, 2.5}) {
      auto pt = semigroup_Pt(d, t);
      for (std::size_t a = 0; a < model->component_count(); ++a) {
        EXPECT_LT(max_abs_diff(gradient(pt, a), commutation_rhs(f, a, t)), 1e-12);
      }
    }
  }
}

TEST(Operators, LongDoubleAgreesWithDouble) {
  using LD = long double;
  auto model = cm1_model();
  BasicLatentSpace<LD> latent;
  latent.probs = model->latent().probs.cast<LD>();
  std::vector<BasicComponentSpace<LD>> comps;
  for (const auto& c : model->components()) comps.push_back({c.label, c.values.cast<LD>(), c.cond_pmf.cast<LD>()});
  auto lmodel = BasicProductModel<LD>::create(latent, comps);
  RandomStream rng(4);
  auto f = random_functional(model, rng);
  BasicFunctional<LD> lf(lmodel, f.table().cast<LD>());
  auto d = chaos_decomposition(f);
  auto ld = chaos_decomposition(lf);
  for (std::size_t n = 0; n < d.size(); ++n) {
    EXPECT_LT((d[n].table() - ld[n].table().cast<double>()).cwiseAbs().maxCoeff(), 1e-14);
  }
  auto inv = inverse_L(center(lf));
  EXPECT_LT(static_cast<double>(max_abs_diff(generator_L(inv), center(lf))), 1e-15);
}

}  // namespace
}  // namespace condmall
