#include <cmath>

#include <gtest/gtest.h>

#include "condmall/fixtures.hpp"
#include "condmall/ustat.hpp"

namespace condmall {
namespace {

HomogeneousTerm term(Subset s, double c) { return {std::move(s), Eigen::VectorXd::Constant(1, c)}; }

DegenerateUStat plain_kernel(const ModelPtr<double>& m, Subset s, double w = 1.0) {
  return {s, w * centered_product(m, s), Eigen::VectorXd::Constant(m->latent_count(), w)};
}

// F = sum_k Y_{2k} Y_{2k+1} / sqrt(n/2) on n Rademacher coordinates.
std::vector<DegenerateUStat> disjoint_pairs(const ModelPtr<double>& m) {
  const std::size_t pairs = m->component_count() / 2;
  std::vector<DegenerateUStat> out;
  for (std::size_t k = 0; k < pairs; ++k) out.push_back(plain_kernel(m, {2 * k, 2 * k + 1}, 1.0 / std::sqrt(pairs)));
  return out;
}

Functional sum_of(const std::vector<DegenerateUStat>& c) {
  Functional f = Functional::zero(c.front().kernel.model_ptr());
  for (const auto& w : c) f = f + w.kernel;
  return f;
}

TEST(HomogeneousSum, Construction) {
  auto model = cm1_model();
  auto x1 = Functional::coordinate(model, 0);
  auto w = build_homogeneous_sum(model, {2, {term({0}, 1.0), term({2, 1}, 1.0)}});
  EXPECT_EQ(max_abs_diff(w.value(), x1 + Functional::coordinate(model, 1) * Functional::coordinate(model, 2)), 0.0);
  EXPECT_EQ(w.spec()->terms[1].support, (Subset{1, 2}));

  HomogeneousSum zdep{1, {{{0}, Eigen::Vector2d(0.3, 0.7)}}};
  auto f = build_homogeneous_sum(model, zdep).value();
  for (const auto& cell : enumerate_configurations(*model)) {
    const double z = cell.latent == 0 ? 0.3 : 0.7;
    EXPECT_EQ(f(cell.latent, cell.config), z * cell.digits[0]);
  }
  EXPECT_THROW(build_homogeneous_sum(model, {1, {term({3}, 1.0)}}), Error);
  EXPECT_THROW(build_homogeneous_sum(model, {1, {term({0, 1}, 1.0)}}), Error);
  EXPECT_THROW(build_homogeneous_sum(model, {2, {term({0, 0}, 1.0)}}), Error);
  try {
    build_homogeneous_sum(model, {1, {term({7}, 1.0)}});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownIndex);
  }
}

TEST(Hoeffding, Cm1Examples) {
  auto model = cm1_model();
  const Eigen::Vector2d zv(0.3, 0.7);
  auto z = Functional::latent(model, zv);
  auto d1 = hoeffding_decompose(build_homogeneous_sum(model, {1, {term({0}, 1.0)}}));
  ASSERT_EQ(d1.components.size(), 1u);
  EXPECT_LT(max_abs_diff(d1.components[0].kernel, Functional::coordinate(model, 0) - z), 1e-15);
  EXPECT_LT(max_abs_diff(d1.conditional_mean, z), 1e-15);

  auto d2 = hoeffding_decompose(build_homogeneous_sum(model, {2, {term({1, 2}, 1.0)}}));
  ASSERT_EQ(d2.components.size(), 3u);
  auto y2 = centered_coordinate(model, 1);
  auto y3 = centered_coordinate(model, 2);
  EXPECT_LT(max_abs_diff(d2.find({1, 2})->kernel, y2 * y3), 1e-15);
  EXPECT_LT(max_abs_diff(d2.find({1})->kernel, z * y2), 1e-15);
  EXPECT_LT(max_abs_diff(d2.find({2})->kernel, z * y3), 1e-15);
  EXPECT_LT(max_abs_diff(d2.conditional_mean, z * z), 1e-15);
  EXPECT_EQ(d2.find({0}), nullptr);

  EXPECT_THROW(hoeffding_decompose(UStatistic(Functional::coordinate(model, 0))), Error);
}

TEST(Hoeffding, DeterministicCoordinateGivesEmptyMap) {
  LatentSpace latent{{"z"}, Eigen::VectorXd::Ones(1), {}};
  ComponentSpace point{"a", Eigen::Vector2d(2, 5), Eigen::RowVector2d(0, 1)};
  auto model = ProductModel::create(latent, {point, point});
  auto d = hoeffding_decompose(build_homogeneous_sum(model, {2, {term({0, 1}, 1.5)}}));
  EXPECT_TRUE(d.components.empty());
  EXPECT_NEAR(d.conditional_mean.table()(0), 37.5, 1e-12);
}

TEST(Hoeffding, RandomSumsMatchProjectors) {
  RandomStream rng(211);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = random_model(rng, {5, 3, 3, 2, 2});
    const std::size_t degree = 1 + rng.below(std::min<std::size_t>(3, model->component_count()));
    auto w = build_homogeneous_sum(model, random_homogeneous_sum(*model, degree, rng));
    auto d = hoeffding_decompose(w);
    const double scale = std::max(1.0, max_abs(w.value()));
    EXPECT_LT(max_abs_diff(d.sum(), w.value()), 1e-10 * scale);
    for (std::size_t k = 0; k <= model->component_count(); ++k) {
      EXPECT_LT(max_abs_diff(d.chaos(k), chaos_projector(w.value(), k)), 1e-10 * scale) << k;
    }
    const std::size_t m = model->component_count();
    for (const auto& c : d.components) {
      // psi_I = E[prod_{a in I} D_a W | X_I, Z]
      EXPECT_LT(max_abs_diff(c.kernel, cond_exp_given(iterated_gradient(w.value(), c.support), c.support)),
                1e-10 * scale);
      EXPECT_LT(max_abs_diff(cond_exp_given(c.kernel, c.support), c.kernel), 1e-12 * scale);
      std::vector<Subset> keeps{{}};
      for (std::size_t a = 0; a < m; ++a) {
        keeps.push_back({a});
        for (std::size_t b = a + 1; b < m; ++b) keeps.push_back({a, b});
      }
      for (int r = 0; r < 3; ++r) {
        Subset big;
        for (std::size_t a = 0; a < m; ++a) {
          if (rng.bernoulli(0.6)) big.push_back(a);
        }
        keeps.push_back(big);
      }
      for (const auto& keep : keeps) {
        if (std::includes(keep.begin(), keep.end(), c.support.begin(), c.support.end())) continue;
        EXPECT_LT(degeneracy_residual(c, keep), 1e-10 * scale);
      }
    }
    for (std::size_t k = 1; k <= degree; ++k) {
      auto fk = d.chaos(k);
      if (max_abs(fk) < 1e-8) continue;
      EXPECT_TRUE(check_egf(fk, k));
    }
  }
}

TEST(Egf, Examples) {
  RandomStream rng(5);
  auto model = random_model(rng, {4, 3, 2, 4, 2});
  auto y = centered_product(model, {0, 1});
  EXPECT_TRUE(check_egf(y, 2));
  EXPECT_TRUE(check_egf(centered_coordinate(model, 0), 1));
  auto small = rademacher_model(2);
  EXPECT_TRUE(check_egf(centered_product(small, {0, 1}), 2));
  EXPECT_THROW(check_egf(y, 1), Error);
  EXPECT_THROW(check_egf(y + centered_coordinate(model, 2), 2), Error);
}

TEST(Quadruples, Enumeration) {
  EXPECT_EQ(connected_quadruples({{1, 2}}), (std::vector<Quadruple>{{0, 0, 0, 0}}));
  auto two = connected_quadruples({{1, 2}, {3, 4}});
  EXPECT_EQ(two, (std::vector<Quadruple>{{0, 0, 0, 0}, {1, 1, 1, 1}}));
  std::vector<Subset> chain{{1, 2}, {2, 3}, {3, 4}};
  auto q = connected_quadruples(chain);
  EXPECT_EQ(q.size(), 67u);
  EXPECT_TRUE(quadruple_connected(chain[0], chain[1], chain[2], chain[1]));
  EXPECT_FALSE(quadruple_connected(chain[0], chain[0], chain[2], chain[2]));
  EXPECT_EQ(connected_quadruples({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}, {1, 3}}).size(), 936u);
  EXPECT_EQ(connected_sum({}), 0.0);
  EXPECT_THROW(connected_quadruples(std::vector<Subset>(201, Subset{0})), Error);
}

TEST(Quadruples, ConnectedSumMatchesBruteForce) {
  RandomStream rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    auto model = random_model(rng, {5, 3, 2, 5, 2});
    auto d = hoeffding_decompose(build_homogeneous_sum(model, random_homogeneous_sum(*model, 2, rng)));
    std::vector<Subset> supports;
    for (const auto& c : d.components) supports.push_back(c.support);
    double brute = 0.0;
    for (const auto& q : connected_quadruples(supports)) {
      brute += std::abs(expectation(d.components[q[0]].kernel * d.components[q[1]].kernel *
                                    d.components[q[2]].kernel * d.components[q[3]].kernel));
    }
    EXPECT_NEAR(connected_sum(d.components, 1), brute, 1e-10 * std::max(1.0, brute));
    EXPECT_EQ(connected_sum(d.components, 1), connected_sum(d.components, 3));
  }
}

TEST(FourthMoment, SingleRademacher) {
  auto model = rademacher_model(1);
  auto comps = std::vector<DegenerateUStat>{plain_kernel(model, {0})};
  auto r = fourth_moment_report(comps[0].kernel, comps);
  EXPECT_NEAR(r.fourth_moment - 3.0, -2.0, 1e-15);
  EXPECT_NEAR(*r.gamma_deviation, 0.0, 1e-15);
  EXPECT_NEAR(r.remainder, 8.0, 1e-15);
  EXPECT_NEAR(*r.proposition_rhs, 4.0 / 3.0, 1e-15);
  EXPECT_TRUE(*r.proposition_holds);
  EXPECT_NEAR(r.connected, 1.0, 1e-15);
  EXPECT_TRUE(r.influence_holds);
  EXPECT_EQ(r.to_json()["chaos_order"].get<int>(), 1);
  EXPECT_THROW(fourth_moment_report(Functional::zero(model), {}), Error);
}

TEST(FourthMoment, AveragedRademachersShrinkTheGap) {
  auto model = rademacher_model(6);
  std::vector<DegenerateUStat> comps;
  for (std::size_t i = 0; i < 6; ++i) comps.push_back(plain_kernel(model, {i}, 1.0 / std::sqrt(6.0)));
  auto r = fourth_moment_report(sum_of(comps), comps);
  EXPECT_NEAR(r.fourth_moment_gap, 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(r.remainder, 4.0 / 3.0, 1e-14);
  EXPECT_NEAR(r.connected, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(r.max_influence, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(r.hc_ratio, 1.0, 1e-14);
  EXPECT_TRUE(*r.proposition_holds);
  EXPECT_TRUE(r.influence_holds);
}

TEST(FourthMoment, RandomHomogeneousChaos) {
  RandomStream rng(313);
  int checked = 0;
  while (checked < 12) {
    auto model = random_model(rng, {5, 3, 2, 2, 2});
    const std::size_t p = 1 + rng.below(std::min<std::size_t>(3, model->component_count()));
    auto d = hoeffding_decompose(build_homogeneous_sum(model, random_homogeneous_sum(*model, p, rng)));
    auto fp = d.chaos(p);
    const double norm = std::sqrt(expectation(fp * fp));
    if (norm < 1e-6) continue;
    std::vector<DegenerateUStat> comps;
    for (const auto& c : d.components) {
      if (c.order() == p) comps.push_back({c.support, c.kernel / norm, c.weight / norm});
    }
    auto f = fp / norm;
    auto r = fourth_moment_report(f, comps);
    ASSERT_TRUE(r.proposition_holds.has_value());
    EXPECT_TRUE(*r.proposition_holds) << *r.gamma_deviation << " vs " << *r.proposition_rhs;
    EXPECT_TRUE(r.influence_holds);
    EXPECT_LT(hermite_identity(f).residual, 1e-9);
    ++checked;
  }
}

TEST(Hermite, KnownCases) {
  auto r1 = rademacher_model(1);
  auto h = hermite_identity(centered_coordinate(r1, 0));
  EXPECT_NEAR(h.lhs, 0.0, 1e-15);
  EXPECT_NEAR(h.rhs, 0.0, 1e-14);
  auto r2 = rademacher_model(2);
  auto s = (centered_coordinate(r2, 0) + centered_coordinate(r2, 1)) / std::sqrt(2.0);
  EXPECT_LT(hermite_identity(s).residual, 1e-13);
  EXPECT_LT(hermite_identity(centered_product(r2, {0, 1})).residual, 1e-13);
  EXPECT_THROW(hermite_identity(s + centered_product(r2, {0, 1})), Error);
}

TEST(Sandwich, SpectralInequalities) {
  RandomStream rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = random_model(rng, {4, 3, 2, 1, 2});
    auto d = chaos_decomposition(random_functional(model, rng));
    const std::size_t q = 1 + rng.below(model->component_count());
    Functional g = d[0];
    for (std::size_t k = 1; k <= q; ++k) g = g + d[k];
    const double qd = static_cast<double>(sandwich_check(g, static_cast<double>(q)).q);
    for (double eta : {qd, qd + 0.25, qd + 1.0, qd + 5.0}) {
      auto s = sandwich_check(g, eta);
      EXPECT_TRUE(s.lower_holds);
      if (eta > qd) EXPECT_TRUE(*s.upper_holds);
      else EXPECT_FALSE(s.upper_holds.has_value());
    }
    EXPECT_THROW(sandwich_check(g, qd - 0.5), Error);
  }
  // equality on a single chaos
  auto r = rademacher_model(3);
  auto s = sandwich_check(centered_product(r, {0, 2}), 2.5);
  EXPECT_NEAR(s.linear, *s.constant * s.quadratic, 1e-13);
}

TEST(H1, ProductFormRatios) {
  auto model = cm1_model();
  std::vector<DegenerateUStat> comps{plain_kernel(model, {0, 1}), plain_kernel(model, {1, 2})};
  auto r = check_h1(comps, 1);
  EXPECT_TRUE(r.bounded);
  EXPECT_EQ(r.pairs, 4u);
  EXPECT_NEAR(r.max_constant, 0.21, 1e-14);
  auto none = check_h1({plain_kernel(model, {0}), plain_kernel(model, {2})}, 1);
  EXPECT_TRUE(none.bounded);
  EXPECT_EQ(none.pairs, 0u);
  std::vector<DegenerateUStat> zero_den{plain_kernel(model, {0, 1}), {{0}, Functional::zero(model), Eigen::Vector2d::Zero()}};
  EXPECT_THROW(check_h1(zero_den, 1), Error);
  DegenerateUStat odd{{0}, Functional::coordinate(model, 0), Eigen::Vector2d::Ones()};
  EXPECT_THROW(check_h1({odd}, 0), Error);
}

TEST(DeJong, DisjointPairs) {
  auto model = rademacher_model(8);
  auto comps = disjoint_pairs(model);
  auto f = sum_of(comps);
  auto r = dejong_quantities(f, comps);
  EXPECT_NEAR(r.connected, 0.25, 1e-14);
  EXPECT_NEAR(r.fourth_cumulant_gap, 0.5, 1e-14);
  EXPECT_NEAR(r.dejong1_explicit, std::sqrt(2.0 / (3.0 * M_PI)) * std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(r.rho, 0.5, 1e-15);
  EXPECT_TRUE(r.egf);
  // (1/2)^2 E[Y^2] over the unit-weight reduced product
  EXPECT_NEAR(r.h1_constant, 0.25, 1e-14);
  EXPECT_EQ(r.to_json()["dejong2_multiplier"], "C_m (unspecified)");
  EXPECT_THROW(dejong_quantities(2.0 * f, comps), Error);
}

TEST(DeJong, GapDecreasesWithMorePairs) {
  double last = 1e9;
  for (std::size_t n : {6u, 10u, 14u}) {
    auto model = rademacher_model(n);
    auto comps = disjoint_pairs(model);
    auto r = dejong_quantities(sum_of(comps), comps);
    EXPECT_NEAR(r.fourth_cumulant_gap, 4.0 / static_cast<double>(n), 1e-12);
    EXPECT_LT(r.fourth_cumulant_gap, last);
    last = r.fourth_cumulant_gap;
  }
}

TEST(DeJong, FailedConditionIsNamed) {
  auto model = rademacher_model(2);
  std::vector<DegenerateUStat> comps{plain_kernel(model, {0}, std::sqrt(0.5)), plain_kernel(model, {1}, std::sqrt(0.5))};
  auto f = sum_of(comps);
  EXPECT_TRUE(dejong_quantities(f, comps).egf);
  comps[1].kernel = comps[1].kernel + Functional::constant(model, 0.5);
  try {
    dejong_quantities(f, comps);
    FAIL() << "expected ConditionFailed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConditionFailed);
    const std::string what = e.what();
    EXPECT_NE(what.find("EGF"), std::string::npos) << what;
    EXPECT_NE(what.find("H1"), std::string::npos) << what;
  }
}

// First pseudo chain rule with psi = sin: the remainder is bounded by
// (1/4) sum_a E[|Delta G| (Delta F)^2 | X, Z] cellwise.
TEST(PseudoChainRule, FirstRuleWithSine) {
  RandomStream rng(97);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto g = random_functional(model, rng);
    auto sinf = f.map([](double v) { return std::sin(v); });
    auto cosf = f.map([](double v) { return std::cos(v); });
    Eigen::VectorXd main = Eigen::VectorXd::Zero(f.table().size());
    Eigen::VectorXd bound = Eigen::VectorXd::Zero(f.table().size());
    for (std::size_t a = 0; a < model->component_count(); ++a) {
      main += difference_expectation(f, g, a, [](double df, double dg) { return df * dg; }).table();
      bound += mixed_difference_moment(f, g, a).table();
    }
    Eigen::VectorXd rem = carre_du_champ(sinf, g).table() - 0.5 * cosf.table().cwiseProduct(main);
    EXPECT_TRUE((rem.cwiseAbs().array() <= 0.25 * bound.array() + 1e-12).all());
  }
}

// Second pseudo chain rule with phi = psi = x^3, where the Taylor expansion is
// finite and the remainder is (1/2) sum_a E[15 F^2 h^4 + 6 F h^5 + h^6 | X, Z]
// with h = -Delta F.
TEST(PseudoChainRule, SecondRuleWithCubics) {
  RandomStream rng(98);
  for (int trial = 0; trial < 20; ++trial) {
    auto model = random_model(rng);
    auto f = random_functional(model, rng);
    auto cube = f * f * f;
    const Eigen::ArrayXd x = f.table().array();
    Eigen::ArrayXd d3 = Eigen::ArrayXd::Zero(x.size()), rem = Eigen::ArrayXd::Zero(x.size());
    for (std::size_t a = 0; a < model->component_count(); ++a) {
      d3 += difference_moment(f, a, 3, false).table().array();
      rem += 0.5 * (15.0 * x.square() * difference_moment(f, a, 4, false).table().array() -
                    6.0 * x * difference_moment(f, a, 5, false).table().array() +
                    difference_moment(f, a, 6, false).table().array());
    }
    const Eigen::ArrayXd gamma = carre_du_champ(f, f).table().array();
    // phi' psi' = 9x^4, phi'' psi' + phi' psi'' = 36 x^3
    Eigen::ArrayXd rhs = 9.0 * x.pow(4) * gamma - 0.25 * 36.0 * x.cube() * d3 + rem;
    EXPECT_LT((carre_du_champ(cube, cube).table().array() - rhs).abs().maxCoeff(), 1e-10);
  }
}

}  // namespace
}  // namespace condmall
