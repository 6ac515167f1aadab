#include "condmall/fixtures.hpp"

#include <string>

namespace condmall {

ModelPtr<double> conditional_bernoulli_model(const std::vector<double>& zs, const std::vector<double>& probs,
                                             std::size_t n) {
  if (zs.size() != probs.size()) throw Error(ErrorCode::InvalidArgument, "latent values and probs differ in length");
  LatentSpace latent;
  latent.probs = Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
  latent.payload = zs;
  for (double z : zs) latent.labels.push_back("z=" + std::to_string(z));
  std::vector<ComponentSpace> comps(n);
  for (std::size_t a = 0; a < n; ++a) {
    comps[a].label = std::to_string(a + 1);
    comps[a].values = Eigen::Vector2d(0.0, 1.0);
    comps[a].cond_pmf.resize(static_cast<Eigen::Index>(zs.size()), 2);
    for (std::size_t z = 0; z < zs.size(); ++z) {
      comps[a].cond_pmf(static_cast<Eigen::Index>(z), 0) = 1.0 - zs[z];
      comps[a].cond_pmf(static_cast<Eigen::Index>(z), 1) = zs[z];
    }
  }
  return ProductModel::create(std::move(latent), std::move(comps));
}

ModelPtr<double> cm1_model() { return conditional_bernoulli_model({0.3, 0.7}, {0.5, 0.5}, 3); }

ModelPtr<double> rademacher_model(std::size_t n) {
  LatentSpace latent;
  latent.probs = Eigen::VectorXd::Ones(1);
  latent.labels = {"fixed"};
  std::vector<ComponentSpace> comps(n);
  for (std::size_t a = 0; a < n; ++a) {
    comps[a].label = std::to_string(a + 1);
    comps[a].values = Eigen::Vector2d(-1.0, 1.0);
    comps[a].cond_pmf = Eigen::RowVector2d(0.5, 0.5);
  }
  return ProductModel::create(std::move(latent), std::move(comps));
}

namespace {

Eigen::VectorXd random_simplex(RandomStream& rng, Eigen::Index k) {
  Eigen::VectorXd w(k);
  for (Eigen::Index i = 0; i < k; ++i) w(i) = 0.05 + rng.uniform();
  return w / w.sum();
}

}  // namespace

ModelPtr<double> random_model(RandomStream& rng, const RandomModelLimits& limits) {
  const Eigen::Index lz = 1 + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(limits.max_latent)));
  const std::size_t m =
      limits.min_components + rng.below(limits.max_components - limits.min_components + 1);
  LatentSpace latent;
  latent.probs = random_simplex(rng, lz);
  std::vector<ComponentSpace> comps(m);
  for (std::size_t a = 0; a < m; ++a) {
    const Eigen::Index r =
        limits.min_values +
        static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(limits.max_values - limits.min_values + 1)));
    comps[a].label = std::to_string(a);
    comps[a].values.resize(r);
    // Sorted distinct values on an even grid with a random offset.
    double start = -2.0 + rng.uniform();
    for (Eigen::Index v = 0; v < r; ++v) comps[a].values(v) = start + static_cast<double>(v) * (0.5 + rng.uniform());
    comps[a].cond_pmf.resize(lz, r);
    for (Eigen::Index z = 0; z < lz; ++z) comps[a].cond_pmf.row(z) = random_simplex(rng, r).transpose();
  }
  return ProductModel::create(std::move(latent), std::move(comps));
}

Functional random_functional(const ModelPtr<double>& model, RandomStream& rng) {
  Eigen::VectorXd t(model->cell_count());
  for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = 2.0 * rng.uniform() - 1.0;
  return Functional(model, std::move(t));
}

}  // namespace condmall
