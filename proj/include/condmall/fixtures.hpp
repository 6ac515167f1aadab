#ifndef CONDMALL_FIXTURES_HPP
#define CONDMALL_FIXTURES_HPP

#include <cstddef>
#include <vector>

#include "condmall/model.hpp"
#include "condmall/random.hpp"

namespace condmall {

// n coordinates that are Bernoulli(z) given Z = z, with Z drawn from `zs`
// with probabilities `probs`. The latent payload holds z.
ModelPtr<double> conditional_bernoulli_model(const std::vector<double>& zs, const std::vector<double>& probs,
                                             std::size_t n);

// Z uniform on {0.3, 0.7}, three conditionally Bernoulli(Z) coordinates.
ModelPtr<double> cm1_model();

// n independent fair +-1 coordinates, trivial latent space.
ModelPtr<double> rademacher_model(std::size_t n);

struct RandomModelLimits {
  std::size_t max_components = 6;
  Eigen::Index max_values = 3;
  Eigen::Index max_latent = 3;
  std::size_t min_components = 1;
  Eigen::Index min_values = 2;
};

// Random model with strictly positive probabilities and values drawn from
// [-2, 2].
ModelPtr<double> random_model(RandomStream& rng, const RandomModelLimits& limits = {});

// Cell values uniform on [-1, 1].
Functional random_functional(const ModelPtr<double>& model, RandomStream& rng);

}  // namespace condmall

#endif  // CONDMALL_FIXTURES_HPP
