#ifndef CONDMALL_GLAUBER_HPP
#define CONDMALL_GLAUBER_HPP

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "condmall/model.hpp"
#include "condmall/random.hpp"

namespace condmall {

inline constexpr long kCemetery = -1;  // the idle index, written as ∂ in prose

struct GlauberEvent {
  double time;
  long index;  // component index, or kCemetery
  int value;   // resampled digit; unused for kCemetery
};

struct GlauberPath {
  Eigen::Index latent = 0;
  std::vector<int> initial;
  std::vector<GlauberEvent> events;
  double horizon = 0.0;

  std::vector<int> endpoint() const;
};

struct GlauberOptions {
  // Simulate only the |A| real clocks (thinned idle events). Same law.
  bool skip_idle = false;
  // Component held at its initial value (no refresh), or -1.
  long frozen = -1;
};

// Poisson clock of rate |A|+1; each ring picks an index uniformly from A and
// the idle index and resamples the chosen coordinate from its conditional
// law given the (fixed) latent state.
GlauberPath simulate_path(const ProductModel& model, Eigen::Index latent, const std::vector<int>& start, double horizon,
                          RandomStream& rng, const GlauberOptions& options = {});

// Endpoint-only version of simulate_path; returns the number of clock rings.
std::size_t advance(const ProductModel& model, Eigen::Index latent, std::vector<int>& state, double horizon,
                    RandomStream& rng, const GlauberOptions& options = {});

struct PtEstimate {
  Functional estimate;
  Eigen::VectorXd standard_error;  // same cell layout as the functional table
};

// For every start cell (latent, configuration) runs `paths` independent paths
// to time t and averages F at the endpoint. Each start cell uses its own
// stream split from `seed`, so results do not depend on `workers`.
PtEstimate estimate_Pt(const Functional& f, double t, std::size_t paths, std::uint64_t seed, unsigned workers = 1,
                       const GlauberOptions& options = {});

// Monte Carlo estimate of e^{-t} E[Delta^a F(X°(t), X'_a) | X, Z] with
// coordinate a held fixed along the path.
PtEstimate estimate_commutation(const Functional& f, std::size_t a, double t, std::size_t paths, std::uint64_t seed,
                                unsigned workers = 1);

nlohmann::json path_to_json(const ProductModel& model, const GlauberPath& path);

}  // namespace condmall

#endif  // CONDMALL_GLAUBER_HPP
