#include "condmall/glauber.hpp"

#include <cmath>

#include "condmall/operators.hpp"
#include "condmall/parallel.hpp"

namespace condmall {

namespace {

void check_start(const ProductModel& model, Eigen::Index latent, const std::vector<int>& start, double horizon) {
  if (latent < 0 || latent >= model.latent_count()) throw Error(ErrorCode::InvalidArgument, "latent index out of range");
  if (start.size() != model.component_count()) throw Error(ErrorCode::InvalidArgument, "start configuration length");
  for (std::size_t a = 0; a < start.size(); ++a) {
    if (start[a] < 0 || start[a] >= model.radix(a)) throw Error(ErrorCode::InvalidArgument, "start digit out of range");
  }
  check_time(horizon);
}

// Welford accumulator.
struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double standard_error() const {
    if (n < 2) return 0.0;
    return std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1)) / static_cast<double>(n));
  }
};

template <typename Sampler>
PtEstimate run_per_cell(const Functional& f, std::size_t paths, std::uint64_t seed, unsigned workers,
                        Sampler&& sampler) {
  if (paths == 0) throw Error(ErrorCode::InvalidArgument, "paths must be >= 1");
  const auto& model = f.model();
  const Eigen::Index cells = model.cell_count();
  Eigen::VectorXd est(cells), se(cells);
  RandomStream root(seed);
  parallel_for_blocks(static_cast<std::size_t>(cells), workers, [&](std::size_t cell) {
    const Eigen::Index flat = static_cast<Eigen::Index>(cell);
    const Eigen::Index z = flat / model.configuration_count();
    const std::vector<int> start = model.digits(flat % model.configuration_count());
    RandomStream rng = root.split(cell);
    std::vector<int> state;
    Moments mom;
    for (std::size_t i = 0; i < paths; ++i) {
      state = start;
      mom.add(sampler(z, state, rng));
    }
    est(flat) = mom.mean;
    se(flat) = mom.standard_error();
  });
  return {f.with_table(std::move(est)), std::move(se)};
}

}  // namespace

std::vector<int> GlauberPath::endpoint() const {
  std::vector<int> s = initial;
  for (const auto& e : events) {
    if (e.index != kCemetery) s[static_cast<std::size_t>(e.index)] = e.value;
  }
  return s;
}

GlauberPath simulate_path(const ProductModel& model, Eigen::Index latent, const std::vector<int>& start, double horizon,
                          RandomStream& rng, const GlauberOptions& options) {
  check_start(model, latent, start, horizon);
  GlauberPath path;
  path.latent = latent;
  path.initial = start;
  path.horizon = horizon;
  const std::size_t m = model.component_count();
  const std::size_t slots = options.skip_idle ? m : m + 1;
  double time = 0.0;
  for (;;) {
    time += rng.exponential(static_cast<double>(slots));
    if (time > horizon) break;
    const std::size_t pick = rng.below(slots);
    if (pick == m) {
      path.events.push_back({time, kCemetery, 0});
      continue;
    }
    int value = start[pick];
    if (static_cast<long>(pick) != options.frozen) {
      value = static_cast<int>(rng.categorical(model.component(pick).cond_pmf.row(latent)));
    }
    path.events.push_back({time, static_cast<long>(pick), value});
  }
  return path;
}

std::size_t advance(const ProductModel& model, Eigen::Index latent, std::vector<int>& state, double horizon,
                    RandomStream& rng, const GlauberOptions& options) {
  const std::size_t m = model.component_count();
  const std::size_t slots = options.skip_idle ? m : m + 1;
  const double rate = static_cast<double>(slots);
  std::size_t rings = 0;
  double time = 0.0;
  for (;;) {
    time += rng.exponential(rate);
    if (time > horizon) return rings;
    ++rings;
    const std::size_t pick = rng.below(slots);
    if (pick == m || static_cast<long>(pick) == options.frozen) continue;
    state[pick] = static_cast<int>(rng.categorical(model.component(pick).cond_pmf.row(latent)));
  }
}

PtEstimate estimate_Pt(const Functional& f, double t, std::size_t paths, std::uint64_t seed, unsigned workers,
                       const GlauberOptions& options) {
  check_time(t);
  const auto& model = f.model();
  return run_per_cell(f, paths, seed, workers, [&](Eigen::Index z, std::vector<int>& state, RandomStream& rng) {
    advance(model, z, state, t, rng, options);
    return f(z, model.index_of(state));
  });
}

PtEstimate estimate_commutation(const Functional& f, std::size_t a, double t, std::size_t paths, std::uint64_t seed,
                                unsigned workers) {
  check_time(t);
  const auto& model = f.model();
  model.check_index(a);
  GlauberOptions options;
  options.frozen = static_cast<long>(a);
  const double factor = std::exp(-t);
  return run_per_cell(f, paths, seed, workers, [&](Eigen::Index z, std::vector<int>& state, RandomStream& rng) {
    advance(model, z, state, t, rng, options);
    const double here = f(z, model.index_of(state));
    state[a] = static_cast<int>(rng.categorical(model.component(a).cond_pmf.row(z)));
    return factor * (here - f(z, model.index_of(state)));
  });
}

nlohmann::json path_to_json(const ProductModel& model, const GlauberPath& path) {
  nlohmann::json j;
  j["latent"] = path.latent;
  j["initial"] = path.initial;
  j["horizon"] = path.horizon;
  j["events"] = nlohmann::json::array();
  for (const auto& e : path.events) {
    if (e.index == kCemetery) {
      j["events"].push_back({{"t", e.time}, {"index", "idle"}});
    } else {
      j["events"].push_back({{"t", e.time},
                             {"index", e.index},
                             {"value", model.value(static_cast<std::size_t>(e.index), e.value)}});
    }
  }
  return j;
}

}  // namespace condmall
