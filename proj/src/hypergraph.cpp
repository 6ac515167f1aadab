#include "condmall/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "condmall/error.hpp"
#include "condmall/normal_approx.hpp"
#include "condmall/parallel.hpp"

namespace condmall {
namespace {

constexpr std::size_t kMaxMotifVertices = 8;
constexpr std::size_t kMaxRateEdges = 20;

std::array<std::uint32_t, 3> triple_pairs(const Triple& t) {
  return {static_cast<std::uint32_t>(pair_index(t[0], t[1])), static_cast<std::uint32_t>(pair_index(t[0], t[2])),
          static_cast<std::uint32_t>(pair_index(t[1], t[2]))};
}

Triple sorted_triple(std::uint32_t a, std::uint32_t b, std::uint32_t c) {
  Triple t{a, b, c};
  std::sort(t.begin(), t.end());
  return t;
}

std::vector<Triple> relabel(const std::vector<Triple>& edges, const std::vector<std::uint32_t>& map) {
  std::vector<Triple> out;
  out.reserve(edges.size());
  for (const auto& t : edges) out.push_back(sorted_triple(map[t[0]], map[t[1]], map[t[2]]));
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t count_pairs(const std::vector<Triple>& edges) {
  std::vector<std::uint32_t> pairs;
  for (const auto& t : edges) {
    auto tp = triple_pairs(t);
    pairs.insert(pairs.end(), tp.begin(), tp.end());
  }
  std::sort(pairs.begin(), pairs.end());
  return static_cast<std::size_t>(std::unique(pairs.begin(), pairs.end()) - pairs.begin());
}

std::size_t intersection_size(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  std::size_t k = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++k;
      ++i;
      ++j;
    }
  }
  return k;
}

void check_probability(double x, const char* name) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must lie in [0,1]");
}

std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

}  // namespace

Triple triple_at(std::size_t index) {
  std::uint32_t c = 2;
  while (static_cast<std::size_t>(c + 1) * c * (c - 1) / 6 <= index) ++c;
  index -= static_cast<std::size_t>(c) * (c - 1) * (c - 2) / 6;
  std::uint32_t b = 1;
  while (static_cast<std::size_t>(b + 1) * b / 2 <= index) ++b;
  index -= static_cast<std::size_t>(b) * (b - 1) / 2;
  return {static_cast<std::uint32_t>(index), b, c};
}

Motif::Motif(std::size_t vertices, std::vector<Triple> hyperedges, std::string id)
    : id_(std::move(id)), vertices_(vertices) {
  if (hyperedges.empty()) throw Error(ErrorCode::InvalidArgument, "motif needs at least one hyperedge");
  if (vertices > kMaxMotifVertices) {
    throw Error(ErrorCode::SizeCapExceeded, "motif has " + std::to_string(vertices) + " vertices, cap is 8");
  }
  std::vector<bool> used(vertices, false);
  for (auto& t : hyperedges) {
    for (auto v : t) {
      if (v >= vertices) throw Error(ErrorCode::InvalidArgument, "hyperedge vertex out of range");
      used[v] = true;
    }
    t = sorted_triple(t[0], t[1], t[2]);
    if (t[0] == t[1] || t[1] == t[2]) throw Error(ErrorCode::InvalidArgument, "hyperedge with repeated vertex");
  }
  std::sort(hyperedges.begin(), hyperedges.end());
  if (std::adjacent_find(hyperedges.begin(), hyperedges.end()) != hyperedges.end()) {
    throw Error(ErrorCode::InvalidArgument, "duplicate hyperedge");
  }
  if (std::find(used.begin(), used.end(), false) != used.end()) {
    throw Error(ErrorCode::InvalidArgument, "motif has an isolated vertex");
  }
  hyperedges_ = std::move(hyperedges);
  covered_pairs_ = count_pairs(hyperedges_);

  std::vector<std::uint32_t> perm(vertices);
  std::iota(perm.begin(), perm.end(), 0u);
  automorphisms_ = 0;
  do {
    if (relabel(hyperedges_, perm) == hyperedges_) ++automorphisms_;
  } while (std::next_permutation(perm.begin(), perm.end()));
}

Motif Motif::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j.contains("hyperedges")) {
    throw Error(ErrorCode::InvalidArgument, "motif descriptor needs \"vertices\" and \"hyperedges\"");
  }
  std::vector<Triple> edges;
  for (const auto& e : j.at("hyperedges")) {
    if (!e.is_array() || e.size() != 3) throw Error(ErrorCode::InvalidArgument, "hyperedge must list 3 vertices");
    edges.push_back({e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>(), e[2].get<std::uint32_t>()});
  }
  return Motif(j.at("vertices").get<std::size_t>(), std::move(edges), j.value("id", std::string("custom")));
}

nlohmann::json Motif::to_json() const {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& t : hyperedges_) edges.push_back({t[0], t[1], t[2]});
  return {{"id", id_}, {"vertices", vertices_}, {"hyperedges", edges}};
}

Motif Motif::restrict_to(const std::vector<std::size_t>& hyperedge_ids) const {
  std::vector<std::uint32_t> map(vertices_, std::numeric_limits<std::uint32_t>::max());
  std::uint32_t next = 0;
  std::vector<Triple> edges;
  for (auto id : hyperedge_ids) {
    if (id >= hyperedges_.size()) throw Error(ErrorCode::IndexOutOfRange, "hyperedge id out of range");
    Triple t = hyperedges_[id];
    for (auto& v : t) {
      if (map[v] == std::numeric_limits<std::uint32_t>::max()) map[v] = next++;
      v = map[v];
    }
    edges.push_back(t);
  }
  return Motif(next, std::move(edges), id_ + "/sub");
}

std::vector<Motif> motif_library() {
  return {
      Motif(3, {{0, 1, 2}}, "single"),
      Motif(5, {{0, 1, 2}, {0, 3, 4}}, "shared-vertex"),
      Motif(4, {{0, 1, 2}, {0, 1, 3}}, "shared-pair"),
      Motif(4, {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}}, "triangle"),
  };
}

Motif library_motif(std::string_view id) {
  for (auto& m : motif_library()) {
    if (m.id() == id) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown motif '" + std::string(id) + "'");
}

std::string_view to_string(HypergraphModel m) {
  switch (m) {
    case HypergraphModel::G3:
      return "G3";
    case HypergraphModel::T3:
      return "T3";
    case HypergraphModel::Sbm:
      return "SBM";
  }
  return "?";
}

HypergraphModel hypergraph_model_from_string(std::string_view s) {
  if (s == "G3" || s == "g3") return HypergraphModel::G3;
  if (s == "T3" || s == "t3") return HypergraphModel::T3;
  if (s == "SBM" || s == "sbm") return HypergraphModel::Sbm;
  throw Error(ErrorCode::InvalidArgument, "unknown hypergraph model '" + std::string(s) + "'");
}

bool HypergraphSample::has_pair(std::size_t a, std::size_t b) const {
  if (a > b) std::swap(a, b);
  return latent[pair_index(a, b)] != 0;
}

bool HypergraphSample::supported(std::size_t triple) const {
  auto tp = triple_pairs(triple_at(triple));
  return latent[tp[0]] && latent[tp[1]] && latent[tp[2]];
}

std::size_t HypergraphSample::hyperedge_count() const {
  return static_cast<std::size_t>(std::count(hyperedges.begin(), hyperedges.end(), std::uint8_t{1}));
}

HypergraphSample gen_g3(std::size_t n, double p, RandomStream& rng) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "n must be >= 3");
  check_probability(p, "p");
  HypergraphSample s;
  s.n = n;
  s.model = HypergraphModel::G3;
  s.p = p;
  s.q = 1.0;
  s.latent.assign(pair_count(n), 1);
  s.hyperedges.resize(triple_count(n));
  for (auto& x : s.hyperedges) x = rng.bernoulli(p);
  return s;
}

HypergraphSample gen_from_latent(std::size_t n, std::vector<std::uint8_t> latent, double p, RandomStream& rng,
                                 HypergraphModel model, double q) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "n must be >= 3");
  if (latent.size() != pair_count(n)) throw Error(ErrorCode::InvalidArgument, "latent graph size mismatch");
  check_probability(p, "p");
  HypergraphSample s;
  s.n = n;
  s.model = model;
  s.p = p;
  s.q = q;
  s.latent = std::move(latent);
  s.hyperedges.assign(triple_count(n), 0);
  std::size_t t = 0;
  for (std::size_t c = 2; c < n; ++c) {
    for (std::size_t b = 1; b < c; ++b) {
      const bool bc = s.latent[pair_index(b, c)];
      for (std::size_t a = 0; a < b; ++a, ++t) {
        // every coin is drawn so the stream does not depend on the latent graph
        const bool coin = rng.bernoulli(p);
        s.hyperedges[t] = coin && bc && s.latent[pair_index(a, b)] && s.latent[pair_index(a, c)];
      }
    }
  }
  return s;
}

HypergraphSample gen_t3(std::size_t n, double q, double p, RandomStream& rng) {
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "n must be >= 3");
  check_probability(q, "q");
  std::vector<std::uint8_t> latent(pair_count(n));
  for (auto& z : latent) z = rng.bernoulli(q);
  return gen_from_latent(n, std::move(latent), p, rng, HypergraphModel::T3, q);
}

std::vector<std::uint8_t> sbm_latent(const std::vector<std::size_t>& block, const Eigen::MatrixXd& probs,
                                     RandomStream& rng) {
  const std::size_t n = block.size();
  if (probs.rows() != probs.cols()) throw Error(ErrorCode::InvalidArgument, "block matrix must be square");
  if (!probs.isApprox(probs.transpose(), 0.0)) throw Error(ErrorCode::InvalidArgument, "block matrix must be symmetric");
  for (Eigen::Index i = 0; i < probs.size(); ++i) check_probability(probs.data()[i], "block probability");
  for (auto b : block) {
    if (b >= static_cast<std::size_t>(probs.rows())) throw Error(ErrorCode::IndexOutOfRange, "block label out of range");
  }
  std::vector<std::uint8_t> latent(pair_count(n));
  for (std::size_t b = 1; b < n; ++b) {
    for (std::size_t a = 0; a < b; ++a) {
      latent[pair_index(a, b)] =
          rng.bernoulli(probs(static_cast<Eigen::Index>(block[a]), static_cast<Eigen::Index>(block[b])));
    }
  }
  return latent;
}

HypergraphSample gen_sbm(const std::vector<std::size_t>& block, const Eigen::MatrixXd& probs, double p,
                         RandomStream& rng) {
  auto latent = sbm_latent(block, probs, rng);
  return gen_from_latent(block.size(), std::move(latent), p, rng, HypergraphModel::Sbm,
                         std::numeric_limits<double>::quiet_NaN());
}

MotifPlacements::MotifPlacements(const Motif& motif, std::size_t n) : motif_(motif), n_(n) {
  const std::size_t v = motif.vertices();
  if (v > n) {
    throw Error(ErrorCode::MotifTooLarge,
                "motif has " + std::to_string(v) + " vertices but n = " + std::to_string(n));
  }
  std::vector<std::vector<std::uint32_t>> all;
  std::vector<std::uint32_t> image(v);
  std::vector<bool> taken(n, false);
  std::function<void(std::size_t)> assign = [&](std::size_t k) {
    if (k == v) {
      std::vector<std::uint32_t> copy;
      copy.reserve(motif.edges());
      for (const auto& t : motif.hyperedges()) {
        copy.push_back(static_cast<std::uint32_t>(triple_index(sorted_triple(image[t[0]], image[t[1]], image[t[2]]))));
      }
      std::sort(copy.begin(), copy.end());
      all.push_back(std::move(copy));
      return;
    }
    for (std::uint32_t x = 0; x < n; ++x) {
      if (taken[x]) continue;
      taken[x] = true;
      image[k] = x;
      assign(k + 1);
      taken[x] = false;
    }
  };
  assign(0);
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  hyperedges_ = std::move(all);
  pairs_.reserve(hyperedges_.size());
  for (const auto& copy : hyperedges_) {
    std::vector<std::uint32_t> pairs;
    for (auto t : copy) {
      auto tp = triple_pairs(triple_at(t));
      pairs.insert(pairs.end(), tp.begin(), tp.end());
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    pairs_.push_back(std::move(pairs));
  }
}

double MotifPlacements::count(const HypergraphSample& s) const {
  if (s.n != n_) throw Error(ErrorCode::MismatchedModel, "sample size differs from placement size");
  std::size_t total = 0;
  for (const auto& copy : hyperedges_) {
    bool all = true;
    for (auto t : copy) {
      if (!s.hyperedges[t]) {
        all = false;
        break;
      }
    }
    total += all;
  }
  return static_cast<double>(total);
}

double MotifPlacements::conditional_mean(const HypergraphSample& s, double p) const {
  if (s.n != n_) throw Error(ErrorCode::MismatchedModel, "sample size differs from placement size");
  std::size_t supported = 0;
  for (const auto& pairs : pairs_) {
    bool all = true;
    for (auto b : pairs) {
      if (!s.latent[b]) {
        all = false;
        break;
      }
    }
    supported += all;
  }
  return static_cast<double>(supported) * std::pow(p, static_cast<double>(motif_.edges()));
}

std::uint64_t count_motif(const HypergraphSample& s, const Motif& motif) {
  const std::size_t v = motif.vertices();
  const std::size_t n = s.n;
  if (v > n) {
    throw Error(ErrorCode::MotifTooLarge,
                "motif has " + std::to_string(v) + " vertices but n = " + std::to_string(n));
  }
  // hyperedges checked once their last vertex is assigned
  std::vector<std::vector<Triple>> closing(v);
  for (const auto& t : motif.hyperedges()) closing[t[2]].push_back(t);
  std::vector<std::uint32_t> image(v);
  std::vector<bool> taken(n, false);
  std::uint64_t injections = 0;
  std::function<void(std::size_t)> assign = [&](std::size_t k) {
    if (k == v) {
      ++injections;
      return;
    }
    for (std::uint32_t x = 0; x < n; ++x) {
      if (taken[x]) continue;
      image[k] = x;
      bool ok = true;
      for (const auto& t : closing[k]) {
        if (!s.has_hyperedge(sorted_triple(image[t[0]], image[t[1]], image[t[2]]))) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      taken[x] = true;
      assign(k + 1);
      taken[x] = false;
    }
  };
  assign(0);
  return injections / motif.automorphisms();
}

std::uint64_t count_motif_by_subsets(const HypergraphSample& s, const Motif& motif) {
  if (motif.vertices() > s.n) throw Error(ErrorCode::MotifTooLarge, "motif larger than sample");
  std::vector<Triple> present;
  for (std::size_t t = 0; t < s.hyperedges.size(); ++t) {
    if (s.hyperedges[t]) present.push_back(triple_at(t));
  }
  const std::size_t e = motif.edges();
  if (present.size() < e) return 0;
  std::uint64_t total = 0;
  std::vector<std::size_t> pick(e);
  std::iota(pick.begin(), pick.end(), 0u);
  for (;;) {
    std::vector<std::uint32_t> verts;
    std::vector<Triple> chosen;
    for (auto i : pick) {
      chosen.push_back(present[i]);
      verts.insert(verts.end(), present[i].begin(), present[i].end());
    }
    std::sort(verts.begin(), verts.end());
    verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
    if (verts.size() == motif.vertices()) {
      std::sort(chosen.begin(), chosen.end());
      std::vector<std::uint32_t> perm(verts);
      do {
        if (relabel(motif.hyperedges(), perm) == chosen) {
          ++total;
          break;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    // next e-combination of present.size()
    std::size_t i = e;
    while (i > 0 && pick[i - 1] == present.size() - e + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < e; ++j) pick[j] = pick[j - 1] + 1;
  }
  return total;
}

double conditional_mean_count(const HypergraphSample& s, const Motif& motif, double p) {
  return MotifPlacements(motif, s.n).conditional_mean(s, p);
}

double placement_count(const Motif& motif, std::size_t n) {
  if (motif.vertices() > n) return 0.0;
  double falling = 1.0;
  for (std::size_t k = 0; k < motif.vertices(); ++k) falling *= static_cast<double>(n - k);
  return falling / static_cast<double>(motif.automorphisms());
}

double expected_count(const Motif& motif, std::size_t n, double p, double q) {
  return placement_count(motif, n) * std::pow(p, static_cast<double>(motif.edges())) *
         std::pow(q, static_cast<double>(motif.covered_pairs()));
}

MotifMoments exact_count_moments(const MotifPlacements& placements, double p, double q) {
  const double e = static_cast<double>(placements.motif().edges());
  const double e2 = static_cast<double>(placements.motif().covered_pairs());
  MotifMoments m;
  m.mean = static_cast<double>(placements.size()) * std::pow(p, e) * std::pow(q, e2);
  const double p2e = std::pow(p, 2.0 * e);
  const double q2e2 = std::pow(q, 2.0 * e2);
  for (std::size_t h = 0; h < placements.size(); ++h) {
    for (std::size_t g = 0; g < placements.size(); ++g) {
      const std::size_t shared_pairs = intersection_size(placements.pairs(h), placements.pairs(g));
      if (shared_pairs == 0) continue;
      const double union_edges = 2.0 * e - static_cast<double>(intersection_size(placements.hyperedges(h), placements.hyperedges(g)));
      const double qu = std::pow(q, 2.0 * e2 - static_cast<double>(shared_pairs));
      const double pu = std::pow(p, union_edges);
      m.variance += pu * qu - p2e * q2e2;
      m.conditional_variance += (pu - p2e) * qu;
    }
  }
  return m;
}

MotifCountStat motif_count_stat(const HypergraphSample& s, const MotifPlacements& placements, double p, double q) {
  MotifCountStat st;
  st.raw = placements.count(s);
  st.mean = expected_count(placements.motif(), s.n, p, q);
  st.conditional_mean = placements.conditional_mean(s, p);
  return st;
}

double MotifDecomposition::plain_sum() const {
  double total = 0.0;
  for (const auto& t : terms) total += t.value;
  return total;
}

double MotifDecomposition::modified_sum() const {
  double total = 0.0;
  for (const auto& t : first) total += t.value;
  for (const auto& t : second) total += t.value;
  for (const auto& t : third) total += t.value;
  return total;
}

double MotifDecomposition::plain_residual() const {
  return std::abs(plain_sum() - (count - conditional_mean));
}

double MotifDecomposition::modified_residual() const { return std::abs(modified_sum() - (count - mean)); }

MotifDecomposition hoeffding_terms(const HypergraphSample& s, const MotifPlacements& placements, double p, double q,
                                   std::size_t cap) {
  if (s.n != placements.n()) throw Error(ErrorCode::MismatchedModel, "sample size differs from placement size");
  check_probability(p, "p");
  check_probability(q, "q");
  const Motif& motif = placements.motif();
  const std::size_t e = motif.edges();
  const std::size_t e2 = motif.covered_pairs();

  // pairs covered by each subset of the motif's hyperedges; same for every copy
  const std::size_t subsets = std::size_t{1} << e;
  std::vector<std::size_t> covered(subsets, 0);
  std::size_t per_copy = (subsets - 1) + ((std::size_t{1} << e2) - 1);
  for (std::size_t mask = 1; mask < subsets; ++mask) {
    std::vector<Triple> chosen;
    for (std::size_t i = 0; i < e; ++i) {
      if (mask >> i & 1) chosen.push_back(motif.hyperedges()[i]);
    }
    covered[mask] = count_pairs(chosen);
    per_copy += std::size_t{1} << (e2 - covered[mask]);
  }
  const double total = static_cast<double>(per_copy) * static_cast<double>(placements.size());
  if (e2 >= 40 || total > static_cast<double>(cap)) {
    throw Error(ErrorCode::DecompositionTooLarge,
                std::to_string(static_cast<std::uint64_t>(total)) + " subsets exceed the cap of " + std::to_string(cap));
  }

  MotifDecomposition out;
  out.count = placements.count(s);
  out.conditional_mean = placements.conditional_mean(s, p);
  out.mean = expected_count(motif, s.n, p, q);
  out.enumerated = static_cast<std::size_t>(total);

  auto y = [&](std::uint32_t t) { return static_cast<double>(s.hyperedges[t]) - (s.supported(t) ? p : 0.0); };
  auto yhat = [&](std::uint32_t b) { return static_cast<double>(s.latent[b]) - q; };

  struct Acc {
    double weight = 0.0;
    double copies = 0.0;
    double third = 0.0;
    std::size_t covered = 0;
  };
  std::map<HyperedgeSet, Acc> by_j;
  std::map<PairSet, double> by_k;

  std::vector<double> ppow(e + 1), qpow(e2 + 1);
  for (std::size_t k = 0; k <= e; ++k) ppow[k] = std::pow(p, static_cast<double>(k));
  for (std::size_t k = 0; k <= e2; ++k) qpow[k] = std::pow(q, static_cast<double>(k));

  for (std::size_t h = 0; h < placements.size(); ++h) {
    const auto& copy = placements.hyperedges(h);
    const auto& pairs = placements.pairs(h);
    std::vector<bool> supported(e);
    for (std::size_t i = 0; i < e; ++i) supported[i] = s.supported(copy[i]);

    for (std::size_t mask = 1; mask < subsets; ++mask) {
      HyperedgeSet j;
      bool rest_supported = true;
      std::vector<std::uint32_t> j_pairs;
      for (std::size_t i = 0; i < e; ++i) {
        if (mask >> i & 1) {
          j.push_back(copy[i]);
          auto tp = triple_pairs(triple_at(copy[i]));
          j_pairs.insert(j_pairs.end(), tp.begin(), tp.end());
        } else if (!supported[i]) {
          rest_supported = false;
        }
      }
      std::sort(j_pairs.begin(), j_pairs.end());
      j_pairs.erase(std::unique(j_pairs.begin(), j_pairs.end()), j_pairs.end());
      std::vector<std::uint32_t> rest;
      std::set_difference(pairs.begin(), pairs.end(), j_pairs.begin(), j_pairs.end(), std::back_inserter(rest));

      const std::size_t size_j = j.size();
      Acc& acc = by_j[j];
      acc.covered = j_pairs.size();
      if (rest_supported) acc.weight += ppow[e - size_j];
      acc.copies += 1.0;
      // sum over nonempty K within the uncovered pairs of q^{|rest| - |K|} prod_K Yhat
      double expansion = 0.0;
      for (std::size_t kmask = 1; kmask < (std::size_t{1} << rest.size()); ++kmask) {
        double term = 1.0;
        std::size_t size_k = 0;
        for (std::size_t i = 0; i < rest.size(); ++i) {
          if (kmask >> i & 1) {
            term *= yhat(rest[i]);
            ++size_k;
          }
        }
        expansion += qpow[rest.size() - size_k] * term;
      }
      acc.third += ppow[e - size_j] * expansion;
    }

    for (std::size_t kmask = 1; kmask < (std::size_t{1} << pairs.size()); ++kmask) {
      PairSet k;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (kmask >> i & 1) k.push_back(pairs[i]);
      }
      by_k[k] += ppow[e] * qpow[e2 - k.size()];
    }
  }

  out.terms.reserve(by_j.size());
  out.first.reserve(by_j.size());
  out.third.reserve(by_j.size());
  for (const auto& [j, acc] : by_j) {
    double prod = 1.0;
    for (auto t : j) prod *= y(t);
    out.terms.push_back({j, acc.weight, acc.weight * prod});
    const double w1 = ppow[e - j.size()] * qpow[e2 - acc.covered] * acc.copies;
    out.first.push_back({j, w1, w1 * prod});
    out.third.push_back({j, acc.third, acc.third * prod});
  }
  out.second.reserve(by_k.size());
  for (const auto& [k, w] : by_k) {
    double prod = 1.0;
    for (auto b : k) prod *= yhat(b);
    out.second.push_back({k, w, w * prod});
  }
  return out;
}

nlohmann::json RateResult::to_json() const {
  return {{"rate", value}, {"min_n_v_p_e_q_e2", exponent_base}, {"argmin", {{"v", v}, {"e", e}, {"e2", e2}}},
          {"family", relaxed ? "e_H >= 1 (relaxed: motif has one hyperedge)" : "e_H > 1 plus H = G"}};
}

RateResult rate(const Motif& motif, std::size_t n, double p, double q, RateFamily family) {
  if (motif.vertices() > n) throw Error(ErrorCode::MotifTooLarge, "n smaller than motif vertex count");
  if (!(p > 0.0 && p <= 1.0) || !(q > 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "rate needs p, q in (0,1]");
  }
  const std::size_t e = motif.edges();
  if (e > kMaxRateEdges) throw Error(ErrorCode::SizeCapExceeded, "too many hyperedges for subset enumeration");
  const std::size_t full = (std::size_t{1} << e) - 1;
  RateResult best;
  double best_log = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < e; ++i) {
      if (mask >> i & 1) ids.push_back(i);
    }
    const bool admissible = ids.size() > 1 || (family == RateFamily::Relaxed && mask == full);
    if (!admissible) continue;
    Motif sub = motif.restrict_to(ids);
    const double lg = static_cast<double>(sub.vertices()) * std::log(static_cast<double>(n)) +
                      static_cast<double>(sub.edges()) * std::log(p) +
                      static_cast<double>(sub.covered_pairs()) * std::log(q);
    if (lg < best_log) {
      best_log = lg;
      best.v = sub.vertices();
      best.e = sub.edges();
      best.e2 = sub.covered_pairs();
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::EmptyFamily, "no sub-hypergraph with more than one hyperedge");
  best.relaxed = e == 1;
  best.exponent_base = std::exp(best_log);
  best.value = std::exp(-0.5 * best_log);
  return best;
}

std::vector<MotifCltRow> clt_experiment(const Motif& motif, const std::vector<MotifScheduleEntry>& schedule,
                                        const MotifCltConfig& config) {
  if (config.samples < 2) throw Error(ErrorCode::InvalidArgument, "samples must be >= 2");
  if (config.model == HypergraphModel::Sbm) {
    throw Error(ErrorCode::InvalidArgument, "the SBM preset is a generator only");
  }
  constexpr std::size_t kBlock = 1024;
  constexpr std::size_t kMinMcSamples = 10000;
  RandomStream root(config.seed);
  std::vector<MotifCltRow> rows;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto& entry = schedule[k];
    check_probability(entry.p, "p");
    const double q = config.model == HypergraphModel::G3 ? 1.0 : entry.q;
    check_probability(q, "q");
    MotifPlacements placements(motif, entry.n);
    const double work = static_cast<double>(config.samples) *
                        static_cast<double>(triple_count(entry.n) + placements.size() * motif.edges());
    if (work > config.budget) {
      throw Error(ErrorCode::BudgetExceeded, "n = " + std::to_string(entry.n) + " needs " + format_double(work) +
                                                 " operations, budget is " + format_double(config.budget));
    }
    const bool exact = entry.n <= config.exact_variance_max_n;
    if (!exact && config.samples < kMinMcSamples) {
      throw Error(ErrorCode::InvalidArgument, "variance estimate needs >= 10000 samples");
    }
    const double mean = expected_count(motif, entry.n, entry.p, q);

    RandomStream stream = root.split(k);
    std::vector<double> raw(config.samples), centered(config.samples);
    const std::size_t blocks = (config.samples + kBlock - 1) / kBlock;
    parallel_for_blocks(blocks, config.workers, [&](std::size_t b) {
      RandomStream rng = stream.split(b);
      const std::size_t end = std::min(config.samples, (b + 1) * kBlock);
      for (std::size_t i = b * kBlock; i < end; ++i) {
        HypergraphSample s = config.model == HypergraphModel::G3 ? gen_g3(entry.n, entry.p, rng)
                                                                 : gen_t3(entry.n, q, entry.p, rng);
        raw[i] = placements.count(s);
        const double center =
            config.centering == Centering::Unconditional ? mean : placements.conditional_mean(s, entry.p);
        centered[i] = raw[i] - center;
      }
    });

    MotifCltRow row;
    row.motif_id = motif.id();
    row.n = entry.n;
    row.p = entry.p;
    row.q = q;
    row.samples = config.samples;
    row.seed = config.seed;
    row.mean = std::accumulate(raw.begin(), raw.end(), 0.0) / static_cast<double>(config.samples);
    row.exact_variance = exact;
    if (exact) {
      auto m = exact_count_moments(placements, entry.p, q);
      row.var = config.centering == Centering::Unconditional ? m.variance : m.conditional_variance;
    } else {
      double ss = 0.0;
      for (double c : centered) ss += c * c;
      row.var = ss / static_cast<double>(config.samples);
    }
    if (!(row.var > 1e-12 * std::max(1.0, mean * mean))) {
      throw Error(ErrorCode::ZeroVariance, "statistic is a.s. constant at n = " + std::to_string(entry.n) +
                                               ", p = " + format_double(entry.p));
    }
    const double scale = 1.0 / std::sqrt(row.var);
    for (auto& c : centered) c *= scale;
    row.dw_empirical = w1_to_std_normal(EmpiricalDistribution::from_samples(std::move(centered)));
    auto r = rate(motif, entry.n, entry.p, q);
    row.rate = r.value;
    row.rate_relaxed = r.relaxed;
    row.ratio = row.dw_empirical / row.rate;
    rows.push_back(row);
  }
  return rows;
}

std::string to_csv_line(const MotifCltRow& row) {
  std::ostringstream os;
  os << row.motif_id << ',' << row.n << ',' << format_double(row.p) << ',' << format_double(row.q) << ','
     << row.samples << ',' << row.seed << ',' << format_double(row.mean) << ',' << format_double(row.var) << ','
     << format_double(row.dw_empirical) << ',' << format_double(row.rate) << ',' << format_double(row.ratio);
  return os.str();
}

nlohmann::json to_json(const MotifCltRow& row) {
  return {{"motif_id", row.motif_id}, {"n", row.n},
          {"p", row.p},               {"q", row.q},
          {"samples", row.samples},   {"seed", row.seed},
          {"mean", row.mean},         {"var", row.var},
          {"dw_empirical", row.dw_empirical}, {"rate", row.rate},
          {"ratio", row.ratio},       {"exact_variance", row.exact_variance},
          {"rate_relaxed", row.rate_relaxed}};
}

}  // namespace condmall
