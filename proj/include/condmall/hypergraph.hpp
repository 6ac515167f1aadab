#ifndef CONDMALL_HYPERGRAPH_HPP
#define CONDMALL_HYPERGRAPH_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "condmall/random.hpp"

namespace condmall {

// Vertices a < b < c.
using Triple = std::array<std::uint32_t, 3>;

// Colex ranks: pair {a < b} -> a + C(b, 2), triple {a < b < c} -> a + C(b, 2) + C(c, 3).
inline std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }
inline std::size_t triple_count(std::size_t n) { return n < 3 ? 0 : n * (n - 1) * (n - 2) / 6; }
inline std::size_t pair_index(std::size_t a, std::size_t b) { return a + b * (b - 1) / 2; }
inline std::size_t triple_index(std::size_t a, std::size_t b, std::size_t c) {
  return a + b * (b - 1) / 2 + c * (c - 1) * (c - 2) / 6;
}
inline std::size_t triple_index(const Triple& t) { return triple_index(t[0], t[1], t[2]); }
Triple triple_at(std::size_t index);

// A 3-uniform hypergraph on vertices 0..v-1 with no isolated vertex.
class Motif {
 public:
  Motif(std::size_t vertices, std::vector<Triple> hyperedges, std::string id = "custom");

  // {"vertices": k, "hyperedges": [[a, b, c], ...]} with 0-based labels,
  // optional "id".
  static Motif from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const std::string& id() const { return id_; }
  std::size_t vertices() const { return vertices_; }
  std::size_t edges() const { return hyperedges_.size(); }
  std::size_t covered_pairs() const { return covered_pairs_; }
  std::size_t automorphisms() const { return automorphisms_; }
  const std::vector<Triple>& hyperedges() const { return hyperedges_; }

  // Sub-hypergraph spanned by the listed hyperedges, vertices relabelled.
  Motif restrict_to(const std::vector<std::size_t>& hyperedge_ids) const;

 private:
  std::string id_;
  std::size_t vertices_;
  std::vector<Triple> hyperedges_;
  std::size_t covered_pairs_ = 0;
  std::size_t automorphisms_ = 1;
};

// single, shared-vertex, shared-pair, triangle.
std::vector<Motif> motif_library();
Motif library_motif(std::string_view id);

enum class HypergraphModel { G3, T3, Sbm };

std::string_view to_string(HypergraphModel m);
HypergraphModel hypergraph_model_from_string(std::string_view s);

struct HypergraphSample {
  std::size_t n = 0;
  HypergraphModel model = HypergraphModel::G3;
  double p = 0.0;
  double q = 1.0;  // NaN for Sbm
  std::vector<std::uint8_t> latent;      // by pair index
  std::vector<std::uint8_t> hyperedges;  // by triple index

  bool has_pair(std::size_t a, std::size_t b) const;
  bool has_hyperedge(const Triple& t) const { return hyperedges[triple_index(t)] != 0; }
  bool supported(std::size_t triple) const;  // all three pairs in the latent graph
  std::size_t hyperedge_count() const;
};

HypergraphSample gen_g3(std::size_t n, double p, RandomStream& rng);
HypergraphSample gen_t3(std::size_t n, double q, double p, RandomStream& rng);

// Keeps the latent graph and redraws every hyperedge coin.
HypergraphSample gen_from_latent(std::size_t n, std::vector<std::uint8_t> latent, double p, RandomStream& rng,
                                 HypergraphModel model = HypergraphModel::T3, double q = 1.0);

// Latent graph where pair {a, b} is present with probability probs(block[a], block[b]).
std::vector<std::uint8_t> sbm_latent(const std::vector<std::size_t>& block, const Eigen::MatrixXd& probs,
                                     RandomStream& rng);
HypergraphSample gen_sbm(const std::vector<std::size_t>& block, const Eigen::MatrixXd& probs, double p,
                         RandomStream& rng);

// Copies of a motif inside the complete 3-uniform hypergraph on n vertices.
class MotifPlacements {
 public:
  MotifPlacements(const Motif& motif, std::size_t n);

  const Motif& motif() const { return motif_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return hyperedges_.size(); }
  // sorted triple indices of copy h
  const std::vector<std::uint32_t>& hyperedges(std::size_t h) const { return hyperedges_[h]; }
  // sorted pair indices covered by copy h
  const std::vector<std::uint32_t>& pairs(std::size_t h) const { return pairs_[h]; }

  double count(const HypergraphSample& s) const;
  double conditional_mean(const HypergraphSample& s, double p) const;

 private:
  Motif motif_;
  std::size_t n_;
  std::vector<std::vector<std::uint32_t>> hyperedges_;
  std::vector<std::vector<std::uint32_t>> pairs_;
};

// Labelled injections of motif vertices whose image hyperedges are all present,
// divided by |Aut|. Throws MotifTooLarge when v > n.
std::uint64_t count_motif(const HypergraphSample& s, const Motif& motif);

// Enumerates e-subsets of present hyperedges and tests each for isomorphism.
std::uint64_t count_motif_by_subsets(const HypergraphSample& s, const Motif& motif);

// sum over copies H of p^e 1{H^(2) in Z}.
double conditional_mean_count(const HypergraphSample& s, const Motif& motif, double p);

// n (n-1) ... (n-v+1) / |Aut|
double placement_count(const Motif& motif, std::size_t n);

// (#copies) p^e q^e2
double expected_count(const Motif& motif, std::size_t n, double p, double q);

struct MotifMoments {
  double mean = 0.0;
  double variance = 0.0;              // Var N_G
  double conditional_variance = 0.0;  // E Var(N_G | Z)
};

// Exact, from E[prod_{H u H'} X] = p^{|H u H'|} q^{|(H u H')^(2)|}; quadratic in
// the number of copies.
MotifMoments exact_count_moments(const MotifPlacements& placements, double p, double q);

struct MotifCountStat {
  double raw = 0.0;
  double mean = 0.0;              // E N_G
  double conditional_mean = 0.0;  // E[N_G | Z] for the sample's own Z
  double bar() const { return raw - mean; }
  double tilde() const { return raw - conditional_mean; }
};

MotifCountStat motif_count_stat(const HypergraphSample& s, const MotifPlacements& placements, double p, double q);

using HyperedgeSet = std::vector<std::uint32_t>;  // sorted triple indices
using PairSet = std::vector<std::uint32_t>;       // sorted pair indices

// W_J = w_J prod_{alpha in J} Y_alpha, Y_alpha = X_alpha - p 1{alpha^(2) in Z}.
struct MotifHoeffdingTerm {
  HyperedgeSet support;
  double weight = 0.0;
  double value = 0.0;
};

struct MotifEdgeTerm {
  PairSet support;
  double weight = 0.0;
  double value = 0.0;
};

inline constexpr std::size_t kDecompositionCap = 1000000;

struct MotifDecomposition {
  double count = 0.0;
  double conditional_mean = 0.0;
  double mean = 0.0;
  std::vector<MotifHoeffdingTerm> terms;   // plain terms, N_G - E[N_G|Z]
  std::vector<MotifHoeffdingTerm> first;   // W^[1]_J, hyperedge noise at frozen latent means
  std::vector<MotifEdgeTerm> second;       // W^[2]_K, latent edge noise Yhat_beta = Xhat_beta - q
  std::vector<MotifHoeffdingTerm> third;   // W^[3]_J, hyperedge noise times latent noise
  std::size_t enumerated = 0;

  double plain_sum() const;
  double modified_sum() const;
  double plain_residual() const;     // |sum W_J - (N - E[N|Z])|
  double modified_residual() const;  // |sum (W^[1] + W^[2] + W^[3]) - (N - E N)|
};

// Throws DecompositionTooLarge when more than `cap` subsets would be enumerated.
MotifDecomposition hoeffding_terms(const HypergraphSample& s, const MotifPlacements& placements, double p, double q,
                                   std::size_t cap = kDecompositionCap);

enum class RateFamily { Relaxed, Strict };

struct RateResult {
  double value = 0.0;
  double exponent_base = 0.0;  // min n^v p^e q^e2
  std::size_t v = 0, e = 0, e2 = 0;
  bool relaxed = false;  // the single-hyperedge family was empty and H = G was used

  nlohmann::json to_json() const;
};

// (min over H in G with e_H > 1, and H = G, of n^v p^e q^e2)^{-1/2}. Strict
// drops H = G when e_G = 1 and throws EmptyFamily.
RateResult rate(const Motif& motif, std::size_t n, double p, double q, RateFamily family = RateFamily::Relaxed);

struct MotifScheduleEntry {
  std::size_t n = 0;
  double p = 0.0;
  double q = 1.0;
};

enum class Centering { Unconditional, Conditional };

struct MotifCltConfig {
  HypergraphModel model = HypergraphModel::G3;
  Centering centering = Centering::Unconditional;
  std::size_t samples = 20000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  double budget = 2e10;  // samples * (triples + copies) per schedule entry
  std::size_t exact_variance_max_n = 8;
};

struct MotifCltRow {
  std::string motif_id;
  std::size_t n = 0;
  double p = 0.0;
  double q = 1.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;  // empirical mean of N_G
  double var = 0.0;   // variance used for standardization
  double dw_empirical = 0.0;
  double rate = 0.0;
  double ratio = 0.0;
  bool exact_variance = false;
  bool rate_relaxed = false;
};

std::vector<MotifCltRow> clt_experiment(const Motif& motif, const std::vector<MotifScheduleEntry>& schedule,
                                        const MotifCltConfig& config);

inline constexpr std::string_view kMotifCsvHeader = "motif_id,n,p,q,samples,seed,mean,var,dw_empirical,rate,ratio";
std::string to_csv_line(const MotifCltRow& row);
nlohmann::json to_json(const MotifCltRow& row);

}  // namespace condmall

#endif  // CONDMALL_HYPERGRAPH_HPP
