#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "activehne/graph.hpp"
#include "activehne/matrix.hpp"

namespace ahne {

// Bandit arms, in fixed order.
enum class Arm : int { NetworkCentrality = 0, ConvInfoEntropy = 1, ConvInfoDensity = 2 };
inline constexpr std::size_t kNumArms = 3;

struct Candidate {
    std::uint32_t node;
    double score;
};

// An arm's ranked top-b pool nodes; index i holds rank i+1.
struct CandidateSet {
    int arm = 0;
    std::vector<Candidate> ranked;
};

// Scores are aligned with the pool vector.
std::vector<double> score_nc(const HinGraph& g, const std::vector<std::uint32_t>& pool);
std::vector<double> score_ie(const DenseMatrix& probs, const std::vector<std::uint32_t>& pool);
std::vector<double> score_cie(const HinGraph& g, const NodeImportance& imp,
                              const DenseMatrix& probs, const std::vector<std::uint32_t>& pool);

struct Clustering {
    DenseMatrix centers;      // k x dim
    std::vector<int> assign;  // per point
    double inertia = 0.0;
};

// k-means++ seeding followed by Lloyd iterations until the assignment
// reaches a fixpoint. Surplus or emptied centers are re-seeded on the
// farthest points.
Clustering kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                  std::size_t max_iters = 100);

std::vector<double> score_id(const DenseMatrix& embedding, const Clustering& clustering,
                             const std::vector<std::uint32_t>& pool);
std::vector<double> score_cid(const HinGraph& g, const NodeImportance& imp,
                              const DenseMatrix& embedding, const Clustering& clustering,
                              const std::vector<std::uint32_t>& pool);

// Top-b pool nodes by score, ties broken by ascending node id.
CandidateSet top_b_candidates(const std::vector<double>& scores,
                              const std::vector<std::uint32_t>& pool, std::size_t b, int arm);

// Sum over queried nodes of the embedding displacement of their
// neighbors; a neighbor reachable from two queried nodes counts twice.
double local_embedding_change(const HinGraph& g, const std::vector<std::uint32_t>& queried,
                              const DenseMatrix& current, const DenseMatrix& previous);

// Normalizes per-arm changes by the union change; degenerates to the
// uniform vector when the union change vanishes.
std::vector<double> empirical_rewards(const std::vector<double>& deltas, double delta_union);

struct BanditState {
    std::size_t num_arms = kNumArms;
    std::vector<std::vector<double>> history;  // per arm, one entry per completed reward
    std::vector<std::size_t> queried_count;    // n_lambda
    std::size_t iteration = 0;                 // r, completed iterations

    BanditState() : history(kNumArms), queried_count(kNumArms, 0) {}
};

// mu_tilde for one arm at (1-based) iteration r: two-step reward average
// plus the UCB bonus sqrt(3 ln r / (2 n)). Unexplored arms are forced
// with a large constant.
double expected_reward(const BanditState& state, std::size_t arm, std::size_t r);

inline constexpr double kForcedExplorationReward = 1e6;

struct BordaResult {
    std::vector<std::uint32_t> batch;                    // Q_r, sorted by score then id
    std::vector<std::vector<std::uint32_t>> per_arm;     // Q_r^lambda
};

// Weighted Borda count over the union of candidate sets.
BordaResult borda_select(const std::vector<CandidateSet>& candidates,
                         const std::vector<double>& mu_tilde, std::size_t b);

}  // namespace ahne
