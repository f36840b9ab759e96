#include "activehne/query.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

namespace ahne {

namespace {

double row_entropy(const DenseMatrix& probs, std::size_t row) {
    double h = 0.0;
    for (std::size_t c = 0; c < probs.cols; ++c) {
        double p = probs(row, c);
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

double density(const DenseMatrix& embedding, const Clustering& clustering, std::size_t v) {
    double d = row_distance(embedding, v, clustering.centers,
                            static_cast<std::size_t>(clustering.assign[v]));
    return 1.0 / (1.0 + d);
}

}  // namespace

std::vector<double> score_nc(const HinGraph& g, const std::vector<std::uint32_t>& pool) {
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        scores[i] = static_cast<double>(degree_centrality(g, pool[i]));
    return scores;
}

std::vector<double> score_ie(const DenseMatrix& probs, const std::vector<std::uint32_t>& pool) {
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        scores[i] = row_entropy(probs, pool[i]);
    return scores;
}

std::vector<double> score_cie(const HinGraph& g, const NodeImportance& imp,
                              const DenseMatrix& probs, const std::vector<std::uint32_t>& pool) {
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        std::uint32_t v = pool[i];
        double s = imp.weight[v] * row_entropy(probs, v);
        for (std::uint32_t u : g.adjacency[v])
            s += imp.weight[u] * row_entropy(probs, u);
        scores[i] = s;
    }
    return scores;
}

Clustering kmeans(const DenseMatrix& points, std::size_t k, std::uint64_t seed,
                  std::size_t max_iters) {
    if (k == 0)
        throw ConfigError("kmeans: k must be positive");
    if (points.rows == 0)
        throw ConfigError("kmeans: no points");
    const std::size_t n = points.rows;
    const std::size_t dim = points.cols;
    std::mt19937_64 rng(seed);

    auto sq_dist = [&](std::size_t i, const DenseMatrix& centers, std::size_t c) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            double d = points(i, j) - centers(c, j);
            s += d * d;
        }
        return s;
    };

    // k-means++ seeding; when all remaining squared distances are zero the
    // farthest (lowest-index) point is taken, which covers k > distinct rows.
    Clustering cl;
    cl.centers = DenseMatrix(k, dim);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::size_t first = pick(rng);
        for (std::size_t j = 0; j < dim; ++j) cl.centers(0, j) = points(first, j);
    }
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(i, cl.centers, c - 1));
            total += d2[i];
        }
        std::size_t chosen = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> unit(0.0, total);
            double target = unit(rng);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc >= target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            chosen = static_cast<std::size_t>(
                std::max_element(d2.begin(), d2.end()) - d2.begin());
        }
        for (std::size_t j = 0; j < dim; ++j) cl.centers(c, j) = points(chosen, j);
    }

    cl.assign.assign(n, 0);
    std::vector<double> best(n);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int arg = 0;
            double bd = sq_dist(i, cl.centers, 0);
            for (std::size_t c = 1; c < k; ++c) {
                double d = sq_dist(i, cl.centers, c);
                if (d < bd) {
                    bd = d;
                    arg = static_cast<int>(c);
                }
            }
            if (arg != cl.assign[i]) changed = true;
            cl.assign[i] = arg;
            best[i] = bd;
        }
        if (!changed && iter > 0) break;

        DenseMatrix sums(k, dim);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[cl.assign[i]];
            for (std::size_t j = 0; j < dim; ++j)
                sums(cl.assign[i], j) += points(i, j);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] > 0) {
                for (std::size_t j = 0; j < dim; ++j)
                    cl.centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
            } else {
                // Re-seed emptied cluster on the farthest point.
                std::size_t far = static_cast<std::size_t>(
                    std::max_element(best.begin(), best.end()) - best.begin());
                for (std::size_t j = 0; j < dim; ++j) cl.centers(c, j) = points(far, j);
                best[far] = 0.0;
            }
        }
    }

    cl.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        int arg = 0;
        double bd = sq_dist(i, cl.centers, 0);
        for (std::size_t c = 1; c < k; ++c) {
            double d = sq_dist(i, cl.centers, c);
            if (d < bd) {
                bd = d;
                arg = static_cast<int>(c);
            }
        }
        cl.assign[i] = arg;
        cl.inertia += bd;
    }
    return cl;
}

std::vector<double> score_id(const DenseMatrix& embedding, const Clustering& clustering,
                             const std::vector<std::uint32_t>& pool) {
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
        scores[i] = density(embedding, clustering, pool[i]);
    return scores;
}

std::vector<double> score_cid(const HinGraph& g, const NodeImportance& imp,
                              const DenseMatrix& embedding, const Clustering& clustering,
                              const std::vector<std::uint32_t>& pool) {
    std::vector<double> scores(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        std::uint32_t v = pool[i];
        double s = imp.weight[v] * density(embedding, clustering, v);
        for (std::uint32_t u : g.adjacency[v])
            s += imp.weight[u] * density(embedding, clustering, u);
        scores[i] = s;
    }
    return scores;
}

CandidateSet top_b_candidates(const std::vector<double>& scores,
                              const std::vector<std::uint32_t>& pool, std::size_t b, int arm) {
    if (pool.empty())
        throw Error("top_b_candidates: empty pool");
    if (b == 0)
        throw ConfigError("top_b_candidates: b must be >= 1");
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t c) {
        if (scores[a] != scores[c]) return scores[a] > scores[c];
        return pool[a] < pool[c];
    });
    CandidateSet set;
    set.arm = arm;
    std::size_t take = std::min(b, pool.size());
    set.ranked.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        set.ranked.push_back({pool[order[i]], scores[order[i]]});
    return set;
}

double local_embedding_change(const HinGraph& g, const std::vector<std::uint32_t>& queried,
                              const DenseMatrix& current, const DenseMatrix& previous) {
    if (!current.same_shape(previous))
        throw Error("local_embedding_change: embedding shape mismatch");
    double delta = 0.0;
    for (std::uint32_t v : queried)
        for (std::uint32_t u : g.adjacency[v])
            delta += row_distance(current, u, previous, u);
    return delta;
}

std::vector<double> empirical_rewards(const std::vector<double>& deltas, double delta_union) {
    for (double d : deltas)
        if (d < 0.0)
            throw Error("empirical_rewards: negative change");
    if (delta_union < 0.0)
        throw Error("empirical_rewards: negative union change");
    std::vector<double> rewards(deltas.size());
    if (delta_union < 1e-12) {
        std::fill(rewards.begin(), rewards.end(), 1.0 / static_cast<double>(deltas.size()));
    } else {
        for (std::size_t i = 0; i < deltas.size(); ++i)
            rewards[i] = deltas[i] / delta_union;
    }
    return rewards;
}

double expected_reward(const BanditState& state, std::size_t arm, std::size_t r) {
    const auto& h = state.history[arm];
    double mu_bar;
    if (h.size() >= 2)
        mu_bar = 0.5 * (h[h.size() - 2] + h[h.size() - 1]);
    else if (h.size() == 1)
        mu_bar = h.back();
    else
        mu_bar = 1.0;  // unit initial reward
    std::size_t n = state.queried_count[arm];
    if (n == 0)
        return kForcedExplorationReward;
    return mu_bar + std::sqrt(3.0 * std::log(static_cast<double>(r)) /
                              (2.0 * static_cast<double>(n)));
}

BordaResult borda_select(const std::vector<CandidateSet>& candidates,
                         const std::vector<double>& mu_tilde, std::size_t b) {
    if (candidates.size() != mu_tilde.size())
        throw Error("borda_select: arm count mismatch");
    bool any = false;
    for (const auto& c : candidates) any = any || !c.ranked.empty();
    if (!any)
        throw Error("borda_select: all candidate sets empty");

    // Absent nodes get zero Borda points from that arm.
    std::unordered_map<std::uint32_t, double> score;
    for (std::size_t arm = 0; arm < candidates.size(); ++arm) {
        for (std::size_t i = 0; i < candidates[arm].ranked.size(); ++i) {
            double rank = static_cast<double>(i + 1);
            score[candidates[arm].ranked[i].node] +=
                mu_tilde[arm] * (static_cast<double>(b) - rank);
        }
    }
    std::vector<std::pair<std::uint32_t, double>> scored(score.begin(), score.end());
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& c) {
        if (a.second != c.second) return a.second > c.second;
        return a.first < c.first;
    });
    BordaResult result;
    std::size_t take = std::min(b, scored.size());
    for (std::size_t i = 0; i < take; ++i) result.batch.push_back(scored[i].first);
    std::set<std::uint32_t> chosen(result.batch.begin(), result.batch.end());
    result.per_arm.resize(candidates.size());
    for (std::size_t arm = 0; arm < candidates.size(); ++arm)
        for (const auto& cand : candidates[arm].ranked)
            if (chosen.contains(cand.node))
                result.per_arm[arm].push_back(cand.node);
    return result;
}

}  // namespace ahne
