#include "activehne/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <random>

namespace ahne {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void remove_from_pool(std::vector<std::uint32_t>& pool, const std::vector<std::uint32_t>& taken) {
    for (std::uint32_t v : taken)
        pool.erase(std::remove(pool.begin(), pool.end(), v), pool.end());
}

std::vector<std::uint32_t> candidate_nodes(const CandidateSet& set) {
    std::vector<std::uint32_t> nodes;
    nodes.reserve(set.ranked.size());
    for (const auto& c : set.ranked) nodes.push_back(c.node);
    return nodes;
}

nlohmann::json candidates_json(const CandidateSet& set) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : set.ranked)
        arr.push_back({{"node", c.node}, {"score", c.score}});
    return arr;
}

}  // namespace

Strategy strategy_from_string(const std::string& s) {
    if (s == "full") return Strategy::Full;
    if (s == "nc-only") return Strategy::NcOnly;
    if (s == "cie-only") return Strategy::CieOnly;
    if (s == "ie-only") return Strategy::IeOnly;
    if (s == "cid-only") return Strategy::CidOnly;
    if (s == "id-only") return Strategy::IdOnly;
    if (s == "random") return Strategy::Random;
    throw ConfigError("unknown strategy: " + s);
}

std::string strategy_to_string(Strategy s) {
    switch (s) {
        case Strategy::Full: return "full";
        case Strategy::NcOnly: return "nc-only";
        case Strategy::CieOnly: return "cie-only";
        case Strategy::IeOnly: return "ie-only";
        case Strategy::CidOnly: return "cid-only";
        case Strategy::IdOnly: return "id-only";
        case Strategy::Random: return "random";
    }
    throw ConfigError("unknown strategy value");
}

void LoopConfig::validate() const {
    if (batch < 1) throw ConfigError("LoopConfig: batch size must be >= 1");
    if (iterations < 1) throw ConfigError("LoopConfig: iteration budget must be >= 1");
    model.validate();
}

Split split_dataset(const HinGraph& g, std::uint64_t seed) {
    std::vector<std::uint32_t> labeled;
    for (std::uint32_t v = 0; v < g.num_nodes; ++v)
        if (g.label[v] >= 0) labeled.push_back(v);
    if (labeled.size() < 4)
        throw DataError("split_dataset: fewer than 4 labeled nodes");
    std::mt19937_64 rng(mix64(seed ^ 0x5b1e7));
    std::shuffle(labeled.begin(), labeled.end(), rng);
    Split split;
    std::size_t quarter = labeled.size() / 4;
    split.pool.assign(labeled.begin(), labeled.begin() + quarter);
    split.validation.assign(labeled.begin() + quarter, labeled.begin() + 2 * quarter);
    split.test.assign(labeled.begin() + 2 * quarter, labeled.end());
    std::sort(split.pool.begin(), split.pool.end());
    std::sort(split.validation.begin(), split.validation.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

int Oracle::query(std::uint32_t v) {
    if (v >= graph_->num_nodes)
        throw DataError("oracle: node out of range");
    if (graph_->label[v] < 0)
        throw DataError("oracle: queried node has no ground-truth label");
    if (queried_.empty()) queried_.resize(graph_->num_nodes, false);
    if (queried_[v])
        throw DataError("oracle: node already queried");
    queried_[v] = true;
    ++cost_;
    return graph_->label[v];
}

double evaluate_accuracy(const DenseMatrix& probs, const std::vector<std::uint32_t>& test,
                         const std::vector<int>& labels) {
    if (test.empty())
        throw Error("evaluate_accuracy: empty test set");
    std::vector<int> pred = predict(probs);
    std::size_t correct = 0;
    for (std::uint32_t v : test)
        if (pred[v] == labels[v]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

LoopResult run_active_loop(const HinGraph& g, const LoopConfig& cfg) {
    cfg.validate();
    const std::size_t b = cfg.batch;
    std::vector<SubNetwork> subnets = decompose(g, cfg.model.add_self_loops);
    if (subnets.empty())
        throw DataError("run_active_loop: graph has no edges");
    Split split = split_dataset(g, cfg.seed);
    std::vector<std::uint32_t> pool = split.pool;
    std::vector<std::uint32_t> labeled;
    NodeImportance imp = node_importance(g);
    Oracle oracle(g);

    DhneConfig mcfg = cfg.model;
    mcfg.seed = mix64(cfg.seed ^ 0xd1f7);
    DhneModel model = init_model(mcfg, subnets, g.feature_dim(), g.num_classes);

    BanditState bandit;
    std::vector<std::uint32_t> pending_batch;
    std::vector<std::vector<std::uint32_t>> pending_per_arm(kNumArms);
    bool have_pending = false;

    std::optional<ForwardResult> last_out;   // model output after previous retrain
    std::optional<Clustering> last_cluster;  // clustering of previous embedding
    DenseMatrix prev_embedding;
    bool have_prev_embedding = false;

    std::mt19937_64 random_rng(mix64(cfg.seed ^ 0x7a11));

    LoopResult result;
    for (std::size_t r = 1; r <= cfg.iterations && !pool.empty(); ++r) {
        auto started = std::chrono::steady_clock::now();

        // Select the batch for this iteration.
        std::vector<std::uint32_t> batch;
        std::vector<std::vector<std::uint32_t>> per_arm(kNumArms);
        if (cfg.strategy == Strategy::Random) {
            std::vector<std::uint32_t> shuffled = pool;
            std::shuffle(shuffled.begin(), shuffled.end(), random_rng);
            shuffled.resize(std::min(b, shuffled.size()));
            batch = std::move(shuffled);
        } else if (r == 1) {
            // Zero-start: centrality bootstraps the empty labeled set.
            batch = candidate_nodes(top_b_candidates(score_nc(g, pool), pool, b, 0));
        } else if (cfg.strategy == Strategy::Full) {
            batch = pending_batch;
            per_arm = pending_per_arm;
            have_pending = false;
        } else {
            const ForwardResult& out = *last_out;
            std::vector<double> scores;
            switch (cfg.strategy) {
                case Strategy::NcOnly: scores = score_nc(g, pool); break;
                case Strategy::CieOnly: scores = score_cie(g, imp, out.probs, pool); break;
                case Strategy::IeOnly: scores = score_ie(out.probs, pool); break;
                case Strategy::CidOnly:
                    scores = score_cid(g, imp, out.embedding, *last_cluster, pool);
                    break;
                case Strategy::IdOnly:
                    scores = score_id(out.embedding, *last_cluster, pool);
                    break;
                default: break;
            }
            batch = candidate_nodes(top_b_candidates(scores, pool, b, 0));
        }

        if (cfg.strategy == Strategy::Full && r >= 2)
            for (std::size_t arm = 0; arm < kNumArms; ++arm)
                bandit.queried_count[arm] += per_arm[arm].size();

        for (std::uint32_t v : batch) oracle.query(v);
        labeled.insert(labeled.end(), batch.begin(), batch.end());
        std::sort(labeled.begin(), labeled.end());
        remove_from_pool(pool, batch);

        // Retrain; warm start continues from the current weights.
        if (cfg.retrain == RetrainMode::Cold) {
            DhneConfig fresh = mcfg;
            fresh.seed = mix64(mcfg.seed ^ (r * 0x9e37ULL));
            model = init_model(fresh, subnets, g.feature_dim(), g.num_classes);
        }
        TrainResult tr = train(model, g, subnets, labeled, split.validation);

        IterationRecord rec;
        rec.r = r;
        rec.queried = batch;
        rec.num_labeled = labeled.size();
        rec.test_accuracy = evaluate_accuracy(tr.output.probs, split.test, g.label);
        rec.train_loss = loss(tr.output.probs, g.label, labeled, model, model.cfg.l2);

        nlohmann::json audit;
        audit["r"] = r;
        audit["strategy"] = strategy_to_string(cfg.strategy);
        audit["queried"] = batch;
        audit["num_labeled"] = labeled.size();

        // Empirical rewards for the batch just revealed (full strategy,
        // needs the previous embedding snapshot).
        if (cfg.strategy == Strategy::Full && r >= 2 && have_prev_embedding) {
            std::vector<double> deltas(kNumArms);
            for (std::size_t arm = 0; arm < kNumArms; ++arm)
                deltas[arm] =
                    local_embedding_change(g, per_arm[arm], tr.output.embedding, prev_embedding);
            double delta_union =
                local_embedding_change(g, batch, tr.output.embedding, prev_embedding);
            std::vector<double> rewards = empirical_rewards(deltas, delta_union);
            for (std::size_t arm = 0; arm < kNumArms; ++arm) {
                bandit.history[arm].push_back(rewards[arm]);
                rec.rewards[arm] = rewards[arm];
            }
            rec.rewards_valid = true;
            audit["delta"] = deltas;
            audit["delta_union"] = delta_union;
            audit["empirical_reward"] = rewards;
            audit["per_arm_queried"] = per_arm;
        }
        bandit.iteration = r;
        audit["n_lambda"] = bandit.queried_count;
        audit["test_accuracy"] = rec.test_accuracy;

        // Candidate sets and the next batch come from the fresh model.
        if (cfg.strategy == Strategy::Full && r < cfg.iterations && !pool.empty()) {
            Clustering cluster =
                kmeans(tr.output.embedding, g.num_classes, mix64(cfg.seed ^ (r * 0xC1ULL)));
            std::vector<CandidateSet> cands;
            cands.push_back(top_b_candidates(score_nc(g, pool), pool, b,
                                             static_cast<int>(Arm::NetworkCentrality)));
            cands.push_back(top_b_candidates(score_cie(g, imp, tr.output.probs, pool), pool, b,
                                             static_cast<int>(Arm::ConvInfoEntropy)));
            cands.push_back(top_b_candidates(score_cid(g, imp, tr.output.embedding, cluster, pool),
                                             pool, b, static_cast<int>(Arm::ConvInfoDensity)));
            std::vector<double> mu_tilde(kNumArms);
            nlohmann::json cand_json = nlohmann::json::array();
            for (std::size_t arm = 0; arm < kNumArms; ++arm) {
                mu_tilde[arm] = expected_reward(bandit, arm, r + 1);
                cand_json.push_back(candidates_json(cands[arm]));
            }
            BordaResult selection = borda_select(cands, mu_tilde, b);
            pending_batch = selection.batch;
            pending_per_arm = selection.per_arm;
            have_pending = true;
            audit["candidates"] = std::move(cand_json);
            audit["mu_tilde"] = mu_tilde;
            audit["next_batch"] = pending_batch;
        }
        (void)have_pending;

        prev_embedding = tr.output.embedding;
        have_prev_embedding = true;
        if (cfg.strategy == Strategy::CidOnly || cfg.strategy == Strategy::IdOnly)
            last_cluster = kmeans(tr.output.embedding, g.num_classes,
                                  mix64(cfg.seed ^ (r * 0xC1ULL)));
        last_out = std::move(tr.output);

        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.records.push_back(std::move(rec));
        result.audit.push_back(std::move(audit));
    }
    return result;
}

RepeatedResult run_repeated(const HinGraph& g, const LoopConfig& cfg, std::size_t runs,
                            std::size_t parallel) {
    if (runs < 1)
        throw ConfigError("run_repeated: need at least one run");
    RepeatedResult result;
    result.runs.resize(runs);

    auto one = [&](std::size_t i) {
        LoopConfig rc = cfg;
        rc.seed = cfg.seed + i;
        return run_active_loop(g, rc);
    };
    if (parallel <= 1) {
        for (std::size_t i = 0; i < runs; ++i) result.runs[i] = one(i);
    } else {
        std::vector<std::future<LoopResult>> futures(runs);
        std::size_t next = 0;
        while (next < runs) {
            std::size_t count = std::min(parallel, runs - next);
            for (std::size_t i = 0; i < count; ++i)
                futures[next + i] = std::async(std::launch::async, one, next + i);
            for (std::size_t i = 0; i < count; ++i)
                result.runs[next + i] = futures[next + i].get();
            next += count;
        }
    }

    std::size_t max_len = 0;
    for (const auto& run : result.runs) max_len = std::max(max_len, run.records.size());
    result.mean_accuracy.resize(max_len);
    result.std_accuracy.resize(max_len);
    for (std::size_t i = 0; i < max_len; ++i) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (const auto& run : result.runs) {
            if (i < run.records.size()) {
                double a = run.records[i].test_accuracy;
                sum += a;
                sq += a * a;
                ++n;
            }
        }
        double mean = sum / static_cast<double>(n);
        result.mean_accuracy[i] = mean;
        result.std_accuracy[i] = std::sqrt(std::max(0.0, sq / static_cast<double>(n) - mean * mean));
    }
    return result;
}

}  // namespace ahne
