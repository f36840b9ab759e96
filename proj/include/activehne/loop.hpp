#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "activehne/dhne.hpp"
#include "activehne/graph.hpp"
#include "activehne/query.hpp"

namespace ahne {

enum class Strategy { Full, NcOnly, CieOnly, IeOnly, CidOnly, IdOnly, Random };
enum class RetrainMode { Warm, Cold };

Strategy strategy_from_string(const std::string& s);
std::string strategy_to_string(Strategy s);

struct LoopConfig {
    std::size_t batch = 20;       // b
    std::size_t iterations = 40;  // R
    Strategy strategy = Strategy::Full;
    RetrainMode retrain = RetrainMode::Warm;
    DhneConfig model;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Split {
    std::vector<std::uint32_t> pool;        // 25% of labeled nodes, labels hidden
    std::vector<std::uint32_t> validation;  // 25%
    std::vector<std::uint32_t> test;        // 50%
};

// 25/25/50 split of the labeled nodes, shuffled by seed.
Split split_dataset(const HinGraph& g, std::uint64_t seed);

// Simulated labeler over ground truth with a query-cost counter.
class Oracle {
public:
    explicit Oracle(const HinGraph& g) : graph_(&g) {}
    int query(std::uint32_t v);
    std::size_t cost() const { return cost_; }

private:
    const HinGraph* graph_;
    std::vector<bool> queried_ = std::vector<bool>();
    std::size_t cost_ = 0;
};

double evaluate_accuracy(const DenseMatrix& probs, const std::vector<std::uint32_t>& test,
                         const std::vector<int>& labels);

struct IterationRecord {
    std::size_t r = 0;
    std::vector<std::uint32_t> queried;
    std::size_t num_labeled = 0;
    bool rewards_valid = false;
    std::array<double, kNumArms> rewards{};  // empirical rewards, full strategy only
    double test_accuracy = 0.0;
    double train_loss = 0.0;  // final epoch training loss
    double seconds = 0.0;
};

struct LoopResult {
    std::vector<IterationRecord> records;
    std::vector<nlohmann::json> audit;  // one per iteration
};

LoopResult run_active_loop(const HinGraph& g, const LoopConfig& cfg);

struct RepeatedResult {
    std::vector<LoopResult> runs;
    std::vector<double> mean_accuracy;  // per iteration
    std::vector<double> std_accuracy;
};

RepeatedResult run_repeated(const HinGraph& g, const LoopConfig& cfg, std::size_t runs,
                            std::size_t parallel = 1);

}  // namespace ahne
