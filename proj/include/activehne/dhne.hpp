#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "activehne/graph.hpp"
#include "activehne/matrix.hpp"

namespace ahne {

struct DhneConfig {
    std::size_t k = 1;             // convolution order
    std::size_t hidden = 16;       // d^(1)
    std::size_t out_width = 0;     // d^(2); 0 means "number of classes"
    double l2 = 5e-4;
    double dropout = 0.5;
    std::size_t epochs = 200;
    double learning_rate = 0.01;
    std::size_t early_stopping = 0;  // validation patience; 0 disables
    bool add_self_loops = false;
    std::uint64_t seed = 1;

    void validate() const;
};

// Per-sub-network convolution weights for both layers plus the shared
// prediction head, each with its own Adam state.
struct DhneModel {
    DhneConfig cfg;
    std::size_t num_subnets = 0;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::size_t d1 = 0, d2 = 0;
    std::vector<DenseMatrix> theta0;  // D x d1, one per sub-network
    std::vector<DenseMatrix> theta1;  // (T*d1) x d2
    DenseMatrix theta_pre;            // (T*d2) x C
    std::vector<AdamState> adam0, adam1;
    AdamState adam_pre;
};

DhneModel init_model(const DhneConfig& cfg, const std::vector<SubNetwork>& subnets,
                     std::size_t feature_dim, std::size_t num_classes);

// Intermediate state kept by a training-mode forward for the matching
// backward call.
struct ForwardCache {
    std::vector<DenseMatrix> propagated0;  // per subnet: sum_k P^k Z, layer 0
    std::vector<DenseMatrix> mask0;        // per subnet: ReLU masks, layer 0
    std::vector<DenseMatrix> propagated1;
    std::vector<DenseMatrix> mask1;
    DenseMatrix drop1;      // dropout mask on layer-1 input (N x T*d1)
    DenseMatrix drop2;      // dropout mask on head input (N x T*d2)
    DenseMatrix head_input; // embedding after head dropout
    DenseMatrix probs;      // F
    bool valid = false;
};

struct ForwardResult {
    DenseMatrix embedding;  // E = Z^(2), N x T*d2
    DenseMatrix probs;      // F, N x C
};

// H_t = ReLU((sum_{k=1..K} P_t^k Z_t) Theta); powers are applied as
// repeated sparse products, P_t^k is never materialized.
DenseMatrix conv_layer_forward(const SubNetwork& s, const DenseMatrix& z,
                               const DenseMatrix& theta, std::size_t k);

// Scatters per-sub-network outputs into the global concatenated signal;
// rows of nodes outside a sub-network stay zero.
DenseMatrix concat_signals(const std::vector<SubNetwork>& subnets,
                           const std::vector<DenseMatrix>& outputs,
                           std::size_t num_nodes, std::size_t width);

ForwardResult forward(const DhneModel& model, const HinGraph& g,
                      const std::vector<SubNetwork>& subnets, bool training,
                      std::uint64_t dropout_seed, ForwardCache* cache = nullptr);

// Cross-entropy over the labeled set plus L2 over all weights.
double loss(const DenseMatrix& probs, const std::vector<int>& labels,
            const std::vector<std::uint32_t>& labeled, const DhneModel& model,
            double l2);

struct Gradients {
    std::vector<DenseMatrix> theta0;
    std::vector<DenseMatrix> theta1;
    DenseMatrix theta_pre;
};

Gradients backward(ForwardCache& cache, const std::vector<int>& labels,
                   const std::vector<std::uint32_t>& labeled, const DhneModel& model,
                   const std::vector<SubNetwork>& subnets);

struct TrainResult {
    ForwardResult output;            // evaluation-mode forward after training
    std::vector<double> loss_trace;  // training loss per epoch
};

// Full-batch training for cfg.epochs (or the given override) epochs.
TrainResult train(DhneModel& model, const HinGraph& g,
                  const std::vector<SubNetwork>& subnets,
                  const std::vector<std::uint32_t>& labeled,
                  const std::vector<std::uint32_t>& validation,
                  std::size_t epochs_override = static_cast<std::size_t>(-1));

std::vector<int> predict(const DenseMatrix& probs);

// Checkpoint I/O (JSON). Loading refuses a checkpoint whose sub-network
// fingerprint does not match the given decomposition.
std::uint64_t subnet_fingerprint(const std::vector<SubNetwork>& subnets);
void save_checkpoint(const DhneModel& model, const std::vector<SubNetwork>& subnets,
                     const std::string& path);
DhneModel load_checkpoint(const std::string& path, const std::vector<SubNetwork>& subnets);

}  // namespace ahne
