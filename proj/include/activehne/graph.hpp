#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "activehne/matrix.hpp"

namespace ahne {

// A heterogeneous information network: typed nodes, undirected weighted
// edges, node features and (possibly partial) ground-truth labels.
struct HinGraph {
    std::size_t num_nodes = 0;
    std::size_t num_types = 0;
    std::size_t num_classes = 0;
    std::vector<int> node_type;                        // [0, num_types)
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // u < v, deduplicated
    std::vector<double> edge_weight;                   // parallel to edges
    DenseMatrix features;                              // N x D
    std::vector<int> label;                            // class id or -1
    std::vector<std::string> node_name;                // empty when ids were numeric
    std::vector<std::string> type_name;
    std::vector<std::string> class_name;
    std::vector<std::vector<std::uint32_t>> adjacency;  // sorted distinct neighbors

    std::size_t feature_dim() const { return features.cols; }
    void finalize();  // builds adjacency, validates invariants
};

// One homogeneous or bipartite slice of the HIN.
struct SubNetwork {
    std::size_t index = 0;
    int type_a = 0, type_b = 0;          // type_a <= type_b
    std::vector<std::uint32_t> members;  // sorted global ids
    std::vector<std::int64_t> local_of;  // global -> local, -1 when absent
    SparseMatrix adjacency;              // local, symmetric
    SparseMatrix transition;             // row-normalized adjacency
    SparseMatrix transition_t;           // transpose, used by backprop

    std::size_t size() const { return members.size(); }
};

struct NodeImportance {
    std::vector<double> weight;                 // tanh(n_i/N + m_i/V_T)
    std::vector<std::size_t> neighbor_count;    // n_i
    std::vector<std::size_t> neighbor_types;    // m_i
};

// Splits the HIN into one sub-network per node-type pair that carries at
// least one edge, ordered by (type_a, type_b). Optionally adds unit
// self-loops to each local adjacency before normalization.
std::vector<SubNetwork> decompose(const HinGraph& g, bool add_self_loops = false);

NodeImportance node_importance(const HinGraph& g);

std::size_t degree_centrality(const HinGraph& g, std::uint32_t v);
const std::vector<std::uint32_t>& neighbors(const HinGraph& g, std::uint32_t v);

// TSV loader; features_path may be empty, in which case X is the N x N
// identity. String node ids are remapped in first-seen order and the map
// is written to <nodes_path>.idmap.tsv.
HinGraph load_graph(const std::string& nodes_path, const std::string& edges_path,
                    const std::string& features_path = {});

// Writes nodes.tsv / edges.tsv / features.tsv into dir.
void write_graph_tsv(const HinGraph& g, const std::string& dir);

struct SynthParams {
    std::size_t types = 2;
    std::size_t classes = 2;
    std::size_t nodes_per_class = 50;
    double p_in = 0.1;
    double p_out = 0.01;
    double feature_noise = 0.1;
    std::uint64_t seed = 1;
};

// Planted-partition heterogeneous generator: round-robin type and class
// assignment, same-class edges with probability p_in, cross-class with
// p_out, features = one-hot class indicator plus uniform noise.
HinGraph synth_hin(const SynthParams& params);

}  // namespace ahne
