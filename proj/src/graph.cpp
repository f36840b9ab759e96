#include "activehne/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ahne {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

// Reads a TSV file, stripping CR, skipping blank and '#' lines; calls fn
// with (line_number, fields).
template <class Fn>
void for_each_record(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open file: " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        fn(lineno, split_tabs(line));
    }
}

[[noreturn]] void malformed(const std::string& path, std::size_t lineno, const std::string& what) {
    throw DataError(path + ":" + std::to_string(lineno) + ": " + what);
}

// Maps string tokens to ids: numeric values when every token is an
// unsigned integer, first-seen order otherwise.
struct TokenMap {
    std::vector<std::string> tokens;           // in encounter order
    std::unordered_map<std::string, int> ids;  // first-seen ids
    bool all_numeric = true;
    std::uint64_t max_numeric = 0;

    int add(const std::string& tok) {
        std::uint64_t n;
        if (all_numeric && !parse_u64(tok, n)) all_numeric = false;
        auto [it, inserted] = ids.try_emplace(tok, static_cast<int>(tokens.size()));
        if (inserted) tokens.push_back(tok);
        if (all_numeric) {
            parse_u64(tok, n);
            max_numeric = std::max(max_numeric, n);
        }
        return it->second;
    }

    // Resolves the final id of a token after all insertions.
    int resolve(const std::string& tok) const {
        if (all_numeric) {
            std::uint64_t n;
            parse_u64(tok, n);
            return static_cast<int>(n);
        }
        return ids.at(tok);
    }

    std::size_t domain_size() const {
        return all_numeric ? static_cast<std::size_t>(max_numeric) + 1 : tokens.size();
    }
};

}  // namespace

void HinGraph::finalize() {
    adjacency.assign(num_nodes, {});
    for (const auto& [u, v] : edges) {
        if (u >= num_nodes || v >= num_nodes)
            throw DataError("edge endpoint out of range");
        if (u == v)
            throw DataError("self-loop in edge list");
        adjacency[u].push_back(v);
        adjacency[v].push_back(u);
    }
    for (auto& nbrs : adjacency) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }
    for (int c : label)
        if (c >= 0 && static_cast<std::size_t>(c) >= num_classes)
            throw DataError("label id out of range");
}

std::vector<SubNetwork> decompose(const HinGraph& g, bool add_self_loops) {
    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;  // type pair -> edge indices
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        int ta = g.node_type[g.edges[e].first];
        int tb = g.node_type[g.edges[e].second];
        groups[{std::min(ta, tb), std::max(ta, tb)}].push_back(e);
    }
    std::vector<SubNetwork> subnets;
    subnets.reserve(groups.size());
    for (const auto& [pair, edge_ids] : groups) {
        SubNetwork s;
        s.index = subnets.size();
        s.type_a = pair.first;
        s.type_b = pair.second;
        std::set<std::uint32_t> member_set;
        for (std::size_t e : edge_ids) {
            member_set.insert(g.edges[e].first);
            member_set.insert(g.edges[e].second);
        }
        s.members.assign(member_set.begin(), member_set.end());
        s.local_of.assign(g.num_nodes, -1);
        for (std::size_t i = 0; i < s.members.size(); ++i)
            s.local_of[s.members[i]] = static_cast<std::int64_t>(i);
        std::vector<std::tuple<std::size_t, std::size_t, double>> trip;
        trip.reserve(edge_ids.size() * 2 + (add_self_loops ? s.members.size() : 0));
        for (std::size_t e : edge_ids) {
            auto lu = static_cast<std::size_t>(s.local_of[g.edges[e].first]);
            auto lv = static_cast<std::size_t>(s.local_of[g.edges[e].second]);
            double w = g.edge_weight[e];
            trip.emplace_back(lu, lv, w);
            trip.emplace_back(lv, lu, w);
        }
        if (add_self_loops)
            for (std::size_t i = 0; i < s.members.size(); ++i)
                trip.emplace_back(i, i, 1.0);
        s.adjacency = SparseMatrix::from_triplets(s.members.size(), s.members.size(), std::move(trip));
        s.transition = row_normalize(s.adjacency);
        s.transition_t = s.transition.transposed();
        subnets.push_back(std::move(s));
    }
    return subnets;
}

NodeImportance node_importance(const HinGraph& g) {
    NodeImportance imp;
    imp.weight.resize(g.num_nodes);
    imp.neighbor_count.resize(g.num_nodes);
    imp.neighbor_types.resize(g.num_nodes);
    const double n_total = static_cast<double>(g.num_nodes);
    const double t_total = static_cast<double>(g.num_types);
    for (std::uint32_t v = 0; v < g.num_nodes; ++v) {
        const auto& nbrs = g.adjacency[v];
        std::set<int> types;
        for (std::uint32_t u : nbrs) types.insert(g.node_type[u]);
        imp.neighbor_count[v] = nbrs.size();
        imp.neighbor_types[v] = types.size();
        imp.weight[v] = std::tanh(static_cast<double>(nbrs.size()) / n_total +
                                  static_cast<double>(types.size()) / t_total);
    }
    return imp;
}

std::size_t degree_centrality(const HinGraph& g, std::uint32_t v) {
    if (v >= g.num_nodes)
        throw DataError("node out of range");
    return g.adjacency[v].size();
}

const std::vector<std::uint32_t>& neighbors(const HinGraph& g, std::uint32_t v) {
    if (v >= g.num_nodes)
        throw DataError("node out of range");
    return g.adjacency[v];
}

HinGraph load_graph(const std::string& nodes_path, const std::string& edges_path,
                    const std::string& features_path) {
    // First pass over node ids to decide numeric vs remapped.
    TokenMap node_ids, type_ids, label_ids;
    struct NodeRec {
        std::string id, type, label;
    };
    std::vector<NodeRec> recs;
    for_each_record(nodes_path, [&](std::size_t lineno, const std::vector<std::string>& f) {
        if (f.size() < 2 || f.size() > 3)
            malformed(nodes_path, lineno, "expected node_id<TAB>type[<TAB>label]");
        if (f[0].empty())
            malformed(nodes_path, lineno, "empty node id");
        if (node_ids.ids.contains(f[0]))
            malformed(nodes_path, lineno, "duplicate node id '" + f[0] + "'");
        node_ids.add(f[0]);
        type_ids.add(f[1]);
        if (f.size() == 3 && !f[2].empty()) label_ids.add(f[2]);
        recs.push_back({f[0], f[1], f.size() == 3 ? f[2] : std::string{}});
    });
    if (recs.empty())
        throw DataError(nodes_path + ": no nodes");

    // Contiguous numeric ids are kept as-is; anything else is remapped in
    // first-seen order with a sidecar map emitted next to the input.
    bool numeric_ok = node_ids.all_numeric && node_ids.domain_size() == recs.size();
    std::unordered_map<std::string, std::uint32_t> node_of;
    node_of.reserve(recs.size());
    if (numeric_ok) {
        for (const auto& r : recs) {
            std::uint64_t n;
            parse_u64(r.id, n);
            node_of[r.id] = static_cast<std::uint32_t>(n);
        }
    } else {
        for (std::size_t i = 0; i < recs.size(); ++i)
            node_of[recs[i].id] = static_cast<std::uint32_t>(i);
        std::ofstream side(nodes_path + ".idmap.tsv");
        if (side) {
            side << "# original_id\tmapped_id\n";
            for (std::size_t i = 0; i < recs.size(); ++i)
                side << recs[i].id << '\t' << i << '\n';
        }
    }

    HinGraph g;
    g.num_nodes = recs.size();
    g.num_types = type_ids.domain_size();
    g.num_classes = label_ids.tokens.empty() ? 0 : label_ids.domain_size();
    g.node_type.assign(g.num_nodes, 0);
    g.label.assign(g.num_nodes, -1);
    if (!numeric_ok) {
        g.node_name.resize(g.num_nodes);
        for (const auto& [name, idx] : node_of) g.node_name[idx] = name;
    }
    if (!type_ids.all_numeric) g.type_name = type_ids.tokens;
    if (!label_ids.all_numeric) g.class_name = label_ids.tokens;
    for (const auto& r : recs) {
        std::uint32_t v = node_of[r.id];
        g.node_type[v] = type_ids.resolve(r.type);
        if (!r.label.empty()) g.label[v] = label_ids.resolve(r.label);
    }

    // Edges, deduplicated; duplicates collapse to weight 1 in unweighted
    // mode and to the summed weight otherwise.
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> edge_map;
    bool weighted = false;
    for_each_record(edges_path, [&](std::size_t lineno, const std::vector<std::string>& f) {
        if (f.size() < 2 || f.size() > 3)
            malformed(edges_path, lineno, "expected src<TAB>dst[<TAB>weight]");
        auto su = node_of.find(f[0]);
        auto sv = node_of.find(f[1]);
        if (su == node_of.end())
            malformed(edges_path, lineno, "dangling edge endpoint '" + f[0] + "'");
        if (sv == node_of.end())
            malformed(edges_path, lineno, "dangling edge endpoint '" + f[1] + "'");
        std::uint32_t u = su->second, v = sv->second;
        if (u == v)
            malformed(edges_path, lineno, "self-loop on node '" + f[0] + "'");
        double w = 1.0;
        if (f.size() == 3) {
            if (!parse_double(f[2], w) || w < 0.0)
                malformed(edges_path, lineno, "bad edge weight '" + f[2] + "'");
            weighted = true;
        }
        auto key = std::minmax(u, v);
        edge_map[{key.first, key.second}] += w;
    });
    for (const auto& [uv, w] : edge_map) {
        g.edges.push_back(uv);
        g.edge_weight.push_back(weighted ? w : 1.0);
    }

    if (!features_path.empty()) {
        std::vector<std::vector<double>> rows(g.num_nodes);
        std::vector<bool> seen(g.num_nodes, false);
        std::size_t dim = 0;
        for_each_record(features_path, [&](std::size_t lineno, const std::vector<std::string>& f) {
            if (f.size() < 2)
                malformed(features_path, lineno, "expected node_id followed by feature values");
            auto it = node_of.find(f[0]);
            if (it == node_of.end())
                malformed(features_path, lineno, "unknown node id '" + f[0] + "'");
            if (seen[it->second])
                malformed(features_path, lineno, "duplicate feature row for '" + f[0] + "'");
            std::vector<double> vals(f.size() - 1);
            for (std::size_t j = 1; j < f.size(); ++j)
                if (!parse_double(f[j], vals[j - 1]))
                    malformed(features_path, lineno, "bad feature value '" + f[j] + "'");
            if (dim == 0)
                dim = vals.size();
            else if (vals.size() != dim)
                malformed(features_path, lineno, "inconsistent feature dimension");
            rows[it->second] = std::move(vals);
            seen[it->second] = true;
        });
        if (dim == 0) {
            // Empty feature file: treat like no feature file at all.
            g.features = DenseMatrix(g.num_nodes, g.num_nodes);
            for (std::size_t v = 0; v < g.num_nodes; ++v)
                g.features(v, v) = 1.0;
        } else {
            for (std::size_t v = 0; v < g.num_nodes; ++v)
                if (!seen[v])
                    throw DataError(features_path + ": missing feature row for node " +
                                    std::to_string(v));
            g.features = DenseMatrix(g.num_nodes, dim);
            for (std::size_t v = 0; v < g.num_nodes; ++v)
                for (std::size_t j = 0; j < dim; ++j)
                    g.features(v, j) = rows[v][j];
        }
    } else {
        // Identity features: the model becomes purely structural.
        g.features = DenseMatrix(g.num_nodes, g.num_nodes);
        for (std::size_t v = 0; v < g.num_nodes; ++v)
            g.features(v, v) = 1.0;
    }

    g.finalize();
    return g;
}

void write_graph_tsv(const HinGraph& g, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    {
        std::ofstream out(dir + "/nodes.tsv");
        if (!out) throw DataError("cannot write " + dir + "/nodes.tsv");
        for (std::size_t v = 0; v < g.num_nodes; ++v) {
            out << v << '\t' << g.node_type[v] << '\t';
            if (g.label[v] >= 0) out << g.label[v];
            out << '\n';
        }
    }
    {
        std::ofstream out(dir + "/edges.tsv");
        if (!out) throw DataError("cannot write " + dir + "/edges.tsv");
        bool weighted = std::any_of(g.edge_weight.begin(), g.edge_weight.end(),
                                    [](double w) { return w != 1.0; });
        for (std::size_t e = 0; e < g.edges.size(); ++e) {
            out << g.edges[e].first << '\t' << g.edges[e].second;
            if (weighted) out << '\t' << fmt(g.edge_weight[e]);
            out << '\n';
        }
    }
    {
        std::ofstream out(dir + "/features.tsv");
        if (!out) throw DataError("cannot write " + dir + "/features.tsv");
        for (std::size_t v = 0; v < g.num_nodes; ++v) {
            out << v;
            for (std::size_t j = 0; j < g.features.cols; ++j)
                out << '\t' << fmt(g.features(v, j));
            out << '\n';
        }
    }
}

HinGraph synth_hin(const SynthParams& p) {
    if (!(p.p_out >= 0.0 && p.p_out < p.p_in && p.p_in <= 1.0))
        throw ConfigError("synth_hin: require 0 <= p_out < p_in <= 1");
    if (p.types == 0 || p.classes == 0 || p.nodes_per_class == 0)
        throw ConfigError("synth_hin: counts must be positive");
    if (p.feature_noise < 0.0)
        throw ConfigError("synth_hin: negative feature noise");

    HinGraph g;
    g.num_nodes = p.classes * p.nodes_per_class;
    g.num_types = p.types;
    g.num_classes = p.classes;
    g.node_type.resize(g.num_nodes);
    g.label.resize(g.num_nodes);
    for (std::size_t v = 0; v < g.num_nodes; ++v) {
        g.node_type[v] = static_cast<int>(v % p.types);
        g.label[v] = static_cast<int>(v % p.classes);
    }

    std::mt19937_64 rng(p.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::uint32_t i = 0; i < g.num_nodes; ++i) {
        for (std::uint32_t j = i + 1; j < g.num_nodes; ++j) {
            double prob = g.label[i] == g.label[j] ? p.p_in : p.p_out;
            if (unit(rng) < prob) {
                g.edges.emplace_back(i, j);
                g.edge_weight.push_back(1.0);
            }
        }
    }

    std::uniform_real_distribution<double> noise(-p.feature_noise, p.feature_noise);
    g.features = DenseMatrix(g.num_nodes, p.classes);
    for (std::size_t v = 0; v < g.num_nodes; ++v)
        for (std::size_t c = 0; c < p.classes; ++c)
            g.features(v, c) = (static_cast<int>(c) == g.label[v] ? 1.0 : 0.0) + noise(rng);

    g.finalize();
    return g;
}

}  // namespace ahne
