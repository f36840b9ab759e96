#include "activehne/activehne.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "activehne/graph.hpp"
#include "activehne/runner.hpp"

using nlohmann::json;

struct ahne_graph_s {
    ahne::HinGraph graph;
};

namespace {

thread_local std::string g_last_error;

int set_error(const std::exception& e, int code) {
    g_last_error = e.what();
    return code;
}

template <class Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return AHNE_OK;
    } catch (const ahne::ConfigError& e) {
        return set_error(e, AHNE_ERR_CONFIG);
    } catch (const ahne::DataError& e) {
        return set_error(e, AHNE_ERR_DATA);
    } catch (const ahne::NumericError& e) {
        return set_error(e, AHNE_ERR_NUMERIC);
    } catch (const json::exception& e) {
        return set_error(e, AHNE_ERR_CONFIG);
    } catch (const std::exception& e) {
        return set_error(e, AHNE_ERR_OTHER);
    }
}

json parse_json(const char* text, const char* what) {
    if (!text)
        throw ahne::ConfigError(std::string(what) + ": null JSON");
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ahne::ConfigError(std::string(what) + ": " + e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* ahne_last_error(void) { return g_last_error.c_str(); }

const char* ahne_version(void) { return AHNE_VERSION; }

int ahne_graph_load(const char* nodes_path, const char* edges_path,
                    const char* features_path, ahne_graph** out) {
    return guarded([&] {
        if (!nodes_path || !edges_path || !out)
            throw ahne::ConfigError("ahne_graph_load: null argument");
        auto* handle = new ahne_graph_s{
            ahne::load_graph(nodes_path, edges_path, features_path ? features_path : "")};
        *out = handle;
    });
}

int ahne_graph_synth(const char* params_json, ahne_graph** out) {
    return guarded([&] {
        if (!out)
            throw ahne::ConfigError("ahne_graph_synth: null output");
        json j = parse_json(params_json, "synth params");
        ahne::SynthParams p;
        if (j.contains("types")) p.types = j.at("types").get<std::size_t>();
        if (j.contains("classes")) p.classes = j.at("classes").get<std::size_t>();
        if (j.contains("nodes_per_class"))
            p.nodes_per_class = j.at("nodes_per_class").get<std::size_t>();
        if (j.contains("p_in")) p.p_in = j.at("p_in").get<double>();
        if (j.contains("p_out")) p.p_out = j.at("p_out").get<double>();
        if (j.contains("feature_noise")) p.feature_noise = j.at("feature_noise").get<double>();
        if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
        *out = new ahne_graph_s{ahne::synth_hin(p)};
    });
}

int ahne_graph_write_tsv(const ahne_graph* g, const char* dir) {
    return guarded([&] {
        if (!g || !dir)
            throw ahne::ConfigError("ahne_graph_write_tsv: null argument");
        ahne::write_graph_tsv(g->graph, dir);
    });
}

int ahne_graph_get_info(const ahne_graph* g, ahne_graph_info* out) {
    return guarded([&] {
        if (!g || !out)
            throw ahne::ConfigError("ahne_graph_get_info: null argument");
        out->num_nodes = g->graph.num_nodes;
        out->num_edges = g->graph.edges.size();
        out->num_types = g->graph.num_types;
        out->num_classes = g->graph.num_classes;
        out->feature_dim = g->graph.feature_dim();
    });
}

void ahne_graph_free(ahne_graph* g) { delete g; }

int ahne_run_experiment(const ahne_graph* g, const char* config_json,
                        const char* out_dir, char** result_json) {
    return guarded([&] {
        if (!g)
            throw ahne::ConfigError("ahne_run_experiment: null graph");
        ahne::ExperimentConfig cfg =
            ahne::parse_experiment_config(parse_json(config_json, "experiment config"));
        ahne::RepeatedResult result = ahne::run_experiment(g->graph, cfg);
        if (out_dir) {
            std::filesystem::create_directories(out_dir);
            std::string dir(out_dir);
            ahne::write_results_csv(result, dir + "/results.csv");
            ahne::write_aggregate_csv(result, dir + "/aggregate.csv");
            ahne::write_audit_jsonl(result, dir + "/audit.jsonl");
        }
        if (result_json)
            *result_json = dup_string(ahne::results_json(result).dump());
    });
}

int ahne_propagation_cost(const ahne_graph* g, const char* config_json, double* out) {
    return guarded([&] {
        if (!g || !out)
            throw ahne::ConfigError("ahne_propagation_cost: null argument");
        ahne::ExperimentConfig cfg =
            ahne::parse_experiment_config(parse_json(config_json, "experiment config"));
        *out = ahne::propagation_cost_estimate(g->graph, cfg.loop);
    });
}

void ahne_string_free(char* s) { std::free(s); }

}  // extern "C"
