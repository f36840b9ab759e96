#include "activehne/runner.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace ahne {

namespace {

using nlohmann::json;

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Atomic write: contents land under a temp name, then rename.
void write_atomic(const std::string& path, const std::string& contents) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot write " + tmp);
        out << contents;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
    if (!j.is_object())
        throw ConfigError("config must be a JSON object");
    ExperimentConfig cfg;

    if (j.contains("data") && !j.at("data").is_null()) {
        const json& d = j.at("data");
        DataPaths paths;
        paths.nodes = get_or<std::string>(d, "nodes", "");
        paths.edges = get_or<std::string>(d, "edges", "");
        paths.features = get_or<std::string>(d, "features", "");
        if (paths.nodes.empty() || paths.edges.empty())
            throw ConfigError("data config requires 'nodes' and 'edges' paths");
        cfg.data = paths;
    }
    if (j.contains("synth") && !j.at("synth").is_null()) {
        const json& s = j.at("synth");
        SynthParams p;
        p.types = get_or<std::size_t>(s, "types", p.types);
        p.classes = get_or<std::size_t>(s, "classes", p.classes);
        p.nodes_per_class = get_or<std::size_t>(s, "nodes_per_class", p.nodes_per_class);
        p.p_in = get_or<double>(s, "p_in", p.p_in);
        p.p_out = get_or<double>(s, "p_out", p.p_out);
        p.feature_noise = get_or<double>(s, "feature_noise", p.feature_noise);
        p.seed = get_or<std::uint64_t>(s, "seed", p.seed);
        cfg.synth = p;
    }
    if (cfg.data && cfg.synth)
        throw ConfigError("config must specify either 'data' or 'synth', not both");

    const json model = j.contains("model") ? j.at("model") : json::object();
    DhneConfig& m = cfg.loop.model;
    m.k = get_or<std::size_t>(model, "k", m.k);
    m.hidden = get_or<std::size_t>(model, "hidden", m.hidden);
    m.out_width = get_or<std::size_t>(model, "out_width", m.out_width);
    m.l2 = get_or<double>(model, "l2", m.l2);
    m.dropout = get_or<double>(model, "dropout", m.dropout);
    m.epochs = get_or<std::size_t>(model, "epochs", m.epochs);
    m.learning_rate = get_or<double>(model, "learning_rate", m.learning_rate);
    m.early_stopping = get_or<std::size_t>(model, "early_stopping", m.early_stopping);
    m.add_self_loops = get_or<bool>(model, "add_self_loops", m.add_self_loops);

    const json active = j.contains("active") ? j.at("active") : json::object();
    cfg.loop.batch = get_or<std::size_t>(active, "batch", cfg.loop.batch);
    cfg.loop.iterations = get_or<std::size_t>(active, "iterations", cfg.loop.iterations);
    cfg.loop.strategy = strategy_from_string(get_or<std::string>(active, "strategy", "full"));
    std::string retrain = get_or<std::string>(active, "retrain", "warm");
    if (retrain == "warm")
        cfg.loop.retrain = RetrainMode::Warm;
    else if (retrain == "cold")
        cfg.loop.retrain = RetrainMode::Cold;
    else
        throw ConfigError("retrain must be 'warm' or 'cold'");

    cfg.loop.seed = get_or<std::uint64_t>(j, "seed", cfg.loop.seed);
    cfg.loop.model.seed = cfg.loop.seed;
    cfg.runs = get_or<std::size_t>(j, "runs", cfg.runs);
    cfg.parallel_runs = get_or<std::size_t>(j, "parallel_runs", cfg.parallel_runs);
    cfg.max_prop_cost = get_or<double>(j, "max_prop_cost", cfg.max_prop_cost);
    if (cfg.runs < 1)
        throw ConfigError("runs must be >= 1");
    cfg.loop.validate();
    return cfg;
}

json experiment_config_json(const ExperimentConfig& cfg) {
    json j;
    if (cfg.data) {
        j["data"] = {{"nodes", cfg.data->nodes}, {"edges", cfg.data->edges}};
        if (!cfg.data->features.empty()) j["data"]["features"] = cfg.data->features;
    }
    if (cfg.synth) {
        j["synth"] = {{"types", cfg.synth->types},
                      {"classes", cfg.synth->classes},
                      {"nodes_per_class", cfg.synth->nodes_per_class},
                      {"p_in", cfg.synth->p_in},
                      {"p_out", cfg.synth->p_out},
                      {"feature_noise", cfg.synth->feature_noise},
                      {"seed", cfg.synth->seed}};
    }
    const DhneConfig& m = cfg.loop.model;
    j["model"] = {{"k", m.k},
                  {"hidden", m.hidden},
                  {"out_width", m.out_width},
                  {"l2", m.l2},
                  {"dropout", m.dropout},
                  {"epochs", m.epochs},
                  {"learning_rate", m.learning_rate},
                  {"early_stopping", m.early_stopping},
                  {"add_self_loops", m.add_self_loops}};
    j["active"] = {{"batch", cfg.loop.batch},
                   {"iterations", cfg.loop.iterations},
                   {"strategy", strategy_to_string(cfg.loop.strategy)},
                   {"retrain", cfg.loop.retrain == RetrainMode::Warm ? "warm" : "cold"}};
    j["seed"] = cfg.loop.seed;
    j["runs"] = cfg.runs;
    j["parallel_runs"] = cfg.parallel_runs;
    j["max_prop_cost"] = cfg.max_prop_cost;
    return j;
}

HinGraph load_experiment_graph(const ExperimentConfig& cfg) {
    if (cfg.data)
        return load_graph(cfg.data->nodes, cfg.data->edges, cfg.data->features);
    if (cfg.synth)
        return synth_hin(*cfg.synth);
    throw ConfigError("config must specify a 'data' or 'synth' section");
}

double propagation_cost_estimate(const HinGraph& g, const LoopConfig& loop) {
    std::vector<SubNetwork> subnets = decompose(g, loop.model.add_self_loops);
    double nnz = 0.0;
    for (const auto& s : subnets) nnz += static_cast<double>(s.transition.nnz());
    double width = static_cast<double>(g.feature_dim()) +
                   static_cast<double>(subnets.size() * loop.model.hidden);
    return static_cast<double>(loop.model.k) * nnz * width;
}

RepeatedResult run_experiment(const HinGraph& g, const ExperimentConfig& cfg) {
    double cost = propagation_cost_estimate(g, cfg.loop);
    if (cost > cfg.max_prop_cost)
        throw ConfigError("estimated propagation cost " + fmt_double(cost) +
                          " exceeds max_prop_cost " + fmt_double(cfg.max_prop_cost));
    return run_repeated(g, cfg.loop, cfg.runs, cfg.parallel_runs);
}

void write_results_csv(const RepeatedResult& result, const std::string& path) {
    std::string out = "run,iteration,num_labeled,test_accuracy,train_loss,seconds\n";
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        for (const auto& rec : result.runs[i].records) {
            out += std::to_string(i) + ',' + std::to_string(rec.r) + ',' +
                   std::to_string(rec.num_labeled) + ',' + fmt_double(rec.test_accuracy) + ',' +
                   fmt_double(rec.train_loss) + ',' + fmt_double(rec.seconds) + '\n';
        }
    }
    write_atomic(path, out);
}

void write_aggregate_csv(const RepeatedResult& result, const std::string& path) {
    std::string out = "iteration,mean_accuracy,std_accuracy\n";
    for (std::size_t i = 0; i < result.mean_accuracy.size(); ++i)
        out += std::to_string(i + 1) + ',' + fmt_double(result.mean_accuracy[i]) + ',' +
               fmt_double(result.std_accuracy[i]) + '\n';
    write_atomic(path, out);
}

void write_audit_jsonl(const RepeatedResult& result, const std::string& path) {
    std::string out;
    for (std::size_t i = 0; i < result.runs.size(); ++i) {
        for (const auto& rec : result.runs[i].audit) {
            json line = rec;
            line["run"] = i;
            out += line.dump() + '\n';
        }
    }
    write_atomic(path, out);
}

json results_json(const RepeatedResult& result) {
    json runs = json::array();
    for (const auto& run : result.runs) {
        json records = json::array();
        for (const auto& rec : run.records) {
            json r = {{"r", rec.r},
                      {"queried", rec.queried},
                      {"num_labeled", rec.num_labeled},
                      {"test_accuracy", rec.test_accuracy},
                      {"train_loss", rec.train_loss},
                      {"seconds", rec.seconds}};
            if (rec.rewards_valid) r["rewards"] = rec.rewards;
            records.push_back(std::move(r));
        }
        runs.push_back({{"records", std::move(records)}});
    }
    return json{{"runs", std::move(runs)},
                {"mean_accuracy", result.mean_accuracy},
                {"std_accuracy", result.std_accuracy}};
}

}  // namespace ahne
