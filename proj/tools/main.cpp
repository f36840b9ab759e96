// activehne command-line tool: run, synth, ablate, ksweep.
// Talks to the core library exclusively through the C API.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "activehne/activehne.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) {
    throw CliError{code, message};
}

[[noreturn]] void fail_api(int code) {
    throw CliError{code ? code : AHNE_ERR_OTHER, ahne_last_error()};
}

std::string fnv1a_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(AHNE_ERR_DATA, "cannot open input file: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(AHNE_ERR_CONFIG, "cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(AHNE_ERR_CONFIG, "config parse error in " + path + ": " + e.what());
    }
    // A manifest is accepted wherever a config is: use its embedded echo.
    if (j.is_object() && j.contains("config") && j.at("config").is_object())
        return j.at("config");
    return j;
}

// --set key.path=value with the value parsed as JSON when possible.
void apply_override(json& cfg, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
        fail(AHNE_ERR_CONFIG, "--set expects key=value, got: " + kv);
    std::string key = kv.substr(0, eq);
    std::string raw = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;  // plain string
    }
    json* node = &cfg;
    std::stringstream parts(key);
    std::string part, prev;
    std::vector<std::string> path;
    while (std::getline(parts, part, '.')) path.push_back(part);
    if (path.empty())
        fail(AHNE_ERR_CONFIG, "--set: empty key");
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        node = &(*node)[path[i]];
    (*node)[path.back()] = value;
}

std::string timestamp_dir(const std::string& command) {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", std::localtime(&t));
    return "runs/" + command + "-" + buf;
}

struct GraphHandle {
    ahne_graph* ptr = nullptr;
    ~GraphHandle() { ahne_graph_free(ptr); }
};

// Creates the graph named by the config's data/synth section.
void open_graph(const json& cfg, GraphHandle& handle) {
    if (cfg.contains("data") && !cfg.at("data").is_null()) {
        const json& d = cfg.at("data");
        std::string nodes = d.value("nodes", "");
        std::string edges = d.value("edges", "");
        std::string features = d.value("features", "");
        int rc = ahne_graph_load(nodes.c_str(), edges.c_str(),
                                 features.empty() ? nullptr : features.c_str(), &handle.ptr);
        if (rc != AHNE_OK) fail_api(rc);
    } else if (cfg.contains("synth") && !cfg.at("synth").is_null()) {
        std::string params = cfg.at("synth").dump();
        int rc = ahne_graph_synth(params.c_str(), &handle.ptr);
        if (rc != AHNE_OK) fail_api(rc);
    } else {
        fail(AHNE_ERR_CONFIG, "config must contain a 'data' or 'synth' section");
    }
}

void write_text(const std::string& path, const std::string& contents) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(AHNE_ERR_DATA, "cannot write " + path);
        out << contents;
    }
    fs::rename(tmp, path);
}

void write_manifest(const json& cfg, const std::vector<std::string>& overrides,
                    const std::string& command, const std::string& out_dir,
                    const std::vector<std::string>& outputs) {
    json manifest;
    manifest["command"] = command;
    manifest["version"] = ahne_version();
    manifest["config"] = cfg;
    manifest["overrides"] = overrides;
    manifest["seed"] = cfg.value("seed", 1);
    json inputs = json::object();
    if (cfg.contains("data") && cfg.at("data").is_object()) {
        for (const char* key : {"nodes", "edges", "features"}) {
            std::string path = cfg.at("data").value(key, "");
            if (!path.empty()) inputs[path] = fnv1a_digest(path);
        }
    }
    manifest["inputs"] = inputs;
    json outs = json::array();
    for (const auto& o : outputs) outs.push_back(out_dir + "/" + o);
    manifest["outputs"] = outs;
    write_text(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

// Runs one experiment into dir and returns the parsed result summary.
json run_into(ahne_graph* g, const json& cfg, const std::string& dir) {
    fs::create_directories(dir);
    char* result = nullptr;
    int rc = ahne_run_experiment(g, cfg.dump().c_str(), dir.c_str(), &result);
    if (rc != AHNE_OK) fail_api(rc);
    json parsed = json::parse(result);
    ahne_string_free(result);
    return parsed;
}

int cmd_run(const json& cfg, const std::vector<std::string>& overrides,
            const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_manifest(cfg, overrides, "run", out_dir,
                   {"results.csv", "aggregate.csv", "audit.jsonl"});
    GraphHandle g;
    open_graph(cfg, g);
    run_into(g.ptr, cfg, out_dir);
    std::cout << "run complete: " << out_dir << "\n";
    return 0;
}

int cmd_synth(const json& cfg, const std::vector<std::string>& overrides,
              const std::string& out_dir) {
    if (!cfg.contains("synth"))
        fail(AHNE_ERR_CONFIG, "synth command requires a 'synth' section");
    fs::create_directories(out_dir);
    write_manifest(cfg, overrides, "synth", out_dir,
                   {"nodes.tsv", "edges.tsv", "features.tsv"});
    GraphHandle g;
    open_graph(cfg, g);
    int rc = ahne_graph_write_tsv(g.ptr, out_dir.c_str());
    if (rc != AHNE_OK) fail_api(rc);
    ahne_graph_info info{};
    ahne_graph_get_info(g.ptr, &info);
    std::cout << "generated " << info.num_nodes << " nodes, " << info.num_edges
              << " edges into " << out_dir << "\n";
    return 0;
}

const char* kVariants[] = {"full",     "nc-only", "cie-only", "ie-only",
                           "cid-only", "id-only", "random"};

int cmd_ablate(const json& cfg, const std::vector<std::string>& overrides,
               const std::string& out_dir) {
    fs::create_directories(out_dir);
    write_manifest(cfg, overrides, "ablate", out_dir, {"comparison.csv"});
    GraphHandle g;
    open_graph(cfg, g);

    std::vector<std::vector<double>> curves;
    std::size_t max_len = 0;
    for (const char* variant : kVariants) {
        json vcfg = cfg;
        vcfg["active"]["strategy"] = variant;
        json result = run_into(g.ptr, vcfg, out_dir + "/" + variant);
        curves.push_back(result.at("mean_accuracy").get<std::vector<double>>());
        max_len = std::max(max_len, curves.back().size());
        std::cout << variant << ": final mean accuracy "
                  << (curves.back().empty() ? 0.0 : curves.back().back()) << "\n";
    }

    std::string csv = "iteration";
    for (const char* variant : kVariants) csv += std::string(",") + variant;
    csv += "\n";
    for (std::size_t i = 0; i < max_len; ++i) {
        csv += std::to_string(i + 1);
        for (const auto& curve : curves) {
            csv += ',';
            if (i < curve.size()) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", curve[i]);
                csv += buf;
            }
        }
        csv += '\n';
    }
    write_text(out_dir + "/comparison.csv", csv);
    return 0;
}

int cmd_ksweep(const json& cfg, const std::vector<std::string>& overrides,
               const std::string& out_dir, const std::vector<std::size_t>& k_list) {
    if (k_list.empty())
        fail(AHNE_ERR_CONFIG, "ksweep requires at least one K value");
    for (std::size_t k : k_list)
        if (k < 1) fail(AHNE_ERR_CONFIG, "ksweep: K values must be >= 1");
    fs::create_directories(out_dir);
    write_manifest(cfg, overrides, "ksweep", out_dir, {"ksweep.csv"});
    GraphHandle g;
    open_graph(cfg, g);

    // Guard every K up front so an oversized request fails before work starts.
    double max_cost = cfg.value("max_prop_cost", 1e12);
    for (std::size_t k : k_list) {
        json kcfg = cfg;
        kcfg["model"]["k"] = k;
        double cost = 0.0;
        int rc = ahne_propagation_cost(g.ptr, kcfg.dump().c_str(), &cost);
        if (rc != AHNE_OK) fail_api(rc);
        if (cost > max_cost)
            fail(AHNE_ERR_CONFIG, "K=" + std::to_string(k) + ": estimated propagation cost " +
                                      std::to_string(cost) + " exceeds max_prop_cost " +
                                      std::to_string(max_cost));
    }

    std::string csv = "k,final_mean_accuracy,final_std_accuracy\n";
    for (std::size_t k : k_list) {
        json kcfg = cfg;
        kcfg["model"]["k"] = k;
        json result = run_into(g.ptr, kcfg, out_dir + "/k" + std::to_string(k));
        auto mean = result.at("mean_accuracy").get<std::vector<double>>();
        auto stdev = result.at("std_accuracy").get<std::vector<double>>();
        char buf[96];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", k,
                      mean.empty() ? 0.0 : mean.back(), stdev.empty() ? 0.0 : stdev.back());
        csv += buf;
        std::cout << "K=" << k << ": final mean accuracy "
                  << (mean.empty() ? 0.0 : mean.back()) << "\n";
    }
    write_text(out_dir + "/ksweep.csv", csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ActiveHNE: active heterogeneous network embedding"};
    app.require_subcommand(1);

    std::string config_path, out_dir, k_spec;
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t parallel_runs = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config (or manifest) file");
        sub->add_option("--set", overrides, "Override a config key, e.g. --set active.batch=5");
        sub->add_option("--seed", seed, "Master seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--out", out_dir, "Output directory (default: timestamped under runs/)");
        sub->add_option("--parallel-runs", parallel_runs, "Concurrent runs for repeated experiments");
    };

    CLI::App* run = app.add_subcommand("run", "Run the active-learning experiment");
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic HIN as TSV files");
    CLI::App* ablate = app.add_subcommand("ablate", "Run all strategy variants and compare");
    CLI::App* ksweep = app.add_subcommand("ksweep", "Sweep the convolution order K");
    for (CLI::App* sub : {run, synth, ablate, ksweep}) add_common(sub);
    ksweep->add_option("--k", k_spec, "Comma-separated K values, e.g. 1,2,3");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : AHNE_ERR_CONFIG;
    }

    try {
        json cfg = config_path.empty() ? json::object() : load_config_file(config_path);
        for (const auto& kv : overrides) apply_override(cfg, kv);
        if (seed_set) cfg["seed"] = seed;
        if (parallel_runs > 0) cfg["parallel_runs"] = parallel_runs;

        if (run->parsed()) {
            if (out_dir.empty()) out_dir = timestamp_dir("run");
            return cmd_run(cfg, overrides, out_dir);
        }
        if (synth->parsed()) {
            if (out_dir.empty()) out_dir = timestamp_dir("synth");
            return cmd_synth(cfg, overrides, out_dir);
        }
        if (ablate->parsed()) {
            if (out_dir.empty()) out_dir = timestamp_dir("ablate");
            return cmd_ablate(cfg, overrides, out_dir);
        }
        if (ksweep->parsed()) {
            std::vector<std::size_t> k_list;
            if (!k_spec.empty()) {
                std::stringstream ss(k_spec);
                std::string item;
                while (std::getline(ss, item, ','))
                    k_list.push_back(static_cast<std::size_t>(std::stoul(item)));
            } else if (cfg.contains("ksweep")) {
                k_list = cfg.at("ksweep").get<std::vector<std::size_t>>();
            }
            if (out_dir.empty()) out_dir = timestamp_dir("ksweep");
            return cmd_ksweep(cfg, overrides, out_dir, k_list);
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return AHNE_ERR_OTHER;
    }
    return 0;
}
