#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "activehne/loop.hpp"

namespace ahne {

struct DataPaths {
    std::string nodes;
    std::string edges;
    std::string features;  // optional
};

// Full experiment description, parsed from the JSON config documented in
// the README.
struct ExperimentConfig {
    std::optional<DataPaths> data;
    std::optional<SynthParams> synth;
    LoopConfig loop;
    std::size_t runs = 1;
    std::size_t parallel_runs = 1;
    double max_prop_cost = 1e12;
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
nlohmann::json experiment_config_json(const ExperimentConfig& cfg);

HinGraph load_experiment_graph(const ExperimentConfig& cfg);

// K-order propagation work estimate used by the ksweep memory guard.
double propagation_cost_estimate(const HinGraph& g, const LoopConfig& loop);

// Runs the loop `runs` times; rejects configurations whose estimated
// propagation cost exceeds max_prop_cost.
RepeatedResult run_experiment(const HinGraph& g, const ExperimentConfig& cfg);

// Output writers; all files are written atomically (temp file + rename).
void write_results_csv(const RepeatedResult& result, const std::string& path);
void write_aggregate_csv(const RepeatedResult& result, const std::string& path);
void write_audit_jsonl(const RepeatedResult& result, const std::string& path);

// Machine-readable summary: per-run records plus the aggregate curve.
nlohmann::json results_json(const RepeatedResult& result);

}  // namespace ahne
