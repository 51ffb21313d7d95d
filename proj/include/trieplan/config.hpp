#pragma once

#include <string>

#include <json.hpp>

#include "trieplan/sim.hpp"
#include "trieplan/world.hpp"

namespace trieplan {

// One JSON document describes a whole experiment substrate: engines,
// model catalog, workflow template, and the synthetic world law.
struct ExperimentConfig {
    ModelCatalog catalog;
    WorkflowTemplate tmpl;
    WorldConfig world;
    nlohmann::json raw;  // resolved echo for manifests
};

ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

// Scenario file: references an experiment config by path, picks annotation
// sources, policies, noise, and engine load. `mode` selects between a
// policy run and the planner-level sweeps.
struct ScenarioSpec {
    std::string mode = "run";  // run | frontier | policy_gap
    ExperimentConfig config;
    std::uint64_t world_seed = 0;
    Scenario scenario;  // run mode
    // sweep modes
    Objective objective;
    std::vector<double> bounds;
    std::vector<std::pair<std::string, std::string>> sources;  // name -> "oracle" | file path
    std::uint64_t hash = 0;
};

ScenarioSpec load_scenario(const std::string& path, unsigned threads);

}  // namespace trieplan
