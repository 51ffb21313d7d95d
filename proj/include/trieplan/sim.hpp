#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "trieplan/controller.hpp"
#include "trieplan/planner.hpp"
#include "trieplan/world.hpp"

namespace trieplan {

struct NoiseCfg {
    enum class Kind { None, Lognormal };
    Kind kind = Kind::None;
    double sigma = 0.0;
};

// Right-continuous step function of per-request elapsed time.
struct StepFn {
    std::vector<std::pair<double, double>> steps;  // (t, value), sorted by t
    double at(double t) const;
};

// A fully resolved experiment: policies share one world, one annotated
// planning trie, and identical noise draws per (request, prefix) so the
// comparison is paired.
struct Scenario {
    GroundTruthWorld world;
    ExecutionTrie planning_trie;  // annotations the policies act on
    Objective objective;
    int request_count = 0;
    std::uint64_t seed = 0;
    bool with_replacement = false;
    std::vector<std::string> policies;  // static | dynamic | dynamic_load_aware
    NoiseCfg noise;
    bool hard_stop = true;
    std::map<std::string, StepFn> engine_queues;            // queue depth over time
    std::map<std::string, LoadModel::Curve> true_slowdown;  // multiplicative ground truth
    LoadModel controller_lm;  // consulted by dynamic_load_aware
    std::uint64_t hash = 0;
    unsigned threads = 1;
};

struct RunRow {
    int request = -1;
    std::string policy;
    std::string planned;   // path fixed or first planned at admission
    std::string realized;  // path actually executed
    bool success = false;
    double cost = 0.0;
    double latency = 0.0;
    bool violated = false;  // realized latency exceeded the latency cap
};

struct PolicyAggregate {
    std::string policy;
    int n = 0;
    double accuracy = 0.0;
    double mean_cost = 0.0;
    double mean_latency = 0.0;
    double violation_rate = 0.0;
};

struct RunReport {
    std::vector<RunRow> rows;
    std::vector<PolicyAggregate> aggregates;
    std::uint64_t scenario_hash = 0;
    std::string objective;
};

// Executes every sampled request under every policy. The static policy
// fixes its family-bound plan at admission (falling back to the minimum-
// latency static configuration when no plan is feasible) and runs it open
// loop; dynamic policies re-plan after every stage, and the load-aware
// variant additionally inflates suffix latencies with the load model.
RunReport run_scenario(const Scenario& scenario);

// ── Planner-level sweeps ───────────────────────────────────────────────

struct FrontierRow {
    double bound = 0.0;
    std::string source;
    bool feasible = false;
    std::string path;
    double planned_acc = 0.0, planned_cost = 0.0, planned_lat = 0.0;
    double true_acc = 0.0, true_cost = 0.0, true_lat = 0.0;
    bool satisfied = false;  // true metrics honor the swept bound
};

// For each bound, plans against every annotation source and scores the
// selected paths with the oracle. Catches estimators whose plans fall
// below the y=x line (claimed-feasible but truly violating).
std::vector<FrontierRow> frontier_sweep(
    const std::vector<PathMetrics>& truth,
    const std::vector<std::pair<std::string, const ExecutionTrie*>>& sources,
    const Objective& objective_template, const std::vector<double>& bounds);

struct GapRow {
    double bound = 0.0;
    std::string source;
    bool static_feasible = false, trie_feasible = false;
    double static_planned_acc = 0.0, static_true_acc = 0.0;
    double trie_planned_acc = 0.0, trie_true_acc = 0.0;
    double delta_planned = 0.0, delta_true = 0.0;
};

// Best family-bound plan vs best unrestricted path per cost bound, under
// each annotation source, scored with the oracle.
std::vector<GapRow> policy_gap_report(
    const std::vector<PathMetrics>& truth,
    const std::vector<std::pair<std::string, const ExecutionTrie*>>& sources,
    const std::vector<double>& cost_bounds, const FamilyBinding* binding = nullptr);

}  // namespace trieplan
