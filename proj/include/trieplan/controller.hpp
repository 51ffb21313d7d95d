#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trieplan/planner.hpp"
#include "trieplan/trie.hpp"

namespace trieplan {

// ── Engine load model ──────────────────────────────────────────────────
// Monotone piecewise-linear map from queue depth to either extra seconds
// (additive) or a latency multiplier (slowdown), fitted from injection
// samples. Engines without a curve behave as unloaded.

struct LoadModel {
    enum class Mode { AdditiveDelay, Slowdown };

    struct Curve {
        std::vector<std::pair<double, double>> knots;  // (queue depth, value), sorted
        double fit_residual = 0.0;
        double at(double queue_depth) const;  // linear between knots, flat outside
    };

    Mode mode = Mode::AdditiveDelay;
    std::map<std::string, Curve> engines;

    double identity_value() const { return mode == Mode::Slowdown ? 1.0 : 0.0; }
    double value(const std::string& engine, double queue_depth) const;
};

// Per-depth medians against the baseline, made monotone by pool-adjacent-
// violators, then linearly interpolated. Needs two distinct queue depths.
LoadModel::Curve fit_slowdown_curve(const std::vector<std::pair<double, double>>& samples,
                                    double baseline_latency, LoadModel::Mode mode);

void save_load_model(const LoadModel& lm, const std::string& path);
LoadModel load_load_model(const std::string& path);

// Queue depth per engine at decision time; supplied by the simulator or an
// external probe, staleness is the caller's concern.
struct EngineLoad {
    std::map<std::string, double> queue_depth;
    double at(const std::string& engine) const;
};

// ── Per-request control state ──────────────────────────────────────────

enum class RunStatus { Running, Success, BudgetStop, Exhausted };

struct StageResult {
    int model = -1;
    double latency = 0.0;
    double cost = 0.0;
    bool succeeded = false;
};

struct RequestContext {
    Objective objective;
    std::vector<int> prefix;  // realized model choices so far
    double elapsed = 0.0;
    double spent = 0.0;
    std::vector<StageResult> history;
    RunStatus status = RunStatus::Running;
    bool hard_stop = true;  // stop once elapsed exceeds the latency cap
};

// Folds one stage invocation into the context: extends the prefix, accrues
// latency/cost, and resolves the status. Rejected after a terminal status.
void update_after_stage(RequestContext& ctx, const StageResult& result,
                        const ExecutionTrie& trie);

// Marks a controller-chosen stop (no more stages will run).
void mark_stopped(RequestContext& ctx);

struct Decision {
    bool invoke = false;  // otherwise: terminate here
    int model = -1;
    std::vector<int> suffix;  // planned continuation from the current prefix
    double d_acc = 0.0, d_cost = 0.0, d_lat = 0.0;
    bool feasible = false;  // false: fallback rule chose the action
};

// One receding-horizon step: reroot at the realized prefix, restate the
// budgets in remaining terms (latency from realized elapsed time, cost from
// realized spend), optionally inflate suffix latencies via the load model,
// and re-plan over the remaining subtrie. Always returns a decision: when
// nothing is feasible it terminates here if allowed, otherwise it follows
// the smallest-inflated-latency suffix to a terminal node.
Decision next_action(const ExecutionTrie& trie, const RequestContext& ctx,
                     const LoadModel* load_model = nullptr, const EngineLoad* load = nullptr);

// ── Replanning overhead ────────────────────────────────────────────────

struct ProbeStats {
    double mean_us = 0.0;
    double p50_us = 0.0;
    double p99_us = 0.0;
    double max_us = 0.0;
    int reps = 0;
};

// Wall time of next_action at the root of the given annotated trie.
ProbeStats replanning_overhead_probe(const ExecutionTrie& trie, const Objective& objective,
                                     int repetitions);

}  // namespace trieplan
