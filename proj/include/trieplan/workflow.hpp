#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trieplan/common.hpp"

namespace trieplan {

// ── Model catalog ──────────────────────────────────────────────────────
// The pool of candidate models a workflow may route to. Costs are dollars
// per invocation, latencies are seconds.

struct LatencyNoise {
    enum class Kind { None, Lognormal };
    Kind kind = Kind::None;
    double sigma = 0.0;
};

struct ModelSpec {
    std::string id;
    double cost_per_invocation = 0.0;
    double latency_mean = 0.0;
    LatencyNoise latency_noise;
    std::string engine_id;
};

struct ModelCatalog {
    std::vector<ModelSpec> models;
    std::vector<std::string> engines;

    int index_of(std::string_view model_id) const;   // -1 if unknown
    int engine_index(std::string_view engine_id) const;
    void validate() const;
    std::uint64_t content_hash() const;
};

// ── Workflow template ──────────────────────────────────────────────────
// A bounded workflow: an ordered list of stage families, a cap on the
// number of configurable invocations, and the depths where execution may
// stop. Tool families never branch; their latency/cost is charged once per
// configurable depth alongside the model invocation at that depth.

struct StageFamily {
    std::string id;
    bool configurable = true;
    std::vector<int> admissible;  // catalog indices, sorted by model id
    double tool_latency = 0.0;
    double tool_cost = 0.0;
};

struct WorkflowTemplate {
    std::vector<StageFamily> families;
    int max_depth = 1;
    std::vector<int> terminal_depths;  // sorted ascending, subset of 1..max_depth
    std::vector<int> family_of_depth;  // size max_depth; index into families (configurable)
    double tool_latency_per_depth = 0.0;
    double tool_cost_per_depth = 0.0;

    bool terminal_at(int depth) const;
    const std::vector<int>& admissible_at(int depth) const;
    int family_at(int depth) const { return family_of_depth[static_cast<std::size_t>(depth - 1)]; }

    // If family_of_depth is empty, fills it: configurable families in order,
    // the last one repeating for the remaining depths (the retry loop).
    void derive_depth_families();
    void validate(const ModelCatalog& catalog) const;
    std::uint64_t structural_hash(const ModelCatalog& catalog) const;
};

// Convenience constructor for the common shape used throughout the tests:
// one generation family plus one repair family sharing a model set, all
// depths terminal.
WorkflowTemplate make_uniform_template(const ModelCatalog& catalog, int max_depth,
                                       double tool_latency = 0.0, double tool_cost = 0.0);

}  // namespace trieplan
