#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trieplan/trie.hpp"
#include "trieplan/world.hpp"

namespace trieplan {

// One profiled (request, prefix-node) visit: the conditional outcome of the
// stage ending the prefix, plus its realized cost and latency.
struct ObsEntry {
    int request = -1;
    int node = -1;
    std::uint8_t outcome = 0;
    double cost = 0.0;
    double latency = 0.0;
};

// Sparse profiling output. Entries are unique per (request, node): revisits
// hit the stored checkpoint and cost nothing, which is also why `dollars`
// can never exceed the checkpointed-full total.
struct ObservationSet {
    std::vector<ObsEntry> entries;  // discovery order
    double dollars = 0.0;
    std::int64_t invocations = 0;
    std::int64_t runs = 0;
    std::uint64_t seed = 0;
};

struct Budget {
    enum class Kind {
        CoverageCheckpointed,  // fraction of checkpointed-full dollars
        CoverageNaive,         // fraction of naive-full dollars
        Runs,                  // absolute number of cascade runs
        Dollars,               // absolute dollar cap
    };
    Kind kind = Kind::CoverageCheckpointed;
    double value = 0.0;
};

// Repeats cascade runs until the budget is exhausted: draw a request
// uniformly, draw a uniform admissible model at each depth, descend while
// the current stage fails. Deterministic under `seed`.
ObservationSet cascade_sample(const GroundTruthWorld& world, const ExecutionTrie& trie,
                              Budget budget, std::uint64_t seed);

void save_observations(const ObservationSet& obs, const ExecutionTrie& trie,
                       const std::string& path);
ObservationSet load_observations(const std::string& path, const ExecutionTrie& trie);

// ── Prefix-closure fill-in ─────────────────────────────────────────────

struct FilledCell {
    int request = -1;
    int node = -1;
    std::uint8_t value = 0;
    std::uint8_t direct = 0;  // 1: cascade-visited, 0: implied by an ancestor success
};

struct ColumnFill {
    std::int64_t n_direct = 0;
    std::int64_t ones_direct = 0;
    std::int64_t n_fill = 0;  // fill-in entries are successes by construction
};

struct FilledTable {
    std::vector<FilledCell> cells;
    std::vector<ColumnFill> columns;  // indexed by node
};

// Every observed entry pins the request-path value exactly (its ancestors
// all failed), and an observed success pins every extension to 1. Nothing
// else is guessed; siblings of failures stay missing.
FilledTable subtree_fill_in(const ObservationSet& obs, const ExecutionTrie& trie);

// ── Profiling cost accounting ──────────────────────────────────────────

struct LedgerRow {
    std::string regime;
    std::int64_t invocations = 0;
    double dollars = 0.0;
};

struct CostLedger {
    LedgerRow naive_full;
    LedgerRow checkpointed_full;
    LedgerRow sparse;
};

// Replays every terminating path per request from the root, stopping at the
// request's success depth along that path; shared prefixes are re-paid.
LedgerRow naive_full_cost(const GroundTruthWorld& world, const ExecutionTrie& trie);
// Pays each (request, node) at most once, and only where every ancestor
// failed; subtrees under a success are covered by fill-in for free.
LedgerRow checkpointed_full_cost(const GroundTruthWorld& world, const ExecutionTrie& trie);
LedgerRow sparse_cost(const ObservationSet& obs);
CostLedger make_cost_ledger(const GroundTruthWorld& world, const ExecutionTrie& trie,
                            const ObservationSet* obs);

// ── Coverage statistics ────────────────────────────────────────────────

struct DepthCoverage {
    int depth = 0;
    std::int64_t columns = 0;
    std::int64_t observed_columns = 0;  // columns with >= 1 entry
    std::int64_t entries = 0;
    double column_fraction = 0.0;  // observed_columns / columns
    double cell_fraction = 0.0;    // entries / (columns * |Q|)
};

struct CoverageStats {
    std::vector<DepthCoverage> depths;
    std::vector<std::int64_t> per_column_counts;  // indexed by node
};

CoverageStats coverage_stats(const ObservationSet& obs, const ExecutionTrie& trie,
                             int num_requests);
CoverageStats coverage_stats(const FilledTable& filled, const ExecutionTrie& trie,
                             int num_requests);

}  // namespace trieplan
